//! Filter style transfer: estimate a global photo filter from a single styled
//! reference image and apply it to new images.
//!
//! The filter model is a per-channel cubic polynomial with optional
//! channel-correlation terms ([`color`]). Parameters are estimated by
//! uncertainty-weighted regularized least squares against a restored
//! original ([`regression`], [`defilter`]) and applied either directly or
//! through a precompiled 3D LUT ([`lut`]).

pub mod cli;
pub mod color;
pub mod defilter;
pub mod error;
pub mod lut;
pub mod metrics;
pub mod raster;
pub mod regression;
pub mod synth;

pub use color::{
    apply_filter, eval_filter, features, identity_params, ChannelParams, ColorRGB, FeatureVector, FilterParams,
};
pub use defilter::{
    Defilterizer, ExternalDefilterizer, GrayworldDefilterizer, IdentityDefilterizer, OracleDefilterizer,
};
pub use error::{Error, FstuError, Result};
pub use lut::{apply_lut, compile_lut, export_cube, Lut3D};
pub use metrics::{ciede2000, evaluate, psnr, srgb_to_lab, Lab, MetricsReport};
pub use raster::{BitDepth, ImageRaster, UncertaintyMap};
pub use regression::{
    build_problem, estimate_filter, grid_search_lambda, solve_channel, RegressionConfig, RegressionProblem, Solver,
};
