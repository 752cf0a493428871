//! Restoration stage: estimate the unfiltered original of a reference image
//! together with a per-pixel uncertainty.
//!
//! The learned restoration network is built separately and hands its results
//! over as files ([`ExternalDefilterizer`]); the other implementations are
//! baselines and test harnesses.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::raster::{read_png, ImageRaster, UncertaintyMap};

pub trait Defilterizer: Send + Sync {
    /// Returns the restored image and its uncertainty, both sized like `filtered`.
    fn restore(&self, filtered: &ImageRaster) -> Result<(ImageRaster, UncertaintyMap)>;

    fn name(&self) -> &'static str;
}

/// Returns a known original; only useful when the ground truth is available.
#[derive(Debug, Clone)]
pub struct OracleDefilterizer {
    original: ImageRaster,
}

impl OracleDefilterizer {
    pub fn new(original: ImageRaster) -> Self {
        Self { original }
    }

    /// Shrinks the stored original the same way an input would be shrunk.
    pub fn downscaled(&self, max_dim: usize) -> Self {
        Self::new(self.original.downscaled_nearest(max_dim))
    }
}

impl Defilterizer for OracleDefilterizer {
    fn restore(&self, filtered: &ImageRaster) -> Result<(ImageRaster, UncertaintyMap)> {
        self.original.check_same_dims(filtered.dims())?;
        let (w, h) = filtered.dims();
        Ok((self.original.clone(), UncertaintyMap::uniform(w, h, 0.0)))
    }

    fn name(&self) -> &'static str {
        "oracle"
    }
}

/// Assumes the reference is unfiltered.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityDefilterizer;

impl Defilterizer for IdentityDefilterizer {
    fn restore(&self, filtered: &ImageRaster) -> Result<(ImageRaster, UncertaintyMap)> {
        let (w, h) = filtered.dims();
        Ok((filtered.clone(), UncertaintyMap::uniform(w, h, 0.0)))
    }

    fn name(&self) -> &'static str {
        "identity"
    }
}

/// Gray-world white balance: rescales each channel so its mean hits
/// `target_mean`. The uncertainty proxy is the per-pixel squared deviation
/// from the channel means, normalized to unit mean.
#[derive(Debug, Clone, Copy)]
pub struct GrayworldDefilterizer {
    target_mean: f64,
    max_scale: f64,
}

pub const GRAYWORLD_MAX_SCALE: f64 = 10.0;

impl GrayworldDefilterizer {
    pub fn new(target_mean: f64) -> Result<Self> {
        Self::with_max_scale(target_mean, GRAYWORLD_MAX_SCALE)
    }

    pub fn with_max_scale(target_mean: f64, max_scale: f64) -> Result<Self> {
        if !(target_mean > 0.0 && target_mean < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "grayworld target mean {target_mean} must lie in (0, 1)"
            )));
        }
        if !(max_scale.is_finite() && max_scale > 0.0) {
            return Err(Error::InvalidArgument("grayworld max scale must be > 0".into()));
        }
        Ok(Self { target_mean, max_scale })
    }

    pub fn channel_scales(&self, img: &ImageRaster) -> [f64; 3] {
        let means = channel_means(img);
        means.map(|m| {
            if m > 0.0 {
                (self.target_mean / m).min(self.max_scale)
            } else {
                self.max_scale
            }
        })
    }
}

impl Default for GrayworldDefilterizer {
    fn default() -> Self {
        Self::new(0.5).expect("0.5 is a valid target")
    }
}

fn channel_means(img: &ImageRaster) -> [f64; 3] {
    let mut sum = [0.0; 3];
    for px in img.data().chunks_exact(3) {
        for (s, v) in sum.iter_mut().zip(px) {
            *s += v;
        }
    }
    let n = img.pixel_count().max(1) as f64;
    sum.map(|s| s / n)
}

impl Defilterizer for GrayworldDefilterizer {
    fn restore(&self, filtered: &ImageRaster) -> Result<(ImageRaster, UncertaintyMap)> {
        let means = channel_means(filtered);
        let scales = self.channel_scales(filtered);
        let restored =
            filtered.map_pixels(|c| crate::color::ColorRGB::new(c.r * scales[0], c.g * scales[1], c.b * scales[2]));
        let dev: Vec<f64> = filtered
            .data()
            .chunks_exact(3)
            .map(|px| px.iter().zip(&means).map(|(v, m)| (v - m).powi(2)).sum::<f64>() / 3.0)
            .collect();
        let mean_dev = dev.iter().sum::<f64>() / dev.len().max(1) as f64;
        let var = dev
            .iter()
            .map(|d| if mean_dev > 0.0 { (d / mean_dev) as f32 } else { 0.0 })
            .collect();
        let (w, h) = filtered.dims();
        Ok((restored, UncertaintyMap::new(w, h, var)?))
    }

    fn name(&self) -> &'static str {
        "grayworld"
    }
}

/// Restoration produced out of process: a 16-bit PNG plus an FSTU map.
#[derive(Debug, Clone)]
pub struct ExternalDefilterizer {
    restored: ImageRaster,
    uncertainty: UncertaintyMap,
    source: PathBuf,
}

impl ExternalDefilterizer {
    pub fn open(restored_path: impl AsRef<Path>, uncertainty_path: impl AsRef<Path>) -> Result<Self> {
        let restored_path = restored_path.as_ref();
        let uncertainty_path = uncertainty_path.as_ref();
        if !uncertainty_path.exists() {
            return Err(Error::MissingInput(uncertainty_path.display().to_string()));
        }
        let (restored, _) = read_png(restored_path)?;
        let uncertainty = UncertaintyMap::read_fstu(uncertainty_path)?;
        Self::from_parts(restored, uncertainty).map(|mut d| {
            d.source = restored_path.to_owned();
            d
        })
    }

    pub fn from_parts(restored: ImageRaster, uncertainty: UncertaintyMap) -> Result<Self> {
        restored.check_same_dims(uncertainty.dims())?;
        Ok(Self {
            restored,
            uncertainty,
            source: PathBuf::new(),
        })
    }

    pub fn downscaled(&self, max_dim: usize) -> Self {
        Self {
            restored: self.restored.downscaled_nearest(max_dim),
            uncertainty: self.uncertainty.downscaled_nearest(max_dim),
            source: self.source.clone(),
        }
    }
}

impl Defilterizer for ExternalDefilterizer {
    fn restore(&self, filtered: &ImageRaster) -> Result<(ImageRaster, UncertaintyMap)> {
        self.restored.check_same_dims(filtered.dims())?;
        Ok((self.restored.clone(), self.uncertainty.clone()))
    }

    fn name(&self) -> &'static str {
        "external"
    }
}
