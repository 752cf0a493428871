//! `fst` command line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::color::{apply_filter, FilterParams};
use crate::defilter::{
    Defilterizer, ExternalDefilterizer, GrayworldDefilterizer, IdentityDefilterizer, OracleDefilterizer,
};
use crate::error::{Error, Result};
use crate::lut::{apply_lut, compile_lut, export_cube, DEFAULT_LUT_SIZE};
use crate::metrics::{evaluate, MetricsReport};
use crate::raster::{read_png, write_png, ImageRaster};
use crate::regression::{estimate_with_report, grid_search_with_report, FitReport, RegressionConfig};
use crate::synth::{build_corpus, load_entry, procedural_image, Manifest, RandomRanges, SynthSpec};

/// Longest side used for extraction unless `--no-downscale` is given.
pub const EXTRACT_MAX_DIM: usize = 256;
/// Inputs with more pixels than this are applied through a LUT by default.
pub const DIRECT_APPLY_MAX_PIXELS: usize = 512 * 512;
pub const GRID_LAMBDAS: [f64; 5] = [0.0, 1e-4, 1e-3, 1e-2, 1e-1];
pub const GRID_HOLDOUT: f64 = 0.2;

#[derive(Debug, Parser)]
#[command(
    name = "fst",
    version,
    about = "Estimate photo filters from a styled reference and apply them"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate filter parameters from a styled reference image.
    Extract(ExtractArgs),
    /// Apply filter parameters to an image.
    Apply(ApplyArgs),
    /// Generate a synthetic filtered corpus.
    Synth(SynthArgs),
    /// Compare images (PSNR, CIEDE2000).
    Eval(EvalArgs),
    /// Compile parameters into a .cube 3D LUT.
    LutExport(LutExportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DefilterMode {
    Oracle,
    Identity,
    Grayworld,
    External,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Styled reference image.
    #[arg(long)]
    pub style: PathBuf,
    #[arg(long, value_enum, default_value = "oracle")]
    pub defilter: DefilterMode,
    /// Unfiltered original (oracle mode).
    #[arg(long)]
    pub original: Option<PathBuf>,
    /// Restored image, 8- or 16-bit PNG (external mode).
    #[arg(long)]
    pub restored: Option<PathBuf>,
    /// Per-pixel variance map in FSTU format (external mode).
    #[arg(long)]
    pub uncertainty: Option<PathBuf>,
    /// Fit the rg, rb, gb channel-correlation terms.
    #[arg(long)]
    pub cc: bool,
    /// Regularization weight, or `grid` to select it on a holdout split.
    #[arg(long, default_value = "0.001")]
    pub lambda: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Parameters JSON to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Fit at full resolution instead of at most 256 px per side.
    #[arg(long)]
    pub no_downscale: bool,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Use the LUT even for inputs up to 512x512.
    #[arg(long)]
    pub via_lut: bool,
    #[arg(long, default_value_t = DEFAULT_LUT_SIZE as u32)]
    pub lut_size: u32,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Source images; may be repeated.
    #[arg(long)]
    pub input: Vec<PathBuf>,
    /// Add this many generated test images to the inputs.
    #[arg(long, default_value_t = 0)]
    pub procedural: usize,
    /// Side length of generated images.
    #[arg(long, default_value_t = 256)]
    pub size: usize,
    /// Filter spec such as `brightness(0.1)` or `sepia`; may be repeated.
    #[arg(long)]
    pub spec: Vec<String>,
    /// Add this many random filters drawn from `--seed`.
    #[arg(long, default_value_t = 0)]
    pub count: usize,
    /// Random filters include channel-correlation terms.
    #[arg(long)]
    pub cc: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Predicted image.
    #[arg(long, requires = "style", conflicts_with = "manifest")]
    pub input: Option<PathBuf>,
    /// Ground-truth styled image.
    #[arg(long)]
    pub style: Option<PathBuf>,
    /// Evaluate every corpus entry: apply `--params` (or the entry's own
    /// parameters) to the original and compare against the filtered image.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub via_lut: bool,
    #[arg(long, default_value_t = DEFAULT_LUT_SIZE as u32)]
    pub lut_size: u32,
}

#[derive(Debug, Args)]
pub struct LutExportArgs {
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_LUT_SIZE as u32)]
    pub lut_size: u32,
    #[arg(long)]
    pub title: Option<String>,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    configure_threads();
    match run(cli.command) {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out).expect("json values serialize"));
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("FST_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            // a second call in the same process fails harmlessly
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

pub fn run(cmd: Command) -> Result<serde_json::Value> {
    match cmd {
        Command::Extract(a) => cmd_extract(&a),
        Command::Apply(a) => cmd_apply(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::LutExport(a) => cmd_lut_export(&a),
    }
}

fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::MissingInput(format!("--{flag} is required for this mode")))
}

fn require_file(p: &Path) -> Result<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(Error::MissingInput(p.display().to_string()))
    }
}

pub fn cmd_extract(a: &ExtractArgs) -> Result<serde_json::Value> {
    // every mode-specific input is checked before any work happens
    match a.defilter {
        DefilterMode::Oracle => require_file(require(&a.original, "original")?)?,
        DefilterMode::External => {
            require_file(require(&a.restored, "restored")?)?;
            require_file(require(&a.uncertainty, "uncertainty")?)?;
        }
        DefilterMode::Identity | DefilterMode::Grayworld => {}
    }
    let grid = a.lambda.trim().eq_ignore_ascii_case("grid");
    let lambda = if grid {
        0.0
    } else {
        a.lambda
            .trim()
            .parse::<f64>()
            .map_err(|_| Error::InvalidArgument(format!("--lambda {:?} is not a number or \"grid\"", a.lambda)))?
    };
    let (style_full, _) = read_png(&a.style)?;
    let max_dim = if a.no_downscale { 0 } else { EXTRACT_MAX_DIM };
    let style = style_full.downscaled_nearest(max_dim);

    let defilterizer: Box<dyn Defilterizer> = match a.defilter {
        DefilterMode::Oracle => {
            let (orig, _) = read_png(a.original.as_ref().unwrap())?;
            orig.check_same_dims(style_full.dims())?;
            Box::new(OracleDefilterizer::new(orig).downscaled(max_dim))
        }
        DefilterMode::Identity => Box::new(IdentityDefilterizer),
        DefilterMode::Grayworld => Box::new(GrayworldDefilterizer::default()),
        DefilterMode::External => {
            let ext = ExternalDefilterizer::open(a.restored.as_ref().unwrap(), a.uncertainty.as_ref().unwrap())?;
            ext.restore(&style_full)?;
            Box::new(ext.downscaled(max_dim))
        }
    };

    let cfg = RegressionConfig {
        lambda,
        cc: a.cc,
        seed: a.seed,
        ..RegressionConfig::default()
    };
    let (mut params, report): (FilterParams, FitReport) = if grid {
        let (_, p, r) = grid_search_with_report(&style, defilterizer.as_ref(), &GRID_LAMBDAS, GRID_HOLDOUT, &cfg)?;
        (p, r)
    } else {
        estimate_with_report(&style, defilterizer.as_ref(), &cfg)?
    };
    params.meta.insert("seed".into(), a.seed.to_string());
    params.save(&a.output)?;
    Ok(json!({
        "output": a.output,
        "defilter": defilterizer.name(),
        "cc": a.cc,
        "lambda": report.lambda,
        "samples": report.samples,
        "fit_rmse": report.fit_rmse,
    }))
}

fn lut_size(size: u32) -> Result<usize> {
    if size < 2 {
        return Err(Error::InvalidArgument(format!("--lut-size {size} must be >= 2")));
    }
    Ok(size as usize)
}

fn apply_params(
    p: &FilterParams,
    img: &ImageRaster,
    via_lut: bool,
    size: usize,
) -> Result<(ImageRaster, &'static str)> {
    if via_lut || img.pixel_count() > DIRECT_APPLY_MAX_PIXELS {
        Ok((apply_lut(&compile_lut(p, size)?, img), "lut"))
    } else {
        Ok((apply_filter(p, img), "direct"))
    }
}

pub fn cmd_apply(a: &ApplyArgs) -> Result<serde_json::Value> {
    let params = FilterParams::load(&a.params)?;
    let size = lut_size(a.lut_size)?;
    let (img, depth) = read_png(&a.input)?;
    let (out, route) = apply_params(&params, &img, a.via_lut, size)?;
    write_png(&out, &a.output, depth)?;
    Ok(json!({
        "output": a.output,
        "width": out.width(),
        "height": out.height(),
        "route": route,
    }))
}

pub fn cmd_synth(a: &SynthArgs) -> Result<serde_json::Value> {
    let mut images = Vec::new();
    for p in &a.input {
        images.push(read_png(p)?.0);
    }
    for k in 0..a.procedural {
        images.push(procedural_image(a.seed.wrapping_add(k as u64), a.size, a.size));
    }
    let mut specs: Vec<SynthSpec> = a.spec.iter().map(|s| s.parse()).collect::<Result<_>>()?;
    let ranges = RandomRanges::default_cc(a.cc);
    for k in 0..a.count {
        specs.push(SynthSpec::Random {
            seed: a.seed.wrapping_add(k as u64),
            ranges,
        });
    }
    let manifest = build_corpus(&images, &specs, &a.output)?;
    Ok(json!({
        "manifest": manifest.path(),
        "entries": manifest.entries.len(),
    }))
}

fn report_json(r: &MetricsReport) -> serde_json::Value {
    serde_json::to_value(r).expect("report serializes")
}

pub fn cmd_eval(a: &EvalArgs) -> Result<serde_json::Value> {
    if let Some(m) = &a.manifest {
        let manifest = Manifest::load(m)?;
        let shared = a.params.as_ref().map(FilterParams::load).transpose()?;
        let size = lut_size(a.lut_size)?;
        let mut rows = Vec::new();
        let mut reports = Vec::new();
        for e in &manifest.entries {
            let (orig, filt, own) = load_entry(&manifest, e)?;
            let p = shared.as_ref().unwrap_or(&own);
            let (pred, _) = apply_params(p, &orig, a.via_lut, size)?;
            let r = evaluate(&pred.quantized_8bit(), &filt)?;
            rows.push(json!({ "filtered": e.filtered, "spec": e.spec, "report": report_json(&r) }));
            reports.push(r);
        }
        if reports.is_empty() {
            return Err(Error::InvalidArgument("manifest has no entries".into()));
        }
        let n = reports.len() as f64;
        let mean = MetricsReport {
            psnr_db: reports.iter().map(|r| r.psnr_db).sum::<f64>() / n,
            mean_de2000: reports.iter().map(|r| r.mean_de2000).sum::<f64>() / n,
            max_de2000: reports.iter().map(|r| r.max_de2000).fold(0.0, f64::max),
            pixel_count: reports.iter().map(|r| r.pixel_count).sum(),
        };
        return Ok(json!({ "entries": rows, "mean": report_json(&mean) }));
    }
    let pred = require(&a.input, "input")?;
    let gt = require(&a.style, "style")?;
    let (p, _) = read_png(pred)?;
    let (g, _) = read_png(gt)?;
    Ok(report_json(&evaluate(&p, &g)?))
}

pub fn cmd_lut_export(a: &LutExportArgs) -> Result<serde_json::Value> {
    let params = FilterParams::load(&a.params)?;
    let lut = compile_lut(&params, lut_size(a.lut_size)?)?;
    export_cube(&lut, &a.output, a.title.as_deref())?;
    Ok(json!({ "output": a.output, "lut_size": lut.size() }))
}
