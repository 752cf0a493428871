//! Filter estimation by uncertainty-weighted, regularized least squares.
//!
//! For each output channel `γ` the estimator minimizes
//!
//! ```text
//! E(β) = Σ w_n (y_n − φ(x̂_n)·β)² / Σ w_n
//!      + λ [ β₀² + (φ(1,1,1)·β − 1)² + Σ_{i≠γ, d∈{2,3}} β_{i,d}² ]
//! ```
//!
//! where `x̂_n` is the restored color of pixel `n`, `y_n` its filtered color,
//! and `w_n = 1 / (Ω_n + τ)` the inverse of the restoration uncertainty. The
//! first two penalty terms pin the curve to `f(0) = 0` and `f(1) = 1`; the
//! third damps higher-order cross-channel terms. The objective is quadratic,
//! so the closed-form solver is exact. The iterative solver is kept as an
//! independent cross-check.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::color::{feature_count, features, poly_index, ColorRGB, FilterParams};
use crate::defilter::Defilterizer;
use crate::error::{Error, Result};
use crate::raster::{ImageRaster, UncertaintyMap};

pub const DEFAULT_LAMBDA: f64 = 1e-3;
pub const DEFAULT_MAX_SAMPLES: usize = 65536;
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-4;
/// Largest accepted condition number of the (augmented) normal matrix.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    #[default]
    ClosedForm,
    Iterative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionConfig {
    pub lambda: f64,
    pub cc: bool,
    pub max_samples: usize,
    pub seed: u64,
    pub weight_floor: f64,
    pub solver: Solver,
    /// Drop pixels whose filtered value sits on 0 or 1 in any channel;
    /// those values were clipped and carry no information about the curve.
    pub skip_clipped: bool,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            cc: false,
            max_samples: DEFAULT_MAX_SAMPLES,
            seed: 0,
            weight_floor: DEFAULT_WEIGHT_FLOOR,
            solver: Solver::ClosedForm,
            skip_clipped: true,
        }
    }
}

impl RegressionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::InvalidArgument(format!("lambda {} must be >= 0", self.lambda)));
        }
        if self.max_samples < feature_count(self.cc) {
            return Err(Error::InvalidArgument(format!(
                "max_samples {} is below the feature count",
                self.max_samples
            )));
        }
        if !(self.weight_floor.is_finite() && self.weight_floor > 0.0) {
            return Err(Error::InvalidArgument("weight_floor must be > 0".into()));
        }
        Ok(())
    }
}

/// Row-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRows {
    cols: usize,
    data: Vec<f64>,
}

impl DesignRows {
    pub fn new(cols: usize) -> Self {
        Self { cols, data: Vec::new() }
    }

    pub fn push(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }
}

/// Weighted samples for all three output channels sharing one design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionProblem {
    pub rows: DesignRows,
    pub targets: [Vec<f64>; 3],
    pub weights: Vec<f64>,
    pub cc: bool,
    /// Source pixel index per sample.
    pub pixels: Vec<usize>,
}

impl RegressionProblem {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Builds a problem directly from color pairs.
    pub fn from_samples(inputs: &[ColorRGB], outputs: &[ColorRGB], weights: &[f64], cc: bool) -> Result<Self> {
        if inputs.len() != outputs.len() || inputs.len() != weights.len() {
            return Err(Error::InvalidArgument("sample arrays differ in length".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidArgument(format!("weight {w} must be finite and > 0")));
        }
        let mut rows = DesignRows::new(feature_count(cc));
        let mut targets = [Vec::new(), Vec::new(), Vec::new()];
        for (x, y) in inputs.iter().zip(outputs) {
            rows.push(features(*x, cc).as_slice());
            for (t, v) in targets.iter_mut().zip(y.to_array()) {
                t.push(v);
            }
        }
        Ok(Self {
            rows,
            targets,
            weights: weights.to_vec(),
            cc,
            pixels: (0..inputs.len()).collect(),
        })
    }

    pub fn subset(&self, samples: &[usize]) -> Self {
        let mut rows = DesignRows::new(self.rows.cols());
        for &s in samples {
            rows.push(self.rows.row(s));
        }
        Self {
            rows,
            targets: std::array::from_fn(|c| samples.iter().map(|&s| self.targets[c][s]).collect()),
            weights: samples.iter().map(|&s| self.weights[s]).collect(),
            cc: self.cc,
            pixels: samples.iter().map(|&s| self.pixels[s]).collect(),
        }
    }
}

pub fn build_problem(
    restored: &ImageRaster,
    filtered: &ImageRaster,
    unc: &UncertaintyMap,
    cfg: &RegressionConfig,
) -> Result<RegressionProblem> {
    cfg.validate()?;
    restored.check_same_dims(filtered.dims())?;
    restored.check_same_dims(unc.dims())?;
    let nf = feature_count(cfg.cc);
    let eligible: Vec<usize> = (0..filtered.pixel_count())
        .filter(|&i| !cfg.skip_clipped || filtered.pixel(i).to_array().iter().all(|v| *v > 0.0 && *v < 1.0))
        .collect();
    if eligible.len() < nf {
        return Err(Error::TooFewSamples {
            samples: eligible.len(),
            features: nf,
        });
    }
    let selected = if eligible.len() > cfg.max_samples {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut picks = index::sample(&mut rng, eligible.len(), cfg.max_samples).into_vec();
        picks.sort_unstable();
        picks.into_iter().map(|k| eligible[k]).collect()
    } else {
        eligible
    };
    let mut rows = DesignRows::new(nf);
    let mut targets = [
        Vec::with_capacity(selected.len()),
        Vec::with_capacity(selected.len()),
        Vec::with_capacity(selected.len()),
    ];
    let mut weights = Vec::with_capacity(selected.len());
    let var = unc.values();
    for &i in &selected {
        rows.push(features(restored.pixel(i), cfg.cc).as_slice());
        for (t, v) in targets.iter_mut().zip(filtered.pixel(i).to_array()) {
            t.push(v);
        }
        weights.push(1.0 / (var[i] as f64 + cfg.weight_floor));
    }
    Ok(RegressionProblem {
        rows,
        targets,
        weights,
        cc: cfg.cc,
        pixels: selected,
    })
}

/// A penalty row `(a, t)` contributing `(a·β − t)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyRow {
    pub coeffs: Vec<f64>,
    pub target: f64,
}

/// Regularization rows for output channel `channel`.
pub fn penalty_rows(cc: bool, channel: usize) -> Vec<PenaltyRow> {
    let nf = feature_count(cc);
    let unit = |k: usize| {
        let mut v = vec![0.0; nf];
        v[k] = 1.0;
        v
    };
    let mut rows = vec![
        PenaltyRow {
            coeffs: unit(0),
            target: 0.0,
        },
        PenaltyRow {
            // f(1,1,1): every coefficient, cc terms included
            coeffs: features(ColorRGB::gray(1.0), cc).as_slice().to_vec(),
            target: 1.0,
        },
    ];
    for i in (0..3).filter(|&i| i != channel) {
        for d in [2, 3] {
            rows.push(PenaltyRow {
                coeffs: unit(poly_index(i, d)),
                target: 0.0,
            });
        }
    }
    rows
}

fn total_weight(weights: &[f64]) -> f64 {
    weights.iter().sum()
}

/// Regularized objective for one channel.
pub fn objective(prob: &RegressionProblem, channel: usize, beta: &[f64], lambda: f64) -> f64 {
    let wsum = total_weight(&prob.weights);
    let data: f64 = prob
        .rows
        .iter()
        .zip(&prob.targets[channel])
        .zip(&prob.weights)
        .map(|((x, y), w)| {
            let r = dot(x, beta) - y;
            w * r * r
        })
        .sum::<f64>()
        / wsum;
    let pen: f64 = penalty_rows(prob.cc, channel)
        .iter()
        .map(|p| (dot(&p.coeffs, beta) - p.target).powi(2))
        .sum();
    data + lambda * pen
}

/// Analytic gradient of [`objective`].
pub fn gradient(prob: &RegressionProblem, channel: usize, beta: &[f64], lambda: f64) -> Vec<f64> {
    let wsum = total_weight(&prob.weights);
    let mut g = vec![0.0; beta.len()];
    for ((x, y), w) in prob.rows.iter().zip(&prob.targets[channel]).zip(&prob.weights) {
        let s = 2.0 * w * (dot(x, beta) - y) / wsum;
        axpy(&mut g, s, x);
    }
    for p in penalty_rows(prob.cc, channel) {
        let s = 2.0 * lambda * (dot(&p.coeffs, beta) - p.target);
        axpy(&mut g, s, &p.coeffs);
    }
    g
}

/// Weighted data residual `Σ w r² / Σ w` for one channel, without penalty.
pub fn data_residual(prob: &RegressionProblem, channel: usize, beta: &[f64]) -> f64 {
    objective(prob, channel, beta, 0.0)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub solver: Solver,
    pub max_condition: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            solver: Solver::ClosedForm,
            max_condition: MAX_CONDITION,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub coefficients: [Vec<f64>; 3],
    /// Condition number of each channel's augmented normal matrix.
    pub condition: [f64; 3],
    /// `sqrt(Σ w r² / Σ w)` per channel at the solution.
    pub fit_rmse: [f64; 3],
}

/// Solves all three channels over a shared design.
pub fn solve_weighted(
    rows: &DesignRows,
    targets: &[Vec<f64>; 3],
    weights: &[f64],
    lambda: f64,
    opts: &SolveOptions,
) -> Result<Solution> {
    let nf = rows.cols();
    let n = rows.len();
    if n < nf {
        return Err(Error::TooFewSamples {
            samples: n,
            features: nf,
        });
    }
    let cc = nf == feature_count(true);
    let wsum = total_weight(weights);
    let coefficients: [Vec<f64>; 3];
    let mut condition = [0.0; 3];
    match opts.solver {
        Solver::ClosedForm => {
            let (r, z) = reduce_qr(rows, targets, weights, wsum);
            let mut out: [Vec<f64>; 3] = Default::default();
            for ch in 0..3 {
                let (beta, cond) = solve_reduced(&r, z.column(ch).as_slice(), cc, ch, lambda, opts.max_condition)?;
                out[ch] = beta;
                condition[ch] = cond;
            }
            coefficients = out;
        }
        Solver::Iterative => {
            let mut out: [Vec<f64>; 3] = Default::default();
            for ch in 0..3 {
                out[ch] = solve_iterative(rows, &targets[ch], weights, wsum, cc, ch, lambda);
                condition[ch] = f64::NAN;
            }
            coefficients = out;
        }
    }
    let fit_rmse = std::array::from_fn(|ch| {
        let sse: f64 = rows
            .iter()
            .zip(&targets[ch])
            .zip(weights)
            .map(|((x, y), w)| w * (dot(x, &coefficients[ch]) - y).powi(2))
            .sum();
        (sse / wsum).sqrt()
    });
    Ok(Solution {
        coefficients,
        condition,
        fit_rmse,
    })
}

/// Householder QR of the weight-scaled design, shared by all channels.
/// Returns `R` (F×F) and `Qᵀ b` truncated to F rows (F×3).
fn reduce_qr(rows: &DesignRows, targets: &[Vec<f64>; 3], weights: &[f64], wsum: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let nf = rows.cols();
    let n = rows.len();
    let scale: Vec<f64> = weights.iter().map(|w| (w / wsum).sqrt()).collect();
    let a = DMatrix::from_fn(n, nf, |i, j| rows.row(i)[j] * scale[i]);
    let mut b = DMatrix::from_fn(n, 3, |i, c| targets[c][i] * scale[i]);
    let qr = a.qr();
    qr.q_tr_mul(&mut b);
    let r = qr.r();
    (r, b.rows(0, nf).into_owned())
}

fn solve_reduced(
    r: &DMatrix<f64>,
    z: &[f64],
    cc: bool,
    channel: usize,
    lambda: f64,
    max_condition: f64,
) -> Result<(Vec<f64>, f64)> {
    let nf = r.ncols();
    let pen = if lambda > 0.0 {
        penalty_rows(cc, channel)
    } else {
        Vec::new()
    };
    let m = nf + pen.len();
    let sl = lambda.sqrt();
    let mut a = DMatrix::zeros(m, nf);
    let mut t = DVector::zeros(m);
    a.rows_mut(0, nf).copy_from(r);
    t.rows_mut(0, nf).copy_from_slice(z);
    for (k, p) in pen.iter().enumerate() {
        for j in 0..nf {
            a[(nf + k, j)] = sl * p.coeffs[j];
        }
        t[nf + k] = sl * p.target;
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 {
        (smax / smin).powi(2)
    } else {
        f64::INFINITY
    };
    if smax.is_nan() || smax <= 0.0 {
        return Err(Error::IllConditioned { cond });
    }
    if lambda == 0.0 && (cond.is_nan() || cond > max_condition) {
        return Err(Error::IllConditioned { cond });
    }
    if cond <= max_condition {
        let qr = a.qr();
        let mut qt = t.clone();
        qr.q_tr_mul(&mut qt);
        let beta = qr
            .r()
            .solve_upper_triangular(&qt.rows(0, nf).into_owned())
            .ok_or(Error::IllConditioned { cond })?;
        return Ok((beta.iter().copied().collect(), cond));
    }
    // With λ > 0 directions untouched by both data and penalty are dropped,
    // giving the minimum-norm minimizer.
    let eps = smax / max_condition.sqrt();
    let beta = svd
        .solve(&t, eps)
        .map_err(|e| Error::Format(format!("svd solve failed: {e}")))?;
    Ok((beta.iter().copied().collect(), cond))
}

/// Jacobi-preconditioned conjugate gradients on the quadratic objective,
/// evaluated matrix-free from the raw samples.
fn solve_iterative(
    rows: &DesignRows,
    y: &[f64],
    weights: &[f64],
    wsum: f64,
    cc: bool,
    channel: usize,
    lambda: f64,
) -> Vec<f64> {
    let nf = rows.cols();
    let pen = penalty_rows(cc, channel);
    let hess_mul = |v: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; nf];
        for (x, w) in rows.iter().zip(weights) {
            axpy(&mut out, 2.0 * w * dot(x, v) / wsum, x);
        }
        for p in &pen {
            axpy(&mut out, 2.0 * lambda * dot(&p.coeffs, v), &p.coeffs);
        }
        out
    };
    let grad = |beta: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; nf];
        for ((x, yv), w) in rows.iter().zip(y).zip(weights) {
            axpy(&mut g, 2.0 * w * (dot(x, beta) - yv) / wsum, x);
        }
        for p in &pen {
            axpy(&mut g, 2.0 * lambda * (dot(&p.coeffs, beta) - p.target), &p.coeffs);
        }
        g
    };
    let mut diag = vec![0.0; nf];
    for (x, w) in rows.iter().zip(weights) {
        for (d, xi) in diag.iter_mut().zip(x) {
            *d += 2.0 * w * xi * xi / wsum;
        }
    }
    for p in &pen {
        for (d, a) in diag.iter_mut().zip(&p.coeffs) {
            *d += 2.0 * lambda * a * a;
        }
    }
    let inv_diag: Vec<f64> = diag.iter().map(|d| if *d > 0.0 { 1.0 / d } else { 1.0 }).collect();

    let mut beta = vec![0.0; nf];
    let g0 = grad(&beta);
    let g0_norm = dot(&g0, &g0).sqrt().max(f64::MIN_POSITIVE);
    for _restart in 0..50 {
        // residual = −∇E
        let mut res: Vec<f64> = grad(&beta).iter().map(|g| -g).collect();
        if dot(&res, &res).sqrt() <= 1e-15 * g0_norm {
            break;
        }
        let mut zvec: Vec<f64> = res.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
        let mut dir = zvec.clone();
        let mut rz = dot(&res, &zvec);
        for _ in 0..4 * nf {
            let hd = hess_mul(&dir);
            let curv = dot(&dir, &hd);
            if curv.is_nan() || curv <= 0.0 {
                break;
            }
            let step = rz / curv;
            axpy(&mut beta, step, &dir);
            axpy(&mut res, -step, &hd);
            if dot(&res, &res).sqrt() <= 1e-15 * g0_norm {
                break;
            }
            zvec = res.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
            let rz_next = dot(&res, &zvec);
            let ratio = rz_next / rz;
            rz = rz_next;
            for (d, z) in dir.iter_mut().zip(&zvec) {
                *d = z + ratio * *d;
            }
        }
    }
    beta
}

/// Solves one output channel of `prob`.
pub fn solve_channel(
    prob: &RegressionProblem,
    channel: usize,
    cfg: &RegressionConfig,
) -> Result<crate::color::ChannelParams> {
    let sol = solve_problem(prob, cfg)?;
    crate::color::ChannelParams::from_coefficients(&sol.coefficients[channel])
}

pub fn solve_problem(prob: &RegressionProblem, cfg: &RegressionConfig) -> Result<Solution> {
    cfg.validate()?;
    let opts = SolveOptions {
        solver: cfg.solver,
        ..SolveOptions::default()
    };
    solve_weighted(&prob.rows, &prob.targets, &prob.weights, cfg.lambda, &opts)
}

/// Diagnostics of one estimation run.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub samples: usize,
    pub fit_rmse: [f64; 3],
    pub condition: [f64; 3],
    pub lambda: f64,
}

fn params_from_solution(sol: &Solution, prob: &RegressionProblem, lambda: f64) -> Result<(FilterParams, FitReport)> {
    let mut params = FilterParams::from_coefficients(
        [&sol.coefficients[0], &sol.coefficients[1], &sol.coefficients[2]],
        lambda,
    )?;
    let report = FitReport {
        samples: prob.len(),
        fit_rmse: sol.fit_rmse,
        condition: sol.condition,
        lambda,
    };
    params.meta.insert("samples".into(), prob.len().to_string());
    for (name, v) in ["r", "g", "b"].iter().zip(sol.fit_rmse) {
        params.meta.insert(format!("fit_rmse_{name}"), format!("{v:.6e}"));
    }
    Ok((params, report))
}

/// Restores the reference, builds the weighted problem and fits all channels.
pub fn estimate_filter(
    filtered: &ImageRaster,
    defilterizer: &dyn Defilterizer,
    cfg: &RegressionConfig,
) -> Result<FilterParams> {
    estimate_with_report(filtered, defilterizer, cfg).map(|(p, _)| p)
}

pub fn estimate_with_report(
    filtered: &ImageRaster,
    defilterizer: &dyn Defilterizer,
    cfg: &RegressionConfig,
) -> Result<(FilterParams, FitReport)> {
    cfg.validate()?;
    let (restored, unc) = defilterizer.restore(filtered)?;
    let prob = build_problem(&restored, filtered, &unc, cfg)?;
    let sol = solve_problem(&prob, cfg)?;
    let (mut params, report) = params_from_solution(&sol, &prob, cfg.lambda)?;
    params.meta.insert("defilter".into(), defilterizer.name().into());
    Ok((params, report))
}

/// Picks λ by holdout residual, then refits on all samples with it.
pub fn grid_search_lambda(
    filtered: &ImageRaster,
    defilterizer: &dyn Defilterizer,
    candidates: &[f64],
    holdout_fraction: f64,
    cfg: &RegressionConfig,
) -> Result<(f64, FilterParams)> {
    grid_search_with_report(filtered, defilterizer, candidates, holdout_fraction, cfg).map(|(l, p, _)| (l, p))
}

pub fn grid_search_with_report(
    filtered: &ImageRaster,
    defilterizer: &dyn Defilterizer,
    candidates: &[f64],
    holdout_fraction: f64,
    cfg: &RegressionConfig,
) -> Result<(f64, FilterParams, FitReport)> {
    if candidates.len() < 2 {
        return Err(Error::InvalidArgument(
            "grid search needs at least two lambda candidates".into(),
        ));
    }
    if let Some(l) = candidates.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(Error::InvalidArgument(format!("lambda candidate {l} must be >= 0")));
    }
    if !(holdout_fraction > 0.0 && holdout_fraction <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "holdout fraction {holdout_fraction} must lie in (0, 0.5]"
        )));
    }
    cfg.validate()?;
    let (restored, unc) = defilterizer.restore(filtered)?;
    let prob = build_problem(&restored, filtered, &unc, cfg)?;
    let (fit, holdout) = split_samples(prob.len(), holdout_fraction, cfg.seed);
    let fit_prob = prob.subset(&fit);
    let holdout_prob = prob.subset(&holdout);

    let mut best: Option<(f64, f64)> = None;
    let mut last_err = None;
    for &lambda in candidates {
        let trial = RegressionConfig { lambda, ..cfg.clone() };
        match solve_problem(&fit_prob, &trial) {
            Ok(sol) => {
                let score: f64 = (0..3)
                    .map(|ch| data_residual(&holdout_prob, ch, &sol.coefficients[ch]))
                    .sum();
                best = match best {
                    None => Some((lambda, score)),
                    Some((bl, bs)) => {
                        let tie = (score - bs).abs() <= 1e-12 * bs.abs().max(f64::MIN_POSITIVE);
                        if (tie && lambda > bl) || (!tie && score < bs) {
                            Some((lambda, score))
                        } else {
                            Some((bl, bs))
                        }
                    }
                };
            }
            Err(e) => last_err = Some(e),
        }
    }
    let Some((lambda, _)) = best else {
        return Err(last_err.expect("at least one candidate was tried"));
    };
    let final_cfg = RegressionConfig { lambda, ..cfg.clone() };
    let sol = solve_problem(&prob, &final_cfg)?;
    let (mut params, report) = params_from_solution(&sol, &prob, lambda)?;
    params.meta.insert("defilter".into(), defilterizer.name().into());
    params.meta.insert("lambda_selection".into(), "grid".into());
    Ok((lambda, params, report))
}

/// Deterministic fit / holdout split of `n` samples.
fn split_samples(n: usize, holdout_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0004_01d0_u64);
    let order = index::sample(&mut rng, n, n).into_vec();
    let k = ((n as f64 * holdout_fraction).round() as usize).clamp(1, n - 1);
    let mut holdout = order[..k].to_vec();
    let mut fit = order[k..].to_vec();
    holdout.sort_unstable();
    fit.sort_unstable();
    (fit, holdout)
}
