//! Ground-truth filters and synthetic filtered corpora.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::{apply_filter, eval_filter, feature_count, features, identity_params, ColorRGB, FilterParams};
use crate::error::{Error, Result};
use crate::raster::{read_png, write_png, BitDepth, ImageRaster};
use crate::regression::{solve_weighted, DesignRows, SolveOptions};

/// Pre-clamp bound every random filter must respect on the unit cube.
pub const RANDOM_OUTPUT_BOUND: (f64, f64) = (-0.5, 1.5);
const BOUND_CHECK_LATTICE: usize = 17;

/// Sampling intervals for [`random_filter`] coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomRanges {
    pub bias: (f64, f64),
    pub own_linear: (f64, f64),
    pub cross_linear: (f64, f64),
    pub quadratic: (f64, f64),
    pub cubic: (f64, f64),
    /// `None` produces filters without cc terms.
    pub cc: Option<(f64, f64)>,
}

impl Default for RandomRanges {
    fn default() -> Self {
        Self {
            bias: (-0.15, 0.15),
            own_linear: (0.6, 1.4),
            cross_linear: (-0.2, 0.2),
            quadratic: (-0.3, 0.3),
            cubic: (-0.2, 0.2),
            cc: None,
        }
    }
}

impl RandomRanges {
    pub fn default_cc(cc: bool) -> Self {
        Self {
            cc: cc.then_some((-0.2, 0.2)),
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [
            Some(self.bias),
            Some(self.own_linear),
            Some(self.cross_linear),
            Some(self.quadratic),
            Some(self.cubic),
            self.cc,
        ];
        for (lo, hi) in all.into_iter().flatten() {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::InvalidArgument(format!("bad sampling range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Description of a ground-truth filter.
#[derive(Debug, Clone, PartialEq)]
pub enum SynthSpec {
    Identity,
    /// `y = x + c`
    Brightness {
        c: f64,
    },
    /// `y = a x + b`
    Contrast {
        a: f64,
        b: f64,
    },
    /// Per output channel `e x³ + f x² + g x` of its own input channel;
    /// rows are `[e, f, g]`.
    ColorPoly {
        efg: [[f64; 3]; 3],
    },
    /// `y = M x + bias`
    ChannelMix {
        matrix: [[f64; 3]; 3],
        bias: [f64; 3],
    },
    /// Identity plus bilinear `rg, rb, gb` terms per output channel.
    ProductMix {
        cc: [[f64; 3]; 3],
    },
    Random {
        seed: u64,
        ranges: RandomRanges,
    },
}

pub const SEPIA: [[f64; 3]; 3] = [[0.393, 0.769, 0.189], [0.349, 0.686, 0.168], [0.272, 0.534, 0.131]];

pub fn make_params(spec: &SynthSpec) -> Result<FilterParams> {
    let mut p = identity_params(false);
    match spec {
        SynthSpec::Identity => {}
        SynthSpec::Brightness { c } => {
            for ch in &mut p.channels {
                ch.bias = *c;
            }
        }
        SynthSpec::Contrast { a, b } => {
            for (g, ch) in p.channels.iter_mut().enumerate() {
                ch.bias = *b;
                ch.poly[g][0] = *a;
            }
        }
        SynthSpec::ColorPoly { efg } => {
            for (g, ch) in p.channels.iter_mut().enumerate() {
                let [e, f, lin] = efg[g];
                ch.poly[g] = [lin, f, e];
            }
        }
        SynthSpec::ChannelMix { matrix, bias } => {
            for (g, ch) in p.channels.iter_mut().enumerate() {
                ch.bias = bias[g];
                for (row, m) in ch.poly.iter_mut().zip(matrix[g]) {
                    row[0] = m;
                }
            }
        }
        SynthSpec::ProductMix { cc } => {
            p = identity_params(true);
            for (g, ch) in p.channels.iter_mut().enumerate() {
                ch.cc = Some(cc[g]);
            }
        }
        SynthSpec::Random { seed, ranges } => return random_filter_checked(*seed, ranges),
    }
    p.validate()?;
    p.meta.insert("spec".into(), spec.to_string());
    Ok(p)
}

/// Samples filter coefficients directly, deterministically in `seed`.
///
/// Draws are rejected until the filter maps a 17³ lattice of the unit cube
/// into [`RANDOM_OUTPUT_BOUND`].
pub fn random_filter(seed: u64, ranges: &RandomRanges) -> FilterParams {
    random_filter_checked(seed, ranges).expect("sampling ranges are valid")
}

fn random_filter_checked(seed: u64, ranges: &RandomRanges) -> Result<FilterParams> {
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |(lo, hi): (f64, f64)| if lo == hi { lo } else { rng.gen_range(lo..hi) };
    let identity = identity_params(ranges.cc.is_some());
    let mut last = identity.clone();
    for _ in 0..1000 {
        let mut p = identity.clone();
        for (g, ch) in p.channels.iter_mut().enumerate() {
            ch.bias = uniform(ranges.bias);
            for i in 0..3 {
                let lin = if i == g { ranges.own_linear } else { ranges.cross_linear };
                ch.poly[i] = [uniform(lin), uniform(ranges.quadratic), uniform(ranges.cubic)];
            }
            if let Some(r) = ranges.cc {
                ch.cc = Some([uniform(r), uniform(r), uniform(r)]);
            }
        }
        if within_bound(&p) {
            p.meta.insert("spec".into(), format!("random({seed})"));
            return Ok(p);
        }
        last = p;
    }
    // Ranges too wide to ever satisfy the bound: shrink toward identity.
    let (ci, cl) = (identity.coefficients(), last.coefficients());
    for k in 1..=60 {
        let t = 0.5f64.powi(k);
        let mixed: Vec<Vec<f64>> = (0..3)
            .map(|g| ci[g].iter().zip(&cl[g]).map(|(a, b)| a + t * (b - a)).collect())
            .collect();
        let mut p = FilterParams::from_coefficients([&mixed[0], &mixed[1], &mixed[2]], 0.0)?;
        if within_bound(&p) {
            p.meta.insert("spec".into(), format!("random({seed})"));
            return Ok(p);
        }
    }
    Ok(identity)
}

fn within_bound(p: &FilterParams) -> bool {
    let (lo, hi) = RANDOM_OUTPUT_BOUND;
    lattice(BOUND_CHECK_LATTICE).all(|c| eval_filter(p, c, false).to_array().iter().all(|v| *v >= lo && *v <= hi))
}

/// All points of an `n³` lattice on the unit cube, red varying fastest.
pub fn lattice(n: usize) -> impl Iterator<Item = ColorRGB> {
    let step = 1.0 / (n - 1) as f64;
    (0..n * n * n).map(move |idx| {
        let (i, j, k) = (idx % n, (idx / n) % n, idx / (n * n));
        ColorRGB::new(i as f64 * step, j as f64 * step, k as f64 * step)
    })
}

/// Least-squares projection of `then ∘ first` back into the cubic model.
pub fn compose_refit(first: &FilterParams, then: &FilterParams, grid: usize) -> Result<FilterParams> {
    if grid < 8 {
        return Err(Error::InvalidArgument(format!("refit grid {grid} must be >= 8")));
    }
    let cc = first.cc || then.cc;
    let points: Vec<ColorRGB> = lattice(grid).collect();
    let mut rows = DesignRows::new(feature_count(cc));
    let mut targets = [Vec::new(), Vec::new(), Vec::new()];
    for c in &points {
        rows.push(features(*c, cc).as_slice());
        let y = eval_filter(then, eval_filter(first, *c, false), false);
        for (t, v) in targets.iter_mut().zip(y.to_array()) {
            t.push(v);
        }
    }
    let weights = vec![1.0; points.len()];
    let opts = SolveOptions::default();
    let solved = solve_weighted(&rows, &targets, &weights, 0.0, &opts)?;
    let mut p = FilterParams::from_coefficients(
        [
            &solved.coefficients[0],
            &solved.coefficients[1],
            &solved.coefficients[2],
        ],
        0.0,
    )?;
    p.meta.insert("spec".into(), "compose_refit".into());
    Ok(p)
}

impl fmt::Display for SynthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn rows(f: &mut fmt::Formatter<'_>, m: &[[f64; 3]]) -> fmt::Result {
            for (i, r) in m.iter().enumerate() {
                if i > 0 {
                    f.write_str(";")?;
                }
                write!(f, "{},{},{}", r[0], r[1], r[2])?;
            }
            Ok(())
        }
        match self {
            SynthSpec::Identity => f.write_str("identity"),
            SynthSpec::Brightness { c } => write!(f, "brightness({c})"),
            SynthSpec::Contrast { a, b } => write!(f, "contrast({a},{b})"),
            SynthSpec::ColorPoly { efg } => {
                f.write_str("color_poly(")?;
                rows(f, efg)?;
                f.write_str(")")
            }
            SynthSpec::ChannelMix { matrix, bias } => {
                f.write_str("channel_mix(")?;
                rows(f, matrix)?;
                f.write_str(";")?;
                rows(f, &[*bias])?;
                f.write_str(")")
            }
            SynthSpec::ProductMix { cc } => {
                f.write_str("product_mix(")?;
                rows(f, cc)?;
                f.write_str(")")
            }
            SynthSpec::Random { seed, ranges } => {
                if ranges.cc.is_some() {
                    write!(f, "random_cc({seed})")
                } else {
                    write!(f, "random({seed})")
                }
            }
        }
    }
}

impl FromStr for SynthSpec {
    type Err = Error;

    /// Parses the textual form used by the CLI and manifests, e.g.
    /// `brightness(0.1)`, `contrast(2,-0.5)`, `sepia`, `random(7)`,
    /// `channel_mix(m00,m01,m02;m10,m11,m12;m20,m21,m22;b0,b1,b2)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse filter spec {s:?}"));
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(open) if s.ends_with(')') => (&s[..open], &s[open + 1..s.len() - 1]),
            Some(_) => return Err(bad()),
            None => (s, ""),
        };
        let groups: Vec<Vec<f64>> = if args.trim().is_empty() {
            Vec::new()
        } else {
            args.split(';')
                .map(|g| g.split(',').map(|v| v.trim().parse::<f64>()).collect())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?
        };
        let flat: Vec<f64> = groups.iter().flatten().copied().collect();
        let triples = |n: usize| -> Result<Vec<[f64; 3]>> {
            if groups.len() != n || groups.iter().any(|g| g.len() != 3) {
                return Err(bad());
            }
            Ok(groups.iter().map(|g| [g[0], g[1], g[2]]).collect())
        };
        let spec = match name {
            "identity" if flat.is_empty() => SynthSpec::Identity,
            "sepia" if flat.is_empty() => SynthSpec::ChannelMix {
                matrix: SEPIA,
                bias: [0.0; 3],
            },
            "brightness" if flat.len() == 1 => SynthSpec::Brightness { c: flat[0] },
            "contrast" if flat.len() == 2 => SynthSpec::Contrast { a: flat[0], b: flat[1] },
            "color_poly" => {
                let t = triples(3)?;
                SynthSpec::ColorPoly {
                    efg: [t[0], t[1], t[2]],
                }
            }
            "channel_mix" => {
                let t = if groups.len() == 3 {
                    let mut t = triples(3)?;
                    t.push([0.0; 3]);
                    t
                } else {
                    triples(4)?
                };
                SynthSpec::ChannelMix {
                    matrix: [t[0], t[1], t[2]],
                    bias: t[3],
                }
            }
            "product_mix" => {
                let t = triples(3)?;
                SynthSpec::ProductMix { cc: [t[0], t[1], t[2]] }
            }
            "random" | "random_cc" if flat.len() == 1 && flat[0] >= 0.0 && flat[0].fract() == 0.0 => {
                SynthSpec::Random {
                    seed: flat[0] as u64,
                    ranges: RandomRanges::default_cc(name == "random_cc"),
                }
            }
            _ => return Err(bad()),
        };
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("filter spec"));
        }
        Ok(spec)
    }
}

/// Smooth, colorful test content: a few random sinusoidal fields per channel
/// plus flat-colored rectangles, deterministic in `seed`.
pub fn procedural_image(seed: u64, width: usize, height: usize) -> ImageRaster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1a6e);
    let waves: Vec<[(f64, f64, f64, f64); 3]> = (0..3)
        .map(|_| {
            std::array::from_fn(|_| {
                (
                    rng.gen_range(0.5..6.0) * std::f64::consts::TAU,
                    rng.gen_range(0.5..6.0) * std::f64::consts::TAU,
                    rng.gen_range(0.0..std::f64::consts::TAU),
                    rng.gen_range(0.1..0.25),
                )
            })
        })
        .collect();
    let rects: Vec<(f64, f64, f64, f64, ColorRGB)> = (0..6)
        .map(|_| {
            let (x0, y0) = (rng.gen_range(0.0..0.9), rng.gen_range(0.0..0.9));
            (
                x0,
                y0,
                x0 + rng.gen_range(0.05..0.3),
                y0 + rng.gen_range(0.05..0.3),
                ColorRGB::new(rng.gen(), rng.gen(), rng.gen()),
            )
        })
        .collect();
    let mut noise = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    ImageRaster::from_fn(width, height, |x, y| {
        let (u, v) = (x as f64 / width as f64, y as f64 / height as f64);
        let mut c = [0.5; 3];
        for (ch, val) in c.iter_mut().enumerate() {
            for &(fx, fy, phase, amp) in &waves[ch] {
                *val += amp * (fx * u + fy * v + phase).sin();
            }
        }
        let mut c = ColorRGB::from_array(c);
        for &(x0, y0, x1, y1, col) in &rects {
            if u >= x0 && u < x1 && v >= y0 && v < y1 {
                c = col;
            }
        }
        let jitter = |n: &mut ChaCha8Rng| n.gen_range(-0.02..0.02);
        ColorRGB::new(
            c.r + jitter(&mut noise),
            c.g + jitter(&mut noise),
            c.b + jitter(&mut noise),
        )
    })
}

/// One (original, filtered, params) triple on disk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub original: PathBuf,
    pub filtered: PathBuf,
    pub params: PathBuf,
    pub spec: String,
}

/// Corpus index; paths are stored relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub root: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl Manifest {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingInput(path.display().to_string()));
        }
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let entries = serde_json::from_str(&s)?;
        Ok(Self {
            root: path.parent().map(Path::to_owned).unwrap_or_default(),
            entries,
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_owned()
        } else {
            self.root.join(p)
        }
    }

    pub fn path(&self) -> PathBuf {
        self.root.join(MANIFEST_FILE)
    }
}

/// Writes every image × spec combination as 8-bit PNG triples plus
/// `manifest.json` into `out_dir`.
pub fn build_corpus(images: &[ImageRaster], specs: &[SynthSpec], out_dir: &Path) -> Result<Manifest> {
    if images.is_empty() || specs.is_empty() {
        return Err(Error::InvalidArgument(
            "corpus needs at least one image and one spec".into(),
        ));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let params: Vec<FilterParams> = specs.iter().map(make_params).collect::<Result<_>>()?;
    for (j, p) in params.iter().enumerate() {
        p.save(out_dir.join(format!("params_{j:03}.json")))?;
    }
    let originals: Vec<(PathBuf, ImageRaster)> = images
        .par_iter()
        .enumerate()
        .map(|(i, img)| {
            let name = PathBuf::from(format!("original_{i:03}.png"));
            write_png(img, out_dir.join(&name), BitDepth::Eight)?;
            Ok((name, img.quantized_8bit()))
        })
        .collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..images.len())
        .flat_map(|i| (0..specs.len()).map(move |j| (i, j)))
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&(i, j)| {
            let (orig_name, orig) = &originals[i];
            let filtered = apply_filter(&params[j], orig);
            let name = PathBuf::from(format!("filtered_{i:03}_{j:03}.png"));
            write_png(&filtered, out_dir.join(&name), BitDepth::Eight)?;
            Ok(ManifestEntry {
                original: orig_name.clone(),
                filtered: name,
                params: PathBuf::from(format!("params_{j:03}.json")),
                spec: specs[j].to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        root: out_dir.to_owned(),
        entries,
    };
    let path = manifest.path();
    let json = serde_json::to_string_pretty(&manifest.entries)?;
    std::fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Loads one corpus triple.
pub fn load_entry(manifest: &Manifest, entry: &ManifestEntry) -> Result<(ImageRaster, ImageRaster, FilterParams)> {
    let (orig, _) = read_png(manifest.resolve(&entry.original))?;
    let (filt, _) = read_png(manifest.resolve(&entry.filtered))?;
    let params = FilterParams::load(manifest.resolve(&entry.params))?;
    Ok((orig, filt, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_params_close(a: &FilterParams, b: &FilterParams, tol: f64) {
        assert_eq!(a.cc, b.cc);
        for (x, y) in a.coefficients().iter().zip(b.coefficients().iter()) {
            for (u, v) in x.iter().zip(y) {
                assert!((u - v).abs() <= tol, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn brightness_and_neutral_specs() {
        let p = make_params(&SynthSpec::Brightness { c: 0.1 }).unwrap();
        for (g, ch) in p.channels.iter().enumerate() {
            assert_eq!(ch.bias, 0.1);
            assert_eq!(ch.poly[g], [1.0, 0.0, 0.0]);
        }
        let id = identity_params(false);
        let neutral = [
            SynthSpec::Brightness { c: 0.0 },
            SynthSpec::Contrast { a: 1.0, b: 0.0 },
            SynthSpec::ColorPoly {
                efg: [[0.0, 0.0, 1.0]; 3],
            },
            SynthSpec::Identity,
        ];
        for s in neutral {
            let p = make_params(&s).unwrap();
            assert_eq!(p.channels, id.channels, "{s}");
        }
    }

    #[test]
    fn sepia_mix_evaluates_to_first_column() {
        let p = make_params(&"sepia".parse().unwrap()).unwrap();
        assert!(!p.cc);
        let o = eval_filter(&p, ColorRGB::new(1.0, 0.0, 0.0), false);
        assert_eq!(o.to_array(), [0.393, 0.349, 0.272]);
    }

    #[test]
    fn rejects_non_finite_specs() {
        assert!(make_params(&SynthSpec::Brightness { c: f64::NAN }).is_err());
        assert!(make_params(&SynthSpec::Contrast {
            a: f64::INFINITY,
            b: 0.0
        })
        .is_err());
        assert!("brightness(nan)".parse::<SynthSpec>().is_err());
    }

    #[test]
    fn specs_round_trip_through_text() {
        let specs = [
            SynthSpec::Identity,
            SynthSpec::Brightness { c: -0.05 },
            SynthSpec::Contrast { a: 1.2, b: -0.1 },
            SynthSpec::ColorPoly {
                efg: [[0.1, -0.2, 1.1], [0.0, 0.0, 1.0], [-0.1, 0.1, 0.9]],
            },
            SynthSpec::ChannelMix {
                matrix: SEPIA,
                bias: [0.01, 0.0, -0.02],
            },
            SynthSpec::ProductMix {
                cc: [[0.3, 0.0, 0.0], [0.0, -0.2, 0.0], [0.0, 0.0, 0.25]],
            },
            SynthSpec::Random {
                seed: 42,
                ranges: RandomRanges::default(),
            },
            SynthSpec::Random {
                seed: 9,
                ranges: RandomRanges::default_cc(true),
            },
        ];
        for s in specs {
            assert_eq!(s.to_string().parse::<SynthSpec>().unwrap(), s);
        }
        assert!("contrast(1)".parse::<SynthSpec>().is_err());
        assert!("warp(1)".parse::<SynthSpec>().is_err());
    }

    type ChannelFormula = Box<dyn Fn(usize, f64) -> f64>;

    #[test]
    fn direct_formulas_match_params() {
        let img = procedural_image(1, 40, 30);
        let cases: Vec<(SynthSpec, ChannelFormula)> = vec![
            (SynthSpec::Brightness { c: 0.07 }, Box::new(|_, x| x + 0.07)),
            (
                SynthSpec::Contrast { a: 1.3, b: -0.12 },
                Box::new(|_, x| 1.3 * x - 0.12),
            ),
            (
                SynthSpec::ColorPoly {
                    efg: [[0.2, -0.3, 1.1], [0.1, 0.1, 0.7], [-0.2, 0.4, 0.9]],
                },
                Box::new(|ch, x| {
                    let efg = [[0.2, -0.3, 1.1], [0.1, 0.1, 0.7], [-0.2, 0.4, 0.9]][ch];
                    efg[0] * x * x * x + efg[1] * x * x + efg[2] * x
                }),
            ),
        ];
        for (spec, formula) in cases {
            let out = apply_filter(&make_params(&spec).unwrap(), &img);
            for (i, v) in out.data().iter().enumerate() {
                let expect = formula(i % 3, img.data()[i]).clamp(0.0, 1.0);
                assert!((v - expect).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn random_filter_is_deterministic() {
        let r = RandomRanges::default();
        assert_eq!(random_filter(3, &r), random_filter(3, &r));
        assert_ne!(random_filter(0, &r), random_filter(1, &r));
        let cc = random_filter(3, &RandomRanges::default_cc(true));
        assert!(cc.cc && cc.channels.iter().all(|c| c.cc.is_some()));
    }

    #[test]
    fn random_filters_respect_output_bound() {
        let (lo, hi) = RANDOM_OUTPUT_BOUND;
        for cc in [false, true] {
            let ranges = RandomRanges::default_cc(cc);
            for seed in 0..1000 {
                let p = random_filter(seed, &ranges);
                for c in lattice(17) {
                    for v in eval_filter(&p, c, false).to_array() {
                        assert!(v >= lo && v <= hi, "seed {seed}: {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn oversized_ranges_fall_back_inside_bound() {
        let wide = RandomRanges {
            bias: (2.0, 3.0),
            ..RandomRanges::default()
        };
        let p = random_filter(1, &wide);
        assert!(within_bound(&p));
    }

    #[test]
    fn refit_of_affine_composition_is_exact() {
        let bright = make_params(&SynthSpec::Brightness { c: 0.1 }).unwrap();
        let contrast = make_params(&SynthSpec::Contrast { a: 2.0, b: -0.5 }).unwrap();
        // brightness after contrast: 2x - 0.4
        let p = compose_refit(&contrast, &bright, 9).unwrap();
        let expect = make_params(&SynthSpec::Contrast { a: 2.0, b: -0.4 }).unwrap();
        assert_params_close(&p, &expect, 1e-9);
        for c in lattice(9) {
            let (a, b) = (eval_filter(&p, c, false), eval_filter(&expect, c, false));
            for (x, y) in a.to_array().iter().zip(b.to_array()) {
                assert!((x - y).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn refit_identity_composition_returns_operand() {
        for seed in 0..5 {
            let p = random_filter(seed, &RandomRanges::default_cc(seed % 2 == 0));
            let q = compose_refit(&identity_params(false), &p, 8).unwrap();
            assert_params_close(&q, &p, 1e-10);
            let q = compose_refit(&p, &identity_params(false), 8).unwrap();
            assert_params_close(&q, &p, 1e-10);
        }
    }

    #[test]
    fn refit_rejects_small_grid() {
        let id = identity_params(false);
        assert!(compose_refit(&id, &id, 7).is_err());
    }

    fn refit_error(first: &FilterParams, then: &FilterParams, p: &FilterParams) -> f64 {
        lattice(33)
            .map(|c| {
                let truth = eval_filter(then, eval_filter(first, c, false), false);
                let fit = eval_filter(p, c, false);
                truth
                    .to_array()
                    .iter()
                    .zip(fit.to_array())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    fn tone_curves_only(mut p: FilterParams) -> FilterParams {
        for (g, ch) in p.channels.iter_mut().enumerate() {
            for (i, row) in ch.poly.iter_mut().enumerate() {
                if i != g {
                    *row = [0.0; 3];
                }
            }
        }
        p
    }

    // Cross-channel powers of a composition (r*g^2, ...) are outside the model,
    // so only per-channel tone curves get a tight bound.
    #[test]
    fn refit_of_tone_curve_composition_stays_close() {
        let ranges = RandomRanges::default();
        let mut errs = Vec::new();
        for seed in 0..20 {
            let first = tone_curves_only(random_filter(seed, &ranges));
            let then = tone_curves_only(random_filter(seed + 1000, &ranges));
            let p = compose_refit(&first, &then, 17).unwrap();
            errs.push(refit_error(&first, &then, &p));
        }
        let within = errs.iter().filter(|e| **e <= 2.0 / 255.0).count();
        assert!(within >= 16, "{errs:?}");
        assert!(errs.iter().all(|e| *e <= 5.0 / 255.0), "{errs:?}");
    }

    #[test]
    fn refit_is_least_squares_on_its_grid() {
        let first = random_filter(4, &RandomRanges::default());
        let then = random_filter(5, &RandomRanges::default());
        let p = compose_refit(&first, &then, 9).unwrap();
        let sse = |q: &FilterParams| -> f64 {
            lattice(9)
                .map(|c| {
                    let t = eval_filter(&then, eval_filter(&first, c, false), false).to_array();
                    let f = eval_filter(q, c, false).to_array();
                    (0..3).map(|i| (t[i] - f[i]).powi(2)).sum::<f64>()
                })
                .sum()
        };
        let best = sse(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let mut q = p.clone();
            for ch in q.channels.iter_mut() {
                ch.bias += rng.gen_range(-1e-3..1e-3);
                for row in ch.poly.iter_mut() {
                    for v in row.iter_mut() {
                        *v += rng.gen_range(-1e-3..1e-3);
                    }
                }
            }
            assert!(sse(&q) >= best);
        }
    }

    #[test]
    fn corpus_layout_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let images = [procedural_image(1, 24, 16), procedural_image(2, 24, 16)];
        let specs = [
            SynthSpec::Identity,
            SynthSpec::Brightness { c: 0.08 },
            "random(5)".parse().unwrap(),
        ];
        let m = build_corpus(&images, &specs, dir.path()).unwrap();
        assert_eq!(m.entries.len(), 6);
        let reloaded = Manifest::load(dir.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(reloaded.entries, m.entries);
        for e in &reloaded.entries {
            let (orig, filt, params) = load_entry(&reloaded, e).unwrap();
            assert_eq!(apply_filter(&params, &orig).quantized_8bit(), filt);
            if e.spec == "identity" {
                assert_eq!(orig, filt);
            }
        }
    }
}
