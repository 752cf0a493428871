//! Precompiled 3D lookup tables with trilinear interpolation.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::color::{eval_filter, ColorRGB, FilterParams};
use crate::error::{Error, Result};
use crate::raster::ImageRaster;

pub const DEFAULT_LUT_SIZE: usize = 33;

/// Lattice samples of an RGB → RGB map, red varying fastest.
///
/// Entries keep the unclamped filter response; [`Lut3D::sample`] clamps after
/// interpolation, so a clip boundary inside a cell costs no extra error.
#[derive(Debug, Clone, PartialEq)]
pub struct Lut3D {
    size: usize,
    entries: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Serial,
    #[default]
    Parallel,
}

impl Lut3D {
    pub fn new(size: usize, entries: Vec<[f64; 3]>) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidArgument(format!("LUT size {size} must be >= 2")));
        }
        if entries.len() != size * size * size {
            return Err(Error::InvalidArgument(format!(
                "LUT of size {size} needs {} entries, got {}",
                size * size * size,
                entries.len()
            )));
        }
        if entries.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("LUT entry"));
        }
        Ok(Self { size, entries })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn entries(&self) -> &[[f64; 3]] {
        &self.entries
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        self.entries[i + self.size * (j + self.size * k)]
    }

    /// Trilinear lookup of one color; exact at lattice points.
    #[inline]
    pub fn sample(&self, c: ColorRGB) -> ColorRGB {
        ColorRGB::from_array(self.sample_array([c.r, c.g, c.b]))
    }

    #[inline]
    fn sample_array(&self, c: [f64; 3]) -> [f64; 3] {
        let n = self.size;
        let scale = (n - 1) as f64;
        let (i, tr) = cell(c[0], scale, n);
        let (j, tg) = cell(c[1], scale, n);
        let (k, tb) = cell(c[2], scale, n);
        let (sg, sb) = (n, n * n);
        let base = i + n * (j + n * k);
        let e = &self.entries[base..=base + sg + sb + 1];
        let (c000, c100) = (e[0], e[1]);
        let (c010, c110) = (e[sg], e[sg + 1]);
        let (c001, c101) = (e[sb], e[sb + 1]);
        let (c011, c111) = (e[sg + sb], e[sg + sb + 1]);
        // corner weights; at lattice points all but one are exactly zero
        let (ur, ug, ub) = (1.0 - tr, 1.0 - tg, 1.0 - tb);
        let (w00, w10, w01, w11) = (ug * ub, tg * ub, ug * tb, tg * tb);
        let w = [
            ur * w00,
            tr * w00,
            ur * w10,
            tr * w10,
            ur * w01,
            tr * w01,
            ur * w11,
            tr * w11,
        ];
        let corners = [c000, c100, c010, c110, c001, c101, c011, c111];
        let mut out = [0.0; 3];
        for (ch, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (wk, ck) in w.iter().zip(&corners) {
                acc += wk * ck[ch];
            }
            *o = acc.clamp(0.0, 1.0);
        }
        out
    }
}

/// Lower lattice index and fractional offset of `v` on an `n`-point axis.
#[inline]
fn cell(v: f64, scale: f64, n: usize) -> (usize, f64) {
    let f = v.clamp(0.0, 1.0) * scale;
    let mut i = f as usize;
    let mut t = f - i as f64;
    // i/(n-1)*(n-1) may land an ulp off the integer
    if t > 1.0 - 1e-9 {
        i += 1;
        t = 0.0;
    } else if t < 1e-9 {
        t = 0.0;
    }
    if i > n - 2 {
        return (n - 2, 1.0);
    }
    (i, t)
}

pub fn compile_lut(p: &FilterParams, size: usize) -> Result<Lut3D> {
    if size < 2 {
        return Err(Error::InvalidArgument(format!("LUT size {size} must be >= 2")));
    }
    let step = (size - 1) as f64;
    let entries = (0..size * size * size)
        .map(|idx| {
            let (i, j, k) = (idx % size, (idx / size) % size, idx / (size * size));
            let c = ColorRGB::new(i as f64 / step, j as f64 / step, k as f64 / step);
            eval_filter(p, c, false).to_array()
        })
        .collect();
    Ok(Lut3D { size, entries })
}

pub fn apply_lut(lut: &Lut3D, img: &ImageRaster) -> ImageRaster {
    apply_lut_with(lut, img, Parallelism::Parallel)
}

pub fn apply_lut_with(lut: &Lut3D, img: &ImageRaster, mode: Parallelism) -> ImageRaster {
    let mut out = vec![0.0; img.data().len()];
    let row = img.width() * 3;
    let kernel = |(dst, src): (&mut [f64], &[f64])| {
        for (d, s) in dst.chunks_exact_mut(3).zip(src.chunks_exact(3)) {
            d.copy_from_slice(&lut.sample_array([s[0], s[1], s[2]]));
        }
    };
    if row > 0 {
        match mode {
            Parallelism::Serial => out.chunks_mut(row).zip(img.data().chunks(row)).for_each(kernel),
            Parallelism::Parallel => out.par_chunks_mut(row).zip(img.data().par_chunks(row)).for_each(kernel),
        }
    }
    ImageRaster::from_raw_unchecked(img.width(), img.height(), out)
}

/// Renders an Adobe-style `.cube` document.
pub fn cube_string(lut: &Lut3D, title: Option<&str>) -> Result<String> {
    let mut s = String::with_capacity(lut.entries.len() * 27 + 64);
    if let Some(t) = title {
        if t.contains(['\n', '\r', '"']) {
            return Err(Error::InvalidArgument(
                "cube title may not contain newlines or quotes".into(),
            ));
        }
        writeln!(s, "TITLE \"{t}\"").unwrap();
    }
    writeln!(s, "LUT_3D_SIZE {}", lut.size).unwrap();
    for [r, g, b] in &lut.entries {
        writeln!(s, "{r:.6} {g:.6} {b:.6}").unwrap();
    }
    Ok(s)
}

pub fn export_cube(lut: &Lut3D, path: impl AsRef<Path>, title: Option<&str>) -> Result<()> {
    let path = path.as_ref();
    let s = cube_string(lut, title)?;
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn parse_cube(text: &str) -> Result<Lut3D> {
    let mut size = None;
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = || Error::Format(format!("cube line {}: {raw:?}", lineno + 1));
        let mut words = line.split_whitespace();
        let head = words.next().unwrap_or_default();
        match head {
            "TITLE" => {}
            "LUT_3D_SIZE" => {
                let n: usize = words.next().and_then(|w| w.parse().ok()).ok_or_else(bad)?;
                size = Some(n);
            }
            "DOMAIN_MIN" | "DOMAIN_MAX" => {
                let want = if head == "DOMAIN_MIN" { 0.0 } else { 1.0 };
                let vals: Vec<f64> = words.map(|w| w.parse().map_err(|_| bad())).collect::<Result<_>>()?;
                if vals.len() != 3 || vals.iter().any(|v| *v != want) {
                    return Err(Error::Format(format!("unsupported {head} {vals:?}")));
                }
            }
            "LUT_1D_SIZE" => return Err(Error::Format("1D cube LUTs are not supported".into())),
            _ => {
                let vals: Vec<f64> = line
                    .split_whitespace()
                    .map(|w| w.parse().map_err(|_| bad()))
                    .collect::<Result<_>>()?;
                if vals.len() != 3 {
                    return Err(bad());
                }
                entries.push([vals[0], vals[1], vals[2]]);
            }
        }
    }
    let size = size.ok_or_else(|| Error::Format("cube file lacks LUT_3D_SIZE".into()))?;
    Lut3D::new(size, entries)
}

pub fn read_cube(path: impl AsRef<Path>) -> Result<Lut3D> {
    let path = path.as_ref();
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cube(&s)
}
