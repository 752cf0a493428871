//! PSNR and CIEDE2000 image comparison.

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::color::ColorRGB;
use crate::error::{Error, Result};
use crate::raster::ImageRaster;

/// CIELAB `(L*, a*, b*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

impl Lab {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Self { l, a, b }
    }
}

/// D65 reference white, 2° observer.
pub const D65_WHITE: [f64; 3] = [0.95047, 1.0, 1.08883];

const SRGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

#[inline]
fn srgb_decode(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

#[inline]
fn lab_f(t: f64) -> f64 {
    const EPS: f64 = 216.0 / 24389.0;
    const KAPPA: f64 = 24389.0 / 27.0;
    if t > EPS {
        t.cbrt()
    } else {
        (KAPPA * t + 16.0) / 116.0
    }
}

pub fn srgb_to_lab(c: ColorRGB) -> Lab {
    let lin = [srgb_decode(c.r), srgb_decode(c.g), srgb_decode(c.b)];
    let xyz: [f64; 3] = std::array::from_fn(|i| SRGB_TO_XYZ[i].iter().zip(&lin).map(|(m, v)| m * v).sum());
    let [fx, fy, fz] = std::array::from_fn(|i| lab_f(xyz[i] / D65_WHITE[i]));
    Lab::new(116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

/// CIEDE2000 color difference with `kL = kC = kH = 1`.
pub fn ciede2000(lab1: Lab, lab2: Lab) -> f64 {
    use std::f64::consts::PI;
    let deg = PI / 180.0;
    let pow25_7 = 25.0f64.powi(7);

    let c1 = lab1.a.hypot(lab1.b);
    let c2 = lab2.a.hypot(lab2.b);
    let c_mean = (c1 + c2) / 2.0;
    let c_mean7 = c_mean.powi(7);
    let g = 0.5 * (1.0 - (c_mean7 / (c_mean7 + pow25_7)).sqrt());

    let a1p = (1.0 + g) * lab1.a;
    let a2p = (1.0 + g) * lab2.a;
    let c1p = a1p.hypot(lab1.b);
    let c2p = a2p.hypot(lab2.b);

    let hue = |b: f64, a: f64| {
        if a == 0.0 && b == 0.0 {
            0.0
        } else {
            let h = b.atan2(a) / deg;
            if h < 0.0 {
                h + 360.0
            } else {
                h
            }
        }
    };
    let h1p = hue(lab1.b, a1p);
    let h2p = hue(lab2.b, a2p);

    let dl = lab2.l - lab1.l;
    let dc = c2p - c1p;
    let chroma_product = c1p * c2p;
    let dh_angle = if chroma_product == 0.0 {
        0.0
    } else {
        let d = h2p - h1p;
        if d > 180.0 {
            d - 360.0
        } else if d < -180.0 {
            d + 360.0
        } else {
            d
        }
    };
    let dh = 2.0 * chroma_product.sqrt() * (dh_angle * deg / 2.0).sin();

    let l_mean = (lab1.l + lab2.l) / 2.0;
    let cp_mean = (c1p + c2p) / 2.0;
    let hp_mean = if chroma_product == 0.0 {
        h1p + h2p
    } else if (h1p - h2p).abs() <= 180.0 {
        (h1p + h2p) / 2.0
    } else if h1p + h2p < 360.0 {
        (h1p + h2p + 360.0) / 2.0
    } else {
        (h1p + h2p - 360.0) / 2.0
    };

    let t = 1.0 - 0.17 * ((hp_mean - 30.0) * deg).cos()
        + 0.24 * ((2.0 * hp_mean) * deg).cos()
        + 0.32 * ((3.0 * hp_mean + 6.0) * deg).cos()
        - 0.20 * ((4.0 * hp_mean - 63.0) * deg).cos();
    let d_theta = 30.0 * (-((hp_mean - 275.0) / 25.0).powi(2)).exp();
    let cp_mean7 = cp_mean.powi(7);
    let rc = 2.0 * (cp_mean7 / (cp_mean7 + pow25_7)).sqrt();
    let l50 = (l_mean - 50.0).powi(2);
    let sl = 1.0 + 0.015 * l50 / (20.0 + l50).sqrt();
    let sc = 1.0 + 0.045 * cp_mean;
    let sh = 1.0 + 0.015 * cp_mean * t;
    let rt = -(2.0 * d_theta * deg).sin() * rc;

    let (tl, tc, th) = (dl / sl, dc / sc, dh / sh);
    (tl * tl + tc * tc + th * th + rt * tc * th).max(0.0).sqrt()
}

pub fn psnr(a: &ImageRaster, b: &ImageRaster) -> Result<f64> {
    a.check_same_dims(b.dims())?;
    if a.pixel_count() == 0 {
        return Err(Error::InvalidArgument("cannot compare empty images".into()));
    }
    let mse = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.data().len() as f64;
    Ok(if mse == 0.0 { f64::INFINITY } else { -10.0 * mse.log10() })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub psnr_db: f64,
    pub mean_de2000: f64,
    pub max_de2000: f64,
    pub pixel_count: usize,
}

impl Serialize for MetricsReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("MetricsReport", 4)?;
        if self.psnr_db.is_infinite() && self.psnr_db > 0.0 {
            st.serialize_field("psnr_db", "inf")?;
        } else {
            st.serialize_field("psnr_db", &self.psnr_db)?;
        }
        st.serialize_field("mean_de2000", &self.mean_de2000)?;
        st.serialize_field("max_de2000", &self.max_de2000)?;
        st.serialize_field("pixel_count", &self.pixel_count)?;
        st.end()
    }
}

pub fn evaluate(pred: &ImageRaster, gt: &ImageRaster) -> Result<MetricsReport> {
    let psnr_db = psnr(pred, gt)?;
    let (sum, max) = pred
        .pixels()
        .zip(gt.pixels())
        .map(|(p, g)| ciede2000(srgb_to_lab(p), srgb_to_lab(g)))
        .fold((0.0, 0.0f64), |(s, m), d| (s + d, m.max(d)));
    Ok(MetricsReport {
        psnr_db,
        mean_de2000: sum / pred.pixel_count() as f64,
        max_de2000: max,
        pixel_count: pred.pixel_count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::procedural_image;
    use rand::{Rng, SeedableRng};

    #[test]
    fn psnr_examples() {
        let a = ImageRaster::filled(4, 4, ColorRGB::gray(0.0));
        let b = ImageRaster::filled(4, 4, ColorRGB::gray(0.5));
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        assert!((psnr(&a, &b).unwrap() - 6.0206).abs() < 1e-4);
        let c = ImageRaster::filled(4, 5, ColorRGB::gray(0.5));
        assert!(matches!(psnr(&a, &c), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn psnr_is_symmetric() {
        for seed in 0..10 {
            let a = procedural_image(seed, 20, 20);
            let b = procedural_image(seed + 100, 20, 20);
            assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        }
    }

    #[test]
    fn psnr_falls_as_noise_grows() {
        let base = procedural_image(1, 64, 64);
        let mut prev = f64::INFINITY;
        for (k, amp) in [0.001, 0.005, 0.02, 0.05, 0.1].into_iter().enumerate() {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(k as u64);
            let noisy = base.map_pixels(|c| {
                ColorRGB::new(
                    c.r + rng.gen_range(-amp..amp),
                    c.g + rng.gen_range(-amp..amp),
                    c.b + rng.gen_range(-amp..amp),
                )
            });
            let p = psnr(&base, &noisy).unwrap();
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn lab_anchor_points() {
        let white = srgb_to_lab(ColorRGB::gray(1.0));
        assert!((white.l - 100.0).abs() < 1e-4);
        assert!(white.a.abs() <= 0.01 && white.b.abs() <= 0.01);
        assert_eq!(srgb_to_lab(ColorRGB::gray(0.0)), Lab::new(0.0, 0.0, 0.0));
        let mid = srgb_to_lab(ColorRGB::gray(0.5));
        assert!((mid.l - 53.389).abs() < 0.01, "{mid:?}");
        assert!(mid.a.abs() <= 0.01 && mid.b.abs() <= 0.01);
    }

    #[test]
    fn lab_matches_independent_reference() {
        // reference values from scikit-image's rgb2lab (D65/2°)
        let cases = [
            ([1.0, 0.0, 0.0], [53.2406, 80.0923, 67.2028]),
            ([0.0, 1.0, 0.0], [87.7351, -86.1830, 83.1797]),
            ([0.0, 0.0, 1.0], [32.2957, 79.1856, -107.8573]),
        ];
        for (rgb, lab) in cases {
            let got = srgb_to_lab(ColorRGB::from_array(rgb));
            assert!((got.l - lab[0]).abs() < 0.01, "{got:?}");
            assert!((got.a - lab[1]).abs() < 0.01, "{got:?}");
            assert!((got.b - lab[2]).abs() < 0.01, "{got:?}");
        }
    }

    #[test]
    fn ciede2000_basic_properties() {
        let a = Lab::new(50.0, 2.6772, -79.7751);
        let b = Lab::new(50.0, 0.0, -82.7485);
        assert_eq!(ciede2000(a, a), 0.0);
        assert!((ciede2000(a, b) - 2.0425).abs() < 1e-4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100_000 {
            let p = Lab::new(
                rng.gen_range(0.0..100.0),
                rng.gen_range(-128.0..128.0),
                rng.gen_range(-128.0..128.0),
            );
            let q = Lab::new(
                rng.gen_range(0.0..100.0),
                rng.gen_range(-128.0..128.0),
                rng.gen_range(-128.0..128.0),
            );
            let (d1, d2) = (ciede2000(p, q), ciede2000(q, p));
            assert!(d1 >= 0.0 && d1.is_finite());
            assert!((d1 - d2).abs() <= 1e-12, "{d1} vs {d2}");
        }
    }

    #[test]
    fn evaluate_aggregates_per_pixel_calls() {
        let a = procedural_image(1, 16, 12);
        let b = procedural_image(2, 16, 12);
        let r = evaluate(&a, &b).unwrap();
        let per: Vec<f64> = a
            .pixels()
            .zip(b.pixels())
            .map(|(p, q)| ciede2000(srgb_to_lab(p), srgb_to_lab(q)))
            .collect();
        let mean = per.iter().sum::<f64>() / per.len() as f64;
        assert!((r.mean_de2000 - mean).abs() < 1e-12);
        assert!(r.mean_de2000 <= r.max_de2000);
        assert_eq!(r.pixel_count, 192);

        let same = evaluate(&a, &a).unwrap();
        assert_eq!(same.psnr_db, f64::INFINITY);
        assert_eq!((same.mean_de2000, same.max_de2000), (0.0, 0.0));
        let json = serde_json::to_value(same).unwrap();
        assert_eq!(json["psnr_db"], "inf");

        let one_a = ImageRaster::filled(1, 1, ColorRGB::new(0.2, 0.4, 0.6));
        let one_b = ImageRaster::filled(1, 1, ColorRGB::new(0.3, 0.4, 0.5));
        let r = evaluate(&one_a, &one_b).unwrap();
        assert_eq!(r.mean_de2000, r.max_de2000);
    }
}
