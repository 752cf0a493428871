//! The parametric filter model.
//!
//! Every output channel is a cubic polynomial in each input channel plus a
//! bias, optionally extended with the three bilinear channel-correlation
//! products `rg`, `rb`, `gb`. The model is linear in its coefficients, so a
//! filter is fully described by a coefficient vector per output channel laid
//! out in the canonical feature order:
//!
//! ```text
//! [1, r, r², r³, g, g², g³, b, b², b³]            (10 features)
//! [1, r, r², r³, g, g², g³, b, b², b³, rg, rb, gb] (13 features, cc)
//! ```

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::ImageRaster;

pub const FEATURES_BASE: usize = 10;
pub const FEATURES_CC: usize = 13;
pub const PARAMS_VERSION: u32 = 1;

/// Index of the coefficient for input channel `channel` raised to `degree` (1..=3).
#[inline]
pub const fn poly_index(channel: usize, degree: usize) -> usize {
    1 + channel * 3 + (degree - 1)
}

pub const fn feature_count(cc: bool) -> usize {
    if cc {
        FEATURES_CC
    } else {
        FEATURES_BASE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ColorRGB {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

impl ColorRGB {
    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        Self { r, g, b }
    }

    pub const fn gray(v: f64) -> Self {
        Self { r: v, g: v, b: v }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn clamped(self) -> Self {
        Self::new(self.r.clamp(0.0, 1.0), self.g.clamp(0.0, 1.0), self.b.clamp(0.0, 1.0))
    }
}

/// Polynomial basis values of a color.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    values: [f64; FEATURES_CC],
    len: usize,
}

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.values[..self.len]
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dot(&self, coeffs: &[f64]) -> f64 {
        debug_assert_eq!(coeffs.len(), self.len);
        self.as_slice().iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }
}

pub fn features(c: ColorRGB, cc: bool) -> FeatureVector {
    let mut values = [0.0; FEATURES_CC];
    values[0] = 1.0;
    for (i, x) in [c.r, c.g, c.b].into_iter().enumerate() {
        let x2 = x * x;
        values[poly_index(i, 1)] = x;
        values[poly_index(i, 2)] = x2;
        values[poly_index(i, 3)] = x2 * x;
    }
    if cc {
        values[10] = c.r * c.g;
        values[11] = c.r * c.b;
        values[12] = c.g * c.b;
    }
    FeatureVector {
        values,
        len: feature_count(cc),
    }
}

/// Coefficients of one output channel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChannelParams {
    pub bias: f64,
    /// `poly[i][d]` multiplies input channel `i` raised to `d + 1`.
    pub poly: [[f64; 3]; 3],
    /// Multipliers of `rg`, `rb`, `gb`.
    pub cc: Option<[f64; 3]>,
}

impl ChannelParams {
    pub fn coefficients(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(FEATURES_CC);
        v.push(self.bias);
        for row in &self.poly {
            v.extend_from_slice(row);
        }
        if let Some(cc) = self.cc {
            v.extend_from_slice(&cc);
        }
        v
    }

    pub fn from_coefficients(coeffs: &[f64]) -> Result<Self> {
        let cc = match coeffs.len() {
            FEATURES_BASE => None,
            FEATURES_CC => Some([coeffs[10], coeffs[11], coeffs[12]]),
            n => {
                return Err(Error::InvalidArgument(format!(
                    "expected {FEATURES_BASE} or {FEATURES_CC} coefficients, got {n}"
                )))
            }
        };
        let mut poly = [[0.0; 3]; 3];
        for (i, row) in poly.iter_mut().enumerate() {
            for (d, v) in row.iter_mut().enumerate() {
                *v = coeffs[poly_index(i, d + 1)];
            }
        }
        Ok(Self {
            bias: coeffs[0],
            poly,
            cc,
        })
    }

    fn is_finite(&self) -> bool {
        self.bias.is_finite()
            && self.poly.iter().flatten().all(|v| v.is_finite())
            && self.cc.is_none_or(|c| c.iter().all(|v| v.is_finite()))
    }

    #[inline]
    pub fn eval(&self, c: ColorRGB) -> f64 {
        let x = [c.r, c.g, c.b];
        let mut y = self.bias;
        for (row, xi) in self.poly.iter().zip(x) {
            // Horner form of l*x + q*x^2 + c*x^3
            y += xi * (row[0] + xi * (row[1] + xi * row[2]));
        }
        if let Some(cc) = self.cc {
            y += cc[0] * c.r * c.g + cc[1] * c.r * c.b + cc[2] * c.g * c.b;
        }
        y
    }
}

/// A complete filter: one coefficient set per output channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterParams {
    pub channels: [ChannelParams; 3],
    pub cc: bool,
    pub lambda_used: f64,
    pub meta: BTreeMap<String, String>,
}

impl FilterParams {
    pub fn new(channels: [ChannelParams; 3], cc: bool, lambda_used: f64) -> Result<Self> {
        let p = Self {
            channels,
            cc,
            lambda_used,
            meta: BTreeMap::new(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds params from three coefficient vectors in canonical order.
    pub fn from_coefficients(coeffs: [&[f64]; 3], lambda_used: f64) -> Result<Self> {
        let cc = coeffs[0].len() == FEATURES_CC;
        let channels = [
            ChannelParams::from_coefficients(coeffs[0])?,
            ChannelParams::from_coefficients(coeffs[1])?,
            ChannelParams::from_coefficients(coeffs[2])?,
        ];
        Self::new(channels, cc, lambda_used)
    }

    pub fn coefficients(&self) -> [Vec<f64>; 3] {
        [
            self.channels[0].coefficients(),
            self.channels[1].coefficients(),
            self.channels[2].coefficients(),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.iter().any(|c| c.cc.is_some() != self.cc) {
            return Err(Error::InvalidArgument(
                "channel cc terms disagree with the filter cc flag".into(),
            ));
        }
        if !self.channels.iter().all(ChannelParams::is_finite) {
            return Err(Error::NonFinite("filter coefficients"));
        }
        if !(self.lambda_used.is_finite() && self.lambda_used >= 0.0) {
            return Err(Error::InvalidArgument("lambda must be finite and >= 0".into()));
        }
        Ok(())
    }

    /// Returns a copy with the cc terms switched on (zero-filled) if needed.
    pub fn with_cc(&self) -> Self {
        let mut p = self.clone();
        p.cc = true;
        for c in &mut p.channels {
            c.cc.get_or_insert([0.0; 3]);
        }
        p
    }

    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        self.write_json(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits utf-8")
    }

    pub fn write_json<W: io::Write>(&self, out: W) -> Result<()> {
        let doc = ParamsDoc::from(self);
        let mut ser = serde_json::Serializer::with_formatter(out, PreciseFormatter::new());
        doc.serialize(&mut ser)?;
        let mut out = ser.into_inner();
        out.write_all(b"\n").map_err(serde_json::Error::io)?;
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ParamsDoc = serde_json::from_str(s)?;
        doc.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingInput(path.display().to_string()));
        }
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

pub fn identity_params(cc: bool) -> FilterParams {
    let mut channels = [ChannelParams::default(); 3];
    for (g, ch) in channels.iter_mut().enumerate() {
        ch.poly[g][0] = 1.0;
        if cc {
            ch.cc = Some([0.0; 3]);
        }
    }
    FilterParams {
        channels,
        cc,
        lambda_used: 0.0,
        meta: BTreeMap::new(),
    }
}

#[inline]
pub fn eval_filter(p: &FilterParams, c: ColorRGB, clamp: bool) -> ColorRGB {
    let out = ColorRGB::new(p.channels[0].eval(c), p.channels[1].eval(c), p.channels[2].eval(c));
    if clamp {
        out.clamped()
    } else {
        out
    }
}

/// Reference per-pixel application of a filter (the LUT path is the fast one).
pub fn apply_filter(p: &FilterParams, img: &ImageRaster) -> ImageRaster {
    img.map_pixels(|c| eval_filter(p, c, true))
}

// ---------------------------------------------------------------------------
// JSON document

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamsDoc {
    version: u32,
    cc: bool,
    lambda: f64,
    channels: ChannelsDoc,
    #[serde(default)]
    meta: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelsDoc {
    r: ChannelDoc,
    g: ChannelDoc,
    b: ChannelDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelDoc {
    bias: f64,
    poly: PolyDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cc: Option<[f64; 3]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyDoc {
    r: [f64; 3],
    g: [f64; 3],
    b: [f64; 3],
}

impl From<&ChannelParams> for ChannelDoc {
    fn from(c: &ChannelParams) -> Self {
        Self {
            bias: c.bias,
            poly: PolyDoc {
                r: c.poly[0],
                g: c.poly[1],
                b: c.poly[2],
            },
            cc: c.cc,
        }
    }
}

impl From<ChannelDoc> for ChannelParams {
    fn from(c: ChannelDoc) -> Self {
        Self {
            bias: c.bias,
            poly: [c.poly.r, c.poly.g, c.poly.b],
            cc: c.cc,
        }
    }
}

impl From<&FilterParams> for ParamsDoc {
    fn from(p: &FilterParams) -> Self {
        Self {
            version: PARAMS_VERSION,
            cc: p.cc,
            lambda: p.lambda_used,
            channels: ChannelsDoc {
                r: (&p.channels[0]).into(),
                g: (&p.channels[1]).into(),
                b: (&p.channels[2]).into(),
            },
            meta: p.meta.clone(),
        }
    }
}

impl TryFrom<ParamsDoc> for FilterParams {
    type Error = Error;

    fn try_from(doc: ParamsDoc) -> Result<Self> {
        if doc.version != PARAMS_VERSION {
            return Err(Error::Format(format!("unsupported params version {}", doc.version)));
        }
        let p = FilterParams {
            channels: [doc.channels.r.into(), doc.channels.g.into(), doc.channels.b.into()],
            cc: doc.cc,
            lambda_used: doc.lambda,
            meta: doc.meta,
        };
        p.validate()?;
        Ok(p)
    }
}

/// Pretty JSON with every float written as 17 significant digits, which
/// round-trips `f64` exactly and keeps output byte-stable.
struct PreciseFormatter<'a>(serde_json::ser::PrettyFormatter<'a>);

impl PreciseFormatter<'_> {
    fn new() -> Self {
        Self(serde_json::ser::PrettyFormatter::with_indent(b"  "))
    }
}

impl serde_json::ser::Formatter for PreciseFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}
