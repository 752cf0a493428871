//! RGB rasters, per-pixel uncertainty maps, and their file formats.
//!
//! Rasters hold row-major interleaved RGB as `f64` in `[0, 1]`. PNG files are
//! read at their native bit depth (8 or 16) and normalized by 255 / 65535.
//! Uncertainty maps use the little-endian `FSTU` container:
//!
//! ```text
//! b"FSTU" | u32 version (=1) | u32 width | u32 height | width*height f32
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use image::{ImageBuffer, Rgb};

use crate::color::ColorRGB;
use crate::error::{Error, FstuError, Result};

pub const FSTU_MAGIC: &[u8; 4] = b"FSTU";
pub const FSTU_VERSION: u32 = 1;
const FSTU_HEADER_LEN: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageRaster {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImageRaster {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::InvalidArgument(format!(
                "raster data length {} does not match {width}x{height}x3",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "raster value {} at index {i} outside [0, 1]",
                data[i]
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: usize, height: usize, c: ColorRGB) -> Self {
        let data = std::iter::repeat_n([c.r, c.g, c.b], width * height).flatten().collect();
        Self { width, height, data }
    }

    /// Builds a raster from a per-pixel closure; outputs are clamped.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> ColorRGB) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                let c = f(x, y).clamped();
                data.extend_from_slice(&[c.r, c.g, c.b]);
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn pixel(&self, index: usize) -> ColorRGB {
        let p = &self.data[index * 3..index * 3 + 3];
        ColorRGB::new(p[0], p[1], p[2])
    }

    pub fn pixels(&self) -> impl ExactSizeIterator<Item = ColorRGB> + '_ {
        self.data.chunks_exact(3).map(|p| ColorRGB::new(p[0], p[1], p[2]))
    }

    /// Maps every pixel through `f`, clamping the result.
    pub fn map_pixels(&self, mut f: impl FnMut(ColorRGB) -> ColorRGB) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for c in self.pixels() {
            let o = f(c).clamped();
            data.extend_from_slice(&[o.r, o.g, o.b]);
        }
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub(crate) fn from_raw_unchecked(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * 3);
        Self { width, height, data }
    }

    pub fn check_same_dims(&self, other: (usize, usize)) -> Result<()> {
        if self.dims() != other {
            return Err(Error::DimensionMismatch {
                left: self.dims(),
                right: other,
            });
        }
        Ok(())
    }

    /// Round-trips every value through an 8-bit code.
    pub fn quantized_8bit(&self) -> Self {
        self.quantized(255.0)
    }

    pub fn quantized_16bit(&self) -> Self {
        self.quantized(65535.0)
    }

    fn quantized(&self, max: f64) -> Self {
        let data = self.data.iter().map(|v| (v * max).round() / max).collect();
        Self::from_raw_unchecked(self.width, self.height, data)
    }

    /// Nearest-neighbour downscale so that neither side exceeds `max_dim`.
    /// Pixels are picked, never blended, so pixel-aligned pairs stay aligned.
    pub fn downscaled_nearest(&self, max_dim: usize) -> Self {
        let largest = self.width.max(self.height);
        if largest <= max_dim || max_dim == 0 {
            return self.clone();
        }
        let scale = max_dim as f64 / largest as f64;
        let w = ((self.width as f64 * scale).round() as usize).max(1);
        let h = ((self.height as f64 * scale).round() as usize).max(1);
        let mut data = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            let sy = ((y as f64 + 0.5) * self.height as f64 / h as f64) as usize;
            for x in 0..w {
                let sx = ((x as f64 + 0.5) * self.width as f64 / w as f64) as usize;
                let i = (sy.min(self.height - 1) * self.width + sx.min(self.width - 1)) * 3;
                data.extend_from_slice(&self.data[i..i + 3]);
            }
        }
        Self::from_raw_unchecked(w, h, data)
    }
}

/// Sample depth of a PNG on disk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

pub fn read_png(path: impl AsRef<Path>) -> Result<(ImageRaster, BitDepth)> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingInput(path.display().to_string()));
    }
    let img = image::open(path).map_err(|source| Error::Image {
        path: path.to_owned(),
        source,
    })?;
    let sixteen = matches!(
        img.color(),
        image::ColorType::L16 | image::ColorType::La16 | image::ColorType::Rgb16 | image::ColorType::Rgba16
    );
    let (w, h) = (img.width() as usize, img.height() as usize);
    if sixteen {
        let buf = img.to_rgb16();
        let data = buf.as_raw().iter().map(|&v| v as f64 / 65535.0).collect();
        Ok((ImageRaster::from_raw_unchecked(w, h, data), BitDepth::Sixteen))
    } else {
        let buf = img.to_rgb8();
        let data = buf.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
        Ok((ImageRaster::from_raw_unchecked(w, h, data), BitDepth::Eight))
    }
}

pub fn write_png(img: &ImageRaster, path: impl AsRef<Path>, depth: BitDepth) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (img.width as u32, img.height as u32);
    let res = match depth {
        BitDepth::Eight => {
            let raw = img.data.iter().map(|v| (v * 255.0).round() as u8).collect();
            ImageBuffer::<Rgb<u8>, Vec<u8>>::from_raw(w, h, raw)
                .expect("buffer length matches dimensions")
                .save(path)
        }
        BitDepth::Sixteen => {
            let raw = img.data.iter().map(|v| (v * 65535.0).round() as u16).collect();
            ImageBuffer::<Rgb<u16>, Vec<u16>>::from_raw(w, h, raw)
                .expect("buffer length matches dimensions")
                .save(path)
        }
    };
    res.map_err(|source| Error::Image {
        path: path.to_owned(),
        source,
    })
}

/// Per-pixel scalar variance paired with a raster.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyMap {
    width: usize,
    height: usize,
    var: Vec<f32>,
}

impl UncertaintyMap {
    pub fn new(width: usize, height: usize, var: Vec<f32>) -> Result<Self> {
        if var.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "uncertainty length {} does not match {width}x{height}",
                var.len()
            )));
        }
        if let Some(i) = var.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "uncertainty value {} at index {i} is negative or non-finite",
                var[i]
            )));
        }
        Ok(Self { width, height, var })
    }

    pub fn uniform(width: usize, height: usize, value: f32) -> Self {
        assert!(value.is_finite() && value >= 0.0);
        Self {
            width,
            height,
            var: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f32] {
        &self.var
    }

    pub fn downscaled_nearest(&self, max_dim: usize) -> Self {
        let largest = self.width.max(self.height);
        if largest <= max_dim || max_dim == 0 {
            return self.clone();
        }
        let scale = max_dim as f64 / largest as f64;
        let w = ((self.width as f64 * scale).round() as usize).max(1);
        let h = ((self.height as f64 * scale).round() as usize).max(1);
        let mut var = Vec::with_capacity(w * h);
        for y in 0..h {
            let sy = ((y as f64 + 0.5) * self.height as f64 / h as f64) as usize;
            for x in 0..w {
                let sx = ((x as f64 + 0.5) * self.width as f64 / w as f64) as usize;
                var.push(self.var[sy.min(self.height - 1) * self.width + sx.min(self.width - 1)]);
            }
        }
        Self {
            width: w,
            height: h,
            var,
        }
    }

    pub fn to_fstu_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FSTU_HEADER_LEN + self.var.len() * 4);
        out.extend_from_slice(FSTU_MAGIC);
        out.extend_from_slice(&FSTU_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        for v in &self.var {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_fstu_bytes(bytes: &[u8]) -> Result<Self, FstuError> {
        if bytes.len() < 4 || &bytes[..4] != FSTU_MAGIC {
            return Err(FstuError::BadMagic);
        }
        if bytes.len() < FSTU_HEADER_LEN {
            return Err(FstuError::Truncated {
                expected: FSTU_HEADER_LEN,
                found: bytes.len(),
            });
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let version = word(4);
        if version != FSTU_VERSION {
            return Err(FstuError::UnsupportedVersion(version));
        }
        let (width, height) = (word(8) as usize, word(12) as usize);
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(4))
            .and_then(|n| n.checked_add(FSTU_HEADER_LEN))
            .ok_or(FstuError::Truncated {
                expected: usize::MAX,
                found: bytes.len(),
            })?;
        if bytes.len() != expected {
            return Err(FstuError::Truncated {
                expected,
                found: bytes.len(),
            });
        }
        let var: Vec<f32> = bytes[FSTU_HEADER_LEN..]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        if let Some(i) = var.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(FstuError::InvalidValue(i));
        }
        Ok(Self { width, height, var })
    }

    pub fn write_fstu(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_fstu_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read_fstu(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if !path.exists() {
            return Err(Error::MissingInput(path.display().to_string()));
        }
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_fstu_bytes(&bytes)?)
    }
}
