//! In-memory raster types shared across the pipeline.
//!
//! All rasters are row-major, top row first.

use crate::error::Error;

/// Linear-radiance RGB raster in cd/m².
#[derive(Debug, Clone, PartialEq)]
pub struct HdrImage {
    pub width: usize,
    pub height: usize,
    /// Interleaved RGB, `width * height * 3` values, finite and >= 0.
    pub pixels: Vec<f32>,
}

impl HdrImage {
    pub fn new(width: usize, height: usize) -> Result<Self, Error> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be >= 1, got {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels: vec![0.0; width * height * 3],
        })
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f32>) -> Result<Self, Error> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be >= 1, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height * 3 {
            return Err(Error::InvalidInput(format!(
                "pixel buffer length {} does not match {width}x{height}x3",
                pixels.len()
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "radiance values must be finite and non-negative, found {v}"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Uniform image, handy for fixtures.
    pub fn constant(width: usize, height: usize, rgb: [f32; 3]) -> Result<Self, Error> {
        let mut img = Self::new(width, height)?;
        for px in img.pixels.chunks_exact_mut(3) {
            px.copy_from_slice(&rgb);
        }
        Ok(img)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }
}

/// 8-bit-per-channel raster in the PQ nonlinear domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedHdrImage {
    pub width: usize,
    pub height: usize,
    /// Interleaved RGB codes, each in [0, 255].
    pub codes: Vec<u8>,
}

/// Display-referred 8-bit raster; 1, 3 or 4 channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdrImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub codes: Vec<u8>,
}

impl LdrImage {
    pub fn new(width: usize, height: usize, channels: usize) -> Result<Self, Error> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be >= 1, got {width}x{height}"
            )));
        }
        if !matches!(channels, 1 | 3 | 4) {
            return Err(Error::InvalidInput(format!(
                "channel count must be 1, 3 or 4, got {channels}"
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            codes: vec![0; width * height * channels],
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.codes[(y * self.width + x) * self.channels + c]
    }
}

/// Per-pixel unit camera-space normals with a validity mask.
///
/// Convention: +X right, +Y up, +Z toward the camera.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    pub width: usize,
    pub height: usize,
    /// Interleaved XYZ, unit length where valid.
    pub vectors: Vec<f32>,
    /// One flag per pixel.
    pub valid: Vec<bool>,
}

impl NormalMap {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            vectors: vec![0.0; width * height * 3],
            valid: vec![false; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> ([f32; 3], bool) {
        let p = y * self.width + x;
        let i = p * 3;
        (
            [self.vectors[i], self.vectors[i + 1], self.vectors[i + 2]],
            self.valid[p],
        )
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, n: [f32; 3], valid: bool) {
        let p = y * self.width + x;
        self.vectors[p * 3..p * 3 + 3].copy_from_slice(&n);
        self.valid[p] = valid;
    }
}

/// Bilinear resize of an interleaved float raster. Used when frame inputs do
/// not match the configured output resolution.
pub fn resize_bilinear(
    src: &[f32],
    sw: usize,
    sh: usize,
    channels: usize,
    dw: usize,
    dh: usize,
) -> Vec<f32> {
    let mut out = vec![0.0f32; dw * dh * channels];
    for y in 0..dh {
        let fy = ((y as f32 + 0.5) / dh as f32) * sh as f32 - 0.5;
        let y0 = fy.floor().max(0.0) as usize;
        let y1 = (y0 + 1).min(sh - 1);
        let ty = (fy - y0 as f32).clamp(0.0, 1.0);
        for x in 0..dw {
            let fx = ((x as f32 + 0.5) / dw as f32) * sw as f32 - 0.5;
            let x0 = fx.floor().max(0.0) as usize;
            let x1 = (x0 + 1).min(sw - 1);
            let tx = (fx - x0 as f32).clamp(0.0, 1.0);
            for c in 0..channels {
                let s = |xx: usize, yy: usize| src[(yy * sw + xx) * channels + c];
                let top = s(x0, y0) * (1.0 - tx) + s(x1, y0) * tx;
                let bot = s(x0, y1) * (1.0 - tx) + s(x1, y1) * tx;
                out[(y * dw + x) * channels + c] = top * (1.0 - ty) + bot * ty;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_dimensions() {
        assert!(HdrImage::new(0, 4).is_err());
        assert!(LdrImage::new(3, 0, 3).is_err());
    }

    #[test]
    fn rejects_negative_radiance() {
        assert!(HdrImage::from_pixels(1, 1, vec![1.0, -0.5, 0.0]).is_err());
        assert!(HdrImage::from_pixels(1, 1, vec![1.0, f32::NAN, 0.0]).is_err());
    }

    #[test]
    fn resize_identity() {
        let src = vec![1.0, 2.0, 3.0, 4.0];
        let out = resize_bilinear(&src, 2, 2, 1, 2, 2);
        assert_eq!(out, src);
    }

    #[test]
    fn resize_constant_stays_constant() {
        let src = vec![0.7f32; 5 * 3 * 3];
        let out = resize_bilinear(&src, 5, 3, 3, 9, 7);
        for v in out {
            assert!((v - 0.7).abs() < 1e-6);
        }
    }
}
