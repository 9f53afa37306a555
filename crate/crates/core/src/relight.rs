//! Light-adding shading: R = s1 * I + s2 * I_lowS (x) D, plus the display
//! transfer, low-saturation transform, background tone mapping and
//! foreground/background compositing.

use rayon::prelude::*;

use crate::envmap::{extract_perspective, EquirectEnv, ViewSpec};
use crate::error::Error;
use crate::irradiance::DiffuseLightMap;
use crate::raster::LdrImage;

/// Display-referred capture plus its foreground mask.
#[derive(Debug, Clone)]
pub struct CameraFrame {
    pub image: LdrImage,
    /// Per-pixel alpha in [0, 1], same dimensions as the image.
    pub alpha: Vec<f32>,
}

impl CameraFrame {
    pub fn new(image: LdrImage, alpha: Vec<f32>) -> Result<Self, Error> {
        if alpha.len() != image.width * image.height {
            return Err(Error::ShapeMismatch(format!(
                "mask length {} does not match {}x{}",
                alpha.len(),
                image.width,
                image.height
            )));
        }
        Ok(Self { image, alpha })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ShadingParams {
    pub s1: f32,
    pub s2: f32,
    pub gray_weights: [f32; 3],
    pub low_sat_mix: (f32, f32),
    pub low_sat_offset: f32,
}

impl Default for ShadingParams {
    fn default() -> Self {
        Self {
            s1: 0.29,
            s2: 0.38,
            // Rec. 709 luma.
            gray_weights: [0.2126, 0.7152, 0.0722],
            low_sat_mix: (0.6, 0.4),
            low_sat_offset: 0.05,
        }
    }
}

/// Relit foreground, linear RGB clamped to [0, 1].
#[derive(Debug, Clone)]
pub struct RelitFrame {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

/// Piecewise sRGB-style decode from 8-bit codes to linear [0, 1].
#[inline]
pub fn decode_display(code: u8) -> f32 {
    let x = code as f32 / 255.0;
    if x <= 0.04045 {
        x / 12.92
    } else {
        ((x + 0.055) / 1.055).powf(2.4)
    }
}

/// Inverse of [`decode_display`], to 8-bit codes (nearest).
#[inline]
pub fn encode_display(v: f32) -> u8 {
    let v = v.clamp(0.0, 1.0);
    let x = if v <= 0.0031308 {
        v * 12.92
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    };
    (x * 255.0).round() as u8
}

/// Decode a 3-channel LDR image to linear floats.
pub fn linearize(img: &LdrImage) -> Vec<f32> {
    img.codes.iter().map(|&c| decode_display(c)).collect()
}

/// I_lowS = 0.6 * I + 0.4 * gray(I) + 0.05, suppressing the input
/// lighting's hue before multiplication with the diffuse light map.
pub fn low_saturation(linear: &[f32], params: &ShadingParams) -> Vec<f32> {
    let [wr, wg, wb] = params.gray_weights;
    let (a, b) = params.low_sat_mix;
    let off = params.low_sat_offset;
    let mut out = vec![0.0f32; linear.len()];
    for (dst, src) in out.chunks_exact_mut(3).zip(linear.chunks_exact(3)) {
        let gray = wr * src[0] + wg * src[1] + wb * src[2];
        for c in 0..3 {
            dst[c] = a * src[c] + b * gray + off;
        }
    }
    out
}

/// The shading equation R = s1 * I + s2 * I_lowS (x) D, clamped to [0, 1].
/// Pixels whose normals were invalid carry D = 0 and pass through dimmed.
pub fn shade(
    linear: &[f32],
    low_sat: &[f32],
    light: &DiffuseLightMap,
    params: &ShadingParams,
) -> Result<RelitFrame, Error> {
    let n = light.width * light.height * 3;
    if linear.len() != n || low_sat.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "shade inputs disagree: I={}, I_lowS={}, D={}",
            linear.len(),
            low_sat.len(),
            n
        )));
    }
    let (s1, s2) = (params.s1, params.s2);
    let mut values = vec![0.0f32; n];
    values
        .par_chunks_mut(light.width * 3)
        .enumerate()
        .for_each(|(y, row)| {
            let base = y * light.width * 3;
            for i in 0..row.len() {
                let j = base + i;
                row[i] = (s1 * linear[j] + s2 * low_sat[j] * light.values[j]).clamp(0.0, 1.0);
            }
        });
    Ok(RelitFrame {
        width: light.width,
        height: light.height,
        values,
    })
}

/// Perspective background: exposure scale, x/(1+x) tone map, display encode.
pub fn render_background(
    env: &EquirectEnv,
    view: &ViewSpec,
    exposure: f32,
) -> Result<LdrImage, Error> {
    let hdr = extract_perspective(env, view)?;
    let mut img = LdrImage::new(view.width, view.height, 3)?;
    for (dst, src) in img.codes.iter_mut().zip(&hdr.pixels) {
        let x = src * exposure;
        *dst = encode_display(x / (1.0 + x));
    }
    Ok(img)
}

/// out = alpha * encode(R) + (1 - alpha) * B, rounded to the nearest code.
pub fn composite(relit: &RelitFrame, alpha: &[f32], background: &LdrImage) -> Result<LdrImage, Error> {
    if background.width != relit.width
        || background.height != relit.height
        || background.channels != 3
        || alpha.len() != relit.width * relit.height
    {
        return Err(Error::ShapeMismatch(format!(
            "composite inputs disagree: relit {}x{}, background {}x{}x{}, mask {}",
            relit.width,
            relit.height,
            background.width,
            background.height,
            background.channels,
            alpha.len()
        )));
    }
    let mut out = LdrImage::new(relit.width, relit.height, 3)?;
    for p in 0..relit.width * relit.height {
        let a = alpha[p].clamp(0.0, 1.0);
        for c in 0..3 {
            let fg = encode_display(relit.values[p * 3 + c]) as f32;
            let bg = background.codes[p * 3 + c] as f32;
            out.codes[p * 3 + c] = (a * fg + (1.0 - a) * bg).round() as u8;
        }
    }
    Ok(out)
}
