//! HDR10 perceptual-quantizer transfer functions (SMPTE ST 2084) and the
//! 8-bit quantization used to move HDR rasters through 8-bit channels.
//!
//! Evaluation is done in f64 even though rasters are f32, so the code
//! round-trip holds on all 256 codes.

use rayon::prelude::*;

use crate::error::Error;
use crate::raster::{HdrImage, QuantizedHdrImage};

pub const M1: f64 = 0.1593017578125;
pub const M2: f64 = 78.84375;
pub const C1: f64 = 0.8359375;
pub const C2: f64 = 18.8515625;
pub const C3: f64 = 18.6875;

/// Quantization scale mapping the nonlinear value to 8-bit codes.
/// Chosen so that 200,000 cd/m² lands on code 255.
pub const SCALE: f64 = 198.0;

/// Luminance at nonlinear value 1.0, cd/m².
pub const PEAK_LUMINANCE: f64 = 10000.0;

// floor() guard: rasters store f32 luminance, so a dequantized code comes
// back with up to ~6e-8 relative error, which maps to at most ~1e-5 in
// scaled nonlinear units and can land an exact code just below the integer
// boundary. 1e-4 absorbs that while leaving real code boundaries intact.
const QUANT_EPS: f64 = 1e-4;

/// PQ inverse EOTF: linear luminance (cd/m²) to nonlinear value.
pub fn pq_inverse_eotf(f_d: f64) -> Result<f64, Error> {
    if !f_d.is_finite() || f_d < 0.0 {
        return Err(Error::InvalidInput(format!(
            "luminance must be finite and non-negative, got {f_d}"
        )));
    }
    let y = f_d / PEAK_LUMINANCE;
    let yp = y.powf(M1);
    Ok(((C1 + C2 * yp) / (1.0 + C3 * yp)).powf(M2))
}

/// PQ EOTF: nonlinear value to linear luminance (cd/m²).
pub fn pq_eotf(e: f64) -> Result<f64, Error> {
    if !e.is_finite() || e < 0.0 {
        return Err(Error::InvalidInput(format!(
            "nonlinear value must be finite and non-negative, got {e}"
        )));
    }
    let ep = e.powf(1.0 / M2);
    let den = C2 - C3 * ep;
    if den <= 0.0 {
        return Err(Error::OutOfDomain(format!(
            "nonlinear value {e} is above the encodable range"
        )));
    }
    let num = (ep - C1).max(0.0);
    Ok(PEAK_LUMINANCE * (num / den).powf(1.0 / M1))
}

#[inline]
fn quantize_channel(f_d: f64) -> u8 {
    // Input rasters are validated, so the inverse EOTF cannot fail here.
    let e = pq_inverse_eotf(f_d).expect("validated radiance");
    let code = (SCALE * e + QUANT_EPS).floor();
    code.clamp(0.0, 255.0) as u8
}

#[inline]
fn dequantize_channel(code: u8) -> f32 {
    // Codes 0..=255 map to nonlinear values <= 255/198, well inside the
    // EOTF domain.
    pq_eotf(code as f64 / SCALE).expect("code in domain") as f32
}

/// Per-channel PQ encode then truncating 8-bit quantization.
/// Luminance above 200,000 cd/m² saturates at code 255.
pub fn quantize_hdr(img: &HdrImage) -> QuantizedHdrImage {
    let mut codes = vec![0u8; img.pixels.len()];
    codes
        .par_chunks_mut(img.width * 3)
        .zip(img.pixels.par_chunks(img.width * 3))
        .for_each(|(dst, src)| {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = quantize_channel(*s as f64);
            }
        });
    QuantizedHdrImage {
        width: img.width,
        height: img.height,
        codes,
    }
}

/// Inverse of [`quantize_hdr`] up to the 8-bit code envelope.
pub fn dequantize_hdr(img: &QuantizedHdrImage) -> HdrImage {
    let mut pixels = vec![0.0f32; img.codes.len()];
    pixels
        .par_chunks_mut(img.width * 3)
        .zip(img.codes.par_chunks(img.width * 3))
        .for_each(|(dst, src)| {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = dequantize_channel(*s);
            }
        });
    HdrImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_eotf_fixed_points() {
        // c1 + c2 = 1 + c3 forces the ratio to 1 at 10,000 cd/m².
        assert_eq!(pq_inverse_eotf(10000.0).unwrap(), 1.0);
        // 0.8359375^78.84375, evaluated at extended precision.
        let at_zero = pq_inverse_eotf(0.0).unwrap();
        assert!((at_zero - 7.3095590e-7).abs() < 1e-12, "got {at_zero}");
        // Y = 20; this is what makes scale=198 map 200,000 cd/m² to 255.
        let at_max = pq_inverse_eotf(200_000.0).unwrap();
        assert!((at_max - 1.2889570130).abs() < 1e-9, "got {at_max}");
        assert!(SCALE * at_max > 255.0);
    }

    #[test]
    fn eotf_fixed_points() {
        assert_eq!(pq_eotf(0.0).unwrap(), 0.0);
        let peak = pq_eotf(1.0).unwrap();
        assert!((peak - 10000.0).abs() < 1e-6, "got {peak}");
    }

    #[test]
    fn invalid_inputs_rejected() {
        assert!(pq_inverse_eotf(-1.0).is_err());
        assert!(pq_inverse_eotf(f64::NAN).is_err());
        assert!(pq_inverse_eotf(f64::INFINITY).is_err());
        // Denominator goes non-positive only far above the encodable range.
        assert!(pq_eotf(2.5).is_err());
        assert!(pq_eotf(255.0 / SCALE).is_ok());
    }

    #[test]
    fn round_trip_selected_luminances() {
        for x in [1.0, 100.0, 5000.0, 150_000.0] {
            let back = pq_eotf(pq_inverse_eotf(x).unwrap()).unwrap();
            assert!((back - x).abs() / x < 1e-9, "x={x} back={back}");
        }
    }

    #[test]
    fn monotone_on_dense_grid() {
        let mut prev_e = -1.0;
        for i in 0..=4000 {
            let f_d = 200_000.0 * (i as f64 / 4000.0).powi(3);
            let e = pq_inverse_eotf(f_d).unwrap();
            assert!(e > prev_e || (i == 0 && e >= 0.0));
            prev_e = e;
        }
        let mut prev_l = -1.0;
        for i in 0..=4000 {
            let e = 1.28 * i as f64 / 4000.0;
            let l = pq_eotf(e).unwrap();
            assert!(l >= prev_l);
            prev_l = l;
        }
    }

    #[test]
    fn quantize_fixed_points() {
        let img = HdrImage::constant(4, 2, [10000.0; 3]).unwrap();
        assert!(quantize_hdr(&img).codes.iter().all(|&c| c == 198));

        let img = HdrImage::constant(4, 2, [200_000.0; 3]).unwrap();
        assert!(quantize_hdr(&img).codes.iter().all(|&c| c == 255));

        let img = HdrImage::constant(4, 2, [0.0; 3]).unwrap();
        assert!(quantize_hdr(&img).codes.iter().all(|&c| c == 0));

        // Saturation above the nominal maximum.
        let img = HdrImage::constant(1, 1, [1.0e6; 3]).unwrap();
        assert!(quantize_hdr(&img).codes.iter().all(|&c| c == 255));
    }

    #[test]
    fn code_round_trip_all_256() {
        let codes: Vec<u8> = (0..=255u16).flat_map(|c| [c as u8; 3]).collect();
        let q = QuantizedHdrImage {
            width: 16,
            height: 16,
            codes,
        };
        let back = quantize_hdr(&dequantize_hdr(&q));
        assert_eq!(back, q);
    }

    #[test]
    fn dequantize_fixed_points() {
        let q = QuantizedHdrImage {
            width: 2,
            height: 1,
            codes: vec![198; 6],
        };
        for v in dequantize_hdr(&q).pixels {
            assert!((v - 10000.0).abs() < 1e-2);
        }
        let q = QuantizedHdrImage {
            width: 2,
            height: 1,
            codes: vec![0; 6],
        };
        assert!(dequantize_hdr(&q).pixels.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn quantization_error_envelope() {
        // dequantize(quantize(x)) must land inside the code's luminance bin.
        for i in 0..2000 {
            let x = 200_000.0 * ((i as f64 + 0.5) / 2000.0).powi(4);
            let d = quantize_channel(x);
            let lo = pq_eotf(d as f64 / SCALE).unwrap();
            let hi = if d == 255 {
                f64::INFINITY
            } else {
                pq_eotf((d as f64 + 1.0) / SCALE).unwrap()
            };
            assert!(
                x >= lo * (1.0 - 1e-6) && x <= hi * (1.0 + 1e-6),
                "x={x} d={d} bin=[{lo},{hi}]"
            );
        }
    }

    #[test]
    fn channels_independent() {
        let img = HdrImage::from_pixels(1, 1, vec![50.0, 7000.0, 123_456.0]).unwrap();
        let q = quantize_hdr(&img);
        let mut swapped = img.clone();
        swapped.pixels.swap(0, 2);
        let qs = quantize_hdr(&swapped);
        assert_eq!(q.codes[0], qs.codes[2]);
        assert_eq!(q.codes[2], qs.codes[0]);
        assert_eq!(q.codes[1], qs.codes[1]);
    }
}
