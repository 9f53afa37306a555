//! Temporal-stability and image-agreement metrics. The flicker score is an
//! L1 inter-frame difference inside the mask: a simple proxy that is
//! monotone in visible flicker, not a perceptual metric.

use crate::error::Error;
use crate::relight::RelitFrame;

#[derive(Debug, Clone)]
pub struct FlickerReport {
    /// Mean absolute inter-frame difference within the mask, one per step.
    pub per_step: Vec<f64>,
    pub mean: f64,
    pub max: f64,
}

impl FlickerReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, v) in self.per_step.iter().enumerate() {
            out.push_str(&format!("step\t{}\t{v:.6}\n", i + 1));
        }
        out.push_str(&format!("mean\t{:.6}\nmax\t{:.6}\n", self.mean, self.max));
        out
    }
}

pub fn flicker_score(frames: &[RelitFrame], masks: &[Vec<f32>]) -> Result<FlickerReport, Error> {
    if frames.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "flicker score needs at least 2 frames, got {}",
            frames.len()
        )));
    }
    if masks.len() != frames.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} masks for {} frames",
            masks.len(),
            frames.len()
        )));
    }
    let n = frames[0].width * frames[0].height;
    for (i, (f, m)) in frames.iter().zip(masks).enumerate() {
        if f.width != frames[0].width || f.height != frames[0].height || m.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "frame {i} shape disagrees with frame 0"
            )));
        }
    }
    let mut per_step = Vec::with_capacity(frames.len() - 1);
    for t in 1..frames.len() {
        let (a, b) = (&frames[t - 1], &frames[t]);
        let mut sum = 0.0f64;
        let mut count = 0.0f64;
        for p in 0..n {
            // A pixel counts when masked in both frames.
            if masks[t][p] > 0.0 && masks[t - 1][p] > 0.0 {
                for c in 0..3 {
                    sum += (a.values[p * 3 + c] - b.values[p * 3 + c]).abs() as f64;
                }
                count += 3.0;
            }
        }
        per_step.push(if count > 0.0 { sum / count } else { 0.0 });
    }
    let mean = per_step.iter().sum::<f64>() / per_step.len() as f64;
    let max = per_step.iter().cloned().fold(0.0f64, f64::max);
    Ok(FlickerReport {
        per_step,
        mean,
        max,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct ImageStats {
    pub max_abs_diff: f64,
    pub rms: f64,
    /// Peak 1.0; `f64::INFINITY` for identical images.
    pub psnr: f64,
}

pub fn image_stats(a: &[f32], b: &[f32]) -> Result<ImageStats, Error> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "image buffers of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let mut max_abs = 0.0f64;
    let mut se = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let d = (x - y).abs() as f64;
        max_abs = max_abs.max(d);
        se += d * d;
    }
    let mse = se / a.len() as f64;
    let rms = mse.sqrt();
    let psnr = if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * mse.log10()
    };
    Ok(ImageStats {
        max_abs_diff: max_abs,
        rms,
        psnr,
    })
}
