//! Average temporal filter over the three most recent normal maps.
//!
//! The plain mean of unit vectors is not unit, and the cubemap sampler wants
//! directions, so the mean is renormalized by default (configurable). Pixels
//! whose mean collapses toward zero are flagged invalid instead of being
//! emitted as garbage directions.

use std::collections::VecDeque;

use crate::error::Error;
use crate::raster::NormalMap;

const WINDOW: usize = 3;
const ZERO_GUARD: f32 = 1e-4;

#[derive(Debug, Clone)]
pub struct NormalHistory {
    buffer: VecDeque<NormalMap>,
    pub renormalize: bool,
    pub frames_seen: u64,
}

impl Default for NormalHistory {
    fn default() -> Self {
        Self::new(true)
    }
}

impl NormalHistory {
    pub fn new(renormalize: bool) -> Self {
        Self {
            buffer: VecDeque::with_capacity(WINDOW),
            renormalize,
            frames_seen: 0,
        }
    }

    /// Pushes the newest map and returns the filtered result. Warm-up frames
    /// average over however many maps exist, so the first output equals the
    /// first input.
    pub fn push_and_filter(&mut self, n_t: NormalMap) -> Result<NormalMap, Error> {
        if let Some(prev) = self.buffer.back() {
            if prev.width != n_t.width || prev.height != n_t.height {
                return Err(Error::ShapeMismatch(format!(
                    "normal map {}x{} does not match history {}x{}",
                    n_t.width, n_t.height, prev.width, prev.height
                )));
            }
        }
        if self.buffer.len() == WINDOW {
            self.buffer.pop_front();
        }
        self.buffer.push_back(n_t);
        self.frames_seen += 1;

        let newest = self.buffer.back().expect("just pushed");
        let (w, h) = (newest.width, newest.height);
        let mut out = NormalMap::new(w, h);
        for p in 0..w * h {
            let mut acc = [0.0f32; 3];
            let mut count = 0u32;
            for map in &self.buffer {
                if map.valid[p] {
                    acc[0] += map.vectors[p * 3];
                    acc[1] += map.vectors[p * 3 + 1];
                    acc[2] += map.vectors[p * 3 + 2];
                    count += 1;
                }
            }
            if count == 0 {
                continue; // stays invalid
            }
            let mut mean = acc.map(|v| v / count as f32);
            let norm = (mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2]).sqrt();
            if norm < ZERO_GUARD {
                continue; // opposite normals cancelled out
            }
            if self.renormalize {
                mean = mean.map(|v| v / norm);
            }
            out.vectors[p * 3..p * 3 + 3].copy_from_slice(&mean);
            out.valid[p] = true;
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: [f32; 3], w: usize, h: usize) -> NormalMap {
        let mut map = NormalMap::new(w, h);
        for y in 0..h {
            for x in 0..w {
                map.set(x, y, n, true);
            }
        }
        map
    }

    #[test]
    fn constant_sequence_is_fixed_point() {
        let n = [0.0, 0.6, 0.8];
        let mut hist = NormalHistory::default();
        for _ in 0..5 {
            let out = hist.push_and_filter(uniform(n, 4, 4)).unwrap();
            let (got, valid) = out.get(2, 2);
            assert!(valid);
            for c in 0..3 {
                assert!((got[c] - n[c]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn axis_triple_renormalizes_to_diagonal() {
        let mut hist = NormalHistory::default();
        hist.push_and_filter(uniform([1.0, 0.0, 0.0], 1, 1)).unwrap();
        hist.push_and_filter(uniform([0.0, 1.0, 0.0], 1, 1)).unwrap();
        let out = hist.push_and_filter(uniform([0.0, 0.0, 1.0], 1, 1)).unwrap();
        let (n, valid) = out.get(0, 0);
        assert!(valid);
        let s = 1.0 / 3.0f32.sqrt();
        for c in 0..3 {
            assert!((n[c] - s).abs() < 1e-6, "got {n:?}");
        }
    }

    #[test]
    fn warm_up_passes_first_frame_through() {
        let mut hist = NormalHistory::default();
        let out = hist.push_and_filter(uniform([0.0, 0.0, 1.0], 2, 2)).unwrap();
        assert_eq!(out.get(1, 1).0, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn opposite_normals_flagged_invalid() {
        let mut hist = NormalHistory::default();
        hist.push_and_filter(uniform([1.0, 0.0, 0.0], 1, 1)).unwrap();
        let out = hist.push_and_filter(uniform([-1.0, 0.0, 0.0], 1, 1)).unwrap();
        assert!(!out.get(0, 0).1);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut hist = NormalHistory::default();
        hist.push_and_filter(uniform([0.0, 0.0, 1.0], 2, 2)).unwrap();
        assert!(hist.push_and_filter(uniform([0.0, 0.0, 1.0], 3, 2)).is_err());
    }

    #[test]
    fn window_is_three_frames() {
        // After four pushes the first frame must no longer contribute.
        let mut hist = NormalHistory::new(false);
        hist.push_and_filter(uniform([1.0, 0.0, 0.0], 1, 1)).unwrap();
        for _ in 0..2 {
            hist.push_and_filter(uniform([0.0, 0.0, 1.0], 1, 1)).unwrap();
        }
        let out = hist.push_and_filter(uniform([0.0, 0.0, 1.0], 1, 1)).unwrap();
        assert_eq!(out.get(0, 0).0, [0.0, 0.0, 1.0]);
    }

    #[test]
    fn shift_invariance() {
        let seq = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.6, 0.8, 0.0],
            [0.0, 0.6, 0.8],
        ];
        let mut h1 = NormalHistory::default();
        let out1: Vec<NormalMap> = seq
            .iter()
            .map(|n| h1.push_and_filter(uniform(*n, 1, 1)).unwrap())
            .collect();
        let mut h2 = NormalHistory::default();
        let out2: Vec<NormalMap> = seq[1..]
            .iter()
            .map(|n| h2.push_and_filter(uniform(*n, 1, 1)).unwrap())
            .collect();
        // Once both histories are saturated the shifted outputs coincide.
        assert_eq!(out1[4], out2[3]);
    }

    #[test]
    fn variance_attenuated_by_three() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let (w, h) = (512, 256); // >= 10^5 pixels
        let base = [0.0f32, 0.0, 1.0];
        let sigma = 0.05f32;
        let gauss = |rng: &mut rand_chacha::ChaCha8Rng| -> f32 {
            // Box-Muller.
            let u1: f32 = rng.gen_range(1e-7..1.0);
            let u2: f32 = rng.gen_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (std::f32::consts::TAU * u2).cos()
        };
        let jittered = |rng: &mut rand_chacha::ChaCha8Rng| -> NormalMap {
            let mut map = NormalMap::new(w, h);
            for p in 0..w * h {
                let v = [
                    base[0] + sigma * gauss(rng),
                    base[1] + sigma * gauss(rng),
                    base[2] + sigma * gauss(rng),
                ];
                map.vectors[p * 3..p * 3 + 3].copy_from_slice(&v);
                map.valid[p] = true;
            }
            map
        };
        // No renormalization: measure the raw mean's variance.
        let mut hist = NormalHistory::new(false);
        hist.push_and_filter(jittered(&mut rng)).unwrap();
        hist.push_and_filter(jittered(&mut rng)).unwrap();
        let out = hist.push_and_filter(jittered(&mut rng)).unwrap();
        let mut var = 0.0f64;
        for p in 0..w * h {
            let dx = (out.vectors[p * 3] - base[0]) as f64;
            var += dx * dx;
        }
        var /= (w * h) as f64;
        let expected = (sigma as f64 * sigma as f64) / 3.0;
        assert!(
            (var - expected).abs() / expected < 0.10,
            "var {var}, expected {expected}"
        );
    }
}
