//! Normal-map file codec.
//!
//! Two containers are accepted: color PFM holding raw camera-space vectors,
//! and 16-bit P6 with the (v+1)/2 integer mapping. Decoded vectors are
//! renormalized when their norm is within 1e-2 of unit; near-zero vectors are
//! flagged invalid rather than emitted as garbage directions.

use crate::error::Error;
use crate::io::pnm;
use crate::raster::NormalMap;

const ZERO_NORM: f32 = 1e-3;
const RENORM_TOL: f32 = 1e-2;

fn classify(v: [f32; 3]) -> ([f32; 3], bool) {
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if norm < ZERO_NORM || (norm - 1.0).abs() > RENORM_TOL {
        return ([0.0; 3], false);
    }
    ([v[0] / norm, v[1] / norm, v[2] / norm], true)
}

pub fn read_normal_map(bytes: &[u8]) -> Result<NormalMap, Error> {
    let (width, height, vectors) = if bytes.starts_with(b"PF") {
        pnm::read_pfm(bytes)?
    } else {
        let (w, h, samples) = pnm::read_p6_16(bytes)?;
        let vectors = samples
            .iter()
            .map(|&s| s as f32 / 65535.0 * 2.0 - 1.0)
            .collect();
        (w, h, vectors)
    };
    let mut map = NormalMap::new(width, height);
    for p in 0..width * height {
        let v = [vectors[p * 3], vectors[p * 3 + 1], vectors[p * 3 + 2]];
        let (n, valid) = classify(v);
        map.vectors[p * 3..p * 3 + 3].copy_from_slice(&n);
        map.valid[p] = valid;
    }
    Ok(map)
}

/// Writes the 16-bit integer container. Invalid pixels encode as the zero
/// vector, which decodes back to an invalid flag.
pub fn write_normal_map(map: &NormalMap) -> Vec<u8> {
    let samples: Vec<u16> = (0..map.width * map.height)
        .flat_map(|p| {
            let v = if map.valid[p] {
                [
                    map.vectors[p * 3],
                    map.vectors[p * 3 + 1],
                    map.vectors[p * 3 + 2],
                ]
            } else {
                [0.0; 3]
            };
            v.map(|c| (((c + 1.0) / 2.0) * 65535.0).round().clamp(0.0, 65535.0) as u16)
        })
        .collect();
    pnm::write_p6_16(map.width, map.height, &samples)
}

/// Raw float container; preserves vectors exactly.
pub fn write_normal_map_pfm(map: &NormalMap) -> Vec<u8> {
    let mut vectors = map.vectors.clone();
    for (p, valid) in map.valid.iter().enumerate() {
        if !valid {
            vectors[p * 3..p * 3 + 3].copy_from_slice(&[0.0; 3]);
        }
    }
    pnm::write_pfm(map.width, map.height, &vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_vector_round_trips() {
        let mut map = NormalMap::new(1, 1);
        map.set(0, 0, [0.0, 0.0, 1.0], true);
        let back = read_normal_map(&write_normal_map(&map)).unwrap();
        let (n, valid) = back.get(0, 0);
        assert!(valid);
        for c in 0..3 {
            assert!((n[c] - [0.0, 0.0, 1.0][c]).abs() <= 2.0 / 65535.0);
        }
    }

    #[test]
    fn zero_vector_decodes_invalid() {
        let mut map = NormalMap::new(1, 1);
        map.set(0, 0, [0.0, 0.0, 0.0], false);
        let back = read_normal_map(&write_normal_map(&map)).unwrap();
        assert!(!back.get(0, 0).1);
    }

    #[test]
    fn random_unit_vectors_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let (w, h) = (32, 32);
        let mut map = NormalMap::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let v: [f32; 3] = [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0f32),
                ];
                let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if norm < 0.1 {
                    map.set(x, y, [0.0, 0.0, 1.0], true);
                } else {
                    map.set(x, y, [v[0] / norm, v[1] / norm, v[2] / norm], true);
                }
            }
        }
        let back = read_normal_map(&write_normal_map(&map)).unwrap();
        for p in 0..w * h {
            assert!(back.valid[p]);
            for c in 0..3 {
                let err = (back.vectors[p * 3 + c] - map.vectors[p * 3 + c]).abs();
                assert!(err <= 2.0 / 65535.0, "component error {err}");
            }
        }
    }

    #[test]
    fn pfm_container_accepted() {
        let mut map = NormalMap::new(2, 2);
        let s = (1.0f32 / 3.0).sqrt();
        for y in 0..2 {
            for x in 0..2 {
                map.set(x, y, [s, s, s], true);
            }
        }
        let back = read_normal_map(&write_normal_map_pfm(&map)).unwrap();
        assert_eq!(back.valid, map.valid);
        for (a, b) in back.vectors.iter().zip(&map.vectors) {
            assert!((a - b).abs() <= 1e-6);
        }
    }

    #[test]
    fn decoded_valid_vectors_are_unit() {
        let mut map = NormalMap::new(8, 1);
        for x in 0..8 {
            map.set(x, 0, [1.0, 0.0, 0.0], true);
        }
        let back = read_normal_map(&write_normal_map(&map)).unwrap();
        for p in 0..8 {
            let n = &back.vectors[p * 3..p * 3 + 3];
            let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            assert!((norm - 1.0).abs() <= 1e-3);
        }
    }
}
