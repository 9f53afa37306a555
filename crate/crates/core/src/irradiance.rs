//! Diffuse irradiance pre-integration.
//!
//! The environment is convolved with the normalized clamped-cosine kernel:
//! E(n) = (1/pi) * sum over env texels of L(w) * max(w . n, 0) * dA, with
//! dA = (2pi/W)(pi/H) sin(theta). A constant environment is a fixed point of
//! the kernel, so irradiance stays in the same units as the source radiance.

use rayon::prelude::*;

use crate::envmap::{
    equirect_uv_to_dir, face_texel_dir, rotate_yaw, sample_cubemap, normalize, Cubemap, EquirectEnv,
};
use crate::error::Error;
use crate::raster::NormalMap;

/// Cubemap of cosine-convolved irradiance per texel direction.
#[derive(Debug, Clone)]
pub struct IrradianceCubemap {
    pub cubemap: Cubemap,
    /// Yaw baked into the source environment when prefiltering.
    pub yaw_deg: f32,
}

/// Per-pixel RGB irradiance aligned with the camera frame.
#[derive(Debug, Clone)]
pub struct DiffuseLightMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
    pub valid: Vec<bool>,
}

impl DiffuseLightMap {
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.values[i], self.values[i + 1], self.values[i + 2]]
    }
}

pub const DEFAULT_FACE_SIZE: usize = 32;
pub const DEFAULT_SOURCE_HEIGHT: usize = 64;

/// Exact discrete cosine convolution over every source texel. Deterministic;
/// cost is O(6 * face_size^2 * W * H), so callers downsample the source
/// first (see [`EquirectEnv::downsample_to_height`]).
pub fn prefilter_diffuse(env: &EquirectEnv, face_size: usize) -> Result<IrradianceCubemap, Error> {
    if face_size < 4 {
        return Err(Error::InvalidInput(format!(
            "irradiance face_size must be >= 4, got {face_size}"
        )));
    }
    let (w, h) = (env.image.width, env.image.height);

    // Precompute source texel directions and solid-angle weights.
    let mut dirs = vec![[0.0f32; 3]; w * h];
    let mut weights = vec![0.0f32; w * h];
    let d_omega = (std::f64::consts::TAU / w as f64) * (std::f64::consts::PI / h as f64);
    for y in 0..h {
        let v = (y as f32 + 0.5) / h as f32;
        let sin_theta = (v as f64 * std::f64::consts::PI).sin();
        for x in 0..w {
            let u = (x as f32 + 0.5) / w as f32;
            dirs[y * w + x] = equirect_uv_to_dir(u, v);
            weights[y * w + x] = (d_omega * sin_theta) as f32;
        }
    }

    let n = face_size;
    let mut cube = Cubemap::new(n);
    cube.data
        .par_chunks_mut(n * n * 3)
        .enumerate()
        .for_each(|(face, chunk)| {
            for ty in 0..n {
                let b = 2.0 * (ty as f32 + 0.5) / n as f32 - 1.0;
                for tx in 0..n {
                    let a = 2.0 * (tx as f32 + 0.5) / n as f32 - 1.0;
                    let normal = face_texel_dir(face, a, b);
                    let mut acc = [0.0f64; 3];
                    for p in 0..w * h {
                        let d = dirs[p];
                        let cosine =
                            d[0] * normal[0] + d[1] * normal[1] + d[2] * normal[2];
                        if cosine <= 0.0 {
                            continue;
                        }
                        let wgt = (cosine * weights[p]) as f64;
                        let px = &env.image.pixels[p * 3..p * 3 + 3];
                        acc[0] += px[0] as f64 * wgt;
                        acc[1] += px[1] as f64 * wgt;
                        acc[2] += px[2] as f64 * wgt;
                    }
                    let i = (ty * n + tx) * 3;
                    for c in 0..3 {
                        chunk[i + c] = (acc[c] / std::f64::consts::PI) as f32;
                    }
                }
            }
        });
    Ok(IrradianceCubemap {
        cubemap: cube,
        yaw_deg: env.rotation_deg,
    })
}

/// Convenience wrapper applying the default source downsample before
/// prefiltering; this is what the frame pipeline uses.
pub fn prefilter_diffuse_default(env: &EquirectEnv, face_size: usize) -> Result<IrradianceCubemap, Error> {
    // The prefilter works on the rotated environment, so bake the yaw in by
    // sampling; downsample first keeps that cheap.
    let small = env.downsample_to_height(DEFAULT_SOURCE_HEIGHT);
    if small.rotation_deg == 0.0 {
        return prefilter_diffuse(&small, face_size);
    }
    // Rotate by resampling at texel centers.
    let (w, h) = (small.image.width, small.image.height);
    let mut rotated = small.image.clone();
    for y in 0..h {
        let v = (y as f32 + 0.5) / h as f32;
        for x in 0..w {
            let u = (x as f32 + 0.5) / w as f32;
            let d = equirect_uv_to_dir(u, v);
            rotated.set(x, y, small.sample(d));
        }
    }
    let mut irr = prefilter_diffuse(&EquirectEnv::new(rotated, 0.0)?, face_size)?;
    irr.yaw_deg = env.rotation_deg;
    Ok(irr)
}

/// Samples the irradiance cubemap with per-pixel camera-space normals,
/// mapped to world space by the camera yaw. Invalid pixels carry zero.
pub fn diffuse_light_map(
    irr: &IrradianceCubemap,
    normals: &NormalMap,
    world_from_camera_yaw: f32,
) -> DiffuseLightMap {
    let (w, h) = (normals.width, normals.height);
    let mut values = vec![0.0f32; w * h * 3];
    values
        .par_chunks_mut(w * 3)
        .enumerate()
        .for_each(|(y, row)| {
            for x in 0..w {
                let (n, valid) = normals.get(x, y);
                if !valid {
                    continue;
                }
                let d = rotate_yaw(normalize(n), world_from_camera_yaw);
                let rgb = sample_cubemap(&irr.cubemap, d);
                row[x * 3..x * 3 + 3].copy_from_slice(&rgb);
            }
        });
    DiffuseLightMap {
        width: w,
        height: h,
        values,
        valid: normals.valid.clone(),
    }
}

/// Mean irradiance over all texels, used for exposure normalization.
pub fn mean_irradiance(irr: &IrradianceCubemap) -> f32 {
    let sum: f64 = irr.cubemap.data.iter().map(|&v| v as f64).sum();
    (sum / irr.cubemap.data.len() as f64) as f32
}

/// Upper-hemisphere test environment: radiance `top` for y > 0, `bottom`
/// below. The analytic irradiance is top at +Y, bottom at -Y and their
/// midpoint at the horizon. Shared by unit, acceptance and sphere tests.
pub fn hemisphere_env(height: usize, top: f32, bottom: f32) -> EquirectEnv {
    let mut img = crate::raster::HdrImage::new(2 * height, height).expect("nonzero");
    for y in 0..height {
        let val = if (y as f32 + 0.5) / height as f32 <= 0.5 {
            top
        } else {
            bottom
        };
        for x in 0..2 * height {
            img.set(x, y, [val; 3]);
        }
    }
    EquirectEnv::new(img, 0.0).expect("2:1 aspect")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::HdrImage;

    #[test]
    fn constant_env_is_fixed_point() {
        let env = EquirectEnv::new(HdrImage::constant(64, 32, [1.0; 3]).unwrap(), 0.0).unwrap();
        let irr = prefilter_diffuse(&env, 8).unwrap();
        for v in &irr.cubemap.data {
            assert!((v - 1.0).abs() < 0.01, "texel {v}");
        }
    }

    #[test]
    fn hemisphere_analytic_values() {
        let env = hemisphere_env(64, 1.0, 0.0);
        let irr = prefilter_diffuse(&env, 16).unwrap();
        let up = sample_cubemap(&irr.cubemap, [0.0, 1.0, 0.0]);
        let down = sample_cubemap(&irr.cubemap, [0.0, -1.0, 0.0]);
        let side = sample_cubemap(&irr.cubemap, [0.0, 0.0, 1.0]);
        assert!((up[0] - 1.0).abs() < 0.02, "E(+Y) = {}", up[0]);
        assert!(down[0].abs() < 0.02, "E(-Y) = {}", down[0]);
        assert!((side[0] - 0.5).abs() < 0.02, "E(horizon) = {}", side[0]);
    }

    #[test]
    fn linear_in_environment() {
        let env = hemisphere_env(16, 2.0, 0.5);
        let mut scaled_img = env.image.clone();
        for v in &mut scaled_img.pixels {
            *v *= 3.0;
        }
        let scaled = EquirectEnv::new(scaled_img, 0.0).unwrap();
        let a = prefilter_diffuse(&env, 4).unwrap();
        let b = prefilter_diffuse(&scaled, 4).unwrap();
        for (x, y) in a.cubemap.data.iter().zip(&b.cubemap.data) {
            assert!((y - 3.0 * x).abs() <= 1e-5 * y.abs().max(1.0));
        }
    }

    #[test]
    fn energy_bounded_by_source_max() {
        let mut img = HdrImage::new(32, 16).unwrap();
        for y in 0..16 {
            for x in 0..32 {
                img.set(x, y, [((x * 31 + y * 17) % 97) as f32 / 10.0; 3]);
            }
        }
        let max_l = img.pixels.iter().cloned().fold(0.0f32, f32::max);
        let env = EquirectEnv::new(img, 0.0).unwrap();
        let irr = prefilter_diffuse(&env, 8).unwrap();
        let max_e = irr.cubemap.data.iter().cloned().fold(0.0f32, f32::max);
        assert!(max_e <= max_l * 1.01, "max E {max_e} vs max L {max_l}");
    }

    #[test]
    fn rotation_equivariance() {
        let env0 = hemisphere_env(32, 1.0, 0.1);
        // Make it azimuthally asymmetric.
        let mut img = env0.image.clone();
        for y in 0..img.height {
            for x in 0..img.width {
                let u = (x as f32 + 0.5) / img.width as f32;
                let mut px = img.get(x, y);
                for c in px.iter_mut() {
                    *c *= 1.0 + 0.5 * (std::f32::consts::TAU * u).sin();
                }
                img.set(x, y, px);
            }
        }
        let yaw = 90.0;
        let plain = prefilter_diffuse(&EquirectEnv::new(img.clone(), 0.0).unwrap(), 16).unwrap();
        let rotated = prefilter_diffuse_default(&EquirectEnv::new(img, yaw).unwrap(), 16).unwrap();
        // Sampling the rotated prefilter along d matches sampling the plain
        // prefilter along the counter-rotated direction.
        let mut se = 0.0f64;
        let mut count = 0;
        for i in 0..500 {
            let t = i as f32 / 500.0;
            let d = normalize([t.sin(), (t * 3.0).cos() * 0.8, (1.0 - t).max(0.05)]);
            let a = sample_cubemap(&rotated.cubemap, d)[0];
            let b = sample_cubemap(&plain.cubemap, rotate_yaw(d, -yaw))[0];
            se += ((a - b) as f64).powi(2);
            count += 1;
        }
        let rms = (se / count as f64).sqrt();
        assert!(rms < 0.02, "rotation equivariance RMS {rms}");
    }

    #[test]
    fn light_map_constant_cubemap() {
        let mut irr = IrradianceCubemap {
            cubemap: Cubemap::new(4),
            yaw_deg: 0.0,
        };
        for v in &mut irr.cubemap.data {
            *v = 0.75;
        }
        let mut normals = NormalMap::new(3, 3);
        for y in 0..3 {
            for x in 0..3 {
                normals.set(x, y, [0.0, 0.0, 1.0], (x + y) % 2 == 0);
            }
        }
        let d = diffuse_light_map(&irr, &normals, 123.0);
        for y in 0..3 {
            for x in 0..3 {
                let expected = if (x + y) % 2 == 0 { 0.75 } else { 0.0 };
                assert_eq!(d.get(x, y), [expected; 3]);
            }
        }
    }

    #[test]
    fn sphere_normals_match_analytic_clamped_cosine() {
        // Hemisphere light from above: E(n) depends only on n_y.
        // Analytic: with L=1 on the upper hemisphere,
        // E(n) = (1/pi) * integral over upper hemisphere of max(w.n, 0) dw.
        // For n at polar angle g from +Y this evaluates to... use the
        // Monte-Carlo oracle instead of a closed form.
        use rand::{Rng, SeedableRng};
        let env = hemisphere_env(64, 1.0, 0.0);
        let irr = prefilter_diffuse(&env, 16).unwrap();

        let size = 64usize;
        let mut normals = NormalMap::new(size, size);
        for y in 0..size {
            for x in 0..size {
                let px = (2.0 * (x as f32 + 0.5) / size as f32 - 1.0) * 1.0;
                let py = -(2.0 * (y as f32 + 0.5) / size as f32 - 1.0) * 1.0;
                let r2 = px * px + py * py;
                if r2 <= 1.0 {
                    normals.set(x, y, [px, py, (1.0 - r2).sqrt()], true);
                }
            }
        }
        let d = diffuse_light_map(&irr, &normals, 0.0);

        // Monte-Carlo oracle for E(n) under the upper-hemisphere env.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let samples: Vec<[f32; 3]> = (0..200_000)
            .map(|_| {
                loop {
                    let v = [
                        rng.gen_range(-1.0f32..1.0),
                        rng.gen_range(-1.0f32..1.0),
                        rng.gen_range(-1.0f32..1.0),
                    ];
                    let n2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
                    if n2 > 1e-4 && n2 <= 1.0 {
                        break normalize(v);
                    }
                }
            })
            .collect();
        let oracle = |n: [f32; 3]| -> f32 {
            // E = (1/pi) * mean(L * cos+) * 4pi / 2 ... derive via uniform
            // sphere sampling: E = (1/pi) * 4pi * mean over sphere of
            // L(w) max(w.n,0) = 4 * mean.
            let mean: f64 = samples
                .iter()
                .map(|w| {
                    if w[1] > 0.0 {
                        (w[0] * n[0] + w[1] * n[1] + w[2] * n[2]).max(0.0) as f64
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
                / samples.len() as f64;
            (4.0 * mean) as f32
        };

        let mut se = 0.0f64;
        let mut count = 0;
        for y in (0..size).step_by(7) {
            for x in (0..size).step_by(7) {
                let (n, valid) = normals.get(x, y);
                if !valid {
                    continue;
                }
                let got = d.get(x, y)[0];
                let want = oracle(n);
                se += ((got - want) as f64).powi(2);
                count += 1;
            }
        }
        let rms = (se / count as f64).sqrt();
        assert!(rms < 0.03, "analytic light-map RMS {rms}");
    }
}
