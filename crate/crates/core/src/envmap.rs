//! Equirectangular environment geometry: direction mapping, bilinear
//! sampling with yaw rotation, cubemap conversion, perspective extraction
//! and the stratified perspective augmentation.
//!
//! Conventions shared by every module:
//! - +Y is up, +Z is forward, +X is right.
//! - u maps azimuth measured from +Z increasing toward +X, u=0.5 is forward.
//! - v maps the polar angle from +Y, v=0 is the zenith.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Error;
use crate::raster::HdrImage;

pub type Direction = [f32; 3];

/// Debug-build counter of environment texel fetches, so the frame loop can
/// assert it performs no environment-sized work.
#[cfg(debug_assertions)]
pub mod instrument {
    use std::sync::atomic::{AtomicU64, Ordering};

    pub(super) static ENV_TEXEL_FETCHES: AtomicU64 = AtomicU64::new(0);

    pub fn env_fetches() -> u64 {
        ENV_TEXEL_FETCHES.load(Ordering::Relaxed)
    }
}

#[inline]
pub fn normalize(v: Direction) -> Direction {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

#[inline]
pub fn dot(a: Direction, b: Direction) -> f32 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Rotation about +Y by `deg`; positive angles carry +Z toward +X.
#[inline]
pub fn rotate_yaw(d: Direction, deg: f32) -> Direction {
    let (s, c) = (deg.to_radians()).sin_cos();
    [d[0] * c + d[2] * s, d[1], -d[0] * s + d[2] * c]
}

#[inline]
fn rotate_pitch(d: Direction, deg: f32) -> Direction {
    // About +X; positive pitch carries +Z toward +Y (look up).
    let (s, c) = (deg.to_radians()).sin_cos();
    [d[0], d[1] * c + d[2] * s, -d[1] * s + d[2] * c]
}

#[inline]
fn rotate_roll(d: Direction, deg: f32) -> Direction {
    // About +Z.
    let (s, c) = (deg.to_radians()).sin_cos();
    [d[0] * c - d[1] * s, d[0] * s + d[1] * c, d[2]]
}

pub fn equirect_uv_to_dir(u: f32, v: f32) -> Direction {
    let theta = v * std::f32::consts::PI;
    let phi = (u - 0.5) * std::f32::consts::TAU;
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * sp, ct, st * cp]
}

pub fn dir_to_equirect_uv(d: Direction) -> (f32, f32) {
    let v = d[1].clamp(-1.0, 1.0).acos() / std::f32::consts::PI;
    if d[0].abs() < 1e-12 && d[2].abs() < 1e-12 {
        return (0.5, v); // pole
    }
    let phi = d[0].atan2(d[2]);
    let mut u = phi / std::f32::consts::TAU + 0.5;
    if u >= 1.0 {
        u -= 1.0;
    }
    (u, v)
}

/// Equirectangular panorama with a user-facing yaw offset.
#[derive(Debug, Clone)]
pub struct EquirectEnv {
    pub image: HdrImage,
    pub rotation_deg: f32,
}

impl EquirectEnv {
    pub fn new(image: HdrImage, rotation_deg: f32) -> Result<Self, Error> {
        if image.width != 2 * image.height {
            return Err(Error::InvalidInput(format!(
                "equirectangular image must be 2:1, got {}x{}",
                image.width, image.height
            )));
        }
        Ok(Self {
            image,
            rotation_deg: rotation_deg.rem_euclid(360.0),
        })
    }

    /// Bilinear sample along a world direction, honoring the yaw offset.
    /// Horizontal wrap at the seam, vertical clamp at the poles.
    pub fn sample(&self, d: Direction) -> [f32; 3] {
        let d = rotate_yaw(d, -self.rotation_deg);
        let (u, v) = dir_to_equirect_uv(d);
        self.sample_uv(u, v)
    }

    pub fn sample_uv(&self, u: f32, v: f32) -> [f32; 3] {
        #[cfg(debug_assertions)]
        instrument::ENV_TEXEL_FETCHES.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
        let (w, h) = (self.image.width, self.image.height);
        let fx = u * w as f32 - 0.5;
        let fy = (v * h as f32 - 0.5).clamp(0.0, h as f32 - 1.0);
        let x0 = fx.floor() as i64;
        let y0 = fy.floor() as usize;
        let tx = fx - x0 as f32;
        let ty = fy - y0 as f32;
        let xa = x0.rem_euclid(w as i64) as usize;
        let xb = (x0 + 1).rem_euclid(w as i64) as usize;
        let yb = (y0 + 1).min(h - 1);
        let mut out = [0.0f32; 3];
        let p00 = self.image.get(xa, y0);
        let p10 = self.image.get(xb, y0);
        let p01 = self.image.get(xa, yb);
        let p11 = self.image.get(xb, yb);
        for c in 0..3 {
            let top = p00[c] * (1.0 - tx) + p10[c] * tx;
            let bot = p01[c] * (1.0 - tx) + p11[c] * tx;
            out[c] = top * (1.0 - ty) + bot * ty;
        }
        out
    }

    /// Solid-angle-weighted box downsample to the given height. Returns a
    /// fresh environment; used to bound the irradiance prefilter cost.
    pub fn downsample_to_height(&self, target_height: usize) -> EquirectEnv {
        let h = target_height.max(1);
        if h >= self.image.height {
            return self.clone();
        }
        let w = 2 * h;
        let (sw, sh) = (self.image.width, self.image.height);
        let mut out = HdrImage::new(w, h).expect("nonzero dims");
        for y in 0..h {
            let y_lo = y * sh / h;
            let y_hi = ((y + 1) * sh).div_ceil(h).min(sh);
            for x in 0..w {
                let x_lo = x * sw / w;
                let x_hi = ((x + 1) * sw).div_ceil(w).min(sw);
                let mut acc = [0.0f64; 3];
                let mut wsum = 0.0f64;
                for sy in y_lo..y_hi {
                    let theta = (sy as f64 + 0.5) / sh as f64 * std::f64::consts::PI;
                    let sa = theta.sin();
                    for sx in x_lo..x_hi {
                        let px = self.image.get(sx, sy);
                        for c in 0..3 {
                            acc[c] += px[c] as f64 * sa;
                        }
                        wsum += sa;
                    }
                }
                if wsum > 0.0 {
                    out.set(x, y, [
                        (acc[0] / wsum) as f32,
                        (acc[1] / wsum) as f32,
                        (acc[2] / wsum) as f32,
                    ]);
                }
            }
        }
        EquirectEnv {
            image: out,
            rotation_deg: self.rotation_deg,
        }
    }
}

/// Six square float-RGB faces, order +X, -X, +Y, -Y, +Z, -Z.
#[derive(Debug, Clone)]
pub struct Cubemap {
    pub face_size: usize,
    /// `6 * face_size * face_size * 3` values, faces concatenated in order.
    pub data: Vec<f32>,
}

pub const FACE_NAMES: [&str; 6] = ["px", "nx", "py", "ny", "pz", "nz"];

impl Cubemap {
    pub fn new(face_size: usize) -> Self {
        Self {
            face_size,
            data: vec![0.0; 6 * face_size * face_size * 3],
        }
    }

    #[inline]
    pub fn texel(&self, face: usize, x: usize, y: usize) -> [f32; 3] {
        let n = self.face_size;
        let i = ((face * n + y) * n + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_texel(&mut self, face: usize, x: usize, y: usize, rgb: [f32; 3]) {
        let n = self.face_size;
        let i = ((face * n + y) * n + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn face_image(&self, face: usize) -> HdrImage {
        let n = self.face_size;
        let start = face * n * n * 3;
        HdrImage {
            width: n,
            height: n,
            pixels: self.data[start..start + n * n * 3].to_vec(),
        }
    }
}

/// Direction of a cubemap texel center; (a, b) in [-1, 1], rows top-first.
#[inline]
pub fn face_texel_dir(face: usize, a: f32, b: f32) -> Direction {
    let d = match face {
        0 => [1.0, -b, -a],
        1 => [-1.0, -b, a],
        2 => [a, 1.0, b],
        3 => [a, -1.0, -b],
        4 => [a, -b, 1.0],
        5 => [-a, -b, -1.0],
        _ => unreachable!("face index"),
    };
    normalize(d)
}

/// Inverse of [`face_texel_dir`]: major-axis face pick plus in-face coords.
#[inline]
pub fn dir_to_face_uv(d: Direction) -> (usize, f32, f32) {
    let ax = d[0].abs();
    let ay = d[1].abs();
    let az = d[2].abs();
    if ax >= ay && ax >= az {
        if d[0] > 0.0 {
            (0, -d[2] / ax, -d[1] / ax)
        } else {
            (1, d[2] / ax, -d[1] / ax)
        }
    } else if ay >= ax && ay >= az {
        if d[1] > 0.0 {
            (2, d[0] / ay, d[2] / ay)
        } else {
            (3, d[0] / ay, -d[2] / ay)
        }
    } else if d[2] > 0.0 {
        (4, d[0] / az, -d[1] / az)
    } else {
        (5, -d[0] / az, -d[1] / az)
    }
}

pub fn equirect_to_cubemap(env: &EquirectEnv, face_size: usize) -> Result<Cubemap, Error> {
    if face_size == 0 {
        return Err(Error::InvalidInput("face_size must be >= 1".into()));
    }
    let mut cube = Cubemap::new(face_size);
    let n = face_size;
    cube.data
        .par_chunks_mut(n * n * 3)
        .enumerate()
        .for_each(|(face, chunk)| {
            for y in 0..n {
                let b = 2.0 * (y as f32 + 0.5) / n as f32 - 1.0;
                for x in 0..n {
                    let a = 2.0 * (x as f32 + 0.5) / n as f32 - 1.0;
                    let rgb = env.sample(face_texel_dir(face, a, b));
                    let i = (y * n + x) * 3;
                    chunk[i..i + 3].copy_from_slice(&rgb);
                }
            }
        });
    Ok(cube)
}

/// Bilinear cubemap lookup, clamped at face edges.
pub fn sample_cubemap(cube: &Cubemap, d: Direction) -> [f32; 3] {
    let (face, a, b) = dir_to_face_uv(d);
    let n = cube.face_size;
    let fx = ((a + 1.0) * 0.5 * n as f32 - 0.5).clamp(0.0, n as f32 - 1.0);
    let fy = ((b + 1.0) * 0.5 * n as f32 - 0.5).clamp(0.0, n as f32 - 1.0);
    let x0 = fx.floor() as usize;
    let y0 = fy.floor() as usize;
    let x1 = (x0 + 1).min(n - 1);
    let y1 = (y0 + 1).min(n - 1);
    let tx = fx - x0 as f32;
    let ty = fy - y0 as f32;
    let p00 = cube.texel(face, x0, y0);
    let p10 = cube.texel(face, x1, y0);
    let p01 = cube.texel(face, x0, y1);
    let p11 = cube.texel(face, x1, y1);
    let mut out = [0.0f32; 3];
    for c in 0..3 {
        let top = p00[c] * (1.0 - tx) + p10[c] * tx;
        let bot = p01[c] * (1.0 - tx) + p11[c] * tx;
        out[c] = top * (1.0 - ty) + bot * ty;
    }
    out
}

/// Pinhole view into the panorama.
#[derive(Debug, Clone, Copy)]
pub struct ViewSpec {
    pub yaw: f32,
    pub pitch: f32,
    pub roll: f32,
    pub fov_h: f32,
    pub width: usize,
    pub height: usize,
}

impl ViewSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.fov_h > 0.0 && self.fov_h < 180.0) {
            return Err(Error::InvalidInput(format!(
                "horizontal fov must be in (0, 180), got {}",
                self.fov_h
            )));
        }
        if !(-90.0..=90.0).contains(&self.pitch) {
            return Err(Error::InvalidInput(format!(
                "pitch must be in [-90, 90], got {}",
                self.pitch
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidInput("view resolution must be >= 1".into()));
        }
        Ok(())
    }

    /// World-space ray through pixel center (x, y).
    pub fn pixel_ray(&self, x: usize, y: usize) -> Direction {
        let tan_h = (self.fov_h.to_radians() * 0.5).tan();
        let tan_v = tan_h * self.height as f32 / self.width as f32;
        let px = (2.0 * (x as f32 + 0.5) / self.width as f32 - 1.0) * tan_h;
        let py = -(2.0 * (y as f32 + 0.5) / self.height as f32 - 1.0) * tan_v;
        let cam = normalize([px, py, 1.0]);
        rotate_yaw(rotate_pitch(rotate_roll(cam, self.roll), self.pitch), self.yaw)
    }
}

pub fn extract_perspective(env: &EquirectEnv, view: &ViewSpec) -> Result<HdrImage, Error> {
    view.validate()?;
    let mut img = HdrImage::new(view.width, view.height)?;
    let w = view.width;
    img.pixels
        .par_chunks_mut(w * 3)
        .enumerate()
        .for_each(|(y, row)| {
            for x in 0..w {
                let rgb = env.sample(view.pixel_ray(x, y));
                row[x * 3..x * 3 + 3].copy_from_slice(&rgb);
            }
        });
    Ok(img)
}

/// Deterministic perspective augmentation: yaws stratified over [0, 360),
/// pitch in [-30, 30] degrees, horizontal fov in [60, 90] degrees.
pub fn augment_panorama(
    env: &EquirectEnv,
    count: usize,
    seed: u64,
    width: usize,
    height: usize,
) -> Result<Vec<HdrImage>, Error> {
    if count == 0 {
        return Err(Error::InvalidInput("count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut views = Vec::with_capacity(count);
    for i in 0..count {
        let stratum = 360.0 / count as f32;
        let view = ViewSpec {
            yaw: (i as f32 + rng.gen_range(0.0..1.0)) * stratum,
            pitch: rng.gen_range(-30.0..=30.0),
            roll: 0.0,
            fov_h: rng.gen_range(60.0..=90.0),
            width,
            height,
        };
        views.push(extract_perspective(env, &view)?);
    }
    Ok(views)
}
