//! Diffuse- and mirror-sphere reference renderers: probe spheres showing the
//! cosine-convolved irradiance and the raw environment reflections.
//!
//! Orthographic projection along -Z with the camera at +Z; the sphere's
//! visible normals are n = (x, y, sqrt(1 - x^2 - y^2)) in camera space.

use crate::envmap::{rotate_yaw, sample_cubemap, EquirectEnv};
use crate::error::Error;
use crate::irradiance::IrradianceCubemap;
use crate::raster::HdrImage;

#[derive(Debug, Clone, Copy)]
pub struct SphereSpec {
    pub size: usize,
    /// Sphere radius as a fraction of the image size, in (0, 0.5].
    pub radius_frac: f32,
}

impl SphereSpec {
    pub fn validate(&self) -> Result<(), Error> {
        if self.size == 0 {
            return Err(Error::InvalidInput("sphere image size must be >= 1".into()));
        }
        if !(self.radius_frac > 0.0 && self.radius_frac <= 0.5) {
            return Err(Error::InvalidInput(format!(
                "radius fraction must be in (0, 0.5], got {}",
                self.radius_frac
            )));
        }
        Ok(())
    }

    /// Camera-space normal under pixel (x, y), or None outside the disk.
    pub fn pixel_normal(&self, x: usize, y: usize) -> Option<[f32; 3]> {
        let half = self.size as f32 / 2.0;
        let r = self.radius_frac * self.size as f32;
        let px = (x as f32 + 0.5 - half) / r;
        let py = -(y as f32 + 0.5 - half) / r;
        let r2 = px * px + py * py;
        if r2 > 1.0 {
            return None;
        }
        Some([px, py, (1.0 - r2).sqrt()])
    }
}

/// HDR render plus per-pixel alpha (1 inside the disk, 0 outside).
#[derive(Debug, Clone)]
pub struct SphereRender {
    pub image: HdrImage,
    pub alpha: Vec<f32>,
}

pub fn render_diffuse_sphere(
    irr: &IrradianceCubemap,
    spec: &SphereSpec,
    yaw: f32,
) -> Result<SphereRender, Error> {
    spec.validate()?;
    let mut image = HdrImage::new(spec.size, spec.size)?;
    let mut alpha = vec![0.0f32; spec.size * spec.size];
    for y in 0..spec.size {
        for x in 0..spec.size {
            if let Some(n) = spec.pixel_normal(x, y) {
                image.set(x, y, sample_cubemap(&irr.cubemap, rotate_yaw(n, yaw)));
                alpha[y * spec.size + x] = 1.0;
            }
        }
    }
    Ok(SphereRender { image, alpha })
}

/// Reflection of the orthographic view vector v = (0, 0, 1) about the sphere
/// normal: r = 2(n.v)n - v.
#[inline]
pub fn reflect_view(n: [f32; 3]) -> [f32; 3] {
    let k = 2.0 * n[2];
    [k * n[0], k * n[1], k * n[2] - 1.0]
}

pub fn render_mirror_sphere(
    env: &EquirectEnv,
    spec: &SphereSpec,
    yaw: f32,
) -> Result<SphereRender, Error> {
    spec.validate()?;
    let env = EquirectEnv {
        image: env.image.clone(),
        rotation_deg: (env.rotation_deg + yaw).rem_euclid(360.0),
    };
    let mut image = HdrImage::new(spec.size, spec.size)?;
    let mut alpha = vec![0.0f32; spec.size * spec.size];
    for y in 0..spec.size {
        for x in 0..spec.size {
            if let Some(n) = spec.pixel_normal(x, y) {
                image.set(x, y, env.sample(reflect_view(n)));
                alpha[y * spec.size + x] = 1.0;
            }
        }
    }
    Ok(SphereRender { image, alpha })
}
