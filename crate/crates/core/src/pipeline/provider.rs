//! Scene input providers. Normal estimation and segmentation are upstream
//! producers, so the pipeline consumes them through this interface instead
//! of embedding them. Providers are registered by name and picked via
//! config, so a run can switch between real file sequences and synthetic
//! scenes without code changes.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::io;
use crate::pipeline::config::PipelineConfig;
use crate::raster::{LdrImage, NormalMap};
use crate::relight::CameraFrame;

pub trait SceneProvider: Send + Sync {
    fn name(&self) -> &'static str;
    fn frame_count(&self) -> usize;
    fn camera_frame(&self, index: usize) -> Result<CameraFrame, Error>;
    fn normals(&self, index: usize) -> Result<NormalMap, Error>;
}

pub const PROVIDER_NAMES: [&str; 2] = ["files", "sphere"];

pub fn create_provider(cfg: &PipelineConfig) -> Result<Box<dyn SceneProvider>, Error> {
    match cfg.provider.as_str() {
        "files" => Ok(Box::new(FileProvider::open(cfg)?)),
        "sphere" => Ok(Box::new(SphereProvider::from_config(cfg))),
        other => Err(Error::Config(format!(
            "unknown provider {other:?}; registered: {}",
            PROVIDER_NAMES.join(", ")
        ))),
    }
}

/// Numbered image files: frames as P6, masks as P5 (alpha = code/255),
/// normals as PFM or 16-bit P6. Sequences align by sorted position.
#[derive(Debug)]
pub struct FileProvider {
    frames: Vec<PathBuf>,
    masks: Vec<PathBuf>,
    normals: Vec<PathBuf>,
}

fn sorted_files(dir: &Path) -> Result<Vec<PathBuf>, Error> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    files.sort();
    Ok(files)
}

impl FileProvider {
    pub fn open(cfg: &PipelineConfig) -> Result<Self, Error> {
        let frames = sorted_files(&cfg.resolve(&cfg.frames_dir))?;
        let masks = sorted_files(&cfg.resolve(&cfg.masks_dir))?;
        let normals = sorted_files(&cfg.resolve(&cfg.normals_dir))?;
        if frames.is_empty() {
            return Err(Error::Config(format!(
                "no frame files in {}",
                cfg.resolve(&cfg.frames_dir).display()
            )));
        }
        let n = frames.len();
        for (kind, list, dir) in [
            ("mask", &masks, &cfg.masks_dir),
            ("normal map", &normals, &cfg.normals_dir),
        ] {
            if list.len() != n {
                return Err(Error::MissingFrame {
                    index: list.len().min(n),
                    path: cfg.resolve(dir).join(format!("<{kind} for frame {}>", list.len().min(n))),
                });
            }
        }
        Ok(Self {
            frames,
            masks,
            normals,
        })
    }

    fn read(&self, path: &Path) -> Result<Vec<u8>, Error> {
        fs::read(path).map_err(|e| Error::io(path, e))
    }
}

impl SceneProvider for FileProvider {
    fn name(&self) -> &'static str {
        "files"
    }

    fn frame_count(&self) -> usize {
        self.frames.len()
    }

    fn camera_frame(&self, index: usize) -> Result<CameraFrame, Error> {
        let img = io::read_ldr(&self.read(&self.frames[index])?)?;
        let mask = io::read_ldr(&self.read(&self.masks[index])?)?;
        if mask.width != img.width || mask.height != img.height {
            return Err(Error::ShapeMismatch(format!(
                "frame {index}: mask {}x{} vs image {}x{}",
                mask.width, mask.height, img.width, img.height
            )));
        }
        let alpha = (0..mask.width * mask.height)
            .map(|p| mask.codes[p * mask.channels] as f32 / 255.0)
            .collect();
        let rgb = match img.channels {
            3 => img,
            _ => {
                return Err(Error::InvalidInput(format!(
                    "frame {index}: expected a 3-channel image, got {} channels",
                    img.channels
                )))
            }
        };
        CameraFrame::new(rgb, alpha)
    }

    fn normals(&self, index: usize) -> Result<NormalMap, Error> {
        io::read_normal_map(&self.read(&self.normals[index])?)
    }
}

/// Analytic scene: an orthographic sphere's normals over a disk mask, a flat
/// gray capture, and optional per-frame normal jitter for flicker studies.
pub struct SphereProvider {
    width: usize,
    height: usize,
    frames: usize,
    seed: u64,
    jitter: f32,
}

impl SphereProvider {
    pub fn from_config(cfg: &PipelineConfig) -> Self {
        Self {
            width: cfg.output_width,
            height: cfg.output_height,
            frames: cfg.synthetic_frames,
            seed: cfg.seed,
            jitter: cfg.synthetic_jitter,
        }
    }

    fn disk(&self, x: usize, y: usize) -> Option<[f32; 3]> {
        let r = 0.45 * self.width.min(self.height) as f32;
        let cx = self.width as f32 / 2.0;
        let cy = self.height as f32 / 2.0;
        let px = (x as f32 + 0.5 - cx) / r;
        let py = -(y as f32 + 0.5 - cy) / r;
        let r2 = px * px + py * py;
        if r2 > 1.0 {
            None
        } else {
            Some([px, py, (1.0 - r2).sqrt()])
        }
    }
}

impl SceneProvider for SphereProvider {
    fn name(&self) -> &'static str {
        "sphere"
    }

    fn frame_count(&self) -> usize {
        self.frames
    }

    fn camera_frame(&self, _index: usize) -> Result<CameraFrame, Error> {
        let mut img = LdrImage::new(self.width, self.height, 3)?;
        let mut alpha = vec![0.0f32; self.width * self.height];
        for y in 0..self.height {
            for x in 0..self.width {
                if self.disk(x, y).is_some() {
                    let p = y * self.width + x;
                    img.codes[p * 3..p * 3 + 3].copy_from_slice(&[128; 3]);
                    alpha[p] = 1.0;
                }
            }
        }
        CameraFrame::new(img, alpha)
    }

    fn normals(&self, index: usize) -> Result<NormalMap, Error> {
        // Per-frame stream so jitter is i.i.d. across frames yet reproducible.
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (index as u64).wrapping_mul(0x9e3779b9));
        let mut map = NormalMap::new(self.width, self.height);
        for y in 0..self.height {
            for x in 0..self.width {
                if let Some(mut n) = self.disk(x, y) {
                    if self.jitter > 0.0 {
                        for c in n.iter_mut() {
                            *c += rng.gen_range(-self.jitter..self.jitter);
                        }
                        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                        n = n.map(|v| v / norm.max(1e-6));
                    }
                    map.set(x, y, n, true);
                }
            }
        }
        Ok(map)
    }
}
