//! Run configuration: line-oriented `key = value` text with CLI overrides
//! (flags win). All paths are resolved against an explicit root.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::Error;

/// How the diffuse light map is brought into the shading equation's
/// unit-scale regime before Eq-style constants apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExposureMode {
    /// Divide by the mean irradiance of the prefiltered cubemap.
    MeanIrradiance,
    /// Divide by a fixed scalar.
    Fixed(f32),
    /// Use physical values as-is.
    None,
}

impl ExposureMode {
    pub fn parse(s: &str) -> Result<Self, Error> {
        match s {
            "mean" => Ok(ExposureMode::MeanIrradiance),
            "none" => Ok(ExposureMode::None),
            other => {
                if let Some(v) = other.strip_prefix("fixed:") {
                    let v: f32 = v
                        .parse()
                        .map_err(|_| Error::Config(format!("bad fixed exposure value {v:?}")))?;
                    if v <= 0.0 {
                        return Err(Error::Config("fixed exposure must be > 0".into()));
                    }
                    Ok(ExposureMode::Fixed(v))
                } else {
                    Err(Error::Config(format!(
                        "unknown exposure mode {other:?} (expected mean, none or fixed:<v>)"
                    )))
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub root: PathBuf,
    pub environment: PathBuf,
    pub environment_yaw: f32,
    /// Scene provider name; see the provider registry.
    pub provider: String,
    pub frames_dir: PathBuf,
    pub masks_dir: PathBuf,
    pub normals_dir: PathBuf,
    pub output_dir: PathBuf,
    pub irradiance_face_size: usize,
    pub output_width: usize,
    pub output_height: usize,
    pub s1: f32,
    pub s2: f32,
    pub exposure: ExposureMode,
    pub background_exposure: f32,
    pub background_fov: f32,
    pub temporal_filter: bool,
    pub seed: u64,
    /// Frame count for synthetic providers.
    pub synthetic_frames: usize,
    /// Normal jitter sigma for the synthetic provider's flicker studies.
    pub synthetic_jitter: f32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            root: PathBuf::from("."),
            environment: PathBuf::from("environment.hdr"),
            environment_yaw: 0.0,
            provider: "files".into(),
            frames_dir: PathBuf::from("frames"),
            masks_dir: PathBuf::from("masks"),
            normals_dir: PathBuf::from("normals"),
            output_dir: PathBuf::from("out"),
            irradiance_face_size: 32,
            output_width: 1024,
            output_height: 768,
            s1: 0.29,
            s2: 0.38,
            exposure: ExposureMode::MeanIrradiance,
            background_exposure: 1.0,
            background_fov: 70.0,
            temporal_filter: true,
            seed: 0,
            synthetic_frames: 16,
            synthetic_jitter: 0.0,
        }
    }
}

impl PipelineConfig {
    pub fn apply_line(&mut self, key: &str, value: &str) -> Result<(), Error> {
        let bad = |what: &str| Error::Config(format!("bad value {value:?} for {what}"));
        match key {
            "environment" => self.environment = value.into(),
            "environment_yaw" => {
                self.environment_yaw = value.parse().map_err(|_| bad("environment_yaw"))?
            }
            "provider" => self.provider = value.into(),
            "frames_dir" => self.frames_dir = value.into(),
            "masks_dir" => self.masks_dir = value.into(),
            "normals_dir" => self.normals_dir = value.into(),
            "output_dir" => self.output_dir = value.into(),
            "irradiance_face_size" => {
                self.irradiance_face_size = value.parse().map_err(|_| bad("irradiance_face_size"))?
            }
            "output_width" => self.output_width = value.parse().map_err(|_| bad("output_width"))?,
            "output_height" => {
                self.output_height = value.parse().map_err(|_| bad("output_height"))?
            }
            "s1" => self.s1 = value.parse().map_err(|_| bad("s1"))?,
            "s2" => self.s2 = value.parse().map_err(|_| bad("s2"))?,
            "exposure" => self.exposure = ExposureMode::parse(value)?,
            "background_exposure" => {
                self.background_exposure = value.parse().map_err(|_| bad("background_exposure"))?
            }
            "background_fov" => {
                self.background_fov = value.parse().map_err(|_| bad("background_fov"))?
            }
            "temporal_filter" => {
                self.temporal_filter = match value {
                    "on" | "true" | "1" => true,
                    "off" | "false" | "0" => false,
                    _ => return Err(bad("temporal_filter")),
                }
            }
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "synthetic_frames" => {
                self.synthetic_frames = value.parse().map_err(|_| bad("synthetic_frames"))?
            }
            "synthetic_jitter" => {
                self.synthetic_jitter = value.parse().map_err(|_| bad("synthetic_jitter"))?
            }
            other => return Err(Error::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    pub fn parse_file(root: &Path, text: &str) -> Result<Self, Error> {
        let mut cfg = PipelineConfig {
            root: root.to_path_buf(),
            ..Default::default()
        };
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.apply_line(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.output_width == 0 || self.output_height == 0 {
            return Err(Error::Config("output resolution must be positive".into()));
        }
        if self.s1 < 0.0 || self.s2 < 0.0 {
            return Err(Error::Config("shading constants must be >= 0".into()));
        }
        if self.irradiance_face_size < 4 {
            return Err(Error::Config("irradiance face size must be >= 4".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    /// Flat key/value view, used to echo the effective config into reports.
    pub fn summary(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("environment".into(), self.environment.display().to_string());
        m.insert("environment_yaw".into(), self.environment_yaw.to_string());
        m.insert("provider".into(), self.provider.clone());
        m.insert(
            "irradiance_face_size".into(),
            self.irradiance_face_size.to_string(),
        );
        m.insert(
            "output_resolution".into(),
            format!("{}x{}", self.output_width, self.output_height),
        );
        m.insert("s1".into(), self.s1.to_string());
        m.insert("s2".into(), self.s2.to_string());
        m.insert("temporal_filter".into(), self.temporal_filter.to_string());
        m.insert("seed".into(), self.seed.to_string());
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_defaults_and_overrides() {
        let text = "\
# comment
environment = env.hdr
environment_yaw = 45
s1 = 0.5
temporal_filter = off
exposure = fixed:2.5
";
        let cfg = PipelineConfig::parse_file(Path::new("/tmp/run"), text).unwrap();
        assert_eq!(cfg.environment, PathBuf::from("env.hdr"));
        assert_eq!(cfg.environment_yaw, 45.0);
        assert_eq!(cfg.s1, 0.5);
        assert!(!cfg.temporal_filter);
        assert_eq!(cfg.exposure, ExposureMode::Fixed(2.5));
        assert_eq!(cfg.output_width, 1024);
        assert_eq!(cfg.output_height, 768);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(PipelineConfig::parse_file(Path::new("."), "nope = 1").is_err());
    }

    #[test]
    fn exposure_mode_parsing() {
        assert_eq!(ExposureMode::parse("mean").unwrap(), ExposureMode::MeanIrradiance);
        assert_eq!(ExposureMode::parse("none").unwrap(), ExposureMode::None);
        assert!(ExposureMode::parse("fixed:-1").is_err());
        assert!(ExposureMode::parse("bogus").is_err());
    }

    #[test]
    fn resolve_joins_relative_paths() {
        let cfg = PipelineConfig {
            root: PathBuf::from("/data/run"),
            ..Default::default()
        };
        assert_eq!(cfg.resolve(Path::new("x.hdr")), PathBuf::from("/data/run/x.hdr"));
        assert_eq!(cfg.resolve(Path::new("/abs/x.hdr")), PathBuf::from("/abs/x.hdr"));
    }
}
