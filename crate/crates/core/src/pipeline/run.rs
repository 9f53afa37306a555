//! The end-to-end frame loop: ingest -> temporal filter -> diffuse light map
//! -> shading -> composite -> encode, with the irradiance prefilter hoisted
//! out of the loop. Stages are pure, so outputs are bit-identical for
//! identical config and inputs regardless of scheduling.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use crate::envmap::{EquirectEnv, ViewSpec};
use crate::error::Error;
use crate::io;
use crate::irradiance::{
    diffuse_light_map, mean_irradiance, prefilter_diffuse_default, IrradianceCubemap,
};
use crate::metrics::{flicker_score, FlickerReport};
use crate::pipeline::config::{ExposureMode, PipelineConfig};
use crate::pipeline::provider::create_provider;
use crate::pipeline::timing::{StageStats, TimingReport, STAGES};
use crate::raster::{LdrImage, NormalMap};
use crate::relight::{composite, linearize, low_saturation, render_background, shade, RelitFrame, ShadingParams};
use crate::temporal::NormalHistory;

pub struct RunOutput {
    pub frame_paths: Vec<PathBuf>,
    pub timing: TimingReport,
}

fn nearest_resize_ldr(img: &LdrImage, w: usize, h: usize) -> LdrImage {
    let mut out = LdrImage::new(w, h, img.channels).expect("validated dims");
    for y in 0..h {
        let sy = y * img.height / h;
        for x in 0..w {
            let sx = x * img.width / w;
            for c in 0..img.channels {
                out.codes[(y * w + x) * out.channels + c] = img.get(sx, sy, c);
            }
        }
    }
    out
}

fn nearest_resize_alpha(alpha: &[f32], sw: usize, sh: usize, w: usize, h: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        let sy = y * sh / h;
        for x in 0..w {
            out[y * w + x] = alpha[sy * sw + x * sw / w];
        }
    }
    out
}

fn nearest_resize_normals(map: &NormalMap, w: usize, h: usize) -> NormalMap {
    let mut out = NormalMap::new(w, h);
    for y in 0..h {
        let sy = y * map.height / h;
        for x in 0..w {
            let sx = x * map.width / w;
            let (n, valid) = map.get(sx, sy);
            out.set(x, y, n, valid);
        }
    }
    out
}

pub fn load_environment(cfg: &PipelineConfig) -> Result<EquirectEnv, Error> {
    let path = cfg.resolve(&cfg.environment);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    EquirectEnv::new(io::read_radiance_hdr(&bytes)?, cfg.environment_yaw)
}

fn exposure_divisor(mode: ExposureMode, irr: &IrradianceCubemap) -> f32 {
    match mode {
        ExposureMode::MeanIrradiance => mean_irradiance(irr).max(1e-12),
        ExposureMode::Fixed(v) => v,
        ExposureMode::None => 1.0,
    }
}

pub fn run_relight(cfg: &PipelineConfig) -> Result<RunOutput, Error> {
    cfg.validate()?;
    let provider = create_provider(cfg)?;
    let frames = provider.frame_count();
    if frames == 0 {
        return Err(Error::InvalidInput("empty frame list".into()));
    }
    let env = load_environment(cfg)?;
    let (w, h) = (cfg.output_width, cfg.output_height);

    // Precompute: everything whose cost scales with environment resolution.
    let pre_start = Instant::now();
    let irr = prefilter_diffuse_default(&env, cfg.irradiance_face_size)?;
    let divisor = exposure_divisor(cfg.exposure, &irr);
    let view = ViewSpec {
        yaw: 0.0,
        pitch: 0.0,
        roll: 0.0,
        fov_h: cfg.background_fov,
        width: w,
        height: h,
    };
    let background = render_background(&env, &view, cfg.background_exposure)?;
    let precompute_ms = pre_start.elapsed().as_secs_f64() * 1e3;

    let out_dir = cfg.resolve(&cfg.output_dir);
    fs::create_dir_all(&out_dir).map_err(|e| Error::io(&out_dir, e))?;

    let params = ShadingParams {
        s1: cfg.s1,
        s2: cfg.s2,
        ..Default::default()
    };
    let mut history = NormalHistory::default();
    let mut stages: Vec<(String, StageStats)> = STAGES
        .iter()
        .map(|n| (n.to_string(), StageStats::default()))
        .collect();
    let mut frame_paths = Vec::with_capacity(frames);

    #[cfg(debug_assertions)]
    let env_fetches_before = crate::envmap::instrument::env_fetches();

    let loop_start = Instant::now();
    for index in 0..frames {
        // ingest
        let t = Instant::now();
        let frame = provider.camera_frame(index)?;
        let normals = provider.normals(index)?;
        let (frame_img, alpha) = if frame.image.width == w && frame.image.height == h {
            (frame.image, frame.alpha)
        } else {
            let (sw, sh) = (frame.image.width, frame.image.height);
            (
                nearest_resize_ldr(&frame.image, w, h),
                nearest_resize_alpha(&frame.alpha, sw, sh, w, h),
            )
        };
        let normals = if normals.width == w && normals.height == h {
            normals
        } else {
            nearest_resize_normals(&normals, w, h)
        };
        let filtered = if cfg.temporal_filter {
            history.push_and_filter(normals)?
        } else {
            normals
        };
        stages[0].1.record(t.elapsed());

        // light-map
        let t = Instant::now();
        let mut light = diffuse_light_map(&irr, &filtered, cfg.environment_yaw);
        if divisor != 1.0 {
            for v in &mut light.values {
                *v /= divisor;
            }
        }
        stages[1].1.record(t.elapsed());

        // shading
        let t = Instant::now();
        let linear = linearize(&frame_img);
        let low_sat = low_saturation(&linear, &params);
        let relit = shade(&linear, &low_sat, &light, &params)?;
        stages[2].1.record(t.elapsed());

        // composite
        let t = Instant::now();
        let out = composite(&relit, &alpha, &background)?;
        stages[3].1.record(t.elapsed());

        // encode
        let t = Instant::now();
        let path = out_dir.join(format!("frame_{index:04}.ppm"));
        fs::write(&path, io::write_ldr(&out)).map_err(|e| Error::io(&path, e))?;
        stages[4].1.record(t.elapsed());
        frame_paths.push(path);
    }
    let frame_loop_ms = loop_start.elapsed().as_secs_f64() * 1e3;

    #[cfg(debug_assertions)]
    debug_assert_eq!(
        crate::envmap::instrument::env_fetches(),
        env_fetches_before,
        "frame loop must not touch environment texels"
    );

    let timing = TimingReport {
        stages,
        precompute_ms,
        frames,
        frame_loop_ms,
        env_width: env.image.width,
        env_height: env.image.height,
        irradiance_face_size: cfg.irradiance_face_size,
    };
    let report_path = out_dir.join("timing.txt");
    fs::write(&report_path, timing.human_readable()).map_err(|e| Error::io(&report_path, e))?;
    let tab_path = out_dir.join("timing.tsv");
    fs::write(&tab_path, timing.tabular()).map_err(|e| Error::io(&tab_path, e))?;

    Ok(RunOutput {
        frame_paths,
        timing,
    })
}

/// Runs the whole pipeline `repeats` times and merges the stage samples, for
/// the benchmark subcommand.
pub fn bench_relight(cfg: &PipelineConfig, repeats: usize) -> Result<TimingReport, Error> {
    if repeats == 0 {
        return Err(Error::InvalidInput("bench needs at least 1 repeat".into()));
    }
    let mut merged: Option<TimingReport> = None;
    for _ in 0..repeats {
        let out = run_relight(cfg)?;
        match &mut merged {
            None => merged = Some(out.timing),
            Some(m) => {
                for ((_, dst), (_, src)) in m.stages.iter_mut().zip(out.timing.stages) {
                    dst.samples_ms.extend(src.samples_ms);
                }
                m.frame_loop_ms += out.timing.frame_loop_ms;
                m.frames += out.timing.frames;
                m.precompute_ms += out.timing.precompute_ms;
            }
        }
    }
    Ok(merged.expect("repeats >= 1"))
}

/// Decodes written output frames back to [0,1] buffers and scores flicker.
/// Masks select which pixels count; pass whole-frame masks to score the lot.
pub fn flicker_from_ldr(frames: &[LdrImage], masks: &[Vec<f32>]) -> Result<FlickerReport, Error> {
    let relit: Vec<RelitFrame> = frames
        .iter()
        .map(|f| RelitFrame {
            width: f.width,
            height: f.height,
            values: f.codes.iter().map(|&c| c as f32 / 255.0).collect(),
        })
        .collect();
    flicker_score(&relit, masks)
}
