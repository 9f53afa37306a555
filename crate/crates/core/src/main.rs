use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use relight::envmap::{EquirectEnv, ViewSpec, FACE_NAMES};
use relight::error::Error;
use relight::io;
use relight::irradiance::{prefilter_diffuse_default, IrradianceCubemap};
use relight::pipeline::{bench_relight, flicker_from_ldr, run_relight, PipelineConfig};
use relight::pq;
use relight::raster::{HdrImage, LdrImage, QuantizedHdrImage};
use relight::relight::encode_display;
use relight::spheres::{render_diffuse_sphere, render_mirror_sphere, SphereSpec};

#[derive(Parser)]
#[command(name = "relight", about = "HDR environment relighting toolkit", version)]
struct Cli {
    /// Root directory all relative paths resolve against.
    #[arg(long, global = true, default_value = ".")]
    root: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// PQ-encode a Radiance HDR image into an 8-bit raster.
    Quantize {
        input: PathBuf,
        output: PathBuf,
    },
    /// Decode an 8-bit PQ raster back to Radiance HDR.
    Dequantize {
        input: PathBuf,
        output: PathBuf,
    },
    /// Prefilter an environment into a diffuse irradiance cubemap.
    Irradiance {
        #[arg(long)]
        env: PathBuf,
        #[arg(long, default_value_t = 32)]
        face_size: usize,
        #[arg(long, default_value_t = 0.0)]
        yaw: f32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the end-to-end relighting pipeline.
    Relight(RunArgs),
    /// Render diffuse and mirror reference spheres.
    Spheres {
        #[arg(long)]
        env: PathBuf,
        #[arg(long, default_value_t = 256)]
        size: usize,
        #[arg(long, default_value_t = 0.45)]
        radius_frac: f32,
        #[arg(long, default_value_t = 0.0)]
        yaw: f32,
        #[arg(long, default_value_t = 32)]
        face_size: usize,
        #[arg(long, default_value_t = 1.0)]
        exposure: f32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract pinhole perspective views from a panorama.
    PerspExtract {
        #[arg(long)]
        env: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        yaw: f32,
        #[arg(long, default_value_t = 0.0)]
        pitch: f32,
        #[arg(long, default_value_t = 0.0)]
        roll: f32,
        #[arg(long, default_value_t = 90.0)]
        fov: f32,
        #[arg(long, default_value_t = 512)]
        width: usize,
        #[arg(long, default_value_t = 512)]
        height: usize,
        /// Emit this many stratified augmentation views instead of one.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the pipeline repeatedly and report per-stage latency.
    Bench {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
    },
    /// Score inter-frame flicker over a written frame sequence.
    Flicker {
        #[arg(long)]
        frames: PathBuf,
        /// Optional mask sequence; defaults to scoring every pixel.
        #[arg(long)]
        masks: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Line-oriented key = value config file; flags below win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    env: Option<PathBuf>,
    #[arg(long)]
    yaw: Option<f32>,
    #[arg(long)]
    provider: Option<String>,
    #[arg(long)]
    frames_dir: Option<PathBuf>,
    #[arg(long)]
    masks_dir: Option<PathBuf>,
    #[arg(long)]
    normals_dir: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    face_size: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    s1: Option<f32>,
    #[arg(long)]
    s2: Option<f32>,
    /// mean, none or fixed:<value>.
    #[arg(long)]
    exposure: Option<String>,
    /// on or off.
    #[arg(long)]
    temporal: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    synthetic_frames: Option<usize>,
    #[arg(long)]
    synthetic_jitter: Option<f32>,
}

impl RunArgs {
    fn build(&self, root: &PathBuf) -> Result<PipelineConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => {
                let full = if path.is_absolute() {
                    path.clone()
                } else {
                    root.join(path)
                };
                let text = fs::read_to_string(&full).map_err(|e| Error::io(&full, e))?;
                PipelineConfig::parse_file(root, &text)?
            }
            None => PipelineConfig {
                root: root.clone(),
                ..Default::default()
            },
        };
        if let Some(v) = &self.env {
            cfg.environment = v.clone();
        }
        if let Some(v) = self.yaw {
            cfg.environment_yaw = v;
        }
        if let Some(v) = &self.provider {
            cfg.provider = v.clone();
        }
        if let Some(v) = &self.frames_dir {
            cfg.frames_dir = v.clone();
        }
        if let Some(v) = &self.masks_dir {
            cfg.masks_dir = v.clone();
        }
        if let Some(v) = &self.normals_dir {
            cfg.normals_dir = v.clone();
        }
        if let Some(v) = &self.out {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.face_size {
            cfg.irradiance_face_size = v;
        }
        if let Some(v) = self.width {
            cfg.output_width = v;
        }
        if let Some(v) = self.height {
            cfg.output_height = v;
        }
        if let Some(v) = self.s1 {
            cfg.s1 = v;
        }
        if let Some(v) = self.s2 {
            cfg.s2 = v;
        }
        if let Some(v) = &self.exposure {
            cfg.exposure = relight::pipeline::ExposureMode::parse(v)?;
        }
        if let Some(v) = &self.temporal {
            cfg.apply_line("temporal_filter", v)?;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.synthetic_frames {
            cfg.synthetic_frames = v;
        }
        if let Some(v) = self.synthetic_jitter {
            cfg.synthetic_jitter = v;
        }
        Ok(cfg)
    }
}

fn read_file(path: &PathBuf) -> Result<Vec<u8>, Error> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &PathBuf, bytes: &[u8]) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn load_env(root: &PathBuf, path: &PathBuf, yaw: f32) -> Result<EquirectEnv, Error> {
    let full = if path.is_absolute() {
        path.clone()
    } else {
        root.join(path)
    };
    EquirectEnv::new(io::read_radiance_hdr(&read_file(&full)?)?, yaw)
}

fn write_irradiance(dir: &PathBuf, irr: &IrradianceCubemap) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (face, name) in FACE_NAMES.iter().enumerate() {
        let img = irr.cubemap.face_image(face);
        write_file(&dir.join(format!("{name}.hdr")), &io::write_radiance_hdr(&img))?;
    }
    let manifest = format!(
        "face_order = {}\nface_size = {}\nyaw_deg = {}\n",
        FACE_NAMES.join(","),
        irr.cubemap.face_size,
        irr.yaw_deg
    );
    write_file(&dir.join("manifest.txt"), manifest.as_bytes())
}

fn tone_map_ldr(img: &HdrImage, exposure: f32) -> LdrImage {
    let mut out = LdrImage::new(img.width, img.height, 3).expect("nonzero dims");
    for (dst, src) in out.codes.iter_mut().zip(&img.pixels) {
        let x = src * exposure;
        *dst = encode_display(x / (1.0 + x));
    }
    out
}

fn run(cli: Cli) -> Result<(), Error> {
    let root = cli.root;
    match cli.command {
        Command::Quantize { input, output } => {
            let hdr = io::read_radiance_hdr(&read_file(&root.join(&input))?)?;
            let q = pq::quantize_hdr(&hdr);
            let ldr = LdrImage {
                width: q.width,
                height: q.height,
                channels: 3,
                codes: q.codes,
            };
            write_file(&root.join(&output), &io::write_ldr(&ldr))
        }
        Command::Dequantize { input, output } => {
            let ldr = io::read_ldr(&read_file(&root.join(&input))?)?;
            if ldr.channels != 3 {
                return Err(Error::InvalidInput(format!(
                    "quantized raster must have 3 channels, got {}",
                    ldr.channels
                )));
            }
            let hdr = pq::dequantize_hdr(&QuantizedHdrImage {
                width: ldr.width,
                height: ldr.height,
                codes: ldr.codes,
            });
            write_file(&root.join(&output), &io::write_radiance_hdr(&hdr))
        }
        Command::Irradiance {
            env,
            face_size,
            yaw,
            out,
        } => {
            let env = load_env(&root, &env, yaw)?;
            let irr = prefilter_diffuse_default(&env, face_size)?;
            write_irradiance(&root.join(&out), &irr)
        }
        Command::Relight(args) => {
            let cfg = args.build(&root)?;
            let out = run_relight(&cfg)?;
            println!("{}", out.timing.human_readable());
            Ok(())
        }
        Command::Spheres {
            env,
            size,
            radius_frac,
            yaw,
            face_size,
            exposure,
            out,
        } => {
            let env = load_env(&root, &env, 0.0)?;
            let spec = SphereSpec { size, radius_frac };
            let irr = prefilter_diffuse_default(&env, face_size)?;
            let diffuse = render_diffuse_sphere(&irr, &spec, yaw)?;
            let mirror = render_mirror_sphere(&env, &spec, yaw)?;
            let dir = root.join(&out);
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            write_file(&dir.join("diffuse.hdr"), &io::write_radiance_hdr(&diffuse.image))?;
            write_file(&dir.join("mirror.hdr"), &io::write_radiance_hdr(&mirror.image))?;
            write_file(
                &dir.join("diffuse.ppm"),
                &io::write_ldr(&tone_map_ldr(&diffuse.image, exposure)),
            )?;
            write_file(
                &dir.join("mirror.ppm"),
                &io::write_ldr(&tone_map_ldr(&mirror.image, exposure)),
            )
        }
        Command::PerspExtract {
            env,
            yaw,
            pitch,
            roll,
            fov,
            width,
            height,
            count,
            seed,
            out,
        } => {
            let env = load_env(&root, &env, 0.0)?;
            match count {
                None => {
                    let view = ViewSpec {
                        yaw,
                        pitch,
                        roll,
                        fov_h: fov,
                        width,
                        height,
                    };
                    let img = relight::envmap::extract_perspective(&env, &view)?;
                    write_file(&root.join(&out), &io::write_radiance_hdr(&img))
                }
                Some(count) => {
                    let views =
                        relight::envmap::augment_panorama(&env, count, seed, width, height)?;
                    let dir = root.join(&out);
                    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
                    for (i, img) in views.iter().enumerate() {
                        write_file(
                            &dir.join(format!("view_{i:02}.hdr")),
                            &io::write_radiance_hdr(img),
                        )?;
                    }
                    Ok(())
                }
            }
        }
        Command::Bench { run: args, repeats } => {
            let cfg = args.build(&root)?;
            let report = bench_relight(&cfg, repeats)?;
            println!("{}", report.human_readable());
            print!("{}", report.tabular());
            Ok(())
        }
        Command::Flicker { frames, masks } => {
            let dir = root.join(&frames);
            let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
                .map_err(|e| Error::io(&dir, e))?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.is_file())
                .collect();
            paths.sort();
            let frames: Vec<LdrImage> = paths
                .iter()
                .map(|p| io::read_ldr(&read_file(p)?))
                .collect::<Result<_, _>>()?;
            let mask_bufs: Vec<Vec<f32>> = match masks {
                Some(mdir) => {
                    let mdir = root.join(&mdir);
                    let mut mpaths: Vec<PathBuf> = fs::read_dir(&mdir)
                        .map_err(|e| Error::io(&mdir, e))?
                        .filter_map(|e| e.ok())
                        .map(|e| e.path())
                        .filter(|p| p.is_file())
                        .collect();
                    mpaths.sort();
                    mpaths
                        .iter()
                        .map(|p| {
                            let m = io::read_ldr(&read_file(p)?)?;
                            Ok((0..m.width * m.height)
                                .map(|i| m.codes[i * m.channels] as f32 / 255.0)
                                .collect())
                        })
                        .collect::<Result<_, Error>>()?
                }
                None => frames
                    .iter()
                    .map(|f| vec![1.0; f.width * f.height])
                    .collect(),
            };
            let report = flicker_from_ldr(&frames, &mask_bufs)?;
            print!("{}", report.to_text());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    // clap handles usage errors itself with exit code 2, distinct from the
    // I/O and domain errors below.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: kind={} message={e}", e.kind());
            ExitCode::FAILURE
        }
    }
}
