//! Black-box checks of the `relight` binary: exit codes, file outputs and
//! the machine-parsable error line.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use relight::io;
use relight::raster::HdrImage;

fn relight(root: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relight"))
        .arg("--root")
        .arg(root)
        .args(args)
        .output()
        .expect("binary must spawn")
}

fn write_env(root: &Path, name: &str, width: usize) {
    let mut img = HdrImage::new(width, width / 2).unwrap();
    for y in 0..width / 2 {
        for x in 0..width {
            let v = if y < width / 4 { 3.0 } else { 0.2 };
            img.set(x, y, [v, v * 0.8, v * 0.5]);
        }
    }
    fs::write(root.join(name), io::write_radiance_hdr(&img)).unwrap();
}

#[test]
fn quantize_dequantize_quantize_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    write_env(dir.path(), "env.hdr", 32);

    let out = relight(dir.path(), &["quantize", "env.hdr", "q.ppm"]);
    assert!(out.status.success(), "{out:?}");
    let out = relight(dir.path(), &["dequantize", "q.ppm", "back.hdr"]);
    assert!(out.status.success(), "{out:?}");
    let out = relight(dir.path(), &["quantize", "back.hdr", "q2.ppm"]);
    assert!(out.status.success(), "{out:?}");

    // The round trip goes through Radiance RGBE, whose mantissa rounding can
    // move a luminance across a code boundary; codes must stay within 1.
    let q = io::read_ldr(&fs::read(dir.path().join("q.ppm")).unwrap()).unwrap();
    let q2 = io::read_ldr(&fs::read(dir.path().join("q2.ppm")).unwrap()).unwrap();
    assert_eq!((q.width, q.height), (q2.width, q2.height));
    for (a, b) in q.codes.iter().zip(&q2.codes) {
        assert!((*a as i16 - *b as i16).abs() <= 1, "codes drifted: {a} vs {b}");
    }
}

#[test]
fn spheres_writes_probe_set() {
    let dir = tempfile::tempdir().unwrap();
    write_env(dir.path(), "env.hdr", 64);
    let out = relight(
        dir.path(),
        &["spheres", "--env", "env.hdr", "--size", "33", "--face-size", "8", "--out", "probes"],
    );
    assert!(out.status.success(), "{out:?}");
    for name in ["diffuse.hdr", "mirror.hdr", "diffuse.ppm", "mirror.ppm"] {
        assert!(dir.path().join("probes").join(name).is_file(), "missing {name}");
    }
}

#[test]
fn relight_run_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    write_env(dir.path(), "env.hdr", 64);
    fs::write(
        dir.path().join("run.cfg"),
        "environment = env.hdr\n\
         provider = sphere\n\
         # tiny output keeps the smoke test quick\n\
         output_width = 48\n\
         output_height = 32\n\
         irradiance_face_size = 8\n\
         synthetic_frames = 3\n\
         output_dir = out\n",
    )
    .unwrap();
    let out = relight(dir.path(), &["relight", "--config", "run.cfg"]);
    assert!(out.status.success(), "{out:?}");
    for i in 0..3 {
        let frame = dir.path().join(format!("out/frame_{i:04}.ppm"));
        assert!(frame.is_file(), "missing {frame:?}");
    }
    assert!(dir.path().join("out/timing.tsv").is_file());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("fps"), "timing summary missing: {stdout}");
}

#[test]
fn domain_errors_exit_one_with_kind_line() {
    let dir = tempfile::tempdir().unwrap();
    let out = relight(dir.path(), &["quantize", "missing.hdr", "q.ppm"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.starts_with("error: kind=io "), "stderr: {stderr}");

    fs::write(dir.path().join("junk.hdr"), b"definitely not radiance").unwrap();
    let out = relight(dir.path(), &["quantize", "junk.hdr", "q.ppm"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("kind=parse"), "stderr: {stderr}");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = relight(dir.path(), &["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
}
