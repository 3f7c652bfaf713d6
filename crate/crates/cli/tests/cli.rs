use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use monoseal::analysis::{npcr, psnr_color};
use monoseal::capture::{demosaic, generate_sia, ArrayConfig, Layout};
use monoseal::sr::{reconstruct_color, SrConfig};
use monoseal::{pnm, scene};
use tempfile::TempDir;

fn monoseal(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_monoseal"))
        .arg("--out")
        .arg(dir)
        .args(args)
        .env_remove("MONOSEAL_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = monoseal(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn code(dir: &Path, args: &[&str]) -> i32 {
    monoseal(dir, args).status.code().expect("exited normally")
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn layout(dir: &Path) -> Layout {
    Layout::from_text(&fs::read_to_string(dir.join("layout.toml")).unwrap()).unwrap()
}

/// Source image, mosaic, layout and default key in one directory.
fn prepared(profile: &str) -> TempDir {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["--profile", profile, "capture"]);
    ok(t.path(), &["keygen"]);
    t
}

#[test]
fn capture_round_trips_to_direct_generation() {
    let t = prepared("paper4x4");
    let plane = pnm::read_pgm(t.path().join("sia.pgm")).unwrap();
    let l = layout(t.path());
    assert_eq!((l.rows, l.cols, l.cells.len()), (4, 4, 16));
    let src = pnm::read_ppm(t.path().join("source.ppm")).unwrap();
    let direct = generate_sia(&src, &ArrayConfig::default_4x4(), 0).unwrap();
    assert_eq!(demosaic(&plane, &l).unwrap(), direct);
}

#[test]
fn six_by_six_profile_has_36_cameras() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["--profile", "paper6x6", "capture", "--scene", "natural"]);
    let l = layout(t.path());
    assert_eq!((l.rows, l.cols), (6, 6));
    let green = l.cells.iter().filter(|c| c.channel == monoseal::Channel::Green).count();
    assert_eq!(green, 18);
}

#[test]
fn keygen_accepts_valid_and_rejects_invalid_keys() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["keygen", "--fx-rules", "150,150,90,150,90,150,90,150", "--fy-rules", "150,90,150,90,90,90,150,90"]);
    ok(t.path(), &["--seed", "9", "keygen", "--random", "--output", &p(t.path(), "random.toml")]);
    assert_eq!(code(t.path(), &["keygen", "--fx-rules", "90,90,90,90,90,90,90,90"]), 3);
    assert_eq!(code(t.path(), &["keygen", "--fy-seed", "00000000"]), 3);
    assert_eq!(code(t.path(), &["keygen", "--fx-rules", "30,90,90,90,90,90,90,90"]), 3);
    assert_eq!(code(t.path(), &["keygen", "--chaos-init", "1e300,1,1,1"]), 3);
}

#[test]
fn encrypt_decrypt_round_trip_is_exact_and_deterministic() {
    let t = prepared("tiny");
    let d = t.path();
    ok(d, &["encrypt", "--input", &p(d, "sia.pgm"), "--key", &p(d, "key.toml")]);
    ok(d, &["encrypt", "--input", &p(d, "sia.pgm"), "--key", &p(d, "key.toml"), "--output", &p(d, "again.bin")]);
    assert_eq!(fs::read(d.join("cipher.bin")).unwrap(), fs::read(d.join("again.bin")).unwrap());
    ok(d, &["decrypt", "--input", &p(d, "cipher.bin"), "--key", &p(d, "key.toml")]);
    assert_eq!(fs::read(d.join("sia.pgm")).unwrap(), fs::read(d.join("decrypted.pgm")).unwrap());
}

#[test]
fn wrong_key_decrypts_to_noise() {
    let t = prepared("paper4x4");
    let d = t.path();
    ok(d, &["encrypt", "--input", &p(d, "sia.pgm"), "--key", &p(d, "key.toml")]);
    ok(d, &["--seed", "11", "keygen", "--random", "--output", &p(d, "other.toml")]);
    ok(d, &["decrypt", "--input", &p(d, "cipher.bin"), "--key", &p(d, "other.toml"), "--output", &p(d, "wrong.pgm")]);
    let truth = pnm::read_pgm(d.join("sia.pgm")).unwrap();
    let wrong = pnm::read_pgm(d.join("wrong.pgm")).unwrap();
    assert!(npcr(&truth, &wrong).unwrap() > 99.0);
}

#[test]
fn ciir_flag_reproduces_baseline_and_sr_beats_it() {
    let t = prepared("paper4x4");
    let d = t.path();
    let src = pnm::read_ppm(d.join("source.ppm")).unwrap();
    let common = ["reconstruct", "--input", &p(d, "sia.pgm"), "--layout", &p(d, "layout.toml")];

    ok(d, &[&common[..], &["--ciir-only", "--output", &p(d, "ciir.ppm")]].concat());
    let sia = demosaic(&pnm::read_pgm(d.join("sia.pgm")).unwrap(), &layout(d)).unwrap();
    let baseline = reconstruct_color(&sia, &SrConfig { method: "ciir".into(), ..SrConfig::default() }).unwrap();
    let ciir = pnm::read_ppm(d.join("ciir.ppm")).unwrap();
    assert_eq!(ciir, baseline);
    assert!(!d.join("iterations_g.csv").exists());

    ok(d, &[&common[..], &["--reference", &p(d, "source.ppm")]].concat());
    let sr = pnm::read_ppm(d.join("reconstruction.ppm")).unwrap();
    assert!(psnr_color(&sr, &src).unwrap() > psnr_color(&ciir, &src).unwrap() + 2.0);
    let trace = fs::read_to_string(d.join("iterations_g.csv")).unwrap();
    assert!(trace.starts_with("iteration,error,data_objective,psnr\n"));
    assert!(fs::read_to_string(d.join("reconstruct.csv")).unwrap().contains("psnr_sr,"));
}

#[test]
fn analyze_writes_reports_and_heat_maps() {
    let t = prepared("tiny");
    let d = t.path();
    ok(d, &["encrypt", "--input", &p(d, "sia.pgm"), "--key", &p(d, "key.toml")]);
    ok(d, &["analyze", "--plain", &p(d, "sia.pgm"), "--cipher", &p(d, "cipher.bin"), "--key", &p(d, "key.toml"),
            "--restored", &p(d, "source.ppm")]);
    let report = fs::read_to_string(d.join("report.csv")).unwrap();
    assert!(report.starts_with("metric,value\n") && report.contains("chi_square_cipher,"));
    let hist = fs::read_to_string(d.join("histograms.csv")).unwrap();
    assert_eq!(hist.lines().next(), Some("level,plain,cipher,restored_r,restored_g,restored_b"));
    assert_eq!(hist.lines().count(), 257);
    let plain = pnm::read_pgm(d.join("sia.pgm")).unwrap();
    let map = pnm::read_pgm(d.join("autocorr_cipher.pgm")).unwrap();
    assert_eq!((map.width(), map.height()), (2 * plain.width() - 1, 2 * plain.height() - 1));
    assert!(fs::read_to_string(d.join("autocorr_cipher.txt")).unwrap().contains("white = "));
    assert_eq!(fs::read_to_string(d.join("sensitivity.csv")).unwrap().lines().count(), 1 + 36);
}

#[test]
fn bench_writes_one_row_per_size() {
    let t = TempDir::new().unwrap();
    ok(t.path(), &["bench", "--sizes", "40x30,80x60", "--repeats", "1"]);
    let csv = fs::read_to_string(t.path().join("scaling.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[2].starts_with("80,60,4800,"));
}

fn run_all_files(dir: &Path, extra: &[&str]) -> Vec<(PathBuf, Vec<u8>)> {
    let cfg = dir.join("pipeline.toml");
    fs::write(&cfg, "version = 1\nseed = 5\nprofile = \"tiny\"\n[scene]\nkind = \"natural\"\n[sr]\nmax_iters = 40\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_monoseal"))
        .args(["--config", &cfg.to_string_lossy(), "--out", &p(dir, "run"), "run-all"])
        .envs(extra.chunks(2).map(|kv| (kv[0], kv[1])))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut files: Vec<(PathBuf, Vec<u8>)> = fs::read_dir(dir.join("run"))
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (PathBuf::from(path.file_name().unwrap()), fs::read(&path).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn run_all_is_idempotent_and_thread_count_invariant() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let first = run_all_files(a.path(), &[]);
    let second = run_all_files(b.path(), &["MONOSEAL_THREADS", "1"]);
    let names: Vec<_> = first.iter().map(|(n, _)| n.to_string_lossy().into_owned()).collect();
    for expected in ["cipher.bin", "reconstruction.ppm", "ciir.ppm", "occlusion.csv", "summary.csv", "sensitivity.csv"] {
        assert!(names.iter().any(|n| n == expected), "missing {expected}");
    }
    assert_eq!(first, second);
}

#[test]
fn exit_codes_distinguish_failure_classes() {
    let t = prepared("tiny");
    let d = t.path();
    let bad = d.join("bad.toml");
    fs::write(&bad, "version = 7\n").unwrap();
    assert_eq!(code(d, &["--config", &bad.to_string_lossy(), "keygen"]), 2);
    fs::write(&bad, "version = 1\n[sr]\nestimator = \"mean\"\n").unwrap();
    assert_eq!(code(d, &["--config", &bad.to_string_lossy(), "keygen"]), 2);

    let huge = d.join("huge.toml");
    fs::write(&huge, "version = 1\nprofile = \"tiny\"\n[sr]\nbeta = 1.7976931348623157e308\n").unwrap();
    let args = ["reconstruct", "--input", &p(d, "sia.pgm"), "--layout", &p(d, "layout.toml")];
    assert_eq!(code(d, &[&["--config", &huge.to_string_lossy()][..], &args[..]].concat()), 4);

    assert_eq!(code(d, &["encrypt", "--input", &p(d, "missing.pgm"), "--key", &p(d, "key.toml")]), 5);
    fs::write(d.join("broken_key.toml"), "version = 1\n").unwrap();
    assert_eq!(code(d, &["encrypt", "--input", &p(d, "sia.pgm"), "--key", &p(d, "broken_key.toml")]), 3);
}

#[test]
fn show_config_round_trips() {
    let t = TempDir::new().unwrap();
    let out = monoseal(t.path(), &["--seed", "42", "--profile", "paper6x6", "show-config"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let cfg = t.path().join("echo.toml");
    fs::write(&cfg, &text).unwrap();
    let again = monoseal(t.path(), &["--config", &cfg.to_string_lossy(), "show-config"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
    assert!(text.contains("seed = 42") && text.contains("profile = \"paper6x6\""));
}

#[test]
fn config_source_path_is_used() {
    let t = TempDir::new().unwrap();
    let d = t.path();
    pnm::write_ppm(d.join("scene.ppm"), &scene::test_chart(24, 24)).unwrap();
    fs::write(d.join("pipeline.toml"), "version = 1\nprofile = \"tiny\"\n[paths]\nsource = \"scene.ppm\"\n").unwrap();
    ok(d, &["--config", &p(d, "pipeline.toml"), "capture"]);
    assert!(!d.join("source.ppm").exists());
    assert_eq!(layout(d).tile_width, 24);
}
