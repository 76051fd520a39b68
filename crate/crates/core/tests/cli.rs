use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use lbstrip::experiment::{preset, ExperimentConfig, Mode};
use lbstrip::geometry::{Obstacle, Vec2};
use lbstrip::scattering::KernelParams;

fn lbstrip(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lbstrip")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, cfg: &ExperimentConfig) -> String {
    let path = dir.join(name);
    fs::write(&path, cfg.to_toml()).unwrap();
    path.to_string_lossy().into_owned()
}

fn small_stationary(out: &Path) -> ExperimentConfig {
    let mut cfg = preset("fig-square-obstacle", false).unwrap();
    cfg.n_particles = 5_000;
    cfg.kernel = KernelParams::new(0.1);
    cfg.output_dir = out.to_path_buf();
    cfg
}

#[test]
fn lists_presets() {
    let out = lbstrip(&["presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().any(|l| l == "sweep-center-thin"));
}

#[test]
fn shown_preset_parses_back() {
    let out = lbstrip(&["show", "sweep-height-wide"]);
    assert!(out.status.success());
    let cfg = ExperimentConfig::from_toml(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(cfg.mode, Mode::ResidenceSweep);
    assert_eq!(cfg.kernel.mean_flight_time, 0.02);
}

#[test]
fn unknown_preset_fails() {
    let out = lbstrip(&["run", "--preset", "fig-nothing"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("fig-nothing"));
}

#[test]
fn obstacle_outside_strip_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let mut cfg = small_stationary(&out_dir);
    cfg.domain.obstacles.push(Obstacle::rectangle(Vec2::new(4.5, 0.5), 0.2, 0.2));
    let path = write_config(dir.path(), "bad.toml", &cfg);
    let out = lbstrip(&["run", &path]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("[domain]") && err.contains("obstacle 1"), "{err}");
    assert!(!out_dir.exists());
}

#[test]
fn failing_run_leaves_no_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let mut cfg = small_stationary(&out_dir);
    // the finite-difference reference does not support disks
    cfg.domain.obstacles = vec![Obstacle::disk(Vec2::new(2.0, 0.5), 0.3)];
    let path = write_config(dir.path(), "disk.toml", &cfg);
    let out = lbstrip(&["run", &path]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("[solver]"));
    assert!(!out_dir.exists());

    // an existing directory is kept but nothing is written into it
    fs::create_dir(&out_dir).unwrap();
    assert!(!lbstrip(&["run", &path]).status.success());
    assert_eq!(fs::read_dir(&out_dir).unwrap().count(), 0);
}

#[test]
fn stationary_run_is_reproducible_and_self_describing() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = small_stationary(&out_dir);
    let path = write_config(dir.path(), "cfg.toml", &cfg);
    let out_str = out_dir.to_string_lossy().into_owned();

    let first = lbstrip(&["run", &path, "--workers", "1", "--seed", "5", "--output", &out_str]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let names = ["density.csv", "oracle.csv", "relative_error.csv", "local_residence.csv", "column_average.csv", "summary.txt"];
    let read = || names.map(|n| fs::read(out_dir.join(n)).unwrap());
    let a = read();
    let second = lbstrip(&["run", &path, "--workers", "3", "--seed", "5", "--output", &out_str]);
    assert!(second.status.success());
    assert_eq!(a, read());

    // every file carries the resolved config, including the overridden seed
    for bytes in &a {
        let text = String::from_utf8_lossy(bytes);
        let header: String = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| format!("{}\n", l.trim_start_matches('#').trim_start()))
            .collect();
        let embedded = ExperimentConfig::from_toml(&header).unwrap();
        assert_eq!(embedded.seed, 5);
        assert_eq!(embedded.n_particles, 5_000);
    }
    let summary = String::from_utf8_lossy(&a[5]).into_owned();
    assert!(summary.contains("relative error max"));
    assert!(summary.contains("exits left"));
}

#[test]
fn oracle_mode_writes_flux_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_stationary(&dir.path().join("oracle"));
    cfg.mode = Mode::Oracle;
    let path = write_config(dir.path(), "oracle.toml", &cfg);
    let out = lbstrip(&["run", &path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let flux = fs::read_to_string(dir.path().join("oracle/flux.csv")).unwrap();
    let rows: Vec<&str> = flux.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "column,x1,flux");
    let fluxes: Vec<f64> = rows[1..].iter().map(|r| r.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert!(fluxes.len() > 100);
    let (lo, hi) = fluxes.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &f| (lo.min(f), hi.max(f)));
    assert!((hi - lo) / hi < 1e-5, "{lo} {hi}");
}

#[test]
fn msd_mode_reports_fit() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_stationary(&dir.path().join("msd"));
    cfg.mode = Mode::MsdCheck;
    cfg.kernel = KernelParams::new(1.0);
    cfg.n_particles = 4_000;
    let path = write_config(dir.path(), "msd.toml", &cfg);
    let out = lbstrip(&["run", &path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary = fs::read_to_string(dir.path().join("msd/summary.txt")).unwrap();
    assert!(summary.contains("expected D 0.375000"), "{summary}");
    let table = fs::read_to_string(dir.path().join("msd/msd.csv")).unwrap();
    assert_eq!(table.lines().filter(|l| !l.starts_with('#')).count(), 17);
}

#[test]
fn sweep_mode_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preset("sweep-height-thin", false).unwrap();
    cfg.n_particles = 3_000;
    cfg.kernel = KernelParams::new(0.1);
    cfg.sweep.as_mut().unwrap().values = vec![0.8, 0.2];
    cfg.output_dir = dir.path().join("sweep");
    let path = write_config(dir.path(), "sweep.toml", &cfg);
    let out = lbstrip(&["run", &path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep/residence.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows[0].starts_with("parameter,value,mean_residence_time,stderr"));
    assert!(rows[1].starts_with("baseline,,"));
    assert!(rows[2].starts_with("obstacle_height,0.2,"));
    assert!(rows[3].starts_with("obstacle_height,0.8,"));
}

#[test]
fn sweep_value_outside_strip_names_value() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = preset("sweep-height-thin", false).unwrap();
    cfg.sweep.as_mut().unwrap().values = vec![0.5, 1.5];
    cfg.output_dir = dir.path().join("sweep");
    let path = write_config(dir.path(), "sweep.toml", &cfg);
    let out = lbstrip(&["run", &path]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("[sweep]") && err.contains("1.5"), "{err}");
}
