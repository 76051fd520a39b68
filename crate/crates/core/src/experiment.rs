//! Configuration-file driven experiments and their file outputs.
//!
//! A config is a TOML document:
//!
//! ```toml
//! mode = "stationary"        # stationary | residence-sweep | oracle | msd-check
//! n_particles = 2000000
//! seed = 1
//! output_dir = "out/fig-empty"
//!
//! [domain]
//! rho_left = 1.0
//! rho_right = 0.5
//! strip = { length_x = 4.0, length_y = 1.0 }
//! obstacles = [{ shape = "rectangle", center = [2.0, 0.5], half_width = 0.4, half_height = 0.4 }]
//!
//! [kernel]
//! mean_flight_time = 0.01
//!
//! [grid]
//! n_x = 200
//! n_y = 50
//! ```
//!
//! Optional sections: `[sweep]` (required for `residence-sweep`),
//! `[solver]`, `[msd]`, `[regions]`, the keys `normalization` and
//! `max_events`, and `domain.injection` (`uniform_angle` or `cosine`).

use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{local_residence_map, run_sweep, RectTemplate, RegionDecomposition, SweepRun, SweepSpec, SweptParameter};
use crate::density::{column_average, normalize, relative_error, summarize_error, Normalization, ScalarField};
use crate::geometry::{DomainConfig, Obstacle, Vec2};
use crate::grid::GridSpec;
use crate::laplace::{flux_profile, solve, SolverSettings};
use crate::scattering::{diffusion_coefficient, KernelParams, Side};
use crate::transport::{
    fit_diffusion, mean_square_displacement, quasi_free_domain, run_batch, BatchSettings, DEFAULT_MAX_EVENTS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Stationary,
    ResidenceSweep,
    Oracle,
    MsdCheck,
}

/// Sampling of the mean-square-displacement check. Times are in units of
/// the mean flight time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MsdSettings {
    pub horizon: f64,
    pub samples: usize,
    pub fit_from: f64,
}

impl Default for MsdSettings {
    fn default() -> Self {
        Self {
            horizon: 400.0,
            samples: 16,
            fit_from: 50.0,
        }
    }
}

impl MsdSettings {
    pub fn times(&self, params: &KernelParams) -> Vec<f64> {
        let t_m = params.mean_flight_time;
        let n = self.samples.max(2);
        (1..=n).map(|k| self.horizon * t_m * k as f64 / n as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub n_particles: u64,
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default = "default_max_events")]
    pub max_events: u64,
    pub domain: DomainConfig,
    pub kernel: KernelParams,
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regions: Option<RegionDecomposition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSettings>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub msd: Option<MsdSettings>,
}

fn default_max_events() -> u64 {
    DEFAULT_MAX_EVENTS
}

/// Failure of a run, tagged with the config section or stage at fault.
#[derive(Debug, Error)]
#[error("[{section}] {message}")]
pub struct ExperimentError {
    pub section: &'static str,
    pub message: String,
}

impl ExperimentError {
    fn new(section: &'static str, message: impl ToString) -> Self {
        Self {
            section,
            message: message.to_string(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::new("config", e.message().trim()))
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::new("config", format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    /// Checks that every section is usable for the selected mode.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.n_particles == 0 {
            return Err(ExperimentError::new("n_particles", "at least one particle is required"));
        }
        if self.max_events == 0 {
            return Err(ExperimentError::new("max_events", "must be positive"));
        }
        if !self.kernel.is_valid() {
            return Err(ExperimentError::new(
                "kernel",
                format!("mean_flight_time must be positive (got {})", self.kernel.mean_flight_time),
            ));
        }
        if self.mode != Mode::MsdCheck {
            let violations = self.domain.validate();
            if !violations.is_empty() {
                let text: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
                return Err(ExperimentError::new("domain", text.join("; ")));
            }
            self.grid
                .layout(&self.domain.strip)
                .map_err(|e| ExperimentError::new("grid", e))?;
        }
        if let Some(r) = &self.regions {
            if !r.is_valid(self.domain.strip.length_x) {
                return Err(ExperimentError::new("regions", "need 0 <= x_left <= x_right <= length_x"));
            }
        }
        if let Some(s) = &self.solver {
            if !(s.tolerance > 0.0 && s.relaxation > 0.0 && s.relaxation < 2.0) {
                return Err(ExperimentError::new("solver", "need tolerance > 0 and 0 < relaxation < 2"));
            }
        }
        match self.mode {
            Mode::ResidenceSweep => {
                let sweep = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| ExperimentError::new("sweep", "residence-sweep mode needs a [sweep] section"))?;
                if sweep.values.is_empty() {
                    return Err(ExperimentError::new("sweep", "no sweep values"));
                }
                sweep.validate(&self.domain).map_err(|e| ExperimentError::new("sweep", e))?;
            }
            Mode::MsdCheck => {
                let m = self.msd.unwrap_or_default();
                if !(m.horizon > 0.0 && m.samples >= 2 && m.fit_from < m.horizon) {
                    return Err(ExperimentError::new("msd", "need horizon > fit_from and at least two samples"));
                }
            }
            Mode::Stationary | Mode::Oracle => {}
        }
        Ok(())
    }
}

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 10] = [
    "fig-empty",
    "fig-square-obstacle",
    "fig-thin-obstacle",
    "fig-two-obstacles",
    "sweep-height-thin",
    "sweep-height-wide",
    "sweep-width",
    "sweep-square-side",
    "sweep-center-square",
    "sweep-center-thin",
];

pub const DESK_PARTICLES: u64 = 2_000_000;
pub const FULL_STATIONARY_PARTICLES: u64 = 50_000_000;
pub const FULL_RESIDENCE_PARTICLES: u64 = 100_000_000;

fn strip() -> DomainConfig {
    DomainConfig::empty(4.0, 1.0, 1.0, 0.5)
}

fn centered(width: f64, height: f64) -> Obstacle {
    Obstacle::rectangle(Vec2::new(2.0, 0.5), width, height)
}

fn steps(from: f64, to: f64, step: f64) -> Vec<f64> {
    let n = ((to - from) / step).round() as usize;
    (0..=n).map(|k| ((from + k as f64 * step) * 1e6).round() / 1e6).collect()
}

/// Built-in configuration for one of [`PRESETS`]; `full_scale` selects
/// the large particle counts used for overnight runs.
pub fn preset(name: &str, full_scale: bool) -> Option<ExperimentConfig> {
    let stationary = |domain: DomainConfig| ExperimentConfig {
        mode: Mode::Stationary,
        n_particles: if full_scale { FULL_STATIONARY_PARTICLES } else { DESK_PARTICLES },
        seed: 1,
        output_dir: PathBuf::from("out").join(name),
        normalization: Normalization::ColumnMean,
        max_events: DEFAULT_MAX_EVENTS,
        domain,
        kernel: KernelParams::new(0.01),
        grid: GridSpec::new(200, 50),
        regions: None,
        sweep: None,
        solver: None,
        msd: None,
    };
    let sweep = |parameter: SweptParameter, values: Vec<f64>, width: f64, height: f64| ExperimentConfig {
        mode: Mode::ResidenceSweep,
        n_particles: if full_scale { FULL_RESIDENCE_PARTICLES } else { DESK_PARTICLES },
        kernel: KernelParams::new(0.02),
        domain: strip(),
        sweep: Some(SweepSpec {
            parameter,
            values,
            template: RectTemplate {
                center: Vec2::new(2.0, 0.5),
                width,
                height,
            },
            regions: None,
        }),
        ..stationary(strip())
    };
    let config = match name {
        "fig-empty" => stationary(strip()),
        "fig-square-obstacle" => stationary(strip().with_obstacle(centered(0.8, 0.8))),
        "fig-thin-obstacle" => stationary(strip().with_obstacle(centered(0.04, 0.8))),
        "fig-two-obstacles" => stationary(
            strip()
                .with_obstacle(Obstacle::rectangle(Vec2::new(1.4, 0.5), 0.6, 0.6))
                .with_obstacle(Obstacle::rectangle(Vec2::new(2.6, 0.5), 0.6, 0.6)),
        ),
        "sweep-height-thin" => sweep(SweptParameter::ObstacleHeight, steps(0.1, 0.9, 0.1), 0.04, 0.8),
        "sweep-height-wide" => sweep(SweptParameter::ObstacleHeight, steps(0.1, 0.9, 0.1), 0.8, 0.8),
        "sweep-width" => sweep(
            SweptParameter::ObstacleWidth,
            vec![0.04, 0.2, 0.4, 0.8, 1.2, 1.6, 2.0, 2.4, 2.8, 3.2, 3.6],
            0.8,
            0.8,
        ),
        "sweep-square-side" => sweep(SweptParameter::ObstacleSide, steps(0.1, 0.9, 0.1), 0.8, 0.8),
        "sweep-center-square" => sweep(SweptParameter::ObstacleCenterX, steps(0.8, 3.2, 0.4), 0.8, 0.8),
        "sweep-center-thin" => sweep(SweptParameter::ObstacleCenterX, steps(0.8, 3.2, 0.4), 0.04, 0.8),
        _ => return None,
    };
    Some(config)
}

/// Files written by a run, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub summary: String,
}

struct Writer<'a> {
    dir: &'a Path,
    header: String,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn write(&mut self, name: &str, body: impl FnOnce(&mut Vec<u8>) -> io::Result<()>) -> Result<(), ExperimentError> {
        let path = self.dir.join(name);
        let mut buf = Vec::new();
        for line in self.header.lines() {
            writeln!(buf, "# {line}").unwrap();
        }
        body(&mut buf).map_err(|e| ExperimentError::new("output", e))?;
        self.files.push(path.clone());
        fs::write(&path, buf).map_err(|e| ExperimentError::new("output", format!("{}: {e}", path.display())))
    }

    fn field(&mut self, name: &str, field: &ScalarField) -> Result<(), ExperimentError> {
        self.write(name, |out| field.write_csv(out, ""))
    }
}

/// Runs the experiment and writes its artifacts to `config.output_dir`.
/// `workers` (0 = all cores) never changes any output. Files written
/// before a failure are removed.
pub fn run(config: &ExperimentConfig, workers: usize) -> Result<RunOutput, ExperimentError> {
    config.validate()?;
    let dir = config.output_dir.as_path();
    let created = !dir.exists();
    fs::create_dir_all(dir).map_err(|e| ExperimentError::new("output_dir", format!("{}: {e}", dir.display())))?;
    let mut writer = Writer {
        dir,
        header: config.to_toml(),
        files: Vec::new(),
    };
    let result = match config.mode {
        Mode::Stationary => stationary(config, workers, &mut writer),
        Mode::Oracle => oracle(config, &mut writer),
        Mode::ResidenceSweep => residence_sweep(config, workers, &mut writer),
        Mode::MsdCheck => msd_check(config, workers, &mut writer),
    };
    match result {
        Ok(summary) => Ok(RunOutput {
            files: writer.files,
            summary,
        }),
        Err(e) => {
            for f in &writer.files {
                let _ = fs::remove_file(f);
            }
            if created {
                let _ = fs::remove_dir(dir);
            }
            Err(e)
        }
    }
}

fn stationary(config: &ExperimentConfig, workers: usize, w: &mut Writer) -> Result<String, ExperimentError> {
    let reference = solve(&config.domain, config.grid, &config.solver.unwrap_or_default())
        .map_err(|e| ExperimentError::new("solver", e))?;
    let mut settings = BatchSettings::new(config.n_particles, config.grid, config.seed).workers(workers);
    settings.max_events = config.max_events;
    settings.regions = config.regions;
    let batch = run_batch(&config.domain, config.kernel, &settings).map_err(|e| ExperimentError::new("transport", e))?;
    let density =
        normalize(&batch.sojourn, &config.domain, config.normalization).map_err(|e| ExperimentError::new("normalization", e))?;
    let error = relative_error(&density, &reference).map_err(|e| ExperimentError::new("density", e))?;
    let stats = summarize_error(&error);
    let local = local_residence_map(&batch);

    w.field("density.csv", &density)?;
    w.field("oracle.csv", &reference)?;
    w.field("relative_error.csv", &error)?;
    w.field("local_residence.csv", &local.mean)?;
    let (mc, exact) = (column_average(&density), column_average(&reference));
    w.write("column_average.csv", |out| {
        writeln!(out, "column,x1,density,oracle")?;
        for (i, (a, b)) in mc.iter().zip(&exact).enumerate() {
            let fmt = |v: &Option<f64>| v.map_or("nan".to_string(), |v| v.to_string());
            writeln!(out, "{i},{},{},{}", (i as f64 + 0.5) * batch.layout.cell, fmt(a), fmt(b))?;
        }
        Ok(())
    })?;

    let mut s = String::new();
    use std::fmt::Write as _;
    writeln!(s, "relative error max {:.6} mean {:.6}", stats.max, stats.mean).unwrap();
    writeln!(
        s,
        "relative error away from obstacle boundaries max {:.6} mean {:.6}",
        stats.max_dilated, stats.mean_dilated
    )
    .unwrap();
    writeln!(s, "injected {} (left {}, right {})", batch.n_particles, batch.injected(Side::Left), batch.injected(Side::Right)).unwrap();
    for entry in [Side::Left, Side::Right] {
        for exit in [Side::Left, Side::Right] {
            writeln!(s, "{}->{} {}", entry.label(), exit.label(), batch.class(entry, exit).count).unwrap();
        }
    }
    writeln!(s, "exits left {} right {}", batch.exits(Side::Left), batch.exits(Side::Right)).unwrap();
    writeln!(s, "aborted {}", batch.aborted).unwrap();
    if let Some((mean, se)) = batch.residence_time() {
        writeln!(s, "residence time {mean:.6} +/- {se:.6}").unwrap();
    }
    w.write("summary.txt", |out| out.write_all(s.as_bytes()))?;
    Ok(s)
}

fn oracle(config: &ExperimentConfig, w: &mut Writer) -> Result<String, ExperimentError> {
    let field = solve(&config.domain, config.grid, &config.solver.unwrap_or_default())
        .map_err(|e| ExperimentError::new("solver", e))?;
    let fluxes = flux_profile(&field);
    w.field("oracle.csv", &field)?;
    w.write("flux.csv", |out| {
        writeln!(out, "column,x1,flux")?;
        for (i, f) in &fluxes {
            writeln!(out, "{i},{},{f}", (*i as f64 + 0.5) * field.layout.cell)?;
        }
        Ok(())
    })?;
    let max = fluxes.iter().map(|f| f.1).fold(f64::NEG_INFINITY, f64::max);
    let min = fluxes.iter().map(|f| f.1).fold(f64::INFINITY, f64::min);
    let s = format!("flux min {min:.9} max {max:.9} spread {:.3e}\n", (max - min) / max.abs());
    w.write("summary.txt", |out| out.write_all(s.as_bytes()))?;
    Ok(s)
}

fn residence_sweep(config: &ExperimentConfig, workers: usize, w: &mut Writer) -> Result<String, ExperimentError> {
    let mut spec = config.sweep.clone().expect("validated");
    if spec.regions.is_none() {
        spec.regions = config.regions;
    }
    let run = SweepRun {
        n_particles: config.n_particles,
        grid: config.grid,
        seed: config.seed,
        workers,
        max_events: config.max_events,
    };
    let report = run_sweep(&config.domain, &spec, config.kernel, &run).map_err(|e| ExperimentError::new("sweep", e))?;
    let csv = report.to_csv("");
    w.write("residence.csv", |out| out.write_all(csv.as_bytes()))?;
    let s = report.summary();
    w.write("summary.txt", |out| out.write_all(s.as_bytes()))?;
    Ok(s)
}

fn msd_check(config: &ExperimentConfig, workers: usize, w: &mut Writer) -> Result<String, ExperimentError> {
    let m = config.msd.unwrap_or_default();
    let params = config.kernel;
    let times = m.times(&params);
    let domain = quasi_free_domain(&params, *times.last().unwrap());
    let table = mean_square_displacement(&domain, params, &times, config.n_particles, config.seed, workers)
        .map_err(|e| ExperimentError::new("transport", e))?;
    let fit = fit_diffusion(&table, m.fit_from * params.mean_flight_time)
        .ok_or_else(|| ExperimentError::new("msd", "fewer than two samples in the fit window"))?;
    let expected = diffusion_coefficient(&params);
    w.write("msd.csv", |out| {
        writeln!(out, "t,msd,stderr,msd_over_4t")?;
        for ((t, v), se) in table.times.iter().zip(&table.msd).zip(&table.stderr) {
            writeln!(out, "{t},{v},{se},{}", v / (4.0 * t))?;
        }
        Ok(())
    })?;
    let s = format!(
        "fitted D {:.6} (slope {:.6}, intercept {:.6})\nexpected D {:.6}\nrelative deviation {:.4}\nescaped {} of {}\n",
        fit.diffusion,
        fit.slope,
        fit.intercept,
        expected,
        (fit.diffusion - expected) / expected,
        table.escaped,
        table.n_particles
    );
    w.write("summary.txt", |out| out.write_all(s.as_bytes()))?;
    Ok(s)
}
