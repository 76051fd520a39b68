//! Residence-time experiments: obstacle sweeps, the left/center/right
//! split of crossing times and local residence maps.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::ScalarField;
use crate::geometry::{DomainConfig, Obstacle, Vec2, Violation};
use crate::grid::GridSpec;
use crate::rng::mix_seed;
use crate::scattering::{KernelParams, Side};
use crate::transport::{batch_means_stderr, run_batch, BatchResult, BatchSettings, TransportError};

/// Partition of the strip into `x1 < x_left`, `x_left <= x1 <= x_right`
/// and `x1 > x_right`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionDecomposition {
    pub x_left: f64,
    pub x_right: f64,
}

impl RegionDecomposition {
    pub fn new(x_left: f64, x_right: f64) -> Self {
        Self { x_left, x_right }
    }

    /// The obstacles' x-extent, or the strip midline for an empty strip.
    pub fn for_config(config: &DomainConfig) -> Self {
        match config.obstacle_x_extent() {
            Some((lo, hi)) => Self::new(lo.max(0.0), hi.min(config.strip.length_x)),
            None => {
                let mid = 0.5 * config.strip.length_x;
                Self::new(mid, mid)
            }
        }
    }

    pub fn is_valid(&self, length_x: f64) -> bool {
        0.0 <= self.x_left && self.x_left <= self.x_right && self.x_right <= length_x
    }

    /// Time a unit-speed segment starting at abscissa `x0` with horizontal
    /// velocity `vx` spends in each region over `length`.
    #[inline]
    pub fn split(&self, x0: f64, vx: f64, length: f64) -> [f64; 3] {
        let left = time_below(x0, vx, length, self.x_left);
        let right = length - time_below(x0, vx, length, self.x_right);
        let center = (length - left - right).max(0.0);
        [left, center, right]
    }
}

#[inline]
fn time_below(x0: f64, vx: f64, length: f64, bound: f64) -> f64 {
    if vx > 0.0 {
        ((bound - x0) / vx).clamp(0.0, length)
    } else if vx < 0.0 {
        length - ((bound - x0) / vx).clamp(0.0, length)
    } else if x0 < bound {
        length
    } else {
        0.0
    }
}

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no crossing statistics")]
    NoCrossers,
    #[error("sweep value {value} (index {index}): {}", .violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidSweepValue {
        index: usize,
        value: f64,
        violations: Vec<Violation>,
    },
    #[error(transparent)]
    Transport(#[from] TransportError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweptParameter {
    ObstacleHeight,
    ObstacleWidth,
    /// Side of a square obstacle.
    ObstacleSide,
    ObstacleCenterX,
}

impl SweptParameter {
    pub fn label(self) -> &'static str {
        match self {
            SweptParameter::ObstacleHeight => "obstacle_height",
            SweptParameter::ObstacleWidth => "obstacle_width",
            SweptParameter::ObstacleSide => "obstacle_side",
            SweptParameter::ObstacleCenterX => "obstacle_center_x",
        }
    }
}

/// Rectangle varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RectTemplate {
    pub center: Vec2,
    pub width: f64,
    pub height: f64,
}

impl RectTemplate {
    pub fn with(&self, parameter: SweptParameter, value: f64) -> RectTemplate {
        let mut r = *self;
        match parameter {
            SweptParameter::ObstacleHeight => r.height = value,
            SweptParameter::ObstacleWidth => r.width = value,
            SweptParameter::ObstacleSide => {
                r.width = value;
                r.height = value;
            }
            SweptParameter::ObstacleCenterX => r.center.x = value,
        }
        r
    }

    pub fn obstacle(&self) -> Obstacle {
        Obstacle::rectangle(self.center, self.width, self.height)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub parameter: SweptParameter,
    pub values: Vec<f64>,
    pub template: RectTemplate,
    /// Left/center/right split; defaults to each obstacle's x-extent.
    #[serde(default)]
    pub regions: Option<RegionDecomposition>,
}

impl SweepSpec {
    /// Domain for one sweep value: the base domain plus the varied rectangle.
    pub fn config_for(&self, base: &DomainConfig, value: f64) -> DomainConfig {
        base.clone().with_obstacle(self.template.with(self.parameter, value).obstacle())
    }

    /// Checks every generated domain.
    pub fn validate(&self, base: &DomainConfig) -> Result<(), AnalysisError> {
        for (index, &value) in self.values.iter().enumerate() {
            let violations = self.config_for(base, value).validate();
            if !violations.is_empty() {
                return Err(AnalysisError::InvalidSweepValue {
                    index,
                    value,
                    violations,
                });
            }
        }
        Ok(())
    }
}

/// Seed of sweep point `index`; the empty-strip baseline uses the base seed.
pub fn sweep_seed(base: u64, index: usize) -> u64 {
    mix_seed(base, index as u64)
}

/// Mean left/center/right times of left-to-right crossers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionTimes {
    pub mean: [f64; 3],
    pub stderr: [f64; 3],
}

pub fn region_times(batch: &BatchResult) -> Result<RegionTimes, AnalysisError> {
    let mean = batch.crossers().mean_region_times().ok_or(AnalysisError::NoCrossers)?;
    let stderr = [0, 1, 2].map(|r| batch_means_stderr(&batch.crossing_batches, |c| c.mean_region_times().map(|m| m[r])));
    Ok(RegionTimes { mean, stderr })
}

/// One line of a residence report.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidenceRow {
    pub value: Option<f64>,
    pub mean_time: f64,
    pub stderr: f64,
    pub crossers: u64,
    pub left_injected: u64,
    pub right_exits: u64,
    pub injected: u64,
    pub aborted: u64,
    pub regions: RegionDecomposition,
    pub region_times: [f64; 3],
    pub region_stderr: [f64; 3],
}

impl ResidenceRow {
    pub fn from_batch(value: Option<f64>, batch: &BatchResult) -> Self {
        let (mean_time, stderr) = batch.residence_time().unwrap_or((f64::NAN, f64::NAN));
        let (region_times, region_stderr) = match region_times(batch) {
            Ok(r) => (r.mean, r.stderr),
            Err(_) => ([f64::NAN; 3], [f64::NAN; 3]),
        };
        Self {
            value,
            mean_time,
            stderr,
            crossers: batch.crossers().count,
            left_injected: batch.injected(Side::Left),
            right_exits: batch.exits(Side::Right),
            injected: batch.n_particles,
            aborted: batch.aborted,
            regions: batch.regions,
            region_times,
            region_stderr,
        }
    }

    /// Whether this row's time is below `other`'s by at least `sigmas`
    /// combined standard errors.
    pub fn significantly_below(&self, other: &ResidenceRow, sigmas: f64) -> bool {
        let se = self.stderr.hypot(other.stderr);
        other.mean_time - self.mean_time >= sigmas * se
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidenceReport {
    pub parameter: SweptParameter,
    pub baseline: ResidenceRow,
    pub rows: Vec<ResidenceRow>,
}

const REPORT_HEADER: &str = "parameter,value,mean_residence_time,stderr,crossers,left_injected,right_exits,injected,aborted,x_left,x_right,t_left,t_center,t_right,t_left_stderr,t_center_stderr,t_right_stderr";

impl ResidenceReport {
    /// CSV with one row per sweep value after a `baseline` row.
    pub fn to_csv(&self, comments: &str) -> String {
        let mut out = String::new();
        for line in comments.lines() {
            writeln!(out, "# {line}").unwrap();
        }
        writeln!(out, "{REPORT_HEADER}").unwrap();
        let mut row = |name: &str, r: &ResidenceRow| {
            let value = r.value.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                out,
                "{name},{value},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.mean_time,
                r.stderr,
                r.crossers,
                r.left_injected,
                r.right_exits,
                r.injected,
                r.aborted,
                r.regions.x_left,
                r.regions.x_right,
                r.region_times[0],
                r.region_times[1],
                r.region_times[2],
                r.region_stderr[0],
                r.region_stderr[1],
                r.region_stderr[2],
            )
            .unwrap();
        };
        row("baseline", &self.baseline);
        for r in &self.rows {
            row(self.parameter.label(), r);
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        let b = &self.baseline;
        writeln!(
            out,
            "empty strip: residence time {:.4} +/- {:.4} ({} crossers)",
            b.mean_time, b.stderr, b.crossers
        )
        .unwrap();
        for r in &self.rows {
            let rel = if r.significantly_below(b, 2.0) {
                "below"
            } else if b.significantly_below(r, 2.0) {
                "above"
            } else {
                "level with"
            };
            writeln!(
                out,
                "{} = {}: residence time {:.4} +/- {:.4} ({} crossers, {} right exits) {} the empty strip",
                self.parameter.label(),
                r.value.unwrap_or(f64::NAN),
                r.mean_time,
                r.stderr,
                r.crossers,
                r.right_exits,
                rel
            )
            .unwrap();
        }
        out
    }
}

/// Settings shared by every batch of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRun {
    pub n_particles: u64,
    pub grid: GridSpec,
    pub seed: u64,
    pub workers: usize,
    pub max_events: u64,
}

/// Runs the empty-strip baseline and one batch per sweep value, rows
/// ordered by value.
pub fn run_sweep(
    base: &DomainConfig,
    spec: &SweepSpec,
    params: KernelParams,
    run: &SweepRun,
) -> Result<ResidenceReport, AnalysisError> {
    spec.validate(base)?;
    let settings = |seed: u64, regions: RegionDecomposition| {
        let mut s = BatchSettings::new(run.n_particles, run.grid, seed)
            .workers(run.workers)
            .regions(regions);
        s.max_events = run.max_events;
        s
    };

    let base_regions = spec.regions.unwrap_or_else(|| {
        let extent = spec.config_for(base, spec.values.first().copied().unwrap_or(0.0));
        RegionDecomposition::for_config(&extent)
    });
    let baseline_batch = run_batch(base, params, &settings(run.seed, base_regions))?;
    let baseline = ResidenceRow::from_batch(None, &baseline_batch);

    let mut order: Vec<usize> = (0..spec.values.len()).collect();
    order.sort_by(|&a, &b| spec.values[a].total_cmp(&spec.values[b]));
    let mut rows = Vec::with_capacity(order.len());
    for index in order {
        let value = spec.values[index];
        let config = spec.config_for(base, value);
        let regions = spec.regions.unwrap_or_else(|| RegionDecomposition::for_config(&config));
        let batch = run_batch(&config, params, &settings(sweep_seed(run.seed, index), regions))?;
        rows.push(ResidenceRow::from_batch(Some(value), &batch));
    }
    Ok(ResidenceReport {
        parameter: spec.parameter,
        baseline,
        rows,
    })
}

/// Mean time left-to-right crossers spend in each cell, over the crossers
/// that visit it, with the standard error of that mean.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalResidenceMap {
    pub mean: ScalarField,
    pub stderr: ScalarField,
    pub visits: Vec<u64>,
}

/// Cells never visited by a crosser and obstacle cells are masked.
pub fn local_residence_map(batch: &BatchResult) -> LocalResidenceMap {
    let layout = batch.layout;
    let n = layout.spec.len();
    let mut mask = vec![false; n];
    let mut mean = vec![f64::NAN; n];
    let mut stderr = vec![f64::NAN; n];
    for k in 0..n {
        let c = batch.crossing.count[k];
        if batch.sojourn.mask[k] || c == 0 {
            mask[k] = true;
            continue;
        }
        let cf = c as f64;
        let m = batch.crossing.time_sum[k] / cf;
        mean[k] = m;
        stderr[k] = if c > 1 {
            let var = (batch.crossing.time_sq_sum[k] / cf - m * m).max(0.0) * cf / (cf - 1.0);
            (var / cf).sqrt()
        } else {
            f64::NAN
        };
    }
    LocalResidenceMap {
        mean: ScalarField {
            layout,
            values: mean,
            mask: mask.clone(),
        },
        stderr: ScalarField {
            layout,
            values: stderr,
            mask,
        },
        visits: batch.crossing.count.clone(),
    }
}
