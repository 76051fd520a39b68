//! Finite-difference reference solution of the mixed boundary problem
//! `Laplace(rho) = 0`, `rho = rho_L` on the left side, `rho = rho_R` on the
//! right side and zero normal derivative on walls and obstacles.
//!
//! Unknowns live at cell centers of the same square grid the Monte Carlo
//! estimator uses. Dirichlet data sit on the outer vertical faces and enter
//! through mirrored ghost values `2 rho_B - u`; reflecting faces use the
//! ghost value `u`, so no flux crosses them. The system is solved by
//! lexicographic successive over-relaxation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{obstacle_masks, ScalarField};
use crate::geometry::{DomainConfig, Obstacle, Violation};
use crate::grid::{GridError, GridSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Largest admissible discrete Laplacian residual on free cells.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub relaxation: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 1_000_000,
            relaxation: 1.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LaplaceError {
    #[error("invalid domain: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidDomain(Vec<Violation>),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("solver settings out of range: {0}")]
    InvalidSettings(String),
    #[error("obstacle {index}: only rectangles are supported by the finite-difference solver")]
    UnsupportedObstacle { index: usize },
    #[error(
        "obstacle {index}: edge at {coordinate} is not on a cell face (cell size {cell}); refine the grid so obstacle edges fall on cell faces"
    )]
    Unaligned { index: usize, coordinate: f64, cell: f64 },
    #[error("no convergence after {iterations} sweeps (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("column {column} is not strictly between the boundary columns")]
    ColumnOutOfRange { column: usize },
    #[error("column {column} is blocked over its full height")]
    BlockedColumn { column: usize },
}

/// Relative distance (in cells) an obstacle edge may sit from a cell face.
const ALIGNMENT_TOLERANCE: f64 = 1e-6;

const NONE: u32 = u32::MAX;

/// Sweeps between residual evaluations.
const CHECK_EVERY: usize = 16;

pub fn solve(config: &DomainConfig, spec: GridSpec, settings: &SolverSettings) -> Result<ScalarField, LaplaceError> {
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(LaplaceError::InvalidDomain(violations));
    }
    if !(settings.tolerance > 0.0) {
        return Err(LaplaceError::InvalidSettings(format!("tolerance {}", settings.tolerance)));
    }
    if !(settings.relaxation > 0.0 && settings.relaxation < 2.0) {
        return Err(LaplaceError::InvalidSettings(format!("relaxation {}", settings.relaxation)));
    }
    let layout = spec.layout(&config.strip)?;
    let h = layout.cell;
    for (index, obs) in config.obstacles.iter().enumerate() {
        if matches!(obs, Obstacle::Disk { .. }) {
            return Err(LaplaceError::UnsupportedObstacle { index });
        }
        let bb = obs.bounding_box();
        for coordinate in [bb.min.x, bb.max.x, bb.min.y, bb.max.y] {
            let cells = coordinate / h;
            if (cells - cells.round()).abs() > ALIGNMENT_TOLERANCE {
                return Err(LaplaceError::Unaligned {
                    index,
                    coordinate,
                    cell: h,
                });
            }
        }
    }

    let (mask, _) = obstacle_masks(&layout, &config.obstacles);
    let (nx, ny) = (spec.n_x, spec.n_y);
    let n = nx * ny;

    // per free cell: neighbour indices, diagonal weight and Dirichlet source
    let mut neighbours = vec![[NONE; 4]; n];
    let mut diag = vec![0.0; n];
    let mut source = vec![0.0; n];
    for j in 0..ny {
        for i in 0..nx {
            let k = layout.index(i, j);
            if mask[k] {
                continue;
            }
            let mut slot = 0;
            let mut link = |other: Option<usize>, nb: &mut [u32; 4], d: &mut f64| {
                if let Some(o) = other {
                    if !mask[o] {
                        nb[slot] = o as u32;
                        slot += 1;
                        *d += 1.0;
                    }
                }
            };
            let (nb, d) = (&mut neighbours[k], &mut diag[k]);
            link((i > 0).then(|| k - 1), nb, d);
            link((i + 1 < nx).then(|| k + 1), nb, d);
            link((j > 0).then(|| k - nx), nb, d);
            link((j + 1 < ny).then(|| k + nx), nb, d);
            if i == 0 {
                diag[k] += 2.0;
                source[k] += 2.0 * config.rho_left;
            }
            if i + 1 == nx {
                diag[k] += 2.0;
                source[k] += 2.0 * config.rho_right;
            }
        }
    }

    let start = 0.5 * (config.rho_left + config.rho_right);
    let mut u: Vec<f64> = mask.iter().map(|&m| if m { f64::NAN } else { start }).collect();
    let omega = settings.relaxation;
    let inv_h2 = 1.0 / (h * h);

    let residual = |u: &[f64]| -> f64 {
        let mut worst = 0.0f64;
        for k in 0..n {
            if mask[k] {
                continue;
            }
            let mut sum = source[k];
            for &o in &neighbours[k] {
                if o == NONE {
                    break;
                }
                sum += u[o as usize];
            }
            worst = worst.max(((sum - diag[k] * u[k]) * inv_h2).abs());
        }
        worst
    };

    let mut iterations = 0;
    let mut last = residual(&u);
    while last >= settings.tolerance {
        if iterations >= settings.max_iterations {
            return Err(LaplaceError::NotConverged {
                iterations,
                residual: last,
            });
        }
        let sweeps = CHECK_EVERY.min(settings.max_iterations - iterations);
        for _ in 0..sweeps {
            for k in 0..n {
                if mask[k] {
                    continue;
                }
                let mut sum = source[k];
                for &o in &neighbours[k] {
                    if o == NONE {
                        break;
                    }
                    sum += u[o as usize];
                }
                let target = sum / diag[k];
                u[k] += omega * (target - u[k]);
            }
        }
        iterations += sweeps;
        last = residual(&u);
    }

    Ok(ScalarField {
        layout,
        values: u,
        mask,
    })
}

/// Net left-to-right flux `-d rho/d x1` integrated over the cut through
/// column `column`, using the average of the two face differences that
/// bound each cell. Faces touching an obstacle carry no flux.
pub fn flux_through(field: &ScalarField, column: usize) -> Result<f64, LaplaceError> {
    let layout = field.layout;
    let (nx, ny) = (layout.spec.n_x, layout.spec.n_y);
    if column == 0 || column + 1 >= nx {
        return Err(LaplaceError::ColumnOutOfRange { column });
    }
    if (0..ny).all(|j| field.mask[layout.index(column, j)]) {
        return Err(LaplaceError::BlockedColumn { column });
    }
    let h = layout.cell;
    let face = |i: usize, j: usize| -> f64 {
        match (field.get(i, j), field.get(i + 1, j)) {
            (Some(a), Some(b)) => (a - b) / h,
            _ => 0.0,
        }
    };
    let total: f64 = (0..ny)
        .map(|j| 0.5 * (face(column - 1, j) + face(column, j)))
        .sum();
    Ok(total * h)
}

/// Flux through every interior column that is not fully blocked.
pub fn flux_profile(field: &ScalarField) -> Vec<(usize, f64)> {
    (1..field.layout.spec.n_x.saturating_sub(1))
        .filter_map(|i| flux_through(field, i).ok().map(|f| (i, f)))
        .collect()
}
