//! Event-driven Monte Carlo for linear Boltzmann transport in a
//! two-dimensional strip with reflecting obstacles and open reservoir sides.
//!
//! Particles enter from two reservoirs, fly at unit speed, scatter off a
//! hard-disk kernel after exponential flight times and reflect specularly
//! off walls and obstacles until they leave through an open side. The time
//! they spend in each grid cell estimates the stationary density, which is
//! compared against a finite-difference solution of the limiting Laplace
//! problem.

pub mod analysis;
pub mod density;
pub mod experiment;
pub mod geometry;
pub mod grid;
pub mod laplace;
pub mod rng;
pub mod scattering;
pub mod transport;

pub use analysis::{local_residence_map, region_times, run_sweep, RegionDecomposition, ResidenceReport, SweepSpec};
pub use density::{normalize, relative_error, Normalization, ScalarField, SojournGrid};
pub use experiment::{ExperimentConfig, Mode};
pub use geometry::{DomainConfig, Obstacle, StripSpec, Vec2};
pub use grid::{GridLayout, GridSpec};
pub use laplace::{flux_through, solve, SolverSettings};
pub use rng::RngStream;
pub use scattering::{KernelParams, Side};
pub use transport::{run_batch, BatchResult, BatchSettings, Simulator};
