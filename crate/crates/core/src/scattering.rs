//! Velocity-jump collision kernel and the sampling rules of the simulator.
//!
//! A jump deflects the unit velocity as an elastic bounce off a unit hard
//! disk hit with impact parameter `delta` uniform on `[-1, 1]`. Writing
//! `alpha = asin|delta|`, the velocity rotates by `pi - 2 alpha`,
//! counterclockwise for `delta >= 0`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::geometry::{DomainConfig, Injection, Vec2};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    /// Mean of the exponential time between jumps. `f64::INFINITY` turns
    /// scattering off.
    pub mean_flight_time: f64,
}

impl KernelParams {
    pub fn new(mean_flight_time: f64) -> Self {
        Self { mean_flight_time }
    }

    /// Pure billiard dynamics, no jumps.
    pub fn ballistic() -> Self {
        Self {
            mean_flight_time: f64::INFINITY,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.mean_flight_time > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Post-collision velocity for impact parameter `delta`.
///
/// The rotation is applied through `cos = 2 delta^2 - 1` and
/// `sin = 2 delta sqrt(1 - delta^2)`, which makes the head-on and grazing
/// cases exact.
#[inline]
pub fn scatter(v: Vec2, delta: f64) -> Vec2 {
    let c = 2.0 * delta * delta - 1.0;
    let s = 2.0 * delta * (1.0 - delta * delta).max(0.0).sqrt();
    v.rotate_cs(c, s)
}

#[inline]
pub fn sample_impact(rng: &mut RngStream) -> f64 {
    2.0 * rng.uniform() - 1.0
}

#[inline]
pub fn sample_flight_time(params: &KernelParams, rng: &mut RngStream) -> f64 {
    if params.mean_flight_time.is_infinite() {
        return f64::INFINITY;
    }
    params.mean_flight_time * rng.exp1()
}

/// Reservoir injection: side, entry point and inward velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub side: Side,
    pub position: Vec2,
    pub velocity: Vec2,
}

/// Chooses the side with probability proportional to its density, then a
/// uniform point on that side and a velocity angle uniform on the inward
/// open half-circle.
pub fn sample_entry(config: &DomainConfig, rng: &mut RngStream) -> Entry {
    let p_left = config.rho_left / (config.rho_left + config.rho_right);
    let side = if rng.uniform() < p_left { Side::Left } else { Side::Right };
    let y = rng.uniform() * config.strip.length_y;
    let theta = match config.injection {
        Injection::UniformAngle => PI * (rng.uniform_open() - 0.5),
        Injection::Cosine => (2.0 * rng.uniform_open() - 1.0).asin(),
    };
    let (s, c) = theta.sin_cos();
    match side {
        Side::Left => Entry {
            side,
            position: Vec2::new(0.0, y),
            velocity: Vec2::new(c, s),
        },
        Side::Right => Entry {
            side,
            position: Vec2::new(config.strip.length_x, y),
            velocity: Vec2::new(-c, s),
        },
    }
}

/// Diffusion coefficient of the jump process at unit speed.
///
/// The mean cosine of the deflection is `-1/3`, so velocity correlations
/// decay at rate `4 / (3 t_m)` and `D = (1/2) * (3 t_m / 4)`.
pub fn diffusion_coefficient(params: &KernelParams) -> f64 {
    0.375 * params.mean_flight_time
}
