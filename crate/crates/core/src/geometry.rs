//! Strip-with-obstacles domain and the ray queries the transport loop needs.
//!
//! The domain is the open strip `(0, L1) x (0, L2)` minus a finite set of
//! convex obstacles. The two vertical sides are open (reservoirs); the
//! horizontal sides and every obstacle boundary reflect specularly.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Side length of the flood-fill grid used by the connectedness check.
pub const CONNECTIVITY_GRID: (usize, usize) = (400, 100);

/// Distance a particle is pushed along its new velocity after a reflection.
pub const REFLECTION_NUDGE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { x: c, y: s }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn normalized(self) -> Vec2 {
        let n = self.norm();
        Vec2::new(self.x / n, self.y / n)
    }

    /// Counterclockwise rotation given the cosine and sine of the angle.
    #[inline]
    pub fn rotate_cs(self, c: f64, s: f64) -> Vec2 {
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn rotate(self, angle: f64) -> Vec2 {
        let (s, c) = angle.sin_cos();
        self.rotate_cs(c, s)
    }

    /// Counterclockwise perpendicular.
    #[inline]
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from(a: [f64; 2]) -> Self {
        Vec2::new(a[0], a[1])
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Specular reflection `v - 2 (n.v) n`.
#[inline]
pub fn reflect(v: Vec2, n: Vec2) -> Vec2 {
    v - n * (2.0 * n.dot(v))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripSpec {
    pub length_x: f64,
    pub length_y: f64,
}

impl StripSpec {
    pub fn new(length_x: f64, length_y: f64) -> Self {
        Self { length_x, length_y }
    }

    pub fn diameter(&self) -> f64 {
        self.length_x.hypot(self.length_y)
    }
}

/// Axis-aligned bounding box, `min` and `max` corners.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec2,
    pub max: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Obstacle {
    Rectangle {
        center: Vec2,
        half_width: f64,
        half_height: f64,
    },
    Disk {
        center: Vec2,
        radius: f64,
    },
}

impl Obstacle {
    /// Rectangle from its center and full side lengths.
    pub fn rectangle(center: Vec2, width: f64, height: f64) -> Self {
        Obstacle::Rectangle {
            center,
            half_width: 0.5 * width,
            half_height: 0.5 * height,
        }
    }

    pub fn disk(center: Vec2, radius: f64) -> Self {
        Obstacle::Disk { center, radius }
    }

    pub fn center(&self) -> Vec2 {
        match *self {
            Obstacle::Rectangle { center, .. } | Obstacle::Disk { center, .. } => center,
        }
    }

    pub fn bounding_box(&self) -> Aabb {
        match *self {
            Obstacle::Rectangle {
                center,
                half_width,
                half_height,
            } => Aabb {
                min: Vec2::new(center.x - half_width, center.y - half_height),
                max: Vec2::new(center.x + half_width, center.y + half_height),
            },
            Obstacle::Disk { center, radius } => Aabb {
                min: Vec2::new(center.x - radius, center.y - radius),
                max: Vec2::new(center.x + radius, center.y + radius),
            },
        }
    }

    fn has_valid_shape(&self) -> bool {
        let finite = |v: Vec2| v.x.is_finite() && v.y.is_finite();
        match *self {
            Obstacle::Rectangle {
                center,
                half_width,
                half_height,
            } => finite(center) && half_width > 0.0 && half_height > 0.0 && half_width.is_finite() && half_height.is_finite(),
            Obstacle::Disk { center, radius } => finite(center) && radius > 0.0 && radius.is_finite(),
        }
    }

    /// Strict interior test.
    pub fn contains(&self, p: Vec2) -> bool {
        match *self {
            Obstacle::Rectangle {
                center,
                half_width,
                half_height,
            } => (p.x - center.x).abs() < half_width && (p.y - center.y).abs() < half_height,
            Obstacle::Disk { center, radius } => (p - center).norm_sq() < radius * radius,
        }
    }

    /// Euclidean distance from `p` to the obstacle (zero inside).
    pub fn distance_to_point(&self, p: Vec2) -> f64 {
        match *self {
            Obstacle::Rectangle {
                center,
                half_width,
                half_height,
            } => {
                let dx = ((p.x - center.x).abs() - half_width).max(0.0);
                let dy = ((p.y - center.y).abs() - half_height).max(0.0);
                dx.hypot(dy)
            }
            Obstacle::Disk { center, radius } => ((p - center).norm() - radius).max(0.0),
        }
    }

    /// Gap between two obstacles; zero or negative when they touch or overlap.
    pub fn gap_to(&self, other: &Obstacle) -> f64 {
        match (*self, *other) {
            (
                Obstacle::Rectangle {
                    center: c1,
                    half_width: w1,
                    half_height: h1,
                },
                Obstacle::Rectangle {
                    center: c2,
                    half_width: w2,
                    half_height: h2,
                },
            ) => {
                let dx = (c1.x - c2.x).abs() - (w1 + w2);
                let dy = (c1.y - c2.y).abs() - (h1 + h2);
                if dx <= 0.0 && dy <= 0.0 {
                    dx.max(dy)
                } else {
                    dx.max(0.0).hypot(dy.max(0.0))
                }
            }
            (rect @ Obstacle::Rectangle { .. }, Obstacle::Disk { center, radius })
            | (Obstacle::Disk { center, radius }, rect @ Obstacle::Rectangle { .. }) => {
                let d = rect.distance_to_point(center);
                if d == 0.0 {
                    -radius
                } else {
                    d - radius
                }
            }
            (Obstacle::Disk { center: c1, radius: r1 }, Obstacle::Disk { center: c2, radius: r2 }) => {
                (c1 - c2).norm() - r1 - r2
            }
        }
    }

    /// Earliest entry of the ray into the obstacle, with the outward normal
    /// at the entry point. Rays starting inside or moving away never hit.
    fn ray_entry(&self, origin: Vec2, dir: Vec2) -> Option<(f64, Vec2)> {
        match *self {
            Obstacle::Rectangle {
                center,
                half_width,
                half_height,
            } => {
                let (near_x, far_x) = slab(origin.x, dir.x, center.x - half_width, center.x + half_width)?;
                let (near_y, far_y) = slab(origin.y, dir.y, center.y - half_height, center.y + half_height)?;
                let enter = near_x.max(near_y);
                let exit = far_x.min(far_y);
                if enter > exit || enter < 0.0 || !enter.is_finite() {
                    return None;
                }
                let normal = if near_x > near_y {
                    Vec2::new(-dir.x.signum(), 0.0)
                } else if near_y > near_x {
                    Vec2::new(0.0, -dir.y.signum())
                } else {
                    // exact corner: reflect straight back
                    -dir
                };
                Some((enter, normal))
            }
            Obstacle::Disk { center, radius } => {
                let oc = origin - center;
                let b = dir.dot(oc);
                if b >= 0.0 {
                    return None;
                }
                let c = oc.norm_sq() - radius * radius;
                if c < 0.0 {
                    return None;
                }
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let t = -b - disc.sqrt();
                let t = t.max(0.0);
                let p = origin + dir * t;
                Some((t, (p - center) * (1.0 / radius)))
            }
        }
    }
}

/// Entry and exit parameters of a ray against the slab `lo < x < hi`.
#[inline]
fn slab(o: f64, d: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if d == 0.0 {
        if o > lo && o < hi {
            Some((f64::NEG_INFINITY, f64::INFINITY))
        } else {
            None
        }
    } else {
        let inv = 1.0 / d;
        let t1 = (lo - o) * inv;
        let t2 = (hi - o) * inv;
        Some((t1.min(t2), t1.max(t2)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainConfig {
    pub strip: StripSpec,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub rho_left: f64,
    pub rho_right: f64,
    #[serde(default)]
    pub injection: Injection,
}

/// Angular law of particles entering from a reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Injection {
    /// Angle uniform on the inward half-circle.
    #[default]
    UniformAngle,
    /// Angle density proportional to the cosine with the inward normal,
    /// the flux of an isotropic reservoir.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    Elastic,
    OpenLeft,
    OpenRight,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryHit {
    pub time: f64,
    pub point: Vec2,
    pub inward_normal: Vec2,
    pub kind: BoundaryKind,
}

/// A single failed invariant of a [`DomainConfig`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveStrip { length_x: f64, length_y: f64 },
    InvalidDensity { rho_left: f64, rho_right: f64 },
    InvalidObstacleShape { index: usize },
    ObstacleOutsideStrip { index: usize },
    ObstacleTouchesBoundary { index: usize, gap: f64 },
    ObstaclesTooClose { first: usize, second: usize, gap: f64 },
    Disconnected { components: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveStrip { length_x, length_y } => {
                write!(f, "strip dimensions must be positive (got {length_x} x {length_y})")
            }
            Violation::InvalidDensity { rho_left, rho_right } => write!(
                f,
                "reservoir densities must be nonnegative with positive sum (got {rho_left}, {rho_right})"
            ),
            Violation::InvalidObstacleShape { index } => {
                write!(f, "obstacle {index}: sizes must be positive and finite")
            }
            Violation::ObstacleOutsideStrip { index } => {
                write!(f, "obstacle {index}: obstacle outside strip")
            }
            Violation::ObstacleTouchesBoundary { index, gap } => {
                write!(f, "obstacle {index}: obstacle touches strip boundary (gap {gap})")
            }
            Violation::ObstaclesTooClose { first, second, gap } => {
                write!(f, "obstacles {first} and {second} touch or overlap (gap {gap})")
            }
            Violation::Disconnected { components } => {
                write!(f, "domain is not connected ({components} components)")
            }
        }
    }
}

impl DomainConfig {
    pub fn empty(length_x: f64, length_y: f64, rho_left: f64, rho_right: f64) -> Self {
        Self {
            strip: StripSpec::new(length_x, length_y),
            obstacles: Vec::new(),
            rho_left,
            rho_right,
            injection: Injection::UniformAngle,
        }
    }

    pub fn with_obstacle(mut self, obstacle: Obstacle) -> Self {
        self.obstacles.push(obstacle);
        self
    }

    /// Collects every violated invariant; an empty list means the domain is usable.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let StripSpec { length_x, length_y } = self.strip;
        if !(length_x > 0.0 && length_y > 0.0 && length_x.is_finite() && length_y.is_finite()) {
            out.push(Violation::NonPositiveStrip { length_x, length_y });
            return out;
        }
        let (rl, rr) = (self.rho_left, self.rho_right);
        if !(rl >= 0.0 && rr >= 0.0 && rl + rr > 0.0 && (rl + rr).is_finite()) {
            out.push(Violation::InvalidDensity {
                rho_left: rl,
                rho_right: rr,
            });
        }

        let mut shapes_ok = true;
        for (index, obs) in self.obstacles.iter().enumerate() {
            if !obs.has_valid_shape() {
                out.push(Violation::InvalidObstacleShape { index });
                shapes_ok = false;
                continue;
            }
            let c = obs.center();
            if !(c.x > 0.0 && c.x < length_x && c.y > 0.0 && c.y < length_y) {
                out.push(Violation::ObstacleOutsideStrip { index });
                shapes_ok = false;
                continue;
            }
            let bb = obs.bounding_box();
            let gap = bb
                .min
                .x
                .min(bb.min.y)
                .min(length_x - bb.max.x)
                .min(length_y - bb.max.y);
            if gap <= 0.0 {
                out.push(Violation::ObstacleTouchesBoundary { index, gap });
                shapes_ok = false;
            }
        }
        for i in 0..self.obstacles.len() {
            for j in (i + 1)..self.obstacles.len() {
                let gap = self.obstacles[i].gap_to(&self.obstacles[j]);
                if gap <= 0.0 {
                    out.push(Violation::ObstaclesTooClose {
                        first: i,
                        second: j,
                        gap,
                    });
                    shapes_ok = false;
                }
            }
        }
        if shapes_ok {
            let components = self.count_components(CONNECTIVITY_GRID.0, CONNECTIVITY_GRID.1);
            if components != 1 {
                out.push(Violation::Disconnected { components });
            }
        }
        out
    }

    /// Whether `p` lies in the open strip and outside every obstacle.
    pub fn contains(&self, p: Vec2) -> bool {
        p.x > 0.0
            && p.x < self.strip.length_x
            && p.y > 0.0
            && p.y < self.strip.length_y
            && !self.obstacles.iter().any(|o| o.contains(p))
    }

    /// Whether `p` lies in the closure of the domain, up to `tol`.
    pub fn contains_closure(&self, p: Vec2, tol: f64) -> bool {
        p.x >= -tol
            && p.x <= self.strip.length_x + tol
            && p.y >= -tol
            && p.y <= self.strip.length_y + tol
            && !self.obstacles.iter().any(|o| match *o {
                Obstacle::Rectangle {
                    center,
                    half_width,
                    half_height,
                } => (p.x - center.x).abs() < half_width - tol && (p.y - center.y).abs() < half_height - tol,
                Obstacle::Disk { center, radius } => (p - center).norm() < radius - tol,
            })
    }

    /// Number of 4-connected components of free cells on an `nx x ny` grid.
    fn count_components(&self, nx: usize, ny: usize) -> usize {
        let dx = self.strip.length_x / nx as f64;
        let dy = self.strip.length_y / ny as f64;
        let free: Vec<bool> = (0..nx * ny)
            .map(|k| {
                let p = Vec2::new((k % nx) as f64 * dx + 0.5 * dx, (k / nx) as f64 * dy + 0.5 * dy);
                !self.obstacles.iter().any(|o| o.contains(p))
            })
            .collect();
        let mut seen = vec![false; nx * ny];
        let mut components = 0;
        let mut stack = Vec::new();
        for start in 0..nx * ny {
            if !free[start] || seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            stack.push(start);
            while let Some(k) = stack.pop() {
                let (i, j) = (k % nx, k / nx);
                let mut visit = |n: usize| {
                    if free[n] && !seen[n] {
                        seen[n] = true;
                        stack.push(n);
                    }
                };
                if i > 0 {
                    visit(k - 1);
                }
                if i + 1 < nx {
                    visit(k + 1);
                }
                if j > 0 {
                    visit(k - nx);
                }
                if j + 1 < ny {
                    visit(k + nx);
                }
            }
        }
        components
    }

    /// Earliest boundary crossing of the ray `origin + t * direction` with
    /// `0 <= t <= max_time`. Boundaries are only hit from the inside of the
    /// domain; on ties an open side wins over a reflecting one.
    pub fn first_hit(&self, origin: Vec2, direction: Vec2, max_time: f64) -> Option<BoundaryHit> {
        let StripSpec { length_x, length_y } = self.strip;
        let mut best: Option<BoundaryHit> = None;
        let consider = |hit: BoundaryHit, best: &mut Option<BoundaryHit>, prefer_on_tie: bool| {
            let better = match best {
                None => true,
                Some(b) => hit.time < b.time || (prefer_on_tie && hit.time == b.time),
            };
            if better && hit.time <= max_time {
                *best = Some(hit);
            }
        };

        if direction.y > 0.0 {
            let t = ((length_y - origin.y) / direction.y).max(0.0);
            let hit = BoundaryHit {
                time: t,
                point: Vec2::new(origin.x + t * direction.x, length_y),
                inward_normal: Vec2::new(0.0, -1.0),
                kind: BoundaryKind::Elastic,
            };
            consider(hit, &mut best, false);
        } else if direction.y < 0.0 {
            let t = (-origin.y / direction.y).max(0.0);
            let hit = BoundaryHit {
                time: t,
                point: Vec2::new(origin.x + t * direction.x, 0.0),
                inward_normal: Vec2::new(0.0, 1.0),
                kind: BoundaryKind::Elastic,
            };
            consider(hit, &mut best, false);
        }

        for obs in &self.obstacles {
            if let Some((t, normal)) = obs.ray_entry(origin, direction) {
                let hit = BoundaryHit {
                    time: t,
                    point: origin + direction * t,
                    inward_normal: normal,
                    kind: BoundaryKind::Elastic,
                };
                consider(hit, &mut best, false);
            }
        }

        if direction.x < 0.0 {
            let t = (-origin.x / direction.x).max(0.0);
            let hit = BoundaryHit {
                time: t,
                point: Vec2::new(0.0, origin.y + t * direction.y),
                inward_normal: Vec2::new(1.0, 0.0),
                kind: BoundaryKind::OpenLeft,
            };
            consider(hit, &mut best, true);
        } else if direction.x > 0.0 {
            let t = ((length_x - origin.x) / direction.x).max(0.0);
            let hit = BoundaryHit {
                time: t,
                point: Vec2::new(length_x, origin.y + t * direction.y),
                inward_normal: Vec2::new(-1.0, 0.0),
                kind: BoundaryKind::OpenRight,
            };
            consider(hit, &mut best, true);
        }
        best
    }

    /// Union of the obstacles' x-extents, if any.
    pub fn obstacle_x_extent(&self) -> Option<(f64, f64)> {
        self.obstacles
            .iter()
            .map(|o| {
                let bb = o.bounding_box();
                (bb.min.x, bb.max.x)
            })
            .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn strip() -> DomainConfig {
        DomainConfig::empty(4.0, 1.0, 1.0, 0.5)
    }

    #[test]
    fn empty_strip_is_valid() {
        assert!(strip().validate().is_empty());
    }

    #[test]
    fn centered_square_is_valid() {
        let cfg = strip().with_obstacle(Obstacle::rectangle(Vec2::new(2.0, 0.5), 0.8, 0.8));
        assert!(cfg.validate().is_empty());
    }

    #[test]
    fn oversized_disk_touches_walls() {
        let cfg = strip().with_obstacle(Obstacle::disk(Vec2::new(2.0, 0.5), 0.6));
        let v = cfg.validate();
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::ObstacleTouchesBoundary { index: 0, .. }));
        assert!(v[0].to_string().contains("obstacle touches strip boundary"));
    }

    #[test]
    fn obstacle_outside_strip_names_index() {
        let cfg = strip()
            .with_obstacle(Obstacle::rectangle(Vec2::new(2.0, 0.5), 0.2, 0.2))
            .with_obstacle(Obstacle::rectangle(Vec2::new(5.0, 0.5), 0.2, 0.2));
        let v = cfg.validate();
        assert_eq!(v, vec![Violation::ObstacleOutsideStrip { index: 1 }]);
        assert!(v[0].to_string().contains("obstacle 1"));
    }

    #[test]
    fn overlapping_obstacles_are_reported() {
        let cfg = strip()
            .with_obstacle(Obstacle::rectangle(Vec2::new(2.0, 0.5), 0.4, 0.4))
            .with_obstacle(Obstacle::disk(Vec2::new(2.3, 0.5), 0.15));
        let v = cfg.validate();
        assert!(matches!(v[0], Violation::ObstaclesTooClose { first: 0, second: 1, .. }));
    }

    #[test]
    fn bad_densities_are_reported() {
        let cfg = DomainConfig::empty(4.0, 1.0, 0.0, 0.0);
        assert!(matches!(cfg.validate()[0], Violation::InvalidDensity { .. }));
        let cfg = DomainConfig::empty(4.0, 1.0, -1.0, 1.0);
        assert!(matches!(cfg.validate()[0], Violation::InvalidDensity { .. }));
    }

    #[test]
    fn enclosed_pocket_is_disconnected() {
        // two bars leaving gaps far below the validation grid resolution
        let cfg = strip()
            .with_obstacle(Obstacle::rectangle(Vec2::new(1.0, 0.5), 0.1, 0.995))
            .with_obstacle(Obstacle::rectangle(Vec2::new(1.5, 0.5), 0.1, 0.995));
        assert!(matches!(cfg.validate().last(), Some(Violation::Disconnected { .. })));
    }

    #[test]
    fn first_hit_examples() {
        let cfg = strip();
        let hit = cfg.first_hit(Vec2::new(1.0, 0.5), Vec2::new(0.0, 1.0), 10.0).unwrap();
        assert_abs_diff_eq!(hit.time, 0.5);
        assert_eq!(hit.point, Vec2::new(1.0, 1.0));
        assert_eq!(hit.kind, BoundaryKind::Elastic);

        let hit = cfg.first_hit(Vec2::new(1.0, 0.5), Vec2::new(-1.0, 0.0), 10.0).unwrap();
        assert_abs_diff_eq!(hit.time, 1.0);
        assert_eq!(hit.point, Vec2::new(0.0, 0.5));
        assert_eq!(hit.kind, BoundaryKind::OpenLeft);

        assert!(cfg.first_hit(Vec2::new(1.0, 0.5), Vec2::new(1.0, 0.0), 0.3).is_none());
    }

    #[test]
    fn rectangle_faces_and_corners() {
        let cfg = strip().with_obstacle(Obstacle::rectangle(Vec2::new(2.0, 0.5), 0.8, 0.8));
        let hit = cfg.first_hit(Vec2::new(1.0, 0.5), Vec2::new(1.0, 0.0), 10.0).unwrap();
        assert_abs_diff_eq!(hit.time, 0.6, epsilon = 1e-15);
        assert_eq!(hit.inward_normal, Vec2::new(-1.0, 0.0));

        // grazing along the top face passes the obstacle
        let hit = cfg.first_hit(Vec2::new(1.0, 0.9), Vec2::new(1.0, 0.0), 10.0).unwrap();
        assert_eq!(hit.kind, BoundaryKind::OpenRight);

        // exact corner hit reflects straight back
        let cfg = strip().with_obstacle(Obstacle::rectangle(Vec2::new(2.0, 0.5), 1.0, 0.5));
        let d = Vec2::new(1.0, 1.0).normalized();
        let hit = cfg.first_hit(Vec2::new(1.375, 0.125), d, 10.0).unwrap();
        assert_eq!(hit.point, Vec2::new(1.5, 0.25));
        assert_abs_diff_eq!(reflect(d, hit.inward_normal).x, -d.x, epsilon = 1e-15);
        assert_abs_diff_eq!(reflect(d, hit.inward_normal).y, -d.y, epsilon = 1e-15);
    }

    #[test]
    fn disk_hit_normal_points_outward() {
        let cfg = strip().with_obstacle(Obstacle::disk(Vec2::new(2.0, 0.5), 0.3));
        let hit = cfg.first_hit(Vec2::new(1.0, 0.5), Vec2::new(1.0, 0.0), 10.0).unwrap();
        assert_abs_diff_eq!(hit.time, 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(hit.inward_normal.x, -1.0, epsilon = 1e-14);
        // moving away from the disk never hits it
        let hit = cfg.first_hit(Vec2::new(1.7, 0.5), Vec2::new(-1.0, 0.0), 10.0).unwrap();
        assert_eq!(hit.kind, BoundaryKind::OpenLeft);
    }

    #[test]
    fn reflect_examples() {
        assert_eq!(reflect(Vec2::new(0.0, -1.0), Vec2::new(0.0, 1.0)), Vec2::new(0.0, 1.0));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = reflect(Vec2::new(h, -h), Vec2::new(0.0, 1.0));
        assert_abs_diff_eq!(r.x, h);
        assert_abs_diff_eq!(r.y, h);
        let r = reflect(Vec2::new(1.0, 0.0), Vec2::new(-h, h));
        assert_abs_diff_eq!(r.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.y, 1.0, epsilon = 1e-15);
    }

    fn unit() -> impl Strategy<Value = Vec2> {
        (0.0..std::f64::consts::TAU).prop_map(Vec2::from_angle)
    }

    fn obstacle_config() -> DomainConfig {
        strip()
            .with_obstacle(Obstacle::rectangle(Vec2::new(1.2, 0.5), 0.4, 0.6))
            .with_obstacle(Obstacle::disk(Vec2::new(2.8, 0.4), 0.25))
    }

    proptest! {
        #[test]
        fn reflect_is_an_involution(v in unit(), n in unit()) {
            let r = reflect(reflect(v, n), n);
            prop_assert!((r - v).norm() < 1e-12);
            prop_assert!((reflect(v, n).norm() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn reflect_keeps_tangential_part(v in unit(), n in unit()) {
            let r = reflect(v, n);
            prop_assert!((r.dot(n.perp()) - v.dot(n.perp())).abs() < 1e-12);
            prop_assert!((r.dot(n) + v.dot(n)).abs() < 1e-12);
        }

        #[test]
        fn first_hit_is_consistent(x in 0.01f64..3.99, y in 0.01f64..0.99, d in unit()) {
            let cfg = obstacle_config();
            let origin = Vec2::new(x, y);
            prop_assume!(cfg.contains(origin));
            let hit = cfg.first_hit(origin, d, cfg.strip.diameter() * 10.0);
            prop_assert!(hit.is_some());
            let hit = hit.unwrap();
            prop_assert!((origin + d * hit.time - hit.point).norm() < 1e-9);
            prop_assert!((hit.inward_normal.norm() - 1.0).abs() < 1e-12);
            prop_assert!(hit.inward_normal.dot(d) <= 0.0);
            match hit.kind {
                BoundaryKind::OpenLeft => prop_assert!(hit.point.x.abs() < 1e-9),
                BoundaryKind::OpenRight => prop_assert!((hit.point.x - 4.0).abs() < 1e-9),
                BoundaryKind::Elastic => {
                    let on_wall = hit.point.y.abs() < 1e-9 || (hit.point.y - 1.0).abs() < 1e-9;
                    let on_obstacle = cfg.obstacles.iter().any(|o| {
                        o.distance_to_point(hit.point) < 1e-9 && o.contains(hit.point - hit.inward_normal * 1e-7)
                    });
                    prop_assert!(on_wall || on_obstacle);
                }
            }
            // the free segment stays in the closure of the domain
            let mid = origin + d * (0.5 * hit.time);
            prop_assert!(cfg.contains_closure(mid, 1e-9));
        }
    }
}
