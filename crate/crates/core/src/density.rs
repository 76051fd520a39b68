//! Sojourn-time grids, normalized density fields and field comparisons.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{DomainConfig, Obstacle, Vec2};
use crate::grid::{GridLayout, GridSpec};

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("insufficient statistics for normalization: {0}")]
    InsufficientStatistics(String),
    #[error("field grids differ: {0:?} vs {1:?}")]
    MismatchedSpecs(GridSpec, GridSpec),
    #[error("field masks differ")]
    MismatchedMasks,
    #[error("reference field vanishes at cell ({0}, {1})")]
    ZeroReference(usize, usize),
    #[error("malformed field file: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Accumulated particle time per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SojournGrid {
    pub layout: GridLayout,
    pub time: Vec<f64>,
    /// Cell center lies inside an obstacle.
    pub mask: Vec<bool>,
    /// Cell overlaps an obstacle boundary.
    pub straddle: Vec<bool>,
}

impl SojournGrid {
    pub fn from_times(layout: GridLayout, config: &DomainConfig, time: Vec<f64>) -> Self {
        let (mask, straddle) = obstacle_masks(&layout, &config.obstacles);
        Self {
            layout,
            time,
            mask,
            straddle,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.time.iter_mut().for_each(|t| *t *= factor);
        out
    }
}

/// Cell masks for a set of obstacles: `mask` marks cells whose center is
/// covered, `straddle` marks cells cut by an obstacle boundary.
pub fn obstacle_masks(layout: &GridLayout, obstacles: &[Obstacle]) -> (Vec<bool>, Vec<bool>) {
    let n = layout.spec.len();
    let mut mask = vec![false; n];
    let mut straddle = vec![false; n];
    for k in 0..n {
        let (i, j) = layout.coords(k);
        let lo = Vec2::new(i as f64 * layout.cell, j as f64 * layout.cell);
        let hi = Vec2::new(lo.x + layout.cell, lo.y + layout.cell);
        mask[k] = obstacles.iter().any(|o| o.contains(layout.center(i, j)));
        straddle[k] = obstacles.iter().any(|o| cuts_cell(o, lo, hi, 1e-9 * layout.cell));
    }
    (mask, straddle)
}

fn cuts_cell(obstacle: &Obstacle, lo: Vec2, hi: Vec2, tol: f64) -> bool {
    match *obstacle {
        Obstacle::Rectangle { .. } => {
            let bb = obstacle.bounding_box();
            let overlaps =
                bb.min.x < hi.x - tol && bb.max.x > lo.x + tol && bb.min.y < hi.y - tol && bb.max.y > lo.y + tol;
            let covers =
                bb.min.x <= lo.x + tol && bb.max.x >= hi.x - tol && bb.min.y <= lo.y + tol && bb.max.y >= hi.y - tol;
            overlaps && !covers
        }
        Obstacle::Disk { center, radius } => {
            let nearest = Vec2::new(center.x.clamp(lo.x, hi.x), center.y.clamp(lo.y, hi.y));
            let far = Vec2::new(
                if center.x - lo.x > hi.x - center.x { lo.x } else { hi.x },
                if center.y - lo.y > hi.y - center.y { lo.y } else { hi.y },
            );
            (nearest - center).norm() < radius && (far - center).norm() > radius
        }
    }
}

/// Grid-sampled scalar field. Masked cells carry no value.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub layout: GridLayout,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

impl ScalarField {
    pub fn from_fn(layout: GridLayout, mask: Vec<bool>, f: impl Fn(Vec2) -> f64) -> Self {
        let values = (0..layout.spec.len())
            .map(|k| {
                if mask[k] {
                    f64::NAN
                } else {
                    let (i, j) = layout.coords(k);
                    f(layout.center(i, j))
                }
            })
            .collect();
        Self { layout, values, mask }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = self.layout.index(i, j);
        (!self.mask[k]).then(|| self.values[k])
    }

    /// Unmasked `(index, value)` pairs.
    pub fn iter_unmasked(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().enumerate().filter(|(k, _)| !self.mask[*k]).map(|(k, v)| (k, *v))
    }

    pub fn max(&self) -> f64 {
        self.iter_unmasked().map(|(_, v)| v).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.iter_unmasked().map(|(_, v)| v).fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        let (s, n) = self.iter_unmasked().fold((0.0, 0usize), |(s, n), (_, v)| (s + v, n + 1));
        s / n as f64
    }

    /// Writes the field as CSV: optional `#` comment lines, the header
    /// `nx,ny,Lx,Ly`, its values, then one row of `nx` values per grid row
    /// from bottom to top. Masked cells are written as `nan`.
    pub fn write_csv(&self, out: &mut impl Write, comments: &str) -> io::Result<()> {
        for line in comments.lines() {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "nx,ny,Lx,Ly")?;
        writeln!(
            out,
            "{},{},{},{}",
            self.layout.spec.n_x, self.layout.spec.n_y, self.layout.length_x, self.layout.length_y
        )?;
        let mut row = String::new();
        for j in 0..self.layout.spec.n_y {
            row.clear();
            for i in 0..self.layout.spec.n_x {
                if i > 0 {
                    row.push(',');
                }
                match self.get(i, j) {
                    Some(v) => write!(row, "{v}").unwrap(),
                    None => row.push_str("nan"),
                }
            }
            writeln!(out, "{row}")?;
        }
        Ok(())
    }

    pub fn read_csv(input: impl BufRead) -> Result<Self, DensityError> {
        let mut lines = input
            .lines()
            .filter(|l| !matches!(l, Ok(s) if s.starts_with('#') || s.trim().is_empty()));
        let mut next = || -> Result<String, DensityError> {
            lines
                .next()
                .ok_or_else(|| DensityError::Parse("unexpected end of file".into()))?
                .map_err(DensityError::from)
        };
        let header = next()?;
        if header.trim() != "nx,ny,Lx,Ly" {
            return Err(DensityError::Parse(format!("bad header {header:?}")));
        }
        let dims = next()?;
        let parts: Vec<&str> = dims.split(',').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(DensityError::Parse(format!("bad dimensions line {dims:?}")));
        }
        let bad = |s: &str| DensityError::Parse(format!("bad number {s:?}"));
        let nx: usize = parts[0].parse().map_err(|_| bad(parts[0]))?;
        let ny: usize = parts[1].parse().map_err(|_| bad(parts[1]))?;
        let lx: f64 = parts[2].parse().map_err(|_| bad(parts[2]))?;
        let ly: f64 = parts[3].parse().map_err(|_| bad(parts[3]))?;
        let layout = GridSpec::new(nx, ny)
            .layout(&crate::geometry::StripSpec::new(lx, ly))
            .map_err(|e| DensityError::Parse(e.to_string()))?;
        let mut values = Vec::with_capacity(nx * ny);
        let mut mask = Vec::with_capacity(nx * ny);
        for _ in 0..ny {
            let row = next()?;
            let cells: Vec<&str> = row.split(',').map(str::trim).collect();
            if cells.len() != nx {
                return Err(DensityError::Parse(format!("row has {} values, expected {nx}", cells.len())));
            }
            for c in cells {
                if c == "nan" {
                    values.push(f64::NAN);
                    mask.push(true);
                } else {
                    values.push(c.parse().map_err(|_| bad(c))?);
                    mask.push(false);
                }
            }
        }
        Ok(Self { layout, values, mask })
    }
}

/// How the free multiplicative constant of the sojourn grid is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Mean of the leftmost column equals the left reservoir density.
    #[default]
    ColumnMean,
    /// A single leftmost-column cell (row index) equals the left density.
    SingleCell(usize),
}

/// Scales the sojourn grid into a density field whose boundary value on
/// the left side equals `rho_left`.
pub fn normalize(grid: &SojournGrid, config: &DomainConfig, rule: Normalization) -> Result<ScalarField, DensityError> {
    let layout = grid.layout;
    let (n_x, n_y) = (layout.spec.n_x, layout.spec.n_y);
    let column = (0..n_x)
        .find(|&i| (0..n_y).any(|j| !grid.mask[layout.index(i, j)]))
        .ok_or_else(|| DensityError::InsufficientStatistics("grid is fully masked".into()))?;
    let reference = match rule {
        Normalization::ColumnMean => {
            let (sum, count) = (0..n_y)
                .map(|j| layout.index(column, j))
                .filter(|&k| !grid.mask[k])
                .fold((0.0, 0usize), |(s, c), k| (s + grid.time[k], c + 1));
            sum / count as f64
        }
        Normalization::SingleCell(row) => {
            if row >= n_y || grid.mask[layout.index(column, row)] {
                return Err(DensityError::InsufficientStatistics(format!(
                    "normalization cell ({column}, {row}) is not a free cell"
                )));
            }
            grid.time[layout.index(column, row)]
        }
    };
    if !(reference > 0.0) {
        return Err(DensityError::InsufficientStatistics(format!(
            "no time recorded in boundary column {column}"
        )));
    }
    let c = config.rho_left / reference;
    let values = grid
        .time
        .iter()
        .zip(&grid.mask)
        .map(|(&t, &m)| if m { f64::NAN } else { c * t })
        .collect();
    Ok(ScalarField {
        layout,
        values,
        mask: grid.mask.clone(),
    })
}

/// Cellwise `|field - reference| / reference`.
pub fn relative_error(field: &ScalarField, reference: &ScalarField) -> Result<ScalarField, DensityError> {
    if field.layout.spec != reference.layout.spec {
        return Err(DensityError::MismatchedSpecs(field.layout.spec, reference.layout.spec));
    }
    if field.mask != reference.mask {
        return Err(DensityError::MismatchedMasks);
    }
    let mut values = vec![f64::NAN; field.values.len()];
    for (k, v) in field.iter_unmasked() {
        let r = reference.values[k];
        if r == 0.0 {
            let (i, j) = field.layout.coords(k);
            return Err(DensityError::ZeroReference(i, j));
        }
        values[k] = (v - r).abs() / r.abs();
    }
    Ok(ScalarField {
        layout: field.layout,
        values,
        mask: field.mask.clone(),
    })
}

/// Mean over the unmasked cells of each column; `None` for fully masked columns.
pub fn column_average(field: &ScalarField) -> Vec<Option<f64>> {
    let layout = field.layout;
    (0..layout.spec.n_x)
        .map(|i| {
            let (sum, n) = (0..layout.spec.n_y)
                .filter_map(|j| field.get(i, j))
                .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            (n > 0).then(|| sum / n as f64)
        })
        .collect()
}

/// Max and mean of an error field over all cells and over the cells that
/// survive a one-cell dilation of the obstacle mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorSummary {
    pub max: f64,
    pub mean: f64,
    pub max_dilated: f64,
    pub mean_dilated: f64,
}

pub fn summarize_error(error: &ScalarField) -> ErrorSummary {
    let dilated = dilate(&error.layout, &error.mask);
    let stats = |skip: &[bool]| {
        let (mut max, mut sum, mut n) = (0.0f64, 0.0, 0usize);
        for (k, v) in error.iter_unmasked() {
            if skip[k] {
                continue;
            }
            max = max.max(v);
            sum += v;
            n += 1;
        }
        (max, if n > 0 { sum / n as f64 } else { f64::NAN })
    };
    let (max, mean) = stats(&error.mask);
    let (max_dilated, mean_dilated) = stats(&dilated);
    ErrorSummary {
        max,
        mean,
        max_dilated,
        mean_dilated,
    }
}

/// Mask grown by one cell in each of the eight directions.
pub fn dilate(layout: &GridLayout, mask: &[bool]) -> Vec<bool> {
    let (nx, ny) = (layout.spec.n_x as isize, layout.spec.n_y as isize);
    let mut out = mask.to_vec();
    for k in 0..mask.len() {
        if !mask[k] {
            continue;
        }
        let (i, j) = layout.coords(k);
        for di in -1..=1 {
            for dj in -1..=1 {
                let (a, b) = (i as isize + di, j as isize + dj);
                if a >= 0 && a < nx && b >= 0 && b < ny {
                    out[layout.index(a as usize, b as usize)] = true;
                }
            }
        }
    }
    out
}

/// Cells whose center is within `cells` cell sizes (Chebyshev distance)
/// of a rectangle corner.
pub fn near_corners(layout: &GridLayout, obstacles: &[Obstacle], cells: f64) -> Vec<bool> {
    let corners: Vec<Vec2> = obstacles
        .iter()
        .filter(|o| matches!(o, Obstacle::Rectangle { .. }))
        .flat_map(|o| {
            let bb = o.bounding_box();
            [
                bb.min,
                bb.max,
                Vec2::new(bb.min.x, bb.max.y),
                Vec2::new(bb.max.x, bb.min.y),
            ]
        })
        .collect();
    (0..layout.spec.len())
        .map(|k| {
            let (i, j) = layout.coords(k);
            let c = layout.center(i, j);
            corners
                .iter()
                .any(|p| (c.x - p.x).abs().max((c.y - p.y).abs()) < cells * layout.cell)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::StripSpec;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn layout() -> GridLayout {
        GridSpec::new(200, 50).layout(&StripSpec::new(4.0, 1.0)).unwrap()
    }

    fn empty() -> DomainConfig {
        DomainConfig::empty(4.0, 1.0, 1.0, 0.5)
    }

    #[test]
    fn normalization_constant_from_column_mean() {
        let l = layout();
        let mut time = vec![1.0; l.spec.len()];
        for j in 0..50 {
            time[l.index(0, j)] = 2.0;
        }
        let field = normalize(&SojournGrid::from_times(l, &empty(), time), &empty(), Normalization::ColumnMean).unwrap();
        assert_abs_diff_eq!(field.get(0, 3).unwrap(), 1.0);
        assert_abs_diff_eq!(field.get(10, 3).unwrap(), 0.5);
    }

    #[test]
    fn uniform_grid_gives_constant_field() {
        let l = layout();
        let field =
            normalize(&SojournGrid::from_times(l, &empty(), vec![3.7; l.spec.len()]), &empty(), Normalization::ColumnMean)
                .unwrap();
        assert!(field.iter_unmasked().all(|(_, v)| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn single_cell_rule() {
        let l = layout();
        let mut time = vec![1.0; l.spec.len()];
        time[l.index(0, 7)] = 4.0;
        let grid = SojournGrid::from_times(l, &empty(), time);
        let field = normalize(&grid, &empty(), Normalization::SingleCell(7)).unwrap();
        assert_abs_diff_eq!(field.get(0, 7).unwrap(), 1.0);
        assert_abs_diff_eq!(field.get(5, 5).unwrap(), 0.25);
        assert!(normalize(&grid, &empty(), Normalization::SingleCell(50)).is_err());
    }

    #[test]
    fn zero_boundary_column_is_an_error() {
        let l = layout();
        let mut time = vec![1.0; l.spec.len()];
        for j in 0..50 {
            time[l.index(0, j)] = 0.0;
        }
        let err = normalize(&SojournGrid::from_times(l, &empty(), time), &empty(), Normalization::ColumnMean).unwrap_err();
        assert!(err.to_string().contains("insufficient statistics for normalization"));
    }

    proptest! {
        #[test]
        fn normalization_is_scale_invariant(alpha in 1e-3f64..1e3, seed in 0u64..1000) {
            let l = GridSpec::new(20, 5).layout(&StripSpec::new(4.0, 1.0)).unwrap();
            let mut rng = crate::rng::RngStream::new(seed, 0);
            let time: Vec<f64> = (0..l.spec.len()).map(|_| 0.1 + rng.uniform()).collect();
            let grid = SojournGrid::from_times(l, &empty(), time);
            let a = normalize(&grid, &empty(), Normalization::ColumnMean).unwrap();
            // powers of two scale exactly in floating point
            let pow2 = 2f64.powi(alpha.log2().round() as i32);
            let b = normalize(&grid.scaled(pow2), &empty(), Normalization::ColumnMean).unwrap();
            prop_assert_eq!(&a.values, &b.values);
            let c = normalize(&grid.scaled(alpha), &empty(), Normalization::ColumnMean).unwrap();
            for (x, y) in a.values.iter().zip(&c.values) {
                prop_assert!((x - y).abs() <= 1e-14 * x.abs());
            }
        }
    }

    #[test]
    fn relative_error_examples() {
        let l = layout();
        let reference = ScalarField::from_fn(l, vec![false; l.spec.len()], |p| 1.0 - p.x / 8.0);
        let same = relative_error(&reference, &reference).unwrap();
        assert!(same.iter_unmasked().all(|(_, v)| v == 0.0));
        let mut scaled = reference.clone();
        scaled.values.iter_mut().for_each(|v| *v *= 1.05);
        let err = relative_error(&scaled, &reference).unwrap();
        assert!(err.iter_unmasked().all(|(_, v)| (v - 0.05).abs() < 1e-12));

        let other = GridSpec::new(100, 25).layout(&StripSpec::new(4.0, 1.0)).unwrap();
        let coarse = ScalarField::from_fn(other, vec![false; other.spec.len()], |_| 1.0);
        assert!(matches!(relative_error(&coarse, &reference), Err(DensityError::MismatchedSpecs(..))));
    }

    #[test]
    fn column_average_examples() {
        let l = layout();
        let ones = ScalarField::from_fn(l, vec![false; l.spec.len()], |_| 1.0);
        assert!(column_average(&ones).iter().all(|v| *v == Some(1.0)));

        let linear = ScalarField::from_fn(l, vec![false; l.spec.len()], |p| 1.0 - p.x / 8.0);
        let avg = column_average(&linear);
        // columns 99 and 100 straddle x1 = 2
        assert_abs_diff_eq!(0.5 * (avg[99].unwrap() + avg[100].unwrap()), 0.75, epsilon = 1e-12);

        let mut mask = vec![false; l.spec.len()];
        for j in 0..25 {
            mask[l.index(3, j)] = true;
        }
        for j in 0..50 {
            mask[l.index(4, j)] = true;
        }
        let f = ScalarField::from_fn(l, mask, |p| p.y);
        let avg = column_average(&f);
        assert_abs_diff_eq!(avg[3].unwrap(), 0.75, epsilon = 1e-12);
        assert_eq!(avg[4], None);
    }

    #[test]
    fn masks_for_aligned_square() {
        let l = layout();
        let obstacles = [Obstacle::rectangle(Vec2::new(2.0, 0.5), 0.8, 0.8)];
        let (mask, straddle) = obstacle_masks(&l, &obstacles);
        assert_eq!(mask.iter().filter(|&&m| m).count(), 40 * 40);
        // aligned edges cut no cell
        assert!(straddle.iter().all(|&s| !s));

        let off = [Obstacle::rectangle(Vec2::new(2.01, 0.5), 0.8, 0.8)];
        let (_, straddle) = obstacle_masks(&l, &off);
        assert!(straddle.iter().any(|&s| s));
    }

    #[test]
    fn csv_round_trip_with_mask() {
        let l = GridSpec::new(8, 2).layout(&StripSpec::new(4.0, 1.0)).unwrap();
        let mut mask = vec![false; l.spec.len()];
        mask[3] = true;
        let f = ScalarField::from_fn(l, mask, |p| p.x * 0.1 + p.y / 3.0);
        let mut buf = Vec::new();
        f.write_csv(&mut buf, "seed = 1\nmode = \"oracle\"").unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed = 1\n# mode = \"oracle\"\nnx,ny,Lx,Ly\n8,2,4,1\n"));
        assert!(text.contains("nan"));
        let back = ScalarField::read_csv(&buf[..]).unwrap();
        assert_eq!(back.mask, f.mask);
        for (k, v) in f.iter_unmasked() {
            assert_eq!(back.values[k].to_bits(), v.to_bits());
        }
    }

    #[test]
    fn corner_neighbourhoods() {
        let l = layout();
        let obstacles = [Obstacle::rectangle(Vec2::new(2.0, 0.5), 0.8, 0.8)];
        let near = near_corners(&l, &obstacles, 2.0);
        // 4x4 block around each of the four corners
        assert_eq!(near.iter().filter(|&&b| b).count(), 4 * 16);
    }
}
