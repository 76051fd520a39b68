//! Square-cell grid over the strip and exact segment slicing.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{StripSpec, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_x: usize,
    pub n_y: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid needs at least one cell in each direction (got {n_x} x {n_y})")]
    Empty { n_x: usize, n_y: usize },
    #[error("cells are not square: {dx} x {dy}")]
    NotSquare { dx: f64, dy: f64 },
}

impl GridSpec {
    pub fn new(n_x: usize, n_y: usize) -> Self {
        Self { n_x, n_y }
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Binds the grid to a strip, checking the square-cell constraint.
    pub fn layout(&self, strip: &StripSpec) -> Result<GridLayout, GridError> {
        if self.n_x == 0 || self.n_y == 0 {
            return Err(GridError::Empty {
                n_x: self.n_x,
                n_y: self.n_y,
            });
        }
        let dx = strip.length_x / self.n_x as f64;
        let dy = strip.length_y / self.n_y as f64;
        if (dx - dy).abs() > 1e-12 {
            return Err(GridError::NotSquare { dx, dy });
        }
        Ok(GridLayout {
            spec: *self,
            length_x: strip.length_x,
            length_y: strip.length_y,
            cell: dx,
        })
    }
}

/// A grid bound to concrete strip dimensions. Cell `(i, j)` covers
/// `[i h, (i+1) h) x [j h, (j+1) h)` and has flat index `j * n_x + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridLayout {
    pub spec: GridSpec,
    pub length_x: f64,
    pub length_y: f64,
    pub cell: f64,
}

impl GridLayout {
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.spec.n_x + i
    }

    #[inline]
    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.spec.n_x, k / self.spec.n_x)
    }

    pub fn center(&self, i: usize, j: usize) -> Vec2 {
        Vec2::new((i as f64 + 0.5) * self.cell, (j as f64 + 0.5) * self.cell)
    }

    pub fn strip(&self) -> StripSpec {
        StripSpec::new(self.length_x, self.length_y)
    }

    // float-to-int casts truncate toward zero and saturate negatives at
    // zero, which is floor-then-clamp for these arguments
    #[inline]
    fn clamp_x(&self, v: f64) -> usize {
        (v as usize).min(self.spec.n_x - 1)
    }

    #[inline]
    fn clamp_y(&self, v: f64) -> usize {
        (v as usize).min(self.spec.n_y - 1)
    }

    /// Walks the cells crossed by the segment `start + s * dir`,
    /// `0 <= s <= length`, calling `visit(cell, piece)` with the length of
    /// the segment inside each cell. Pieces sum to `length`.
    pub fn slice_segment(&self, start: Vec2, dir: Vec2, length: f64, mut visit: impl FnMut(usize, f64)) {
        if !(length > 0.0) {
            return;
        }
        let h = self.cell;
        let inv = 1.0 / h;
        // locate the starting cell slightly along the segment so that a start
        // on a cell face picks the cell the segment actually enters
        let probe = (1e-9 * h).min(0.5 * length);
        let mut i = self.clamp_x((start.x + dir.x * probe) * inv);
        let mut j = self.clamp_y((start.y + dir.y * probe) * inv);

        let (step_i, mut next_x, delta_x) = axis_setup(start.x, dir.x, i, h);
        let (step_j, mut next_y, delta_y) = axis_setup(start.y, dir.y, j, h);

        let nx = self.spec.n_x as isize;
        let ny = self.spec.n_y as isize;
        let mut s = 0.0;
        loop {
            let s_next = next_x.min(next_y).min(length);
            if s_next > s {
                visit(self.index(i, j), s_next - s);
                s = s_next;
            }
            if s >= length {
                break;
            }
            if next_x <= next_y {
                let ni = i as isize + step_i;
                if ni < 0 || ni >= nx {
                    next_x = f64::INFINITY;
                } else {
                    i = ni as usize;
                    next_x += delta_x;
                }
            } else {
                let nj = j as isize + step_j;
                if nj < 0 || nj >= ny {
                    next_y = f64::INFINITY;
                } else {
                    j = nj as usize;
                    next_y += delta_y;
                }
            }
        }
    }
}

/// Step direction, parameter of the first face crossing and the parameter
/// spacing between crossings along one axis.
#[inline]
fn axis_setup(origin: f64, d: f64, cell: usize, h: f64) -> (isize, f64, f64) {
    if d > 0.0 {
        let face = (cell + 1) as f64 * h;
        (1, ((face - origin) / d).max(0.0), h / d)
    } else if d < 0.0 {
        let face = cell as f64 * h;
        (-1, ((face - origin) / d).max(0.0), -h / d)
    } else {
        (0, f64::INFINITY, f64::INFINITY)
    }
}
