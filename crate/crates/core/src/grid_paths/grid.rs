//! Uniform grids on [0, L] and piecewise-linear paths on them.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Uniform grid over `[0, L]` with `n_points >= 2` nodes, spacing
/// `dx = L / (n_points - 1)`. Node `i` sits at `i * dx`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    #[serde(rename = "L")]
    pub length: f64,
    #[serde(rename = "n")]
    pub n_points: usize,
}

impl Grid {
    pub fn new(length: f64, n_points: usize) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::input(format!("grid length must be positive and finite, got {length}")));
        }
        if n_points < 2 {
            return Err(Error::input(format!("grid needs at least 2 points, got {n_points}")));
        }
        Ok(Self { length, n_points })
    }

    /// Grid covering `[0, L]` with spacing as close as possible to `dx`
    /// (rounded so the last node lands on `L`).
    pub fn with_spacing(length: f64, dx: f64) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::input(format!("dx must be positive, got {dx}")));
        }
        let n = (length / dx).round() as usize + 1;
        Self::new(length, n.max(2))
    }

    #[inline]
    pub fn dx(&self) -> f64 {
        self.length / (self.n_points - 1) as f64
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    /// Nearest node index for a coordinate (clamped into range).
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = (x / self.dx()).round() as isize;
        i.clamp(0, self.n_points as isize - 1) as usize
    }

    /// Grid with doubled resolution on the same interval.
    pub fn refined(&self) -> Grid {
        Grid { length: self.length, n_points: 2 * self.n_points - 1 }
    }
}

/// A real-valued path sampled on a [`Grid`]. Between nodes the path is, by
/// convention, the linear interpolant; every consumer in this crate relies on
/// that single declaration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Path {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points {
            return Err(Error::input(format!(
                "path has {} values for a grid of {} points",
                values.len(),
                grid.n_points
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("path contains non-finite values"));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, c: f64) -> Result<Self> {
        Self::new(grid, vec![c; grid.n_points])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Linear interpolation at `x` (clamped to `[0, L]`).
    pub fn value_at(&self, x: f64) -> f64 {
        let dx = self.grid.dx();
        let t = (x / dx).clamp(0.0, (self.len() - 1) as f64);
        let i = (t.floor() as usize).min(self.len() - 2);
        let frac = t - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }

    /// Trapezoid integral of the node values over `[0, L]`.
    pub fn trapezoid(&self) -> f64 {
        trapezoid(&self.values, self.grid.dx())
    }

    /// Path evaluated on the refined grid (linear interpolation at new nodes).
    pub fn refine(&self) -> Path {
        let grid = self.grid.refined();
        let mut values = Vec::with_capacity(grid.n_points);
        for i in 0..grid.n_points {
            if i % 2 == 0 {
                values.push(self.values[i / 2]);
            } else {
                values.push(0.5 * (self.values[i / 2] + self.values[i / 2 + 1]));
            }
        }
        Path { grid, values }
    }
}

/// Trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], dx: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let mut s = 0.5 * (values[0] + values[values.len() - 1]);
    for v in &values[1..values.len() - 1] {
        s += v;
    }
    s * dx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_endpoint_is_exact_within_rounding() {
        for (l, n) in [(4.0, 81), (1.0, 7), (16.0, 321), (0.3, 12345)] {
            let g = Grid::new(l, n).unwrap();
            let last = g.x(n - 1);
            assert!((last - l).abs() <= 2.0 * f64::EPSILON * l, "L={l} n={n} last={last}");
        }
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(Grid::new(0.0, 10).is_err());
        assert!(Grid::new(-1.0, 10).is_err());
        assert!(Grid::new(1.0, 1).is_err());
    }

    #[test]
    fn path_rejects_nan() {
        let g = Grid::new(1.0, 3).unwrap();
        assert!(Path::new(g, vec![0.0, f64::NAN, 1.0]).is_err());
        assert!(Path::new(g, vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn linear_interpolation() {
        let g = Grid::new(2.0, 3).unwrap();
        let p = Path::new(g, vec![0.0, 1.0, 4.0]).unwrap();
        assert_eq!(p.value_at(0.5), 0.5);
        assert_eq!(p.value_at(1.5), 2.5);
        assert_eq!(p.value_at(2.0), 4.0);
    }

    #[test]
    fn trapezoid_linear_is_exact() {
        let g = Grid::new(1.0, 11).unwrap();
        let p = Path::new(g, (0..11).map(|i| i as f64 * 0.1).collect()).unwrap();
        assert!((p.trapezoid() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn refine_preserves_nodes() {
        let g = Grid::new(1.0, 5).unwrap();
        let p = Path::new(g, vec![0.0, 1.0, 0.5, 2.0, -1.0]).unwrap();
        let r = p.refine();
        assert_eq!(r.len(), 9);
        assert_eq!(r.values[0], 0.0);
        assert_eq!(r.values[2], 1.0);
        assert_eq!(r.values[3], 0.75);
        assert!((p.trapezoid() - r.trapezoid()).abs() < 1e-14);
    }
}
