//! Brownian samplers at grid resolution and the closed-form facts used by the
//! statistical tests.
//!
//! Samplers generate increments at grid resolution only; nothing is done about
//! extrema between nodes, so barrier statistics computed from sampled paths
//! under-count crossings. Grid-refinement tests bound that bias.

use super::grid::{Grid, Path};
use super::rng::RngStream;
use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;

/// Brownian motion on `grid` started at `start` with the given diffusion
/// coefficient (variance of the increment over unit length).
pub fn sample_bm(grid: Grid, start: f64, diffusion: f64, rng: RngStream) -> Result<Path> {
    check_diffusion(diffusion)?;
    if !start.is_finite() {
        return Err(Error::input(format!("non-finite start {start}")));
    }
    let mut r = rng.rng();
    let sd = (diffusion * grid.dx()).sqrt();
    let mut values = Vec::with_capacity(grid.n_points);
    let mut cur = start;
    values.push(cur);
    for _ in 1..grid.n_points {
        let z: f64 = r.sample(StandardNormal);
        cur += sd * z;
        values.push(cur);
    }
    Path::new(grid, values)
}

/// Brownian bridge from `a` to `b` over `[0, L]`.
///
/// Construction: sample a Brownian motion `B` started at 0 and condition on
/// its endpoint, i.e. return `a + B(x) - (x/L) B(L) + (x/L)(b - a)`. This has
/// the exact bridge law for the stated diffusion and reproduces the endpoints
/// bit-for-bit.
pub fn sample_bridge(grid: Grid, a: f64, b: f64, diffusion: f64, rng: RngStream) -> Result<Path> {
    check_diffusion(diffusion)?;
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::input(format!("non-finite endpoints ({a}, {b})")));
    }
    let bm = sample_bm(grid, 0.0, diffusion, rng)?;
    Ok(bridge_from_bm(&bm, a, b))
}

/// Deterministic bridge construction from an already-sampled motion.
pub fn bridge_from_bm(bm: &Path, a: f64, b: f64) -> Path {
    let n = bm.len();
    let last = bm.values[n - 1] - bm.values[0];
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let frac = i as f64 / (n - 1) as f64;
        let body = (bm.values[i] - bm.values[0]) - frac * last;
        values.push(a + body + frac * (b - a));
    }
    // endpoints exact by construction
    values[0] = a;
    values[n - 1] = b;
    Path { grid: bm.grid, values }
}

/// Probability that a Brownian bridge from `x > 0` to `y > 0` over time `T`
/// with the given diffusion coefficient stays positive:
/// `1 - exp(-2xy / (diffusion * T))` (reflection principle).
pub fn bridge_stay_positive_prob(x: f64, y: f64, t: f64, diffusion: f64) -> Result<f64> {
    for (name, v) in [("x", x), ("y", y), ("T", t), ("diffusion", diffusion)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::input(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(-(-2.0 * x * y / (diffusion * t)).exp_m1())
}

/// One-point density of the standard Brownian excursion on `[0, 1]` at time
/// `s` and height `y`:
/// `2 y^2 exp(-y^2 / (2 s (1-s))) / sqrt(2 pi s^3 (1-s)^3)`.
pub fn excursion_density(s: f64, y: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::input(format!("s must lie in (0,1), got {s}")));
    }
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::input(format!("y must be positive, got {y}")));
    }
    let var = s * (1.0 - s);
    let norm = (2.0 * std::f64::consts::PI * var * var * var).sqrt();
    Ok(2.0 * y * y * (-y * y / (2.0 * var)).exp() / norm)
}

/// Crossing direction for exit-time scans.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Above,
    Below,
}

/// First coordinate at which the (piecewise-linear) path reaches the level
/// curve in the given direction, or `None` if it never does. `level_fn` is
/// evaluated at the grid nodes and interpolated linearly, matching the path
/// convention.
pub fn first_exit_time(path: &Path, level_fn: impl Fn(f64) -> f64, direction: Direction) -> Option<f64> {
    exit_scan(path, level_fn, direction, false)
}

/// Mirror of [`first_exit_time`]: the last coordinate at which the path is at
/// or beyond the level, found by scanning from the right.
pub fn last_exit_time(path: &Path, level_fn: impl Fn(f64) -> f64, direction: Direction) -> Option<f64> {
    exit_scan(path, level_fn, direction, true)
}

fn exit_scan(path: &Path, level_fn: impl Fn(f64) -> f64, direction: Direction, from_right: bool) -> Option<f64> {
    let n = path.len();
    let dx = path.grid.dx();
    // signed margin: >= 0 means "at or beyond the level" in the scan direction
    let margin = |i: usize| -> f64 {
        let d = path.values[i] - level_fn(path.grid.x(i));
        match direction {
            Direction::Above => d,
            Direction::Below => -d,
        }
    };
    let cross_x = |i: usize, j: usize| -> f64 {
        // linear zero of the margin between nodes i < j
        let (a, b) = (margin(i), margin(j));
        if (b - a).abs() < f64::MIN_POSITIVE {
            return path.grid.x(i);
        }
        path.grid.x(i) + dx * (-a / (b - a)).clamp(0.0, 1.0)
    };
    if from_right {
        if margin(n - 1) >= 0.0 {
            return Some(path.grid.x(n - 1));
        }
        for i in (0..n - 1).rev() {
            if margin(i) >= 0.0 {
                return Some(cross_x(i, i + 1));
            }
        }
        None
    } else {
        if margin(0) >= 0.0 {
            return Some(0.0);
        }
        for i in 1..n {
            if margin(i) >= 0.0 {
                return Some(cross_x(i - 1, i));
            }
        }
        None
    }
}

fn check_diffusion(diffusion: f64) -> Result<()> {
    if !(diffusion > 0.0) || !diffusion.is_finite() {
        return Err(Error::input(format!("diffusion must be positive, got {diffusion}")));
    }
    Ok(())
}
