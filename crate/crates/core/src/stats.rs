//! Estimation helpers: compensated reductions, batch-means errors,
//! Kolmogorov–Smirnov and chi-squared tests, and weighted log-log fits.
//!
//! Reductions are written to be order-independent in practice: batch results
//! are collected into index order first and folded sequentially with
//! compensated (Neumaier) summation, so a run with 1 worker and a run with 8
//! produce identical bytes.

use crate::error::{Error, Result};
use crate::special::{chi2_sf, kolmogorov_sf, student_t_critical};

/// Compensated (Neumaier) sum.
pub fn sum(xs: &[f64]) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for &x in xs {
        let t = s + x;
        if s.abs() >= x.abs() {
            c += (s - t) + x;
        } else {
            c += (x - t) + s;
        }
        s = t;
    }
    s + c
}

pub fn mean(xs: &[f64]) -> f64 {
    sum(xs) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    sum(&dev) / (xs.len() as f64 - 1.0)
}

pub fn std_error_of_mean(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Batch-means standard error of the mean: splits the series into `n_batches`
/// contiguous batches and uses the spread of batch means. Robust to serial
/// correlation from MCMC.
pub fn batch_means_stderr(xs: &[f64], n_batches: usize) -> Result<f64> {
    if n_batches < 2 || xs.len() < 2 * n_batches {
        return Err(Error::config(format!(
            "batch means needs at least 2 points per batch across {n_batches} batches, got {} points",
            xs.len()
        )));
    }
    let base = xs.len() / n_batches;
    let mut means = Vec::with_capacity(n_batches);
    for b in 0..n_batches {
        let lo = b * base;
        let hi = if b + 1 == n_batches { xs.len() } else { lo + base };
        means.push(mean(&xs[lo..hi]));
    }
    Ok((variance(&means) / n_batches as f64).sqrt())
}

/// Jackknife standard error of the sample variance.
pub fn jackknife_variance_stderr(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let ss: f64 = sum(&xs.iter().map(|x| (x - m) * (x - m)).collect::<Vec<_>>());
    // leave-one-out variances
    let mut loo = Vec::with_capacity(xs.len());
    for &x in xs {
        let m_i = (n * m - x) / (n - 1.0);
        let ss_i = ss - (x - m) * (x - m) - (n - 1.0) * (m_i - m) * (m_i - m);
        loo.push(ss_i.max(0.0) / (n - 2.0));
    }
    let lm = mean(&loo);
    let dev: Vec<f64> = loo.iter().map(|v| (v - lm) * (v - lm)).collect();
    ((n - 1.0) / n * sum(&dev)).sqrt()
}

/// One-sample Kolmogorov–Smirnov test against a CDF. Returns (statistic, p).
pub fn ks_one_sample(xs: &[f64], cdf: impl Fn(f64) -> f64) -> (f64, f64) {
    let mut s: Vec<f64> = xs.to_vec();
    s.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i as f64 + 1.0) / n - f).abs());
    }
    let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    (d, kolmogorov_sf(lambda))
}

/// Two-sample Kolmogorov–Smirnov test. Returns (statistic, p).
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let mut a: Vec<f64> = xs.to_vec();
    let mut b: Vec<f64> = ys.to_vec();
    a.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let t = a[i].min(b[j]);
        while i < n && a[i] <= t {
            i += 1;
        }
        while j < m && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    (d, kolmogorov_sf(lambda))
}

/// One-sided empirical-CDF dominance: fraction of the pooled support where
/// `F_hi(x) <= F_lo(x)` fails by more than `slack`. Zero means the CDF of
/// `hi` lies at or below the CDF of `lo` (stochastic dominance of `hi`).
pub fn cdf_dominance_violation(hi: &[f64], lo: &[f64], slack: f64) -> f64 {
    let mut a: Vec<f64> = hi.to_vec();
    let mut b: Vec<f64> = lo.to_vec();
    a.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_unstable_by(|x, y| x.partial_cmp(y).unwrap());
    let mut worst = 0.0f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        let fh = i as f64 / a.len() as f64;
        let fl = j as f64 / b.len() as f64;
        worst = worst.max(fh - fl);
    }
    (worst - slack).max(0.0)
}

/// Pearson chi-squared goodness-of-fit p-value for observed counts against
/// expected counts (expected from a fully specified model).
pub fn chi2_test(observed: &[f64], expected: &[f64]) -> f64 {
    assert_eq!(observed.len(), expected.len());
    let mut stat = 0.0;
    let mut dof = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        if e > 0.0 {
            stat += (o - e) * (o - e) / e;
            dof += 1.0;
        }
    }
    chi2_sf(stat, dof - 1.0)
}

/// Weighted least squares line `y = a + b x`. Weights are 1/variance of y.
#[derive(Clone, Copy, Debug)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    pub slope_se: f64,
    /// 95% confidence interval for the slope (Student-t, n-2 dof).
    pub slope_ci: (f64, f64),
    pub r_squared: f64,
}

pub fn wls_line(x: &[f64], y: &[f64], w: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 3 || y.len() != n || w.len() != n {
        return Err(Error::config(format!("line fit needs >= 3 points, got {n}")));
    }
    let sw = sum(w);
    let mx = sum(&x.iter().zip(w).map(|(a, b)| a * b).collect::<Vec<_>>()) / sw;
    let my = sum(&y.iter().zip(w).map(|(a, b)| a * b).collect::<Vec<_>>()) / sw;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        sxx += w[i] * (x[i] - mx) * (x[i] - mx);
        sxy += w[i] * (x[i] - mx) * (y[i] - my);
    }
    if sxx <= 0.0 {
        return Err(Error::numerical("degenerate abscissa in line fit".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // residual scale: chi2 per dof, floored at 1 so the reported CI never
    // shrinks below what the per-point errors imply
    let mut chi2 = 0.0;
    let mut ss_tot = 0.0;
    for i in 0..n {
        let r = y[i] - intercept - slope * x[i];
        chi2 += w[i] * r * r;
        ss_tot += w[i] * (y[i] - my) * (y[i] - my);
    }
    let dof = (n - 2) as f64;
    let infl = (chi2 / dof).max(1.0);
    let slope_se = (infl / sxx).sqrt();
    let tcrit = student_t_critical(dof, 0.05);
    let r_squared = if ss_tot > 0.0 { 1.0 - chi2 / ss_tot } else { 1.0 };
    Ok(LineFit {
        intercept,
        slope,
        slope_se,
        slope_ci: (slope - tcrit * slope_se, slope + tcrit * slope_se),
        r_squared,
    })
}

/// Log-sum-exp of `values[i] + log_weights[i]`.
pub fn log_sum_exp_weighted(values: &[f64], log_weights: &[f64]) -> f64 {
    debug_assert_eq!(values.len(), log_weights.len());
    let mut m = f64::NEG_INFINITY;
    for i in 0..values.len() {
        m = m.max(values[i] + log_weights[i]);
    }
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut s = 0.0;
    for i in 0..values.len() {
        s += (values[i] + log_weights[i] - m).exp();
    }
    m + s.ln()
}

/// `log( integral_0^L exp(f) dx )` by the trapezoid rule on grid values,
/// evaluated stably in log space.
pub fn log_trapezoid_exp(values: &[f64], dx: f64) -> f64 {
    let n = values.len();
    debug_assert!(n >= 2);
    let mut m = f64::NEG_INFINITY;
    for &v in values {
        m = m.max(v);
    }
    let mut s = 0.5 * ((values[0] - m).exp() + (values[n - 1] - m).exp());
    for &v in &values[1..n - 1] {
        s += (v - m).exp();
    }
    m + (s * dx).ln()
}

/// Same, restricted to the index window `[i0, i1]` (inclusive endpoints).
pub fn log_trapezoid_exp_window(values: &[f64], dx: f64, i0: usize, i1: usize) -> f64 {
    log_trapezoid_exp(&values[i0..=i1], dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid_paths::rng::RngStream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn neumaier_sum_is_exactish() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(sum(&xs), 2.0);
    }

    #[test]
    fn ks_one_sample_uniform_null() {
        // p-values roughly uniform under the null: check a single healthy draw
        let mut r = RngStream::new(1, 0).rng();
        let xs: Vec<f64> = (0..5000).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let (_, p) = ks_one_sample(&xs, crate::special::normal_cdf);
        assert!(p > 0.001, "p={p}");
        // and a shifted alternative is rejected
        let ys: Vec<f64> = xs.iter().map(|x| x + 0.2).collect();
        let (_, p) = ks_one_sample(&ys, crate::special::normal_cdf);
        assert!(p < 1e-6, "p={p}");
    }

    #[test]
    fn ks_two_sample_null_and_alternative() {
        let mut r = RngStream::new(2, 0).rng();
        let xs: Vec<f64> = (0..4000).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let ys: Vec<f64> = (0..4000).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let (_, p) = ks_two_sample(&xs, &ys);
        assert!(p > 0.001, "p={p}");
        let zs: Vec<f64> = ys.iter().map(|y| y * 2.0f64.sqrt()).collect();
        let (_, p) = ks_two_sample(&xs, &zs);
        assert!(p < 1e-4, "p={p}");
    }

    #[test]
    fn batch_means_on_iid_matches_naive() {
        let mut r = RngStream::new(3, 0).rng();
        let xs: Vec<f64> = (0..20_000).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let bm = batch_means_stderr(&xs, 20).unwrap();
        let naive = std_error_of_mean(&xs);
        assert!((bm - naive).abs() / naive < 0.5, "bm={bm} naive={naive}");
        assert!(batch_means_stderr(&xs[..10], 20).is_err());
    }

    #[test]
    fn wls_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let w = [1.0; 4];
        let fit = wls_line(&x, &y, &w).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
    }

    #[test]
    fn log_trapezoid_exp_matches_direct() {
        let vals = [0.0, 0.5, -0.25, 1.0, 0.75];
        let direct: f64 = {
            let mut s = 0.5 * (vals[0].exp() + vals[4].exp());
            for v in &vals[1..4] {
                s += v.exp();
            }
            (s * 0.1).ln()
        };
        assert!((log_trapezoid_exp(&vals, 0.1) - direct).abs() < 1e-14);
        // huge values stay finite
        let big = [500.0, 480.0, 510.0];
        assert!(log_trapezoid_exp(&big, 0.05).is_finite());
    }

    #[test]
    fn jackknife_variance_sane() {
        let mut r = RngStream::new(4, 0).rng();
        let xs: Vec<f64> = (0..5000).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let se = jackknife_variance_stderr(&xs);
        // theory: SE(sample var of N(0,1)) ~ sqrt(2/n)
        let expect = (2.0 / 5000.0f64).sqrt();
        assert!((se - expect).abs() / expect < 0.25, "se={se} expect={expect}");
    }
}
