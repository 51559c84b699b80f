//! Eigen-decomposition of the Laplacian on [0, L] with Robin boundary
//! conditions, the associated heat kernel, and the deterministic semigroup.
//!
//! Boundary parameters follow the convention `A = u - 1/2` at the left end
//! and `B = -(v - 1/2)` at the right end, i.e. `psi'(0) = A psi(0)` and
//! `psi'(L) = B psi(L)`. Time is the time of `d/dt = d^2/dz^2`; callers
//! evolving `d/dt = (1/2) d^2/dz^2` pass `t/2`.
//!
//! Oscillatory modes solve `tan(L kappa) = kappa (A - B) / (kappa^2 + A B)`.
//! The roots of branch n live in `((n - 1/2) pi / L, (n + 1/2) pi / L)`; the
//! interval is scaled by `1/L` so consecutive roots keep spacing `pi / L`
//! for every domain length, and a dense sign scan guards against missed
//! roots. For some (A, B) the problem also has up to two growing
//! ("hyperbolic") modes `cosh/sinh` with eigenvalue `+mu^2`, plus the
//! constant mode when A = B = 0; both are searched for so the eigenbasis is
//! complete for every u, v >= 0.

use crate::error::{Error, Result};
use crate::grid_paths::{trapezoid, Grid, Path};
use serde::{Deserialize, Serialize};

/// Robin boundary data for the interval `[0, L]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RobinSpec {
    #[serde(rename = "L")]
    pub length: f64,
    pub a: f64,
    pub b: f64,
}

impl RobinSpec {
    pub fn new(length: f64, a: f64, b: f64) -> Result<Self> {
        if !(length > 0.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::input(format!("bad Robin spec: L={length} A={a} B={b}")));
        }
        Ok(Self { length, a, b })
    }

    /// From open-KPZ boundary parameters: `A = u - 1/2`, `B = -(v - 1/2)`.
    pub fn from_uv(length: f64, u: f64, v: f64) -> Result<Self> {
        Self::new(length, u - 0.5, -(v - 0.5))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModeKind {
    Oscillatory,
    Hyperbolic,
    Constant,
}

/// One eigenmode: eigenvalue of `d^2/dz^2` is `-kappa^2` (oscillatory),
/// `+mu^2` (hyperbolic), or `0` (constant).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Mode {
    pub kind: ModeKind,
    /// kappa for oscillatory modes, mu for hyperbolic modes, 0 for constant.
    pub rate: f64,
    /// normalization a_n with `psi_n = a_n * (cos + (A/kappa) sin)` (or the
    /// hyperbolic / constant analogue)
    pub norm_a: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RobinEigenBasis {
    pub spec: RobinSpec,
    /// hyperbolic and constant modes first, then oscillatory modes by
    /// increasing kappa
    pub modes: Vec<Mode>,
}

impl RobinEigenBasis {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn n_oscillatory(&self) -> usize {
        self.modes.iter().filter(|m| m.kind == ModeKind::Oscillatory).count()
    }
}

fn g_osc(spec: &RobinSpec, k: f64) -> f64 {
    // pole-free reformulation of tan(Lk) = k (A-B) / (k^2 + AB)
    (spec.length * k).sin() * (k * k + spec.a * spec.b) - (spec.length * k).cos() * k * (spec.a - spec.b)
}

fn g_hyp(spec: &RobinSpec, m: f64) -> f64 {
    // analytic continuation kappa = i mu
    (spec.length * m).sinh() * (spec.a * spec.b - m * m) - (spec.length * m).cosh() * m * (spec.a - spec.b)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (flo < 0.0) != (fm < 0.0) {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
        if hi - lo < 1e-15 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn norm_oscillatory(spec: &RobinSpec, k: f64) -> f64 {
    // closed form of int_0^L (cos(kx) + (A/k) sin(kx))^2 dx
    let (l, a) = (spec.length, spec.a);
    let s2 = (2.0 * k * l).sin();
    let sl = (k * l).sin();
    let i_cc = l / 2.0 + s2 / (4.0 * k);
    let i_sc = sl * sl / (2.0 * k);
    let i_ss = l / 2.0 - s2 / (4.0 * k);
    let inv = i_cc + 2.0 * (a / k) * i_sc + (a / k) * (a / k) * i_ss;
    1.0 / inv.sqrt()
}

fn norm_hyperbolic(spec: &RobinSpec, m: f64) -> f64 {
    let (l, a) = (spec.length, spec.a);
    let s2 = (2.0 * m * l).sinh();
    let sl = (m * l).sinh();
    let i_cc = l / 2.0 + s2 / (4.0 * m);
    let i_sc = sl * sl / (2.0 * m);
    let i_ss = -l / 2.0 + s2 / (4.0 * m);
    let inv = i_cc + 2.0 * (a / m) * i_sc + (a / m) * (a / m) * i_ss;
    1.0 / inv.sqrt()
}

/// Find the first `n_modes` oscillatory eigenvalues plus any hyperbolic /
/// constant modes. Residual of the pole-free characteristic function is
/// driven below 1e-12 at every root; duplicate or missed roots are errors.
pub fn find_eigenvalues(spec: RobinSpec, n_modes: usize) -> Result<RobinEigenBasis> {
    if n_modes < 1 {
        return Err(Error::input("n_modes must be >= 1".into()));
    }
    let l = spec.length;
    let mut modes = Vec::with_capacity(n_modes + 2);

    let neumann = spec.a == 0.0 && spec.b == 0.0;
    if neumann {
        // constant mode, a_0 = 1/sqrt(L)
        modes.push(Mode { kind: ModeKind::Constant, rate: 0.0, norm_a: 1.0 / l.sqrt() });
    }

    // hyperbolic modes: dense sign scan of g_hyp on (0, mu_max]
    let mu_max = 2.0 * spec.a.abs().max(spec.b.abs()).max(1.0) + 2.0;
    let scan = 200_000usize;
    let mut prev_x = 1e-9;
    let mut prev_f = g_hyp(&spec, prev_x);
    for i in 1..=scan {
        let x = mu_max * i as f64 / scan as f64;
        let f = g_hyp(&spec, x);
        if (prev_f < 0.0) != (f < 0.0) {
            let mu = bisect(|m| g_hyp(&spec, m), prev_x, x);
            if mu > 1e-8 {
                modes.push(Mode { kind: ModeKind::Hyperbolic, rate: mu, norm_a: norm_hyperbolic(&spec, mu) });
            }
        }
        prev_x = x;
        prev_f = f;
    }
    if modes.iter().filter(|m| m.kind == ModeKind::Hyperbolic).count() > 2 {
        return Err(Error::numerical("more than two hyperbolic modes found".into()));
    }

    // oscillatory branches: brackets ((n-1/2) pi/L, (n+1/2) pi/L); within each
    // bracket locate the root by dense sign scan of the pole-free form
    let mut kappas = Vec::with_capacity(n_modes);
    let mut branch = 0usize;
    while kappas.len() < n_modes {
        let lo = ((branch as f64 - 0.5) * std::f64::consts::PI / l).max(1e-9);
        let hi = (branch as f64 + 0.5) * std::f64::consts::PI / l;
        branch += 1;
        if branch > 4 * n_modes + 16 {
            return Err(Error::numerical(format!(
                "root not bracketed: found {} of {n_modes} oscillatory modes after {branch} branches",
                kappas.len()
            )));
        }
        let steps = 512;
        let mut px = lo;
        let mut pf = g_osc(&spec, px);
        for i in 1..=steps {
            let x = lo + (hi - lo) * i as f64 / steps as f64;
            let f = g_osc(&spec, x);
            if (pf < 0.0) != (f < 0.0) {
                let k = bisect(|k| g_osc(&spec, k), px, x);
                if k > 1e-8 && kappas.last().map_or(true, |&p: &f64| k - p > 1e-9) {
                    kappas.push(k);
                    if kappas.len() == n_modes {
                        break;
                    }
                }
            }
            px = x;
            pf = f;
        }
    }
    for pair in kappas.windows(2) {
        if pair[1] - pair[0] < 1e-9 {
            return Err(Error::numerical(format!("duplicate roots near kappa = {}", pair[0])));
        }
    }
    for &k in &kappas {
        let scale = (k * k + spec.a * spec.b).abs().max(k * (spec.a - spec.b).abs()).max(1.0);
        let res = g_osc(&spec, k).abs() / scale;
        if res > 1e-12 {
            return Err(Error::numerical(format!("root residual {res:.2e} at kappa = {k}")));
        }
        modes.push(Mode { kind: ModeKind::Oscillatory, rate: k, norm_a: norm_oscillatory(&spec, k) });
    }

    Ok(RobinEigenBasis { spec, modes })
}

/// Evaluate eigenfunction `n` at `x`.
pub fn eigenfunction(basis: &RobinEigenBasis, n: usize, x: f64) -> Result<f64> {
    let mode = basis
        .modes
        .get(n)
        .ok_or_else(|| Error::input(format!("mode index {n} out of range ({} modes)", basis.n_modes())))?;
    if !(0.0..=basis.spec.length).contains(&x) {
        return Err(Error::input(format!("x = {x} outside [0, {}]", basis.spec.length)));
    }
    Ok(eigenfunction_unchecked(basis, mode, x))
}

#[inline]
fn eigenfunction_unchecked(basis: &RobinEigenBasis, mode: &Mode, x: f64) -> f64 {
    let a = basis.spec.a;
    match mode.kind {
        ModeKind::Constant => mode.norm_a,
        ModeKind::Oscillatory => mode.norm_a * ((mode.rate * x).cos() + (a / mode.rate) * (mode.rate * x).sin()),
        ModeKind::Hyperbolic => mode.norm_a * ((mode.rate * x).cosh() + (a / mode.rate) * (mode.rate * x).sinh()),
    }
}

/// Signed eigenvalue of `d^2/dz^2` for a mode.
#[inline]
pub fn eigenvalue(mode: &Mode) -> f64 {
    match mode.kind {
        ModeKind::Constant => 0.0,
        ModeKind::Oscillatory => -mode.rate * mode.rate,
        ModeKind::Hyperbolic => mode.rate * mode.rate,
    }
}

/// Heat kernel `K_t(x, y) = sum_n e^{lambda_n t} psi_n(x) psi_n(y)`.
///
/// Oscillatory terms are truncated once the per-term envelope
/// `e^{-t kappa^2} a_n^2 (1 + A^2/kappa^2)` drops below 1e-14, with at least
/// 32 oscillatory modes considered; hyperbolic and constant modes are always
/// included. Errors if the basis holds too few modes for the requested `t`.
pub fn kernel(basis: &RobinEigenBasis, t: f64, x: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::input(format!("kernel needs t > 0, got {t}")));
    }
    for &c in &[x, y] {
        if !(0.0..=basis.spec.length).contains(&c) {
            return Err(Error::input(format!("point {c} outside [0, {}]", basis.spec.length)));
        }
    }
    let a = basis.spec.a;
    let mut sum = 0.0;
    let mut n_osc = 0usize;
    let mut truncated = false;
    for mode in &basis.modes {
        match mode.kind {
            ModeKind::Constant | ModeKind::Hyperbolic => {
                sum += (eigenvalue(mode) * t).exp()
                    * eigenfunction_unchecked(basis, mode, x)
                    * eigenfunction_unchecked(basis, mode, y);
            }
            ModeKind::Oscillatory => {
                n_osc += 1;
                let k = mode.rate;
                let envelope = (-t * k * k).exp() * mode.norm_a * mode.norm_a * (1.0 + (a / k) * (a / k));
                if envelope < 1e-14 && n_osc > 32 {
                    truncated = true;
                    break;
                }
                sum += (-t * k * k).exp()
                    * eigenfunction_unchecked(basis, mode, x)
                    * eigenfunction_unchecked(basis, mode, y);
            }
        }
    }
    if !truncated {
        // the last term must already be negligible, otherwise the basis is
        // too small for this t
        if let Some(last) = basis.modes.iter().rev().find(|m| m.kind == ModeKind::Oscillatory) {
            let k = last.rate;
            let envelope = (-t * k * k).exp() * last.norm_a * last.norm_a * (1.0 + (a / k) * (a / k));
            if envelope > 1e-12 {
                return Err(Error::numerical(format!(
                    "basis with {} oscillatory modes too small for t = {t} (tail envelope {envelope:.2e})",
                    n_osc
                )));
            }
        }
    }
    Ok(sum)
}

/// Apply the heat semigroup spectrally: project `f` onto the eigenbasis by
/// trapezoid quadrature on its own grid, damp each coefficient by
/// `e^{lambda_n t}`, and resynthesize on the same grid.
pub fn apply_semigroup(basis: &RobinEigenBasis, t: f64, f: &Path) -> Result<Path> {
    if !(t >= 0.0) {
        return Err(Error::input(format!("semigroup needs t >= 0, got {t}")));
    }
    if (f.grid.length - basis.spec.length).abs() > 1e-12 * basis.spec.length {
        return Err(Error::input("path grid does not span the Robin interval".into()));
    }
    let n = f.grid.n_points;
    let dx = f.grid.dx();
    let mut out = vec![0.0; n];
    let mut psi = vec![0.0; n];
    for mode in &basis.modes {
        for (i, p) in psi.iter_mut().enumerate() {
            *p = eigenfunction_unchecked(basis, mode, f.grid.x(i).min(basis.spec.length));
        }
        let prod: Vec<f64> = psi.iter().zip(&f.values).map(|(p, v)| p * v).collect();
        let coeff = trapezoid(&prod, dx);
        let damp = (eigenvalue(mode) * t).exp();
        for (o, p) in out.iter_mut().zip(&psi) {
            *o += coeff * damp * p;
        }
    }
    Path::new(f.grid, out)
}

/// Empirical regularity constants of the kernel over a sampled (t, x, y)
/// range: max of `K_t(x,y) / (t^{-1/2} e^{-b|x-y|/sqrt t})`, of
/// `|K_t(x,z)-K_t(y,z)| / (t^{-1} |x-y|)`, and of
/// `|K_t(x,y)-K_s(x,y)| / (s^{-3/2} |t-s|)`. A sanity bound, not a proof.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KernelRegularityReport {
    pub c_bound: f64,
    pub c_space: f64,
    pub c_time: f64,
    pub samples: usize,
}

pub fn kernel_regularity_report(
    basis: &RobinEigenBasis,
    t_range: (f64, f64),
    samples: usize,
    rng: crate::grid_paths::RngStream,
) -> Result<KernelRegularityReport> {
    use rand::Rng;
    let mut r = rng.rng();
    let l = basis.spec.length;
    let b = 1.0;
    let (mut c_bound, mut c_space, mut c_time) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let t = t_range.0 + (t_range.1 - t_range.0) * r.gen::<f64>();
        let s = t * (0.5 + 0.5 * r.gen::<f64>());
        let x = l * r.gen::<f64>();
        let y = l * r.gen::<f64>();
        let z = l * r.gen::<f64>();
        let ktxy = kernel(basis, t, x, y)?;
        c_bound = c_bound.max(ktxy.abs() / (t.powf(-0.5) * (-b * (x - y).abs() / t.sqrt()).exp()));
        let ktxz = kernel(basis, t, x, z)?;
        let ktyz = kernel(basis, t, y, z)?;
        if (x - y).abs() > 1e-9 {
            c_space = c_space.max((ktxz - ktyz).abs() / ((x - y).abs() / t));
        }
        if (t - s).abs() > 1e-9 {
            let ksxy = kernel(basis, s, x, y)?;
            c_time = c_time.max((ktxy - ksxy).abs() / (s.powf(-1.5) * (t - s).abs()));
        }
    }
    Ok(KernelRegularityReport { c_bound, c_space, c_time, samples })
}

/// Modes needed so the kernel truncation rule is satisfied at time `t_min`.
pub fn modes_for(spec: &RobinSpec, t_min: f64) -> usize {
    let kappa_max = (36.0 / t_min).sqrt(); // e^{-t k^2} < 1e-15 once t k^2 > 36
    ((kappa_max * spec.length / std::f64::consts::PI).ceil() as usize + 8).max(40)
}
