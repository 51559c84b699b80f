//! Special functions needed by the statistical harness and the wedge kernel.
//!
//! Everything here is self-contained f64 numerics: log-gamma (Lanczos),
//! erf/erfc, regularized incomplete gamma and beta, the Kolmogorov
//! distribution, and exponentially-scaled modified Bessel functions of the
//! first kind evaluated by backward (Miller) recurrence.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// Complementary error function (Numerical Recipes rational approximation,
/// absolute error below 1.2e-7; adequate for p-values).
pub fn erfc(x: f64) -> f64 {
    let z = x.abs();
    let t = 1.0 / (1.0 + 0.5 * z);
    let ans = t * (-z * z - 1.265_512_23
        + t * (1.000_023_68
            + t * (0.374_091_96
                + t * (0.096_784_18
                    + t * (-0.186_288_06
                        + t * (0.278_868_07
                            + t * (-1.135_203_98
                                + t * (1.488_515_87
                                    + t * (-0.822_152_23 + t * 0.170_872_77)))))))))
        .exp();
    if x >= 0.0 {
        ans
    } else {
        2.0 - ans
    }
}

pub fn erf(x: f64) -> f64 {
    1.0 - erfc(x)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0, "gamma_p domain: a={a} x={x}");
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // series
        let mut ap = a;
        let mut sum = 1.0 / a;
        let mut del = sum;
        for _ in 0..500 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-15 {
                break;
            }
        }
        sum * (-x + a * x.ln() - ln_gamma(a)).exp()
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) by continued fraction (x >= a+1).
fn gamma_q_cf(a: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Chi-squared survival function with `k` degrees of freedom.
pub fn chi2_sf(x: f64, k: f64) -> f64 {
    (1.0 - gamma_p(k / 2.0, x / 2.0)).clamp(0.0, 1.0)
}

/// Regularized incomplete beta I_x(a, b).
pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    assert!((0.0..=1.0).contains(&x), "beta_inc domain: x={x}");
    if x == 0.0 || x == 1.0 {
        return x;
    }
    let front = (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - (ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln()).exp()
            * beta_cf(b, a, 1.0 - x)
            / b
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-14 {
            break;
        }
    }
    h
}

/// Two-sided Student-t survival used for p-values: P(|T_nu| > t).
pub fn student_t_two_sided_sf(t: f64, nu: f64) -> f64 {
    let x = nu / (nu + t * t);
    beta_inc(nu / 2.0, 0.5, x)
}

/// Critical value t* with P(|T_nu| > t*) = alpha, by bisection.
pub fn student_t_critical(nu: f64, alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1e3f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_two_sided_sf(mid, nu) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Kolmogorov distribution survival function
/// Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for j in 1..=100 {
        let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Exponentially scaled modified Bessel functions of the first kind:
/// returns `I_nu(z) * exp(-z)` for every order in `nu0, nu0+1, ..., nu0+k-1`
/// where `nu0` is 0.0 or 0.5. Backward (Miller) recurrence, normalized via
/// `1 = e^{-z}(I_0 + 2 sum I_k)` for integer orders and the closed form of
/// `I_{1/2}` for half-integer orders. Never overflows for z >= 0.
pub fn bessel_i_scaled_seq(nu0: f64, k: usize, z: f64) -> Vec<f64> {
    assert!(nu0 == 0.0 || nu0 == 0.5, "only integer / half-integer ladders supported");
    assert!(z >= 0.0);
    if k == 0 {
        return Vec::new();
    }
    if z == 0.0 {
        let mut out = vec![0.0; k];
        if nu0 == 0.0 {
            out[0] = 1.0; // I_0(0) = 1, scaled by e^0
        }
        return out;
    }
    if z < 1e-8 {
        // small-argument leading term, scaled: I_nu(z) e^{-z} ~ (z/2)^nu / Gamma(nu+1)
        return (0..k)
            .map(|i| {
                let nu = nu0 + i as f64;
                ((nu * (z / 2.0).ln() - ln_gamma(nu + 1.0)) - z).exp()
            })
            .collect();
    }
    let nu_max = nu0 + (k - 1) as f64;
    // start well above both the largest order wanted and the turning point
    let start = (nu_max + 2.0 * z.sqrt() + 40.0).ceil() as usize + k;
    let mut high = 0.0f64; // I_{n+1} seed
    let mut cur = 1e-300f64; // I_n seed
    let mut out = vec![0.0; k];
    let mut norm = 0.0f64; // for integer ladder: I_0 + 2 sum_{j>=1} I_j
    for step in (0..start).rev() {
        let nu = nu0 + step as f64;
        let prev = high + (2.0 * (nu + 1.0) / z) * cur; // I_{nu} from I_{nu+1}, I_{nu+2}
        high = cur;
        cur = prev;
        // rescale to avoid overflow of the unnormalized recurrence
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            high *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut() {
                *v *= 1e-250;
            }
        }
        if step < k {
            out[step] = cur;
        }
        if nu0 == 0.0 {
            norm += if step == 0 { cur } else { 2.0 * cur };
        }
    }
    let scale = if nu0 == 0.0 {
        // e^{-z} (I_0 + 2 sum I_j) = 1
        1.0 / norm
    } else {
        // I_{1/2}(z) e^{-z} = (1 - e^{-2z}) / sqrt(2 pi z)
        let i_half_scaled = (-(-2.0 * z).exp_m1()) / (2.0 * PI * z).sqrt();
        i_half_scaled / out[0]
    };
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

/// `I_nu(z) e^{-z}` for a single order (nu on the integer or half-integer grid).
pub fn bessel_i_scaled(nu: f64, z: f64) -> f64 {
    let base = if (nu - nu.floor()).abs() < 1e-12 { 0.0 } else { 0.5 };
    let k = (nu - base).round() as usize;
    bessel_i_scaled_seq(base, k + 1, z)[k]
}
