//! Log-gamma, log-beta and log-binomial coefficients, plus the logistic helpers
//! used by every likelihood.

use crate::error::{invalid, Result};
use crate::Real;

const LANCZOS_G: f64 = 7.0;
#[allow(clippy::excessive_precision)]
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Bernoulli-number coefficients of the Stirling series for `ln Γ`.
const STIRLING_COEF: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma<F: Real>(x: F) -> F {
    let half = F::lit(0.5);
    if x < half {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = F::PI();
        return (pi / (pi * x).sin()).ln() - ln_gamma(F::one() - x);
    }
    if x >= F::lit(10.0) {
        return (x - half) * x.ln() - x + F::lit(0.5 * (2.0 * std::f64::consts::PI).ln()) + stirling_correction(x);
    }
    let x = x - F::one();
    let mut acc = F::lit(LANCZOS_COEF[0]);
    for (k, &c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc = acc + F::lit(c) / (x + F::lit(k as f64));
    }
    let t = x + F::lit(LANCZOS_G + 0.5);
    F::lit(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + half) * t.ln() - t + acc.ln()
}

/// Remainder of Stirling's approximation, `ln Γ(x) - [(x-½)ln x - x + ½ln 2π]`,
/// accurate to full double precision for `x ≥ 10`.
fn stirling_correction<F: Real>(x: F) -> F {
    let inv = x.recip();
    let inv2 = inv * inv;
    let mut acc = F::zero();
    for &c in STIRLING_COEF.iter().rev() {
        acc = acc * inv2 + F::lit(c);
    }
    acc * inv
}

/// `ln B(a, b)` without argument checks. Large arguments are handled through
/// Stirling differences so that no `ln Γ` cancellation occurs.
pub(crate) fn ln_beta<F: Real>(a: F, b: F) -> F {
    let (p, q) = if a < b { (a, b) } else { (b, a) };
    let ten = F::lit(10.0);
    let half = F::lit(0.5);
    let s = p + q;
    if p >= ten {
        let corr = stirling_correction(p) + stirling_correction(q) - stirling_correction(s);
        -half * q.ln()
            + F::lit(0.5 * (2.0 * std::f64::consts::PI).ln())
            + corr
            + (p - half) * (p / s).ln()
            + q * (-p / s).ln_1p()
    } else if q >= ten {
        let corr = stirling_correction(q) - stirling_correction(s);
        ln_gamma(p) + corr + p - p * s.ln() + (q - half) * (-p / s).ln_1p()
    } else {
        ln_gamma(p) + ln_gamma(q) - ln_gamma(s)
    }
}

/// `ln B(a, b) = ln Γ(a) + ln Γ(b) - ln Γ(a + b)`.
pub fn log_beta<F: Real>(a: F, b: F) -> Result<F> {
    if !(a > F::zero() && b > F::zero()) || !a.is_finite() || !b.is_finite() {
        return Err(invalid(format!("log_beta needs a, b > 0 (got {a}, {b})")));
    }
    Ok(ln_beta(a, b))
}

/// `ln C(n, r)` without argument checks.
pub(crate) fn ln_binom<F: Real>(n: u64, r: u64) -> F {
    let r = r.min(n - r);
    match r {
        0 => F::zero(),
        1 => F::count(n).ln(),
        _ => -F::count(n + 1).ln() - ln_beta(F::count(r + 1), F::count(n - r + 1)),
    }
}

/// `ln C(n, r)`.
pub fn log_binom_coeff<F: Real>(n: u64, r: u64) -> Result<F> {
    if r > n {
        return Err(invalid(format!("binomial coefficient needs r <= n (got n={n}, r={r})")));
    }
    Ok(ln_binom(n, r))
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus<F: Real>(x: F) -> F {
    if x > F::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn logistic<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

#[inline]
pub fn logit<F: Real>(p: F) -> F {
    (p / (F::one() - p)).ln()
}

/// `ln Σ exp(x_k)`; `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp<F: Real>(xs: &[F]) -> F {
    let max = xs.iter().copied().fold(F::neg_infinity(), F::max);
    if max == F::neg_infinity() {
        return max;
    }
    let sum: F = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}
