//! The four competing models for the area rates and their observed-data
//! log-likelihoods. Every log-likelihood carries the full `Σ ln C(n_i, r_i)`
//! constant so deviances are comparable across non-nested models.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{invalid, Error, Result};
use crate::numerics::special::{ln_beta, ln_binom, log_sum_exp, softplus};
use crate::numerics::QuadratureRule;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelTag {
    /// Normal random effects on the logit scale.
    Normal,
    /// Conjugate beta random effects.
    Beta,
    /// One common rate.
    Null,
    /// One unrelated rate per area.
    Saturated,
}

impl ModelTag {
    pub const ALL: [ModelTag; 4] = [ModelTag::Normal, ModelTag::Beta, ModelTag::Null, ModelTag::Saturated];

    pub fn name(self) -> &'static str {
        match self {
            ModelTag::Normal => "normal",
            ModelTag::Beta => "beta",
            ModelTag::Null => "null",
            ModelTag::Saturated => "saturated",
        }
    }

    /// Stable small integer used to key random streams.
    pub fn index(self) -> u64 {
        match self {
            ModelTag::Normal => 0,
            ModelTag::Beta => 1,
            ModelTag::Null => 2,
            ModelTag::Saturated => 3,
        }
    }

    /// Whether the model describes an among-area distribution.
    pub fn is_parametric(self) -> bool {
        matches!(self, ModelTag::Normal | ModelTag::Beta)
    }
}

impl fmt::Display for ModelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "normal-logit" => Ok(ModelTag::Normal),
            "beta" | "beta-binomial" => Ok(ModelTag::Beta),
            "null" => Ok(ModelTag::Null),
            "saturated" => Ok(ModelTag::Saturated),
            other => Err(Error::InvalidConfig(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalLogitParams<F> {
    pub mu: F,
    pub sigma: F,
}

impl<F: Real> NormalLogitParams<F> {
    pub fn new(mu: F, sigma: F) -> Result<Self> {
        if !mu.is_finite() || !(sigma >= F::zero()) || !sigma.is_finite() {
            return Err(invalid(format!(
                "normal-logit needs finite mu and sigma >= 0 (got {mu}, {sigma})"
            )));
        }
        Ok(Self { mu, sigma })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaParamsAb<F> {
    pub a: F,
    pub b: F,
}

impl<F: Real> BetaParamsAb<F> {
    pub fn new(a: F, b: F) -> Result<Self> {
        if !(a > F::zero() && b > F::zero()) || !a.is_finite() || !b.is_finite() {
            return Err(invalid(format!("beta needs a, b > 0 (got {a}, {b})")));
        }
        Ok(Self { a, b })
    }

    pub fn to_mean_sd(self) -> BetaParamsMeanSd<F> {
        beta_ab_to_meansd(self)
    }
}

/// Beta distribution parametrized by its mean and standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaParamsMeanSd<F> {
    pub mean: F,
    pub sd: F,
}

impl<F: Real> BetaParamsMeanSd<F> {
    /// Requires `0 < mean < 1` and `0 < sd² < mean (1 - mean)`.
    pub fn new(mean: F, sd: F) -> Result<Self> {
        if !(mean > F::zero() && mean < F::one()) {
            return Err(invalid(format!("beta mean must lie in (0, 1) (got {mean})")));
        }
        if !(sd > F::zero()) || sd * sd >= mean * (F::one() - mean) {
            return Err(invalid(format!(
                "beta sd must satisfy 0 < sd^2 < mean(1-mean) (got {sd})"
            )));
        }
        Ok(Self { mean, sd })
    }

    pub fn to_ab(self) -> BetaParamsAb<F> {
        beta_meansd_to_ab(self)
    }
}

pub fn beta_ab_to_meansd<F: Real>(p: BetaParamsAb<F>) -> BetaParamsMeanSd<F> {
    let s = p.a + p.b;
    BetaParamsMeanSd {
        mean: p.a / s,
        sd: (p.a * p.b / (s * s * (s + F::one()))).sqrt(),
    }
}

/// Inverse map: `a + b = μ(1-μ)/σ² - 1`, `a = μ(a + b)`.
pub fn beta_meansd_to_ab<F: Real>(p: BetaParamsMeanSd<F>) -> BetaParamsAb<F> {
    let s = p.mean * (F::one() - p.mean) / (p.sd * p.sd) - F::one();
    BetaParamsAb {
        a: p.mean * s,
        b: (F::one() - p.mean) * s,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NullParam<F> {
    pub p: F,
}

impl<F: Real> NullParam<F> {
    pub fn new(p: F) -> Result<Self> {
        if !(p > F::zero() && p < F::one()) {
            return Err(invalid(format!("null rate must lie in (0, 1) (got {p})")));
        }
        Ok(Self { p })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SaturatedParams<F> {
    rates: Vec<F>,
}

impl<F: Real> SaturatedParams<F> {
    pub fn new(rates: Vec<F>) -> Result<Self> {
        if let Some(p) = rates.iter().find(|&&p| !(p > F::zero() && p < F::one())) {
            return Err(invalid(format!("saturated rate must lie in (0, 1) (got {p})")));
        }
        Ok(Self { rates })
    }

    pub fn rates(&self) -> &[F] {
        &self.rates
    }
}

/// `Σ_i ln C(n_i, r_i)`, the constant shared by all four likelihoods.
pub fn log_binomial_constant<F: Real>(data: &Dataset) -> F {
    data.records().iter().map(|c| ln_binom::<F>(c.n, c.r)).sum()
}

/// Area contribution `r ln p + (n - r) ln(1 - p)` with `0 · ln 0 = 0`.
#[inline]
fn bernoulli_kernel<F: Real>(n: u64, r: u64, p: F) -> F {
    let mut v = F::zero();
    if r > 0 {
        v = v + F::count(r) * p.ln();
    }
    if n > r {
        v = v + F::count(n - r) * (-p).ln_1p();
    }
    v
}

/// Normal-logit observed-data log-likelihood, integrating each area's logit
/// over `N(μ, σ²)` with the given Gauss-Hermite rule.
pub fn loglik_normal_logit<F: Real>(data: &Dataset, params: NormalLogitParams<F>, rule: &QuadratureRule<F>) -> F {
    let NormalLogitParams { mu, sigma } = params;
    if sigma == F::zero() {
        // point-mass mixing distribution
        return data
            .records()
            .iter()
            .map(|c| ln_binom::<F>(c.n, c.r) + F::count(c.r) * mu - F::count(c.n) * softplus(mu))
            .sum();
    }
    let log_w: Vec<F> = rule.weights().iter().map(|w| w.ln()).collect();
    let thetas: Vec<F> = rule.nodes().iter().map(|&z| mu + sigma * z).collect();
    let soft: Vec<F> = thetas.iter().map(|&t| softplus(t)).collect();
    let mut terms = vec![F::zero(); thetas.len()];
    data.records()
        .iter()
        .map(|c| {
            let (n, r) = (F::count(c.n), F::count(c.r));
            for k in 0..thetas.len() {
                terms[k] = thetas[k] * r - n * soft[k] + log_w[k];
            }
            ln_binom::<F>(c.n, c.r) + log_sum_exp(&terms)
        })
        .sum()
}

/// Beta-binomial log-likelihood `Σ ln[C(n,r) B(r + a, n - r + b) / B(a, b)]`.
pub fn loglik_beta_binomial<F: Real>(data: &Dataset, params: BetaParamsAb<F>) -> F {
    let BetaParamsAb { a, b } = params;
    let norm = ln_beta(a, b);
    data.records()
        .iter()
        .map(|c| ln_binom::<F>(c.n, c.r) + ln_beta(F::count(c.r) + a, F::count(c.n - c.r) + b) - norm)
        .sum()
}

/// Beta-binomial log-likelihood in the (mean, sd) parametrization; `-inf`
/// outside the valid region.
pub fn loglik_beta_meansd<F: Real>(data: &Dataset, mean: F, sd: F) -> F {
    match BetaParamsMeanSd::new(mean, sd) {
        Ok(p) => {
            let ab = p.to_ab();
            if ab.a > F::zero() && ab.b > F::zero() && ab.a.is_finite() && ab.b.is_finite() {
                loglik_beta_binomial(data, ab)
            } else {
                F::neg_infinity()
            }
        }
        Err(_) => F::neg_infinity(),
    }
}

/// Common-rate log-likelihood `Σ ln C(n_i, r_i) + R ln p + (N - R) ln(1 - p)`.
pub fn loglik_null<F: Real>(data: &Dataset, param: NullParam<F>) -> F {
    log_binomial_constant::<F>(data) + bernoulli_kernel(data.total_population(), data.total_events(), param.p)
}

/// Independent-rates log-likelihood. Rates may sit on the boundary of [0, 1]
/// where the matching count makes the term vanish (`0 · ln 0 = 0`).
pub fn loglik_saturated<F: Real>(data: &Dataset, rates: &[F]) -> Result<F> {
    if rates.len() != data.len() {
        return Err(Error::LengthMismatch {
            expected: data.len(),
            got: rates.len(),
        });
    }
    Ok(data
        .records()
        .iter()
        .zip(rates)
        .map(|(c, &p)| ln_binom::<F>(c.n, c.r) + bernoulli_kernel(c.n, c.r, p))
        .sum())
}
