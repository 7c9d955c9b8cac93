//! Per-area posterior draws of the rates under each model, kept on the logit
//! scale.

use rayon::prelude::*;

use crate::dataset::{CityRecord, Dataset};
use crate::error::{invalid, Result};
use crate::models::{BetaParamsAb, ModelTag, NormalLogitParams};
use crate::numerics::special::{log_sum_exp, logistic, softplus};
use crate::numerics::{draw_beta_logit, stream, Purpose};
use crate::Real;

/// `T × m` matrix of logit-rate draws, stored area-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AreaDrawMatrix<F> {
    model: Option<ModelTag>,
    draws: usize,
    areas: usize,
    logits: Vec<F>,
    adjusted: Vec<u32>,
}

impl<F: Real> AreaDrawMatrix<F> {
    /// Builds a matrix from one column of `draws` logits per area. `model` is
    /// `None` for draws mixed across models.
    pub fn from_columns(model: Option<ModelTag>, columns: Vec<Vec<F>>) -> Result<Self> {
        let areas = columns.len();
        let draws = columns.first().map_or(0, Vec::len);
        if areas == 0 || draws == 0 {
            return Err(invalid("area draw matrix must be non-empty"));
        }
        if columns.iter().any(|c| c.len() != draws) {
            return Err(invalid("area draw columns differ in length"));
        }
        let logits: Vec<F> = columns.into_iter().flatten().collect();
        if logits.iter().any(|x| !x.is_finite()) {
            return Err(invalid("area draws must be finite logits"));
        }
        Ok(Self {
            model,
            draws,
            areas,
            logits,
            adjusted: Vec::new(),
        })
    }

    pub fn model(&self) -> Option<ModelTag> {
        self.model
    }

    /// Number of draws `T`.
    pub fn draws(&self) -> usize {
        self.draws
    }

    /// Number of areas `m`.
    pub fn areas(&self) -> usize {
        self.areas
    }

    pub fn logit(&self, t: usize, i: usize) -> F {
        self.logits[i * self.draws + t]
    }

    pub fn rate(&self, t: usize, i: usize) -> F {
        logistic(self.logit(t, i))
    }

    /// All `T` logit draws for area `i`.
    pub fn column(&self, i: usize) -> &[F] {
        &self.logits[i * self.draws..(i + 1) * self.draws]
    }

    pub fn rates(&self, i: usize) -> Vec<F> {
        self.column(i).iter().map(|&x| logistic(x)).collect()
    }

    pub fn row(&self, t: usize) -> Vec<F> {
        (0..self.areas).map(|i| self.logit(t, i)).collect()
    }

    /// Ids of areas with `r = n` whose local logit used the `n - 0.5` correction.
    pub fn adjusted_areas(&self) -> &[u32] {
        &self.adjusted
    }
}

/// Local logit `θ̂_i` and sample precision `ψ_i = n p̂ (1 - p̂)`, with
/// `r = 0` replaced by 0.5 and `r = n` by `n - 0.5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalLogit<F> {
    pub theta_hat: F,
    pub precision: F,
    pub adjusted_full: bool,
}

pub fn local_logit<F: Real>(rec: &CityRecord) -> LocalLogit<F> {
    let half = F::lit(0.5);
    let n = F::count(rec.n);
    let (r, adjusted_full) = if rec.r == 0 {
        (half, false)
    } else if rec.r == rec.n {
        (n - half, true)
    } else {
        (F::count(rec.r), false)
    };
    let p = r / n;
    LocalLogit {
        theta_hat: (r / (n - r)).ln(),
        precision: n * p * (F::one() - p),
        adjusted_full,
    }
}

/// Second-order normal approximation to `θ_i | r_i, μ, σ`: returns `(mean, variance)`.
pub fn conditional_normal_approx<F: Real>(rec: &CityRecord, params: NormalLogitParams<F>) -> (F, F) {
    let local = local_logit::<F>(rec);
    if params.sigma == F::zero() {
        return (params.mu, F::zero());
    }
    let prior_prec = (params.sigma * params.sigma).recip();
    let total = local.precision + prior_prec;
    (
        (local.precision * local.theta_hat + prior_prec * params.mu) / total,
        total.recip(),
    )
}

/// Mean and variance of `θ_i | r_i, μ, σ` by direct numerical integration of
/// the exact conditional density. Used to validate the approximation.
pub fn conditional_normal_exact<F: Real>(rec: &CityRecord, params: NormalLogitParams<F>) -> (F, F) {
    let NormalLogitParams { mu, sigma } = params;
    if sigma == F::zero() {
        return (mu, F::zero());
    }
    let (n, r) = (F::count(rec.n), F::count(rec.r));
    let prior_prec = (sigma * sigma).recip();
    let half = F::lit(0.5);
    let log_dens = |t: F| r * t - n * softplus(t) - half * prior_prec * (t - mu) * (t - mu);
    // Newton for the mode; the log density is strictly concave.
    let mut mode = conditional_normal_approx(rec, params).0;
    for _ in 0..100 {
        let p = logistic(mode);
        let grad = r - n * p - prior_prec * (mode - mu);
        let curv = n * p * (F::one() - p) + prior_prec;
        let step = grad / curv;
        mode = mode + step;
        if step.abs() < F::lit(1e-13) {
            break;
        }
    }
    let p = logistic(mode);
    let sd = (n * p * (F::one() - p) + prior_prec).recip().sqrt();
    let points = 4001usize;
    let lo = mode - F::lit(15.0) * sd;
    let h = F::lit(30.0) * sd / F::count(points as u64 - 1);
    let xs: Vec<F> = (0..points).map(|k| lo + h * F::count(k as u64)).collect();
    let ld: Vec<F> = xs.iter().map(|&t| log_dens(t)).collect();
    let norm = log_sum_exp(&ld);
    let w: Vec<F> = ld.iter().map(|&l| (l - norm).exp()).collect();
    let mean: F = xs.iter().zip(&w).map(|(&x, &w)| x * w).sum();
    let var: F = xs.iter().zip(&w).map(|(&x, &w)| (x - mean) * (x - mean) * w).sum();
    (mean, var)
}

fn require_nonempty<T>(draws: &[T]) -> Result<()> {
    if draws.is_empty() {
        Err(invalid("parameter draws must be non-empty"))
    } else {
        Ok(())
    }
}

/// Area logits under the normal-logit model: for each hyperparameter draw
/// `(μ, σ)`, one draw from the normal approximation to `θ_i | r_i, μ, σ`.
pub fn area_draws_normal<F: Real>(
    data: &Dataset,
    params: &[NormalLogitParams<F>],
    seed: u64,
) -> Result<AreaDrawMatrix<F>> {
    require_nonempty(params)?;
    let columns: Vec<Vec<F>> = data
        .records()
        .par_iter()
        .enumerate()
        .map(|(i, rec)| {
            let local = local_logit::<F>(rec);
            let mut rng = stream(seed, Purpose::NormalAreas, i as u64);
            params
                .iter()
                .map(|p| {
                    let z = F::sample_standard_normal(&mut rng);
                    if p.sigma == F::zero() {
                        return p.mu;
                    }
                    let prior_prec = (p.sigma * p.sigma).recip();
                    let total = local.precision + prior_prec;
                    (local.precision * local.theta_hat + prior_prec * p.mu) / total + z / total.sqrt()
                })
                .collect()
        })
        .collect();
    let mut m = AreaDrawMatrix::from_columns(Some(ModelTag::Normal), columns)?;
    m.adjusted = data.records().iter().filter(|c| c.r == c.n).map(|c| c.id).collect();
    Ok(m)
}

/// Area logits under the beta model: `p_i ~ Beta(r_i + a, n_i - r_i + b)` per draw.
pub fn area_draws_beta<F: Real>(data: &Dataset, params: &[BetaParamsAb<F>], seed: u64) -> Result<AreaDrawMatrix<F>> {
    require_nonempty(params)?;
    let columns: Result<Vec<Vec<F>>> = data
        .records()
        .par_iter()
        .enumerate()
        .map(|(i, rec)| {
            let mut rng = stream(seed, Purpose::BetaAreas, i as u64);
            let (r, s) = (F::count(rec.r), F::count(rec.n - rec.r));
            params
                .iter()
                .map(|p| draw_beta_logit(&mut rng, r + p.a, s + p.b))
                .collect()
        })
        .collect();
    AreaDrawMatrix::from_columns(Some(ModelTag::Beta), columns?)
}

/// Flat-prior local posteriors `Beta(r_i + 1, n_i - r_i + 1)`; these are also
/// the saturated model's area draws.
pub fn area_draws_local<F: Real>(data: &Dataset, count: usize, seed: u64) -> Result<AreaDrawMatrix<F>> {
    if count == 0 {
        return Err(invalid("draw count must be at least 1"));
    }
    let columns: Vec<Vec<F>> = data
        .records()
        .par_iter()
        .enumerate()
        .map(|(i, rec)| {
            let mut rng = stream(seed, Purpose::LocalAreas, i as u64);
            let (a, b) = (F::count(rec.r + 1), F::count(rec.n - rec.r + 1));
            (0..count)
                .map(|_| draw_beta_logit(&mut rng, a, b).expect("shapes are positive"))
                .collect()
        })
        .collect();
    AreaDrawMatrix::from_columns(Some(ModelTag::Saturated), columns)
}

/// Hyperparameter draws of one of the among-area models.
#[derive(Debug, Clone, Copy)]
pub enum HyperDraws<'a, F> {
    Normal(&'a [NormalLogitParams<F>]),
    Beta(&'a [BetaParamsAb<F>]),
}

/// Logit rate of a randomly drawn area from the fitted among-area
/// distribution, one per hyperparameter draw.
pub fn typical_city_draws<F: Real>(hyper: HyperDraws<'_, F>, seed: u64) -> Result<Vec<F>> {
    match hyper {
        HyperDraws::Normal(params) => {
            require_nonempty(params)?;
            let mut rng = stream(seed, Purpose::TypicalCity, ModelTag::Normal.index());
            Ok(params
                .iter()
                .map(|p| p.mu + p.sigma * F::sample_standard_normal(&mut rng))
                .collect())
        }
        HyperDraws::Beta(params) => {
            require_nonempty(params)?;
            let mut rng = stream(seed, Purpose::TypicalCity, ModelTag::Beta.index());
            params.iter().map(|p| draw_beta_logit(&mut rng, p.a, p.b)).collect()
        }
    }
}
