//! Posterior deviance distributions, deviance differences between models, and
//! the large-sample χ² approximation to a deviance difference.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::areas::{area_draws_local, AreaDrawMatrix};
use crate::dataset::Dataset;
use crate::error::{invalid, Result};
use crate::models::log_binomial_constant;
use crate::numerics::special::softplus;
use crate::numerics::{draw_beta_logit, stream, Categorical, Purpose};
use crate::Real;

/// `-2 ln 9`: a deviance difference below this is a likelihood ratio above 9.
pub fn strong_evidence_threshold<F: Real>() -> F {
    F::lit(-2.0 * 9f64.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DevianceSource {
    ExactGrid,
    MonteCarlo,
}

/// Discrete distribution of deviance values: distinct sorted values with
/// cumulative probabilities ending at exactly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct DevianceDistribution<F> {
    values: Vec<F>,
    cum_probs: Vec<F>,
    source: DevianceSource,
    support: usize,
    /// Monte Carlo draws in ascending order, kept for resampling without replacement.
    draws: Option<Vec<F>>,
}

impl<F: Real> DevianceDistribution<F> {
    /// From `(value, weight)` pairs; equal values are merged.
    pub fn from_weighted(mut pairs: Vec<(F, F)>, source: DevianceSource) -> Result<Self> {
        if pairs
            .iter()
            .any(|(v, w)| !v.is_finite() || !(*w >= F::zero()) || !w.is_finite())
        {
            return Err(invalid("deviance values must be finite with non-negative weights"));
        }
        pairs.retain(|(_, w)| *w > F::zero());
        if pairs.is_empty() {
            return Err(invalid("deviance distribution needs positive total weight"));
        }
        let support = pairs.len();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
        let total: F = pairs.iter().map(|p| p.1).sum();
        let mut values = Vec::with_capacity(pairs.len());
        let mut cum_probs = Vec::with_capacity(pairs.len());
        let mut acc = F::zero();
        for (v, w) in pairs {
            acc = acc + w;
            if values.last() == Some(&v) {
                *cum_probs.last_mut().unwrap() = acc / total;
            } else {
                values.push(v);
                cum_probs.push(acc / total);
            }
        }
        *cum_probs.last_mut().unwrap() = F::one();
        Ok(Self {
            values,
            cum_probs,
            source,
            support,
            draws: None,
        })
    }

    /// Empirical distribution of equally weighted Monte Carlo draws.
    pub fn from_draws(draws: Vec<F>) -> Result<Self> {
        let mut dist = Self::from_weighted(
            draws.iter().map(|&d| (d, F::one())).collect(),
            DevianceSource::MonteCarlo,
        )?;
        let mut sorted = draws;
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        dist.draws = Some(sorted);
        Ok(dist)
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn cum_probs(&self) -> &[F] {
        &self.cum_probs
    }

    pub fn source(&self) -> DevianceSource {
        self.source
    }

    /// Number of grid points (exact) or draws (Monte Carlo) behind the distribution.
    pub fn support_size(&self) -> usize {
        self.support
    }

    pub fn min(&self) -> F {
        self.values[0]
    }

    pub fn max(&self) -> F {
        *self.values.last().unwrap()
    }

    /// `P(D ≤ x)`.
    pub fn cdf(&self, x: F) -> F {
        let k = self.values.partition_point(|&v| v <= x);
        if k == 0 {
            F::zero()
        } else {
            self.cum_probs[k - 1]
        }
    }

    /// Smallest value whose cumulative probability reaches `q`.
    pub fn quantile(&self, q: F) -> F {
        let k = self.cum_probs.partition_point(|&c| c < q);
        self.values[k.min(self.values.len() - 1)]
    }

    pub fn median(&self) -> F {
        self.quantile(F::lit(0.5))
    }

    pub fn interquartile_range(&self) -> F {
        self.quantile(F::lit(0.75)) - self.quantile(F::lit(0.25))
    }

    pub fn mean(&self) -> F {
        let mut prev = F::zero();
        self.values
            .iter()
            .zip(&self.cum_probs)
            .map(|(&v, &c)| {
                let w = c - prev;
                prev = c;
                v * w
            })
            .sum()
    }

    /// `count` independent draws. A Monte Carlo distribution holding exactly
    /// `count` draws is returned as a random permutation of those draws;
    /// otherwise values are drawn with replacement by their probabilities.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<F> {
        if let Some(draws) = &self.draws {
            if draws.len() == count {
                let mut out = draws.clone();
                out.shuffle(rng);
                return out;
            }
        }
        let mut prev = F::zero();
        let weights: Vec<F> = self
            .cum_probs
            .iter()
            .map(|&c| {
                let w = c - prev;
                prev = c;
                w
            })
            .collect();
        let cat = Categorical::new(&weights).expect("valid distribution");
        (0..count).map(|_| self.values[cat.sample(rng)]).collect()
    }
}

/// Deviance draws of the common-rate model under a uniform prior on `p`,
/// i.e. `p ~ Beta(R + 1, N - R + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullDraws<F> {
    /// Logit of each rate draw.
    pub logits: Vec<F>,
    pub deviances: Vec<F>,
}

pub fn deviance_draws_null<F: Real>(data: &Dataset, count: usize, seed: u64) -> Result<NullDraws<F>> {
    if count == 0 {
        return Err(invalid("draw count must be at least 1"));
    }
    let (big_r, big_n) = (data.total_events(), data.total_population());
    let constant: F = log_binomial_constant(data);
    let (events, rest) = (F::count(big_r), F::count(big_n - big_r));
    let mut rng = stream(seed, Purpose::NullDeviance, 0);
    let mut logits = Vec::with_capacity(count);
    let mut deviances = Vec::with_capacity(count);
    for _ in 0..count {
        let theta = draw_beta_logit(&mut rng, events + F::one(), rest + F::one())?;
        // ln p = -softplus(-θ), ln(1-p) = -softplus(θ)
        let ll = constant - events * softplus(-theta) - rest * softplus(theta);
        logits.push(theta);
        deviances.push(F::lit(-2.0) * ll);
    }
    Ok(NullDraws { logits, deviances })
}

pub fn deviance_dist_null<F: Real>(data: &Dataset, count: usize, seed: u64) -> Result<DevianceDistribution<F>> {
    DevianceDistribution::from_draws(deviance_draws_null(data, count, seed)?.deviances)
}

/// Per-draw saturated deviances computed from a matrix of area logits.
pub fn saturated_deviances<F: Real>(data: &Dataset, areas: &AreaDrawMatrix<F>) -> Result<Vec<F>> {
    if areas.areas() != data.len() {
        return Err(crate::error::Error::LengthMismatch {
            expected: data.len(),
            got: areas.areas(),
        });
    }
    let constant: F = log_binomial_constant(data);
    let mut ll = vec![constant; areas.draws()];
    for (i, rec) in data.records().iter().enumerate() {
        let (r, s) = (F::count(rec.r), F::count(rec.n - rec.r));
        for (t, &theta) in areas.column(i).iter().enumerate() {
            ll[t] = ll[t] - r * softplus(-theta) - s * softplus(theta);
        }
    }
    Ok(ll.into_iter().map(|l| F::lit(-2.0) * l).collect())
}

/// Saturated-model draws: local flat-prior area draws and the deviance of each
/// draw row, index-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct SaturatedDraws<F> {
    pub areas: AreaDrawMatrix<F>,
    pub deviances: Vec<F>,
}

pub fn deviance_draws_saturated<F: Real>(data: &Dataset, count: usize, seed: u64) -> Result<SaturatedDraws<F>> {
    let areas = area_draws_local(data, count, seed)?;
    let deviances = saturated_deviances(data, &areas)?;
    Ok(SaturatedDraws { areas, deviances })
}

pub fn deviance_dist_saturated<F: Real>(data: &Dataset, count: usize, seed: u64) -> Result<DevianceDistribution<F>> {
    DevianceDistribution::from_draws(deviance_draws_saturated(data, count, seed)?.deviances)
}

/// Summary of the posterior distribution of `D_first - D_second`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DevianceDiffSummary<F> {
    pub median: F,
    /// Central 95% interval from the ordered differences.
    pub ci_low: F,
    pub ci_high: F,
    /// `P(D_first < D_second)`.
    pub p_first_smaller: F,
    /// `P(D_first - D_second < -2 ln 9)`.
    pub p_strong: F,
    pub draws: usize,
}

/// Independent draws from each distribution, differenced in draw order.
pub fn difference_draws<F: Real>(
    first: &DevianceDistribution<F>,
    second: &DevianceDistribution<F>,
    count: usize,
    seed: u64,
) -> Vec<F> {
    let a = first.sample(&mut stream(seed, Purpose::CompareFirst, 0), count);
    let b = second.sample(&mut stream(seed, Purpose::CompareSecond, 0), count);
    a.into_iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Summarizes difference draws. With `T = 10⁴` the interval end points are the
/// 250th and 9750th ordered differences.
pub fn summarize_differences<F: Real>(diffs: &[F]) -> Result<DevianceDiffSummary<F>> {
    if diffs.is_empty() {
        return Err(invalid("no deviance differences to summarize"));
    }
    let mut sorted = diffs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite differences"));
    let t = sorted.len();
    let median = if t % 2 == 1 {
        sorted[t / 2]
    } else {
        F::lit(0.5) * (sorted[t / 2 - 1] + sorted[t / 2])
    };
    let order_stat = |q: f64| {
        let k = ((q * t as f64).round() as usize).clamp(1, t);
        sorted[k - 1]
    };
    let frac =
        |pred: &dyn Fn(F) -> bool| F::count(diffs.iter().filter(|&&d| pred(d)).count() as u64) / F::count(t as u64);
    let threshold = strong_evidence_threshold::<F>();
    Ok(DevianceDiffSummary {
        median,
        ci_low: order_stat(0.025).min(median),
        ci_high: order_stat(0.975).max(median),
        p_first_smaller: frac(&|d| d < F::zero()),
        p_strong: frac(&|d| d < threshold),
        draws: t,
    })
}

/// Compares two models through `count` independent deviance draws from each.
pub fn compare<F: Real>(
    first: &DevianceDistribution<F>,
    second: &DevianceDistribution<F>,
    count: usize,
    seed: u64,
) -> Result<DevianceDiffSummary<F>> {
    if count == 0 {
        return Err(invalid("draw count must be at least 1"));
    }
    summarize_differences(&difference_draws(first, second, count, seed))
}

/// Draws of `FD₁₂ + χ²_{s₁} - χ²_{s₂}` with independent χ² variables.
pub fn asymptotic_diff<F: Real>(s1: u32, s2: u32, fd12: F, count: usize, seed: u64) -> Result<DevianceDistribution<F>> {
    if s1 == 0 || s2 == 0 {
        return Err(invalid("degrees of freedom must be at least 1"));
    }
    if count == 0 {
        return Err(invalid("draw count must be at least 1"));
    }
    let mut rng = stream(seed, Purpose::Asymptotic, 0);
    let two = F::lit(2.0);
    let (k1, k2) = (F::lit(s1 as f64 / 2.0), F::lit(s2 as f64 / 2.0));
    let draws = (0..count)
        .map(|_| {
            let c1 = two * F::sample_gamma(&mut rng, k1).expect("positive shape");
            let c2 = two * F::sample_gamma(&mut rng, k2).expect("positive shape");
            fd12 + c1 - c2
        })
        .collect();
    DevianceDistribution::from_draws(draws)
}

/// Large-`s` normal form of the difference: `(s₁ - s₂ + FD₁₂, 2s₁ + 2s₂)` as (mean, variance).
pub fn asymptotic_normal_form<F: Real>(s1: u32, s2: u32, fd12: F) -> (F, F) {
    (
        F::lit(s1 as f64 - s2 as f64) + fd12,
        F::lit(2.0 * s1 as f64 + 2.0 * s2 as f64),
    )
}
