//! Model averaging with per-draw posterior model probabilities.
//!
//! At draw `t` each model's likelihood `L_j^[t] = exp(-D_j^[t] / 2)` and prior
//! probability give a posterior model probability; one model is then chosen
//! with those probabilities and its draw is taken as the averaged draw.

use rand::Rng;
use serde::Serialize;

use crate::areas::AreaDrawMatrix;
use crate::error::{invalid, Error, Result};
use crate::models::ModelTag;
use crate::numerics::{stream, Purpose};
use crate::Real;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AveragingConfig<F> {
    models: Vec<ModelTag>,
    priors: Vec<F>,
}

impl<F: Real> AveragingConfig<F> {
    /// Prior probabilities must be non-negative and sum to 1 (within 1e-9).
    pub fn new(models: Vec<ModelTag>, priors: Vec<F>) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::InvalidConfig("at least one model must be included".into()));
        }
        if models.len() != priors.len() {
            return Err(Error::InvalidConfig(format!(
                "{} models but {} prior probabilities",
                models.len(),
                priors.len()
            )));
        }
        for (k, m) in models.iter().enumerate() {
            if models[..k].contains(m) {
                return Err(Error::InvalidConfig(format!("model {m} listed twice")));
            }
        }
        if priors.iter().any(|p| !(*p >= F::zero()) || !p.is_finite()) {
            return Err(Error::InvalidConfig("prior probabilities must be non-negative".into()));
        }
        let total: F = priors.iter().copied().sum();
        if (total - F::one()).abs() > F::lit(1e-9) {
            return Err(Error::InvalidConfig(format!(
                "prior probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { models, priors })
    }

    /// Equal prior probabilities over `models`.
    pub fn equal(models: Vec<ModelTag>) -> Result<Self> {
        let j = F::count(models.len().max(1) as u64);
        let priors = vec![F::one() / j; models.len()];
        Self::new(models, priors)
    }

    pub fn models(&self) -> &[ModelTag] {
        &self.models
    }

    pub fn priors(&self) -> &[F] {
        &self.priors
    }
}

/// Posterior draws of one model: per-draw deviances and the area draws that
/// came from the same parameter draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDraws<F> {
    pub model: ModelTag,
    pub deviances: Vec<F>,
    pub areas: AreaDrawMatrix<F>,
}

/// Draws of several models, index-aligned on `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDraws<F> {
    models: Vec<ModelDraws<F>>,
    draws: usize,
    areas: usize,
}

impl<F: Real> AlignedDraws<F> {
    pub fn new(models: Vec<ModelDraws<F>>) -> Result<Self> {
        let first = models
            .first()
            .ok_or_else(|| invalid("aligned draws need at least one model"))?;
        let (draws, areas) = (first.deviances.len(), first.areas.areas());
        for m in &models {
            if m.deviances.len() != draws || m.areas.draws() != draws {
                return Err(Error::LengthMismatch {
                    expected: draws,
                    got: m.deviances.len().min(m.areas.draws()),
                });
            }
            if m.areas.areas() != areas {
                return Err(Error::LengthMismatch {
                    expected: areas,
                    got: m.areas.areas(),
                });
            }
            if m.deviances.iter().any(|d| !d.is_finite()) {
                return Err(invalid(format!("model {} has non-finite deviances", m.model)));
            }
        }
        Ok(Self { models, draws, areas })
    }

    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn areas(&self) -> usize {
        self.areas
    }

    pub fn get(&self, model: ModelTag) -> Result<&ModelDraws<F>> {
        self.models
            .iter()
            .find(|m| m.model == model)
            .ok_or(Error::MissingModel(model))
    }

    pub fn models(&self) -> impl Iterator<Item = ModelTag> + '_ {
        self.models.iter().map(|m| m.model)
    }
}

/// `T × J` matrix of per-draw posterior model probabilities, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelProbabilities<F> {
    models: Vec<ModelTag>,
    probs: Vec<F>,
}

impl<F: Real> ModelProbabilities<F> {
    pub fn models(&self) -> &[ModelTag] {
        &self.models
    }

    pub fn draws(&self) -> usize {
        self.probs.len() / self.models.len()
    }

    pub fn row(&self, t: usize) -> &[F] {
        let j = self.models.len();
        &self.probs[t * j..(t + 1) * j]
    }

    /// Probability of `model` at draw `t`; zero for a model not in the config.
    pub fn prob(&self, t: usize, model: ModelTag) -> F {
        self.models
            .iter()
            .position(|&m| m == model)
            .map_or(F::zero(), |k| self.row(t)[k])
    }

    /// Average over draws of each model's probability.
    pub fn mean_probs(&self) -> Vec<(ModelTag, F)> {
        let t = F::count(self.draws() as u64);
        self.models
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                let s: F = (0..self.draws()).map(|r| self.row(r)[k]).sum();
                (m, s / t)
            })
            .collect()
    }
}

/// `π^[t](M_j | y) = π_j L_j^[t] / Σ_k π_k L_k^[t]`, evaluated from deviances
/// in log space.
pub fn posterior_model_probs<F: Real>(
    aligned: &AlignedDraws<F>,
    config: &AveragingConfig<F>,
) -> Result<ModelProbabilities<F>> {
    let sources: Vec<&ModelDraws<F>> = config.models.iter().map(|&m| aligned.get(m)).collect::<Result<_>>()?;
    let log_priors: Vec<F> = config.priors.iter().map(|p| p.ln()).collect();
    let j = sources.len();
    let half = F::lit(0.5);
    let mut probs = Vec::with_capacity(aligned.draws * j);
    let mut row = vec![F::zero(); j];
    for t in 0..aligned.draws {
        for k in 0..j {
            row[k] = log_priors[k] - half * sources[k].deviances[t];
        }
        let max = row.iter().copied().fold(F::neg_infinity(), F::max);
        if !max.is_finite() {
            return Err(invalid(format!("all model likelihoods vanish at draw {t}")));
        }
        let mut total = F::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total = total + *v;
        }
        probs.extend(row.iter().map(|&v| v / total));
    }
    Ok(ModelProbabilities {
        models: config.models.clone(),
        probs,
    })
}

/// Whether the averaged model is picked once per draw (shared by all areas)
/// or separately for every area within a draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    #[default]
    PerDraw,
    PerArea,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragedDraws<F> {
    pub matrix: AreaDrawMatrix<F>,
    models: Vec<ModelTag>,
    mode: SelectionMode,
    /// Position in `models` of the chosen source: per `t`, or per `(i, t)` area-major.
    selection: Vec<usize>,
}

impl<F: Real> AveragedDraws<F> {
    /// Model whose draw was copied into `(t, i)`.
    pub fn source(&self, t: usize, i: usize) -> ModelTag {
        let k = match self.mode {
            SelectionMode::PerDraw => self.selection[t],
            SelectionMode::PerArea => self.selection[i * self.matrix.draws() + t],
        };
        self.models[k]
    }

    /// Fraction of selections that went to each model.
    pub fn selection_frequencies(&self) -> Vec<(ModelTag, F)> {
        let total = F::count(self.selection.len() as u64);
        self.models
            .iter()
            .enumerate()
            .map(|(k, &m)| {
                (
                    m,
                    F::count(self.selection.iter().filter(|&&s| s == k).count() as u64) / total,
                )
            })
            .collect()
    }
}

fn pick<F: Real, R: Rng + ?Sized>(rng: &mut R, row: &[F]) -> usize {
    let u = F::sample_open01(rng);
    let mut acc = F::zero();
    let mut last = 0;
    for (k, &p) in row.iter().enumerate() {
        if p > F::zero() {
            last = k;
            acc = acc + p;
            if u < acc {
                return k;
            }
        }
    }
    last
}

/// Averaged area draws: at each draw a model is chosen with its posterior
/// probability and its area draw is copied.
pub fn averaged_area_draws<F: Real>(
    aligned: &AlignedDraws<F>,
    config: &AveragingConfig<F>,
    mode: SelectionMode,
    seed: u64,
) -> Result<AveragedDraws<F>> {
    let probs = posterior_model_probs(aligned, config)?;
    let sources: Vec<&AreaDrawMatrix<F>> = config
        .models
        .iter()
        .map(|&m| aligned.get(m).map(|d| &d.areas))
        .collect::<Result<_>>()?;
    let (draws, areas) = (aligned.draws, aligned.areas);
    let selection: Vec<usize> = match mode {
        SelectionMode::PerDraw => {
            let mut rng = stream(seed, Purpose::ModelSelection, 0);
            (0..draws).map(|t| pick(&mut rng, probs.row(t))).collect()
        }
        SelectionMode::PerArea => (0..areas)
            .flat_map(|i| {
                let mut rng = stream(seed, Purpose::ModelSelection, 1 + i as u64);
                (0..draws).map(|t| pick(&mut rng, probs.row(t))).collect::<Vec<_>>()
            })
            .collect(),
    };
    let columns: Vec<Vec<F>> = (0..areas)
        .map(|i| {
            (0..draws)
                .map(|t| {
                    let k = match mode {
                        SelectionMode::PerDraw => selection[t],
                        SelectionMode::PerArea => selection[i * draws + t],
                    };
                    sources[k].logit(t, i)
                })
                .collect()
        })
        .collect();
    Ok(AveragedDraws {
        matrix: AreaDrawMatrix::from_columns(None, columns)?,
        models: config.models.clone(),
        mode,
        selection,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypicalAverage<F> {
    pub logits: Vec<F>,
    /// Whether draw `t` came from the normal model.
    pub from_normal: Vec<bool>,
}

/// Averages typical-area draws of the two among-area models: the normal draw
/// is taken with probability `π^[t](normal | y)`, otherwise the beta draw.
pub fn averaged_typical_city<F: Real>(
    normal_draws: &[F],
    beta_draws: &[F],
    aligned: &AlignedDraws<F>,
    config: &AveragingConfig<F>,
    seed: u64,
) -> Result<TypicalAverage<F>> {
    if let Some(&m) = config.models.iter().find(|m| !m.is_parametric()) {
        return Err(Error::NonMarginalModel(m));
    }
    for len in [normal_draws.len(), beta_draws.len()] {
        if len != aligned.draws {
            return Err(Error::LengthMismatch {
                expected: aligned.draws,
                got: len,
            });
        }
    }
    let probs = posterior_model_probs(aligned, config)?;
    let mut rng = stream(seed, Purpose::TypicalSelection, 0);
    let mut logits = Vec::with_capacity(aligned.draws);
    let mut from_normal = Vec::with_capacity(aligned.draws);
    for t in 0..aligned.draws {
        let p_normal = probs.prob(t, ModelTag::Normal);
        let take_normal = F::sample_open01(&mut rng) < p_normal;
        from_normal.push(take_normal);
        logits.push(if take_normal { normal_draws[t] } else { beta_draws[t] });
    }
    Ok(TypicalAverage { logits, from_normal })
}
