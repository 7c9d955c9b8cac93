//! End-to-end analysis: grid fits of the two among-area models, aligned
//! posterior draws for all four models, deviance comparisons and averaging.

use serde::Serialize;

use crate::areas::{area_draws_beta, area_draws_normal, typical_city_draws, AreaDrawMatrix, HyperDraws};
use crate::averaging::{
    averaged_area_draws, averaged_typical_city, posterior_model_probs, AlignedDraws, AveragedDraws, AveragingConfig,
    ModelDraws, ModelProbabilities, SelectionMode, TypicalAverage,
};
use crate::dataset::Dataset;
use crate::deviance::{
    deviance_draws_null, deviance_draws_saturated, difference_draws, summarize_differences, DevianceDiffSummary,
    DevianceDistribution,
};
use crate::error::{invalid, Error, Result};
use crate::grid::{
    build_grid, deviance_cdf, grid_summaries, refine_mle, sample_params, GridChoice, GridSummary, ParametricModel,
    PosteriorGrid, RefinedMle,
};
use crate::models::{BetaParamsAb, ModelTag, NormalLogitParams};
use crate::numerics::{derive_seed, kde, silverman_bandwidth, Bandwidth, KdeCurve, KdeGrid};
use crate::Real;

pub const DEFAULT_DRAWS: usize = 10_000;
pub const DEFAULT_GRID_SIZE: usize = 100;
pub const DEFAULT_QUADRATURE_NODES: usize = 20;

#[derive(Debug, Clone)]
pub struct PipelineConfig<F> {
    pub draws: usize,
    pub seed: u64,
    pub quadrature_nodes: usize,
    pub normal_grid: GridChoice<F>,
    pub beta_grid: GridChoice<F>,
    pub averaging: AveragingConfig<F>,
    pub selection: SelectionMode,
}

impl<F: Real> PipelineConfig<F> {
    /// Automatic 100 × 100 grids, 20 quadrature nodes and equal prior
    /// probabilities on the normal, beta and saturated models.
    pub fn new(draws: usize, seed: u64) -> Result<Self> {
        let config = Self {
            draws,
            seed,
            quadrature_nodes: DEFAULT_QUADRATURE_NODES,
            normal_grid: GridChoice::Auto {
                size: DEFAULT_GRID_SIZE,
            },
            beta_grid: GridChoice::Auto {
                size: DEFAULT_GRID_SIZE,
            },
            averaging: AveragingConfig::equal(vec![ModelTag::Normal, ModelTag::Beta, ModelTag::Saturated])?,
            selection: SelectionMode::PerDraw,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.draws < 2 {
            return Err(Error::InvalidConfig(format!(
                "draw count must be at least 2 (got {})",
                self.draws
            )));
        }
        Ok(())
    }
}

/// Grid posterior of one among-area model with its summaries.
#[derive(Debug, Clone)]
pub struct ModelFit<F> {
    pub model: ParametricModel<F>,
    pub grid: PosteriorGrid<F>,
    pub summary: GridSummary<F>,
    pub refined: RefinedMle<F>,
    pub deviance: DevianceDistribution<F>,
}

pub fn fit_model<F: Real>(data: &Dataset, model: ParametricModel<F>, choice: GridChoice<F>) -> Result<ModelFit<F>> {
    let grid = build_grid(data, &model, choice)?;
    let summary = grid_summaries(&grid);
    let refined = refine_mle(data, &model, &grid);
    let deviance = deviance_cdf(&grid);
    Ok(ModelFit {
        model,
        grid,
        summary,
        refined,
        deviance,
    })
}

/// Fits the normal-logit and beta grids concurrently.
pub fn fit_both<F: Real>(data: &Dataset, config: &PipelineConfig<F>) -> Result<(ModelFit<F>, ModelFit<F>)> {
    config.validate()?;
    let normal_model = ParametricModel::normal_logit(config.quadrature_nodes)?;
    let (normal, beta) = rayon::join(
        || fit_model(data, normal_model, config.normal_grid),
        || fit_model(data, ParametricModel::BetaMeanSd, config.beta_grid),
    );
    Ok((normal?, beta?))
}

/// Posterior draws of all four models, index-aligned on `t`.
#[derive(Debug, Clone)]
pub struct PosteriorDraws<F> {
    pub normal_params: Vec<NormalLogitParams<F>>,
    pub beta_params: Vec<BetaParamsAb<F>>,
    pub aligned: AlignedDraws<F>,
    pub typical_normal: Vec<F>,
    pub typical_beta: Vec<F>,
}

pub fn posterior_draws<F: Real>(
    data: &Dataset,
    normal: &ModelFit<F>,
    beta: &ModelFit<F>,
    draws: usize,
    seed: u64,
) -> Result<PosteriorDraws<F>> {
    let normal_draws = sample_params(&normal.grid, draws, seed);
    let beta_draws = sample_params(&beta.grid, draws, seed);
    let normal_params = normal_draws.iter().map(|d| d.as_normal()).collect::<Result<Vec<_>>>()?;
    let beta_params = beta_draws.iter().map(|d| d.as_beta()).collect::<Result<Vec<_>>>()?;

    let normal_areas = area_draws_normal(data, &normal_params, seed)?;
    let beta_areas = area_draws_beta(data, &beta_params, seed)?;
    let saturated = deviance_draws_saturated(data, draws, seed)?;
    let null = deviance_draws_null(data, draws, seed)?;
    let null_areas = AreaDrawMatrix::from_columns(Some(ModelTag::Null), vec![null.logits.clone(); data.len()])?;

    let aligned = AlignedDraws::new(vec![
        ModelDraws {
            model: ModelTag::Normal,
            deviances: normal_draws.iter().map(|d| d.deviance()).collect(),
            areas: normal_areas,
        },
        ModelDraws {
            model: ModelTag::Beta,
            deviances: beta_draws.iter().map(|d| d.deviance()).collect(),
            areas: beta_areas,
        },
        ModelDraws {
            model: ModelTag::Null,
            deviances: null.deviances,
            areas: null_areas,
        },
        ModelDraws {
            model: ModelTag::Saturated,
            deviances: saturated.deviances,
            areas: saturated.areas,
        },
    ])?;
    let typical_normal = typical_city_draws(HyperDraws::Normal(&normal_params), seed)?;
    let typical_beta = typical_city_draws(HyperDraws::Beta(&beta_params), seed)?;
    Ok(PosteriorDraws {
        normal_params,
        beta_params,
        aligned,
        typical_normal,
        typical_beta,
    })
}

/// Posterior deviance distributions of all four models: exact grid
/// distributions for the among-area models, Monte Carlo draws otherwise.
pub fn deviance_distributions<F: Real>(
    normal: &ModelFit<F>,
    beta: &ModelFit<F>,
    draws: &PosteriorDraws<F>,
) -> Result<Vec<(ModelTag, DevianceDistribution<F>)>> {
    let mc = |tag| -> Result<DevianceDistribution<F>> {
        DevianceDistribution::from_draws(draws.aligned.get(tag)?.deviances.clone())
    };
    Ok(vec![
        (ModelTag::Normal, normal.deviance.clone()),
        (ModelTag::Beta, beta.deviance.clone()),
        (ModelTag::Null, mc(ModelTag::Null)?),
        (ModelTag::Saturated, mc(ModelTag::Saturated)?),
    ])
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison<F> {
    pub first: ModelTag,
    pub second: ModelTag,
    #[serde(flatten)]
    pub summary: DevianceDiffSummary<F>,
    /// `D_first - D_second` in draw order.
    #[serde(skip)]
    pub differences: Vec<F>,
}

fn lookup<F>(dists: &[(ModelTag, DevianceDistribution<F>)], tag: ModelTag) -> Result<&DevianceDistribution<F>> {
    dists
        .iter()
        .find(|(t, _)| *t == tag)
        .map(|(_, d)| d)
        .ok_or(Error::MissingModel(tag))
}

/// Summary of `D_first - D_second`, seeded per ordered pair.
pub fn compare_pair<F: Real>(
    dists: &[(ModelTag, DevianceDistribution<F>)],
    first: ModelTag,
    second: ModelTag,
    draws: usize,
    seed: u64,
) -> Result<Comparison<F>> {
    if draws == 0 {
        return Err(invalid("draw count must be at least 1"));
    }
    let differences = difference_draws(
        lookup(dists, first)?,
        lookup(dists, second)?,
        draws,
        derive_seed(seed, first.index(), second.index()),
    );
    let summary = summarize_differences(&differences)?;
    Ok(Comparison {
        first,
        second,
        summary,
        differences,
    })
}

/// Every unordered pair of the given distributions, in list order.
pub fn compare_all<F: Real>(
    dists: &[(ModelTag, DevianceDistribution<F>)],
    draws: usize,
    seed: u64,
) -> Result<Vec<Comparison<F>>> {
    let mut out = Vec::new();
    for (j, (a, _)) in dists.iter().enumerate() {
        for (b, _) in &dists[j + 1..] {
            out.push(compare_pair(dists, *a, *b, draws, seed)?);
        }
    }
    Ok(out)
}

/// The averaging configuration restricted to the two among-area models and
/// renormalized.
pub fn typical_config<F: Real>(config: &AveragingConfig<F>) -> Result<AveragingConfig<F>> {
    let kept: Vec<(ModelTag, F)> = config
        .models()
        .iter()
        .zip(config.priors())
        .filter(|(m, _)| m.is_parametric())
        .map(|(&m, &p)| (m, p))
        .collect();
    let total: F = kept.iter().map(|x| x.1).sum();
    if !(total > F::zero()) {
        return Err(Error::InvalidConfig(
            "typical-area averaging needs positive prior probability on the normal or beta model".into(),
        ));
    }
    AveragingConfig::new(
        kept.iter().map(|x| x.0).collect(),
        kept.iter().map(|x| x.1 / total).collect(),
    )
}

/// Curve families reported for each area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveFamily {
    Local,
    Normal,
    Beta,
    Averaged,
}

impl CurveFamily {
    pub const ALL: [CurveFamily; 4] = [
        CurveFamily::Local,
        CurveFamily::Normal,
        CurveFamily::Beta,
        CurveFamily::Averaged,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CurveFamily::Local => "local",
            CurveFamily::Normal => "normal",
            CurveFamily::Beta => "beta",
            CurveFamily::Averaged => "averaged",
        }
    }
}

/// Everything the full analysis produces.
#[derive(Debug, Clone)]
pub struct Analysis<F> {
    pub normal: ModelFit<F>,
    pub beta: ModelFit<F>,
    pub draws: PosteriorDraws<F>,
    pub distributions: Vec<(ModelTag, DevianceDistribution<F>)>,
    pub comparisons: Vec<Comparison<F>>,
    pub probabilities: ModelProbabilities<F>,
    pub averaged: AveragedDraws<F>,
    pub typical_average: TypicalAverage<F>,
}

pub fn run<F: Real>(data: &Dataset, config: &PipelineConfig<F>) -> Result<Analysis<F>> {
    let (normal, beta) = fit_both(data, config)?;
    let draws = posterior_draws(data, &normal, &beta, config.draws, config.seed)?;
    let distributions = deviance_distributions(&normal, &beta, &draws)?;
    let comparisons = compare_all(&distributions, config.draws, config.seed)?;
    let probabilities = posterior_model_probs(&draws.aligned, &config.averaging)?;
    let averaged = averaged_area_draws(&draws.aligned, &config.averaging, config.selection, config.seed)?;
    let typical_average = averaged_typical_city(
        &draws.typical_normal,
        &draws.typical_beta,
        &draws.aligned,
        &typical_config(&config.averaging)?,
        config.seed,
    )?;
    Ok(Analysis {
        normal,
        beta,
        draws,
        distributions,
        comparisons,
        probabilities,
        averaged,
        typical_average,
    })
}

impl<F: Real> Analysis<F> {
    pub fn fit(&self, tag: ModelTag) -> Result<&ModelFit<F>> {
        match tag {
            ModelTag::Normal => Ok(&self.normal),
            ModelTag::Beta => Ok(&self.beta),
            other => Err(Error::NonMarginalModel(other)),
        }
    }

    pub fn distribution(&self, tag: ModelTag) -> Result<&DevianceDistribution<F>> {
        lookup(&self.distributions, tag)
    }

    /// Logit draws of area `index` under one curve family.
    pub fn area_logits(&self, family: CurveFamily, index: usize) -> Result<&[F]> {
        let matrix = match family {
            CurveFamily::Local => &self.draws.aligned.get(ModelTag::Saturated)?.areas,
            CurveFamily::Normal => &self.draws.aligned.get(ModelTag::Normal)?.areas,
            CurveFamily::Beta => &self.draws.aligned.get(ModelTag::Beta)?.areas,
            CurveFamily::Averaged => &self.averaged.matrix,
        };
        if index >= matrix.areas() {
            return Err(invalid(format!("area index {index} out of range")));
        }
        Ok(matrix.column(index))
    }

    /// Density curves of one area under all four families, on a shared
    /// logit grid of `points` abscissae.
    pub fn area_curves(
        &self,
        index: usize,
        bandwidth: Bandwidth<F>,
        points: usize,
    ) -> Result<Vec<(CurveFamily, KdeCurve<F>)>> {
        let samples = CurveFamily::ALL
            .iter()
            .map(|&f| self.area_logits(f, index))
            .collect::<Result<Vec<_>>>()?;
        let curves = shared_curves(&samples, bandwidth, points)?;
        Ok(CurveFamily::ALL.into_iter().zip(curves).collect())
    }

    /// Typical-area curves: normal, beta and averaged, on a shared grid.
    pub fn typical_curves(&self, bandwidth: Bandwidth<F>, points: usize) -> Result<Vec<(&'static str, KdeCurve<F>)>> {
        let samples: [&[F]; 3] = [
            &self.draws.typical_normal,
            &self.draws.typical_beta,
            &self.typical_average.logits,
        ];
        let curves = shared_curves(&samples, bandwidth, points)?;
        Ok(["normal", "beta", "averaged"].into_iter().zip(curves).collect())
    }
}

/// KDE curves of several samples evaluated on one grid covering all of them.
pub fn shared_curves<F: Real>(samples: &[&[F]], bandwidth: Bandwidth<F>, points: usize) -> Result<Vec<KdeCurve<F>>> {
    if points < 2 {
        return Err(invalid("curve grid needs at least 2 points"));
    }
    let mut lo = F::infinity();
    let mut hi = F::neg_infinity();
    for s in samples {
        if s.len() < 2 {
            return Err(invalid("kernel density needs at least 2 samples"));
        }
        let h = match bandwidth {
            Bandwidth::Auto => silverman_bandwidth(s),
            Bandwidth::Fixed(h) => h,
        };
        let pad = F::lit(4.0) * h;
        lo = lo.min(s.iter().copied().fold(F::infinity(), F::min) - pad);
        hi = hi.max(s.iter().copied().fold(F::neg_infinity(), F::max) + pad);
    }
    let step = (hi - lo) / F::count(points as u64 - 1);
    let grid: Vec<F> = (0..points).map(|k| lo + step * F::count(k as u64)).collect();
    samples
        .iter()
        .map(|s| kde(s, bandwidth, KdeGrid::Points(&grid)))
        .collect()
}
