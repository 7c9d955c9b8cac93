//! Posterior mass functions for the two parametric models on a rectangular
//! parameter grid under flat priors.

use rayon::prelude::*;
use serde::Serialize;

use crate::dataset::Dataset;
use crate::deviance::{DevianceDistribution, DevianceSource};
use crate::error::{invalid, Error, Result};
use crate::models::{
    loglik_beta_meansd, loglik_normal_logit, BetaParamsAb, BetaParamsMeanSd, ModelTag, NormalLogitParams,
};
use crate::numerics::special::logit;
use crate::numerics::{stream, Categorical, Purpose, QuadratureRule};
use crate::Real;

/// Log-likelihood drop that bounds the AUTO region: ±5 standard deviations of
/// an approximately normal likelihood.
pub const AUTO_LOGLIK_DROP: f64 = 12.5;

const AUTO_COARSE_POINTS: usize = 41;
const AUTO_MAX_ROUNDS: usize = 12;

/// The normal-logit and beta (mean, sd) likelihoods as functions of two
/// grid coordinates.
#[derive(Debug, Clone)]
pub enum ParametricModel<F> {
    /// Coordinates `(μ, σ)`.
    NormalLogit(QuadratureRule<F>),
    /// Coordinates `(μ_β, σ_β)`.
    BetaMeanSd,
}

impl<F: Real> ParametricModel<F> {
    pub fn normal_logit(nodes: usize) -> Result<Self> {
        Ok(Self::NormalLogit(QuadratureRule::gauss_hermite(nodes)?))
    }

    pub fn tag(&self) -> ModelTag {
        match self {
            Self::NormalLogit(_) => ModelTag::Normal,
            Self::BetaMeanSd => ModelTag::Beta,
        }
    }

    pub fn axis_names(&self) -> (&'static str, &'static str) {
        match self {
            Self::NormalLogit(_) => ("mu", "sigma"),
            Self::BetaMeanSd => ("mean", "sd"),
        }
    }

    pub fn loglik(&self, data: &Dataset, first: F, second: F) -> F {
        match self {
            Self::NormalLogit(rule) => match NormalLogitParams::new(first, second) {
                Ok(p) => loglik_normal_logit(data, p, rule),
                Err(_) => F::neg_infinity(),
            },
            Self::BetaMeanSd => loglik_beta_meansd(data, first, second),
        }
    }

    /// Closed box of admissible coordinates, used to clip AUTO bounds.
    fn domain(&self, data: &Dataset) -> [F; 4] {
        match self {
            Self::NormalLogit(_) => [F::neg_infinity(), F::infinity(), F::zero(), F::infinity()],
            Self::BetaMeanSd => {
                let p0 = pooled(data);
                [
                    F::lit(1e-9),
                    F::lit(1.0 - 1e-9),
                    F::lit(1e-4 * (p0 * (1.0 - p0)).sqrt()),
                    F::lit(0.5),
                ]
            }
        }
    }

    fn initial_box(&self, data: &Dataset) -> [F; 4] {
        let p0 = pooled(data);
        match self {
            Self::NormalLogit(_) => {
                let c = logit(p0);
                [F::lit(c - 3.0), F::lit(c + 3.0), F::zero(), F::lit(3.0)]
            }
            Self::BetaMeanSd => {
                let dom = self.domain(data);
                [
                    F::lit(p0 / 10.0),
                    F::lit(1.0 - (1.0 - p0) / 10.0),
                    dom[2],
                    F::lit((p0 * (1.0 - p0)).sqrt()),
                ]
            }
        }
    }
}

/// Pooled rate nudged away from 0 and 1.
fn pooled(data: &Dataset) -> f64 {
    (data.total_events() as f64 + 0.5) / (data.total_population() as f64 + 1.0)
}

/// Equally spaced grid including both end points on each axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec<F> {
    pub lo1: F,
    pub hi1: F,
    pub lo2: F,
    pub hi2: F,
    pub g1: usize,
    pub g2: usize,
}

impl<F: Real> GridSpec<F> {
    pub fn new(lo1: F, hi1: F, lo2: F, hi2: F, g1: usize, g2: usize) -> Result<Self> {
        let finite = [lo1, hi1, lo2, hi2].iter().all(|v| v.is_finite());
        if !finite || !(lo1 < hi1) || !(lo2 < hi2) {
            return Err(invalid(format!(
                "grid bounds must be finite with lo < hi ({lo1}, {hi1}, {lo2}, {hi2})"
            )));
        }
        if g1 < 2 || g2 < 2 {
            return Err(invalid("grid needs at least 2 points per axis"));
        }
        Ok(Self {
            lo1,
            hi1,
            lo2,
            hi2,
            g1,
            g2,
        })
    }

    pub fn len(&self) -> usize {
        self.g1 * self.g2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step1(&self) -> F {
        (self.hi1 - self.lo1) / F::count(self.g1 as u64 - 1)
    }

    pub fn step2(&self) -> F {
        (self.hi2 - self.lo2) / F::count(self.g2 as u64 - 1)
    }

    pub fn axis1(&self, i: usize) -> F {
        if i + 1 == self.g1 {
            self.hi1
        } else {
            self.lo1 + self.step1() * F::count(i as u64)
        }
    }

    pub fn axis2(&self, j: usize) -> F {
        if j + 1 == self.g2 {
            self.hi2
        } else {
            self.lo2 + self.step2() * F::count(j as u64)
        }
    }

    /// Coordinates of flat index `g = i * g2 + j`.
    pub fn point(&self, g: usize) -> (F, F) {
        (self.axis1(g / self.g2), self.axis2(g % self.g2))
    }

    /// Same bounds, different resolution.
    pub fn with_size(&self, g1: usize, g2: usize) -> Result<Self> {
        Self::new(self.lo1, self.hi1, self.lo2, self.hi2, g1, g2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridChoice<F> {
    /// Locate the region of appreciable likelihood automatically, then lay a
    /// `size × size` grid over it.
    Auto {
        size: usize,
    },
    Explicit(GridSpec<F>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorGrid<F> {
    spec: GridSpec<F>,
    model: ModelTag,
    loglik: Vec<F>,
    mass: Vec<F>,
}

impl<F: Real> PosteriorGrid<F> {
    /// Normalizes `exp(loglik + log_prior)` into a mass function.
    pub fn from_logliks(spec: GridSpec<F>, model: ModelTag, loglik: Vec<F>, log_prior: Option<Vec<F>>) -> Result<Self> {
        if loglik.len() != spec.len() {
            return Err(Error::LengthMismatch {
                expected: spec.len(),
                got: loglik.len(),
            });
        }
        let log_post: Vec<F> = match log_prior {
            None => loglik.clone(),
            Some(lp) => {
                if lp.len() != loglik.len() {
                    return Err(Error::LengthMismatch {
                        expected: loglik.len(),
                        got: lp.len(),
                    });
                }
                loglik.iter().zip(&lp).map(|(&l, &p)| l + p).collect()
            }
        };
        let max = log_post.iter().copied().fold(F::neg_infinity(), F::max);
        if !max.is_finite() {
            return Err(Error::DegenerateGrid);
        }
        let mut mass: Vec<F> = log_post.iter().map(|&l| (l - max).exp()).collect();
        let total: F = mass.iter().copied().sum();
        for m in &mut mass {
            *m = *m / total;
        }
        Ok(Self {
            spec,
            model,
            loglik,
            mass,
        })
    }

    pub fn spec(&self) -> &GridSpec<F> {
        &self.spec
    }

    pub fn model(&self) -> ModelTag {
        self.model
    }

    pub fn loglik(&self) -> &[F] {
        &self.loglik
    }

    pub fn mass(&self) -> &[F] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.loglik.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loglik.is_empty()
    }

    /// `(param1, param2, loglik, mass)` in grid order.
    pub fn rows(&self) -> impl Iterator<Item = (F, F, F, F)> + '_ {
        (0..self.len()).map(move |g| {
            let (x, y) = self.spec.point(g);
            (x, y, self.loglik[g], self.mass[g])
        })
    }

    /// Index of the best grid point (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (g, &l) in self.loglik.iter().enumerate() {
            if l > self.loglik[best] {
                best = g;
            }
        }
        best
    }

    /// Posterior expectation of a function of the grid coordinates.
    pub fn expectation(&self, f: impl Fn(F, F) -> F) -> F {
        (0..self.len())
            .filter(|&g| self.mass[g] > F::zero())
            .map(|g| {
                let (x, y) = self.spec.point(g);
                self.mass[g] * f(x, y)
            })
            .sum()
    }
}

/// Evaluates the log-likelihood over the grid and normalizes it under a flat prior.
pub fn build_grid<F: Real>(
    data: &Dataset,
    model: &ParametricModel<F>,
    choice: GridChoice<F>,
) -> Result<PosteriorGrid<F>> {
    build_grid_with_prior(data, model, choice, None::<fn(F, F) -> F>)
}

/// As [`build_grid`], with an optional log prior density multiplying the mass pointwise.
pub fn build_grid_with_prior<F: Real, P>(
    data: &Dataset,
    model: &ParametricModel<F>,
    choice: GridChoice<F>,
    log_prior: Option<P>,
) -> Result<PosteriorGrid<F>>
where
    P: Fn(F, F) -> F + Sync,
{
    let spec = match choice {
        GridChoice::Explicit(spec) => spec,
        GridChoice::Auto { size } => auto_spec(data, model, size)?,
    };
    let loglik = evaluate(data, model, &spec);
    let prior = log_prior.map(|f| {
        (0..spec.len())
            .map(|g| {
                let (x, y) = spec.point(g);
                f(x, y)
            })
            .collect()
    });
    PosteriorGrid::from_logliks(spec, model.tag(), loglik, prior)
}

fn evaluate<F: Real>(data: &Dataset, model: &ParametricModel<F>, spec: &GridSpec<F>) -> Vec<F> {
    (0..spec.len())
        .into_par_iter()
        .map(|g| {
            let (x, y) = spec.point(g);
            model.loglik(data, x, y)
        })
        .collect()
}

/// Bounds of the region where the log-likelihood is within
/// [`AUTO_LOGLIK_DROP`] of its maximum, found by repeated coarse grids that
/// zoom onto (or widen towards) that region, then `size × size` points.
pub fn auto_spec<F: Real>(data: &Dataset, model: &ParametricModel<F>, size: usize) -> Result<GridSpec<F>> {
    if size < 2 {
        return Err(invalid("grid needs at least 2 points per axis"));
    }
    let dom = model.domain(data);
    let mut bx = model.initial_box(data);
    let n = AUTO_COARSE_POINTS;
    let drop = F::lit(AUTO_LOGLIK_DROP);
    for _ in 0..AUTO_MAX_ROUNDS {
        let spec = GridSpec::new(bx[0], bx[1], bx[2], bx[3], n, n)?;
        let ll = evaluate(data, model, &spec);
        let max = ll.iter().copied().fold(F::neg_infinity(), F::max);
        if !max.is_finite() {
            return Err(Error::DegenerateGrid);
        }
        let (mut i_lo, mut i_hi, mut j_lo, mut j_hi) = (n, 0, n, 0);
        for (g, &l) in ll.iter().enumerate() {
            if l >= max - drop {
                let (i, j) = (g / n, g % n);
                i_lo = i_lo.min(i);
                i_hi = i_hi.max(i);
                j_lo = j_lo.min(j);
                j_hi = j_hi.max(j);
            }
        }
        // Expand one coarse cell beyond the region; a region touching the
        // box edge gets the box widened on that side instead.
        let (w1, w2) = (bx[1] - bx[0], bx[3] - bx[2]);
        let mut next = [
            if i_lo == 0 { bx[0] - w1 } else { spec.axis1(i_lo - 1) },
            if i_hi == n - 1 {
                bx[1] + w1
            } else {
                spec.axis1(i_hi + 1)
            },
            if j_lo == 0 { bx[2] - w2 } else { spec.axis2(j_lo - 1) },
            if j_hi == n - 1 {
                bx[3] + w2
            } else {
                spec.axis2(j_hi + 1)
            },
        ];
        next[0] = next[0].max(dom[0]);
        next[1] = next[1].min(dom[1]);
        next[2] = next[2].max(dom[2]);
        next[3] = next[3].min(dom[3]);
        let settled = (0..4).all(|k| {
            let scale = if k < 2 { next[1] - next[0] } else { next[3] - next[2] };
            (next[k] - bx[k]).abs() <= F::lit(0.02) * scale
        });
        bx = next;
        if settled {
            break;
        }
    }
    GridSpec::new(bx[0], bx[1], bx[2], bx[3], size, size)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSummary<F> {
    /// Best grid point.
    pub mle: (F, F),
    pub max_loglik: F,
    /// `-2 · max_loglik`.
    pub frequentist_deviance: F,
    /// Posterior mean of `-2 · loglik`.
    pub mean_deviance: F,
    /// `mean_deviance - frequentist_deviance`.
    pub p_d: F,
    /// `mean_deviance + p_d`.
    pub dic: F,
}

pub fn grid_summaries<F: Real>(grid: &PosteriorGrid<F>) -> GridSummary<F> {
    let two = F::lit(2.0);
    let best = grid.argmax();
    let max_loglik = grid.loglik[best];
    let frequentist_deviance = -two * max_loglik;
    let mean_deviance: F = grid
        .mass
        .iter()
        .zip(&grid.loglik)
        .filter(|(m, _)| **m > F::zero())
        .map(|(&m, &l)| m * (-two * l))
        .sum();
    let p_d = mean_deviance - frequentist_deviance;
    GridSummary {
        mle: grid.spec.point(best),
        max_loglik,
        frequentist_deviance,
        mean_deviance,
        p_d,
        dic: mean_deviance + p_d,
    }
}

/// Exact (given the grid) posterior distribution of the deviance: grid
/// deviances sorted with their cumulated masses.
pub fn deviance_cdf<F: Real>(grid: &PosteriorGrid<F>) -> DevianceDistribution<F> {
    let two = F::lit(2.0);
    let pairs: Vec<(F, F)> = grid
        .loglik
        .iter()
        .zip(&grid.mass)
        .filter(|(_, m)| **m > F::zero())
        .map(|(&l, &m)| (-two * l, m))
        .collect();
    DevianceDistribution::from_weighted(pairs, DevianceSource::ExactGrid).expect("grid mass is positive somewhere")
}

/// Continuous maximizer near the best grid point, by compass search. Reported
/// alongside, never in place of, the grid MLE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinedMle<F> {
    pub first: F,
    pub second: F,
    pub loglik: F,
}

pub fn refine_mle<F: Real>(data: &Dataset, model: &ParametricModel<F>, grid: &PosteriorGrid<F>) -> RefinedMle<F> {
    let dom = model.domain(data);
    let (mut x, mut y) = grid.spec.point(grid.argmax());
    let mut best = model.loglik(data, x, y);
    let (mut hx, mut hy) = (grid.spec.step1(), grid.spec.step2());
    let (tx, ty) = (hx * F::lit(1e-7), hy * F::lit(1e-7));
    let half = F::lit(0.5);
    while hx > tx || hy > ty {
        let mut moved = false;
        for (dx, dy) in [(hx, F::zero()), (-hx, F::zero()), (F::zero(), hy), (F::zero(), -hy)] {
            let (nx, ny) = (x + dx, y + dy);
            if nx < dom[0] || nx > dom[1] || ny < dom[2] || ny > dom[3] {
                continue;
            }
            let l = model.loglik(data, nx, ny);
            if l > best {
                best = l;
                x = nx;
                y = ny;
                moved = true;
            }
        }
        if !moved {
            hx = hx * half;
            hy = hy * half;
        }
    }
    RefinedMle {
        first: x,
        second: y,
        loglik: best,
    }
}

/// One posterior draw of the grid parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridDraw<F> {
    pub index: usize,
    pub first: F,
    pub second: F,
    pub loglik: F,
}

impl<F: Real> GridDraw<F> {
    pub fn deviance(&self) -> F {
        F::lit(-2.0) * self.loglik
    }

    pub fn as_normal(&self) -> Result<NormalLogitParams<F>> {
        NormalLogitParams::new(self.first, self.second)
    }

    pub fn as_beta(&self) -> Result<BetaParamsAb<F>> {
        Ok(BetaParamsMeanSd::new(self.first, self.second)?.to_ab())
    }
}

/// `count` independent draws of grid points weighted by posterior mass.
pub fn sample_params<F: Real>(grid: &PosteriorGrid<F>, count: usize, seed: u64) -> Vec<GridDraw<F>> {
    let cat = Categorical::new(&grid.mass).expect("grid mass is a valid distribution");
    let mut rng = stream(seed, Purpose::GridParams, grid.model.index());
    (0..count)
        .map(|_| {
            let g = cat.sample(&mut rng);
            let (first, second) = grid.spec.point(g);
            GridDraw {
                index: g,
                first,
                second,
                loglik: grid.loglik[g],
            }
        })
        .collect()
}
