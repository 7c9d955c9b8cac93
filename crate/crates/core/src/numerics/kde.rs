//! Gaussian kernel density estimation on the logit scale.

use rayon::prelude::*;

use super::special::logit;
use crate::error::{invalid, Result};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth<F> {
    /// Silverman's rule, `1.06 · s · T^(-1/5)`.
    Auto,
    Fixed(F),
}

/// Where the density is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum KdeGrid<'a, F> {
    Points(&'a [F]),
    /// `n` equally spaced points spanning the samples ± 4 bandwidths.
    Covering(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KdeCurve<F> {
    pub abscissae: Vec<F>,
    pub densities: Vec<F>,
    pub bandwidth: F,
}

impl<F: Real> KdeCurve<F> {
    /// Trapezoid-rule integral over the evaluation grid.
    pub fn integral(&self) -> F {
        self.cumulative().last().copied().unwrap_or_else(F::zero)
    }

    /// Abscissa of the largest density value.
    pub fn mode(&self) -> F {
        let (idx, _) =
            self.densities.iter().enumerate().fold(
                (0, F::neg_infinity()),
                |best, (i, &d)| if d > best.1 { (i, d) } else { best },
            );
        self.abscissae[idx]
    }

    fn cumulative(&self) -> Vec<F> {
        let half = F::lit(0.5);
        let mut acc = F::zero();
        let mut out = Vec::with_capacity(self.abscissae.len());
        out.push(acc);
        for i in 1..self.abscissae.len() {
            let dx = self.abscissae[i] - self.abscissae[i - 1];
            acc = acc + half * dx * (self.densities[i] + self.densities[i - 1]);
            out.push(acc);
        }
        out
    }

    /// Quantile of the curve normalized to unit mass, linearly interpolated.
    pub fn quantile(&self, q: F) -> F {
        let cum = self.cumulative();
        let total = *cum.last().expect("non-empty grid");
        let target = q * total;
        let k = cum.partition_point(|&c| c < target);
        if k == 0 {
            return self.abscissae[0];
        }
        if k >= cum.len() {
            return *self.abscissae.last().unwrap();
        }
        let (c0, c1) = (cum[k - 1], cum[k]);
        let w = if c1 > c0 { (target - c0) / (c1 - c0) } else { F::zero() };
        self.abscissae[k - 1] + w * (self.abscissae[k] - self.abscissae[k - 1])
    }

    pub fn interquartile_range(&self) -> F {
        self.quantile(F::lit(0.75)) - self.quantile(F::lit(0.25))
    }
}

/// Silverman's rule of thumb on the given samples.
pub fn silverman_bandwidth<F: Real>(samples: &[F]) -> F {
    let t = F::count(samples.len() as u64);
    let mean = samples.iter().copied().sum::<F>() / t;
    let var = samples.iter().map(|&x| (x - mean) * (x - mean)).sum::<F>() / (t - F::one());
    F::lit(1.06) * var.sqrt() * t.powf(F::lit(-0.2))
}

/// Gaussian KDE of logit-scale samples.
pub fn kde<F: Real>(logits: &[F], bandwidth: Bandwidth<F>, grid: KdeGrid<'_, F>) -> Result<KdeCurve<F>> {
    if logits.len() < 2 {
        return Err(invalid("kernel density needs at least 2 samples"));
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(invalid("kernel density samples must be finite"));
    }
    let h = match bandwidth {
        Bandwidth::Auto => silverman_bandwidth(logits),
        Bandwidth::Fixed(h) => h,
    };
    if !(h > F::zero()) || !h.is_finite() {
        return Err(invalid(format!("bandwidth must be positive (got {h})")));
    }
    let abscissae = match grid {
        KdeGrid::Points(p) => p.to_vec(),
        KdeGrid::Covering(n) => {
            if n < 2 {
                return Err(invalid("covering grid needs at least 2 points"));
            }
            let lo = logits.iter().copied().fold(F::infinity(), F::min) - F::lit(4.0) * h;
            let hi = logits.iter().copied().fold(F::neg_infinity(), F::max) + F::lit(4.0) * h;
            let step = (hi - lo) / F::count(n as u64 - 1);
            (0..n).map(|k| lo + step * F::count(k as u64)).collect()
        }
    };
    let norm = (F::count(logits.len() as u64) * h * (F::lit(2.0) * F::PI()).sqrt()).recip();
    let half = F::lit(0.5);
    let densities = abscissae
        .par_iter()
        .map(|&x| {
            let s: F = logits
                .iter()
                .map(|&xi| {
                    let u = (x - xi) / h;
                    (-half * u * u).exp()
                })
                .sum();
            s * norm
        })
        .collect();
    Ok(KdeCurve {
        abscissae,
        densities,
        bandwidth: h,
    })
}

/// Gaussian KDE of rates in (0, 1), smoothed on the logit scale.
pub fn kde_logit<F: Real>(rates: &[F], bandwidth: Bandwidth<F>, grid: KdeGrid<'_, F>) -> Result<KdeCurve<F>> {
    if let Some(p) = rates.iter().find(|&&p| !(p > F::zero() && p < F::one())) {
        return Err(invalid(format!("rate {p} is not strictly inside (0, 1)")));
    }
    let logits: Vec<F> = rates.iter().map(|&p| logit(p)).collect();
    kde(&logits, bandwidth, grid)
}
