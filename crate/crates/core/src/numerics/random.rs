//! Seeded random streams and the handful of variates the simulations need.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed, with the
//! 64-bit ChaCha stream id derived from `(purpose, index)`. Work split across
//! threads by `index` therefore reproduces exactly for any worker count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::Real;

pub type StreamRng = ChaCha8Rng;

/// What a stream is used for; keeps streams of different operations disjoint
/// when they share a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u16)]
pub enum Purpose {
    GridParams = 1,
    NullDeviance = 2,
    LocalAreas = 3,
    NormalAreas = 4,
    BetaAreas = 5,
    TypicalCity = 6,
    CompareFirst = 7,
    CompareSecond = 8,
    Asymptotic = 9,
    ModelSelection = 10,
    TypicalSelection = 11,
}

pub fn stream(seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    debug_assert!(index < 1 << 48);
    rng.set_stream(((purpose as u64) << 48) | index);
    rng
}

/// Mixes a master seed with two labels (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn draw_normal<F: Real, R: Rng + ?Sized>(rng: &mut R, mean: F, sd: F) -> Result<F> {
    if !(sd >= F::zero()) || !mean.is_finite() || !sd.is_finite() {
        return Err(invalid(format!(
            "normal needs finite mean and sd >= 0 (got {mean}, {sd})"
        )));
    }
    if sd == F::zero() {
        return Ok(mean);
    }
    Ok(mean + sd * F::sample_standard_normal(rng))
}

pub fn draw_uniform<F: Real, R: Rng + ?Sized>(rng: &mut R, lo: F, hi: F) -> Result<F> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid(format!("uniform needs lo < hi (got {lo}, {hi})")));
    }
    Ok(lo + (hi - lo) * F::sample_open01(rng))
}

fn check_beta<F: Real>(a: F, b: F) -> Result<()> {
    if a > F::zero() && b > F::zero() && a.is_finite() && b.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("beta needs a, b > 0 (got {a}, {b})")))
    }
}

/// Log-ratio of two independent unit gammas with shapes `a` and `b`, i.e. the
/// logit of a `Beta(a, b)` variate. Redraws on the (tiny-shape) event that a
/// gamma variate underflows to zero.
fn gamma_log_ratio<F: Real, R: Rng + ?Sized>(rng: &mut R, a: F, b: F) -> F {
    loop {
        let x = F::sample_gamma(rng, a).expect("shape checked");
        let y = F::sample_gamma(rng, b).expect("shape checked");
        let v = x.ln() - y.ln();
        if v.is_finite() {
            return v;
        }
    }
}

/// `Beta(a, b)` on the logit scale, via two gamma variates.
pub fn draw_beta_logit<F: Real, R: Rng + ?Sized>(rng: &mut R, a: F, b: F) -> Result<F> {
    check_beta(a, b)?;
    Ok(gamma_log_ratio(rng, a, b))
}

/// `Beta(a, b)` as `X / (X + Y)` with `X ~ Γ(a)`, `Y ~ Γ(b)`.
pub fn draw_beta<F: Real, R: Rng + ?Sized>(rng: &mut R, a: F, b: F) -> Result<F> {
    check_beta(a, b)?;
    Ok(super::logistic(gamma_log_ratio(rng, a, b)))
}

/// Index drawn with probability proportional to `weights`.
pub fn draw_categorical<F: Real, R: Rng + ?Sized>(rng: &mut R, weights: &[F]) -> Result<usize> {
    Ok(Categorical::new(weights)?.sample(rng))
}

/// Reusable categorical sampler over non-negative weights.
#[derive(Debug, Clone)]
pub struct Categorical<F> {
    cumulative: Vec<F>,
    last_positive: usize,
}

impl<F: Real> Categorical<F> {
    pub fn new(weights: &[F]) -> Result<Self> {
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = F::zero();
        let mut last_positive = None;
        for (i, &w) in weights.iter().enumerate() {
            if !(w >= F::zero()) || !w.is_finite() {
                return Err(invalid(format!("categorical weight {i} is {w}")));
            }
            if w > F::zero() {
                last_positive = Some(i);
            }
            acc = acc + w;
            cumulative.push(acc);
        }
        let last_positive = last_positive.ok_or_else(|| invalid("categorical weights sum to zero"))?;
        let total = acc;
        for c in &mut cumulative {
            *c = *c / total;
        }
        Ok(Self {
            cumulative,
            last_positive,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = F::sample_open01(rng);
        let idx = self.cumulative.partition_point(|&c| c < u);
        idx.min(self.last_positive)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_normal() {
        let mut rng = stream(1, Purpose::GridParams, 0);
        for _ in 0..10 {
            assert_eq!(draw_normal(&mut rng, 5.0f64, 0.0).unwrap(), 5.0);
        }
        assert!(draw_normal(&mut rng, 0.0f64, -1.0).is_err());
    }

    #[test]
    fn beta_mean_small_shape() {
        let mut rng = stream(7, Purpose::LocalAreas, 0);
        let t = 100_000;
        let xs: Vec<f64> = (0..t).map(|_| draw_beta(&mut rng, 1.0, 164.0).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / t as f64;
        let want = 1.0 / 165.0;
        let var = 164.0 / (165.0f64.powi(2) * 166.0);
        let se = (var / t as f64).sqrt();
        assert!((mean - want).abs() < 3.0 * se, "{mean} vs {want}");
        assert!(xs.iter().all(|&x| x > 0.0 && x < 1.0));
    }

    #[test]
    fn beta_rejects_bad_shapes() {
        let mut rng = stream(1, Purpose::LocalAreas, 0);
        assert!(draw_beta(&mut rng, 0.0f64, 1.0).is_err());
        assert!(draw_beta_logit(&mut rng, 1.0f64, f64::INFINITY).is_err());
    }

    #[test]
    fn categorical_point_mass() {
        let mut rng = stream(3, Purpose::GridParams, 0);
        for _ in 0..1000 {
            assert_eq!(draw_categorical(&mut rng, &[0.0f64, 1.0, 0.0]).unwrap(), 1);
        }
        assert!(draw_categorical::<f64, _>(&mut rng, &[0.0, 0.0]).is_err());
        assert!(draw_categorical(&mut rng, &[1.0f64, -0.5]).is_err());
    }

    #[test]
    fn categorical_frequencies() {
        let cat = Categorical::new(&[1.0f64, 3.0, 0.0, 4.0]).unwrap();
        let mut rng = stream(9, Purpose::GridParams, 0);
        let mut counts = [0usize; 4];
        let t = 80_000;
        for _ in 0..t {
            counts[cat.sample(&mut rng)] += 1;
        }
        assert_eq!(counts[2], 0);
        for (k, p) in [(0usize, 0.125f64), (1, 0.375), (3, 0.5)] {
            let sd = (t as f64 * p * (1.0 - p)).sqrt();
            assert!((counts[k] as f64 - t as f64 * p).abs() < 4.0 * sd);
        }
    }

    #[test]
    fn uniform_range() {
        let mut rng = stream(2, Purpose::GridParams, 0);
        for _ in 0..1000 {
            let u = draw_uniform(&mut rng, -2.0f64, 3.0).unwrap();
            assert!(u > -2.0 && u < 3.0);
        }
        assert!(draw_uniform(&mut rng, 1.0f64, 1.0).is_err());
    }

    #[test]
    fn streams_reproduce_and_separate() {
        let take = |seed, purpose, idx| {
            let mut rng = stream(seed, purpose, idx);
            (0..16).map(|_| rng.random::<u64>()).collect::<Vec<_>>()
        };
        assert_eq!(take(42, Purpose::BetaAreas, 3), take(42, Purpose::BetaAreas, 3));
        assert_ne!(take(42, Purpose::BetaAreas, 3), take(42, Purpose::BetaAreas, 4));
        assert_ne!(take(42, Purpose::BetaAreas, 3), take(42, Purpose::NormalAreas, 3));
        assert_ne!(take(42, Purpose::BetaAreas, 3), take(43, Purpose::BetaAreas, 3));
        assert_ne!(derive_seed(1, 0, 1), derive_seed(1, 1, 0));
    }
}
