//! Gauss-Hermite quadrature normalized against the standard normal density.
//!
//! Nodes and weights come from the Golub-Welsch construction: the nodes are
//! the eigenvalues of the Jacobi matrix of the probabilists' Hermite
//! polynomials, and each weight is the squared first component of the
//! matching normalized eigenvector.

use crate::error::{Error, Result};
use crate::Real;

pub const MAX_ORDER: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule<F> {
    nodes: Vec<F>,
    weights: Vec<F>,
}

impl<F: Real> QuadratureRule<F> {
    /// K-point rule with `Σ_k f(z_k) w_k ≈ ∫ f(z) φ(z) dz`, exact for
    /// polynomials of degree `2K - 1`.
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        if order == 0 || order > MAX_ORDER {
            return Err(Error::QuadratureOrder(order));
        }
        // Eigen-decomposition runs in f64 regardless of F.
        let mut diag = vec![0.0f64; order];
        let mut off: Vec<f64> = (1..=order).map(|k| (k as f64).sqrt()).collect();
        off[order - 1] = 0.0;
        let mut first = vec![0.0f64; order];
        first[0] = 1.0;
        tridiagonal_ql(&mut diag, &mut off, &mut first)?;

        let mut pairs: Vec<(f64, f64)> = diag.into_iter().zip(first.iter().map(|v| v * v)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        // Symmetrize: z_k = -z_{K-1-k}, w_k = w_{K-1-k}.
        let mut nodes = vec![0.0f64; order];
        let mut weights = vec![0.0f64; order];
        for k in 0..order {
            let j = order - 1 - k;
            nodes[k] = 0.5 * (pairs[k].0 - pairs[j].0);
            weights[k] = 0.5 * (pairs[k].1 + pairs[j].1);
        }
        if order % 2 == 1 {
            nodes[order / 2] = 0.0;
        }
        let total: f64 = weights.iter().sum();
        Ok(Self {
            nodes: nodes.into_iter().map(F::lit).collect(),
            weights: weights.into_iter().map(|w| F::lit(w / total)).collect(),
        })
    }

    pub fn nodes(&self) -> &[F] {
        &self.nodes
    }

    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `Σ_k f(z_k) w_k`.
    pub fn integrate(&self, mut f: impl FnMut(F) -> F) -> F {
        self.nodes.iter().zip(&self.weights).map(|(&z, &w)| f(z) * w).sum()
    }
}

/// Implicit-shift QL on a symmetric tridiagonal matrix. `diag` receives the
/// eigenvalues; `first` (initialised to e_1) receives the first components of
/// the eigenvectors. `off[i]` couples rows `i` and `i + 1`; `off[n-1]` is unused.
fn tridiagonal_ql(diag: &mut [f64], off: &mut [f64], first: &mut [f64]) -> Result<()> {
    let n = diag.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NoConvergence);
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + off[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
                let f = first[i + 1];
                first[i + 1] = s * first[i] + c * f;
                first[i] = c * first[i] - s * f;
            }
            if deflated {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moment(rule: &QuadratureRule<f64>, p: i32) -> f64 {
        rule.integrate(|z| z.powi(p))
    }

    #[test]
    fn twenty_point_moments() {
        let rule = QuadratureRule::<f64>::gauss_hermite(20).unwrap();
        assert_eq!(rule.order(), 20);
        assert!((moment(&rule, 0) - 1.0).abs() < 1e-15);
        assert!((moment(&rule, 2) - 1.0).abs() < 1e-12);
        assert!((moment(&rule, 4) - 3.0).abs() < 1e-10);
        // odd moments vanish by symmetry
        assert!(moment(&rule, 3).abs() < 1e-12);
        // degree 38 = 2K - 2 is still exact: E z^38 = 37!!
        let double_fact: f64 = (1..=37).step_by(2).map(|k| k as f64).product();
        assert!((moment(&rule, 38) / double_fact - 1.0).abs() < 1e-9);
    }

    #[test]
    fn low_moments_for_several_orders() {
        for k in [1usize, 2, 3, 8, 20, 32, 40, 64] {
            let rule = QuadratureRule::<f64>::gauss_hermite(k).unwrap();
            assert!((moment(&rule, 0) - 1.0).abs() < 1e-10, "K={k}");
            assert!(moment(&rule, 1).abs() < 1e-10, "K={k}");
            if k >= 2 {
                assert!((moment(&rule, 2) - 1.0).abs() < 1e-10, "K={k}");
            }
        }
    }

    #[test]
    fn nodes_symmetric_weights_positive() {
        for k in [7usize, 20] {
            let rule = QuadratureRule::<f64>::gauss_hermite(k).unwrap();
            let z = rule.nodes();
            for i in 0..k {
                assert_eq!(z[i], -z[k - 1 - i]);
                assert!(rule.weights()[i] > 0.0);
            }
            assert!(z.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn known_three_point_rule() {
        // He_3 roots are 0, ±√3 with weights 2/3, 1/6
        let rule = QuadratureRule::<f64>::gauss_hermite(3).unwrap();
        assert!((rule.nodes()[2] - 3f64.sqrt()).abs() < 1e-14);
        assert!((rule.weights()[1] - 2.0 / 3.0).abs() < 1e-14);
        assert!((rule.weights()[0] - 1.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn order_out_of_range() {
        assert!(matches!(
            QuadratureRule::<f64>::gauss_hermite(0),
            Err(Error::QuadratureOrder(0))
        ));
        assert!(QuadratureRule::<f64>::gauss_hermite(65).is_err());
    }

    #[test]
    fn f32_rule() {
        let rule = QuadratureRule::<f32>::gauss_hermite(20).unwrap();
        let m2 = rule.integrate(|z| z * z);
        assert!((m2 - 1.0).abs() < 1e-5);
    }
}
