//! Numerical kernel: quadrature, special functions, random variates and
//! kernel density estimation.

pub mod kde;
pub mod quadrature;
pub mod random;
pub mod special;

pub use kde::{kde, kde_logit, silverman_bandwidth, Bandwidth, KdeCurve, KdeGrid};
pub use quadrature::QuadratureRule;
pub use random::{
    derive_seed, draw_beta, draw_beta_logit, draw_categorical, draw_normal, draw_uniform, stream, Categorical, Purpose,
    StreamRng,
};
pub use special::{ln_gamma, log_beta, log_binom_coeff, log_sum_exp, logistic, logit, softplus};
