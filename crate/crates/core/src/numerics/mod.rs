//! Random streams, sampling, and multivariate normal/t probabilities.

mod bivariate;
mod correlation;
pub mod dist;
mod qmc;
mod quantile;
mod rng;
mod sampling;

pub use correlation::CorrelationMatrix;
pub use qmc::{mv_normal_prob, mv_prob, mv_t_prob, MvProbResult, QmcSettings};
pub use quantile::{
    equicoordinate_quantile, equicoordinate_quantile_detailed, max_exceedance, true_fwer_given_shift,
    QuantileResult,
};
pub use rng::{purpose, RngStream};
pub use sampling::{
    multinomial_into, multinomial_sample, normal_sample, scaled_chi_square, standard_normal, uniform_sample,
};
