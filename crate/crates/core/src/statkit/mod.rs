//! Special functions, distribution quantiles and seeded sampling primitives.

mod dist;
mod rng;
mod special;

pub use dist::{
    chi_square_cdf, chi_square_pdf, chi_square_quantile, chi_square_sf, normal_cdf, normal_pdf,
    normal_quantile, student_t_cdf, student_t_pdf, student_t_quantile,
};
pub use rng::{
    derive_stream, psd_factor, sample_binomial, sample_gamma, sample_poisson,
    sample_trivariate_normal, RngStream,
};
pub(crate) use rng::sample_with_factor;
pub use special::{ln_gamma, reg_gamma_lower, reg_gamma_upper, reg_inc_beta};
pub(crate) use special::ln_gamma_unchecked;
