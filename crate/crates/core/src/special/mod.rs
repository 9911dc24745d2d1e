//! Special functions: real and complex gamma families, the Meijer G-function
//! and the modified Bessel function of the second kind.

pub mod bessel;
pub mod complex;
pub mod gamma;
pub mod meijer;

pub use bessel::{bessel_k, bessel_k_integral};
pub use complex::{
    gamma_c, ln_gamma_c, lower_gamma_c, lower_gamma_over_power, upper_gamma_scaled_c, upper_gamma_scaled_over_power,
};
pub use gamma::{
    factorial, gamma, gamma_p, gamma_q, ln_factorial, ln_gamma, ln_gamma_signed, lower_gamma, rgamma,
    upper_gamma, upper_gamma_scaled,
};
pub use meijer::{contour_at_step, meijer_g, meijer_g_scaled, meijer_g_with, EvalResult, MeijerGSpec, MeijerOptions, Method, MethodChoice};
