//! Modified Bessel function of the second kind, through its Meijer-G form
//! K_ν(x) = ½ G^{2,0}_{0,2}[x²/4 | ν/2, -ν/2] and, independently, through
//! the integral K_ν(x) = ∫_0^∞ e^{-x cosh t} cosh(νt) dt.

use super::meijer::{meijer_g_with, MeijerGSpec, MeijerOptions, MethodChoice};
use crate::quad::{integrate_to_infinity, QuadOptions};
use crate::{Error, Result};

pub fn bessel_k(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !nu.is_finite() {
        return Err(Error::Validation(format!("bessel_k needs x > 0 (nu = {nu}, x = {x})")));
    }
    let spec = MeijerGSpec::new(2, 0, vec![], vec![0.5 * nu, -0.5 * nu], 0.25 * x * x)?;
    let opts = MeijerOptions {
        method: MethodChoice::Contour,
        rel_tol: 1e-12,
        ln_prefactor: -std::f64::consts::LN_2,
    };
    Ok(meijer_g_with(&spec, &opts)?.value)
}

/// K_ν(x) by quadrature of its cosh integral; uses no Meijer-G machinery.
pub fn bessel_k_integral(nu: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) || !nu.is_finite() {
        return Err(Error::Validation(format!("bessel_k needs x > 0 (nu = {nu}, x = {x})")));
    }
    // factor e^{-x} out so the integrand starts at 1
    let f = |t: f64| {
        let arg = -x * (t.cosh() - 1.0) + nu.abs() * t;
        0.5 * (arg.exp() + (arg - 2.0 * nu.abs() * t).exp())
    };
    let opts = QuadOptions {
        abs_tol: 1e-15,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let scale = (1.0 / x.max(1e-3)).sqrt().min(4.0);
    Ok(integrate_to_infinity(f, 0.0, scale, &opts)?.value * (-x).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_order_is_elementary() {
        // K_{1/2}(x) = sqrt(π / 2x) e^{-x}
        for &x in &[0.1, 1.0, 4.0, 12.0] {
            let expect = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x as f64).exp();
            let v = bessel_k(0.5, x).unwrap();
            assert!((v - expect).abs() < 1e-10 * expect, "x={x}: {v} vs {expect}");
        }
    }

    #[test]
    fn integral_route_matches_meijer_route() {
        for &nu in &[0.0, 0.37, 1.0, 2.5] {
            for &x in &[0.2, 1.0, 3.0, 9.0] {
                let a = bessel_k(nu, x).unwrap();
                let b = bessel_k_integral(nu, x).unwrap();
                assert!((a - b).abs() < 1e-10 * b, "nu={nu} x={x}: {a} vs {b}");
            }
        }
    }
}
