//! Complex log-gamma and incomplete gammas of complex order, used inside
//! Mellin-Barnes integrands.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::gamma::{LANCZOS, LANCZOS_G};
use crate::{Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// ln sin(w), stable for large |Im w|. Only the value modulo 2πi is meaningful.
fn ln_sin(w: Complex64) -> Complex64 {
    if w.im.abs() < 20.0 {
        return w.sin().ln();
    }
    let i = Complex64::i();
    if w.im > 0.0 {
        // sin w = e^{-iw} (e^{2iw} - 1) / (2i)
        -i * w + ((2.0 * i * w).exp() - 1.0).ln() - (2.0 * i).ln()
    } else {
        ln_sin(w.conj()).conj()
    }
}

/// Principal-branch-agnostic ln Γ(z); exp(ln_gamma_c(z)) == Γ(z).
pub fn ln_gamma_c(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        return Complex64::new(LN_PI, 0.0) - ln_sin(PI * z) - ln_gamma_c(1.0 - z);
    }
    let z = z - 1.0;
    let mut acc = Complex64::new(LANCZOS[0], 0.0);
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += *c / (z + k as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

pub fn gamma_c(z: Complex64) -> Complex64 {
    ln_gamma_c(z).exp()
}

const TOL: f64 = 1e-16;
const MAX_TERMS: usize = 20_000;

// Σ_{n>=0} x^n / (ν(ν+1)...(ν+n)); γ(ν, x) = x^ν e^{-x} times this.
fn lower_series_c(nu: Complex64, x: f64) -> Result<Complex64> {
    let mut term = 1.0 / nu;
    let mut sum = term;
    let mut den = nu;
    for _ in 0..MAX_TERMS {
        den += 1.0;
        term *= x / den;
        sum += term;
        if term.norm() <= TOL * sum.norm() {
            return Ok(sum);
        }
    }
    Err(Error::Convergence(format!("complex lower gamma series at nu={nu}, x={x}")))
}

// h with Γ(ν, x) = e^{-x} x^ν h, by modified Lentz.
fn upper_fraction_c(nu: Complex64, x: f64) -> Result<Complex64> {
    // complex division squares the modulus, so the guard stays well above 1e-300
    let tiny = Complex64::new(1e-150, 0.0);
    let mut b = x + 1.0 - nu;
    let mut c = Complex64::new(1e150, 0.0);
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -(i as f64) * (i as f64 - nu);
        b += 2.0;
        d = an * d + b;
        if d.norm() < 1e-150 {
            d = tiny;
        }
        c = b + an / c;
        if c.norm() < 1e-150 {
            c = tiny;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).norm() < 4.0 * f64::EPSILON {
            return Ok(h);
        }
    }
    Err(Error::Convergence(format!("complex upper gamma fraction at nu={nu}, x={x}")))
}

fn use_fraction(nu: Complex64, x: f64) -> bool {
    x > 2.0 && x > 0.5 * nu.re
}

/// γ(ν, x) for Re ν > 0 and real x >= 0.
pub fn lower_gamma_c(nu: Complex64, x: f64) -> Result<Complex64> {
    if x == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if use_fraction(nu, x) && x > 40.0 {
        let h = upper_fraction_c(nu, x)?;
        return Ok(gamma_c(nu) - (nu * x.ln() - x).exp() * h);
    }
    Ok((nu * x.ln() - x).exp() * lower_series_c(nu, x)?)
}

/// e^x Γ(ν, x) for real x > 0 and any complex ν.
pub fn upper_gamma_scaled_c(nu: Complex64, x: f64) -> Result<Complex64> {
    if !(x > 0.0) {
        return Err(Error::Validation(format!("scaled upper gamma needs x > 0, got {x}")));
    }
    if use_fraction(nu, x) {
        return Ok((nu * x.ln()).exp() * upper_fraction_c(nu, x)?);
    }
    Ok(x.exp() * gamma_c(nu) - (nu * x.ln()).exp() * lower_series_c(nu, x)?)
}

/// γ(ν, x) / x^ν, which stays bounded for the Mellin-Barnes integrands.
pub fn lower_gamma_over_power(nu: Complex64, x: f64) -> Result<Complex64> {
    if !(x > 0.0) {
        return Err(Error::Validation(format!("needs x > 0, got {x}")));
    }
    if use_fraction(nu, x) && x > 40.0 {
        let h = upper_fraction_c(nu, x)?;
        return Ok(gamma_c(nu) * (-nu * x.ln()).exp() - (-x as f64).exp() * h);
    }
    Ok((-x as f64).exp() * lower_series_c(nu, x)?)
}

/// e^x Γ(ν, x) / x^ν.
pub fn upper_gamma_scaled_over_power(nu: Complex64, x: f64) -> Result<Complex64> {
    if !(x > 0.0) {
        return Err(Error::Validation(format!("needs x > 0, got {x}")));
    }
    if use_fraction(nu, x) {
        return upper_fraction_c(nu, x);
    }
    Ok((ln_gamma_c(nu) + x - nu * x.ln()).exp() - lower_series_c(nu, x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gamma::{ln_gamma, upper_gamma_scaled};

    #[test]
    fn real_axis_agrees_with_real_lgamma() {
        for &x in &[0.1, 0.5, 1.0, 2.5, 7.3, 40.0] {
            let v = ln_gamma_c(Complex64::new(x, 0.0));
            assert!((v.re - ln_gamma(x)).abs() < 1e-13 * ln_gamma(x).abs().max(1.0));
        }
    }

    #[test]
    fn modulus_on_imaginary_axis() {
        // |Γ(iy)|^2 = π / (y sinh πy)
        for &y in &[0.3, 1.0, 5.0, 30.0, 120.0] {
            let g = ln_gamma_c(Complex64::new(0.0, y));
            let expect = 0.5 * (PI / (y * (PI * y).sinh())).ln();
            assert!((g.re - expect).abs() < 1e-12 * expect.abs().max(1.0), "y={y}");
        }
    }

    #[test]
    fn recurrence_holds_off_axis() {
        let z = Complex64::new(-2.3, 4.1);
        let lhs = gamma_c(z + 1.0);
        let rhs = z * gamma_c(z);
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm());
    }

    #[test]
    fn incomplete_pair_sums_to_gamma() {
        for &(re, im, x) in &[(0.7, 0.0, 0.5), (1.3, 3.0, 4.0), (2.5, -7.0, 12.0), (0.2, 15.0, 60.0)] {
            let nu = Complex64::new(re, im);
            let lower = lower_gamma_c(nu, x).unwrap();
            let upper = upper_gamma_scaled_c(nu, x).unwrap() * (-x as f64).exp();
            let g = gamma_c(nu);
            assert!((lower + upper - g).norm() < 1e-12 * (lower.norm() + upper.norm()), "{nu} {x}");
        }
    }

    #[test]
    fn scaled_upper_matches_real_version() {
        for &(a, x) in &[(0.5, 3.0), (3.0, 0.7), (6.0, 50.0)] {
            let c = upper_gamma_scaled_c(Complex64::new(a, 0.0), x).unwrap();
            let r = upper_gamma_scaled(a, x).unwrap();
            assert!((c.re - r).abs() < 1e-12 * r && c.im.abs() < 1e-12 * r);
        }
    }
}
