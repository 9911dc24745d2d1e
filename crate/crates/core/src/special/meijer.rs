//! Meijer G-function of real parameters and positive real argument.
//!
//! The workhorse is the Mellin-Barnes integral along a vertical line that
//! separates the two pole families, discretised with the trapezoid rule
//! (exponentially convergent for an integrand analytic in a strip). A residue
//! series is available as an independent cross-check when the right-hand
//! poles are simple and well separated.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::complex::ln_gamma_c;
use super::gamma::{gamma, ln_factorial, ln_gamma_signed, lower_gamma};
use crate::{Error, Result};

/// G^{m,n}_{p,q}[z | a; b] with p = a.len(), q = b.len().
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeijerGSpec {
    pub m: usize,
    pub n: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Contour,
    ResidueSeries,
    IdentityShortcut,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub method_used: Method,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodChoice {
    Auto,
    Contour,
    Residue,
}

#[derive(Debug, Clone, Copy)]
pub struct MeijerOptions {
    pub method: MethodChoice,
    pub rel_tol: f64,
    /// The result is multiplied by exp(ln_prefactor) inside the integrand,
    /// so huge or tiny scale factors never over/underflow on their own.
    pub ln_prefactor: f64,
}

impl Default for MeijerOptions {
    fn default() -> Self {
        MeijerOptions {
            method: MethodChoice::Auto,
            rel_tol: 1e-10,
            ln_prefactor: 0.0,
        }
    }
}

const MIN_GAP: f64 = 1e-6;
const RESIDUE_GAP: f64 = 1e-3;

impl MeijerGSpec {
    pub fn new(m: usize, n: usize, a: Vec<f64>, b: Vec<f64>, z: f64) -> Result<Self> {
        let spec = MeijerGSpec { m, n, a, b, z };
        spec.validate()?;
        Ok(spec)
    }

    pub fn p(&self) -> usize {
        self.a.len()
    }

    pub fn q(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.m > self.q() || self.n > self.p() {
            return Err(Error::Validation(format!(
                "Meijer G needs m <= q and n <= p (m={}, n={}, p={}, q={})",
                self.m,
                self.n,
                self.p(),
                self.q()
            )));
        }
        if !(self.z > 0.0) || !self.z.is_finite() {
            return Err(Error::Validation(format!("Meijer G argument must be positive, got {}", self.z)));
        }
        if self.a.iter().chain(self.b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Validation("Meijer G parameters must be finite".into()));
        }
        if self.m + self.n == 0 {
            return Err(Error::Validation("Meijer G needs m + n > 0".into()));
        }
        Ok(())
    }

    /// δ = m + n - (p + q)/2; the contour integral converges for δ > 0.
    pub fn delta(&self) -> f64 {
        (self.m + self.n) as f64 - 0.5 * (self.p() + self.q()) as f64
    }

    /// Open strip (lo, hi) of Re s free of poles: right of every Γ(1 - a_j + s),
    /// left of every Γ(b_j - s).
    fn strip(&self) -> (f64, f64) {
        let lo = self.a[..self.n].iter().map(|a| a - 1.0).fold(f64::NEG_INFINITY, f64::max);
        let hi = self.b[..self.m].iter().copied().fold(f64::INFINITY, f64::min);
        (lo, hi)
    }

    fn ln_kernel(&self, s: Complex64) -> Complex64 {
        let mut acc = s * self.z.ln();
        for (j, &b) in self.b.iter().enumerate() {
            if j < self.m {
                acc += ln_gamma_c(b - s);
            } else {
                acc -= ln_gamma_c(1.0 - b + s);
            }
        }
        for (j, &a) in self.a.iter().enumerate() {
            if j < self.n {
                acc += ln_gamma_c(1.0 - a + s);
            } else {
                acc -= ln_gamma_c(a - s);
            }
        }
        acc
    }
}

/// Choice of abscissa c and pole distance d for a pole-free strip (lo, hi).
pub(crate) fn place_contour(lo: f64, hi: f64, ln_z: f64) -> Result<(f64, f64)> {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            let gap = hi - lo;
            if gap < MIN_GAP {
                return Err(Error::UnseparableContour { gap });
            }
            if gap <= 1.0 || ln_z.abs() < 1.0 {
                return Ok((0.5 * (lo + hi), 0.5 * gap));
            }
            // wide strip: lean towards the side where |z^c| is smaller
            let d = (0.25 * gap).max(0.5);
            if ln_z < 0.0 {
                Ok((hi - d, d))
            } else {
                Ok((lo + d, d))
            }
        }
        (false, true) => {
            let shift = if ln_z > 0.0 { 0.25 * ln_z.min(8.0) } else { 0.0 };
            let c = hi - 0.5 - shift;
            Ok((c, hi - c))
        }
        (true, false) => {
            let shift = if ln_z < 0.0 { 0.25 * (-ln_z).min(8.0) } else { 0.0 };
            let c = lo + 0.5 + shift;
            Ok((c, c - lo))
        }
        (false, false) => Ok((0.0, 1.0)),
    }
}

/// Abscissa at the minimum of |f| on the real segment of the strip, which
/// is the saddle of a log-convex integrand and minimises cancellation on the
/// vertical line. Falls back to the bounds-only placement when the real
/// profile is not finite.
pub(crate) fn saddle_contour<F>(ln_f: &F, lo: f64, hi: f64, ln_z: f64) -> Result<(f64, f64)>
where
    F: Fn(Complex64) -> Complex64,
{
    const REACH: f64 = 60.0;
    let gap = hi - lo;
    if gap < MIN_GAP {
        return Err(Error::UnseparableContour { gap });
    }
    let margin = (0.25 * gap).min(0.5);
    let (mut a, mut b) = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => (lo + margin, hi - margin),
        (false, true) => (hi - REACH, hi - margin),
        (true, false) => (lo + margin, lo + REACH),
        (false, false) => (-REACH, REACH),
    };
    let g = |c: f64| ln_f(Complex64::new(c, 0.0)).re;
    if !(g(a).is_finite() && g(b).is_finite() && g(0.5 * (a + b)).is_finite()) {
        return place_contour(lo, hi, ln_z);
    }
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut g1, mut g2) = (g(x1), g(x2));
    for _ in 0..80 {
        if !(g1.is_finite() && g2.is_finite()) {
            return place_contour(lo, hi, ln_z);
        }
        if g1 <= g2 {
            b = x2;
            x2 = x1;
            g2 = g1;
            x1 = b - r * (b - a);
            g1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            g1 = g2;
            x2 = a + r * (b - a);
            g2 = g(x2);
        }
        if b - a < 1e-6 {
            break;
        }
    }
    let c = 0.5 * (a + b);
    Ok((c, (c - lo).min(hi - c)))
}

/// (1/2πi) ∫_{c-i∞}^{c+i∞} exp(ln_f(s)) ds for an integrand with
/// f(conj s) = conj f(s). Returns (value, error estimate, node count).
pub(crate) fn vertical_line_integral<F>(ln_f: F, c: f64, d: f64, ln_z_abs: f64, rel_tol: f64) -> Result<(f64, f64, usize)>
where
    F: Fn(Complex64) -> Complex64,
{
    let dd = 0.75 * d.min(2.0);
    let mut h = (2.0 * PI * dd / (36.0 + dd * ln_z_abs)).min(0.5);
    let mut total_nodes = 0;
    for _ in 0..6 {
        let (s_h, s_2h, l1, trunc, nodes) = trapezoid(&ln_f, c, h)?;
        total_nodes += nodes;
        let diff = (s_h - s_2h).abs();
        let noise = 64.0 * f64::EPSILON * l1;
        let disc = if l1 > 0.0 { diff * diff / l1 } else { 0.0 };
        let target = (rel_tol * s_h.abs()).max(noise);
        if disc <= target || diff <= noise {
            return Ok((s_h, disc + noise + trunc, total_nodes));
        }
        h *= 0.5;
    }
    Err(Error::Precision {
        achieved: h,
        target: rel_tol,
    })
}

fn trapezoid<F>(ln_f: &F, c: f64, h: f64) -> Result<(f64, f64, f64, f64, usize)>
where
    F: Fn(Complex64) -> Complex64,
{
    const MAX_NODES: usize = 400_000;
    let mut sum_h = 0.0;
    let mut sum_2h = 0.0;
    let mut l1 = 0.0;
    let mut peak: f64 = 0.0;
    let mut quiet = 0;
    let mut tail = 0.0;
    for j in 0..MAX_NODES {
        let t = j as f64 * h;
        let lf = ln_f(Complex64::new(c, t));
        let (re, mag) = if lf.re == f64::NEG_INFINITY {
            (0.0, 0.0)
        } else {
            let v = lf.exp();
            (v.re, v.norm())
        };
        if !mag.is_finite() || re.is_nan() {
            return Err(Error::Range(format!("contour integrand not finite at t={t}")));
        }
        let w = if j == 0 { 0.5 } else { 1.0 };
        sum_h += w * re;
        if j % 2 == 0 {
            sum_2h += w * re;
        }
        l1 += w * mag;
        peak = peak.max(mag);
        if mag < 1e-18 * peak {
            quiet += 1;
            tail += mag;
        } else {
            quiet = 0;
            tail = 0.0;
        }
        if quiet >= 32 && j >= 64 {
            let k = h / PI;
            return Ok((k * sum_h, 2.0 * k * sum_2h, k * l1, k * tail, j + 1));
        }
    }
    Err(Error::Convergence("contour integrand did not decay".into()))
}

fn contour(spec: &MeijerGSpec, opts: &MeijerOptions) -> Result<EvalResult> {
    if spec.delta() <= 0.0 {
        return Err(Error::Convergence(format!(
            "contour integral needs m + n > (p + q)/2 (delta = {})",
            spec.delta()
        )));
    }
    let (lo, hi) = spec.strip();
    let ln_z = spec.z.ln();
    let pre = opts.ln_prefactor;
    let kernel = |s| spec.ln_kernel(s) + pre;
    let (c, d) = saddle_contour(&kernel, lo, hi, ln_z)?;
    let (value, err, _) = vertical_line_integral(kernel, c, d, ln_z.abs(), opts.rel_tol)?;
    Ok(EvalResult {
        value,
        abs_error_estimate: err,
        method_used: Method::Contour,
    })
}

/// Contour value at a fixed trapezoid step `h` on the automatically placed
/// line. The error estimate compares steps h and 2h and includes the
/// rounding floor 64 ε ∫|f|.
pub fn contour_at_step(spec: &MeijerGSpec, h: f64) -> Result<EvalResult> {
    spec.validate()?;
    if !(h > 0.0) {
        return Err(Error::Validation(format!("contour step must be positive, got {h}")));
    }
    let (lo, hi) = spec.strip();
    let ln_z = spec.z.ln();
    let kernel = |s| spec.ln_kernel(s);
    let (c, _) = saddle_contour(&kernel, lo, hi, ln_z)?;
    let (s_h, s_2h, l1, trunc, _) = trapezoid(&kernel, c, h)?;
    let diff = (s_h - s_2h).abs();
    let disc = if l1 > 0.0 { diff * diff / l1 } else { 0.0 };
    Ok(EvalResult {
        value: s_h,
        abs_error_estimate: disc + 64.0 * f64::EPSILON * l1 + trunc,
        method_used: Method::Contour,
    })
}

fn frac_distance(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Sum of residues at b_h + l, h < m. Needs simple poles: all b_j (j < m)
/// pairwise non-congruent mod 1 by at least 1e-3, and p < q or (p == q, z < 1).
pub fn residue_series(spec: &MeijerGSpec, ln_prefactor: f64) -> Result<EvalResult> {
    spec.validate()?;
    let (p, q, m, n) = (spec.p(), spec.q(), spec.m, spec.n);
    if p > q || (p == q && spec.z >= 1.0) {
        return Err(Error::Convergence("residue series diverges for this (p, q, z)".into()));
    }
    for i in 0..m {
        for j in (i + 1)..m {
            let gap = frac_distance(spec.b[i] - spec.b[j]);
            if gap < RESIDUE_GAP {
                return Err(Error::UnseparableContour { gap });
            }
        }
    }
    let ln_z = spec.z.ln();
    let mut total = 0.0;
    let mut mag = 0.0;
    for h in 0..m {
        let bh = spec.b[h];
        let mut quiet = 0;
        for l in 0..5000u32 {
            let lf = l as f64;
            let mut ln_abs = (bh + lf) * ln_z - ln_factorial(l) + ln_prefactor;
            let mut sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let mut zero = false;
            let mut accum = |x: f64, numerator: bool| {
                let (lg, sg) = ln_gamma_signed(x);
                if lg.is_infinite() {
                    if numerator {
                        return Err(Error::UnseparableContour { gap: 0.0 });
                    }
                    zero = true;
                    return Ok(());
                }
                sign *= sg;
                if numerator {
                    ln_abs += lg;
                } else {
                    ln_abs -= lg;
                }
                Ok(())
            };
            for (j, &bj) in spec.b.iter().enumerate() {
                if j == h {
                    continue;
                }
                if j < m {
                    accum(bj - bh - lf, true)?;
                } else {
                    accum(1.0 - bj + bh + lf, false)?;
                }
            }
            for (j, &aj) in spec.a.iter().enumerate() {
                if j < n {
                    accum(1.0 - aj + bh + lf, true)?;
                } else {
                    accum(aj - bh - lf, false)?;
                }
            }
            let term = if zero { 0.0 } else { sign * ln_abs.exp() };
            if !term.is_finite() {
                return Err(Error::Range("residue term overflow".into()));
            }
            total += term;
            mag = f64::max(mag, term.abs());
            if term.abs() <= 1e-17 * total.abs().max(1e-300) || term == 0.0 && l > 8 {
                quiet += 1;
                if quiet >= 4 && l > 4 {
                    break;
                }
            } else {
                quiet = 0;
            }
            if l == 4999 {
                return Err(Error::Convergence("residue series did not converge".into()));
            }
        }
    }
    Ok(EvalResult {
        value: total,
        abs_error_estimate: 64.0 * f64::EPSILON * mag,
        method_used: Method::ResidueSeries,
    })
}

fn identity(spec: &MeijerGSpec, ln_prefactor: f64) -> Option<EvalResult> {
    let z = spec.z;
    let scale = ln_prefactor.exp();
    let value = match (spec.m, spec.n, spec.p(), spec.q()) {
        (1, 0, 0, 1) => (spec.b[0] * z.ln() - z).exp(),
        (1, 1, 1, 1) => {
            let (a, b) = (spec.a[0], spec.b[0]);
            gamma(1.0 - a + b) * (b * z.ln() + (a - b - 1.0) * z.ln_1p()).exp()
        }
        (1, 1, 1, 2) if spec.a[0] == 1.0 && spec.b[1] == 0.0 && spec.b[0] > 0.0 => lower_gamma(spec.b[0], z).ok()?,
        _ => return None,
    };
    if !value.is_finite() {
        return None;
    }
    Some(EvalResult {
        value: value * scale,
        abs_error_estimate: 8.0 * f64::EPSILON * (value * scale).abs(),
        method_used: Method::IdentityShortcut,
    })
}

pub fn meijer_g_with(spec: &MeijerGSpec, opts: &MeijerOptions) -> Result<EvalResult> {
    spec.validate()?;
    match opts.method {
        MethodChoice::Contour => contour(spec, opts),
        MethodChoice::Residue => residue_series(spec, opts.ln_prefactor),
        MethodChoice::Auto => match identity(spec, opts.ln_prefactor) {
            Some(r) => Ok(r),
            None => contour(spec, opts),
        },
    }
}

pub fn meijer_g(spec: &MeijerGSpec) -> Result<EvalResult> {
    meijer_g_with(spec, &MeijerOptions::default())
}

/// exp(ln_prefactor) · G, with the factor applied inside the integrand.
pub fn meijer_g_scaled(spec: &MeijerGSpec, ln_prefactor: f64) -> Result<EvalResult> {
    meijer_g_with(
        spec,
        &MeijerOptions {
            ln_prefactor,
            ..MeijerOptions::default()
        },
    )
}

/// Shorthand returning only the value.
pub fn g(m: usize, n: usize, a: &[f64], b: &[f64], z: f64) -> Result<f64> {
    Ok(meijer_g(&MeijerGSpec::new(m, n, a.to_vec(), b.to_vec(), z)?)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn contour_only(spec: &MeijerGSpec) -> EvalResult {
        meijer_g_with(
            spec,
            &MeijerOptions {
                method: MethodChoice::Contour,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn exponential() {
        for &z in &[0.01, 0.5, 2.0, 9.0] {
            let spec = MeijerGSpec::new(1, 0, vec![], vec![0.0], z).unwrap();
            let r = contour_only(&spec);
            assert!((r.value - (-z as f64).exp()).abs() < 1e-12, "z={z}: {}", r.value);
        }
    }

    #[test]
    fn power_binomial() {
        // G^{1,1}_{1,1}[z | 1-a; 0] = Γ(a) (1+z)^{-a}
        for &(a, z) in &[(0.5, 0.3), (2.0, 1.7), (3.5, 12.0)] {
            let spec = MeijerGSpec::new(1, 1, vec![1.0 - a], vec![0.0], z).unwrap();
            let r = contour_only(&spec);
            let expect = gamma(a) * (1.0 + z as f64).powf(-a);
            assert!((r.value - expect).abs() < 1e-11 * expect, "a={a} z={z}");
        }
    }

    #[test]
    fn unseparable_contour_reported() {
        // a_1 - 1 = 2 > b_1 = 1: the pole families interleave
        let spec = MeijerGSpec::new(1, 1, vec![3.0], vec![1.0], 0.5).unwrap();
        let err = meijer_g_with(
            &spec,
            &MeijerOptions {
                method: MethodChoice::Contour,
                ..Default::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnseparableContour { .. }));
    }

    #[test]
    fn residue_matches_contour() {
        let spec = MeijerGSpec::new(3, 0, vec![2.21], vec![1.21, 2.902, 2.51], 0.8).unwrap();
        let c = contour_only(&spec);
        let r = residue_series(&spec, 0.0).unwrap();
        assert!((c.value - r.value).abs() < 1e-11 * c.value.abs());
    }

    #[test]
    fn scaled_variant_applies_prefactor() {
        let spec = MeijerGSpec::new(3, 0, vec![2.21], vec![1.21, 2.902, 2.51], 3.0).unwrap();
        let plain = meijer_g(&spec).unwrap().value;
        let scaled = meijer_g_scaled(&spec, 700.0).unwrap().value;
        assert!((scaled / plain / 700f64.exp() - 1.0).abs() < 1e-12);
    }
}
