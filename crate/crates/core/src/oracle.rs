//! Reference values by direct adaptive quadrature of the defining integrals.
//!
//! Only the three hop laws are used: the FSO PDF/CDF, the Gamma laws of the
//! RF hops, and nothing from the closed forms in `analytic`/`asymptotic`.
//! Inner integrals are tabulated once per term and interpolated by a fixed
//! Gauss-Legendre rule on the outer grid. With X = γ_SR, Y = γ_RD, Z = γ_RE
//! and φ3(u) = F_Z(u) - F_Z((u - T)/Θ):
//!   H11 = ∫_0^T f_X(x) ∫_0^x F_Z f_Y dy dx     H12 = S_X(T) ∫_0^T F_Z f_Y
//!   H13 = ∫_T^∞ f_X(x) ∫_T^x φ3 f_Y dy dx      H21 = ∫_0^T f_Y(y) ∫_0^y F_Z f_X dx dy
//!   H22 = S_Y(T) ∫_0^T F_Z f_X                 H23 = ∫_T^∞ f_Y(y) ∫_T^y φ3 f_X dx dy
//!   1 - ϱ = ∫_0^∞ (1 - S_X S_Y)(z) f_Z(z) dz.
//! The power-law laws of the high-SNR analysis are not normalisable, so for
//! them H13 and H23 are taken in the reordered single-integral form with the
//! tail mass S = 1 - F∞.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asymptotic::AsymptoticModel;
use crate::channel::{FsoLink, Links, RfLink};
use crate::quad::{integrate, integrate_from_zero, Cumulative, QuadOptions, QuadResult};
use crate::special::{gamma_q, lower_gamma, upper_gamma};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadPolicy {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Subdivision depth; the interval budget of each adaptive run is 64 × max_depth.
    pub max_depth: usize,
    /// Probability mass left beyond the truncated upper limits.
    pub tail_cutoff: f64,
}

impl Default for QuadPolicy {
    fn default() -> Self {
        QuadPolicy {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_depth: 60,
            tail_cutoff: 1e-13,
        }
    }
}

impl QuadPolicy {
    pub fn validate(&self) -> Result<()> {
        crate::error::validate(self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.tail_cutoff > 0.0, || {
            "quadrature tolerances must be positive".into()
        })?;
        crate::error::validate(self.max_depth >= 20, || format!("max_depth must be >= 20, got {}", self.max_depth))
    }

    pub fn halved(&self) -> Self {
        QuadPolicy {
            abs_tol: 0.5 * self.abs_tol,
            rel_tol: 0.5 * self.rel_tol,
            tail_cutoff: 0.5 * self.tail_cutoff,
            ..*self
        }
    }

    fn opts(&self) -> QuadOptions {
        QuadOptions {
            abs_tol: self.abs_tol,
            rel_tol: self.rel_tol,
            max_intervals: 64 * self.max_depth,
        }
    }

    fn inner_opts(&self) -> QuadOptions {
        QuadOptions {
            abs_tol: 0.1 * self.abs_tol,
            rel_tol: 0.1 * self.rel_tol,
            max_intervals: 64 * self.max_depth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleTerm {
    H11,
    H12,
    H13,
    H21,
    H22,
    H23,
    Varrho,
}

impl OracleTerm {
    pub const ALL: [OracleTerm; 7] = [
        OracleTerm::H11,
        OracleTerm::H12,
        OracleTerm::H13,
        OracleTerm::H21,
        OracleTerm::H22,
        OracleTerm::H23,
        OracleTerm::Varrho,
    ];
}

impl fmt::Display for OracleTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            OracleTerm::H11 => "h11",
            OracleTerm::H12 => "h12",
            OracleTerm::H13 => "h13",
            OracleTerm::H21 => "h21",
            OracleTerm::H22 => "h22",
            OracleTerm::H23 => "h23",
            OracleTerm::Varrho => "varrho",
        };
        f.write_str(s)
    }
}

impl FromStr for OracleTerm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        OracleTerm::ALL
            .iter()
            .copied()
            .find(|t| t.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown oracle term '{s}' (expected h11..h23 or varrho)")))
    }
}

/// The three hop laws as seen by the oracle. `s_*` is the mass beyond a
/// point, 1 - F.
pub trait Laws {
    fn t(&self) -> f64;
    fn theta(&self) -> f64;
    fn f_x(&self, x: f64) -> Result<f64>;
    fn s_x(&self, x: f64) -> Result<f64>;
    fn f_y(&self, y: f64) -> f64;
    fn s_y(&self, y: f64) -> f64;
    fn cdf_z(&self, z: f64) -> Result<f64>;
    fn pdf_z(&self, z: f64) -> f64;
    /// Points beyond which the integrands of the semi-infinite terms carry
    /// less than `mass`.
    fn x_cutoff(&self, mass: f64) -> Result<f64>;
    fn y_cutoff(&self, mass: f64) -> Result<f64>;
    fn z_cutoff(&self, mass: f64) -> Result<f64>;
    /// Whether X and Y are proper distributions.
    fn normalised(&self) -> bool;

    fn phi3(&self, u: f64) -> Result<f64> {
        let shifted = (u - self.t()) / self.theta();
        Ok(self.cdf_z(u)? - if shifted > 0.0 { self.cdf_z(shifted)? } else { 0.0 })
    }
}

fn gamma_cutoff(tau: f64, lambda: f64, mass: f64) -> Result<f64> {
    let mut y = (tau + 1.0) / lambda;
    for _ in 0..200 {
        if gamma_q(tau, lambda * y)? < mass {
            return Ok(y);
        }
        y *= 1.5;
    }
    Err(Error::Convergence("gamma tail cutoff not found".into()))
}

fn gamma_pdf(tau: u32, lambda: f64, x: f64) -> f64 {
    RfLink {
        tau,
        lambda,
        omega: 1.0,
        phi: lambda,
    }
    .pdf(x)
}

pub struct ExactLaws<'a> {
    pub links: &'a Links,
}

impl Laws for ExactLaws<'_> {
    fn t(&self) -> f64 {
        self.links.t
    }
    fn theta(&self) -> f64 {
        self.links.theta
    }
    fn f_x(&self, x: f64) -> Result<f64> {
        self.links.sr.pdf(x)
    }
    fn s_x(&self, x: f64) -> Result<f64> {
        self.links.sr.survival(x)
    }
    fn f_y(&self, y: f64) -> f64 {
        self.links.rd.pdf(y)
    }
    fn s_y(&self, y: f64) -> f64 {
        self.links.rd.survival(y)
    }
    fn cdf_z(&self, z: f64) -> Result<f64> {
        Ok(self.links.re.cdf(z))
    }
    fn pdf_z(&self, z: f64) -> f64 {
        self.links.re.pdf(z)
    }
    fn x_cutoff(&self, mass: f64) -> Result<f64> {
        let sr: &FsoLink = &self.links.sr;
        let mut x = self.t().max(sr.omega);
        for _ in 0..200 {
            if sr.survival(x)? < mass {
                return Ok(x);
            }
            x *= 2.0;
        }
        Err(Error::Convergence("FSO tail cutoff not found".into()))
    }
    fn y_cutoff(&self, mass: f64) -> Result<f64> {
        let rd = &self.links.rd;
        Ok(gamma_cutoff(rd.tau as f64, rd.lambda, mass)?.max(self.t() * 1.01))
    }
    fn z_cutoff(&self, mass: f64) -> Result<f64> {
        let re = &self.links.re;
        gamma_cutoff(re.tau as f64, re.lambda, mass)
    }
    fn normalised(&self) -> bool {
        true
    }
}

pub struct AsymptoticLaws<'a> {
    pub model: &'a AsymptoticModel,
}

impl Laws for AsymptoticLaws<'_> {
    fn t(&self) -> f64 {
        self.model.t
    }
    fn theta(&self) -> f64 {
        self.model.theta
    }
    fn f_x(&self, x: f64) -> Result<f64> {
        Ok(self.model.fso_pdf(x))
    }
    fn s_x(&self, x: f64) -> Result<f64> {
        Ok(1.0 - self.model.fso_cdf(x))
    }
    fn f_y(&self, y: f64) -> f64 {
        self.model.rf_pdf(y)
    }
    fn s_y(&self, y: f64) -> f64 {
        1.0 - self.model.rf_cdf(y)
    }
    fn cdf_z(&self, z: f64) -> Result<f64> {
        self.model.re_cdf(z)
    }
    fn pdf_z(&self, z: f64) -> f64 {
        gamma_pdf(self.model.tau_e, self.model.lambda_e, z)
    }
    // The semi-infinite integrands decay through φ3 or f_Z only; the extra
    // shape accounts for the polynomial growth of the power laws.
    fn x_cutoff(&self, mass: f64) -> Result<f64> {
        let m = self.model;
        let grow = m.tau_d as f64 + m.k2.iter().cloned().fold(0.0, f64::max) + 2.0;
        Ok(m.t + m.theta * gamma_cutoff(m.tau_e as f64 + grow, m.lambda_e, mass)?)
    }
    fn y_cutoff(&self, mass: f64) -> Result<f64> {
        self.x_cutoff(mass)
    }
    fn z_cutoff(&self, mass: f64) -> Result<f64> {
        let m = self.model;
        let grow = m.tau_d as f64 + m.k2.iter().cloned().fold(0.0, f64::max) + 2.0;
        gamma_cutoff(m.tau_e as f64 + grow, m.lambda_e, mass)
    }
    fn normalised(&self) -> bool {
        false
    }
}

/// Adaptive integral over [a, b] with breakpoints clustered towards a,
/// where the integrands of this module concentrate.
fn integrate_peaked<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult> {
    let mut out = QuadResult::zero();
    if !(b > a) {
        return Ok(out);
    }
    let mut edges = vec![b];
    let mut w = b - a;
    for _ in 0..24 {
        w *= 0.5;
        edges.push(a + w);
    }
    edges.push(a);
    edges.reverse();
    let piece = QuadOptions {
        abs_tol: opts.abs_tol / edges.len() as f64,
        ..*opts
    };
    for e in edges.windows(2) {
        out.add(integrate(&f, e[0], e[1], &piece)?);
    }
    Ok(out)
}

/// Runs `f` against a closure that may fail; the first failure is returned
/// after the quadrature completes.
fn guarded<G: Fn(f64) -> Result<f64>>(g: G) -> (impl Fn(f64) -> f64, std::rc::Rc<std::cell::RefCell<Option<Error>>>) {
    let slot = std::rc::Rc::new(std::cell::RefCell::new(None));
    let s2 = slot.clone();
    let f = move |x: f64| match g(x) {
        Ok(v) => v,
        Err(e) => {
            s2.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    (f, slot)
}

fn finish(r: Result<QuadResult>, slot: &std::cell::RefCell<Option<Error>>) -> Result<QuadResult> {
    if let Some(e) = slot.borrow_mut().take() {
        return Err(e);
    }
    r
}

fn knot_start(lo: f64, span: f64) -> f64 {
    lo + 1e-4 * span
}

/// Quadrature engine over one set of laws.
pub struct Oracle<'l, L: Laws> {
    pub laws: &'l L,
    pub policy: QuadPolicy,
}

impl<'l, L: Laws> Oracle<'l, L> {
    pub fn new(laws: &'l L, policy: QuadPolicy) -> Result<Self> {
        policy.validate()?;
        Ok(Oracle { laws, policy })
    }

    fn t(&self) -> f64 {
        self.laws.t()
    }

    /// ∫_0^T F_Z f_Y, the inner integral of H11/H12 at its upper end.
    fn a_at(&self, x: f64) -> Result<f64> {
        let l = self.laws;
        let (g, slot) = guarded(|y| Ok(l.cdf_z(y)? * l.f_y(y)));
        Ok(finish(integrate_from_zero(g, x, &self.policy.inner_opts()), &slot)?.value)
    }

    pub fn h11(&self) -> Result<QuadResult> {
        let t = self.t();
        if t <= 0.0 {
            return Ok(QuadResult::zero());
        }
        let l = self.laws;
        let (g, slot) = guarded(|y| Ok(l.cdf_z(y)? * l.f_y(y)));
        let inner = Cumulative::build(g, 0.0, knot_start(0.0, t), t, 1.2, &self.policy.inner_opts())?;
        if let Some(e) = slot.borrow_mut().take() {
            return Err(e);
        }
        let (h, slot2) = guarded(|x| Ok(l.f_x(x)? * inner.value_at(x)?));
        finish(integrate_from_zero(h, t, &self.policy.opts()), &slot2)
    }

    pub fn h12(&self) -> Result<QuadResult> {
        let t = self.t();
        if t <= 0.0 {
            return Ok(QuadResult::zero());
        }
        let v = self.laws.s_x(t)? * self.a_at(t)?;
        Ok(QuadResult {
            value: v,
            error: self.policy.abs_tol,
            evals: 0,
        })
    }

    /// H13 as the double integral over f_X on the outside; normalised laws only.
    pub fn h13_double(&self) -> Result<QuadResult> {
        let t = self.t();
        if t <= 0.0 {
            return Ok(QuadResult::zero());
        }
        if !self.laws.normalised() {
            return Err(Error::Validation("double-integral H13 needs normalised laws".into()));
        }
        let l = self.laws;
        let ymax = l.y_cutoff(self.policy.tail_cutoff)?;
        let xmax = l.x_cutoff(self.policy.tail_cutoff)?;
        let (g, slot) = guarded(|y| Ok(l.phi3(y)? * l.f_y(y)));
        let inner = Cumulative::build(g, t, knot_start(t, ymax - t), ymax, 1.2, &self.policy.inner_opts())?;
        if let Some(e) = slot.borrow_mut().take() {
            return Err(e);
        }
        let (h, slot2) = guarded(|x| Ok(l.f_x(x)? * inner.value_at(x)?));
        let mut r = finish(integrate_peaked(h, t, xmax, &self.policy.opts()), &slot2)?;
        // beyond xmax the inner integral is at most its total
        let tail = l.s_x(xmax)? * inner.total();
        r.value += tail;
        r.error += tail.abs();
        Ok(r)
    }

    /// H13 with the order exchanged: ∫_T^∞ φ3(y) f_Y(y) S_X(y) dy.
    pub fn h13_reordered(&self) -> Result<QuadResult> {
        let t = self.t();
        if t <= 0.0 {
            return Ok(QuadResult::zero());
        }
        let l = self.laws;
        let ymax = l.y_cutoff(self.policy.tail_cutoff)?;
        let (h, slot) = guarded(|y| Ok(l.phi3(y)? * l.f_y(y) * l.s_x(y)?));
        let mut r = finish(integrate_peaked(h, t, ymax, &self.policy.opts()), &slot)?;
        r.error += self.policy.tail_cutoff;
        Ok(r)
    }

    pub fn h13(&self) -> Result<QuadResult> {
        if self.laws.normalised() {
            self.h13_double()
        } else {
            self.h13_reordered()
        }
    }

    fn c_table(&self) -> Result<(impl Fn(f64) -> Result<f64> + '_, QuadResult)> {
        let t = self.t();
        let l = self.laws;
        let (g, slot) = guarded(move |x| Ok(l.cdf_z(x)? * l.f_x(x)?));
        let table = Cumulative::build(g, 0.0, knot_start(0.0, t), t, 1.2, &self.policy.inner_opts())?;
        if let Some(e) = slot.borrow_mut().take() {
            return Err(e);
        }
        let total = QuadResult {
            value: table.total(),
            error: self.policy.abs_tol,
            evals: 0,
        };
        Ok((move |y: f64| table.value_at(y), total))
    }

    pub fn h21(&self) -> Result<QuadResult> {
        let t = self.t();
        if t <= 0.0 {
            return Ok(QuadResult::zero());
        }
        let l = self.laws;
        let (c, _) = self.c_table()?;
        let (h, slot) = guarded(|y| Ok(l.f_y(y) * c(y)?));
        finish(integrate_from_zero(h, t, &self.policy.opts()), &slot)
    }

    /// H21 with the order exchanged: ∫_0^T F_Z(x) f_X(x) (S_Y(x) - S_Y(T)) dx.
    pub fn h21_reordered(&self) -> Result<QuadResult> {
        let t = self.t();
        if t <= 0.0 {
            return Ok(QuadResult::zero());
        }
        let l = self.laws;
        let st = l.s_y(t);
        let (h, slot) = guarded(|x| Ok(l.cdf_z(x)? * l.f_x(x)? * (l.s_y(x) - st)));
        finish(integrate_from_zero(h, t, &self.policy.opts()), &slot)
    }

    pub fn h22(&self) -> Result<QuadResult> {
        let t = self.t();
        if t <= 0.0 {
            return Ok(QuadResult::zero());
        }
        let l = self.laws;
        let (g, slot) = guarded(|x| Ok(l.cdf_z(x)? * l.f_x(x)?));
        let mut r = finish(integrate_from_zero(g, t, &self.policy.opts()), &slot)?;
        let s = l.s_y(t);
        r.value *= s;
        r.error *= s.abs();
        Ok(r)
    }

    /// H23 as the double integral over f_Y on the outside; normalised laws only.
    pub fn h23_double(&self) -> Result<QuadResult> {
        let t = self.t();
        if t <= 0.0 {
            return Ok(QuadResult::zero());
        }
        if !self.laws.normalised() {
            return Err(Error::Validation("double-integral H23 needs normalised laws".into()));
        }
        let l = self.laws;
        let xmax = l.x_cutoff(self.policy.tail_cutoff)?;
        let ymax = l.y_cutoff(self.policy.tail_cutoff)?;
        let (g, slot) = guarded(|x| Ok(l.phi3(x)? * l.f_x(x)?));
        let inner = Cumulative::build(g, t, knot_start(t, xmax - t), xmax, 1.2, &self.policy.inner_opts())?;
        if let Some(e) = slot.borrow_mut().take() {
            return Err(e);
        }
        let (h, slot2) = guarded(|y| Ok(l.f_y(y) * inner.value_at(y)?));
        let mut r = finish(integrate_peaked(h, t, ymax, &self.policy.opts()), &slot2)?;
        let tail = l.s_y(ymax) * inner.total();
        r.value += tail;
        r.error += tail.abs();
        Ok(r)
    }

    /// H23 with the order exchanged: ∫_T^∞ φ3(x) f_X(x) S_Y(x) dx.
    pub fn h23_reordered(&self) -> Result<QuadResult> {
        let t = self.t();
        if t <= 0.0 {
            return Ok(QuadResult::zero());
        }
        let l = self.laws;
        let xmax = l.x_cutoff(self.policy.tail_cutoff)?;
        let (h, slot) = guarded(|x| Ok(l.phi3(x)? * l.f_x(x)? * l.s_y(x)));
        let mut r = finish(integrate_peaked(h, t, xmax, &self.policy.opts()), &slot)?;
        r.error += self.policy.tail_cutoff;
        Ok(r)
    }

    pub fn h23(&self) -> Result<QuadResult> {
        if self.laws.normalised() {
            self.h23_double()
        } else {
            self.h23_reordered()
        }
    }

    /// 1 - ϱ = E[F_eq,D(Z)] with F_eq,D = 1 - S_X S_Y (law of the minimum).
    pub fn one_minus_varrho(&self) -> Result<QuadResult> {
        let l = self.laws;
        let zmax = l.z_cutoff(self.policy.tail_cutoff)?;
        let (h, slot) = guarded(|z| Ok((1.0 - l.s_x(z)? * l.s_y(z)) * l.pdf_z(z)));
        let mut r = finish(integrate_peaked(h, 0.0, zmax, &self.policy.opts()), &slot)?;
        r.error += self.policy.tail_cutoff;
        Ok(r)
    }

    /// 1 - ϱ with F_eq,D expanded as F_X + F_Y - F_X F_Y.
    pub fn one_minus_varrho_expanded(&self) -> Result<QuadResult> {
        let l = self.laws;
        let zmax = l.z_cutoff(self.policy.tail_cutoff)?;
        let (h, slot) = guarded(|z| {
            let (fx, fy) = (1.0 - l.s_x(z)?, 1.0 - l.s_y(z));
            Ok((fx + fy - fx * fy) * l.pdf_z(z))
        });
        let mut r = finish(integrate_peaked(h, 0.0, zmax, &self.policy.opts()), &slot)?;
        r.error += self.policy.tail_cutoff;
        Ok(r)
    }

    pub fn varrho(&self) -> Result<QuadResult> {
        let r = self.one_minus_varrho()?;
        Ok(QuadResult {
            value: 1.0 - r.value,
            ..r
        })
    }

    pub fn term(&self, term: OracleTerm) -> Result<QuadResult> {
        match term {
            OracleTerm::H11 => self.h11(),
            OracleTerm::H12 => self.h12(),
            OracleTerm::H13 => self.h13(),
            OracleTerm::H21 => self.h21(),
            OracleTerm::H22 => self.h22(),
            OracleTerm::H23 => self.h23(),
            OracleTerm::Varrho => self.varrho(),
        }
    }

    /// SOP assembled from the oracle terms, with 1 - ϱ integrated directly.
    pub fn sop(&self) -> Result<OracleBreakdown> {
        let mut v = [0.0; 6];
        let mut err = 0.0;
        for (slot, term) in v.iter_mut().zip(&OracleTerm::ALL[..6]) {
            let r = self.term(*term)?;
            *slot = r.value;
            err += r.error;
        }
        let omv = self.one_minus_varrho()?;
        err += omv.error;
        Ok(OracleBreakdown {
            h11: v[0],
            h12: v[1],
            h13: v[2],
            h21: v[3],
            h22: v[4],
            h23: v[5],
            varrho: 1.0 - omv.value,
            sop: v.iter().sum::<f64>() + omv.value,
            error: err,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleBreakdown {
    pub h11: f64,
    pub h12: f64,
    pub h13: f64,
    pub h21: f64,
    pub h22: f64,
    pub h23: f64,
    pub varrho: f64,
    pub sop: f64,
    pub error: f64,
}

impl OracleBreakdown {
    pub fn get(&self, term: OracleTerm) -> f64 {
        match term {
            OracleTerm::H11 => self.h11,
            OracleTerm::H12 => self.h12,
            OracleTerm::H13 => self.h13,
            OracleTerm::H21 => self.h21,
            OracleTerm::H22 => self.h22,
            OracleTerm::H23 => self.h23,
            OracleTerm::Varrho => self.varrho,
        }
    }
}

/// One exact-law term of a scenario.
pub fn oracle_h_term(term: OracleTerm, links: &Links, policy: &QuadPolicy) -> Result<QuadResult> {
    let laws = ExactLaws { links };
    Oracle::new(&laws, *policy)?.term(term)
}

pub fn oracle_varrho(links: &Links, policy: &QuadPolicy) -> Result<QuadResult> {
    oracle_h_term(OracleTerm::Varrho, links, policy)
}

pub fn oracle_sop(links: &Links, policy: &QuadPolicy) -> Result<OracleBreakdown> {
    let laws = ExactLaws { links };
    Oracle::new(&laws, *policy)?.sop()
}

pub fn oracle_asymptotic_sop(model: &AsymptoticModel, policy: &QuadPolicy) -> Result<OracleBreakdown> {
    let laws = AsymptoticLaws { model };
    Oracle::new(&laws, *policy)?.sop()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "fn", rename_all = "snake_case")]
pub enum GIntegral {
    /// ∫_0^T Υ(α, βx) f_SR(x) dx
    G0 { alpha: f64, beta: f64 },
    /// ∫_0^T x^{z1-1} e^{-z2 x} G^{3,0}_{1,3}[B x^{1/r}] dx = (1/A) ∫_0^T x^{z1} e^{-z2 x} f_SR dx
    G1 { z1: f64, z2: f64 },
    /// ∫_T^∞ Υ(α, βx) f_SR(x) dx
    G2 { alpha: f64, beta: f64 },
    /// ∫_T^∞ y^{α+1} e^{-βy} f_SR(y) dy
    G3 { alpha: f64, beta: f64 },
    /// ψ1 of the high-SNR analysis, outer tail mass regularised
    Psi1 { c1: f64, c2: f64 },
    /// ∫_T^∞ y^{c1} e^{-c2 y} f∞_SR(y) dy
    Psi2 { c1: f64, c2: f64 },
}

/// Direct quadrature of one of the FSO-side helper integrals. The ψ
/// integrals use the power-law laws in `model`.
pub fn oracle_g(which: GIntegral, links: &Links, model: Option<&AsymptoticModel>, policy: &QuadPolicy) -> Result<f64> {
    policy.validate()?;
    let sr = &links.sr;
    let t = links.t;
    let opts = policy.opts();
    let exact = ExactLaws { links };
    let xmax = || exact.x_cutoff(policy.tail_cutoff);
    let run = |g: &dyn Fn(f64) -> Result<f64>, lo: f64, hi: f64, from_zero: bool| -> Result<f64> {
        let (f, slot) = guarded(g);
        let r = if from_zero {
            integrate_from_zero(f, hi, &opts)
        } else {
            integrate_peaked(f, lo, hi, &opts)
        };
        Ok(finish(r, &slot)?.value)
    };
    match which {
        GIntegral::G0 { alpha, beta } => run(&|x| Ok(lower_gamma(alpha, beta * x)? * sr.pdf(x)?), 0.0, t, true),
        GIntegral::G1 { z1, z2 } => {
            let v = run(&|x| Ok(x.powf(z1) * (-z2 * x).exp() * sr.pdf(x)?), 0.0, t, true)?;
            Ok(v / sr.big_a)
        }
        GIntegral::G2 { alpha, beta } => {
            let hi = xmax()?;
            let v = run(&|x| Ok(lower_gamma(alpha, beta * x)? * sr.pdf(x)?), t, hi, false)?;
            Ok(v + sr.survival(hi)? * crate::special::gamma(alpha))
        }
        GIntegral::G3 { alpha, beta } => {
            let hi = xmax()?;
            run(&|y| Ok(y.powf(alpha + 1.0) * (-beta * y).exp() * sr.pdf(y)?), t, hi, false)
        }
        GIntegral::Psi1 { c1, c2 } => {
            let m = model.ok_or_else(|| Error::Validation("psi1 needs the asymptotic model".into()))?;
            // ∫_T^∞ y^{c1} e^{-c2 y} f∞_RD(y) (1 - F∞_SR(y)) dy
            let laws = AsymptoticLaws { model: m };
            let hi = exponential_cutoff(c2, c1 + m.tau_d as f64 + 3.0, t, policy.tail_cutoff);
            run(&|y| Ok(y.powf(c1) * (-c2 * y).exp() * laws.f_y(y) * laws.s_x(y)?), t, hi, false)
        }
        GIntegral::Psi2 { c1, c2 } => {
            let m = model.ok_or_else(|| Error::Validation("psi2 needs the asymptotic model".into()))?;
            let hi = exponential_cutoff(c2, c1 + 3.0, t, policy.tail_cutoff);
            run(&|y| Ok(y.powf(c1) * (-c2 * y).exp() * m.fso_pdf(y)), t, hi, false)
        }
    }
}

fn exponential_cutoff(rate: f64, shape: f64, from: f64, mass: f64) -> f64 {
    let mut y = from.max(shape / rate);
    while upper_gamma(shape, rate * y).unwrap_or(0.0) > mass * 1e-3 && y < 1e12 {
        y *= 1.5;
    }
    y
}

/// FSO PDF at r = 1 from the Gamma-Gamma irradiance law (Bessel K) composed
/// with the pointing-error law, without Meijer-G functions:
/// f_V(v) = ξ² v^{ξ²-1} ∫_v^∞ w^{-ξ²} f_W(w) dw with
/// f_W(w) = 2 w^{(a+b)/2-1} K_{a-b}(2√w) / (Γ(a)Γ(b)), and f_SR(γ) = B f_V(Bγ).
pub fn fso_pdf_bessel(link: &FsoLink, gamma: f64) -> Result<f64> {
    if link.r != 1 {
        return Err(Error::Validation("Bessel cross-check is for heterodyne detection".into()));
    }
    let v = link.big_b * gamma;
    let (a, b, xi2) = (link.a, link.b, link.xi2);
    let norm = 2.0 / (crate::special::gamma(a) * crate::special::gamma(b));
    let (g, slot) = guarded(|w: f64| {
        let k = crate::special::bessel_k_integral(a - b, 2.0 * w.sqrt())?;
        Ok(norm * w.powf(0.5 * (a + b) - 1.0 - xi2) * k)
    });
    let opts = QuadOptions {
        abs_tol: 1e-300,
        rel_tol: 1e-11,
        max_intervals: 4000,
    };
    let inner = finish(crate::quad::integrate_to_infinity(g, v, v.max(1.0), &opts), &slot)?;
    Ok(link.big_b * xi2 * v.powf(xi2 - 1.0) * inner.value)
}

/// Quadrature of the exact SR CDF as a cross-check of the closed form.
pub fn fso_cdf_quadrature(link: &FsoLink, gamma: f64) -> Result<f64> {
    let (f, slot) = guarded(|x| link.pdf(x));
    Ok(finish(integrate_from_zero(f, gamma, &QuadOptions::default()), &slot)?.value)
}

/// RF CDF by quadrature of the Gamma PDF.
pub fn rf_cdf_quadrature(link: &RfLink, y: f64) -> Result<f64> {
    Ok(integrate_from_zero(|x| link.pdf(x), y, &QuadOptions::default())?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::fig_base;

    fn links(r: u32, omega_sr_db: f64, rs: f64) -> Links {
        let mut s = fig_base();
        s.fso.r = r;
        s.fso.omega_sr_db = omega_sr_db;
        s.rs_nats = rs;
        s.links().unwrap()
    }

    #[test]
    fn zero_rate_terms_vanish() {
        let l = links(1, 15.0, 0.0);
        for term in &OracleTerm::ALL[..6] {
            assert_eq!(oracle_h_term(*term, &l, &QuadPolicy::default()).unwrap().value, 0.0);
        }
    }

    #[test]
    fn exchange_of_order_identities() {
        for (r, rs) in [(1, 0.1), (2, 0.5)] {
            let l = links(r, 15.0, rs);
            let laws = ExactLaws { links: &l };
            let o = Oracle::new(&laws, QuadPolicy::default()).unwrap();
            let (a, b) = (o.h13_double().unwrap().value, o.h13_reordered().unwrap().value);
            assert!((a - b).abs() < 1e-8, "h13 {a} {b}");
            let (a, b) = (o.h23_double().unwrap().value, o.h23_reordered().unwrap().value);
            assert!((a - b).abs() < 1e-8, "h23 {a} {b}");
            let (a, b) = (o.h21().unwrap().value, o.h21_reordered().unwrap().value);
            assert!((a - b).abs() < 1e-8, "h21 {a} {b}");
        }
    }

    #[test]
    fn min_law_forms_agree() {
        let l = links(1, 5.0, 0.1);
        let laws = ExactLaws { links: &l };
        let o = Oracle::new(&laws, QuadPolicy::default()).unwrap();
        let a = o.one_minus_varrho().unwrap().value;
        let b = o.one_minus_varrho_expanded().unwrap().value;
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn symmetric_links_split_evenly() {
        let mut s = fig_base();
        s.fso.omega_sr_db = 90.0;
        s.rf_e = s.rf_d;
        let l = s.links().unwrap();
        let v = oracle_varrho(&l, &QuadPolicy::default()).unwrap().value;
        assert!((v - 0.5).abs() < 1e-6, "{v}");
    }

    #[test]
    fn g0_at_unit_order_is_elementary() {
        let l = links(1, 15.0, 0.3);
        let p = QuadPolicy::default();
        let g0 = oracle_g(GIntegral::G0 { alpha: 1.0, beta: 2.0 }, &l, None, &p).unwrap();
        // Υ(1, βx) = 1 - e^{-βx}
        let f = l.sr.cdf(l.t).unwrap();
        let g1 = oracle_g(GIntegral::G1 { z1: 0.0, z2: 2.0 }, &l, None, &p).unwrap();
        assert!((g0 - (f - l.sr.big_a * g1)).abs() < 1e-12);
    }

    #[test]
    fn halving_tolerances_is_stable() {
        let l = links(2, 25.0, 0.1);
        let p = QuadPolicy::default();
        let a = oracle_sop(&l, &p).unwrap();
        let b = oracle_sop(&l, &p.halved()).unwrap();
        for term in OracleTerm::ALL {
            assert!((a.get(term) - b.get(term)).abs() < 1e-9, "{term}");
        }
    }

    #[test]
    fn bessel_route_matches_meijer_pdf() {
        let l = links(1, 15.0, 0.1);
        for g in [0.05, 1.0, 7.0, 40.0, 200.0] {
            let a = l.sr.pdf(g).unwrap();
            let b = fso_pdf_bessel(&l.sr, g).unwrap();
            assert!((a - b).abs() < 1e-8 * b, "γ={g}: {a} vs {b}");
        }
    }

    #[test]
    fn cdfs_match_quadrature_of_pdfs() {
        let l = links(2, 15.0, 0.1);
        for g in [0.3, 3.0, 30.0] {
            let a = l.sr.cdf(g).unwrap();
            assert!((a - fso_cdf_quadrature(&l.sr, g).unwrap()).abs() < 1e-8);
        }
        let rf = RfLink::new(&fig_base().rf_d);
        let y = 5.0 / rf.lambda;
        assert!((rf.cdf(y) - rf_cdf_quadrature(&rf, y).unwrap()).abs() < 1e-10);
    }
}
