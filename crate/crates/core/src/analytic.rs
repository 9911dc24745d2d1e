//! Closed-form secrecy outage probability.
//!
//! SOP = H1 + H2 + 1 - ϱ, where H1 = H11 + H12 + H13 collects the region
//! γ_RD <= γ_SR, H2 = H21 + H22 + H23 the region γ_SR < γ_RD, and ϱ is the
//! probability that the eavesdropper is the weakest of the three hops.
//!
//! Every term reduces to a handful of FSO-side integrals:
//!   P(k, β) = ∫_0^T x^k e^{-βx} f_SR(x) dx        (= A G1(k, β))
//!   Q(k, β) = ∫_T^∞ x^k e^{-βx} f_SR(x) dx        (= G3(k - 1, β))
//! with T = e^{Rs} - 1. Each is evaluated by its Meijer-G series or
//! closed form where that is well conditioned, and otherwise by a
//! Mellin-Barnes integral of the kernel against a complex-order incomplete
//! gamma, which stays accurate when β T is large.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::LN_10;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{Links, SystemScenario};
use crate::special::meijer::{meijer_g_with, saddle_contour, vertical_line_integral, MeijerGSpec, MeijerOptions};
use crate::special::{
    gamma_p, ln_factorial, ln_gamma, ln_gamma_c, lower_gamma_over_power, upper_gamma_scaled_over_power,
};
use crate::{Error, Result};

/// Value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Est {
    pub value: f64,
    pub err: f64,
}

impl Est {
    pub fn new(value: f64, err: f64) -> Self {
        Est { value, err }
    }

    pub fn exact(value: f64) -> Self {
        Est { value, err: 0.0 }
    }

    pub fn scale(self, k: f64) -> Self {
        Est {
            value: self.value * k,
            err: self.err * k.abs(),
        }
    }
}

impl std::ops::Add for Est {
    type Output = Est;
    fn add(self, o: Est) -> Est {
        Est::new(self.value + o.value, self.err + o.err)
    }
}

impl std::ops::Sub for Est {
    type Output = Est;
    fn sub(self, o: Est) -> Est {
        Est::new(self.value - o.value, self.err + o.err)
    }
}

impl std::ops::AddAssign for Est {
    fn add_assign(&mut self, o: Est) {
        *self = *self + o;
    }
}

impl std::ops::SubAssign for Est {
    fn sub_assign(&mut self, o: Est) {
        *self = *self - o;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SopBreakdown {
    pub h11: f64,
    pub h12: f64,
    pub h13: f64,
    pub h21: f64,
    pub h22: f64,
    pub h23: f64,
    pub varrho: f64,
    pub h1: f64,
    pub h2: f64,
    pub sop: f64,
    /// Pr(Cs > 0).
    pub p0: f64,
    pub clamped: bool,
    pub error_estimate: f64,
    pub series_terms_used: BTreeMap<String, usize>,
}

/// βT above which e^{βT}-amplified closed forms give way to scaled ones.
const CONDITIONING_LIMIT: f64 = LN_10;
/// z2 T above which the alternating G1 series gives way to Mellin-Barnes.
const G1_SERIES_LIMIT: f64 = 1.0;

/// Truncation rule for the alternating Meijer-G series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPolicy {
    /// Stop once |term| <= rel_term_tol |sum| for `quiet_terms` terms in a row.
    pub rel_term_tol: f64,
    pub quiet_terms: usize,
    pub max_terms: usize,
    /// Largest term allowed relative to the final sum before the series is
    /// declared numerically divergent.
    pub growth_guard: f64,
}

impl Default for SeriesPolicy {
    fn default() -> Self {
        SeriesPolicy {
            rel_term_tol: 1e-12,
            quiet_terms: 3,
            max_terms: 200,
            growth_guard: 1e6,
        }
    }
}

/// Running state of one alternating series under a [`SeriesPolicy`].
struct SeriesRun {
    policy: SeriesPolicy,
    sum: Est,
    peak: f64,
    quiet: usize,
    terms: usize,
}

impl SeriesRun {
    fn new(policy: SeriesPolicy) -> Self {
        SeriesRun {
            policy,
            sum: Est::default(),
            peak: 0.0,
            quiet: 0,
            terms: 0,
        }
    }

    /// Adds a term and reports whether the series may stop. `past_peak`
    /// tells the rule that the terms are no longer growing in magnitude.
    fn push(&mut self, term: Est, past_peak: bool) -> Result<bool> {
        self.sum += term;
        self.peak = self.peak.max(term.value.abs());
        self.terms += 1;
        if past_peak && term.value.abs() <= self.policy.rel_term_tol * self.sum.value.abs() {
            self.quiet += 1;
        } else {
            self.quiet = 0;
        }
        if self.quiet >= self.policy.quiet_terms || (past_peak && term.value == 0.0 && self.sum.value == 0.0) {
            return Ok(true);
        }
        if self.terms >= self.policy.max_terms {
            return Err(Error::Convergence(format!(
                "series did not settle within {} terms",
                self.policy.max_terms
            )));
        }
        Ok(false)
    }

    fn finish(self, what: &str) -> Result<Est> {
        if self.peak > self.policy.growth_guard * self.sum.value.abs() && self.peak > 1e-300 {
            return Err(Error::Divergence(format!(
                "{what} series terms grew to {:.3e} against a sum of {:.3e}",
                self.peak, self.sum.value
            )));
        }
        Ok(Est::new(self.sum.value, self.sum.err + 8.0 * f64::EPSILON * self.peak))
    }
}

fn binom(n: u32, k: u32) -> f64 {
    (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)).exp().round()
}

/// Evaluation context for one scenario. Caches the FSO-side integrals.
pub struct ExactEngine<'a> {
    pub links: &'a Links,
    rel_tol: f64,
    series: SeriesPolicy,
    p_cache: RefCell<HashMap<(u64, u64), Est>>,
    q_cache: RefCell<HashMap<(u64, u64), Est>>,
    terms: RefCell<usize>,
}

impl<'a> ExactEngine<'a> {
    pub fn new(links: &'a Links) -> Self {
        ExactEngine {
            links,
            rel_tol: 1e-11,
            series: SeriesPolicy::default(),
            p_cache: RefCell::new(HashMap::new()),
            q_cache: RefCell::new(HashMap::new()),
            terms: RefCell::new(0),
        }
    }

    pub fn with_series_policy(mut self, policy: SeriesPolicy) -> Self {
        self.series = policy;
        self
    }

    fn t(&self) -> f64 {
        self.links.t
    }

    fn mg(&self, m: usize, n: usize, a: Vec<f64>, b: Vec<f64>, z: f64, ln_pre: f64) -> Result<Est> {
        let spec = MeijerGSpec { m, n, a, b, z };
        let opts = MeijerOptions {
            ln_prefactor: ln_pre,
            rel_tol: self.rel_tol,
            ..MeijerOptions::default()
        };
        let r = meijer_g_with(&spec, &opts)?;
        Ok(Est::new(r.value, r.abs_error_estimate))
    }

    fn take_terms(&self) -> usize {
        std::mem::take(&mut *self.terms.borrow_mut())
    }

    /// F_SR(T) = P(0, 0).
    pub fn f_sr_t(&self) -> Result<Est> {
        let v = self.links.sr.cdf(self.t())?;
        Ok(Est::new(v, 1e-15))
    }

    /// G1(z1, z2) = ∫_0^T x^{z1-1} e^{-z2 x} G^{3,0}_{1,3}[B x^{1/r}] dx,
    /// choosing the series or the Mellin-Barnes route.
    pub fn g1(&self, z1: f64, z2: f64) -> Result<Est> {
        let t = self.t();
        if t <= 0.0 {
            return Ok(Est::default());
        }
        if z2 * t <= G1_SERIES_LIMIT {
            self.g1_series(z1, z2)
        } else {
            self.g1_mellin(z1, z2)
        }
    }

    /// Alternating Meijer-G series for G1:
    /// Ξ Σ_s (-z2)^s T^{z1+s}/s! G^{3r,1}_{r+1,3r+1}[ρT | 1-z1-s, K1; K2, -z1-s].
    pub fn g1_series(&self, z1: f64, z2: f64) -> Result<Est> {
        let sr = &self.links.sr;
        let t = self.t();
        if t <= 0.0 {
            return Ok(Est::default());
        }
        let m = 3 * sr.r as usize;
        let mut run = SeriesRun::new(self.series);
        for s in 0.. {
            let w = z1 + s as f64;
            let mut a = vec![1.0 - w];
            a.extend(&sr.k1);
            let mut b = sr.k2.clone();
            b.push(-w);
            let ln_pre = sr.mult.ln() + w * t.ln() - ln_factorial(s as u32) + if s > 0 { s as f64 * z2.ln() } else { 0.0 };
            let mut term = self.mg(m, 1, a, b, sr.rho * t, ln_pre)?;
            if s % 2 == 1 {
                term = term.scale(-1.0);
            }
            *self.terms.borrow_mut() += 1;
            if z2 == 0.0 {
                run.push(term, true)?;
                break;
            }
            if run.push(term, s as f64 > z2 * t)? {
                break;
            }
        }
        run.finish(&format!("G1({z1}, {z2})"))
    }

    fn kernel_ln_phi(&self, s: Complex64) -> Complex64 {
        let sr = &self.links.sr;
        ln_gamma_c(sr.xi2 - s) + ln_gamma_c(sr.a - s) + ln_gamma_c(sr.b - s) - ln_gamma_c(sr.xi2 + 1.0 - s)
            + s * sr.big_b.ln()
    }

    fn kernel_hi(&self) -> f64 {
        let sr = &self.links.sr;
        sr.xi2.min(sr.a).min(sr.b)
    }

    /// G1 through (1/2πi)∫ Φ(s) B^s z2^{-ν} γ(ν, z2 T) ds with ν = z1 + s/r.
    pub fn g1_mellin(&self, z1: f64, z2: f64) -> Result<Est> {
        let t = self.t();
        if t <= 0.0 {
            return Ok(Est::default());
        }
        if !(z2 > 0.0) {
            return self.g1_series(z1, z2);
        }
        let r = self.links.sr.rf();
        let x = z2 * t;
        let (lo, hi) = (-r * z1, self.kernel_hi());
        let ln_z = self.links.sr.big_b.ln() + t.ln() / r;
        let failure = RefCell::new(None);
        let integrand = |s: Complex64| {
            let nu = z1 + s / r;
            match lower_gamma_over_power(nu, x) {
                Ok(v) => self.kernel_ln_phi(s) + nu * t.ln() + v.ln(),
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    Complex64::new(f64::NEG_INFINITY, 0.0)
                }
            }
        };
        let (c, d) = saddle_contour(&integrand, lo, hi, ln_z)?;
        let (value, err, nodes) = vertical_line_integral(integrand, c, d, ln_z.abs(), self.rel_tol)?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        *self.terms.borrow_mut() += nodes;
        Ok(Est::new(value, err))
    }

    /// P(k, β) = ∫_0^T x^k e^{-βx} f_SR dx = A G1(k, β), cached.
    pub fn p(&self, k: u32, beta: f64) -> Result<Est> {
        let key = (k as u64, beta.to_bits());
        if let Some(v) = self.p_cache.borrow().get(&key) {
            return Ok(*v);
        }
        let v = if k == 0 && beta == 0.0 {
            self.f_sr_t()?
        } else {
            self.g1(k as f64, beta)?.scale(self.links.sr.big_a)
        };
        self.p_cache.borrow_mut().insert(key, v);
        Ok(v)
    }

    /// β^k/k! P(k, β) = ∫_0^T (βx)^k/k! e^{-βx} f_SR dx, bounded by F_SR(T).
    pub fn w(&self, k: u32, beta: f64) -> Result<Est> {
        if k == 0 {
            return self.p(0, beta);
        }
        let ln_c = k as f64 * beta.ln() - ln_factorial(k);
        Ok(self.p(k, beta)?.scale(ln_c.exp()))
    }

    /// G0(α, β)/Γ(α) = ∫_0^T P(α, βx) f_SR dx for integer α, P the regularised
    /// lower incomplete gamma.
    pub fn g0_reg(&self, alpha: u32, beta: f64) -> Result<Est> {
        let mut acc = self.f_sr_t()?;
        for t in 0..alpha {
            acc -= self.w(t, beta)?;
        }
        Ok(acc)
    }

    /// G0(α, β) = ∫_0^T Υ(α, βx) f_SR(x) dx.
    pub fn g0(&self, alpha: u32, beta: f64) -> Result<Est> {
        Ok(self.g0_reg(alpha, beta)?.scale(ln_gamma(alpha as f64).exp()))
    }

    /// G2(α, β) = ∫_T^∞ Υ(α, βx) f_SR(x) dx via the full-range Meijer-G
    /// minus G0.
    pub fn g2(&self, alpha: u32, beta: f64) -> Result<Est> {
        let sr = &self.links.sr;
        let r = sr.r as usize;
        let mut a = vec![1.0 - alpha as f64, 1.0];
        a.extend(&sr.k1);
        let mut b = sr.k2.clone();
        b.push(0.0);
        let full = self.mg(3 * r + 1, 1, a, b, sr.rho / beta, sr.big_i.ln())?;
        Ok(full - self.g0(alpha, beta)?)
    }

    /// G3(α, β) = ∫_T^∞ y^{α+1} e^{-βy} f_SR dy from the full-range Meijer-G
    /// minus the head A G1(α+1, β).
    pub fn g3(&self, alpha: i32, beta: f64) -> Result<Est> {
        let sr = &self.links.sr;
        let r = sr.r as usize;
        let mut a = vec![-(alpha as f64)];
        a.extend(&sr.k1);
        let ln_pre = sr.big_i.ln() - (alpha as f64 + 1.0) * beta.ln();
        let full = self.mg(3 * r, 1, a, sr.k2.clone(), sr.rho / beta, ln_pre)?;
        let k = (alpha + 1) as u32;
        let head = if self.t() > 0.0 { self.p(k, beta)? } else { Est::default() };
        Ok(full - head)
    }

    /// e^{βT} Q(k, β) = e^{βT} ∫_T^∞ x^k e^{-βx} f_SR dx, cached.
    pub fn q_scaled(&self, k: u32, beta: f64) -> Result<Est> {
        let key = (k as u64, beta.to_bits());
        if let Some(v) = self.q_cache.borrow().get(&key) {
            return Ok(*v);
        }
        let x = beta * self.t();
        let v = if x <= CONDITIONING_LIMIT {
            self.g3(k as i32 - 1, beta)?.scale(x.exp())
        } else {
            self.q_scaled_mellin(k, beta)?
        };
        self.q_cache.borrow_mut().insert(key, v);
        Ok(v)
    }

    /// e^{βT} Q(k, β) by (A/2πi)∫ Φ(s) B^s T^ν [e^x Γ(ν, x)/x^ν] ds, x = βT.
    pub fn q_scaled_mellin(&self, k: u32, beta: f64) -> Result<Est> {
        let t = self.t();
        if !(t > 0.0 && beta > 0.0) {
            return Err(Error::Validation("scaled tail moment needs T > 0 and beta > 0".into()));
        }
        let sr = &self.links.sr;
        let r = sr.rf();
        let x = beta * t;
        let ln_z = sr.big_b.ln() + t.ln() / r;
        let failure = RefCell::new(None);
        let integrand = |s: Complex64| {
            let nu = k as f64 + s / r;
            match upper_gamma_scaled_over_power(nu, x) {
                Ok(v) => self.kernel_ln_phi(s) + nu * t.ln() + v.ln(),
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    Complex64::new(f64::NEG_INFINITY, 0.0)
                }
            }
        };
        let (c, d) = saddle_contour(&integrand, f64::NEG_INFINITY, self.kernel_hi(), ln_z)?;
        let (value, err, nodes) = vertical_line_integral(integrand, c, d, ln_z.abs(), self.rel_tol)?;
        if let Some(e) = failure.into_inner() {
            return Err(e);
        }
        *self.terms.borrow_mut() += nodes;
        Ok(Est::new(value, err).scale(sr.big_a))
    }

    fn rf_consts(&self) -> (u32, u32, f64, f64) {
        (self.links.rd.tau, self.links.re.tau, self.links.rd.lambda, self.links.re.lambda)
    }

    pub fn h11(&self) -> Result<Est> {
        let (td, te, ld, le) = self.rf_consts();
        let b2 = ld + le;
        let mut acc = self.g0_reg(td, ld)?;
        for n in 0..te {
            let c = binom(td + n - 1, n) * (ld / b2).powi(td as i32) * (le / b2).powi(n as i32);
            acc -= self.g0_reg(td + n, b2)?.scale(c);
        }
        Ok(acc)
    }

    pub fn h12(&self) -> Result<Est> {
        let (td, te, ld, le) = self.rf_consts();
        let t = self.t();
        let b2 = ld + le;
        let mut inner = self.links.rd.cdf(t);
        for n in 0..te {
            let c = binom(td + n - 1, n) * (ld / b2).powi(td as i32) * (le / b2).powi(n as i32);
            inner -= c * gamma_p((td + n) as f64, b2 * t)?;
        }
        let s = Est::exact(1.0) - self.f_sr_t()?;
        Ok(s.scale(inner))
    }

    /// H13 with the printed G2-based form; accurate while e^{λ_E T/Θ} is modest.
    pub fn h13_closed(&self) -> Result<Est> {
        let (td, te, ld, le) = self.rf_consts();
        let (t, theta) = (self.t(), self.links.theta);
        let b1 = ld + le / theta;
        let b2 = ld + le;
        let s_t = 1.0 - self.f_sr_t()?.value;
        let reg = |alpha: u32, beta: f64| -> Result<Est> {
            let g2 = self.g2(alpha, beta)?.scale((-ln_gamma(alpha as f64)).exp());
            Ok(g2 - Est::exact(gamma_p(alpha as f64, beta * t)? * s_t))
        };
        let lead = (le * t / theta).exp();
        let mut acc = Est::default();
        for n in 0..te {
            for k in 0..=n {
                let c = self.h13_coef1(n, k, b1);
                acc += reg(td + k, b1)?.scale(c * lead);
            }
            let c2 = binom(td + n - 1, n) * (ld / b2).powi(td as i32) * (le / b2).powi(n as i32);
            acc -= reg(td + n, b2)?.scale(c2);
        }
        Ok(acc)
    }

    // λD^τD Γ(τD+t) λE^n (-T)^{n-t} / (Γ(τD) t! (n-t)! Θ^n β1^{τD+t})
    fn h13_coef1(&self, n: u32, t_idx: u32, b1: f64) -> f64 {
        let (td, _, ld, le) = self.rf_consts();
        let (t, theta) = (self.t(), self.links.theta);
        let sign = if (n - t_idx) % 2 == 0 { 1.0 } else { -1.0 };
        let ln = td as f64 * (ld / b1).ln() + (ln_gamma((td + t_idx) as f64) - ln_gamma(td as f64) - ln_factorial(t_idx))
            + t_idx as f64 * (le / (theta * b1)).ln()
            + (n - t_idx) as f64 * (le * t / theta).ln()
            - ln_factorial(n - t_idx);
        sign * ln.exp()
    }

    /// e^{βT} ∫_T^∞ [P(α, βx) - P(α, βT)] f_SR dx
    ///   = Σ_{k<α} β^k/k! (T^k (1 - F_SR(T)) - e^{βT} Q(k, β)).
    fn tail_bracket(&self, alpha: u32, beta: f64) -> Result<Est> {
        let t = self.t();
        let s_t = Est::exact(1.0) - self.f_sr_t()?;
        let mut acc = Est::default();
        for k in 0..alpha {
            let ln_c = k as f64 * (beta * t).ln() - ln_factorial(k);
            let first = s_t.scale(ln_c.exp());
            let ln_q = k as f64 * beta.ln() - ln_factorial(k);
            acc += first - self.q_scaled(k, beta)?.scale(ln_q.exp());
        }
        Ok(acc)
    }

    /// H13 through tail moments with the exponential prefactor folded in.
    pub fn h13_scaled(&self) -> Result<Est> {
        let (td, te, ld, le) = self.rf_consts();
        let (t, theta) = (self.t(), self.links.theta);
        let b1 = ld + le / theta;
        let b2 = ld + le;
        let mut acc = Est::default();
        let e1 = (-ld * t).exp();
        let e2 = (-b2 * t).exp();
        for n in 0..te {
            for k in 0..=n {
                let c = self.h13_coef1(n, k, b1);
                acc += self.tail_bracket(td + k, b1)?.scale(c * e1);
            }
            let c2 = binom(td + n - 1, n) * (ld / b2).powi(td as i32) * (le / b2).powi(n as i32);
            acc -= self.tail_bracket(td + n, b2)?.scale(c2 * e2);
        }
        Ok(acc)
    }

    pub fn h13(&self) -> Result<Est> {
        let (_, _, ld, le) = self.rf_consts();
        if (ld + le) * self.t() <= CONDITIONING_LIMIT {
            self.h13_closed()
        } else {
            self.h13_scaled()
        }
    }

    /// H21 reduced by Fubini to finite sums of P(k, β).
    pub fn h21(&self) -> Result<Est> {
        let (td, te, ld, le) = self.rf_consts();
        let t = self.t();
        let b2 = ld + le;
        let q_d = self.links.rd.survival(t);
        let f_t = self.f_sr_t()?;
        let mut acc = f_t.scale(-q_d);
        for p in 0..td {
            acc += self.w(p, ld)?;
            for n in 0..te {
                let c = binom(p + n, p) * (ld / b2).powi(p as i32) * (le / b2).powi(n as i32);
                acc -= self.w(p + n, b2)?.scale(c);
            }
        }
        for n in 0..te {
            acc += self.w(n, le)?.scale(q_d);
        }
        Ok(acc)
    }

    /// H21 as the printed single plus triple Meijer-G series. Only usable for
    /// small λT; trips the growth guard otherwise.
    pub fn h21_series(&self) -> Result<Est> {
        let (td, te, ld, le) = self.rf_consts();
        let sr = &self.links.sr;
        let t = self.t();
        if t <= 0.0 {
            return Ok(Est::default());
        }
        let m = 3 * sr.r as usize;
        let z = sr.rho * t;
        let mut first = SeriesRun::new(self.series);
        for s in 0.. {
            let v1 = (td + s as u32) as f64;
            let mut a = vec![1.0 - v1, 1.0];
            a.extend(&sr.k1);
            let mut b = sr.k2.clone();
            b.extend([0.0, -v1]);
            let ln_pre = sr.big_i.ln() - ln_gamma(td as f64) + v1 * (ld * t).ln() - ln_factorial(s as u32);
            let mut term = self.mg(m, 2, a, b, z, ln_pre)?;
            if s % 2 == 1 {
                term = term.scale(-1.0);
            }
            if first.push(term, s as f64 > ld * t)? {
                break;
            }
        }
        let mut total = first.finish("H21 single")?;
        for n in 0..te {
            let mut outer = SeriesRun::new(self.series);
            for s in 0.. {
                let mut row = SeriesRun::new(self.series);
                for tt in 0.. {
                    let v2 = (td + n) as f64 + (s + tt) as f64;
                    let ns = (n as usize + s) as f64;
                    let mut a = vec![1.0 - ns, 1.0 - v2];
                    a.extend(&sr.k1);
                    let mut b = sr.k2.clone();
                    b.extend([-v2, -ns]);
                    let ln_pre = sr.big_a.ln() + sr.mult.ln() - ln_gamma(td as f64)
                        + (td as f64 + tt as f64) * ld.ln()
                        + ns * le.ln()
                        + v2 * t.ln()
                        - ln_factorial(n)
                        - ln_factorial(s as u32)
                        - ln_factorial(tt as u32);
                    let mut term = self.mg(m, 2, a, b, z, ln_pre)?;
                    if (s + tt) % 2 == 1 {
                        term = term.scale(-1.0);
                    }
                    if row.push(term, tt as f64 > ld * t)? {
                        break;
                    }
                }
                if outer.push(row.finish("H21 inner")?, s as f64 > le * t)? {
                    break;
                }
            }
            total -= outer.finish("H21 double")?;
        }
        Ok(total)
    }

    pub fn h22(&self) -> Result<Est> {
        let (_, te, _, le) = self.rf_consts();
        let t = self.t();
        let mut inner = self.f_sr_t()?;
        for n in 0..te {
            inner -= self.w(n, le)?;
        }
        Ok(inner.scale(self.links.rd.survival(t)))
    }

    pub fn h23(&self) -> Result<Est> {
        let (td, te, ld, le) = self.rf_consts();
        let (t, theta) = (self.t(), self.links.theta);
        let b1 = ld + le / theta;
        let b2 = ld + le;
        let e1 = (-ld * t).exp();
        let e2 = (-b2 * t).exp();
        let mut acc = Est::default();
        for p in 0..td {
            for n in 0..te {
                for k in 0..=n {
                    let sign = if (n - k) % 2 == 0 { 1.0 } else { -1.0 };
                    let ln = p as f64 * ld.ln() + n as f64 * le.ln() - n as f64 * theta.ln()
                        + if n > k { (n - k) as f64 * t.ln() } else { 0.0 }
                        - ln_factorial(p)
                        - ln_factorial(k)
                        - ln_factorial(n - k);
                    acc += self.q_scaled(p + k, b1)?.scale(sign * ln.exp() * e1);
                }
                let ln = p as f64 * ld.ln() + n as f64 * le.ln() - ln_factorial(p) - ln_factorial(n);
                acc -= self.q_scaled(p + n, b2)?.scale(ln.exp() * e2);
            }
        }
        Ok(acc)
    }

    /// ϱ = Pr(γ_RE <= min(γ_SR, γ_RD)).
    pub fn varrho(&self) -> Result<Est> {
        let (td, te, ld, le) = self.rf_consts();
        let sr = &self.links.sr;
        let r = sr.r as usize;
        let b2 = ld + le;
        let mut acc = Est::default();
        for p in 0..td {
            let k = (te + p) as f64;
            // λE^τE λD^p Γ(k) / (Γ(τE) p! β^k) is a binomial-type weight
            let ln_w = te as f64 * (le / b2).ln() + p as f64 * (ld / b2).ln() + ln_gamma(k)
                - ln_gamma(te as f64)
                - ln_factorial(p);
            let mut a = vec![1.0, 1.0 - k];
            a.extend(&sr.k1);
            let mut b = sr.k2.clone();
            b.push(0.0);
            let ln_pre = sr.big_i.ln() + ln_w - ln_gamma(k);
            let g = self.mg(3 * r, 2, a, b, sr.rho / b2, ln_pre)?;
            acc += Est::exact(ln_w.exp()) - g;
        }
        Ok(acc)
    }
}

fn clamp_term(name: &str, v: f64, clamped: &mut bool) -> Result<f64> {
    if v < 0.0 {
        if v < -1e-6 {
            return Err(Error::Range(format!("{name} = {v:.3e} is negative beyond tolerance")));
        }
        *clamped = true;
        return Ok(0.0);
    }
    if v > 1.0 {
        if v > 1.0 + 1e-6 {
            return Err(Error::Range(format!("{name} = {v:.3e} exceeds one beyond tolerance")));
        }
        *clamped = true;
        return Ok(1.0);
    }
    Ok(v)
}

pub fn exact_sop_links(links: &Links) -> Result<SopBreakdown> {
    let eng = ExactEngine::new(links);
    let mut terms = BTreeMap::new();
    let mut run = |name: &str, f: &dyn Fn() -> Result<Est>| -> Result<Est> {
        let v = f()?;
        terms.insert(name.to_string(), eng.take_terms());
        Ok(v)
    };
    let zero = || Ok(Est::default());
    let positive_rate = links.t > 0.0;
    let h11 = run("h11", &|| if positive_rate { eng.h11() } else { zero() })?;
    let h12 = run("h12", &|| if positive_rate { eng.h12() } else { zero() })?;
    let h13 = run("h13", &|| if positive_rate { eng.h13() } else { zero() })?;
    let h21 = run("h21", &|| if positive_rate { eng.h21() } else { zero() })?;
    let h22 = run("h22", &|| if positive_rate { eng.h22() } else { zero() })?;
    let h23 = run("h23", &|| if positive_rate { eng.h23() } else { zero() })?;
    let varrho = run("varrho", &|| eng.varrho())?;

    let mut clamped = false;
    let h11v = clamp_term("H11", h11.value, &mut clamped)?;
    let h12v = clamp_term("H12", h12.value, &mut clamped)?;
    let h13v = clamp_term("H13", h13.value, &mut clamped)?;
    let h21v = clamp_term("H21", h21.value, &mut clamped)?;
    let h22v = clamp_term("H22", h22.value, &mut clamped)?;
    let h23v = clamp_term("H23", h23.value, &mut clamped)?;
    let rho = clamp_term("varrho", varrho.value, &mut clamped)?;
    let h1 = h11v + h12v + h13v;
    let h2 = h21v + h22v + h23v;
    let sop = clamp_term("SOP", h1 + h2 + 1.0 - rho, &mut clamped)?;
    let error_estimate = h11.err + h12.err + h13.err + h21.err + h22.err + h23.err + varrho.err;
    Ok(SopBreakdown {
        h11: h11v,
        h12: h12v,
        h13: h13v,
        h21: h21v,
        h22: h22v,
        h23: h23v,
        varrho: rho,
        h1,
        h2,
        sop,
        p0: rho,
        clamped,
        error_estimate,
        series_terms_used: terms,
    })
}

/// Exact SOP and its decomposition.
pub fn exact_sop(scenario: &SystemScenario) -> Result<SopBreakdown> {
    exact_sop_links(&scenario.links()?)
}

/// Pr(Cs > 0), computed as ϱ and cross-checked against 1 - SOP at Rs = 0.
pub fn prob_positive_secrecy(scenario: &SystemScenario) -> Result<f64> {
    let mut zero_rate = *scenario;
    zero_rate.rs_nats = 0.0;
    let b = exact_sop(&zero_rate)?;
    let via_sop = 1.0 - b.sop;
    if (via_sop - b.p0).abs() > 1e-12 {
        return Err(Error::Range(format!(
            "Pr(Cs > 0) routes disagree: {} vs {}",
            b.p0, via_sop
        )));
    }
    Ok(b.p0)
}
