//! High-SNR secrecy outage: Ω_RD → ∞ with Ω_SR = φ Ω_RD.
//!
//! The FSO and R-D links are replaced by their leading power laws
//!   F∞_SR(x) = Σ_k e_k x^{K_k} / K_k,   e_k = I χ_k / Ω_RD^{K_k},
//!   F∞_RD(y) = c_D y^{τ_D} / τ_D,       c_D = λ_D^{τ_D} / Γ(τ_D),
//! while R-E stays exact. Tail masses beyond Θ-1 are carried as 1 - F∞(·),
//! so every term reduces to incomplete gamma moments of the R-E law.

use serde::{Deserialize, Serialize};

use crate::analytic::SopBreakdown;
use crate::channel::{db_to_linear, FsoLink, FsoParams, RfLink, SystemScenario};
use crate::special::{gamma_p, ln_factorial, ln_gamma, lower_gamma, rgamma, upper_gamma_scaled};
use crate::{Error, Result};

const POLE_GAP: f64 = 1e-6;
const REGIME_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    /// χ_k, one per FSO exponent.
    pub chi: Vec<f64>,
    /// Exponents K_{2,k}.
    pub k2: Vec<f64>,
    pub phi_d: f64,
    pub varphi: f64,
}

impl AsymptoticConstants {
    pub fn new(scenario: &SystemScenario) -> Result<Self> {
        scenario.validate()?;
        // χ_k does not depend on Ω; build the link at Ω_SR = φ so that ρ^{K} = ((hab)^r/(r^{2r} φ))^K.
        let unit = FsoParams {
            omega_sr_db: 10.0 * scenario.varphi.log10(),
            ..scenario.fso
        };
        let link = FsoLink::new(&unit)?;
        let rd = RfLink::new(&scenario.rf_d);
        let mut chi = Vec::with_capacity(link.k2.len());
        for (k, &kk) in link.k2.iter().enumerate() {
            let mut ratio = 1.0;
            for (j, &kj) in link.k2.iter().enumerate() {
                if j == k {
                    continue;
                }
                let gap = kj - kk;
                let near_pole = gap <= 0.0 && (gap - gap.round()).abs() < POLE_GAP;
                if gap.abs() < POLE_GAP || near_pole {
                    return Err(Error::NonGeneric(format!(
                        "FSO exponents {kk} and {kj} are too close for the power-law expansion"
                    )));
                }
                ratio *= crate::special::gamma(gap);
            }
            for &a in &link.k1 {
                ratio *= rgamma(a - kk);
            }
            let v = ratio * (kk * link.rho.ln()).exp();
            if !v.is_finite() {
                return Err(Error::NonGeneric(format!("chi_{k} is not finite")));
            }
            chi.push(v);
        }
        Ok(AsymptoticConstants {
            chi,
            k2: link.k2.clone(),
            phi_d: rd.phi,
            varphi: scenario.varphi,
        })
    }
}

/// Secrecy diversity order min{τ_D, ξ²/r, a/r, b/r}.
pub fn secrecy_diversity_order(scenario: &SystemScenario) -> f64 {
    let r = scenario.fso.r as f64;
    let tau_d = (scenario.rf_d.m * scenario.rf_d.n_antennas) as f64;
    let xi2 = scenario.fso.xi * scenario.fso.xi;
    tau_d.min(xi2 / r).min(scenario.fso.a / r).min(scenario.fso.b / r)
}

/// Power-law model of one scenario at its Ω_RD.
#[derive(Debug, Clone)]
pub struct AsymptoticModel {
    /// e_k = I χ_k / Ω_RD^{K_k}.
    pub e: Vec<f64>,
    pub k2: Vec<f64>,
    pub c_d: f64,
    pub tau_d: u32,
    pub tau_e: u32,
    pub lambda_e: f64,
    pub theta: f64,
    pub t: f64,
}

impl AsymptoticModel {
    pub fn new(scenario: &SystemScenario) -> Result<Self> {
        let consts = AsymptoticConstants::new(scenario)?;
        let omega_rd = db_to_linear(scenario.rf_d.omega_db);
        let fso = FsoLink::new(&scenario.fso)?;
        let rd = RfLink::new(&scenario.rf_d);
        let re = RfLink::new(&scenario.rf_e);
        let e = consts
            .chi
            .iter()
            .zip(&consts.k2)
            .map(|(c, k)| fso.big_i * c * (-k * omega_rd.ln()).exp())
            .collect();
        let theta = scenario.rs_nats.exp();
        let c_d = (rd.tau as f64 * (consts.phi_d / omega_rd).ln() - ln_gamma(rd.tau as f64)).exp();
        Ok(AsymptoticModel {
            e,
            k2: consts.k2,
            c_d,
            tau_d: rd.tau,
            tau_e: re.tau,
            lambda_e: re.lambda,
            theta,
            t: theta - 1.0,
        })
    }

    pub fn fso_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.e.iter().zip(&self.k2).map(|(e, k)| e * x.powf(*k) / k).sum()
    }

    pub fn fso_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.e.iter().zip(&self.k2).map(|(e, k)| e * x.powf(k - 1.0)).sum()
    }

    pub fn rf_cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        self.c_d * y.powi(self.tau_d as i32) / self.tau_d as f64
    }

    pub fn rf_pdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        self.c_d * y.powi(self.tau_d as i32 - 1)
    }

    /// Exact R-E CDF.
    pub fn re_cdf(&self, z: f64) -> Result<f64> {
        if z <= 0.0 {
            return Ok(0.0);
        }
        gamma_p(self.tau_e as f64, self.lambda_e * z)
    }

    pub fn check_regime(&self) -> Result<()> {
        let f = self.fso_cdf(self.t);
        let g = self.rf_cdf(self.t);
        if f > REGIME_LIMIT || g > REGIME_LIMIT {
            return Err(Error::Regime(format!(
                "F_SR = {f:.3e}, F_RD = {g:.3e} at Θ-1"
            )));
        }
        Ok(())
    }

    // ∫_0^T y^{μ-1} e^{-βy} dy
    fn head(&self, mu: f64, beta: f64) -> Result<f64> {
        if self.t <= 0.0 {
            return Ok(0.0);
        }
        if beta == 0.0 {
            return Ok(self.t.powf(mu) / mu);
        }
        Ok(lower_gamma(mu, beta * self.t)? / beta.powf(mu))
    }

    // e^{βT} ∫_T^∞ y^{μ-1} e^{-βy} dy
    fn tail_scaled(&self, mu: f64, beta: f64) -> Result<f64> {
        Ok(upper_gamma_scaled(mu, beta * self.t)? / beta.powf(mu))
    }

    /// ∫_0^T y^{μ-1} F_RE(y) dy.
    fn l(&self, mu: f64) -> Result<f64> {
        let le = self.lambda_e;
        let mut acc = self.t.powf(mu) / mu;
        for n in 0..self.tau_e {
            let c = (n as f64 * le.ln() - ln_factorial(n)).exp();
            acc -= c * self.head(mu + n as f64, le)?;
        }
        Ok(acc)
    }

    /// ∫_T^∞ y^{μ-1} [F_RE(y) - F_RE((y-T)/Θ)] dy.
    fn m(&self, mu: f64) -> Result<f64> {
        let (le, t, theta) = (self.lambda_e, self.t, self.theta);
        let mut acc = 0.0;
        for n in 0..self.tau_e {
            let c = (n as f64 * le.ln() - ln_factorial(n)).exp();
            let mut shifted = 0.0;
            for q in 0..=n {
                let sign = if (n - q) % 2 == 0 { 1.0 } else { -1.0 };
                let w = (ln_factorial(n) - ln_factorial(q) - ln_factorial(n - q)).exp()
                    * t.powi((n - q) as i32);
                shifted += sign * w * self.tail_scaled(mu + q as f64, le / theta)?;
            }
            acc += c * (shifted / theta.powi(n as i32) - (-le * t).exp() * self.tail_scaled(mu + n as f64, le)?);
        }
        Ok(acc)
    }

    /// ψ2(c1, c2) = ∫_T^∞ y^{c1} e^{-c2 y} f∞_SR(y) dy.
    pub fn psi2(&self, c1: f64, c2: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (e, k) in self.e.iter().zip(&self.k2) {
            acc += e * self.tail_scaled(k + c1, c2)?;
        }
        Ok(acc * (-c2 * self.t).exp())
    }

    /// ψ1(c1, c2) = ∫_T^∞ ∫_T^x y^{c1} e^{-c2 y} f∞_RD(y) dy f∞_SR(x) dx, the
    /// outer mass beyond T taken as 1 - F∞_SR(T).
    pub fn psi1(&self, c1: u32, c2: f64) -> Result<f64> {
        let alpha = self.tau_d + c1;
        let a = alpha as f64;
        let x = c2 * self.t;
        let s_t = 1.0 - self.fso_cdf(self.t);
        let pre = self.c_d / c2.powf(a);
        let mut inner = 0.0;
        for n in 0..alpha {
            for (e, k) in self.e.iter().zip(&self.k2) {
                inner += e * upper_gamma_scaled(k + n as f64, x)? / (ln_factorial(n) + k * c2.ln()).exp();
            }
        }
        let upper = crate::special::upper_gamma(a, x)?;
        Ok(pre * (upper * s_t - (ln_gamma(a) - x).exp() * inner))
    }

    /// ψ1 integrated in the other order:
    /// c_D ∫_T^∞ y^{c1+τ_D-1} e^{-c2 y} (1 - F∞_SR(y)) dy.
    pub fn psi1_reordered(&self, c1: u32, c2: f64) -> Result<f64> {
        let a = (self.tau_d + c1) as f64;
        let mut acc = self.tail_scaled(a, c2)?;
        for (e, k) in self.e.iter().zip(&self.k2) {
            acc -= e / k * self.tail_scaled(a + k, c2)?;
        }
        Ok(self.c_d * acc * (-c2 * self.t).exp())
    }

    fn weighted<F: Fn(f64) -> Result<f64>>(&self, f: F, shift: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (e, k) in self.e.iter().zip(&self.k2) {
            acc += e / k * f(k + shift)?;
        }
        Ok(acc)
    }

    pub fn h11(&self) -> Result<f64> {
        let td = self.tau_d as f64;
        Ok(self.c_d * (self.fso_cdf(self.t) * self.l(td)? - self.weighted(|mu| self.l(mu), td)?))
    }

    pub fn h12(&self) -> Result<f64> {
        Ok((1.0 - self.fso_cdf(self.t)) * self.c_d * self.l(self.tau_d as f64)?)
    }

    pub fn h13(&self) -> Result<f64> {
        let td = self.tau_d as f64;
        Ok(self.c_d * (self.m(td)? - self.weighted(|mu| self.m(mu), td)?))
    }

    /// H13 through ψ1 in the printed form.
    pub fn h13_psi(&self) -> Result<f64> {
        let (le, t, theta) = (self.lambda_e, self.t, self.theta);
        let mut acc = 0.0;
        for n in 0..self.tau_e {
            for q in 0..=n {
                let sign = if (n - q) % 2 == 0 { 1.0 } else { -1.0 };
                let w = (n as f64 * le.ln() + (n - q) as f64 * t.ln() - n as f64 * theta.ln()
                    - ln_factorial(q)
                    - ln_factorial(n - q)
                    + le * t / theta)
                    .exp();
                acc += sign * w * self.psi1(q, le / theta)?;
            }
            acc -= (n as f64 * le.ln() - ln_factorial(n)).exp() * self.psi1(n, le)?;
        }
        Ok(acc)
    }

    pub fn h21(&self) -> Result<f64> {
        let td = self.tau_d as f64;
        let t_pow = self.t.powf(td);
        let mut acc = 0.0;
        for (e, k) in self.e.iter().zip(&self.k2) {
            acc += e * (t_pow * self.l(*k)? - self.l(k + td)?);
        }
        Ok(self.c_d / td * acc)
    }

    pub fn h22(&self) -> Result<f64> {
        let mut acc = 0.0;
        for (e, k) in self.e.iter().zip(&self.k2) {
            acc += e * self.l(*k)?;
        }
        Ok((1.0 - self.rf_cdf(self.t)) * acc)
    }

    pub fn h23(&self) -> Result<f64> {
        let td = self.tau_d as f64;
        let mut acc = 0.0;
        for (e, k) in self.e.iter().zip(&self.k2) {
            acc += e * (self.m(*k)? - self.c_d / td * self.m(k + td)?);
        }
        Ok(acc)
    }

    /// H23 through ψ2 in the printed form.
    pub fn h23_psi(&self) -> Result<f64> {
        let (le, t, theta) = (self.lambda_e, self.t, self.theta);
        let td = self.tau_d as f64;
        let cd = self.c_d / td;
        let mut acc = 0.0;
        for n in 0..self.tau_e {
            for q in 0..=n {
                let sign = if (n - q) % 2 == 0 { 1.0 } else { -1.0 };
                let w = (n as f64 * le.ln() + (n - q) as f64 * t.ln() - n as f64 * theta.ln()
                    - ln_factorial(q)
                    - ln_factorial(n - q)
                    + le * t / theta)
                    .exp();
                let qf = q as f64;
                acc += sign * w * (self.psi2(qf, le / theta)? - cd * self.psi2(td + qf, le / theta)?);
            }
            let nf = n as f64;
            let c = (nf * le.ln() - ln_factorial(n)).exp();
            acc += c * (cd * self.psi2(td + nf, le)? - self.psi2(nf, le)?);
        }
        Ok(acc)
    }

    // E[Z^μ] for the R-E gamma law
    fn re_moment(&self, mu: f64) -> f64 {
        let te = self.tau_e as f64;
        (ln_gamma(te + mu) - ln_gamma(te) - mu * self.lambda_e.ln()).exp()
    }

    /// 1 - ϱ∞ = E[F∞_eq,D(γ_RE)].
    pub fn one_minus_varrho(&self) -> f64 {
        let td = self.tau_d as f64;
        let cd = self.c_d / td;
        let mut acc = cd * self.re_moment(td);
        for (e, k) in self.e.iter().zip(&self.k2) {
            acc += e / k * (self.re_moment(*k) - cd * self.re_moment(k + td));
        }
        acc
    }

    pub fn breakdown(&self) -> Result<SopBreakdown> {
        self.check_regime()?;
        let positive = self.t > 0.0;
        let term = |f: &dyn Fn() -> Result<f64>| if positive { f() } else { Ok(0.0) };
        let h11 = term(&|| self.h11())?;
        let h12 = term(&|| self.h12())?;
        let h13 = term(&|| self.h13())?;
        let h21 = term(&|| self.h21())?;
        let h22 = term(&|| self.h22())?;
        let h23 = term(&|| self.h23())?;
        let omv = self.one_minus_varrho();
        let h1 = h11 + h12 + h13;
        let h2 = h21 + h22 + h23;
        let sop = h1 + h2 + omv;
        if !sop.is_finite() {
            return Err(Error::Range("asymptotic SOP is not finite".into()));
        }
        Ok(SopBreakdown {
            h11,
            h12,
            h13,
            h21,
            h22,
            h23,
            varrho: 1.0 - omv,
            h1,
            h2,
            sop,
            p0: 1.0 - omv,
            clamped: false,
            error_estimate: 1e-14 * (1.0 + sop.abs()),
            series_terms_used: Default::default(),
        })
    }
}

/// Asymptotic SOP and its decomposition at the scenario's Ω_RD, with Ω_SR = φ Ω_RD.
pub fn asym_terms(scenario: &SystemScenario) -> Result<SopBreakdown> {
    AsymptoticModel::new(scenario)?.breakdown()
}

pub fn sop_asymptotic(scenario: &SystemScenario) -> Result<f64> {
    Ok(asym_terms(scenario)?.sop)
}
