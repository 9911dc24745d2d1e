//! Link models. The S-R hop is FSO with Gamma-Gamma turbulence and pointing
//! errors under heterodyne (r = 1) or intensity-modulation/direct (r = 2)
//! detection; the R-D and R-E hops are MRC over N Nakagami-m branches, so
//! their SNRs are Gamma(mN, λ) distributed.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::validate;
use crate::special::meijer::{meijer_g_with, MeijerGSpec, MeijerOptions};
use crate::special::{gamma, gamma_p, gamma_q, ln_gamma};
use crate::{Error, Result};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Transmit power in dBm to milliwatts.
pub fn dbm_to_linear(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FsoParams {
    /// Large-scale turbulence parameter α.
    pub a: f64,
    /// Small-scale turbulence parameter β.
    pub b: f64,
    /// Pointing-error ratio ξ.
    pub xi: f64,
    /// Detection type: 1 heterodyne, 2 IM/DD.
    pub r: u32,
    pub omega_sr_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfParams {
    pub m: u32,
    pub n_antennas: u32,
    /// Power-splitting ratio.
    pub alpha: f64,
    pub d: f64,
    pub eta: f64,
    pub lc: f64,
    pub pt_dbm: f64,
    pub n0: f64,
    pub sigma2: f64,
    pub omega_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemScenario {
    pub fso: FsoParams,
    pub rf_d: RfParams,
    pub rf_e: RfParams,
    pub rs_nats: f64,
    /// Ω_SR / Ω_RD, used by the high-SNR analysis.
    #[serde(default = "one")]
    pub varphi: f64,
}

fn one() -> f64 {
    1.0
}

impl FsoParams {
    pub fn validate(&self) -> Result<()> {
        validate(self.a > 0.0 && self.a.is_finite(), || format!("fso.a must be positive, got {}", self.a))?;
        validate(self.b > 0.0 && self.b.is_finite(), || format!("fso.b must be positive, got {}", self.b))?;
        validate(self.xi > 0.0 && self.xi.is_finite(), || format!("fso.xi must be positive, got {}", self.xi))?;
        validate(self.r == 1 || self.r == 2, || format!("fso.r must be 1 or 2, got {}", self.r))?;
        validate(self.omega_sr_db.is_finite(), || "fso.omega_sr_db must be finite".into())
    }
}

impl RfParams {
    pub fn validate(&self, which: &str) -> Result<()> {
        validate(self.m >= 1, || format!("{which}.m must be >= 1"))?;
        validate(self.n_antennas >= 1, || format!("{which}.n_antennas must be >= 1"))?;
        validate(self.alpha > 0.0 && self.alpha <= 1.0, || {
            format!("{which}.alpha must lie in (0, 1], got {}", self.alpha)
        })?;
        validate(self.d > 0.0 && self.eta > 0.0 && self.lc > 0.0, || {
            format!("{which}: d, eta and lc must be positive")
        })?;
        validate(self.n0 >= 0.0 && self.sigma2 >= 0.0 && self.alpha * self.n0 + self.sigma2 > 0.0, || {
            format!("{which}: noise powers must be non-negative with a positive total")
        })?;
        validate(self.pt_dbm.is_finite() && self.omega_db.is_finite(), || {
            format!("{which}: pt_dbm and omega_db must be finite")
        })
    }
}

impl SystemScenario {
    pub fn validate(&self) -> Result<()> {
        self.fso.validate()?;
        self.rf_d.validate("rf_d")?;
        self.rf_e.validate("rf_e")?;
        validate(self.rs_nats >= 0.0 && self.rs_nats.is_finite(), || {
            format!("rs_nats must be non-negative, got {}", self.rs_nats)
        })?;
        validate(self.varphi > 0.0 && self.varphi.is_finite(), || {
            format!("varphi must be positive, got {}", self.varphi)
        })
    }

    pub fn links(&self) -> Result<Links> {
        self.validate()?;
        let theta = self.rs_nats.exp();
        Ok(Links {
            sr: FsoLink::new(&self.fso)?,
            rd: RfLink::new(&self.rf_d),
            re: RfLink::new(&self.rf_e),
            rs: self.rs_nats,
            theta,
            t: theta - 1.0,
        })
    }
}

/// Scenario parameter that a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    OmegaSrDb,
    /// Also moves Ω_SR to φ·Ω_RD.
    OmegaRdDb,
    Rs,
    /// Power-splitting ratio at both receivers.
    Alpha,
    /// Path-loss exponent of both RF hops.
    Eta,
    Nd,
    M,
    R,
    Xi,
    /// Turbulence regime index into [`TURBULENCE_REGIMES`].
    Ab,
}

/// (a, b) pairs addressed by the `ab` axis: 0 weak, 1 strong turbulence.
pub const TURBULENCE_REGIMES: [(f64, f64); 2] = [(2.902, 2.51), (2.064, 1.342)];

impl SweepAxis {
    pub const ALL: [SweepAxis; 10] = [
        SweepAxis::OmegaSrDb,
        SweepAxis::OmegaRdDb,
        SweepAxis::Rs,
        SweepAxis::Alpha,
        SweepAxis::Eta,
        SweepAxis::Nd,
        SweepAxis::M,
        SweepAxis::R,
        SweepAxis::Xi,
        SweepAxis::Ab,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::OmegaSrDb => "omega_sr_db",
            SweepAxis::OmegaRdDb => "omega_rd_db",
            SweepAxis::Rs => "rs",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Eta => "eta",
            SweepAxis::Nd => "nd",
            SweepAxis::M => "m",
            SweepAxis::R => "r",
            SweepAxis::Xi => "xi",
            SweepAxis::Ab => "ab",
        }
    }

    /// Copy of `s` with this parameter set to `v`.
    pub fn apply(self, s: &SystemScenario, v: f64) -> Result<SystemScenario> {
        let mut out = *s;
        let count = |what: &str| -> Result<u32> {
            validate(v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64, || {
                format!("{what} must be a non-negative integer, got {v}")
            })?;
            Ok(v as u32)
        };
        match self {
            SweepAxis::OmegaSrDb => out.fso.omega_sr_db = v,
            SweepAxis::OmegaRdDb => {
                out.rf_d.omega_db = v;
                out.fso.omega_sr_db = v + 10.0 * s.varphi.log10();
            }
            SweepAxis::Rs => out.rs_nats = v,
            SweepAxis::Alpha => {
                out.rf_d.alpha = v;
                out.rf_e.alpha = v;
            }
            SweepAxis::Eta => {
                out.rf_d.eta = v;
                out.rf_e.eta = v;
            }
            SweepAxis::Nd => out.rf_d.n_antennas = count("nd")?,
            SweepAxis::M => {
                let m = count("m")?;
                out.rf_d.m = m;
                out.rf_e.m = m;
            }
            SweepAxis::R => out.fso.r = count("r")?,
            SweepAxis::Xi => out.fso.xi = v,
            SweepAxis::Ab => {
                let i = count("ab")? as usize;
                let (a, b) = *TURBULENCE_REGIMES
                    .get(i)
                    .ok_or_else(|| Error::Validation(format!("ab index {i} is not a known turbulence regime")))?;
                out.fso.a = a;
                out.fso.b = b;
            }
        }
        out.validate()?;
        Ok(out)
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown sweep axis '{s}'")))
    }
}

/// Derived per-hop quantities for one scenario.
#[derive(Debug, Clone)]
pub struct Links {
    pub sr: FsoLink,
    pub rd: RfLink,
    pub re: RfLink,
    pub rs: f64,
    /// Θ = e^{Rs}
    pub theta: f64,
    /// Θ - 1
    pub t: f64,
}

/// Δ(k, x) = [x/k, (x+1)/k, ..., (x+k-1)/k]
pub fn delta_list(k: u32, x: f64) -> Vec<f64> {
    (0..k).map(|j| (x + j as f64) / k as f64).collect()
}

#[derive(Debug, Clone)]
pub struct FsoLink {
    pub a: f64,
    pub b: f64,
    pub xi2: f64,
    pub r: u32,
    pub omega: f64,
    /// ξ²/(ξ²+1)
    pub h: f64,
    /// PDF prefactor ξ²/(r Γ(a) Γ(b)).
    pub big_a: f64,
    /// Kernel scale h a b / Ω^{1/r}.
    pub big_b: f64,
    /// CDF prefactor ξ² r^{a+b-2} / ((2π)^{r-1} Γ(a) Γ(b)).
    pub big_i: f64,
    /// CDF argument scale (hab)^r / (Ω r^{2r}).
    pub rho: f64,
    /// Gauss multiplication constant r^{a+b-1} / (2π)^{r-1}.
    pub mult: f64,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
}

impl FsoLink {
    pub fn new(p: &FsoParams) -> Result<Self> {
        p.validate()?;
        let xi2 = p.xi * p.xi;
        let r = p.r as f64;
        let omega = db_to_linear(p.omega_sr_db);
        let h = xi2 / (xi2 + 1.0);
        let hab = h * p.a * p.b;
        let ln_gab = ln_gamma(p.a) + ln_gamma(p.b);
        let two_pi_pow = (2.0 * std::f64::consts::PI).powf(r - 1.0);
        let mut k2 = delta_list(p.r, xi2);
        k2.extend(delta_list(p.r, p.a));
        k2.extend(delta_list(p.r, p.b));
        Ok(FsoLink {
            a: p.a,
            b: p.b,
            xi2,
            r: p.r,
            omega,
            h,
            big_a: xi2 / (r * ln_gab.exp()),
            big_b: hab / omega.powf(1.0 / r),
            big_i: xi2 * r.powf(p.a + p.b - 2.0) / (two_pi_pow * ln_gab.exp()),
            rho: hab.powf(r) / (omega * r.powf(2.0 * r)),
            mult: r.powf(p.a + p.b - 1.0) / two_pi_pow,
            k1: delta_list(p.r, xi2 + 1.0),
            k2,
        })
    }

    pub fn rf(&self) -> f64 {
        self.r as f64
    }

    /// G^{3,0}_{1,3}[B x^{1/r} | ξ²+1; ξ², a, b] scaled by exp(ln_pre).
    pub fn kernel_scaled(&self, x: f64, ln_pre: f64) -> Result<f64> {
        let z = self.big_b * x.powf(1.0 / self.rf());
        let spec = MeijerGSpec {
            m: 3,
            n: 0,
            a: vec![self.xi2 + 1.0],
            b: vec![self.xi2, self.a, self.b],
            z,
        };
        let opts = MeijerOptions {
            ln_prefactor: ln_pre,
            ..MeijerOptions::default()
        };
        Ok(meijer_g_with(&spec, &opts)?.value)
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        self.kernel_scaled(x, self.big_a.ln() - x.ln())
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x <= 0.0 {
            return Ok(0.0);
        }
        let mut a = vec![1.0];
        a.extend(&self.k1);
        let mut b = self.k2.clone();
        b.push(0.0);
        let spec = MeijerGSpec {
            m: 3 * self.r as usize,
            n: 1,
            a,
            b,
            z: self.rho * x,
        };
        let opts = MeijerOptions {
            ln_prefactor: self.big_i.ln(),
            ..MeijerOptions::default()
        };
        Ok(meijer_g_with(&spec, &opts)?.value.clamp(0.0, 1.0))
    }

    pub fn survival(&self, x: f64) -> Result<f64> {
        Ok(1.0 - self.cdf(x)?)
    }

    /// Exact draw: B γ^{1/r} = G_a G_b U^{1/ξ²} with unit-scale Gamma variates.
    pub fn sample_composite<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let ga = Gamma::new(self.a, 1.0).expect("validated shape").sample(rng);
        let gb = Gamma::new(self.b, 1.0).expect("validated shape").sample(rng);
        let u: f64 = rng.gen::<f64>();
        let y = ga * gb * u.powf(1.0 / self.xi2);
        (y / self.big_b).powf(self.rf())
    }

    /// Smallest exponent of the small-argument power law F(γ) ~ γ^κ.
    pub fn min_exponent(&self) -> f64 {
        self.k2.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RfLink {
    /// Shape mN.
    pub tau: u32,
    /// Rate m d^η (αN0 + σ²) / (Ω α Pt Lc).
    pub lambda: f64,
    pub omega: f64,
    /// λΩ, the Ω-free part of the rate.
    pub phi: f64,
}

impl RfLink {
    pub fn new(p: &RfParams) -> Self {
        let omega = db_to_linear(p.omega_db);
        let phi = p.m as f64 * p.d.powf(p.eta) * (p.alpha * p.n0 + p.sigma2) / (p.alpha * dbm_to_linear(p.pt_dbm) * p.lc);
        RfLink {
            tau: p.m * p.n_antennas,
            lambda: phi / omega,
            omega,
            phi,
        }
    }

    pub fn with_omega(&self, omega: f64) -> Self {
        RfLink {
            lambda: self.phi / omega,
            omega,
            ..*self
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let tau = self.tau as f64;
        if x == 0.0 {
            return if self.tau == 1 { self.lambda } else { 0.0 };
        }
        (tau * self.lambda.ln() + (tau - 1.0) * x.ln() - self.lambda * x - ln_gamma(tau)).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        gamma_p(self.tau as f64, self.lambda * x).expect("validated shape")
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        gamma_q(self.tau as f64, self.lambda * x).expect("validated shape")
    }

    pub fn sampler(&self) -> Gamma<f64> {
        Gamma::new(self.tau as f64, 1.0 / self.lambda).expect("validated shape")
    }

    pub fn mean(&self) -> f64 {
        self.tau as f64 / self.lambda
    }
}

/// Inverse-CDF sampler for the FSO SNR: cubic Hermite interpolation of F in
/// w = ln γ on a uniform knot grid, power-law/exponential tails beyond it.
#[derive(Debug, Clone)]
pub struct FsoInverseTable {
    w: Vec<f64>,
    f: Vec<f64>,
    df: Vec<f64>,
    lower_slope: f64,
    upper_slope: f64,
}

const TABLE_KNOTS: usize = 4096;
const TAIL_MASS: f64 = 1e-13;

impl FsoInverseTable {
    pub fn build(link: &FsoLink) -> Result<Self> {
        // bracket [w_lo, w_hi] so that both tails hold less than TAIL_MASS
        let centre = link.omega.ln();
        let mut w_lo = centre - 1.0;
        while link.cdf(w_lo.exp())? > TAIL_MASS {
            w_lo -= 2.0;
            if w_lo < centre - 400.0 {
                return Err(Error::Convergence("FSO lower tail bracket".into()));
            }
        }
        let mut w_hi = centre + 1.0;
        while link.survival(w_hi.exp())? > TAIL_MASS {
            w_hi += 1.0;
            if w_hi > centre + 200.0 {
                return Err(Error::Convergence("FSO upper tail bracket".into()));
            }
        }
        let step = (w_hi - w_lo) / (TABLE_KNOTS - 1) as f64;
        let mut w = Vec::with_capacity(TABLE_KNOTS);
        let mut f = Vec::with_capacity(TABLE_KNOTS);
        let mut df = Vec::with_capacity(TABLE_KNOTS);
        for i in 0..TABLE_KNOTS {
            let wi = w_lo + i as f64 * step;
            let x = wi.exp();
            w.push(wi);
            f.push(link.cdf(x)?);
            df.push((x * link.pdf(x)?).max(0.0));
        }
        for i in 1..TABLE_KNOTS {
            if f[i] < f[i - 1] {
                f[i] = f[i - 1];
            }
        }
        let lower_slope = (df[0] / f[0].max(1e-300)).max(link.min_exponent() / link.rf());
        let s_last = (1.0 - f[TABLE_KNOTS - 1]).max(1e-300);
        let upper_slope = (df[TABLE_KNOTS - 1] / s_last).max(1.0);
        Ok(FsoInverseTable {
            w,
            f,
            df,
            lower_slope,
            upper_slope,
        })
    }

    fn hermite(&self, i: usize, t: f64, h: f64) -> (f64, f64) {
        let (f0, f1) = (self.f[i], self.f[i + 1]);
        let (d0, d1) = (self.df[i] * h, self.df[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = (2.0 * t3 - 3.0 * t2 + 1.0) * f0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * f1 + (t3 - t2) * d1;
        let dv = (6.0 * t2 - 6.0 * t) * f0 + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (-6.0 * t2 + 6.0 * t) * f1 + (3.0 * t2 - 2.0 * t) * d1;
        (v, dv)
    }

    /// γ with F(γ) = u.
    pub fn quantile(&self, u: f64) -> f64 {
        let n = self.f.len();
        if u <= self.f[0] {
            let ratio = (u / self.f[0]).max(1e-300);
            return (self.w[0] + ratio.ln() / self.lower_slope).exp();
        }
        if u >= self.f[n - 1] {
            let s = (1.0 - u).max(1e-300);
            let s_last = (1.0 - self.f[n - 1]).max(1e-300);
            return (self.w[n - 1] + (s_last / s).ln() / self.upper_slope).exp();
        }
        let i = (self.f.partition_point(|&v| v <= u) - 1).min(n - 2);
        let h = self.w[i + 1] - self.w[i];
        let span = self.f[i + 1] - self.f[i];
        if span <= 0.0 {
            return self.w[i].exp();
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        let mut t = (u - self.f[i]) / span;
        for _ in 0..30 {
            let (v, dv) = self.hermite(i, t, h);
            let g = v - u;
            if g > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            if g.abs() < 1e-15 {
                break;
            }
            let mut next = if dv > 0.0 { t - g / dv } else { 0.5 * (lo + hi) };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() < 1e-14 {
                t = next;
                break;
            }
            t = next;
        }
        (self.w[i] + t * h).exp()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.gen::<f64>())
    }
}

/// Mean of the FSO SNR, E[γ] = Ω · Γ(a+r)Γ(b+r) ξ² / (Γ(a)Γ(b)(ξ²+r) (hab)^r).
pub fn fso_mean(link: &FsoLink) -> f64 {
    let r = link.rf();
    let moment = gamma(link.a + r) * gamma(link.b + r) / (gamma(link.a) * gamma(link.b)) * link.xi2 / (link.xi2 + r);
    moment / link.big_b.powf(r)
}
