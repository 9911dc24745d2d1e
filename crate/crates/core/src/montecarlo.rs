//! Direct simulation of the secrecy outage events.
//!
//! Each sample draws (γ_SR, γ_RD, γ_RE), forms the DF equivalent SNRs
//! γ_D = min(γ_SR, γ_RD) and γ_E = min(γ_SR, γ_RE), and classifies
//! Cs = max(ln(1 + γ_D) - ln(1 + γ_E), 0) against Rs. The outage event
//! {Cs <= Rs} splits exactly into
//!   H1: Cs > 0, γ_RD <= γ_SR, Cs <= Rs
//!   H2: Cs > 0, γ_RD >  γ_SR, Cs <= Rs
//!   Cs = 0
//! and ϱ = Pr(Cs > 0).
//!
//! Sample i draws from ChaCha8 keyed by the master seed with stream i, so
//! every estimate is a function of (seed, n_samples) alone. Samples are
//! grouped into batches for tallying and batches are split statically
//! across workers; integer tallies make the reduction order irrelevant.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::channel::{db_to_linear, FsoInverseTable, FsoLink, FsoParams, SweepAxis, SystemScenario};
use crate::error::validate;
use crate::parallel::map_ranges;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: u64,
    pub master_seed: u64,
    pub n_workers: usize,
    pub batch_size: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_samples: 1_000_000,
            master_seed: 1,
            n_workers: 1,
            batch_size: 65_536,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        validate(self.n_samples >= 1000, || {
            format!("n_samples must be at least 1000, got {}", self.n_samples)
        })?;
        validate(self.n_workers >= 1, || "n_workers must be at least 1".into())?;
        validate(self.batch_size >= 1, || "batch_size must be at least 1".into())
    }

    fn n_batches(&self) -> u64 {
        self.n_samples.div_ceil(self.batch_size)
    }
}

/// Bernoulli mean with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
    pub ci95: (f64, f64),
}

impl McEstimate {
    pub fn from_count(count: u64, n: u64) -> Self {
        let mean = count as f64 / n as f64;
        let std_error = (mean * (1.0 - mean) / n as f64).sqrt();
        McEstimate {
            mean,
            std_error,
            n,
            ci95: ((mean - 1.96 * std_error).max(0.0), (mean + 1.96 * std_error).min(1.0)),
        }
    }

    /// |mean - reference| measured in standard errors. The standard error is
    /// the larger of the sample one and the one implied by the reference, so
    /// a tally pinned at 0 or n still gives a finite statistic.
    pub fn z_score(&self, reference: f64) -> f64 {
        let implied = (reference * (1.0 - reference) / self.n as f64).max(0.0).sqrt();
        let sigma = self.std_error.max(implied);
        let diff = (self.mean - reference).abs();
        if sigma == 0.0 {
            if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            diff / sigma
        }
    }
}

/// Raw event counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct McTallies {
    pub n: u64,
    pub outage: u64,
    pub h1: u64,
    pub h2: u64,
    pub positive: u64,
}

impl McTallies {
    fn merge(self, o: McTallies) -> McTallies {
        McTallies {
            n: self.n + o.n,
            outage: self.outage + o.outage,
            h1: self.h1 + o.h1,
            h2: self.h2 + o.h2,
            positive: self.positive + o.positive,
        }
    }

    /// count(Cs <= Rs) = count(H1) + count(H2) + count(Cs = 0).
    pub fn partition_holds(&self) -> bool {
        self.outage == self.h1 + self.h2 + (self.n - self.positive)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McResult {
    pub sop: McEstimate,
    pub p0: McEstimate,
    pub h1: McEstimate,
    pub h2: McEstimate,
    pub varrho: McEstimate,
    pub pr_cs_zero: McEstimate,
    pub tallies: McTallies,
}

impl McResult {
    fn from_tallies(t: McTallies) -> Self {
        let n = t.n;
        McResult {
            sop: McEstimate::from_count(t.outage, n),
            p0: McEstimate::from_count(t.positive, n),
            h1: McEstimate::from_count(t.h1, n),
            h2: McEstimate::from_count(t.h2, n),
            varrho: McEstimate::from_count(t.positive, n),
            pr_cs_zero: McEstimate::from_count(n - t.positive, n),
            tallies: t,
        }
    }
}

/// Per-sample classification. `t` is Θ - 1.
///
/// Cs <= Rs is tested as γ_D - γ_E <= T(1 + γ_E), which is exact at T = 0:
/// the difference of two distinct doubles is never zero, so at Rs = 0 the
/// outage event coincides with Cs = 0 sample by sample.
#[inline]
pub fn classify(x: f64, y: f64, z: f64, t: f64, tally: &mut McTallies) {
    let gd = x.min(y);
    let ge = x.min(z);
    tally.n += 1;
    let positive = gd > ge;
    let within = !positive || gd - ge <= t * (1.0 + ge);
    if positive {
        tally.positive += 1;
        if within {
            if y <= x {
                tally.h1 += 1;
            } else {
                tally.h2 += 1;
            }
        }
    }
    if within {
        tally.outage += 1;
    }
}

type TableKey = (u64, u64, u64, u32);

/// Inverse-CDF table of the FSO SNR at Ω_SR = 1. The law scales linearly in
/// Ω_SR, so one table per (a, b, ξ, r) serves every point of a sweep.
fn unit_fso_table(p: &FsoParams) -> Result<Arc<FsoInverseTable>> {
    static CACHE: OnceLock<Mutex<HashMap<TableKey, Arc<FsoInverseTable>>>> = OnceLock::new();
    let key = (p.a.to_bits(), p.b.to_bits(), p.xi.to_bits(), p.r);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(t) = map.get(&key) {
        return Ok(Arc::clone(t));
    }
    let unit = FsoLink::new(&FsoParams { omega_sr_db: 0.0, ..*p })?;
    let table = Arc::new(FsoInverseTable::build(&unit)?);
    map.insert(key, Arc::clone(&table));
    Ok(table)
}

struct Samplers {
    sr: Arc<FsoInverseTable>,
    omega_sr: f64,
    rd: Gamma<f64>,
    re: Gamma<f64>,
    t: f64,
}

impl Samplers {
    fn new(scenario: &SystemScenario) -> Result<Self> {
        let links = scenario.links()?;
        Ok(Samplers {
            sr: unit_fso_table(&scenario.fso)?,
            omega_sr: db_to_linear(scenario.fso.omega_sr_db),
            rd: links.rd.sampler(),
            re: links.re.sampler(),
            t: links.t,
        })
    }

    fn batch(&self, seed: u64, first: u64, last: u64) -> McTallies {
        let mut tally = McTallies::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in first..last {
            rng.set_stream(i);
            rng.set_word_pos(0);
            let x = self.omega_sr * self.sr.quantile(rng.gen::<f64>());
            let y = self.rd.sample(&mut rng);
            let z = self.re.sample(&mut rng);
            classify(x, y, z, self.t, &mut tally);
        }
        tally
    }
}

/// Tallies for samples `0..cfg.n_samples`.
pub fn simulate_tallies(scenario: &SystemScenario, cfg: &McConfig) -> Result<McTallies> {
    cfg.validate()?;
    let samplers = Samplers::new(scenario)?;
    let per_worker = map_ranges(cfg.n_batches(), cfg.n_workers, |batches| {
        let mut acc = McTallies::default();
        for b in batches {
            let first = b * cfg.batch_size;
            let last = (first + cfg.batch_size).min(cfg.n_samples);
            let t = samplers.batch(cfg.master_seed, first, last);
            if !t.partition_holds() {
                return Err(Error::Range(format!("event partition broken in batch {b}")));
            }
            acc = acc.merge(t);
        }
        Ok(acc)
    });
    let mut total = McTallies::default();
    for t in per_worker {
        total = total.merge(t?);
    }
    debug_assert_eq!(total.n, cfg.n_samples);
    Ok(total)
}

/// SOP, Pr(Cs > 0), H1, H2, ϱ and Pr(Cs = 0) from one sample stream.
pub fn simulate(scenario: &SystemScenario, cfg: &McConfig) -> Result<McResult> {
    Ok(McResult::from_tallies(simulate_tallies(scenario, cfg)?))
}

/// One row per grid value of `axis`, each simulated with the same config.
pub fn sweep(template: &SystemScenario, axis: SweepAxis, grid: &[f64], cfg: &McConfig) -> Result<Vec<(f64, McResult)>> {
    validate(!grid.is_empty(), || "sweep grid must not be empty".into())?;
    grid.iter()
        .map(|&v| Ok((v, simulate(&axis.apply(template, v)?, cfg)?)))
        .collect()
}
