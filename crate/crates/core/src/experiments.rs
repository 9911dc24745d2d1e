//! Parameter sweeps across engines, figure presets and CSV output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analytic::exact_sop;
use crate::asymptotic::asym_terms;
use crate::channel::{FsoParams, RfParams, SweepAxis, SystemScenario};
use crate::error::validate;
use crate::montecarlo::{simulate, McConfig};
use crate::oracle::{oracle_sop, OracleTerm, QuadPolicy};
use crate::parallel::map_items;
use crate::{Error, Result};

/// Base operating point shared by the figure presets.
pub fn fig_base() -> SystemScenario {
    let rf = RfParams {
        m: 2,
        n_antennas: 3,
        alpha: 0.5,
        d: 10.0,
        eta: 3.0,
        lc: 3.597e-2,
        pt_dbm: 30.0,
        n0: 1.0,
        sigma2: 1.0,
        omega_db: 5.0,
    };
    SystemScenario {
        fso: FsoParams {
            a: 2.902,
            b: 2.51,
            xi: 1.1,
            r: 1,
            omega_sr_db: 20.0,
        },
        rf_d: rf,
        rf_e: RfParams {
            n_antennas: 2,
            omega_db: 0.0,
            ..rf
        },
        rs_nats: 0.01,
        varphi: 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Analytic,
    Asymptotic,
    Montecarlo,
    Oracle,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Asymptotic => "asymptotic",
            Engine::Montecarlo => "montecarlo",
            Engine::Oracle => "oracle",
        }
    }
}

/// One labelled parameter variant of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    #[serde(default)]
    pub set: BTreeMap<SweepAxis, f64>,
}

impl Curve {
    pub fn new(label: impl Into<String>, set: &[(SweepAxis, f64)]) -> Self {
        Curve {
            label: label.into(),
            set: set.iter().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: String,
    pub scenario: SystemScenario,
    pub sweep_axis: SweepAxis,
    pub grid: Vec<f64>,
    pub engines: Vec<Engine>,
    /// Variants swept one after another; empty means the scenario as given.
    #[serde(default)]
    pub curves: Vec<Curve>,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub oracle: QuadPolicy,
    #[serde(default)]
    pub output_path: Option<String>,
    /// Fill the wall_time_ms column. Off by default so that re-runs are
    /// byte-identical.
    #[serde(default)]
    pub record_timing: bool,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        validate(!self.grid.is_empty(), || "grid must not be empty".into())?;
        validate(self.grid.iter().all(|v| v.is_finite()), || "grid values must be finite".into())?;
        validate(!self.engines.is_empty(), || "engines must not be empty".into())?;
        self.scenario.validate()?;
        if self.engines.contains(&Engine::Montecarlo) {
            self.mc.validate()?;
        }
        if self.engines.contains(&Engine::Oracle) {
            self.oracle.validate()?;
        }
        for c in self.curves() {
            let s = self.curve_scenario(&c)?;
            for &v in &self.grid {
                self.sweep_axis.apply(&s, v)?;
            }
        }
        Ok(())
    }

    pub fn curves(&self) -> Vec<Curve> {
        if self.curves.is_empty() {
            vec![Curve::new("base", &[])]
        } else {
            self.curves.clone()
        }
    }

    fn curve_scenario(&self, c: &Curve) -> Result<SystemScenario> {
        let mut s = self.scenario;
        for (&axis, &v) in &c.set {
            s = axis.apply(&s, v)?;
        }
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec =
            serde_json::from_str(text).map_err(|e| Error::Validation(format!("experiment JSON: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }
}

/// One CSV row: a grid point of one curve evaluated by one engine.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub curve: String,
    pub axis_value: f64,
    pub engine: Engine,
    pub outcome: std::result::Result<RowValues, RowFailure>,
    pub wall_time_ms: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowValues {
    pub sop: f64,
    pub h1: f64,
    pub h2: f64,
    pub varrho: f64,
    pub std_error: Option<f64>,
    pub series_terms: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowFailure {
    pub exit_code: i32,
    pub kind: String,
    pub message: String,
}

impl From<Error> for RowFailure {
    fn from(e: Error) -> Self {
        RowFailure {
            exit_code: e.exit_code(),
            kind: e.kind().to_string(),
            message: e.to_string(),
        }
    }
}

fn evaluate(engine: Engine, s: &SystemScenario, spec: &ExperimentSpec) -> Result<RowValues> {
    match engine {
        Engine::Analytic => {
            let b = exact_sop(s)?;
            Ok(RowValues {
                sop: b.sop,
                h1: b.h1,
                h2: b.h2,
                varrho: b.varrho,
                std_error: None,
                series_terms: Some(b.series_terms_used.values().sum()),
            })
        }
        Engine::Asymptotic => {
            let b = asym_terms(s)?;
            Ok(RowValues {
                sop: b.sop,
                h1: b.h1,
                h2: b.h2,
                varrho: b.varrho,
                std_error: None,
                series_terms: None,
            })
        }
        Engine::Oracle => {
            let b = oracle_sop(&s.links()?, &spec.oracle)?;
            let sum = |ts: [OracleTerm; 3]| ts.iter().map(|&t| b.get(t)).sum::<f64>();
            Ok(RowValues {
                sop: b.sop,
                h1: sum([OracleTerm::H11, OracleTerm::H12, OracleTerm::H13]),
                h2: sum([OracleTerm::H21, OracleTerm::H22, OracleTerm::H23]),
                varrho: b.varrho,
                std_error: None,
                series_terms: None,
            })
        }
        Engine::Montecarlo => {
            let r = simulate(s, &spec.mc)?;
            Ok(RowValues {
                sop: r.sop.mean,
                h1: r.h1.mean,
                h2: r.h2.mean,
                varrho: r.varrho.mean,
                std_error: Some(r.sop.std_error),
                series_terms: None,
            })
        }
    }
}

/// Evaluates every (curve, grid point, engine) combination. Engine failures
/// are recorded in their row and do not stop the run.
pub fn run(spec: &ExperimentSpec) -> Result<Vec<Row>> {
    spec.validate()?;
    let mut tasks = Vec::new();
    for c in spec.curves() {
        let base = spec.curve_scenario(&c)?;
        for &v in &spec.grid {
            let s = spec.sweep_axis.apply(&base, v)?;
            for &e in &spec.engines {
                tasks.push((c.label.clone(), v, e, s));
            }
        }
    }
    let eval = |(label, v, e, s): &(String, f64, Engine, SystemScenario)| {
        let start = Instant::now();
        let outcome = evaluate(*e, s, spec).map_err(RowFailure::from);
        let ms = start.elapsed().as_secs_f64() * 1e3;
        Row {
            curve: label.clone(),
            axis_value: *v,
            engine: *e,
            outcome,
            wall_time_ms: spec.record_timing.then_some(ms),
        }
    };
    // Monte Carlo rows parallelise internally; the others across grid points.
    let (mc, other): (Vec<_>, Vec<_>) = tasks.iter().enumerate().partition(|(_, t)| t.2 == Engine::Montecarlo);
    let other_rows = map_items(&other, spec.mc.n_workers, |(_, t)| eval(t));
    let mc_rows: Vec<Row> = mc.iter().map(|(_, t)| eval(t)).collect();
    let mut rows: Vec<(usize, Row)> = other
        .iter()
        .map(|(i, _)| *i)
        .zip(other_rows)
        .chain(mc.iter().map(|(i, _)| *i).zip(mc_rows))
        .collect();
    rows.sort_by_key(|(i, _)| *i);
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn csv_header(axis: SweepAxis) -> String {
    format!(
        "curve,{},engine,sop,h1,h2,varrho,std_error,series_terms,wall_time_ms,status",
        axis.name()
    )
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn to_csv(axis: SweepAxis, rows: &[Row]) -> String {
    let mut out = csv_header(axis);
    out.push('\n');
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        let time = opt(r.wall_time_ms.map(|t| format!("{t:.3}")));
        let _ = match &r.outcome {
            Ok(v) => writeln!(
                out,
                "{},{},{},{:e},{:e},{:e},{:e},{},{},{},ok",
                quote(&r.curve),
                r.axis_value,
                r.engine.name(),
                v.sop,
                v.h1,
                v.h2,
                v.varrho,
                opt(v.std_error.map(|e| format!("{e:e}"))),
                opt(v.series_terms.map(|n| n.to_string())),
                time
            ),
            Err(f) => writeln!(
                out,
                "{},{},{},,,,,,,{},fail:{}:{}",
                quote(&r.curve),
                r.axis_value,
                r.engine.name(),
                time,
                f.exit_code,
                f.kind
            ),
        };
    }
    out
}

/// Runs the experiment and renders it as CSV.
pub fn run_to_csv(spec: &ExperimentSpec) -> Result<(String, Vec<Row>)> {
    let rows = run(spec)?;
    Ok((to_csv(spec.sweep_axis, &rows), rows))
}

fn db_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

pub const PRESET_NAMES: [&str; 8] = ["fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"];

fn preset_mc() -> McConfig {
    McConfig {
        n_samples: 1_000_000,
        master_seed: 20_240_101,
        n_workers: 1,
        batch_size: 65_536,
    }
}

fn omega_sr_preset(name: &str, curves: Vec<Curve>) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        scenario: fig_base(),
        sweep_axis: SweepAxis::OmegaSrDb,
        grid: db_grid(0.0, 40.0, 5.0),
        engines: vec![Engine::Analytic, Engine::Montecarlo],
        curves,
        mc: preset_mc(),
        oracle: QuadPolicy::default(),
        output_path: None,
        record_timing: false,
    }
}

fn omega_rd_preset(name: &str, scenario: SystemScenario, curves: Vec<Curve>) -> ExperimentSpec {
    ExperimentSpec {
        name: name.into(),
        scenario,
        sweep_axis: SweepAxis::OmegaRdDb,
        grid: db_grid(0.0, 60.0, 5.0),
        engines: vec![Engine::Analytic, Engine::Asymptotic],
        curves,
        mc: preset_mc(),
        oracle: QuadPolicy::default(),
        output_path: None,
        record_timing: false,
    }
}

/// High-SNR base: N_D = 1, Ω_RE = 3 dB, Ω_SR tied to Ω_RD with φ = 1.
fn high_snr_base() -> SystemScenario {
    let mut s = fig_base();
    s.rf_d.n_antennas = 1;
    s.rf_e.omega_db = 3.0;
    s.varphi = 1.0;
    s
}

pub fn preset(name: &str) -> Result<ExperimentSpec> {
    use SweepAxis::*;
    let spec = match name {
        "fig2" => omega_sr_preset(
            name,
            [(1, 1.1), (1, 2.0), (2, 1.1), (2, 2.0)]
                .iter()
                .map(|&(r, xi)| Curve::new(format!("r={r} xi={xi}"), &[(R, r as f64), (Xi, xi)]))
                .collect(),
        ),
        "fig3" => omega_sr_preset(
            name,
            [2.5, 3.0, 3.5].iter().map(|&e| Curve::new(format!("eta={e}"), &[(Eta, e)])).collect(),
        ),
        "fig4" => omega_sr_preset(
            name,
            [0.2, 0.5, 0.8].iter().map(|&a| Curve::new(format!("alpha={a}"), &[(Alpha, a)])).collect(),
        ),
        "fig5" => omega_sr_preset(
            name,
            [(1, 0), (1, 1), (3, 0), (3, 1)]
                .iter()
                .map(|&(nd, ab)| {
                    let regime = if ab == 0 { "weak" } else { "strong" };
                    Curve::new(format!("nd={nd} {regime}"), &[(Nd, nd as f64), (Ab, ab as f64)])
                })
                .collect(),
        ),
        "fig6" => omega_rd_preset(
            name,
            high_snr_base(),
            [1, 2, 3].iter().map(|&m| Curve::new(format!("m={m}"), &[(M, m as f64)])).collect(),
        ),
        "fig7" => {
            let mut s = high_snr_base();
            s.rf_d.m = 1;
            s.rf_e.m = 1;
            omega_rd_preset(
                name,
                s,
                [1, 2, 3].iter().map(|&n| Curve::new(format!("nd={n}"), &[(Nd, n as f64)])).collect(),
            )
        }
        "fig8" => {
            let mut s = high_snr_base();
            s.rf_d.n_antennas = 3;
            omega_rd_preset(
                name,
                s,
                [(1, 1.1), (2, 1.1), (1, 2.0), (2, 2.0)]
                    .iter()
                    .map(|&(r, xi)| Curve::new(format!("r={r} xi={xi}"), &[(R, r as f64), (Xi, xi)]))
                    .collect(),
            )
        }
        "fig9" => {
            let mut s = high_snr_base();
            s.rf_d.n_antennas = 3;
            omega_rd_preset(
                name,
                s,
                [(1, 0), (2, 0), (1, 1), (2, 1)]
                    .iter()
                    .map(|&(r, ab)| {
                        let regime = if ab == 0 { "weak" } else { "strong" };
                        Curve::new(format!("r={r} {regime}"), &[(R, r as f64), (Ab, ab as f64)])
                    })
                    .collect(),
            )
        }
        other => {
            return Err(Error::Validation(format!(
                "unknown preset '{other}', expected one of {}",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(spec)
}

pub fn figure_presets() -> Vec<ExperimentSpec> {
    PRESET_NAMES.iter().map(|n| preset(n).expect("built-in preset")).collect()
}
