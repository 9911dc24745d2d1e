//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;

use sop_core::analytic::{exact_sop, prob_positive_secrecy, SopBreakdown};
use sop_core::asymptotic::secrecy_diversity_order;
use sop_core::channel::{FsoInverseTable, SystemScenario};
use sop_core::experiments::{fig_base, preset, run, run_to_csv, Engine, ExperimentSpec, Row};
use sop_core::montecarlo::{simulate, McConfig, McResult};
use sop_core::oracle::{oracle_sop, OracleBreakdown, OracleTerm, QuadPolicy};
use sop_core::special::meijer::residue_series;
use sop_core::special::{
    contour_at_step, gamma, gamma_p, lower_gamma, meijer_g_with, upper_gamma, MeijerGSpec, MeijerOptions,
    MethodChoice,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: u32, title: &str, o: &Outcome) -> bool {
    println!("criterion {id} [{}] {title}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    o.pass
}

struct GridPoint {
    r: u32,
    omega_sr_db: f64,
    rs: f64,
    analytic: SopBreakdown,
    oracle: OracleBreakdown,
    mc: McResult,
}

fn grid_scenario(r: u32, omega_sr_db: f64, rs: f64) -> SystemScenario {
    let mut s = fig_base();
    s.fso.r = r;
    s.fso.omega_sr_db = omega_sr_db;
    s.rs_nats = rs;
    s
}

fn workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn evaluate_grid() -> Result<(Vec<GridPoint>, f64), String> {
    let start = Instant::now();
    let mut out = Vec::new();
    for r in [1, 2] {
        for omega_sr_db in [5.0, 15.0, 25.0] {
            for rs in [0.01, 0.1, 0.5] {
                let s = grid_scenario(r, omega_sr_db, rs);
                let ctx = |e: sop_core::Error| format!("r={r} Ω_SR={omega_sr_db} Rs={rs}: {e}");
                let analytic = exact_sop(&s).map_err(ctx)?;
                let oracle = oracle_sop(&s.links().map_err(ctx)?, &QuadPolicy::default()).map_err(ctx)?;
                let cfg = McConfig {
                    n_samples: 10_000_000,
                    master_seed: 0x5eed_0001,
                    n_workers: workers(),
                    batch_size: 65_536,
                };
                let mc = simulate(&s, &cfg).map_err(ctx)?;
                out.push(GridPoint {
                    r,
                    omega_sr_db,
                    rs,
                    analytic,
                    oracle,
                    mc,
                });
            }
        }
    }
    Ok((out, start.elapsed().as_secs_f64()))
}

fn criterion_1(grid: &[GridPoint], seconds: f64) -> Outcome {
    let mut worst_ao: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    let mut bad = Vec::new();
    for p in grid {
        let ao = (p.analytic.sop - p.oracle.sop).abs();
        let za = p.mc.sop.z_score(p.analytic.sop);
        let zo = p.mc.sop.z_score(p.oracle.sop);
        worst_ao = worst_ao.max(ao);
        worst_z = worst_z.max(za).max(zo);
        if ao > 1e-5 || za > 3.0 || zo > 3.0 {
            bad.push(format!("(r={}, {} dB, Rs={})", p.r, p.omega_sr_db, p.rs));
        }
    }
    let in_budget = seconds <= 900.0;
    Outcome {
        pass: bad.is_empty() && in_budget,
        detail: format!(
            "18 points, max |analytic-oracle| = {worst_ao:.2e} (<= 1e-5), max MC z = {worst_z:.2} (<= 3), {seconds:.0} s (<= 900){}",
            if bad.is_empty() { String::new() } else { format!(", failing: {}", bad.join(" ")) }
        ),
    }
}

fn criterion_2(grid: &[GridPoint]) -> Outcome {
    let mut worst = (0.0f64, String::new());
    for p in grid {
        let a = &p.analytic;
        let pairs = [
            (OracleTerm::H11, a.h11),
            (OracleTerm::H12, a.h12),
            (OracleTerm::H13, a.h13),
            (OracleTerm::H21, a.h21),
            (OracleTerm::H22, a.h22),
            (OracleTerm::H23, a.h23),
            (OracleTerm::Varrho, a.varrho),
        ];
        for (t, v) in pairs {
            let d = (v - p.oracle.get(t)).abs();
            if d > worst.0 {
                worst = (d, format!("{t} at (r={}, {} dB, Rs={})", p.r, p.omega_sr_db, p.rs));
            }
        }
    }
    Outcome {
        pass: worst.0 <= 1e-6,
        detail: format!("max term deviation {:.2e} (<= 1e-6), {}", worst.0, worst.1),
    }
}

fn criterion_3() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut failure = None;
    for r in [1, 2] {
        for omega_sr_db in [5.0, 15.0, 25.0] {
            let s = grid_scenario(r, omega_sr_db, 0.0);
            match exact_sop(&s) {
                Ok(b) => {
                    worst = worst.max((b.sop - (1.0 - b.varrho)).abs()).max((b.p0 - b.varrho).abs());
                    let mut positive_rate = s;
                    positive_rate.rs_nats = 0.1;
                    match prob_positive_secrecy(&positive_rate) {
                        Ok(p0) => worst = worst.max((p0 - b.varrho).abs()),
                        Err(e) => failure = Some(e.to_string()),
                    }
                }
                Err(e) => failure = Some(e.to_string()),
            }
        }
    }
    Outcome {
        pass: failure.is_none() && worst <= 1e-12,
        detail: match failure {
            Some(e) => format!("evaluation failed: {e}"),
            None => format!("6 points, max |SOP-(1-ϱ)|, |P0-ϱ| = {worst:.2e} (<= 1e-12)"),
        },
    }
}

fn sop_of(rows: &[Row], curve: &str, x: f64, engine: Engine) -> Option<f64> {
    rows.iter()
        .find(|r| r.curve == curve && r.axis_value == x && r.engine == engine)
        .and_then(|r| r.outcome.as_ref().ok().map(|v| v.sop))
}

fn analytic_rows(name: &str) -> Result<(ExperimentSpec, Vec<Row>), String> {
    let mut spec = preset(name).map_err(|e| e.to_string())?;
    spec.engines = vec![Engine::Analytic];
    spec.mc.n_workers = workers();
    let rows = run(&spec).map_err(|e| e.to_string())?;
    Ok((spec, rows))
}

fn criterion_4() -> Outcome {
    let cases = [("fig6", "m=1"), ("fig6", "m=2"), ("fig8", "r=2 xi=1.1")];
    let mut parts = Vec::new();
    let mut pass = true;
    for (name, curve) in cases {
        let result = analytic_rows(name).and_then(|(spec, rows)| {
            let c = spec.curves.iter().find(|c| c.label == curve).ok_or("missing curve")?;
            let mut s = spec.scenario;
            for (&axis, &v) in &c.set {
                s = axis.apply(&s, v).map_err(|e| e.to_string())?;
            }
            let gd = secrecy_diversity_order(&s);
            let lo = sop_of(&rows, curve, 50.0, Engine::Analytic).ok_or("no value at 50 dB")?;
            let hi = sop_of(&rows, curve, 60.0, Engine::Analytic).ok_or("no value at 60 dB")?;
            Ok::<_, String>((gd, (hi.log10() - lo.log10()) / 1.0))
        });
        match result {
            Ok((gd, slope)) => {
                let rel = (slope + gd).abs() / gd;
                pass &= rel <= 0.10;
                parts.push(format!("{name} {curve}: slope {slope:.4} vs -{gd:.3} ({:.2}%)", 100.0 * rel));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name} {curve}: {e}"));
            }
        }
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

const ORDER_TOL: f64 = 1e-9;

/// `lower` <= `upper` at every listed grid value.
fn ordered(rows: &[Row], lower: &str, upper: &str, xs: &[f64], what: &str, fails: &mut Vec<String>) -> usize {
    let mut n = 0;
    for &x in xs {
        match (sop_of(rows, lower, x, Engine::Analytic), sop_of(rows, upper, x, Engine::Analytic)) {
            (Some(a), Some(b)) => {
                n += 1;
                if a > b + ORDER_TOL {
                    fails.push(format!("{what} at {x}: {a:.6e} > {b:.6e}"));
                }
            }
            _ => fails.push(format!("{what} at {x}: missing value")),
        }
    }
    n
}

fn criterion_5() -> Outcome {
    let mut fails = Vec::new();
    let mut checks = 0;
    let mut run_preset = |name: &str| match analytic_rows(name) {
        Ok((spec, rows)) => Some((spec, rows)),
        Err(e) => {
            fails.push(format!("{name}: {e}"));
            None
        }
    };
    let fig2 = run_preset("fig2");
    let fig3 = run_preset("fig3");
    let fig4 = run_preset("fig4");
    let fig5 = run_preset("fig5");
    if let Some((spec, rows)) = &fig2 {
        let g = &spec.grid;
        for c in spec.curves() {
            let v: Vec<f64> = g.iter().filter_map(|&x| sop_of(rows, &c.label, x, Engine::Analytic)).collect();
            checks += 1;
            if v.len() != g.len() {
                fails.push(format!("fig2 {}: missing values", c.label));
                continue;
            }
            if let Some(w) = v.windows(2).find(|w| w[1] > w[0] + ORDER_TOL) {
                fails.push(format!("fig2 {}: SOP rises {:.6e} -> {:.6e}", c.label, w[0], w[1]));
            }
            // a floor: positive, and the last 5 dB step moves it by under 5 %
            let (a, b) = (v[v.len() - 2], v[v.len() - 1]);
            if !(b > 0.0 && (a - b) < 0.05 * b) {
                fails.push(format!("fig2 {}: no positive floor ({a:.4e} -> {b:.4e})", c.label));
            }
        }
        checks += ordered(rows, "r=1 xi=1.1", "r=2 xi=1.1", g, "r=1 <= r=2 (xi=1.1)", &mut fails);
        checks += ordered(rows, "r=1 xi=2", "r=2 xi=2", g, "r=1 <= r=2 (xi=2)", &mut fails);
        checks += ordered(rows, "r=1 xi=2", "r=1 xi=1.1", g, "xi=2 <= xi=1.1 (r=1)", &mut fails);
        checks += ordered(rows, "r=2 xi=2", "r=2 xi=1.1", g, "xi=2 <= xi=1.1 (r=2)", &mut fails);
    }
    if let Some((spec, rows)) = &fig5 {
        let g = &spec.grid;
        checks += ordered(rows, "nd=3 weak", "nd=1 weak", g, "N_D=3 <= N_D=1 (weak)", &mut fails);
        checks += ordered(rows, "nd=3 strong", "nd=1 strong", g, "N_D=3 <= N_D=1 (strong)", &mut fails);
        checks += ordered(rows, "nd=1 weak", "nd=1 strong", g, "weak <= strong (N_D=1)", &mut fails);
        checks += ordered(rows, "nd=3 weak", "nd=3 strong", g, "weak <= strong (N_D=3)", &mut fails);
    }
    // high Ω_SR: the upper half of the 0-40 dB sweep
    let high: Vec<f64> = [20.0, 25.0, 30.0, 35.0, 40.0].to_vec();
    if let Some((_, rows)) = &fig3 {
        checks += ordered(rows, "eta=2.5", "eta=3", &high, "eta 2.5 <= 3", &mut fails);
        checks += ordered(rows, "eta=3", "eta=3.5", &high, "eta 3 <= 3.5", &mut fails);
    }
    if let Some((_, rows)) = &fig4 {
        checks += ordered(rows, "alpha=0.8", "alpha=0.5", &high, "alpha 0.8 <= 0.5", &mut fails);
        checks += ordered(rows, "alpha=0.5", "alpha=0.2", &high, "alpha 0.5 <= 0.2", &mut fails);
    }
    Outcome {
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            format!("{checks} ordering checks on fig2-fig5 grids (tol 1e-9)")
        } else {
            format!("{} of {checks} failed: {}", fails.len(), fails.join("; "))
        },
    }
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut fails: Vec<String> = Vec::new();
    let mut count = 0;
    let mut check = |ok: bool, what: String| {
        count += 1;
        if !ok {
            fails.push(what);
        }
    };
    let a_grid: Vec<f64> = (0..=39).map(|i| 0.5 + 0.5 * i as f64).collect();
    let x_grid: Vec<f64> = (0..=40).map(|i| 0.01 * 5000f64.powf(i as f64 / 40.0)).collect();
    for &a in &a_grid {
        for &x in &x_grid {
            let lg = |a: f64| lower_gamma(a, x).unwrap();
            let lhs = lg(a + 1.0);
            let rhs = a * lg(a) - (a * x.ln() - x).exp();
            check(
                (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1e-300),
                format!("recurrence a={a} x={x}"),
            );
            let sum = lg(a) + upper_gamma(a, x).unwrap();
            check((sum - gamma(a)).abs() <= 1e-12 * gamma(a), format!("complement a={a} x={x}"));
        }
    }
    let contour = MeijerOptions {
        method: MethodChoice::Contour,
        ..MeijerOptions::default()
    };
    let within = |spec: &MeijerGSpec, exact: f64| -> (bool, String) {
        match meijer_g_with(spec, &contour) {
            Ok(r) => (
                (r.value - exact).abs() <= r.abs_error_estimate + 4.0 * f64::EPSILON * exact.abs(),
                format!("G{:?} = {} vs {exact}", spec, r.value),
            ),
            Err(e) => (false, format!("G{spec:?}: {e}")),
        }
    };
    for &z in &[0.05, 0.7, 3.0, 15.0] {
        let (ok, msg) = within(&MeijerGSpec::new(1, 0, vec![], vec![0.0], z).unwrap(), (-z as f64).exp());
        check(ok, msg);
        for &a in &[0.5, 1.7, 4.0] {
            // Υ(a, z) = G^{1,1}_{1,2}[z | 1; a, 0]
            let spec = MeijerGSpec::new(1, 1, vec![1.0], vec![a, 0.0], z).unwrap();
            let (ok, msg) = within(&spec, lower_gamma(a, z).unwrap());
            check(ok, msg);
            // (1+z)^{-a} = G^{1,1}_{1,1}[z | 1-a; 0] / Γ(a)
            let spec = MeijerGSpec::new(1, 1, vec![1.0 - a], vec![0.0], z).unwrap();
            let (ok, msg) = within(&spec, gamma(a) * (1.0 + z).powf(-a));
            check(ok, msg);
        }
    }
    let fso_like = [
        MeijerGSpec::new(3, 0, vec![2.21], vec![1.21, 2.902, 2.51], 0.4).unwrap(),
        MeijerGSpec::new(3, 0, vec![5.0], vec![4.0, 2.064, 1.342], 2.5).unwrap(),
        MeijerGSpec::new(3, 1, vec![0.0, 2.21], vec![1.21, 2.902, 2.51, -1.0], 0.2).unwrap(),
        MeijerGSpec::new(2, 1, vec![0.3], vec![0.5, 1.25, 0.0], 0.6).unwrap(),
    ];
    for spec in &fso_like {
        match (meijer_g_with(spec, &contour), residue_series(spec, 0.0)) {
            (Ok(c), Ok(r)) => check(
                (c.value - r.value).abs() <= c.abs_error_estimate + r.abs_error_estimate,
                format!("methods differ for {spec:?}: {} vs {}", c.value, r.value),
            ),
            (c, r) => check(false, format!("cross-check unavailable for {spec:?}: {c:?} {r:?}")),
        }
        let mut h = 0.4;
        let mut prev = contour_at_step(spec, h).unwrap();
        for _ in 0..4 {
            h *= 0.5;
            let next = contour_at_step(spec, h).unwrap();
            let noise = 64.0 * f64::EPSILON * prev.value.abs().max(1e-300);
            check(
                next.abs_error_estimate <= prev.abs_error_estimate + 10.0 * noise,
                format!("refinement h={h} raised the error estimate for {spec:?}"),
            );
            prev = next;
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    Outcome {
        pass: fails.is_empty() && seconds < 10.0,
        detail: format!(
            "{} of {count} identities hold, {seconds:.2} s (< 10 s){}",
            count - fails.len(),
            if fails.is_empty() { String::new() } else { format!(": {}", fails[..fails.len().min(5)].join("; ")) }
        ),
    }
}

/// Upper bound on the KS statistic sup|F_n - F| from F evaluated on an
/// increasing grid: between grid points both functions are monotone.
fn ks_bound(sorted: &[f64], grid: &[f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let below = |x: f64| sorted.partition_point(|&v| v < x) as f64 / n;
    let at_or_below = |x: f64| sorted.partition_point(|&v| v <= x) as f64 / n;
    let f: Vec<f64> = grid.iter().map(|&x| cdf(x)).collect();
    let mut d: f64 = f[0].max(below(grid[0]));
    for k in 0..grid.len() - 1 {
        d = d.max(below(grid[k + 1]) - f[k]).max(f[k + 1] - at_or_below(grid[k]));
    }
    d.max(1.0 - at_or_below(grid[grid.len() - 1]))
        .max((1.0 - f[grid.len() - 1]).abs())
}

fn ks_exact(sorted: &[f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

fn criterion_7() -> Outcome {
    const N: usize = 100_000;
    let critical = 1.628 / (N as f64).sqrt();
    let mut parts = Vec::new();
    let mut pass = true;
    let mut rng = ChaCha8Rng::seed_from_u64(0x4b53);
    for (r, xi, omega) in [(1, 1.1, 20.0), (2, 1.1, 20.0), (1, 2.0, 5.0), (2, 2.0, 30.0)] {
        let mut s = fig_base();
        s.fso.r = r;
        s.fso.xi = xi;
        s.fso.omega_sr_db = omega;
        let link = s.links().unwrap().sr;
        let table = FsoInverseTable::build(&link).unwrap();
        let mut x: Vec<f64> = (0..N).map(|_| table.sample(&mut rng)).collect();
        x.sort_by(f64::total_cmp);
        let grid: Vec<f64> = (1..4000).map(|k| table.quantile(k as f64 / 4000.0)).collect();
        let d = ks_bound(&x, &grid, &|g| link.cdf(g).unwrap());
        pass &= d < critical;
        parts.push(format!("FSO r={r} xi={xi}: D<={d:.2e}"));
    }
    for (m, n, omega) in [(1, 1, 0.0), (2, 3, 5.0), (3, 2, 3.0)] {
        let mut s = fig_base();
        s.rf_d.m = m;
        s.rf_d.n_antennas = n;
        s.rf_d.omega_db = omega;
        let link = s.links().unwrap().rd;
        let sampler = link.sampler();
        let mut x: Vec<f64> = (0..N).map(|_| sampler.sample(&mut rng)).collect();
        x.sort_by(f64::total_cmp);
        let d = ks_exact(&x, &|g| gamma_p(link.tau as f64, link.lambda * g).unwrap());
        pass &= d < critical;
        parts.push(format!("Gamma tau={}: D={d:.2e}", link.tau));
    }
    Outcome {
        pass,
        detail: format!("n=1e5, 1% critical {critical:.2e}; {}", parts.join(", ")),
    }
}

fn criterion_8() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let wide = workers().max(4);
    for name in sop_core::experiments::PRESET_NAMES {
        let mut spec = preset(name).unwrap();
        spec.mc.n_samples = 200_000;
        let render = |w: usize| {
            let mut s = spec.clone();
            s.mc.n_workers = w;
            run_to_csv(&s).map(|(csv, _)| csv)
        };
        match (render(1), render(wide)) {
            (Ok(a), Ok(b)) => {
                let same = a == b;
                pass &= same;
                parts.push(format!("{name} {}", if same { "identical" } else { "DIFFERS" }));
            }
            (a, b) => {
                pass = false;
                parts.push(format!("{name} failed: {:?} {:?}", a.err(), b.err()));
            }
        }
    }
    Outcome {
        pass,
        detail: format!("workers 1 vs {wide}: {}", parts.join(", ")),
    }
}

fn main() {
    // `cargo test -- --list` and filters are not meaningful for this target
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let mut all = true;
    match evaluate_grid() {
        Ok((grid, seconds)) => {
            all &= report(1, "three-way agreement", &criterion_1(&grid, seconds));
            all &= report(2, "term-level equivalence", &criterion_2(&grid));
        }
        Err(e) => {
            let o = Outcome {
                pass: false,
                detail: format!("grid evaluation failed: {e}"),
            };
            all &= report(1, "three-way agreement", &o);
            all &= report(2, "term-level equivalence", &o);
        }
    }
    all &= report(3, "zero-rate collapse", &criterion_3());
    all &= report(4, "diversity-order slope", &criterion_4());
    all &= report(5, "figure orderings", &criterion_5());
    all &= report(6, "special-function identities", &criterion_6());
    all &= report(7, "sampler fidelity", &criterion_7());
    all &= report(8, "determinism across workers", &criterion_8());
    if !all {
        std::process::exit(1);
    }
}
