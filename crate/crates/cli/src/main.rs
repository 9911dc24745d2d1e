//! soplab: secrecy outage experiments from the command line.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::json;

use sop_core::channel::SystemScenario;
use sop_core::experiments::{preset, run_to_csv, ExperimentSpec, Row};
use sop_core::oracle::{oracle_h_term, oracle_sop, OracleTerm};
use sop_core::special::meijer::{meijer_g, MeijerGSpec};
use sop_core::Error;

#[derive(Parser)]
#[command(name = "soplab", version, about = "Secrecy outage probability of mixed RF-FSO relay downlinks")]
struct Cli {
    /// Master seed for Monte Carlo engines.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    samples: Option<u64>,
    /// Worker threads for Monte Carlo and grid evaluation.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON file.
    Run { spec: PathBuf },
    /// Run a built-in figure preset (fig2 .. fig9).
    Preset { name: String },
    /// Evaluate one term (h11..h23, varrho, sop) by direct quadrature.
    Oracle { term: String, scenario: PathBuf },
    /// Special-function utilities.
    Specfun {
        #[command(subcommand)]
        action: Specfun,
    },
}

#[derive(Subcommand)]
enum Specfun {
    /// Evaluate Meijer-G functions given as {"m","n","a","b","z"} or a list of them.
    Eval { input: PathBuf },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GInput {
    One(MeijerGSpec),
    Many(Vec<MeijerGSpec>),
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Validation(format!("cannot read {}: {e}", path.display())))
}

fn parse<T: DeserializeOwned>(path: &Path) -> Result<T, Error> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::Validation(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_experiment(cli: &Cli, mut spec: ExperimentSpec) -> Result<(), Error> {
    if let Some(s) = cli.seed {
        spec.mc.master_seed = s;
    }
    if let Some(n) = cli.samples {
        spec.mc.n_samples = n;
    }
    if let Some(w) = cli.workers {
        spec.mc.n_workers = w;
    }
    let (csv, rows) = run_to_csv(&spec)?;
    let out = cli.out.clone().or_else(|| spec.output_path.as_ref().map(PathBuf::from));
    emit(out.as_deref(), &csv)?;
    summarize(&spec, &rows);
    Ok(())
}

fn summarize(spec: &ExperimentSpec, rows: &[Row]) {
    let failed: Vec<&Row> = rows.iter().filter(|r| r.outcome.is_err()).collect();
    eprintln!(
        "{}: {} rows, {} failed",
        if spec.name.is_empty() { "experiment" } else { &spec.name },
        rows.len(),
        failed.len()
    );
    for r in failed {
        if let Err(f) = &r.outcome {
            eprintln!("  {} @ {} [{}]: {}", r.curve, r.axis_value, r.engine.name(), f.message);
        }
    }
}

fn oracle(cli: &Cli, term: &str, path: &Path) -> Result<(), Error> {
    let scenario: SystemScenario = parse(path)?;
    let links = scenario.links()?;
    let policy = Default::default();
    let value = if term.eq_ignore_ascii_case("sop") {
        let b = oracle_sop(&links, &policy)?;
        json!({ "term": "sop", "value": b.sop, "abs_error": b.error })
    } else {
        let t: OracleTerm = term.parse()?;
        let r = oracle_h_term(t, &links, &policy)?;
        json!({ "term": t.to_string(), "value": r.value, "abs_error": r.error })
    };
    emit(cli.out.as_deref(), &format!("{value}\n"))
}

fn specfun_eval(cli: &Cli, path: &Path) -> Result<(), Error> {
    let specs = match parse::<GInput>(path)? {
        GInput::One(s) => vec![s],
        GInput::Many(v) => v,
    };
    let mut lines = String::new();
    for s in &specs {
        let r = meijer_g(s)?;
        lines.push_str(&serde_json::to_string(&r).map_err(|e| Error::Range(e.to_string()))?);
        lines.push('\n');
    }
    emit(cli.out.as_deref(), &lines)
}

fn dispatch(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        Command::Run { spec } => run_experiment(cli, ExperimentSpec::from_json(&read(spec)?)?),
        Command::Preset { name } => run_experiment(cli, preset(name)?),
        Command::Oracle { term, scenario } => oracle(cli, term, scenario),
        Command::Specfun {
            action: Specfun::Eval { input },
        } => specfun_eval(cli, input),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("soplab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
