//! Command-line front end; every command ends by writing a run manifest.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use repulsion_core::variational::{ALPHA_MAX, ALPHA_MIN};
use repulsion_core::SpeedConstants;
use serde_json::{json, Value};

use crate::error::{LabError, Result};
use crate::experiments::{
    self, Experiment, McParams, TABLE_ALPHA_MAX, TABLE_ALPHA_MIN, TABLE_ROWS,
};
use crate::io::{self, fmt_f64, RunManifest, SpeedConstantsJson};
use crate::tolerances::Tolerances;

#[derive(Debug, Parser)]
#[command(
    name = "repulsion",
    version,
    about = "Rate tables, speed constants and Monte Carlo checks for the local-time ceiling problem"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate J(alpha) and derive the speed constants.
    RateTable(RateTableArgs),
    /// Tail masses of the optimal density near 1 and their exponent.
    Tail(TailArgs),
    /// Scan the detour inequality over a range of speeds.
    Detour(DetourArgs),
    /// Run a Monte Carlo experiment.
    Mc(McArgs),
}

#[derive(Debug, Args)]
pub struct Outputs {
    /// Main CSV output.
    #[arg(long)]
    pub out: PathBuf,
    /// Companion JSON (default: the CSV path with a .json extension).
    #[arg(long)]
    pub json: Option<PathBuf>,
}

impl Outputs {
    fn json_path(&self) -> PathBuf {
        self.json
            .clone()
            .unwrap_or_else(|| self.out.with_extension("json"))
    }

    fn manifest_path(&self) -> PathBuf {
        self.out.with_extension("manifest.json")
    }
}

#[derive(Debug, Args)]
pub struct RateTableArgs {
    #[arg(long, default_value_t = TABLE_ALPHA_MIN)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = TABLE_ALPHA_MAX)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = TABLE_ROWS)]
    pub n: usize,
    #[command(flatten)]
    pub outputs: Outputs,
}

#[derive(Debug, Args)]
pub struct TailArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eps_min: f64,
    #[arg(long, default_value_t = 1e-1)]
    pub eps_max: f64,
    #[arg(long, default_value_t = 20)]
    pub n: usize,
    #[command(flatten)]
    pub outputs: Outputs,
}

#[derive(Debug, Args)]
pub struct DetourArgs {
    #[arg(long, default_value_t = 1.2)]
    pub v_min: f64,
    #[arg(long, default_value_t = 3.5)]
    pub v_max: f64,
    #[arg(long, default_value_t = 47)]
    pub n: usize,
    /// Reuse a rate table CSV instead of recomputing the default one.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[command(flatten)]
    pub outputs: Outputs,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(value_enum)]
    pub experiment: Experiment,
    /// Time horizon or CDF point.
    #[arg(long)]
    pub s: Option<f64>,
    /// Starting level.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub paths: Option<u64>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Hitting level (rayknight1) or reflection window (rayknight2).
    #[arg(long)]
    pub level: Option<f64>,
    /// Local time budget at 0 (rayknight2).
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// JSON file overriding entries of the tolerance table.
    #[arg(long)]
    pub tolerances: Option<PathBuf>,
    #[command(flatten)]
    pub outputs: Outputs,
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: &Command) -> Result<()> {
    let start = Instant::now();
    let (name, outputs, parameters, seed) = match command {
        Command::RateTable(a) => ("rate-table", &a.outputs, rate_table(a)?, None),
        Command::Tail(a) => ("tail", &a.outputs, tail(a)?, None),
        Command::Detour(a) => ("detour", &a.outputs, detour(a)?, None),
        Command::Mc(a) => ("mc", &a.outputs, mc(a)?, Some(a.seed)),
    };
    let manifest = RunManifest {
        command: name.to_owned(),
        parameters,
        seed,
        outputs: vec![outputs.out.clone(), outputs.json_path()],
        wall_time: start.elapsed().as_secs_f64(),
    };
    manifest.save(&outputs.manifest_path())
}

type Params = BTreeMap<String, Value>;

fn params(pairs: &[(&str, Value)]) -> Params {
    pairs
        .iter()
        .map(|(k, v)| ((*k).to_owned(), v.clone()))
        .collect()
}

fn rate_table(a: &RateTableArgs) -> Result<Params> {
    let band_ok = a.alpha_min >= ALPHA_MIN && a.alpha_max <= ALPHA_MAX && a.alpha_min < a.alpha_max;
    if !band_ok || a.n < 3 {
        return Err(LabError::Usage(format!(
            "need {ALPHA_MIN} <= alpha_min < alpha_max <= {ALPHA_MAX} and n >= 3, got {}, {}, {}",
            a.alpha_min, a.alpha_max, a.n
        )));
    }
    let table = experiments::rate_table(a.alpha_min, a.alpha_max, a.n)?;
    io::save_rate_table(&a.outputs.out, &table)?;
    let constants: SpeedConstantsJson = SpeedConstants::from_table(&table)?.into();
    io::save_json(&a.outputs.json_path(), &constants)?;
    println!(
        "gamma_star {:.6}  gamma_bullet {:.6}  Gamma_bullet {:.6}  gamma_circ {:.6}",
        constants.gamma_star,
        constants.gamma_bullet,
        constants.gamma_bullet_cost,
        constants.gamma_circ
    );
    Ok(params(&[
        ("alpha_min", json!(a.alpha_min)),
        ("alpha_max", json!(a.alpha_max)),
        ("n", json!(a.n)),
    ]))
}

fn tail(a: &TailArgs) -> Result<Params> {
    let report = experiments::tail_study(a.alpha, a.eps_min, a.eps_max, a.n)?;
    let rows = report
        .rows
        .iter()
        .map(|(e, t, c)| vec![fmt_f64(*e), fmt_f64(*t), fmt_f64(*c)]);
    io::write_rows(
        BufWriter::new(File::create(&a.outputs.out)?),
        &["eps", "tail_mass", "c_eps3"],
        rows,
    )?;
    let summary = json!({
        "alpha": report.alpha,
        "coefficient": report.coefficient,
        "exponent": report.exponent,
    });
    io::save_json(&a.outputs.json_path(), &summary)?;
    println!("exponent {:.6}", report.exponent);
    Ok(params(&[
        ("alpha", json!(a.alpha)),
        ("eps_min", json!(a.eps_min)),
        ("eps_max", json!(a.eps_max)),
        ("n", json!(a.n)),
    ]))
}

fn detour(a: &DetourArgs) -> Result<Params> {
    let table = match &a.table {
        Some(p) => io::load_rate_table(p)?,
        None => experiments::default_rate_table()?,
    };
    let sweep = experiments::detour_sweep(&table, a.v_min, a.v_max, a.n)?;
    let rows = sweep.verdicts.iter().map(|d| {
        vec![
            fmt_f64(d.v),
            d.holds.to_string(),
            fmt_f64(d.worst_lambda),
            fmt_f64(d.worst_margin),
            d.evaluated.to_string(),
            d.skipped.to_string(),
        ]
    });
    io::write_rows(
        BufWriter::new(File::create(&a.outputs.out)?),
        &[
            "v",
            "holds",
            "worst_lambda",
            "worst_margin",
            "evaluated",
            "skipped",
        ],
        rows,
    )?;
    io::save_json(
        &a.outputs.json_path(),
        &json!({ "critical_speed": sweep.critical_speed }),
    )?;
    match sweep.critical_speed {
        Some(v) => println!("critical speed {v:.6}"),
        None => println!(
            "critical speed none: the inequality fails at v = {}",
            a.v_max
        ),
    }
    Ok(params(&[
        ("v_min", json!(a.v_min)),
        ("v_max", json!(a.v_max)),
        ("n", json!(a.n)),
        (
            "table",
            json!(a.table.as_deref().map(Path::display).map(|d| d.to_string())),
        ),
    ]))
}

fn mc(a: &McArgs) -> Result<Params> {
    let tol = match &a.tolerances {
        Some(p) => Tolerances::load(p)?,
        None => Tolerances::default(),
    };
    if a.workers == 0 {
        return Err(LabError::Usage("workers must be at least 1".into()));
    }
    let p = McParams {
        s: a.s,
        c: a.c,
        paths: a.paths,
        dt: a.dt,
        level: a.level,
        budget: a.budget,
        seed: a.seed,
        workers: a.workers,
    };
    let outcome = experiments::run_experiment(a.experiment, &p, &tol)?;
    io::save_bins(&a.outputs.out, &outcome.bins)?;
    io::save_json(&a.outputs.json_path(), &outcome.report)?;
    println!(
        "{} {}",
        if outcome.passed { "PASS" } else { "FAIL" },
        outcome.summary
    );
    let mut out = params(&[("experiment", json!(a.experiment.name()))]);
    if let Value::Object(m) = serde_json::to_value(p)? {
        out.extend(m);
    }
    Ok(out)
}
