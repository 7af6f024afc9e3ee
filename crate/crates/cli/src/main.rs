//! `rearrange`: batch runner for rearrangement-operator experiments.
//!
//! Every subcommand prints one JSON document `{command, config, pass, result}` (or a CSV
//! table for `sweep`) to stdout or `--output`. Exit status: 0 when every check passes,
//! 1 when a check fails, 2 for invalid configuration.

mod args;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use commands::*;

#[derive(Parser, Debug)]
#[command(name = "rearrange", version, about = "Experiments with Haar rearrangement operators")]
struct Cli {
    /// Seed for every random choice of the run.
    #[arg(long, global = true, env = "REARRANGE_SEED", default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Command {
    /// Operator norm of T_{p,τ} on L^p_X.
    Norm(NormArgs),
    /// Semenov constant sup |τ(C)*| / |C*|.
    Semenov(SemenovArgs),
    /// Carleson constant and union measure of a collection.
    Carleson(CarlesonArgs),
    /// Carleson-constant distortion of a map, in both directions.
    Distortion(DistortionArgs),
    /// UMD constant lower bound from martingale transforms.
    Umd(UmdArgs),
    /// Type constant lower bound of ℓ_r^d.
    Type(TypeArgs),
    /// Maximal inequality on random adapted sequences.
    VerifyMaximal(VerifyMaximalArgs),
    /// τ-monotonicity of the square function or the Rademacher average.
    VerifyMonotone(VerifyMonotoneArgs),
    /// Downward extrapolation bound for a τ-monotone operator.
    #[command(name = "verify-42")]
    #[serde(rename = "verify-42")]
    VerifyDownward(VerifyDownwardArgs),
    /// H^1 extrapolation bound for A_p under condition C.
    #[command(name = "verify-52")]
    #[serde(rename = "verify-52")]
    VerifyH1(VerifyH1Args),
    /// Checks condition C for one decomposition.
    ConditionC(ConditionCArgs),
    /// Writes a builder's map as JSON.
    Example(ExampleArgs),
    /// Type-divergence sweep over the number of glued blocks, as CSV.
    Sweep(SweepArgs),
}

/// How a run ended when it did not produce a report.
#[derive(Debug)]
pub enum Failure {
    Usage { field: &'static str, message: String },
    Io(String),
}

impl Failure {
    pub fn usage(field: &'static str, message: impl Into<String>) -> Failure {
        Failure::Usage {
            field,
            message: message.into(),
        }
    }
}

/// A finished run: the payload and whether its checks passed.
pub enum Report {
    Json { result: serde_json::Value, pass: bool },
    Csv { table: String, pass: bool },
}

impl Report {
    pub fn json(result: impl Serialize, pass: bool) -> Report {
        Report::Json {
            result: serde_json::to_value(result).expect("reports serialize"),
            pass,
        }
    }

    fn pass(&self) -> bool {
        match self {
            Report::Json { pass, .. } | Report::Csv { pass, .. } => *pass,
        }
    }
}

fn command_name(c: &Command) -> String {
    match serde_json::to_value(c).expect("arguments serialize") {
        serde_json::Value::Object(m) => m.keys().next().cloned().unwrap_or_default(),
        serde_json::Value::String(s) => s,
        _ => String::new(),
    }
}

fn run(cli: &Cli) -> Result<Report, Failure> {
    let seed = cli.seed;
    match &cli.command {
        Command::Norm(a) => norm(a, seed),
        Command::Semenov(a) => semenov(a, seed),
        Command::Carleson(a) => carleson(a),
        Command::Distortion(a) => distortion(a, seed),
        Command::Umd(a) => umd(a, seed),
        Command::Type(a) => type_constant(a, seed),
        Command::VerifyMaximal(a) => verify_maximal(a, seed),
        Command::VerifyMonotone(a) => verify_monotone(a, seed),
        Command::VerifyDownward(a) => verify_downward(a, seed),
        Command::VerifyH1(a) => verify_h1(a, seed),
        Command::ConditionC(a) => condition_c(a, seed),
        Command::Example(a) => example(a, seed),
        Command::Sweep(a) => sweep(a, seed),
    }
}

fn render(cli: &Cli, report: &Report) -> String {
    let name = command_name(&cli.command);
    let args = match serde_json::to_value(&cli.command).expect("arguments serialize") {
        serde_json::Value::Object(mut m) => m.remove(&name).unwrap_or(serde_json::Value::Null),
        _ => serde_json::Value::Null,
    };
    let config = serde_json::json!({ "seed": cli.seed, "args": args });
    match report {
        Report::Json { result, pass } => {
            let doc = serde_json::json!({
                "command": name,
                "config": config,
                "pass": pass,
                "result": result,
            });
            let mut s = serde_json::to_string_pretty(&doc).expect("json");
            s.push('\n');
            s
        }
        Report::Csv { table, .. } => format!("# command: {name}\n# config: {config}\n{table}"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match run(&cli) {
        Ok(r) => r,
        Err(Failure::Usage { field, message }) => {
            eprintln!("error: invalid value for `{field}`: {message}");
            return ExitCode::from(2);
        }
        Err(Failure::Io(message)) => {
            eprintln!("error: {message}");
            return ExitCode::from(2);
        }
    };
    let text = render(&cli, &report);
    match &cli.output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{text}"),
    }
    if report.pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
