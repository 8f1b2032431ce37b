use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use psolab::adversaries::ADVERSARIES;
use psolab::baseline::{b_formula, b_formula_ratio};
use psolab::harness::{
    parse_weight, run_experiment_with, sweep, write_csv, write_sweep_csv, Axis, Experiment, ExperimentConfig,
    Workers,
};
use psolab::mechanisms::MECHANISMS;
use psolab::Error;

#[derive(Parser)]
#[command(name = "psolab", version, about = "Predicate singling-out experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Print B(n, w) = n·w·(1−w)^(n−1) to 12 significant digits.
    Baseline {
        #[arg(long)]
        n: u64,
        /// Weight as a decimal, a fraction `a/b` or a power `2^-k`.
        #[arg(long)]
        w: String,
    },
    /// Run one experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        out: Format,
        /// Worker threads; 0 uses every core. PSOLAB_WORKERS overrides this.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Include per-trial records in JSON output.
        #[arg(long)]
        verbose: bool,
    },
    /// Run a config once per value of one axis.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of epsilon, m, k, n, d, w_low.
        #[arg(long)]
        axis: String,
        /// Comma-separated values; `inf` is accepted for epsilon.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, value_enum, default_value = "csv")]
        out: Format,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// List registered mechanisms and adversaries.
    List,
}

/// Setup failures exit 2, failures while running exit 3.
enum Failure {
    Config(Error),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn workers(flag: usize) -> Result<Workers, Failure> {
    match std::env::var("PSOLAB_WORKERS") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Workers)
            .map_err(|_| Failure::Config(Error::Config(format!("PSOLAB_WORKERS={v:?} is not a count")))),
        Err(_) => Ok(Workers(flag)),
    }
}

fn load(path: &Path, seed: Option<u64>, trials: Option<u64>) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(Error::Config(format!("{}: {e}", path.display()))))?;
    let mut cfg = ExperimentConfig::from_json(&text).map_err(Failure::Config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(t) = trials {
        cfg.trials = t;
    }
    Ok(cfg)
}

/// `v` rounded to `digits` significant digits, in positional notation.
fn significant(v: f64, digits: i32) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let decimals = (digits - 1 - v.abs().log10().floor() as i32).max(0);
    format!("{v:.*}", decimals as usize)
}

fn baseline(n: u64, w: &str) -> Result<f64, Failure> {
    let cfg = |e: Error| Failure::Config(e);
    let ratio = w
        .split_once('/')
        .and_then(|(a, b)| Some((a.trim().parse::<u64>().ok()?, b.trim().parse::<u64>().ok()?)));
    let v = match ratio {
        Some((a, b)) if b > 0 && a <= b && n >= 1 => b_formula_ratio(n, a, b),
        _ => {
            let w = parse_weight(w).map_err(cfg)?;
            if n < 1 || !(0.0..=1.0).contains(&w) {
                return Err(cfg(Error::Config(format!("need n >= 1 and 0 <= w <= 1, got n={n}, w={w}"))));
            }
            b_formula(n, w)
        }
    };
    Ok(v)
}

fn resolve(cfg: ExperimentConfig) -> Result<Experiment, Failure> {
    let exp = cfg.resolve().map_err(Failure::Config)?;
    for w in &exp.warnings {
        eprintln!("warning: {w}");
    }
    Ok(exp)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Baseline { n, w } => writeln!(out, "{}", significant(baseline(n, &w)?, 12))?,
        Command::List => {
            writeln!(out, "mechanisms:")?;
            for (name, about) in MECHANISMS {
                writeln!(out, "  {name:<24}{about}")?;
            }
            writeln!(out, "adversaries:")?;
            for (name, about) in ADVERSARIES {
                writeln!(out, "  {name:<24}{about}")?;
            }
        }
        Command::Run {
            config,
            seed,
            trials,
            out: format,
            workers: w,
            verbose,
        } => {
            let exp = resolve(load(&config, seed, trials)?)?;
            let report = run_experiment_with(&exp, workers(w)?, verbose)?;
            match format {
                Format::Csv => write_csv(&[report], &mut out)?,
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report).map_err(Error::from)?)?,
            }
        }
        Command::Sweep {
            config,
            axis,
            values,
            seed,
            trials,
            out: format,
            workers: w,
        } => {
            let base = load(&config, seed, trials)?;
            let axis: Axis = axis.parse().map_err(Failure::Config)?;
            if values.is_empty() {
                return Err(Failure::Config(Error::Config("--values is empty".into())));
            }
            // validate every point before running any
            for v in &values {
                resolve(psolab::harness::apply_axis(&base, axis, v).map_err(Failure::Config)?)?;
            }
            let rows = sweep(&base, axis, &values, workers(w)?)?;
            match format {
                Format::Csv => write_sweep_csv(&rows, &mut out)?,
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&rows).map_err(Error::from)?)?,
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("psolab: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("psolab: {e}");
            ExitCode::from(3)
        }
    }
}
