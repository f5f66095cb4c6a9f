//! `lqcs`: command-line front end.
//!
//! Reports go to stdout as JSON (or CSV for tabular commands). With
//! `--out DIR` the same bytes are also written to `DIR/<command>.<ext>`.
//! Exit codes: 0 success, 2 invalid input, 3 enumeration budget exceeded,
//! 4 numerical failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use lqcs::guarantee::{certify, error_bound_dantzig, error_bound_l2, BoundInputs};
use lqcs::harness::{run_bound_audit, run_phase, write_records_csv, ExperimentConfig, TrialRecord};
use lqcs::io::{read_matrix, read_vector};
use lqcs::polytope::{decompose, DecompositionChecks, Term};
use lqcs::ric::{exact_ric_with_budget, mc_ric_lower, ric_profile, RicMethod, DEFAULT_ENUMERATION_BUDGET};
use lqcs::solver::{irls_lq, irls_lq_denoise, SolverOptions};
use lqcs::{Error, Result};

#[derive(Parser)]
#[command(name = "lqcs", version, about = "Sparse recovery by lq minimization under restricted isometry")]
struct Cli {
    /// Seed for randomized steps; overrides seeds in option and config files.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Also write the report into this directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    L2,
    Dantzig,
}

#[derive(Subcommand)]
enum Command {
    /// Restricted isometry constant of one order.
    Ric {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        order: usize,
        /// Enumerate every support (the default).
        #[arg(long, conflicts_with = "mc")]
        exact: bool,
        /// Lower bound from this many random supports.
        #[arg(long, value_name = "TRIALS")]
        mc: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
        budget: u128,
    },
    /// Checks the recovery condition at orders k+1 ..= max-order.
    Certify {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(short, long)]
        k: usize,
        #[arg(short, long)]
        q: f64,
        /// Defaults to min(k + 3, columns).
        #[arg(long)]
        max_order: Option<usize>,
        #[arg(long, value_name = "TRIALS")]
        mc: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_ENUMERATION_BUDGET)]
        budget: u128,
    },
    /// Stability bound for given constants.
    Bound {
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        q: f64,
        /// Sparsity level, required by the Dantzig model.
        #[arg(short, long)]
        k: Option<usize>,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        sigma: f64,
        /// l2 norm of the signal tail.
        #[arg(long, default_value_t = 0.0)]
        tail: f64,
    },
    /// Recovers a signal from measurements.
    Recover {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        measurements: PathBuf,
        #[arg(long)]
        q: f64,
        /// Residual radius; equality constraints when absent.
        #[arg(long)]
        eta: Option<f64>,
        /// Solver options as JSON.
        #[arg(long)]
        opts: Option<PathBuf>,
    },
    /// Writes a vector of T(alpha, t) as a convex combination of sparse vectors.
    Decompose {
        #[arg(long)]
        vector: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        t: usize,
    },
    /// Success rates over a (k, q) grid.
    Phase {
        #[arg(long)]
        config: PathBuf,
    },
    /// Checks the stability bound on certified random instances.
    Audit {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        max_order: Option<usize>,
    },
}

#[derive(Serialize)]
struct DecomposeOutput {
    lambdas: Vec<f64>,
    terms: Vec<Vec<f64>>,
    checks: DecompositionChecks,
}

enum Report {
    Json(String),
    Csv(Vec<u8>),
}

fn json<T: Serialize>(value: &T) -> Result<Report> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::numerical(e.to_string()))?;
    text.push('\n');
    Ok(Report::Json(text))
}

fn records_csv(records: &[TrialRecord]) -> Result<Report> {
    let mut buf = Vec::new();
    write_records_csv(records, &mut buf)?;
    Ok(Report::Csv(buf))
}

fn csv_rows(header: &str, rows: impl IntoIterator<Item = String>) -> Report {
    let mut text = format!("{header}\n");
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    Report::Csv(text.into_bytes())
}

fn no_csv(command: &str) -> Error {
    Error::domain(format!("{command} has no CSV output; use --format json"))
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(&'static str, Report)> {
    let csv = cli.format == Format::Csv;
    match &cli.command {
        Command::Ric { matrix, order, exact: _, mc, budget } => {
            let a = read_matrix(matrix)?;
            let est = match mc {
                Some(trials) => mc_ric_lower(&a, *order, *trials, cli.seed.unwrap_or(0))?,
                None => exact_ric_with_budget(&a, *order, *budget)?,
            };
            let report = if csv {
                csv_rows(
                    "order,value,mode,supports_examined",
                    [format!("{},{},{:?},{}", est.order, est.value, est.mode, est.supports_examined)],
                )
            } else {
                json(&est)?
            };
            Ok(("ric", report))
        }
        Command::Certify { matrix, k, q, max_order, mc, budget } => {
            let a = read_matrix(matrix)?;
            let top = max_order.unwrap_or((k + 3).min(a.cols()));
            if top <= *k {
                return Err(Error::domain(format!("max order {top} must exceed k = {k}")));
            }
            let method = match mc {
                Some(trials) => RicMethod::MonteCarlo { trials: *trials, seed: cli.seed.unwrap_or(0) },
                None => RicMethod::Exact { budget: *budget },
            };
            let deltas = ric_profile(&a, (k + 1)..=top, method)?;
            let cert = certify(&deltas, *k, *q, top)?;
            if csv {
                return Err(no_csv("certify"));
            }
            Ok(("certify", json(&cert)?))
        }
        Command::Bound { model, delta, s, q, k, eps, eta, sigma, tail } => {
            let inputs = BoundInputs {
                delta: *delta,
                s: *s,
                q: *q,
                epsilon: *eps,
                eta: *eta,
                sigma: *sigma,
                tail2: *tail,
            };
            let report = match model {
                Model::L2 => error_bound_l2(&inputs)?,
                Model::Dantzig => {
                    let k = k.ok_or_else(|| Error::domain("the Dantzig bound needs -k"))?;
                    error_bound_dantzig(&inputs, k)?
                }
            };
            if csv {
                return Err(no_csv("bound"));
            }
            Ok(("bound", json(&report)?))
        }
        Command::Recover { matrix, measurements, q, eta, opts } => {
            let a = read_matrix(matrix)?;
            let y = read_vector(measurements)?;
            let mut options = match opts {
                Some(path) => {
                    let text = fs::read_to_string(path)?;
                    serde_json::from_str::<SolverOptions>(&text)
                        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
                }
                None => SolverOptions::default(),
            };
            if let Some(s) = cli.seed {
                options.seed = s;
            }
            let result = match eta {
                Some(eta) => irls_lq_denoise(&a, &y, *q, *eta, &options)?,
                None => irls_lq(&a, &y, *q, &options)?,
            };
            let report = if csv {
                csv_rows("index,value", result.x_hat.iter().enumerate().map(|(i, v)| format!("{i},{v}")))
            } else {
                json(&result)?
            };
            Ok(("recover", report))
        }
        Command::Decompose { vector, alpha, t } => {
            let v = read_vector(vector)?;
            let dec = decompose(&v, *alpha, *t)?;
            let checks = dec.check();
            let (lambdas, terms) = dec.terms.into_iter().map(|Term { lambda, u }| (lambda, u.to_vec())).unzip();
            if csv {
                return Err(no_csv("decompose"));
            }
            Ok(("decompose", json(&DecomposeOutput { lambdas, terms, checks })?))
        }
        Command::Phase { config } => {
            let cfg = load_config(config, cli.seed)?;
            let report = run_phase(&cfg)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let out = if csv { records_csv(&report.records)? } else { json(&report)? };
            Ok(("phase", out))
        }
        Command::Audit { config, max_order } => {
            let cfg = load_config(config, cli.seed)?;
            let dump = cli.out.as_ref().map(|d| d.join("violations"));
            let report = run_bound_audit(&cfg, *max_order, dump.as_deref())?;
            let out = if csv { records_csv(&report.records)? } else { json(&report)? };
            Ok(("audit", out))
        }
    }
}

fn emit(cli: &Cli, name: &str, report: Report) -> Result<()> {
    let (bytes, ext) = match report {
        Report::Json(text) => (text.into_bytes(), "json"),
        Report::Csv(bytes) => (bytes, "csv"),
    };
    if let Some(dir) = &cli.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{name}.{ext}")), &bytes)?;
    }
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(&bytes)?;
    stdout.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = (|| {
        if let Some(n) = cli.threads {
            if n == 0 {
                return Err(Error::domain("--threads must be at least 1"));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .map_err(|e| Error::numerical(e.to_string()))?;
        }
        let (name, report) = run(&cli)?;
        emit(&cli, name, report)
    })();
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
