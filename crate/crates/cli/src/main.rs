//! `equifact`: batch entry points over instance files.
//!
//! Exit codes: 0 pass, 1 certificate failure, 2 malformed input,
//! 3 degenerate weight (T not injective on its support).

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use equifact::factorization::trace_csv;
use equifact::instance::Instance;
use equifact::instances::bundled;
use equifact::report::{run_factorize, run_unitarize, run_verify, RunFlags, VerifyOptions};
use equifact::Error;

const EXIT_CERTIFICATE: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "equifact", version, about = "Equivariant factorization and unitarization of finite instances")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the minimax problem at every level and assemble the invariant weight.
    Factorize {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Factorize, build the invariant inner product and the unitarizer.
    Unitarize {
        #[command(flatten)]
        run: RunArgs,
        /// Also build the group-average Gram matrix (finite groups only).
        #[arg(long)]
        oracle: bool,
    },
    /// Run the probabilistic lemma suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Instance file, or the name of a bundled instance.
    instance: String,
    /// Number of levels J.
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Gaussian samples for the empirical bound check.
    #[arg(long)]
    samples: Option<usize>,
    /// Write the solver trace as CSV to this path.
    #[arg(long, value_name = "CSV")]
    trace: Option<PathBuf>,
    /// Word-ball radius for finitely presented groups.
    #[arg(long, value_name = "L")]
    word_radius: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo samples per Gaussian case and per sampled Khintchine vector.
    #[arg(long, default_value_t = 100_000)]
    samples: usize,
    /// Largest n for exact Khintchine enumeration.
    #[arg(long, default_value_t = 14)]
    exact_max: usize,
    /// Hull-tail tuples per bundled instance.
    #[arg(long, default_value_t = 1000)]
    tuples: usize,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::LinearProgram(_) | Error::Singular(_) | Error::NotPositiveDefinite { .. } => {
                EXIT_CERTIFICATE
            }
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn load(arg: &str, word_radius: Option<usize>) -> Result<Instance, Failure> {
    let path = Path::new(arg);
    if !path.exists() {
        let name = arg.strip_suffix(".json").unwrap_or(arg);
        if let Some(inst) = bundled(name) {
            return inst.map_err(Failure::input);
        }
    }
    Instance::load(path, word_radius).map_err(Failure::input)
}

fn write_out(out: Option<&Path>, json: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, format!("{json}\n"))
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn to_json<T: serde::Serialize>(report: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(report).map_err(|e| Failure::input(e.to_string()))
}

fn flags(run: &RunArgs) -> RunFlags {
    RunFlags {
        levels: run.levels,
        tol: run.tol,
        seed: run.seed,
        samples: run.samples,
        trace: run.trace.is_some(),
    }
}

fn write_trace(run: &RunArgs, result: &equifact::factorization::FactorizationResult) -> Result<(), Failure> {
    if let Some(p) = &run.trace {
        std::fs::write(p, trace_csv(result))
            .map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

fn factorize_cmd(run: &RunArgs) -> Result<u8, Failure> {
    let inst = load(&run.instance, run.word_radius)?;
    let report = run_factorize(&inst, &flags(run), now())?;
    write_trace(run, &report.result)?;
    write_out(run.out.as_deref(), &to_json(&report)?)?;
    if report.passed {
        eprintln!(
            "{}: pass, bound certificate {:.6e}",
            report.instance, report.result.bound_certificate
        );
        Ok(0)
    } else {
        eprintln!("{}: certificate failure: {}", report.instance, report.result.failures.join("; "));
        Ok(EXIT_CERTIFICATE)
    }
}

fn unitarize_cmd(run: &RunArgs, oracle: bool) -> Result<u8, Failure> {
    let inst = load(&run.instance, run.word_radius)?;
    let (report, fr) = run_unitarize(&inst, &flags(run), oracle, now())?;
    write_trace(run, &fr)?;
    write_out(run.out.as_deref(), &to_json(&report)?)?;
    let code = report.outcome.exit_code() as u8;
    match code {
        0 => {
            let worst = report
                .factorization_route
                .iter()
                .chain(&report.oracle_route)
                .map(|r| r.worst_residual)
                .fold(0.0, f64::max);
            eprintln!("{}: pass, unitarizer residual {worst:.3e}", report.instance);
        }
        3 => eprintln!(
            "{}: T is not injective on the weight support (smallest singular value {:.3e})",
            report.instance, report.min_singular_value
        ),
        _ => {
            let mut reasons = report.factorization_failures.clone();
            for r in report.factorization_route.iter().chain(&report.oracle_route) {
                if !r.pass {
                    reasons.push(format!("{} route residual {:.3e}", r.route, r.worst_residual));
                }
            }
            eprintln!("{}: certificate failure: {}", report.instance, reasons.join("; "));
        }
    }
    Ok(code)
}

fn verify_cmd(args: &VerifyArgs) -> Result<u8, Failure> {
    let opts = VerifyOptions {
        seed: args.seed,
        samples: args.samples,
        exact_max: args.exact_max,
        tuples: args.tuples,
        ..VerifyOptions::default()
    };
    if opts.samples == 0 {
        return Err(Failure::input("samples must be positive"));
    }
    let report = run_verify(&opts, now())?;
    write_out(args.out.as_deref(), &to_json(&report)?)?;
    match report.first_failure() {
        None => {
            eprintln!("verify: all {} checks pass", report.checks.len());
            Ok(0)
        }
        Some(c) => {
            eprintln!(
                "verify: check \"{}\" failed with {} violations ({} = {:.3e})",
                c.name, c.violations, c.statistic, c.value
            );
            Ok(EXIT_CERTIFICATE)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::Factorize { run } => factorize_cmd(run),
        Command::Unitarize { run, oracle } => unitarize_cmd(run, *oracle),
        Command::Verify(args) => verify_cmd(args),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
