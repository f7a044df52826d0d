//! `betacoal`: verification suites and parameter scans for Beta(a,b)-coalescents.

mod config;
mod grid;
mod scan;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use betacoal::export::{write_bytes, Cell, FileRecord, Table};
use betacoal::verify::{run_suite, CheckResult, Suite, VerifyOptions, DEFAULT_SEED};
use betacoal::ExecPolicy;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::Config;
use grid::{IntGrid, RealGrid};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Numeric(#[from] betacoal::Error),
    #[error("{0} check(s) failed")]
    Checks(usize),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use betacoal::Error as E;
        match self {
            CliError::Checks(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numeric(E::Regime { .. } | E::Admissibility { .. }) => 3,
            CliError::Numeric(E::Domain { .. } | E::Index(_)) => 2,
            CliError::Numeric(E::Root(_) | E::Io { .. }) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "betacoal", version, about = "Exact and Monte Carlo numerics for Beta(a,b)-coalescents")]
#[command(after_help = "Exit codes: 0 pass, 1 check failure, 2 usage error, 3 parameter regime error.")]
struct Cli {
    /// key = value file supplying defaults for any long flag
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV files and manifests
    #[arg(long, global = true, env = "BETACOAL_OUT_DIR")]
    out_dir: Option<PathBuf>,
    /// Run replicate loops and grid points on one thread
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run acceptance checks and write a report with its manifest
    Verify(VerifyArgs),
    /// Tabulate one quantity over a grid
    Scan(ScanArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    /// Checks 1-4: closed-form identities and total rates
    Identities,
    /// Checks 5, 8, 9: large-n behaviour
    Asymptotics,
    /// Checks 6, 7: rate function and its Legendre dual
    Duality,
    /// Checks 10-12: simulation against the exact engine
    Montecarlo,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Identities => Suite::Identities,
            SuiteArg::Asymptotics => Suite::Asymptotics,
            SuiteArg::Duality => Suite::Duality,
            SuiteArg::Montecarlo => Suite::MonteCarlo,
            SuiteArg::All => Suite::All,
        }
    }
}

#[derive(Debug, Args)]
struct VerifyArgs {
    suite: SuiteArg,
    /// Replicates for every Monte Carlo check (default: per-check values)
    #[arg(long, value_parser = grid::count)]
    replicates: Option<usize>,
    /// Base seed for the Monte Carlo checks [default: 42]
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Quantity {
    /// Columns x, I, I_k: rate function and its capped version (a > 1)
    Ratefn,
    /// Columns n, log_E, E, dyadic_exponent for constant theta or the ell-sequence
    LaplaceExponent,
    /// Columns n, record_probability (a < 1)
    Record,
    /// Columns n, partial, tail, bound: Kolmogorov-distance bound (a < 1, b > 1 - a)
    Kolmogorov,
    /// Columns n, lln_limit, mean_tau, mean_tau_over_ln_n[, mc_mean, mc_std_error] (a > 1)
    Lln,
    /// Columns x, exponent, hits, lower_bound_only, I, I_2: simulated upper tail (a > 1)
    Ldp,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    pub quantity: Quantity,
    /// First Beta parameter
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    /// Second Beta parameter
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Block counts: 500, 1..500, 100..1000/100, 10,100 or geom:100..10000:20
    #[arg(long = "n-grid", visible_alias = "n")]
    pub n_grid: Option<IntGrid>,
    /// Real grid for ratefn and ldp: 0..3/0.05 or 0.4,0.5
    #[arg(long = "x", visible_alias = "x-grid", allow_negative_numbers = true)]
    pub x: Option<RealGrid>,
    /// Constant integrand theta for laplace-exponent
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Use the ell-sequence with transform Gamma(b+ell+n-1)Gamma(b)/(Gamma(b+n-1)Gamma(b+ell))
    #[arg(long, allow_negative_numbers = true)]
    pub ell: Option<f64>,
    /// Level k of the capped rate function [default: 2]
    #[arg(long)]
    pub k: Option<usize>,
    /// Monte Carlo replicates (lln, ldp)
    #[arg(long, value_parser = grid::count)]
    pub replicates: Option<usize>,
    /// Monte Carlo seed [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Truncation level for the Kolmogorov bound [default: 20 x largest n]
    #[arg(long, value_parser = grid::count)]
    pub trunc: Option<usize>,
}

/// Everything a manifest records about one run.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub tool_version: &'static str,
    pub timestamp: String,
    pub outputs: Vec<FileRecord>,
    pub checks: Vec<CheckResult>,
}

impl RunManifest {
    pub fn new(command: String, parameters: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            command,
            parameters,
            seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            timestamp: chrono::Utc::now().to_rfc3339(),
            outputs: Vec::new(),
            checks: Vec::new(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).map_err(|e| CliError::Usage(e.to_string()))?;
        write_bytes(path, json.as_bytes())?;
        Ok(())
    }
}

pub struct Context {
    pub config: Config,
    pub out_dir: PathBuf,
    pub policy: ExecPolicy,
}

fn report_table(results: &[CheckResult]) -> Result<Table, CliError> {
    let mut t = Table::new(["id", "check", "status", "part", "measured", "tolerance", "passed"]);
    for r in results {
        for p in &r.parts {
            t.push(vec![
                Cell::Int(r.id.into()),
                r.name.as_str().into(),
                r.status().to_string().into(),
                p.label.as_str().into(),
                p.measured.into(),
                p.tolerance.into(),
                p.passed.into(),
            ])?;
        }
    }
    Ok(t)
}

fn verify(ctx: &Context, args: &VerifyArgs) -> Result<(), CliError> {
    let seed = match args.seed {
        Some(s) => s,
        None => ctx.config.get("seed", |s| s.parse::<u64>().map_err(|e| e.to_string()))?.unwrap_or(DEFAULT_SEED),
    };
    let replicates = match args.replicates {
        Some(r) => Some(r),
        None => ctx.config.get("replicates", grid::count)?,
    };
    if replicates == Some(0) {
        return Err(CliError::Usage("--replicates must be positive".into()));
    }
    let opts = VerifyOptions { seed, replicates, policy: ctx.policy };
    let suite: Suite = args.suite.into();
    let name = format!("{:?}", args.suite).to_lowercase();
    let results = run_suite(suite, &opts)?;
    for r in &results {
        println!("{r}");
    }
    let stem = format!("verify-{name}");
    let params = serde_json::json!({ "suite": name, "replicates": replicates, "checks": suite.ids() });
    let mut manifest = RunManifest::new(format!("verify {name}"), params, Some(seed));
    manifest.outputs.push(report_table(&results)?.write(&ctx.out_dir.join(format!("{stem}.csv")))?);
    manifest.checks = results.clone();
    manifest.write(&ctx.out_dir.join(format!("{stem}.manifest.json")))?;
    let failed = results.iter().filter(|r| r.failed()).count();
    if failed > 0 {
        return Err(CliError::Checks(failed));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let out_dir = match cli.out_dir {
        Some(d) => d,
        None => config.get("out-dir", |s| Ok(PathBuf::from(s)))?.unwrap_or_else(|| PathBuf::from("out")),
    };
    let policy = if cli.sequential { ExecPolicy::Sequential } else { ExecPolicy::Parallel };
    let ctx = Context { config, out_dir, policy };
    match &cli.command {
        Command::Verify(args) => verify(&ctx, args),
        Command::Scan(args) => scan::run(&ctx, args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
