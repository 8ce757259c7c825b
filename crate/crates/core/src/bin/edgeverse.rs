use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use edgeverse::harness::{self, OracleConfig, SweepConfig};
use edgeverse::optimizer::{self, SolveOptions, Strategy};
use edgeverse::scenario::{generate_scenario, load_scenario, ScenarioOverrides};
use edgeverse::{Error, Result};

/// Joint data-size and user-server association for edge-served Metaverse players.
#[derive(Parser)]
#[command(name = "edgeverse", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a random scenario as JSON.
    Generate(GenerateArgs),
    /// Solve one scenario with one strategy and print the result as JSON.
    Solve(SolveArgs),
    /// Compare strategies over a grid of omega, d_min and seeds; writes CSV.
    Sweep(SweepArgs),
    /// Check the solvers against exhaustive enumeration on small instances.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct InstanceArgs {
    #[arg(long, default_value_t = 100)]
    users: usize,
    #[arg(long, default_value_t = 20)]
    servers: usize,
    /// Upper data-size bound (defaults to the scenario default, 10).
    #[arg(long)]
    dmax: Option<f64>,
}

#[derive(Args)]
struct SolverArgs {
    /// Gaussian samples per relaxation rounding.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Largest users*servers solved by a full relaxation.
    #[arg(long, default_value_t = 60)]
    sdr_size_cap: usize,
    /// Above the size cap, relax random user blocks instead of skipping the relaxation.
    #[arg(long)]
    subsample: bool,
    /// Fail instead of falling back when the relaxation is skipped or fails.
    #[arg(long)]
    no_fallback: bool,
    /// Alternating iterations.
    #[arg(long, default_value_t = 20)]
    max_iters: usize,
    /// Relative utility improvement below which iteration stops.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

impl SolverArgs {
    fn options(&self, seed: u64) -> SolveOptions {
        SolveOptions {
            max_iters: self.max_iters,
            tol: self.tol,
            seed,
            samples: self.samples,
            sdr_size_cap: self.sdr_size_cap,
            subsample: self.subsample,
            allow_fallback: !self.no_fallback,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Latency weight.
    #[arg(long, default_value_t = 2.0)]
    omega: f64,
    /// Lower data-size bound.
    #[arg(long = "dmin", default_value_t = 1.0)]
    d_min: f64,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Scenario JSON file; when omitted a scenario is generated from --users, --servers and --seed.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Latency weight of a generated scenario.
    #[arg(long)]
    omega: Option<f64>,
    /// Lower data-size bound of a generated scenario.
    #[arg(long = "dmin")]
    d_min: Option<f64>,
    /// One of optimal_latency_earning, optimal_earning, optimal_latency, random.
    #[arg(long, default_value_t = Strategy::OptimalLatencyEarning)]
    strategy: Strategy,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Number of consecutive seeds per cell.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    /// Latency weight (repeatable).
    #[arg(long, default_values_t = [2.0, 4.0])]
    omega: Vec<f64>,
    /// Lower data-size bound (repeatable).
    #[arg(long = "dmin", default_values_t = [1.0, 2.0, 3.0, 4.0, 5.0])]
    d_min: Vec<f64>,
    /// Strategy (repeatable).
    #[arg(long, default_values_t = Strategy::ALL)]
    strategy: Vec<Strategy>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Record measured solve times instead of zero.
    #[arg(long)]
    wall_time: bool,
    /// Re-solve this many rows and check their metrics against the file.
    #[arg(long, default_value_t = 0)]
    recheck: usize,
    /// Output CSV (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// User counts, cycled across seeds (repeatable).
    #[arg(long, default_values_t = [5, 6, 7])]
    users: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    servers: usize,
    #[arg(long, default_value_t = 50)]
    seeds: usize,
    #[arg(long, default_value_t = 0)]
    first_seed: u64,
    /// Random (scenario, assignment) pairs for the data-size check.
    #[arg(long, default_value_t = 100)]
    grid_pairs: usize,
    /// Gaussian samples per relaxation rounding.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Output report (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn generate(a: GenerateArgs) -> Result<()> {
    let o = ScenarioOverrides {
        omega: Some(a.omega),
        d_min: Some(a.d_min),
        d_max: a.instance.dmax,
        ..Default::default()
    };
    let s = generate_scenario(a.instance.users, a.instance.servers, a.seed, Some(&o))?;
    let mut out = output(a.out.as_deref())?;
    writeln!(out, "{}", s.to_json()?)?;
    out.flush()?;
    Ok(())
}

fn solve(a: SolveArgs) -> Result<()> {
    let s = match &a.scenario {
        Some(path) => load_scenario(path)?,
        None => {
            let o = ScenarioOverrides {
                omega: a.omega,
                d_min: a.d_min,
                d_max: a.instance.dmax,
                ..Default::default()
            };
            generate_scenario(a.instance.users, a.instance.servers, a.seed, Some(&o))?
        }
    };
    let r = optimizer::solve(&s, a.strategy, &a.solver.options(a.seed))?;
    let mut out = output(a.out.as_deref())?;
    let text = serde_json::to_string_pretty(&r).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<bool> {
    let cfg = SweepConfig {
        users: a.instance.users,
        servers: a.instance.servers,
        omegas: a.omega,
        d_mins: a.d_min,
        d_max: a.instance.dmax,
        first_seed: a.first_seed,
        seeds: a.seeds,
        strategies: a.strategy,
        solve: a.solver.options(0),
        record_wall_time: a.wall_time,
    };
    let rows = harness::run_comparison(&cfg)?;
    let mut out = output(a.out.as_deref())?;
    harness::write_csv(&rows, &mut out)?;
    out.flush()?;
    if a.recheck > 0 {
        let dev = harness::recheck(&cfg, &rows, a.recheck)?;
        let ok = dev <= 1e-9;
        eprintln!(
            "recheck: {} rows, max relative deviation {dev:.3e} [{}]",
            a.recheck.min(rows.len()),
            if ok { "PASS" } else { "FAIL" }
        );
        return Ok(ok);
    }
    Ok(true)
}

fn verify(a: VerifyArgs) -> Result<bool> {
    let cfg = OracleConfig {
        users: a.users,
        servers: a.servers,
        first_seed: a.first_seed,
        seeds: a.seeds,
        grid_pairs: a.grid_pairs,
        solve: SolveOptions {
            samples: a.samples,
            ..Default::default()
        },
    };
    let report = harness::run_oracle_suite(&cfg)?;
    let mut out = output(a.out.as_deref())?;
    harness::write_oracle_report(&report, &mut out)?;
    out.flush()?;
    Ok(report.summary.passed())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SolverFailure { .. } | Error::Capacity { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Cmd::Generate(a) => generate(a).map(|_| true),
        Cmd::Solve(a) => solve(a).map(|_| true),
        Cmd::Sweep(a) => sweep(a),
        Cmd::Verify(a) => verify(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
