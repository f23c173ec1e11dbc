//! `erdg`: runs the shock tube, Shu-Osher and smooth-wave experiments and the
//! studies built on them, writing CSV or JSON tables under `--out`.
//!
//! Exit codes: 0 success, 1 bad input or I/O, 2 solver blow-up, 3 failed check.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use entropy_rate_dg::experiment::output::{
    write_json, write_table, CompareRow, MaxDtRow, SnapshotRow, Table,
};
use entropy_rate_dg::experiment::run::{build_scheme, RunSummary};
use entropy_rate_dg::experiment::studies::{self, SearchSettings};
use entropy_rate_dg::experiment::{Format, ProblemConfig, ProblemId, RunError, RunOptions};
use entropy_rate_dg::time::Scheme;

#[derive(Parser, Debug)]
#[command(name = "erdg", version, about = "Entropy-rate corrected DG experiments for the 1D Euler equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sod-type shock tube, t_end 1.8.
    Shocktube1(RunArgs),
    /// Shock tube with a moving left state, t_end 1.2.
    Shocktube2(RunArgs),
    /// Shock interacting with a density wave, t_end 1.8.
    Shuosher(RunArgs),
    /// Periodic transport of a smooth density bump, t_end 5.
    Smoothwave(RunArgs),
    /// First-order Lax-Friedrichs reference run.
    Reference(ReferenceArgs),
    /// DG entropy history against the Lax-Friedrichs reference.
    CompareEntropy(CompareArgs),
    /// Grid convergence of the density on the smooth wave.
    Convergence(ConvergenceArgs),
    /// Largest stable multiple of the default time step.
    Maxdt(MaxDtArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Number of DG cells.
    #[arg(long, default_value_t = 100)]
    cells: usize,
    /// Polynomial degree p.
    #[arg(long, default_value_t = 3)]
    order: usize,
    /// Final time (defaults to the problem's own).
    #[arg(long)]
    t_end: Option<f64>,
    /// CFL number (defaults to 0.1 / (p^2 + p)).
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long, default_value = "ssprk43", value_parser = parse_scheme)]
    scheme: Scheme,
    /// Disable the degree p-1 branch of the interface predictor.
    #[arg(long)]
    no_truncation: bool,
    /// Run the plain DG scheme without the entropy correction.
    #[arg(long)]
    no_correction: bool,
    /// Sampling interval for snapshots and entropy comparisons.
    #[arg(long)]
    sample_dt: Option<f64>,
    /// Use the growing envelope exp((x-3)^2) for the smooth wave.
    #[arg(long)]
    positive_exponent: bool,
    /// Amplitude of the smooth-wave perturbation.
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Seed for randomised drivers; recorded in the run metadata.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 lets the runtime decide).
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Record per-cell correction diagnostics every this many steps (0 disables).
    #[arg(long, default_value_t = 1)]
    diagnostics_every: usize,
    /// Also write the filter operator as filter.json.
    #[arg(long)]
    dump_filter: bool,
}

#[derive(Args, Debug)]
struct ReferenceArgs {
    #[arg(long, default_value = "shocktube1")]
    problem: ProblemId,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long, default_value = "shocktube1")]
    problem: ProblemId,
    /// Cells of the Lax-Friedrichs reference.
    #[arg(long, default_value_t = 3000)]
    reference_cells: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    #[arg(long, default_value = "smoothwave")]
    problem: ProblemId,
    /// Comma-separated mesh sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [10, 15, 20, 25, 30, 40, 50])]
    cells_list: Vec<usize>,
    /// Fail with exit code 3 if the finest-pair L1 order is below this.
    #[arg(long)]
    min_order: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct MaxDtArgs {
    #[arg(long, default_value = "shocktube1")]
    problem: ProblemId,
    /// Bisection steps inside the multiplier bracket.
    #[arg(long, default_value_t = 12)]
    iterations: usize,
    #[arg(long, default_value_t = 1.0)]
    lower: f64,
    #[arg(long, default_value_t = 64.0)]
    upper: f64,
    #[command(flatten)]
    common: Common,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse()
}

/// How a command ended, mapped onto the exit code.
enum Failure {
    Input(String),
    BlowUp(RunError),
    Check(String),
}

impl From<entropy_rate_dg::experiment::output::OutputError> for Failure {
    fn from(e: entropy_rate_dg::experiment::output::OutputError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        if e.is_setup() {
            Failure::Input(e.to_string())
        } else {
            Failure::BlowUp(e)
        }
    }
}

#[derive(Serialize)]
struct Metadata<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    threads: usize,
    config: &'a ProblemConfig,
    #[serde(flatten)]
    result: T,
}

#[derive(Serialize)]
struct SnapshotEntry {
    t: f64,
    file: String,
}

#[derive(Serialize)]
struct RunResult<'a> {
    summary: &'a RunSummary,
    snapshots: Vec<SnapshotEntry>,
}

impl Common {
    fn config(&self, problem: ProblemId) -> ProblemConfig {
        let mut c = ProblemConfig::new(problem, self.cells, self.order);
        if let Some(t) = self.t_end {
            c.t_end = t;
        }
        c.cfl = self.cfl;
        c.scheme = self.scheme;
        c.truncation = !self.no_truncation;
        c.correction = !self.no_correction;
        c.sample_dt = self.sample_dt;
        c.positive_exponent = self.positive_exponent;
        c.amplitude = self.amplitude;
        c
    }

    fn path(&self, stem: &str) -> PathBuf {
        self.out.join(format!("{stem}.{}", self.format.extension()))
    }

    fn table<T: Table>(&self, rows: &[T]) -> Result<(), Failure> {
        Ok(write_table(&self.path(T::STEM), rows, self.format)?)
    }

    fn metadata<T: Serialize>(&self, command: &str, config: &ProblemConfig, result: T) -> Result<(), Failure> {
        let meta = Metadata {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.seed,
            threads: rayon::current_num_threads(),
            config,
            result,
        };
        Ok(write_json(&self.out.join("run.json"), &meta)?)
    }
}

fn write_failure(out: &Path, command: &str, err: &RunError) {
    #[derive(Serialize)]
    struct Record<'a> {
        command: &'a str,
        failure: &'a RunError,
    }
    if let Err(e) = write_json(&out.join("failure.json"), &Record { command, failure: err }) {
        eprintln!("could not write failure record: {e}");
    }
}

fn run_problem(problem: ProblemId, args: &RunArgs) -> Result<(), Failure> {
    let common = &args.common;
    let config = common.config(problem);
    let opts = RunOptions {
        snapshots: true,
        diagnostics_every: args.diagnostics_every,
        entropy_growth_limit: None,
    };
    if args.dump_filter {
        let scheme = build_scheme(&config).map_err(|e| Failure::Input(e.to_string()))?;
        write_json(&common.out.join("filter.json"), &scheme.filter.dump())?;
    }
    let output = entropy_rate_dg::experiment::run_problem(&config, &opts)?;

    let mut snapshots = Vec::with_capacity(output.snapshots.len());
    for (i, snap) in output.snapshots.iter().enumerate() {
        let stem = format!("{}_{i:04}", SnapshotRow::STEM);
        write_table(&common.path(&stem), &snap.rows, common.format)?;
        snapshots.push(SnapshotEntry {
            t: snap.t,
            file: format!("{stem}.{}", common.format.extension()),
        });
    }
    if let Some(last) = output.snapshots.last() {
        common.table(&last.rows)?;
    }
    common.table(&output.entropy)?;
    if args.diagnostics_every > 0 {
        common.table(&output.diagnostics)?;
    }
    common.metadata(
        problem.name(),
        &config,
        RunResult {
            summary: &output.summary,
            snapshots,
        },
    )?;
    println!(
        "{problem}: {} steps to t = {}, entropy {:.6e} -> {:.6e}, max violation {:.3e}",
        output.summary.steps,
        output.summary.final_time,
        output.summary.initial_entropy,
        output.summary.final_entropy,
        output.summary.max_violation
    );
    Ok(())
}

fn run_reference(args: &ReferenceArgs) -> Result<(), Failure> {
    let common = &args.common;
    let config = common.config(args.problem);
    let run = studies::reference_run(&config, common.cells)
        .map_err(|e| Failure::from(RunError::from_solver(0.0, 0, e)))?;
    let averages: Vec<SnapshotRow> = run
        .final_state
        .averages
        .iter()
        .enumerate()
        .map(|(k, u)| SnapshotRow {
            x: run.final_state.cell_center(k),
            rho: u.rho,
            rho_v: u.rho_v,
            energy: u.energy,
        })
        .collect();
    write_table(&common.path("reference_snapshot"), &averages, common.format)?;
    common.table(&studies::reference_samples(&run))?;

    #[derive(Serialize)]
    struct Result {
        steps: usize,
        final_time: f64,
    }
    common.metadata(
        "reference",
        &config,
        Result {
            steps: run.steps,
            final_time: run.final_state.time,
        },
    )?;
    println!("reference {}: {} steps on {} cells", args.problem, run.steps, common.cells);
    Ok(())
}

fn run_compare(args: &CompareArgs) -> Result<(), Failure> {
    let common = &args.common;
    let config = common.config(args.problem);
    let (comparison, dg, reference) = studies::entropy_comparison(&config, args.reference_cells)?;
    common.table::<CompareRow>(&comparison.rows)?;
    common.table(&dg.entropy)?;
    common.table(&studies::reference_samples(&reference))?;

    #[derive(Serialize)]
    struct Result<'a> {
        reference_cells: usize,
        tolerance: f64,
        max_excess: f64,
        passed: bool,
        failures: &'a [f64],
        summary: &'a RunSummary,
    }
    common.metadata(
        "compare-entropy",
        &dg.config,
        Result {
            reference_cells: args.reference_cells,
            tolerance: comparison.tolerance,
            max_excess: comparison.max_excess,
            passed: comparison.passed(),
            failures: &comparison.failures,
            summary: &dg.summary,
        },
    )?;
    println!(
        "compare-entropy: {} samples, max E_DG - E_ref = {:.3e}, tolerance {:.3e}",
        comparison.rows.len(),
        comparison.max_excess,
        comparison.tolerance
    );
    if comparison.passed() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "E_DG exceeds E_ref + tol at t = {:?}",
            comparison.failures
        )))
    }
}

fn run_convergence(args: &ConvergenceArgs) -> Result<(), Failure> {
    let common = &args.common;
    if args.cells_list.is_empty() {
        return Err(Failure::Input("--cells-list is empty".into()));
    }
    let config = common.config(args.problem);
    let rows = studies::convergence_study(&config, &args.cells_list)?;
    common.table(&rows)?;
    let finest = rows.last().and_then(|r| r.order_l1);

    #[derive(Serialize)]
    struct Result {
        cells: Vec<usize>,
        finest_order_l1: Option<f64>,
    }
    common.metadata(
        "convergence",
        &config,
        Result {
            cells: args.cells_list.clone(),
            finest_order_l1: finest,
        },
    )?;
    for r in &rows {
        println!("N = {:4}  L1 = {:.4e}  L2 = {:.4e}  order L1 = {:?}", r.cells, r.l1, r.l2, r.order_l1);
    }
    match (args.min_order, finest) {
        (Some(min), Some(order)) if !(order >= min) => {
            Err(Failure::Check(format!("finest-pair L1 order {order:.3} below {min}")))
        }
        (Some(_), None) => Err(Failure::Check("need at least two mesh sizes for an order".into())),
        _ => Ok(()),
    }
}

fn run_maxdt(args: &MaxDtArgs) -> Result<(), Failure> {
    let common = &args.common;
    let config = common.config(args.problem);
    let settings = SearchSettings {
        lower: args.lower,
        upper: args.upper,
        iterations: args.iterations,
        ..SearchSettings::default()
    };
    if !(settings.lower > 0.0 && settings.upper > settings.lower) {
        return Err(Failure::Input("need 0 < --lower < --upper".into()));
    }
    let result = studies::max_timestep_search(&config, &settings)?;
    common.table(&result.trials)?;
    if let (Some(m), Some(dt)) = (result.multiplier, result.dt) {
        common.table(&[MaxDtRow {
            order: config.degree,
            cells: config.cells,
            multiplier: m,
            dt,
        }])?;
    }
    common.metadata("maxdt", &config, &result)?;
    match (result.multiplier, result.doubled_unstable) {
        (Some(m), Some(true)) => {
            println!("maxdt: stable multiplier {m:.4}, unstable at {:.4}", 2.0 * m);
            Ok(())
        }
        (Some(m), _) if result.upper_stable => {
            println!("maxdt: bracket end {m} is stable; the limit lies beyond it");
            Err(Failure::Check(format!("stable at 2 x {m}, no certificate")))
        }
        (Some(m), _) => Err(Failure::Check(format!("stable at {m} and also at {}", 2.0 * m))),
        (None, _) => Err(Failure::Check(format!("multiplier {} is already unstable", settings.lower))),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Shocktube1(a) => ("shocktube1", &a.common),
        Command::Shocktube2(a) => ("shocktube2", &a.common),
        Command::Shuosher(a) => ("shuosher", &a.common),
        Command::Smoothwave(a) => ("smoothwave", &a.common),
        Command::Reference(a) => ("reference", &a.common),
        Command::CompareEntropy(a) => ("compare-entropy", &a.common),
        Command::Convergence(a) => ("convergence", &a.common),
        Command::Maxdt(a) => ("maxdt", &a.common),
    };
    if common.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(common.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    if let Err(e) = std::fs::create_dir_all(&common.out) {
        eprintln!("error: cannot create {}: {e}", common.out.display());
        return ExitCode::from(1);
    }

    let result = match &cli.command {
        Command::Shocktube1(a) => run_problem(ProblemId::Shocktube1, a),
        Command::Shocktube2(a) => run_problem(ProblemId::Shocktube2, a),
        Command::Shuosher(a) => run_problem(ProblemId::Shuosher, a),
        Command::Smoothwave(a) => run_problem(ProblemId::Smoothwave, a),
        Command::Reference(a) => run_reference(a),
        Command::CompareEntropy(a) => run_compare(a),
        Command::Convergence(a) => run_convergence(a),
        Command::Maxdt(a) => run_maxdt(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::BlowUp(err)) => {
            eprintln!("blow-up: {err}");
            write_failure(&common.out, name, &err);
            ExitCode::from(2)
        }
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(3)
        }
    }
}
