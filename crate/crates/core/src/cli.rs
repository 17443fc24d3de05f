//! Command-line front end. `main.rs` only forwards to [`run_cli`].

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::engine::run_simulation;
use crate::metrics::{compare_reports, emit, write_comparison, SimulationReport};
use crate::model::MarketShape;
use crate::wdp::{solve, validate_corpus, MicroInstanceSpec, SolverLimits, SolverMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "mdfcda", version, about = "Fairness-aware combinatorial double auction simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the auction and write per-round and per-run metrics.
    Run(RunArgs),
    /// Simulate with and without fairness on identical bids and compare.
    Compare(RunArgs),
    /// Check a solver against the exhaustive oracle on random small markets.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// TOML experiment file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rounds: Option<u32>,
    #[arg(long)]
    runs: Option<u32>,
    #[arg(long)]
    consumers: Option<usize>,
    #[arg(long)]
    providers: Option<usize>,
    #[arg(long)]
    types: Option<usize>,
    /// Force every fairness factor to zero.
    #[arg(long)]
    no_fairness: bool,
    /// exact, heuristic or oracle.
    #[arg(long)]
    solver: Option<SolverMode>,
    #[arg(long)]
    time_limit_ms: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel runs (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, default_value_t = 500)]
    corpus_size: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "exact")]
    solver: SolverMode,
    /// Perturb every solver result; used to check that mismatches are reported.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

struct Failure {
    code: i32,
    error: anyhow::Error,
}

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_USAGE, error: error.into() }
}

fn runtime(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: EXIT_RUNTIME, error: error.into() }
}

impl RunArgs {
    fn resolve(&self) -> anyhow::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            c.engine.master_seed = seed;
        }
        if let Some(rounds) = self.rounds {
            c.engine.rounds = rounds;
        }
        if let Some(runs) = self.runs {
            c.scenario.runs = runs;
        }
        let shape = &c.scenario.shape;
        c.scenario.shape = MarketShape {
            num_consumers: self.consumers.unwrap_or(shape.num_consumers),
            num_providers: self.providers.unwrap_or(shape.num_providers),
            num_resource_types: self.types.unwrap_or(shape.num_resource_types),
        };
        if self.no_fairness {
            c.engine.fairness_enabled = false;
        }
        if let Some(mode) = self.solver {
            c.engine.solver_mode = mode;
        }
        if let Some(ms) = self.time_limit_ms {
            c.engine.solver_limits.time_limit_ms = ms;
        }
        if let Some(out) = &self.out {
            c.output_dir = out.clone();
        }
        if self.jobs == Some(0) {
            anyhow::bail!("--jobs must be at least 1");
        }
        c.validate().context("invalid configuration")?;
        Ok(c)
    }

    fn pool(&self) -> anyhow::Result<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(j) = self.jobs {
            builder = builder.num_threads(j);
        }
        Ok(builder.build()?)
    }
}

fn simulate(config: &ExperimentConfig, pool: &rayon::ThreadPool) -> Result<SimulationReport, Failure> {
    pool.install(|| run_simulation(&config.scenario, &config.engine))
        .map(|o| o.report)
        .context("simulation failed")
        .map_err(runtime)
}

fn write_report(report: &SimulationReport, dir: &Path) -> Result<(), Failure> {
    emit(report, dir).with_context(|| format!("writing results to {}", dir.display())).map_err(runtime)
}

fn summarize(out: &mut dyn Write, label: &str, report: &SimulationReport) -> std::io::Result<()> {
    for r in &report.per_run {
        let drop_round = r.mean_drop_round.map_or_else(|| "-".to_string(), |d| format!("{d:.1}"));
        writeln!(
            out,
            "{label}run {}: utility {}, drops {}, mean drop round {}, utilization {:.2}%, wins {:.2}%",
            r.run, r.total_utility, r.drops, drop_round, r.mean_utilization, r.mean_win_percent
        )?;
    }
    Ok(())
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = args.resolve().map_err(usage)?;
    let pool = args.pool().map_err(runtime)?;
    let report = simulate(&config, &pool)?;
    write_report(&report, &config.output_dir)?;
    summarize(out, "", &report).map_err(runtime)
}

fn cmd_compare(args: &RunArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let config = args.resolve().map_err(usage)?;
    let pool = args.pool().map_err(runtime)?;
    let mut fair = config.clone();
    fair.engine.fairness_enabled = true;
    let mut base = config.clone();
    base.engine.fairness_enabled = false;

    let fair_report = simulate(&fair, &pool)?;
    let base_report = simulate(&base, &pool)?;
    let rows = compare_reports(&fair_report, &base_report).map_err(runtime)?;
    write_report(&fair_report, &config.output_dir.join("mdfcda"))?;
    write_report(&base_report, &config.output_dir.join("baseline"))?;
    let path = config.output_dir.join("comparison.csv");
    write_comparison(&rows, &path).with_context(|| format!("writing {}", path.display())).map_err(runtime)?;

    let io = |r: std::io::Result<()>| r.map_err(runtime);
    io(summarize(out, "mdfcda   ", &fair_report))?;
    io(summarize(out, "baseline ", &base_report))?;
    for r in &rows {
        io(writeln!(
            out,
            "run {}: drops {} vs {} (reduction {}), utility delta {}",
            r.run, r.mdfcda_drops, r.baseline_drops, r.drop_reduction, r.utility_delta
        ))?;
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let limits = SolverLimits::default();
    let report = validate_corpus(args.corpus_size, args.seed, &MicroInstanceSpec::default(), |instance| {
        let mut solution = solve(instance, args.solver, &limits)?;
        if args.inject_fault {
            solution.objective += 1.0;
        }
        Ok(solution)
    })
    .map_err(usage)?;
    writeln!(out, "{}/{} instances match the oracle", report.passed, report.total).map_err(runtime)?;
    if report.all_passed() {
        return Ok(());
    }
    for f in &report.failures {
        writeln!(err, "instance {}: {}\n{}", f.index, f.reason, f.instance).map_err(runtime)?;
    }
    Err(Failure {
        code: EXIT_MISMATCH,
        error: anyhow::anyhow!("{} of {} instances disagree with the oracle", report.failures.len(), report.total),
    })
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{text}") } else { write!(out, "{text}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Validate(a) => cmd_validate(a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {:#}", f.error);
            f.code
        }
    }
}
