//! `amq` — batch front end for the filter library: closed-form tables,
//! exact oracle checks, seeded simulations, exact-vs-classic comparisons,
//! and interface-law conformance runs.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage error, 3 resource guard.

mod output;
mod spec;

use amq_core::exact::format_ratio;
use amq_core::AmqError;
use clap::{Args, Parser, Subcommand};
use output::{emit, Format, Table};
use serde_json::{json, Value};
use spec::{RawParams, StructureKind, StructureSpec};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "amq",
    version,
    about = "Approximate membership query structures: exact analysis, oracle checks, simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form false-positive tables (exact, with float fallback)
    Analyze(AnalyzeArgs),
    /// Check the brute-force enumeration oracle against the closed forms
    Oracle(OracleArgs),
    /// Seeded Monte-Carlo estimate against the exact value
    Simulate(SimulateArgs),
    /// Exact Bloom false-positive rate next to the classic approximation
    Compare(CompareArgs),
    /// Run the interface-law conformance suites
    Conformance(ConformanceArgs),
}

#[derive(Args)]
struct StructureArgs {
    /// Which structure to work with
    #[arg(long, value_enum)]
    structure: StructureKind,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Args)]
struct ParamArgs {
    /// Bloom family: number of bits / counters
    #[arg(long)]
    m: Option<u64>,
    /// Bloom family: number of hash functions
    #[arg(long)]
    k: Option<u64>,
    /// Quotient: total hash bits (p = q + r)
    #[arg(long)]
    p: Option<u32>,
    /// Quotient: bucket-selector bits
    #[arg(long)]
    q: Option<u32>,
    /// Quotient: stored remainder bits
    #[arg(long)]
    r: Option<u32>,
    /// Blocked: number of independent blocks
    #[arg(long)]
    blocks: Option<u64>,
    /// Counting: per-counter bound
    #[arg(long)]
    bound: Option<u64>,
}

impl ParamArgs {
    fn raw(&self) -> RawParams {
        RawParams {
            m: self.m,
            k: self.k,
            p: self.p,
            q: self.q,
            r: self.r,
            blocks: self.blocks,
            bound: self.bound,
        }
    }
}

#[derive(Args)]
struct InsertRange {
    /// Single insert count
    #[arg(long, conflicts_with = "l_max")]
    l: Option<u64>,
    /// Run every insert count from 0 through this value
    #[arg(long = "l-max")]
    l_max: Option<u64>,
}

impl InsertRange {
    fn values(&self) -> Result<Vec<u64>, CliError> {
        match (self.l, self.l_max) {
            (Some(l), None) => Ok(vec![l]),
            (None, Some(max)) => Ok((0..=max).collect()),
            (None, None) => Err(CliError::Usage("provide --l or --l-max".into())),
            (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
        }
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write output to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    structure: StructureArgs,
    #[command(flatten)]
    range: InsertRange,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    structure: StructureArgs,
    #[command(flatten)]
    range: InsertRange,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    structure: StructureArgs,
    /// Insert count per trial
    #[arg(long)]
    l: u64,
    /// Number of trials
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    /// Seed for the trial streams (AMQ_SEED is the fallback)
    #[arg(long, env = "AMQ_SEED", default_value_t = 0)]
    seed: u64,
    /// Width of the reported Wilson interval, in sigmas
    #[arg(long, default_value_t = 4.0)]
    z: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct CompareArgs {
    /// Bloom bits
    #[arg(long)]
    m: u64,
    /// Bloom hash functions
    #[arg(long)]
    k: u64,
    #[command(flatten)]
    range: InsertRange,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ConformanceArgs {
    /// Structure to check; all six when omitted
    #[arg(long, value_enum)]
    structure: Option<StructureKind>,
    #[command(flatten)]
    params: ParamArgs,
    /// Randomized scenarios / seeds per law
    #[arg(long, default_value_t = 1_000)]
    trials: u64,
    /// Seed for scenario generation (AMQ_SEED is the fallback)
    #[arg(long, env = "AMQ_SEED", default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

enum CliError {
    Usage(String),
    CheckFailed(String),
    ResourceGuard(String),
    Io(std::io::Error),
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Conformance(args) => cmd_conformance(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::CheckFailed(message)) => {
            eprintln!("check failed: {message}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(message)) => {
            eprintln!("usage error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::ResourceGuard(message)) => {
            eprintln!("resource guard: {message}");
            ExitCode::from(3)
        }
        Err(CliError::Io(err)) => {
            eprintln!("io error: {err}");
            ExitCode::from(1)
        }
    }
}

fn resolve(structure: &StructureArgs) -> Result<StructureSpec, CliError> {
    StructureSpec::resolve(structure.structure, &structure.params.raw()).map_err(CliError::Usage)
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let spec = resolve(&args.structure)?;
    let mut table = Table::new(vec![
        "structure",
        "params",
        "l",
        "exact",
        "float",
        "classic_float",
        "mode",
    ]);
    for inserts in args.range.values()? {
        let (exact, float, mode) = match spec.exact_fp(inserts) {
            Ok(exact) => {
                let float = amq_core::analytic::to_float(&exact);
                (Value::String(format_ratio(&exact)), float, "exact")
            }
            Err(AmqError::ExactModeInfeasible { .. }) => {
                (Value::Null, spec.float_fp(inserts), "float")
            }
            Err(other) => return Err(CliError::Usage(other.to_string())),
        };
        let classic = match spec.classic_float(inserts) {
            Some(value) => json!(value),
            None => Value::Null,
        };
        table.push(vec![
            json!(spec.name()),
            json!(spec.params_label()),
            json!(inserts),
            exact,
            json!(float),
            classic,
            json!(mode),
        ]);
    }
    emit(
        &table.render(args.output.format),
        args.output.out.as_deref(),
    )?;
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), CliError> {
    let spec = resolve(&args.structure)?;
    let mut table = Table::new(vec![
        "structure",
        "params",
        "l",
        "oracle",
        "analytic",
        "equal",
    ]);
    let mut all_equal = true;
    for inserts in args.range.values()? {
        if !spec.supports_inserts(inserts) {
            return Err(CliError::Usage(format!(
                "structure cannot absorb {inserts} inserts (raise --bound)"
            )));
        }
        let analytic = spec.exact_fp(inserts).map_err(guard_error)?;
        let oracle = spec.oracle_fp(inserts).map_err(guard_error)?;
        let equal = oracle == analytic;
        all_equal &= equal;
        table.push(vec![
            json!(spec.name()),
            json!(spec.params_label()),
            json!(inserts),
            json!(format_ratio(&oracle)),
            json!(format_ratio(&analytic)),
            json!(equal),
        ]);
    }
    emit(
        &table.render(args.output.format),
        args.output.out.as_deref(),
    )?;
    if !all_equal {
        return Err(CliError::CheckFailed(
            "oracle and analytic values disagree".into(),
        ));
    }
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if args.z <= 0.0 || !args.z.is_finite() {
        return Err(CliError::Usage("--z must be positive".into()));
    }
    let spec = resolve(&args.structure)?;
    let report = spec
        .simulate(args.l, args.trials, args.seed, args.z)
        .map_err(guard_error)?;
    let text = match args.output.format {
        Format::Json => {
            let mut text = report.to_json();
            text.push('\n');
            text
        }
        Format::Csv => {
            let mut table = Table::new(vec![
                "structure",
                "params",
                "l",
                "trials",
                "seed",
                "successes",
                "estimate",
                "ci_low",
                "ci_high",
                "analytic_exact",
                "analytic_float",
                "z",
                "aborted_trials",
            ]);
            table.push(vec![
                json!(report.structure),
                json!(spec.params_label()),
                json!(report.inserts),
                json!(report.trials),
                json!(report.seed),
                json!(report.successes),
                json!(report.estimate),
                json!(report.ci_low),
                json!(report.ci_high),
                json!(report.analytic_exact),
                json!(report.analytic_float),
                json!(report.z),
                json!(report.aborted_trials),
            ]);
            table.render(Format::Csv)
        }
    };
    emit(&text, args.output.out.as_deref())?;
    if !report.analytic_within_band() {
        return Err(CliError::CheckFailed(format!(
            "analytic value {} outside the {}-sigma interval [{}, {}]",
            report.analytic_float, report.z, report.ci_low, report.ci_high
        )));
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    let spec = StructureSpec::resolve(
        StructureKind::Bloom,
        &RawParams {
            m: Some(args.m),
            k: Some(args.k),
            ..RawParams::default()
        },
    )
    .map_err(CliError::Usage)?;
    let mut table = Table::new(vec![
        "structure",
        "params",
        "l",
        "exact",
        "exact_float",
        "classic_exact",
        "classic_float",
        "differs",
    ]);
    for inserts in args.range.values()? {
        let exact = spec.exact_fp(inserts).map_err(guard_error)?;
        let classic = spec
            .classic_exact(inserts)
            .expect("bloom has a classic bound");
        table.push(vec![
            json!(spec.name()),
            json!(spec.params_label()),
            json!(inserts),
            json!(format_ratio(&exact)),
            json!(amq_core::analytic::to_float(&exact)),
            json!(format_ratio(&classic)),
            json!(amq_core::analytic::to_float(&classic)),
            json!(exact != classic),
        ]);
    }
    emit(
        &table.render(args.output.format),
        args.output.out.as_deref(),
    )?;
    Ok(())
}

fn cmd_conformance(args: ConformanceArgs) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let specs = match args.structure {
        Some(kind) => {
            vec![StructureSpec::resolve(kind, &args.params.raw()).map_err(CliError::Usage)?]
        }
        None => spec::default_conformance_specs(),
    };
    let mut table = Table::new(vec!["structure", "law", "passed", "detail"]);
    let mut all_passed = true;
    for spec in &specs {
        for report in spec.conformance(args.trials, args.seed) {
            all_passed &= report.passed;
            table.push(vec![
                json!(report.structure),
                json!(report.law),
                json!(report.passed),
                json!(report.detail),
            ]);
        }
    }
    emit(
        &table.render(args.output.format),
        args.output.out.as_deref(),
    )?;
    if !all_passed {
        return Err(CliError::CheckFailed("at least one law failed".into()));
    }
    Ok(())
}

fn guard_error(err: AmqError) -> CliError {
    match err {
        AmqError::EnumerationTooLarge { .. } | AmqError::ExactModeInfeasible { .. } => {
            CliError::ResourceGuard(err.to_string())
        }
        other => CliError::Usage(other.to_string()),
    }
}
