//! `bussched` command-line front end.

mod experiment;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bussched::exact::Strategy;
use bussched::milp::{
    build_milp_with, export_metadata, lp_string, parse_solution, MilpOptions, PrecedenceForm,
};
use bussched::schedule::{load_schedule, schedule_to_json};
use bussched::simulator::NoiseMode;
use bussched::*;
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::experiment::{Grid, Preset};

#[derive(Parser, Debug)]
#[command(name = "bussched", version, about = "Scheduling under shared data-bus contention")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Draw a seeded random instance.
    Generate(GenerateArgs),
    /// Schedule an instance with the greedy algorithm.
    Greedy(SolveArgs),
    /// Compute an optimal schedule.
    Exact(ExactArgs),
    /// Export the event-point MILP in LP format.
    MilpExport(MilpExportArgs),
    /// Turn a solver's MILP solution into a schedule.
    MilpSchedule(MilpScheduleArgs),
    /// Replay a schedule under the planning model, optionally with noise.
    Simulate(SimulateArgs),
    /// Greedy against exact over an experiment grid, with CSV reports.
    Compare(CompareArgs),
    /// Solver runtimes over an experiment grid.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Number of jobs.
    #[arg(long)]
    m: usize,
    #[arg(long)]
    cores: usize,
    /// trivial, random, bitree or one_to_many_to_one.
    #[arg(long, default_value = "trivial")]
    order: OrderKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    time_min: f64,
    #[arg(long, default_value_t = 100.0)]
    time_max: f64,
    #[arg(long, default_value_t = 0.0)]
    demand_min: f64,
    #[arg(long, default_value_t = 100.0)]
    demand_max: f64,
    /// Output file; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    instance: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum StrategyArg {
    Auto,
    Sets,
    Sequences,
}

#[derive(Args, Debug)]
struct ExactArgs {
    instance: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "auto")]
    strategy: StrategyArg,
    /// Largest job count accepted.
    #[arg(long, default_value_t = bussched::exact::DEFAULT_MAX_JOBS)]
    max_jobs: usize,
    /// Longest configuration sequence searched (sequence search only).
    #[arg(long)]
    max_len: Option<usize>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum PrecedenceArg {
    Pairwise,
    Literal,
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Highest event point index; 2m when absent.
    #[arg(long)]
    event_points: Option<usize>,
    #[arg(long, value_enum, default_value = "pairwise")]
    precedence: PrecedenceArg,
}

impl ModelArgs {
    fn options(&self) -> MilpOptions {
        MilpOptions {
            precedence: match self.precedence {
                PrecedenceArg::Pairwise => PrecedenceForm::Pairwise,
                PrecedenceArg::Literal => PrecedenceForm::Literal,
            },
            event_points: self.event_points,
            ..Default::default()
        }
    }
}

#[derive(Args, Debug)]
struct MilpExportArgs {
    instance: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Also write variable and configuration metadata as JSON.
    #[arg(long)]
    metadata: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Args, Debug)]
struct MilpScheduleArgs {
    instance: PathBuf,
    /// Solution as `name value` lines.
    solution: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub(crate) enum NoiseModeArg {
    Symmetric,
    Slowdown,
}

impl From<NoiseModeArg> for NoiseMode {
    fn from(m: NoiseModeArg) -> Self {
        match m {
            NoiseModeArg::Symmetric => NoiseMode::Symmetric,
            NoiseModeArg::Slowdown => NoiseMode::Slowdown,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub(crate) struct NoiseArgs {
    /// Relative speed perturbation amplitude in [0, 1).
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub noise_seed: u64,
    #[arg(long, value_enum, default_value = "symmetric")]
    pub noise_mode: NoiseModeArg,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    instance: PathBuf,
    schedule: PathBuf,
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[command(flatten)]
    noise: NoiseArgs,
}

#[derive(Args, Debug, Clone)]
pub(crate) struct GridArgs {
    /// Named experiment grid.
    #[arg(long, value_enum, conflicts_with_all = ["jobs", "core_counts", "orders"])]
    pub preset: Option<Preset>,
    /// Job counts of a custom grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub jobs: Option<Vec<usize>>,
    /// Core counts of a custom grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub core_counts: Option<Vec<usize>>,
    /// Order kinds of a custom grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub orders: Option<Vec<OrderKind>>,
    /// Seeds per cell; the preset's value when absent.
    #[arg(long)]
    pub seeds: Option<u64>,
    /// Cells with more jobs skip the exact solver.
    #[arg(long, default_value_t = bussched::exact::DEFAULT_MAX_JOBS)]
    pub max_exact_jobs: usize,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Directory for the CSV reports.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// Failure classes, each with its own exit code.
#[derive(Debug)]
pub(crate) enum CliError {
    Usage(String),
    FlagConflict(String),
    MissingInput(PathBuf),
    Guard(String),
    Invalid(String),
    Other(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::FlagConflict(_) => "flag_conflict",
            CliError::MissingInput(_) => "missing_input",
            CliError::Guard(_) => "guard",
            CliError::Invalid(_) => "invalid_input",
            CliError::Other(_) => "internal",
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::Usage(_) => 2,
            CliError::MissingInput(_) => 3,
            CliError::Guard(_) => 4,
            CliError::FlagConflict(_) => 5,
            CliError::Invalid(_) => 6,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::MissingInput(p) => format!("input file not found: {}", p.display()),
            CliError::Usage(m)
            | CliError::FlagConflict(m)
            | CliError::Guard(m)
            | CliError::Invalid(m)
            | CliError::Other(m) => m.clone(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Capacity { .. } => CliError::Guard(e.to_string()),
            Error::InvalidArgument(_)
            | Error::Parse(_)
            | Error::Validation(_)
            | Error::Contract(_)
            | Error::Coverage { .. } => CliError::Invalid(e.to_string()),
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

pub(crate) type CliResult<T> = Result<T, CliError>;

fn require(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::MissingInput(path.to_path_buf()))
    }
}

fn read_instance(path: &Path) -> CliResult<Instance64> {
    require(path)?;
    Ok(load_instance(path)?)
}

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn generate(a: GenerateArgs) -> CliResult<()> {
    let inst: Instance64 = gen_instance(
        a.m,
        a.cores,
        a.order,
        a.seed,
        a.time_min..=a.time_max,
        a.demand_min..=a.demand_max,
    )?;
    emit(a.output.as_deref(), &bussched::instance::instance_to_json(&inst))
}

fn greedy(a: SolveArgs) -> CliResult<()> {
    let inst = read_instance(&a.instance)?;
    let sched = greedy_schedule(&inst)?;
    emit(a.output.as_deref(), &schedule_to_json(&sched))
}

fn exact(a: ExactArgs) -> CliResult<()> {
    let inst = read_instance(&a.instance)?;
    let opts = ExactOptions {
        strategy: match a.strategy {
            StrategyArg::Auto => Strategy::Auto,
            StrategyArg::Sets => Strategy::ConfigSets,
            StrategyArg::Sequences => Strategy::Sequences,
        },
        max_jobs: a.max_jobs,
        max_len: a.max_len,
        ..Default::default()
    };
    let result = exact_solve(&inst, &opts)?;
    emit(a.output.as_deref(), &schedule_to_json(&result.schedule))
}

fn milp_export(a: MilpExportArgs) -> CliResult<()> {
    let inst = read_instance(&a.instance)?;
    let space = enumerate_configurations(&inst, DEFAULT_CONFIG_CAP)?;
    let model = build_milp_with(&inst, &space, &a.model.options())?;
    if let Some(path) = &a.metadata {
        export_metadata(&model, path)?;
    }
    emit(a.output.as_deref(), &lp_string(&model))
}

fn milp_schedule(a: MilpScheduleArgs) -> CliResult<()> {
    let inst = read_instance(&a.instance)?;
    require(&a.solution)?;
    let space = enumerate_configurations(&inst, DEFAULT_CONFIG_CAP)?;
    let model = build_milp_with(&inst, &space, &a.model.options())?;
    let sol = parse_solution(&model, &fs::read_to_string(&a.solution)?)?;
    let sched = schedule_from_solution(&model, &sol)?;
    sched.validate(&inst)?;
    emit(a.output.as_deref(), &schedule_to_json(&sched))
}

pub(crate) fn ground_truth(inst: &Instance64, noise: &NoiseArgs, seed: u64) -> CliResult<GroundTruth64> {
    let truth = GroundTruthModel::from_instance(inst);
    if noise.noise == 0.0 {
        return Ok(truth);
    }
    Ok(truth.with_noise(noise.noise, seed, noise.noise_mode.into())?)
}

fn simulate_cmd(a: SimulateArgs) -> CliResult<()> {
    let inst = read_instance(&a.instance)?;
    require(&a.schedule)?;
    let sched: Schedule64 = load_schedule(&a.schedule)?;
    sched.validate(&inst)?;
    let truth = ground_truth(&inst, &a.noise, a.noise.noise_seed)?;
    let report = simulate(&sched, &truth)?;
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Other(e.to_string()))?;
    emit(a.output.as_deref(), &text)
}

fn compare(a: CompareArgs) -> CliResult<()> {
    let grid = Grid::from_args(&a.grid)?;
    fs::create_dir_all(&a.out_dir)?;
    experiment::compare(&grid, &a.noise, &a.out_dir)
}

fn bench(a: BenchArgs) -> CliResult<()> {
    let grid = Grid::from_args(&a.grid)?;
    match &a.output {
        Some(path) => experiment::bench(&grid, fs::File::create(path)?),
        None => experiment::bench(&grid, io::stdout().lock()),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Cmd::Generate(a) => generate(a),
        Cmd::Greedy(a) => greedy(a),
        Cmd::Exact(a) => exact(a),
        Cmd::MilpExport(a) => milp_export(a),
        Cmd::MilpSchedule(a) => milp_schedule(a),
        Cmd::Simulate(a) => simulate_cmd(a),
        Cmd::Compare(a) => compare(a),
        Cmd::Bench(a) => bench(a),
    }
}

fn fail(e: CliError) -> ExitCode {
    let line = json!({ "error": e.kind(), "code": e.code(), "message": e.message() });
    eprintln!("{line}");
    ExitCode::from(e.code())
}

fn clap_message(e: &clap::Error) -> String {
    let text = e.to_string();
    let first = text.lines().next().unwrap_or_default();
    first.trim_start_matches("error: ").to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    ExitCode::SUCCESS
                }
                ErrorKind::ArgumentConflict => fail(CliError::FlagConflict(clap_message(&e))),
                _ => fail(CliError::Usage(clap_message(&e))),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
