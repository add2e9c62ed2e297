//! Command-line front end. Exit codes: 0 success, 1 configuration or usage
//! error, 2 runtime failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::config::{parse_config, ConfigError, Overrides, Scenario, SolverChoice};
use crate::experiment::{
    aggregate_drops, rcrb_evolution, stationary_rcrb, throughput_vs_antennas, throughput_vs_vehicles, AggregateRow,
    Summary,
};
use crate::output::{self, OutputError};
use crate::world::World;

#[derive(Debug, Parser)]
#[command(name = "isac", about = "Two-RSU sensing-assisted beamforming simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-loop run with Poisson traffic.
    Run(RunArgs),
    /// Snapshot sweeps over vehicle count or array size, or the bound's
    /// evolution over time.
    Sweep(SweepArgs),
    /// Closed-loop run that also writes the trainer dataset and the chosen beams.
    ExportDataset(RunArgs),
    /// Replays externally predicted beams and compares with the heuristic.
    EvalExternal(RunArgs),
    /// Quick invariant checks.
    Selftest,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file (TOML); defaults apply to missing keys.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub solver: Option<SolverChoice>,
    /// Beam exchange file for the external solver.
    #[arg(long)]
    pub beams: Option<PathBuf>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Arrival rate per direction (vehicles/s).
    #[arg(long)]
    pub rate: Option<f64>,
    /// Transmit and receive array size.
    #[arg(long)]
    pub antennas: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            solver: self.solver,
            horizon: self.horizon,
            rate: self.rate,
            antennas: self.antennas,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    /// Per-vehicle throughput against the number of vehicles.
    Vehicles,
    /// Throughput against the array size.
    Antennas,
    /// Range bound over time for several array sizes.
    Rcrb,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub kind: SweepKind,
    /// Swept values: vehicle counts or array sizes.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<usize>,
    /// Vehicle count for the array-size and bound sweeps.
    #[arg(long, default_value_t = 50)]
    pub vehicles: usize,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// Initial range standard deviation for the bound sweep (m).
    #[arg(long, default_value_t = 0.1)]
    pub initial_rcrb: f64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error(transparent)]
    Model(#[from] isac_core::IsacError),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

fn load(common: &Common) -> Result<Scenario, CliError> {
    Ok(parse_config(common.scenario.as_deref(), &common.overrides())?)
}

fn write_run(
    out: &Path,
    command: &str,
    scenario: &Scenario,
    slots: &[crate::world::SlotResult],
) -> Result<(), CliError> {
    let solver = scenario.solver.name();
    output::write_file(out, "results.csv", &output::results_csv(slots, solver, scenario.seed)?)?;
    output::write_file(out, "slots.csv", &output::slots_csv(slots, scenario.slot_s)?)?;
    let agg = output::run_aggregates(slots, scenario.warmup_slots(), solver);
    output::write_file(out, "aggregate.csv", &output::aggregate_csv(&agg)?)?;
    write_manifest(out, command, scenario, &[])
}

fn write_manifest(out: &Path, command: &str, scenario: &Scenario, extra: &[(&str, String)]) -> Result<(), CliError> {
    output::write_file(out, "scenario.toml", scenario.to_toml_string().as_bytes())?;
    output::write_file(
        out,
        "manifest.toml",
        output::manifest(command, scenario, extra).as_bytes(),
    )?;
    Ok(())
}

fn external_world(scenario: &Scenario, beams: Option<&Path>) -> Result<World, CliError> {
    let path = beams.ok_or_else(|| CliError::Usage("the external solver needs --beams <path>".into()))?;
    let blocks = isac_core::exchange::load_external_beams(path)?;
    let mut world = World::new(scenario.clone());
    world.set_external_beams(blocks);
    Ok(world)
}

pub fn run_command(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run(args) => {
            let scenario = load(&args.common)?;
            let mut world = if scenario.solver == SolverChoice::External {
                external_world(&scenario, args.common.beams.as_deref())?
            } else {
                World::new(scenario.clone())
            };
            let slots = world.run();
            write_run(&args.common.out, "run", &scenario, &slots)
        }
        Command::ExportDataset(args) => {
            let mut scenario = load(&args.common)?;
            if scenario.solver == SolverChoice::External {
                return Err(CliError::Usage("dataset labels come from a built-in solver".into()));
            }
            if args.common.solver.is_none() {
                scenario.solver = SolverChoice::Heuristic;
            }
            let mut world = World::new(scenario.clone());
            world.record_dataset();
            world.record_beams();
            let slots = world.run();
            let out = &args.common.out;
            let text = output::format_dataset(&world.take_dataset(), scenario.radio.n_t, scenario.radio.n_r);
            output::write_file(out, "dataset.txt", text.as_bytes())?;
            let beams = isac_core::exchange::format_beam_blocks(&world.take_beams());
            output::write_file(out, "beams.txt", beams.as_bytes())?;
            write_run(out, "export-dataset", &scenario, &slots)
        }
        Command::EvalExternal(args) => {
            let mut scenario = load(&args.common)?;
            scenario.solver = SolverChoice::External;
            let slots = external_world(&scenario, args.common.beams.as_deref())?.run();
            let failed = slots.iter().filter(|s| s.solver_error.is_some()).count();
            let mut reference = scenario.clone();
            reference.solver = SolverChoice::Heuristic;
            let ref_slots = World::new(reference.clone()).run();
            let out = &args.common.out;
            output::write_file(
                out,
                "results.csv",
                &output::results_csv(&slots, "external", scenario.seed)?,
            )?;
            output::write_file(out, "slots.csv", &output::slots_csv(&slots, scenario.slot_s)?)?;
            output::write_file(
                out,
                "reference_results.csv",
                &output::results_csv(&ref_slots, "heuristic", scenario.seed)?,
            )?;
            let mut agg = output::run_aggregates(&slots, 0, "external");
            agg.extend(output::run_aggregates(&ref_slots, 0, "heuristic"));
            let total = |s: &[crate::world::SlotResult]| s.iter().map(|r| r.sum_rate).sum::<f64>();
            let ratio = total(&slots) / total(&ref_slots).max(f64::MIN_POSITIVE);
            agg.push(AggregateRow {
                metric: "sum_rate_ratio_to_heuristic".into(),
                group: "all".into(),
                solver: "external".into(),
                summary: Summary {
                    count: slots.len(),
                    mean: ratio,
                    std: 0.0,
                    ci95: 0.0,
                },
            });
            output::write_file(out, "aggregate.csv", &output::aggregate_csv(&agg)?)?;
            let path = args
                .common
                .beams
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default();
            write_manifest(
                out,
                "eval-external",
                &scenario,
                &[("beams", path), ("fallback_slots", failed.to_string())],
            )?;
            log::info!("external/heuristic sum-rate ratio {ratio:.4}; {failed} slots fell back");
            Ok(())
        }
        Command::Sweep(args) => sweep(&args),
        Command::Selftest => {
            let lines = crate::selftest::run();
            let mut ok = true;
            for l in &lines {
                println!("{} {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
                ok &= l.pass;
            }
            if ok {
                Ok(())
            } else {
                Err(CliError::Failed("self-test failed".into()))
            }
        }
    }
}

fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let scenario = load(&args.common)?;
    let out = &args.common.out;
    let extra = [
        ("kind", format!("{:?}", args.kind).to_lowercase()),
        ("values", format!("{:?}", args.values)),
        ("vehicles", args.vehicles.to_string()),
        ("reps", args.reps.to_string()),
    ];
    let solvers = match args.common.solver {
        Some(SolverChoice::External) => return Err(CliError::Usage("sweeps need a built-in solver".into())),
        Some(s) => vec![s],
        None => vec![SolverChoice::Heuristic, SolverChoice::Greedy, SolverChoice::Distance],
    };
    match args.kind {
        SweepKind::Vehicles | SweepKind::Antennas => {
            let rows = if args.kind == SweepKind::Vehicles {
                let ks = if args.values.is_empty() {
                    vec![5, 10, 20, 30, 40, 50]
                } else {
                    args.values.clone()
                };
                throughput_vs_vehicles(&scenario, &ks, args.reps, &solvers)?
            } else {
                let ns = if args.values.is_empty() {
                    vec![16, 32, 64]
                } else {
                    args.values.clone()
                };
                throughput_vs_antennas(&scenario, &ns, args.vehicles, args.reps, &solvers)?
            };
            output::write_file(out, "drops.csv", &output::drops_csv(&rows)?)?;
            output::write_file(out, "aggregate.csv", &output::aggregate_csv(&aggregate_drops(&rows))?)?;
        }
        SweepKind::Rcrb => {
            if !(args.initial_rcrb > 0.0) {
                return Err(CliError::Usage("--initial-rcrb must be positive".into()));
            }
            let ns = if args.values.is_empty() {
                vec![16, 32, 64]
            } else {
                args.values.clone()
            };
            let rows = rcrb_evolution(&scenario, &ns, args.vehicles, args.initial_rcrb);
            output::write_file(out, "rcrb.csv", &output::rcrb_csv(&rows, scenario.slot_s)?)?;
            let tail = (scenario.horizon / 5).max(1);
            let agg: Vec<AggregateRow> = ns
                .iter()
                .map(|&n| AggregateRow {
                    metric: "stationary_rcrb_m".into(),
                    group: format!("n_t={n}"),
                    solver: scenario.solver.name().into(),
                    summary: Summary {
                        count: tail,
                        mean: stationary_rcrb(&rows, n, tail).unwrap_or(f64::NAN),
                        std: 0.0,
                        ci95: 0.0,
                    },
                })
                .collect();
            output::write_file(out, "aggregate.csv", &output::aggregate_csv(&agg)?)?;
        }
    }
    write_manifest(out, "sweep", &scenario, &extra)
}

/// Parses `argv` and runs; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_command(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
