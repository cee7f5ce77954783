use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use mdrp_core::bench::{
    calibrate, compare, comparison_table, compute_metrics, read_metrics_csv, write_calibration_cells_csv,
    write_calibration_csv, write_comparison_csv, write_metrics_csv, CalibrationGrid,
};
use mdrp_core::generator::{generate_instance, GeneratorParams};
use mdrp_core::io::{parse_instance, serialize_instance, InstancePaths};
use mdrp_core::schedule::assignment_feasible;
use mdrp_core::sim::{simulate_day, validate_event_log, write_event_log, SimConfig, SimError};
use mdrp_core::solver::{LocalSearchMode, ObjectiveMode};
use mdrp_core::{grasp, DispatchProblem, Instance, Seconds, SolverConfig};

#[derive(Parser, Debug)]
#[command(
    name = "mdrp",
    version,
    about = "Meal-delivery courier dispatch: solve, simulate, generate, calibrate, report"
)]
struct Cli {
    #[command(flatten)]
    solver: SolverFlags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct SolverFlags {
    /// Restricted candidate list fraction in [0, 1].
    #[arg(long, global = true, default_value_t = 0.7)]
    alpha: f64,
    /// GRASP iterations per dispatch.
    #[arg(long, global = true, default_value_t = 1000)]
    iterations: u32,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Seconds between dispatch epochs.
    #[arg(long, global = true, default_value_t = 120)]
    epoch_s: Seconds,
    /// Wall-clock limit per solver call; defaults to one epoch when simulating.
    #[arg(long, global = true)]
    time_budget_s: Option<f64>,
    #[arg(long, global = true, value_enum, default_value_t = LsFlag::FullDescent)]
    local_search: LsFlag,
    #[arg(long, global = true, value_enum, default_value_t = ObjFlag::Lex)]
    objective: ObjFlag,
    /// Couriers ride back to their start point after every route.
    #[arg(long, global = true)]
    return_to_start: bool,
    /// Spread GRASP iterations over all cores (same results).
    #[arg(long, global = true)]
    parallel: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
enum LsFlag {
    OnePass,
    FullDescent,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
#[value(rename_all = "snake_case")]
enum ObjFlag {
    Lex,
    CostOnly,
}

#[derive(Args, Debug)]
struct InstanceArg {
    /// Directory holding stores.csv, couriers.csv and orders.csv.
    #[arg(long)]
    instance: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Assign every order of an instance in one static snapshot.
    Solve {
        #[command(flatten)]
        input: InstanceArg,
        /// Dispatch time of the snapshot; couriers wait at their start points.
        #[arg(long, default_value_t = 0)]
        at: Seconds,
        /// Write the assignment JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a full day with periodic dispatch epochs.
    Simulate {
        #[command(flatten)]
        input: InstanceArg,
        /// Instance label in the metrics row; defaults to the directory name.
        #[arg(long)]
        label: Option<String>,
        /// Event log (JSON lines) destination.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Metrics CSV destination; stdout when omitted.
        #[arg(long)]
        metrics: Option<PathBuf>,
    },
    /// Write a synthetic instance.
    Generate {
        #[arg(long)]
        orders: usize,
        #[arg(long)]
        couriers: usize,
        /// Defaults to one restaurant per ten orders.
        #[arg(long)]
        restaurants: Option<usize>,
        /// Output directory (created if missing).
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Sweep alpha and iteration counts, one simulated day per cell and replication.
    Calibrate {
        #[command(flatten)]
        input: InstanceArg,
        /// Comma-separated alphas; default 0.0 to 1.0 step 0.1.
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        /// Comma-separated iteration counts; default 500,1000,1500,2000.
        #[arg(long, value_delimiter = ',')]
        iteration_grid: Option<Vec<u32>>,
        #[arg(long, default_value_t = 1)]
        replications: u32,
        /// Per-run CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-cell means for plotting.
        #[arg(long)]
        cells: Option<PathBuf>,
    },
    /// Compare two metrics files and compute GAP per instance.
    Report {
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
        #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
        format: ReportFormat,
        #[arg(long, default_value = "baseline")]
        baseline_name: String,
        #[arg(long, default_value = "candidate")]
        candidate_name: String,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ReportFormat {
    Text,
    Csv,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl CliError {
    fn input(e: impl std::fmt::Display) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Infeasible { .. } => CliError::Invariant(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl SolverFlags {
    fn solver(&self) -> Result<SolverConfig, CliError> {
        let time_budget = match self.time_budget_s {
            Some(s) if !(s.is_finite() && s > 0.0) => {
                return Err(CliError::Input(format!("--time-budget-s must be positive, got {s}")))
            }
            Some(s) => Some(Duration::from_secs_f64(s)),
            None => None,
        };
        let config = SolverConfig {
            alpha: self.alpha,
            iterations: self.iterations,
            seed: self.seed,
            local_search: match self.local_search {
                LsFlag::OnePass => LocalSearchMode::OnePass,
                LsFlag::FullDescent => LocalSearchMode::FullDescent,
            },
            objective: match self.objective {
                ObjFlag::Lex => ObjectiveMode::Lexicographic,
                ObjFlag::CostOnly => ObjectiveMode::CostOnly,
            },
            time_budget,
            parallel: self.parallel,
            ..SolverConfig::default()
        };
        config.validate().map_err(CliError::input)?;
        Ok(config)
    }

    fn sim(&self) -> Result<SimConfig, CliError> {
        if self.epoch_s < 1 {
            return Err(CliError::Input(format!(
                "--epoch-s must be at least 1, got {}",
                self.epoch_s
            )));
        }
        Ok(SimConfig {
            epoch_s: self.epoch_s,
            solver: self.solver()?,
            return_to_start: self.return_to_start,
        })
    }
}

fn load(dir: &Path) -> Result<Instance, CliError> {
    parse_instance(&InstancePaths::in_dir(dir)).map_err(CliError::input)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// File when given, stdout otherwise.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[derive(Serialize)]
struct RouteOut {
    orders: Vec<String>,
    depart: Seconds,
    pickup_begin: Seconds,
    complete: Seconds,
    routing_time_s: Seconds,
}

#[derive(Serialize)]
struct CourierOut {
    courier: String,
    routes: Vec<RouteOut>,
}

#[derive(Serialize)]
struct SolveOut {
    dispatch_time: Seconds,
    fulfilled: usize,
    routing_time_s: Seconds,
    iterations_run: u32,
    couriers: Vec<CourierOut>,
    unassigned: Vec<String>,
}

fn solve(
    instance: &Instance,
    at: Seconds,
    config: &SolverConfig,
    idle: mdrp_core::IdlePosition,
) -> Result<SolveOut, CliError> {
    let problem = DispatchProblem::whole_instance(instance, at, idle);
    let outcome = grasp(&problem, config);
    let scheduled =
        assignment_feasible(&outcome.assignment, &problem).map_err(|v| CliError::Invariant(v.to_string()))?;
    let couriers = outcome
        .assignment
        .iter()
        .map(|(c, routes)| CourierOut {
            courier: instance.courier(c).id.clone(),
            routes: routes
                .iter()
                .zip(&scheduled.schedules[&c])
                .map(|(r, s)| RouteOut {
                    orders: r.orders().iter().map(|&o| instance.order(o).id.clone()).collect(),
                    depart: s.depart,
                    pickup_begin: s.pickup_begin,
                    complete: s.completion(),
                    routing_time_s: s.routing_time_s(),
                })
                .collect(),
        })
        .collect();
    Ok(SolveOut {
        dispatch_time: at,
        fulfilled: outcome.objective.fulfilled as usize,
        routing_time_s: scheduled.total_routing_time_s(),
        iterations_run: outcome.iterations_run,
        couriers,
        unassigned: outcome
            .assignment
            .unassigned()
            .iter()
            .map(|&o| instance.order(o).id.clone())
            .collect(),
    })
}

fn run(cli: Cli) -> Result<(), CliError> {
    let flags = &cli.solver;
    flags.sim()?;
    match cli.command {
        Command::Solve { input, at, out } => {
            let instance = load(&input.instance)?;
            let sim = flags.sim()?;
            let result = solve(&instance, at, &sim.solver, sim.idle_position())?;
            let mut w = sink(out.as_deref())?;
            serde_json::to_writer_pretty(&mut w, &result).map_err(CliError::input)?;
            writeln!(w).and_then(|_| w.flush()).map_err(CliError::input)?;
        }
        Command::Simulate {
            input,
            label,
            events,
            metrics,
        } => {
            let instance = load(&input.instance)?;
            let config = flags.sim()?;
            let result = simulate_day(&instance, &config)?;
            validate_event_log(&result.events, &instance).map_err(|violations| {
                let lines: Vec<String> = violations.iter().map(ToString::to_string).collect();
                CliError::Invariant(lines.join("; "))
            })?;
            if let Some(path) = events {
                write_event_log(create(&path)?, &result.events).map_err(CliError::input)?;
            }
            let label = label.unwrap_or_else(|| {
                input
                    .instance
                    .file_name()
                    .map_or_else(|| "instance".into(), |n| n.to_string_lossy().into_owned())
            });
            let row = compute_metrics(&label, &result);
            write_metrics_csv(sink(metrics.as_deref())?, &[row]).map_err(CliError::input)?;
        }
        Command::Generate {
            orders,
            couriers,
            restaurants,
            out,
        } => {
            let params = GeneratorParams {
                n_orders: orders,
                n_couriers: couriers,
                n_restaurants: restaurants.unwrap_or((orders / 10).max(1)),
                seed: flags.seed,
                ..GeneratorParams::default()
            };
            let instance = generate_instance(&params).map_err(CliError::input)?;
            std::fs::create_dir_all(&out).map_err(|e| CliError::Input(format!("{}: {e}", out.display())))?;
            serialize_instance(&instance, &InstancePaths::in_dir(&out)).map_err(CliError::input)?;
        }
        Command::Calibrate {
            input,
            alphas,
            iteration_grid,
            replications,
            out,
            cells,
        } => {
            let instance = load(&input.instance)?;
            let defaults = CalibrationGrid::default();
            let grid = CalibrationGrid {
                alphas: alphas.unwrap_or(defaults.alphas),
                iterations: iteration_grid.unwrap_or(defaults.iterations),
            };
            if let Some(a) = grid.alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
                return Err(CliError::Input(format!("alpha must lie in [0, 1], got {a}")));
            }
            if grid.iterations.contains(&0) {
                return Err(CliError::Input("iteration counts must be at least 1".into()));
            }
            let calibration =
                calibrate(&instance, &grid, replications, flags.seed, &flags.sim()?).map_err(|e| match e {
                    mdrp_core::bench::CalibrationError::Sim(s) => CliError::from(s),
                    other => CliError::input(other),
                })?;
            write_calibration_csv(sink(out.as_deref())?, &calibration).map_err(CliError::input)?;
            if let Some(path) = cells {
                write_calibration_cells_csv(create(&path)?, &calibration).map_err(CliError::input)?;
            }
        }
        Command::Report {
            baseline,
            candidate,
            format,
            baseline_name,
            candidate_name,
        } => {
            let read = |p: &Path| {
                let file = File::open(p).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                read_metrics_csv(file).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
            };
            let rows = compare(&read(&baseline)?, &read(&candidate)?).map_err(CliError::input)?;
            let mut w = sink(None)?;
            match format {
                ReportFormat::Text => w
                    .write_all(comparison_table(&rows, &baseline_name, &candidate_name).as_bytes())
                    .and_then(|_| w.flush())
                    .map_err(CliError::input)?,
                ReportFormat::Csv => write_comparison_csv(w, &rows).map_err(CliError::input)?,
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mdrp: {e}");
            ExitCode::from(match e {
                CliError::Input(_) => 1,
                CliError::Invariant(_) => 2,
            })
        }
    }
}
