//! Command-line front end: closed-loop simulation, single-horizon planning,
//! flight-energy evaluation, forecasting, LP export and graph export.
//!
//! Exit codes: 1 usage, 2 validation, 3 infeasible, 4 solver limit, 5 I/O.
//! (`solve-lp` follows the external-solver contract instead: 0 solved,
//! 2 infeasible.)

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use efleet_core::branch_bound::{solve_milp, Limits};
use efleet_core::controller::{
    run_closed_loop, ControlError, Controller, ControllerConfig, SolverChoice,
};
use efleet_core::flightsim::{flight_energy, FlightProfile, TakeoffModel};
use efleet_core::forecast::{persistence_forecast, HoltWinters};
use efleet_core::milp::{read_lp_file, write_lp_file, write_solution_file, SolveStatus};
use efleet_core::model::MeasurementSnapshot;
use efleet_core::plant::{DisturbanceScript, Plant, TrajectoryLog};
use efleet_core::scenario::{load_scenario, Scenario};
use efleet_core::timegraph::build_graph;

#[derive(Parser)]
#[command(
    name = "efleet",
    version,
    about = "Electric aviation fleet scheduling and airport energy management"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ScenarioArg {
    /// Scenario bundle directory (scenario.json + weather CSVs).
    #[arg(long)]
    scenario: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Run the closed loop against the plant simulator.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Disturbance script (JSON); omitted = clean run.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Output directory for logs, plans and the summary.
        #[arg(long)]
        out: PathBuf,
        /// Steps to simulate (default: full weather coverage).
        #[arg(long)]
        duration_steps: Option<usize>,
        /// `builtin` or `external:<command>`.
        #[arg(long, default_value = "builtin")]
        solver: String,
        /// Also write instance_<t>.lp per iteration.
        #[arg(long)]
        dump_lp: bool,
        /// Reserved; runs are deterministic and take no randomness.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Solve one horizon at a given step and print the plan.
    Plan {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long)]
        at_step: usize,
        /// Disturbance script shaping the replayed pre-history.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Where to write the plan JSON (default: plan_<t>.json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a flight profile and print the energy breakdown.
    FlightEnergy {
        #[command(flatten)]
        scenario: ScenarioArg,
        /// Profile CSV (t_s,alt_m,v_ms,vz_ms).
        #[arg(long)]
        profile: PathBuf,
        /// Aircraft id from the scenario.
        #[arg(long)]
        aircraft: String,
        /// Maximum static thrust for the ground roll [N].
        #[arg(long, default_value_t = 15000.0)]
        static_thrust: f64,
        /// Maximum lift coefficient for the takeoff speed.
        #[arg(long, default_value_t = 1.9)]
        cl_max: f64,
        /// Skip the takeoff ground-roll estimate.
        #[arg(long)]
        no_takeoff: bool,
    },
    /// Print the solar forecast for one airport.
    Forecast {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long)]
        airport: String,
        #[arg(long)]
        at_step: usize,
        #[arg(long)]
        horizon: usize,
    },
    /// Write the MILP for one horizon as a CPLEX-LP file.
    ExportLp {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long)]
        at_step: usize,
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the time-expanded graph for one horizon in DOT format.
    Graph {
        #[command(flatten)]
        scenario: ScenarioArg,
        #[arg(long)]
        at_step: usize,
        #[arg(long)]
        dot: PathBuf,
    },
    /// Solve an LP/MILP file and write a `var value` solution file.
    ///
    /// External-solver contract: exit 0 = solved, 2 = infeasible.
    SolveLp { lp_file: PathBuf, solution_file: PathBuf },
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Infeasible(String),
    SolverLimit(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::SolverLimit(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m)
            | CliError::Infeasible(m)
            | CliError::SolverLimit(m)
            | CliError::Io(m) => m,
        }
    }
}

impl From<ControlError> for CliError {
    fn from(e: ControlError) -> Self {
        match &e {
            ControlError::Infeasible { .. } | ControlError::MissedWindow { .. } => {
                CliError::Infeasible(e.to_string())
            }
            ControlError::SolverLimit { .. } => CliError::SolverLimit(e.to_string()),
            ControlError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help/--version print normally; anything else is usage
            if e.use_stderr() {
                eprintln!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn load(path: &Path) -> Result<Scenario, CliError> {
    load_scenario(path).map_err(|e| CliError::Validation(e.to_string()))
}

fn load_script(path: &Option<PathBuf>, scenario: &Scenario) -> Result<DisturbanceScript, CliError> {
    let script = match path {
        Some(p) => DisturbanceScript::load(p).map_err(|e| CliError::Validation(e.to_string()))?,
        None => DisturbanceScript::empty(),
    };
    let problems = script.validate(scenario);
    if !problems.is_empty() {
        return Err(CliError::Validation(format!("disturbance script: {}", problems.join("; "))));
    }
    Ok(script)
}

fn parse_solver(text: &str) -> Result<SolverChoice, CliError> {
    if text == "builtin" {
        Ok(SolverChoice::Builtin)
    } else if let Some(cmd) = text.strip_prefix("external:") {
        Ok(SolverChoice::External(cmd.to_string()))
    } else {
        Err(CliError::Validation(format!(
            "unknown solver {text:?}; expected `builtin` or `external:<command>`"
        )))
    }
}

/// Replays the closed loop up to `t` so single-horizon commands see the
/// true mid-day state.
fn state_at<'a>(
    scenario: &'a Scenario,
    script: DisturbanceScript,
    t: usize,
) -> Result<(MeasurementSnapshot, Controller<'a>), CliError> {
    if t > scenario.max_simulation_steps() {
        return Err(CliError::Validation(format!(
            "step {t} beyond weather coverage ({} steps)",
            scenario.max_simulation_steps()
        )));
    }
    let mut plant = Plant::new(scenario, script);
    let mut controller = Controller::new(scenario, ControllerConfig::default());
    let mut log = TrajectoryLog::default();
    for _ in 0..t {
        let snap = plant.snapshot();
        controller.observe_weather(&snap);
        let outcome = controller.iterate(&snap)?;
        plant
            .step(&outcome.controls, &mut log)
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let snap = plant.snapshot();
    controller.observe_weather(&snap);
    Ok((snap, controller))
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Simulate { scenario, script, out, duration_steps, solver, dump_lp, seed: _ } => {
            let s = load(&scenario.scenario)?;
            let script = load_script(&script, &s)?;
            let duration = duration_steps.unwrap_or_else(|| s.max_simulation_steps());
            if duration > s.max_simulation_steps() {
                return Err(CliError::Validation(format!(
                    "duration {duration} beyond weather coverage ({} steps)",
                    s.max_simulation_steps()
                )));
            }
            std::fs::create_dir_all(&out).map_err(|e| CliError::Io(e.to_string()))?;
            let config = ControllerConfig {
                solver: parse_solver(&solver)?,
                artifact_dir: Some(out.clone()),
                dump_lp,
                ..Default::default()
            };
            let run = run_closed_loop(&s, script, duration, config)?;
            let write = |name: &str, text: String| -> Result<(), CliError> {
                std::fs::write(out.join(name), text).map_err(|e| CliError::Io(e.to_string()))
            };
            write("trajectory.csv", run.log.to_csv())?;
            write("plot_data.csv", run.log.to_tidy_csv())?;
            write(
                "summary.json",
                serde_json::to_string_pretty(&run.report).expect("report serializes") + "\n",
            )?;
            write(
                "diagnostics.json",
                serde_json::to_string_pretty(&run.diagnostics).expect("diagnostics serialize")
                    + "\n",
            )?;
            println!(
                "simulated {} steps: {} flights flown, {} delay steps, {} reassignments, {} audit violations",
                run.report.steps,
                run.report.flights_flown,
                run.report.total_delay_steps,
                run.report.reassignments,
                run.report.audit_violations
            );
            println!(
                "solve time: mean {:.3} s, max {:.3} s over {} solves",
                run.report.solve_time_stats.mean_s,
                run.report.solve_time_stats.max_s,
                run.report.solve_time_stats.count
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Plan { scenario, at_step, script, out } => {
            let s = load(&scenario.scenario)?;
            let script = load_script(&script, &s)?;
            let (snap, mut controller) = state_at(&s, script, at_step)?;
            let outcome = controller.iterate(&snap)?;
            let plan = &outcome.plan;
            println!("plan at step {at_step}: objective {:.6}", plan.objective);
            if plan.assignments.is_empty() {
                println!("  no flights in horizon");
            }
            for a in &plan.assignments {
                println!(
                    "  {} -> {} departing {} (delay {})",
                    a.flight, a.aircraft, a.departure_step, a.delay_steps
                );
            }
            for ap in &plan.airports {
                let grid: f64 = ap.grid_power_kw.iter().sum::<f64>() * s.params.dt_hours();
                println!("  {}: {:.1} kWh grid over horizon", ap.airport, grid);
            }
            let path = out.unwrap_or_else(|| PathBuf::from(format!("plan_{at_step}.json")));
            std::fs::write(&path, serde_json::to_string_pretty(plan).expect("plan serializes"))
                .map_err(|e| CliError::Io(e.to_string()))?;
            println!("plan written to {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::FlightEnergy { scenario, profile, aircraft, static_thrust, cl_max, no_takeoff } => {
            let s = load(&scenario.scenario)?;
            let spec = s
                .aircraft_spec(&aircraft)
                .ok_or_else(|| CliError::Validation(format!("unknown aircraft {aircraft:?}")))?;
            let profile =
                FlightProfile::load(&profile).map_err(|e| CliError::Validation(e.to_string()))?;
            let takeoff = (!no_takeoff).then_some(TakeoffModel { static_thrust, cl_max });
            let e = flight_energy(&profile, spec, takeoff)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            println!("profile: {:.0} s, {} samples", e.duration_s, profile.samples.len());
            if takeoff.is_some() {
                println!(
                    "takeoff: {:.2} kWh (liftoff {:.1} m/s after {:.1} s ground roll)",
                    e.takeoff_kwh, e.takeoff_speed_ms, e.ground_roll_s
                );
            }
            println!("enroute: {:.2} kWh", e.enroute_kwh);
            println!("total:   {:.2} kWh", e.total_kwh);
            Ok(ExitCode::SUCCESS)
        }
        Command::Forecast { scenario, airport, at_step, horizon } => {
            let s = load(&scenario.scenario)?;
            let spec = s
                .airport(&airport)
                .ok_or_else(|| CliError::Validation(format!("unknown airport {airport:?}")))?;
            let weather = &s.weather[&airport];
            if at_step >= weather.day.len() {
                return Err(CliError::Validation(format!(
                    "step {at_step} beyond weather coverage"
                )));
            }
            let mut hw = HoltWinters::new(&s.params.forecast);
            for &y in &weather.history {
                hw.update(y);
            }
            for t in 0..=at_step {
                hw.update(weather.day[t]);
            }
            let series = match hw.predict(horizon, spec.pv_peak) {
                Ok(series) => series,
                Err(e) => {
                    eprintln!("note: {e}");
                    persistence_forecast(weather.day[at_step], horizon, spec.pv_peak)
                }
            };
            println!("step,solar_kw_forecast");
            for (h, v) in series.iter().enumerate() {
                println!("{},{v:.3}", at_step + 1 + h);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportLp { scenario, at_step, script, out } => {
            let s = load(&scenario.scenario)?;
            let script = load_script(&script, &s)?;
            let (snap, controller) = state_at(&s, script, at_step)?;
            let (instance, _) = controller.build_instance(&snap)?;
            write_lp_file(&instance, &out).map_err(|e| CliError::Io(e.to_string()))?;
            println!(
                "wrote {} ({} variables, {} constraints)",
                out.display(),
                instance.num_vars(),
                instance.num_constraints()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Graph { scenario, at_step, dot } => {
            let s = load(&scenario.scenario)?;
            let names: Vec<String> = s.airports.iter().map(|a| a.id.clone()).collect();
            let flights: Vec<_> = s
                .flights
                .iter()
                .filter(|f| {
                    let first = f.sched_departure.max(at_step);
                    first <= f.sched_departure + s.params.max_delay_steps
                        && first < at_step + s.params.horizon_steps
                })
                .cloned()
                .collect();
            let g = build_graph(at_step, &names, &s.params, &flights);
            std::fs::write(&dot, g.to_dot()).map_err(|e| CliError::Io(e.to_string()))?;
            println!(
                "wrote {} ({} nodes, {} edges, {} flights)",
                dot.display(),
                g.num_nodes(),
                g.num_edges(),
                g.flights.len()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::SolveLp { lp_file, solution_file } => {
            let instance =
                read_lp_file(&lp_file).map_err(|e| CliError::Validation(e.to_string()))?;
            let solution = solve_milp(&instance, Limits::default())
                .map_err(|e| CliError::SolverLimit(e.to_string()))?;
            match solution.status {
                SolveStatus::Infeasible => {
                    eprintln!("infeasible");
                    Ok(ExitCode::from(2))
                }
                _ => {
                    write_solution_file(&instance, &solution, &solution_file)
                        .map_err(|e| CliError::Io(e.to_string()))?;
                    println!("objective {:.12e}", solution.objective);
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
    }
}
