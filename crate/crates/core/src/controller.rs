//! The receding-horizon loop: measure, forecast, build and solve the
//! assignment program, commit the first step to the plant, repeat.
//!
//! Infeasibility recovery ladder: (1) soften the energy-reserve rows with
//! penalized slacks; (2) additionally double the admissible departure delay
//! for this iteration (engaged directly when a flight's delay window has
//! already lapsed); (3) controlled abort naming the flights in play.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

use crate::audit::{audit_plant_log, LogAudit};
use crate::branch_bound::{solve_milp_warm, Limits};
use crate::external::{solve_external, ExternalError};
use crate::forecast::{persistence_forecast, HoltWinters};
use crate::milp::{write_lp_file, MilpInstance, SolveStats, SolveStatus};
use crate::model::{
    annotate_grid_slack, build_problem, decode_plan, AircraftObs, BuildOptions, EnergyEstimator,
    FleetPlan, MeasurementSnapshot, ModelError, VariableMap,
};
use crate::plant::{CommittedControls, DisturbanceScript, Plant, PlantError, TrajectoryLog};
use crate::scenario::{AirportId, FlightId, FlightSpec, Scenario};
use crate::simplex::SolveError;
use crate::timegraph::{build_graph, EdgeKind, TimeExpandedGraph};

/// Which MILP back end the loop calls.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SolverChoice {
    #[default]
    Builtin,
    /// `<command> <lp-file> <solution-file>` contract.
    External(String),
}

/// Loop configuration.
#[derive(Debug, Clone)]
pub struct ControllerConfig {
    pub solver: SolverChoice,
    pub limits: Limits,
    /// Use the previous plan, shifted one step, as a branch-and-bound
    /// incumbent.
    pub warm_start: bool,
    /// Directory for per-iteration artifacts (`plan_<t>.json`, and
    /// `instance_<t>.lp` when `dump_lp` is set).
    pub artifact_dir: Option<PathBuf>,
    pub dump_lp: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            solver: SolverChoice::Builtin,
            limits: Limits { max_nodes: None, max_time_s: Some(60.0) },
            warm_start: true,
            artifact_dir: None,
            dump_lp: false,
        }
    }
}

/// How far the recovery ladder had to climb in one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum RecoveryLevel {
    None,
    SoftReserve,
    SoftReserveWidenedDelay,
}

/// Per-iteration diagnostics, including plan-vs-previous-plan deltas.
#[derive(Debug, Clone, Serialize)]
pub struct IterationDiagnostics {
    pub step: usize,
    pub objective: f64,
    pub in_horizon_flights: usize,
    pub ladder: RecoveryLevel,
    pub reserve_slack_kwh: f64,
    /// Flights whose assigned aircraft changed since the previous plan.
    pub reassignments: Vec<(FlightId, String, String)>,
    /// Flights whose planned departure moved since the previous plan.
    pub departure_shifts: Vec<(FlightId, usize, usize)>,
    pub solver_nodes: u64,
    pub solver_pivots: u64,
    pub solve_time_s: f64,
    pub warm_start_used: bool,
    pub limit_hit: bool,
}

/// One iteration's output, carrying the exact context the plan was built
/// from so callers can re-audit it independently.
#[derive(Debug, Clone)]
pub struct IterateOutcome {
    pub controls: CommittedControls,
    pub plan: FleetPlan,
    pub diagnostics: IterationDiagnostics,
    pub graph: TimeExpandedGraph,
    pub forecast: BTreeMap<AirportId, Vec<f64>>,
    pub enroute_energy: BTreeMap<String, f64>,
}

#[derive(Debug, Error)]
pub enum ControlError {
    #[error("step {step}: problem infeasible after full recovery ladder; flights in horizon: {flights:?}")]
    Infeasible { step: usize, flights: Vec<FlightId> },
    #[error("step {step}: flight {flight:?} missed its (widened) delay window, aborting")]
    MissedWindow { step: usize, flight: FlightId },
    #[error("step {step}: solver hit limits without an incumbent")]
    SolverLimit { step: usize },
    #[error("solver: {0}")]
    Solver(#[from] SolveError),
    #[error("external solver: {0}")]
    External(#[from] ExternalError),
    #[error("model: {0}")]
    Model(#[from] ModelError),
    #[error("plant: {0}")]
    Plant(#[from] PlantError),
    #[error("artifacts: {0}")]
    Io(#[from] std::io::Error),
}

/// Receding-horizon controller state.
pub struct Controller<'a> {
    scenario: &'a Scenario,
    config: ControllerConfig,
    estimator: EnergyEstimator,
    forecasters: BTreeMap<AirportId, HoltWinters>,
    /// Flights whose departure has been committed (never re-decided).
    departed: BTreeSet<FlightId>,
    prev: Option<(TimeExpandedGraph, FleetPlan)>,
    airport_names: Vec<String>,
    /// Largest delay allowance ever used (widened iterations included),
    /// needed to audit the executed log.
    pub max_delay_used: usize,
}

impl<'a> Controller<'a> {
    pub fn new(scenario: &'a Scenario, config: ControllerConfig) -> Self {
        let mut forecasters = BTreeMap::new();
        for airport in &scenario.airports {
            let mut hw = HoltWinters::new(&scenario.params.forecast);
            for &y in &scenario.weather[&airport.id].history {
                hw.update(y);
            }
            forecasters.insert(airport.id.clone(), hw);
        }
        Self {
            scenario,
            config,
            estimator: EnergyEstimator::new(),
            forecasters,
            departed: BTreeSet::new(),
            prev: None,
            airport_names: scenario.airports.iter().map(|a| a.id.clone()).collect(),
            max_delay_used: scenario.params.max_delay_steps,
        }
    }

    /// Feeds the current realized solar into the forecaster states; call
    /// once per step before [`Self::iterate`].
    pub fn observe_weather(&mut self, snap: &MeasurementSnapshot) {
        for (airport, hw) in self.forecasters.iter_mut() {
            hw.update(snap.solar_now[airport]);
        }
    }

    /// Per-airport forecast over the horizon: the measured current power
    /// for the running step, Holt-Winters (or persistence while not yet
    /// warm) for the rest.
    fn forecast(&self, snap: &MeasurementSnapshot) -> BTreeMap<AirportId, Vec<f64>> {
        let n = self.scenario.params.horizon_steps;
        let mut out = BTreeMap::new();
        for airport in &self.scenario.airports {
            let cap = airport.pv_peak;
            let now = snap.solar_now[&airport.id].clamp(0.0, cap);
            let mut series = vec![now];
            match self.forecasters[&airport.id].predict(n - 1, cap) {
                Ok(rest) => series.extend(rest),
                Err(_) => series.extend(persistence_forecast(now, n - 1, cap)),
            }
            out.insert(airport.id.clone(), series);
        }
        out
    }

    /// Flights that still need a departure decision and could depart within
    /// the window, given delay allowance `delay`.
    fn horizon_flights(&self, t: usize, delay: usize) -> Vec<FlightSpec> {
        let n = self.scenario.params.horizon_steps;
        self.scenario
            .flights
            .iter()
            .filter(|f| !self.departed.contains(&f.id))
            .filter(|f| {
                // at least one delay copy must fit inside the window
                let first = f.sched_departure.max(t);
                first <= f.sched_departure + delay && first < t + n
            })
            .cloned()
            .collect()
    }

    /// Undeparted flights whose whole delay window lies in the past.
    fn lapsed_flights(&self, t: usize, delay: usize) -> Vec<FlightId> {
        self.scenario
            .flights
            .iter()
            .filter(|f| !self.departed.contains(&f.id))
            .filter(|f| f.sched_departure + delay < t)
            .map(|f| f.id.clone())
            .collect()
    }

    fn update_estimator(&mut self, snap: &MeasurementSnapshot) {
        for (id, obs) in &snap.aircraft {
            if let AircraftObs::OnGround { energy_kwh, .. } = obs {
                self.estimator.observe_ground(id, *energy_kwh);
            }
        }
    }

    fn solve(
        &self,
        instance: &MilpInstance,
        warm: Option<&[f64]>,
    ) -> Result<(SolveStatus, Option<crate::milp::MilpSolution>, SolveStats), ControlError> {
        match &self.config.solver {
            SolverChoice::Builtin => {
                let sol = solve_milp_warm(instance, self.config.limits, warm)?;
                let stats = sol.stats.clone();
                match sol.status {
                    SolveStatus::Infeasible => Ok((SolveStatus::Infeasible, None, stats)),
                    SolveStatus::Optimal => Ok((SolveStatus::Optimal, Some(sol), stats)),
                    SolveStatus::LimitReached if !sol.values.is_empty() => {
                        Ok((SolveStatus::LimitReached, Some(sol), stats))
                    }
                    SolveStatus::LimitReached => Ok((SolveStatus::LimitReached, None, stats)),
                }
            }
            SolverChoice::External(cmd) => match solve_external(instance, cmd) {
                Ok(sol) => {
                    let stats = sol.stats.clone();
                    match sol.status {
                        SolveStatus::Infeasible => Ok((SolveStatus::Infeasible, None, stats)),
                        _ => Ok((SolveStatus::Optimal, Some(sol), stats)),
                    }
                }
                Err(e) => Err(e.into()),
            },
        }
    }

    /// One measure-plan-commit cycle.
    pub fn iterate(&mut self, snap: &MeasurementSnapshot) -> Result<IterateOutcome, ControlError> {
        let t = snap.t_now;
        let params = &self.scenario.params;
        self.update_estimator(snap);
        let forecast = self.forecast(snap);

        // ladder rung selection starts at the base delay allowance unless a
        // flight's window already lapsed
        let base_delay = params.max_delay_steps;
        let start_level = if self.lapsed_flights(t, base_delay).is_empty() {
            RecoveryLevel::None
        } else {
            RecoveryLevel::SoftReserveWidenedDelay
        };

        let ladder = [
            RecoveryLevel::None,
            RecoveryLevel::SoftReserve,
            RecoveryLevel::SoftReserveWidenedDelay,
        ];
        let mut attempt_flights: Vec<FlightId> = Vec::new();
        for &level in ladder.iter().filter(|l| **l >= start_level) {
            let delay = match level {
                RecoveryLevel::SoftReserveWidenedDelay => base_delay * 2,
                _ => base_delay,
            };
            // a flight beyond even the widened window is a hard abort
            if level == RecoveryLevel::SoftReserveWidenedDelay {
                if let Some(flight) = self.lapsed_flights(t, delay).first() {
                    return Err(ControlError::MissedWindow { step: t, flight: flight.clone() });
                }
            }
            let flights = self.horizon_flights(t, delay);
            attempt_flights = flights.iter().map(|f| f.id.clone()).collect();
            let mut eff_params = params.clone();
            eff_params.max_delay_steps = delay;
            let graph = build_graph(t, &self.airport_names, &eff_params, &flights);

            let options = BuildOptions {
                reserve_softening: match level {
                    RecoveryLevel::None => None,
                    _ => Some(reserve_penalty(self.scenario)),
                },
                max_delay_steps: delay,
            };
            let enroute = self.enroute_estimates(snap);
            let (instance, map) =
                build_problem(&graph, snap, &enroute, &forecast, self.scenario, &options)?;

            if let Some(dir) = &self.config.artifact_dir {
                if self.config.dump_lp {
                    write_lp_file(&instance, &dir.join(format!("instance_{t}.lp")))
                        .map_err(|e| ControlError::Io(std::io::Error::other(e.to_string())))?;
                }
            }

            let warm_values = if self.config.warm_start && level == RecoveryLevel::None {
                self.shifted_warm_start(&graph, &map, snap, &forecast)
            } else {
                None
            };

            let (status, solution, stats) = self.solve(&instance, warm_values.as_deref())?;
            match status {
                SolveStatus::Infeasible => continue,
                SolveStatus::LimitReached if solution.is_none() => {
                    return Err(ControlError::SolverLimit { step: t })
                }
                _ => {}
            }
            let solution = solution.expect("solution present");
            let mut plan = decode_plan(&solution, &map, &graph, snap, self.scenario)?;
            annotate_grid_slack(&mut plan, &forecast);
            let controls = self.commit(t, &plan, &graph)?;

            let diagnostics = self.diagnostics(
                t,
                &plan,
                &stats,
                level,
                attempt_flights.len(),
                warm_values.is_some(),
                status == SolveStatus::LimitReached,
            );
            if delay > self.max_delay_used {
                self.max_delay_used = delay;
            }
            if let Some(dir) = &self.config.artifact_dir {
                std::fs::create_dir_all(dir)?;
                let text = serde_json::to_string_pretty(&plan).expect("plan serializes");
                std::fs::write(dir.join(format!("plan_{t}.json")), text)?;
            }
            self.prev = Some((graph.clone(), plan.clone()));
            return Ok(IterateOutcome {
                controls,
                plan,
                diagnostics,
                graph,
                forecast,
                enroute_energy: enroute,
            });
        }
        Err(ControlError::Infeasible { step: t, flights: attempt_flights })
    }

    /// Builds (without solving) the base instance for the given snapshot,
    /// for LP export and inspection.
    pub fn build_instance(
        &self,
        snap: &MeasurementSnapshot,
    ) -> Result<(MilpInstance, VariableMap), ControlError> {
        let t = snap.t_now;
        let forecast = self.forecast(snap);
        let flights = self.horizon_flights(t, self.scenario.params.max_delay_steps);
        let graph = build_graph(t, &self.airport_names, &self.scenario.params, &flights);
        let enroute = self.enroute_estimates(snap);
        let options = BuildOptions::from_scenario(self.scenario);
        Ok(build_problem(&graph, snap, &enroute, &forecast, self.scenario, &options)?)
    }

    fn enroute_estimates(&self, snap: &MeasurementSnapshot) -> BTreeMap<String, f64> {
        snap.aircraft
            .iter()
            .filter(|(_, obs)| matches!(obs, AircraftObs::EnRoute { .. }))
            .filter_map(|(id, _)| self.estimator.estimate(id).map(|e| (id.clone(), e)))
            .collect()
    }

    /// First-step controls: departures whose chosen copy leaves now, current
    /// charge powers, current BESS powers.
    fn commit(
        &mut self,
        t: usize,
        plan: &FleetPlan,
        graph: &TimeExpandedGraph,
    ) -> Result<CommittedControls, ControlError> {
        let mut controls = CommittedControls { step: t, ..Default::default() };
        for assignment in &plan.assignments {
            if assignment.departure_step == t {
                controls
                    .departures
                    .push((assignment.flight.clone(), assignment.aircraft.clone()));
                self.departed.insert(assignment.flight.clone());
                let est = graph
                    .flights
                    .iter()
                    .find(|f| f.id == assignment.flight)
                    .map(|f| f.est_energy)
                    .unwrap_or(0.0);
                self.estimator.note_departure(&assignment.aircraft, est);
            }
        }
        for ac in &plan.aircraft {
            let p = ac.charge_kw.first().copied().unwrap_or(0.0);
            if p > 1e-9 {
                controls.charge_kw.insert(ac.aircraft.clone(), p);
            }
        }
        for ap in &plan.airports {
            let p = ap.bess_power_kw.first().copied().unwrap_or(0.0);
            if p.abs() > 1e-9 {
                controls.bess_power_kw.insert(ap.airport.clone(), p);
            }
        }
        Ok(controls)
    }

    #[allow(clippy::too_many_arguments)]
    fn diagnostics(
        &self,
        t: usize,
        plan: &FleetPlan,
        stats: &SolveStats,
        ladder: RecoveryLevel,
        in_horizon: usize,
        warm_used: bool,
        limit_hit: bool,
    ) -> IterationDiagnostics {
        let mut reassignments = Vec::new();
        let mut shifts = Vec::new();
        if let Some((_, prev_plan)) = &self.prev {
            for asg in &plan.assignments {
                if let Some(old) = prev_plan.assignment_for(&asg.flight) {
                    if old.aircraft != asg.aircraft {
                        reassignments.push((
                            asg.flight.clone(),
                            old.aircraft.clone(),
                            asg.aircraft.clone(),
                        ));
                    }
                    if old.departure_step != asg.departure_step {
                        shifts.push((asg.flight.clone(), old.departure_step, asg.departure_step));
                    }
                }
            }
        }
        IterationDiagnostics {
            step: t,
            objective: plan.objective,
            in_horizon_flights: in_horizon,
            ladder,
            reserve_slack_kwh: plan.reserve_slack_kwh,
            reassignments,
            departure_shifts: shifts,
            solver_nodes: stats.nodes,
            solver_pivots: stats.simplex_pivots,
            solve_time_s: stats.solve_time_s,
            warm_start_used: warm_used,
            limit_hit,
        }
    }

    /// Builds a candidate variable assignment for the new instance by
    /// shifting the previous plan one step; any mismatch bails out and the
    /// solver simply starts cold.
    fn shifted_warm_start(
        &self,
        graph: &TimeExpandedGraph,
        map: &VariableMap,
        snap: &MeasurementSnapshot,
        forecast: &BTreeMap<AirportId, Vec<f64>>,
    ) -> Option<Vec<f64>> {
        let (prev_graph, prev_plan) = self.prev.as_ref()?;
        if prev_graph.t_anchor + 1 != graph.t_anchor || prev_graph.n_steps != graph.n_steps {
            return None;
        }
        let n = graph.n_steps;
        let dt_h = self.scenario.params.dt_hours();
        let total_vars = map.n_aircraft * graph.num_edges()
            + map.n_aircraft * graph.num_ground_edges()
            + map.n_aircraft * n
            + map.n_airports * n * 3;
        if !map.reserve_slacks.is_empty() {
            return None;
        }
        let mut values = vec![0.0; total_vars];

        // helper: previous edge covering previous offset `o`
        let prev_edge_at = |k: usize, off: usize| -> Option<usize> {
            prev_plan.aircraft[k].path.iter().copied().find(|&e| match prev_graph.edges[e].kind {
                EdgeKind::Ground { offset, .. } => offset == off,
                EdgeKind::Flight { departure, .. } => departure - prev_graph.t_anchor == off,
                EdgeKind::VirtualFinal { .. } => false,
            })
        };

        for (k, spec) in self.scenario.aircraft.iter().enumerate() {
            let source_off = match &snap.aircraft[&spec.id] {
                AircraftObs::OnGround { .. } => 0,
                AircraftObs::EnRoute { arrival_step, .. } => {
                    arrival_step.saturating_sub(graph.t_anchor).min(n)
                }
            };
            let mut node = match &snap.aircraft[&spec.id] {
                AircraftObs::OnGround { airport, .. } => {
                    graph.node_at(self.scenario.airport_index(airport)?, 0)
                }
                AircraftObs::EnRoute { destination, .. } => {
                    graph.node_at(self.scenario.airport_index(destination)?, source_off)
                }
            };
            let mut last_airport = None;
            for off in source_off..n {
                let prev_off = off + 1;
                let new_edge = if prev_off < n {
                    match prev_edge_at(k, prev_off) {
                        Some(e) => match prev_graph.edges[e].kind {
                            EdgeKind::Ground { airport, .. } => {
                                last_airport = Some(airport);
                                Some(graph.ground_edge(airport, off))
                            }
                            EdgeKind::Flight { flight, departure, .. } => {
                                let id = &prev_graph.flights[flight].id;
                                let fi = graph.flights.iter().position(|f| &f.id == id)?;
                                let fe = graph.flight_edges[fi].iter().copied().find(|&fe| {
                                    matches!(graph.edges[fe].kind,
                                        EdgeKind::Flight { departure: d, .. } if d == departure)
                                })?;
                                last_airport = None;
                                Some(fe)
                            }
                            EdgeKind::VirtualFinal { .. } => None,
                        },
                        None => None,
                    }
                } else {
                    // extend the tail: stay at the final airport
                    last_airport.map(|a| graph.ground_edge(a, off))
                };
                let e = new_edge?;
                if graph.edges[e].tail != node {
                    return None;
                }
                if let EdgeKind::Ground { airport, .. } = graph.edges[e].kind {
                    last_airport = Some(airport);
                }
                values[map.x(k, e).0] = 1.0;
                node = graph.edges[e].head;
            }
            // close with the final edge
            let a = last_airport.or_else(|| match &snap.aircraft[&spec.id] {
                AircraftObs::EnRoute { destination, .. } if source_off == n => {
                    self.scenario.airport_index(destination)
                }
                AircraftObs::OnGround { airport, .. } if n == 0 => {
                    self.scenario.airport_index(airport)
                }
                _ => None,
            })?;
            let final_edge = graph
                .edges
                .iter()
                .position(|e| matches!(e.kind, EdgeKind::VirtualFinal { airport } if airport == a))?;
            if graph.edges[final_edge].tail != node {
                return None;
            }
            values[map.x(k, final_edge).0] = 1.0;

            // shift charges one step forward
            for off in 0..n {
                let prev_off = off + 1;
                if prev_off < n {
                    let p = prev_plan.aircraft[k].charge_kw[prev_off];
                    if p != 0.0 {
                        if let Some(e) = prev_edge_at(k, prev_off) {
                            if let EdgeKind::Ground { airport, .. } = prev_graph.edges[e].kind {
                                values[map.charge(k, graph.ground_edge(airport, off)).0] = p;
                            }
                        }
                    }
                }
            }

            // recompute the energy trajectory
            let start = match &snap.aircraft[&spec.id] {
                AircraftObs::OnGround { energy_kwh, .. } => *energy_kwh,
                AircraftObs::EnRoute { .. } => self.estimator.estimate(&spec.id)?,
            };
            let mut energy = start;
            for step in 1..=n {
                let mut delta = 0.0;
                for h in 0..map.n_airports {
                    delta += values[map.charge(k, graph.ground_edge(h, step - 1)).0] * dt_h;
                }
                for (fi, flight) in graph.flights.iter().enumerate() {
                    for &fe in &graph.flight_edges[fi] {
                        if values[map.x(k, fe).0] > 0.5 {
                            let EdgeKind::Flight { departure, .. } = graph.edges[fe].kind else {
                                unreachable!()
                            };
                            if departure - graph.t_anchor == step - 1 {
                                delta -= flight.est_energy;
                            }
                        }
                    }
                }
                energy += delta;
                values[map.energy(k, step).0] = energy;
            }
        }

        // airports: shift BESS power, recompute energies and grid draw
        for (h, airport) in self.scenario.airports.iter().enumerate() {
            let prev_ap = &prev_plan.airports[h];
            let mut e = snap.bess_energy[&airport.id];
            let fc = &forecast[&airport.id];
            for off in 0..n {
                let pb = if off + 1 < n { prev_ap.bess_power_kw[off + 1] } else { 0.0 };
                values[map.bess_power(h, off).0] = pb;
                e -= pb * dt_h;
                values[map.bess_energy(h, off + 1).0] = e;
                let apron: f64 = (0..map.n_aircraft)
                    .map(|k| values[map.charge(k, graph.ground_edge(h, off)).0])
                    .sum();
                values[map.grid_power(h, off).0] = (apron - fc[off] - pb).max(0.0);
            }
        }

        Some(values)
    }
}

/// Closed-loop summary.
#[derive(Debug, Clone, Serialize)]
pub struct SolveTimeStats {
    pub count: usize,
    pub min_s: f64,
    pub mean_s: f64,
    pub max_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub steps: usize,
    pub grid_kwh_per_airport: BTreeMap<AirportId, f64>,
    pub total_delay_steps: usize,
    /// Count of (flight, aircraft) changes between consecutive plans.
    pub reassignments: usize,
    pub solve_time_stats: SolveTimeStats,
    pub flights_flown: usize,
    pub ladder_engagements: usize,
    pub audit_violations: usize,
}

/// Output of [`run_closed_loop`].
pub struct ClosedLoopRun {
    pub report: RunReport,
    pub log: TrajectoryLog,
    pub diagnostics: Vec<IterationDiagnostics>,
    pub audit: LogAudit,
}

/// Runs the full measure-solve-commit loop for `duration` steps.
pub fn run_closed_loop(
    scenario: &Scenario,
    script: DisturbanceScript,
    duration: usize,
    config: ControllerConfig,
) -> Result<ClosedLoopRun, ControlError> {
    assert!(
        duration <= scenario.max_simulation_steps(),
        "duration {duration} exceeds weather coverage {}",
        scenario.max_simulation_steps()
    );
    let mut plant = Plant::new(scenario, script);
    let mut controller = Controller::new(scenario, config);
    let mut log = TrajectoryLog::default();
    let mut diagnostics = Vec::with_capacity(duration);

    for _ in 0..duration {
        let snap = plant.snapshot();
        controller.observe_weather(&snap);
        let outcome = controller.iterate(&snap)?;
        plant.step(&outcome.controls, &mut log)?;
        diagnostics.push(outcome.diagnostics);
    }

    let audit = audit_plant_log(&log, scenario, controller.max_delay_used);
    let times: Vec<f64> = diagnostics.iter().map(|d| d.solve_time_s).collect();
    let total: f64 = times.iter().sum();
    let report = RunReport {
        steps: duration,
        grid_kwh_per_airport: log.grid_kwh_per_airport(scenario.params.dt_hours()),
        total_delay_steps: log.total_delay_steps(),
        reassignments: diagnostics.iter().map(|d| d.reassignments.len()).sum(),
        solve_time_stats: SolveTimeStats {
            count: times.len(),
            min_s: times.iter().copied().fold(f64::INFINITY, f64::min),
            mean_s: if times.is_empty() { 0.0 } else { total / times.len() as f64 },
            max_s: times.iter().copied().fold(0.0, f64::max),
            total_s: total,
        },
        flights_flown: audit.flights_flown,
        ladder_engagements: diagnostics.iter().filter(|d| d.ladder != RecoveryLevel::None).count(),
        audit_violations: audit.violations.len(),
    };
    Ok(ClosedLoopRun { report, log, diagnostics, audit })
}

/// Penalty per kWh of reserve shortfall: large against any plausible grid
/// cost over one horizon.
fn reserve_penalty(scenario: &Scenario) -> f64 {
    let max_q = scenario.airports.iter().map(|a| a.grid_weight).fold(1.0, f64::max);
    1e4 * max_q.max(scenario.params.delay_weight)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::Disturbance;
    use crate::scenario::tests_support::tiny_scenario;

    fn fast_config() -> ControllerConfig {
        ControllerConfig { warm_start: true, ..Default::default() }
    }

    #[test]
    fn tiny_day_zero_disturbance() {
        let s = tiny_scenario();
        let run = run_closed_loop(&s, DisturbanceScript::empty(), 10, fast_config()).unwrap();
        assert_eq!(run.report.total_delay_steps, 0);
        assert_eq!(run.report.flights_flown, 1);
        assert!(run.audit.violations.is_empty(), "{:#?}", run.audit.violations);
    }

    #[test]
    fn deterministic_runs() {
        let s = tiny_scenario();
        let script = DisturbanceScript {
            events: vec![Disturbance::SolarScale {
                airport: "ALFA".into(),
                from_step: 2,
                to_step: 6,
                factor: 0.3,
            }],
        };
        let run1 = run_closed_loop(&s, script.clone(), 10, fast_config()).unwrap();
        let run2 = run_closed_loop(&s, script, 10, fast_config()).unwrap();
        assert_eq!(run1.log, run2.log);
    }

    #[test]
    fn scripted_flight_time_delay_handled() {
        let s = tiny_scenario();
        let script = DisturbanceScript {
            events: vec![Disturbance::FlightDelay { flight: "F01".into(), extra_steps: 2 }],
        };
        let run = run_closed_loop(&s, script, 10, fast_config()).unwrap();
        assert_eq!(run.report.flights_flown, 1);
        assert!(run.audit.violations.is_empty(), "{:#?}", run.audit.violations);
    }

    #[test]
    fn impossible_flight_aborts_with_name() {
        // empty battery, charging impossible, flight due immediately: the
        // ladder runs out and the abort names the flight
        let mut s = tiny_scenario();
        s.aircraft[0].initial_energy = 80.0; // == batt_min
        s.aircraft[0].charge_max = 0.0;
        s.aircraft[0].charge_min = 0.0;
        s.params.big_m = 0.0;
        let err = run_closed_loop(&s, DisturbanceScript::empty(), 6, fast_config());
        match err {
            Err(ControlError::Infeasible { flights, .. }) => {
                assert!(flights.contains(&"F01".to_string()), "{flights:?}");
            }
            Err(ControlError::MissedWindow { flight, .. }) => assert_eq!(flight, "F01"),
            other => panic!("expected abort, got {:?}", other.is_ok()),
        }
    }
}
