//! Translation between the measured world and the MILP: builds the joint
//! aircraft-assignment / charge-scheduling / airport-energy program over a
//! time-expanded graph, and decodes solutions into executable fleet plans.
//!
//! Variable layout (airport-major, step-minor within each block):
//! `x[k][e]` binaries for every aircraft and edge, then per-aircraft charge
//! powers over ground edges, per-aircraft energies over steps 1..=N, then
//! per-airport BESS power, BESS energy and grid power. Apron power is not a
//! variable: it is substituted into the grid balance rows and recovered
//! during decoding.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::milp::{LinConstraint, MilpError, MilpInstance, MilpSolution, Sense, VarDef, VarId};
use crate::scenario::{AircraftId, AirportId, FlightId, Scenario};
use crate::timegraph::{EdgeKind, TimeExpandedGraph};

/// Where an aircraft is at measurement time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AircraftObs {
    /// Parked; battery energy is measurable on the ground.
    OnGround { airport: AirportId, energy_kwh: f64 },
    /// Flying; only destination and estimated arrival step are known.
    EnRoute { destination: AirportId, arrival_step: usize },
}

/// Everything the controller measures at one time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSnapshot {
    pub t_now: usize,
    pub aircraft: BTreeMap<AircraftId, AircraftObs>,
    /// BESS energy per airport [kWh].
    pub bess_energy: BTreeMap<AirportId, f64>,
    /// Currently available solar power per airport [kW].
    pub solar_now: BTreeMap<AirportId, f64>,
}

/// Battery-energy bookkeeping for aircraft whose energy is not measurable
/// (in flight): last ground measurement minus estimated energies of flights
/// flown since, plus any charge metered at the apron in between.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyEstimator {
    state: BTreeMap<AircraftId, f64>,
}

impl EnergyEstimator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Ground measurement: replaces the running estimate.
    pub fn observe_ground(&mut self, aircraft: &str, energy_kwh: f64) {
        self.state.insert(aircraft.to_string(), energy_kwh);
    }

    /// Charge delivered at the apron since the last observation.
    pub fn note_charge(&mut self, aircraft: &str, kwh: f64) {
        *self.state.entry(aircraft.to_string()).or_insert(0.0) += kwh;
    }

    /// Departure on a flight with estimated energy `est_kwh`.
    pub fn note_departure(&mut self, aircraft: &str, est_kwh: f64) {
        *self.state.entry(aircraft.to_string()).or_insert(0.0) -= est_kwh;
    }

    pub fn estimate(&self, aircraft: &str) -> Option<f64> {
        self.state.get(aircraft).copied()
    }
}

/// Model-building options.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    /// Replace the hard energy-reserve rows by slack variables with this
    /// penalty per kWh (the first rung of the infeasibility recovery
    /// ladder). `None` keeps the reserve hard.
    pub reserve_softening: Option<f64>,
    /// Maximum departure delay accepted when validating decoded plans.
    pub max_delay_steps: usize,
}

impl BuildOptions {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        Self { reserve_softening: None, max_delay_steps: scenario.params.max_delay_steps }
    }
}

/// Maps entity coordinates to MILP variable ids for one built instance.
#[derive(Debug, Clone)]
pub struct VariableMap {
    pub n_aircraft: usize,
    pub n_airports: usize,
    pub n_edges: usize,
    pub n_ground: usize,
    pub n_steps: usize,
    x0: usize,
    p0: usize,
    e0: usize,
    pb0: usize,
    eb0: usize,
    pgr0: usize,
    /// Reserve slack ids per (aircraft, row) when softening is active.
    pub reserve_slacks: Vec<VarId>,
    pub options: BuildOptions,
}

impl VariableMap {
    /// Binary: aircraft `k` uses edge `e`.
    pub fn x(&self, k: usize, e: usize) -> VarId {
        VarId(self.x0 + k * self.n_edges + e)
    }

    /// Charge power of aircraft `k` on ground edge `g` [kW].
    pub fn charge(&self, k: usize, g: usize) -> VarId {
        VarId(self.p0 + k * self.n_ground + g)
    }

    /// Battery energy of aircraft `k` at step offset `n` (1..=N) [kWh].
    pub fn energy(&self, k: usize, n: usize) -> VarId {
        debug_assert!((1..=self.n_steps).contains(&n));
        VarId(self.e0 + k * self.n_steps + (n - 1))
    }

    /// BESS power of airport `h` over step offset `n0` (positive
    /// discharges) [kW].
    pub fn bess_power(&self, h: usize, n0: usize) -> VarId {
        VarId(self.pb0 + h * self.n_steps + n0)
    }

    /// BESS energy of airport `h` at step offset `n` (1..=N) [kWh].
    pub fn bess_energy(&self, h: usize, n: usize) -> VarId {
        debug_assert!((1..=self.n_steps).contains(&n));
        VarId(self.eb0 + h * self.n_steps + (n - 1))
    }

    /// Grid import power of airport `h` over step offset `n0` [kW].
    pub fn grid_power(&self, h: usize, n0: usize) -> VarId {
        VarId(self.pgr0 + h * self.n_steps + n0)
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("aircraft {0:?}: no battery-energy estimate available while en route")]
    MissingEnergyEstimate(AircraftId),
    #[error("aircraft {0:?}: unknown initial airport {1:?} in snapshot")]
    UnknownAirport(AircraftId, AirportId),
    #[error("forecast for airport {airport:?} has length {got}, horizon needs {want}")]
    ForecastLength { airport: AirportId, got: usize, want: usize },
    #[error("snapshot is missing entry for {0:?}")]
    MissingSnapshotEntry(String),
    #[error("instance construction: {0}")]
    Milp(#[from] MilpError),
    #[error("aircraft {aircraft:?}: solution x-values do not form a path at node {node}")]
    NonPath { aircraft: AircraftId, node: usize },
    #[error("flight {flight:?} assigned {count} times in solution")]
    AssignmentCount { flight: FlightId, count: usize },
    #[error("decoded plan violates {what}: {detail}")]
    PlanInvariant { what: String, detail: String },
}

/// Builds the assignment-and-charge-scheduling MILP for one horizon.
///
/// `enroute_energy` supplies estimated battery energies for aircraft that
/// are flying (ground energies come from the snapshot); `forecast` carries
/// one power series of length N per airport, offset 0 = the current step.
pub fn build_problem(
    graph: &TimeExpandedGraph,
    snap: &MeasurementSnapshot,
    enroute_energy: &BTreeMap<AircraftId, f64>,
    forecast: &BTreeMap<AirportId, Vec<f64>>,
    scenario: &Scenario,
    options: &BuildOptions,
) -> Result<(MilpInstance, VariableMap), ModelError> {
    let n = graph.n_steps;
    let n_edges = graph.num_edges();
    let n_ground = graph.num_ground_edges();
    let n_air = scenario.airports.len();
    let n_fleet = scenario.aircraft.len();
    let dt_h = scenario.params.dt_hours();
    let big_m = scenario.params.big_m;

    for a in &scenario.airports {
        let f = forecast
            .get(&a.id)
            .ok_or_else(|| ModelError::MissingSnapshotEntry(format!("forecast {}", a.id)))?;
        if f.len() != n {
            return Err(ModelError::ForecastLength {
                airport: a.id.clone(),
                got: f.len(),
                want: n,
            });
        }
    }

    let mut inst = MilpInstance::new();
    let grid_cap: f64 = scenario.aircraft.iter().map(|k| k.charge_max).sum::<f64>()
        + scenario.airports.iter().map(|a| a.bess_power_max).fold(0.0, f64::max);

    // variables, in the documented block order
    let x0 = 0;
    for (k, ac) in scenario.aircraft.iter().enumerate() {
        let _ = k;
        for e in 0..n_edges {
            inst.add_variable(VarDef::binary(format!("x[k={},e={e}]", ac.id)))?;
        }
    }
    let p0 = inst.num_vars();
    for ac in &scenario.aircraft {
        for g in 0..n_ground {
            inst.add_variable(VarDef::continuous(
                format!("P[k={},g={g}]", ac.id),
                ac.charge_min,
                ac.charge_max,
            ))?;
        }
    }
    let e0 = inst.num_vars();
    for ac in &scenario.aircraft {
        for step in 1..=n {
            let lo = if step == n { ac.batt_min.max(ac.terminal_min) } else { ac.batt_min };
            inst.add_variable(VarDef::continuous(
                format!("E[k={},n={step}]", ac.id),
                lo,
                ac.batt_max,
            ))?;
        }
    }
    let pb0 = inst.num_vars();
    for ap in &scenario.airports {
        for n0 in 0..n {
            inst.add_variable(VarDef::continuous(
                format!("Pb[h={},n={n0}]", ap.id),
                -ap.bess_power_max,
                ap.bess_power_max,
            ))?;
        }
    }
    let eb0 = inst.num_vars();
    for ap in &scenario.airports {
        for step in 1..=n {
            inst.add_variable(VarDef::continuous(
                format!("Eb[h={},n={step}]", ap.id),
                ap.bess_capacity_min,
                ap.bess_capacity_max,
            ))?;
        }
    }
    let pgr0 = inst.num_vars();
    for ap in &scenario.airports {
        for n0 in 0..n {
            inst.add_variable(VarDef::continuous(
                format!("Pgr[h={},n={n0}]", ap.id),
                0.0,
                grid_cap,
            ))?;
        }
    }
    let mut map = VariableMap {
        n_aircraft: n_fleet,
        n_airports: n_air,
        n_edges,
        n_ground,
        n_steps: n,
        x0,
        p0,
        e0,
        pb0,
        eb0,
        pgr0,
        reserve_slacks: Vec::new(),
        options: options.clone(),
    };

    // per-aircraft source node and starting energy
    let mut sources = Vec::with_capacity(n_fleet);
    let mut start_energy = Vec::with_capacity(n_fleet);
    for ac in &scenario.aircraft {
        let obs = snap
            .aircraft
            .get(&ac.id)
            .ok_or_else(|| ModelError::MissingSnapshotEntry(format!("aircraft {}", ac.id)))?;
        match obs {
            AircraftObs::OnGround { airport, energy_kwh } => {
                let h = scenario
                    .airport_index(airport)
                    .ok_or_else(|| ModelError::UnknownAirport(ac.id.clone(), airport.clone()))?;
                sources.push(graph.node_at(h, 0));
                start_energy.push(*energy_kwh);
            }
            AircraftObs::EnRoute { destination, arrival_step } => {
                let h = scenario.airport_index(destination).ok_or_else(|| {
                    ModelError::UnknownAirport(ac.id.clone(), destination.clone())
                })?;
                // late measurements clip to the horizon start, far arrivals
                // to the horizon end
                let off = arrival_step.saturating_sub(snap.t_now).min(n);
                sources.push(graph.node_at(h, off));
                let est = enroute_energy
                    .get(&ac.id)
                    .copied()
                    .ok_or_else(|| ModelError::MissingEnergyEstimate(ac.id.clone()))?;
                start_energy.push(est);
            }
        }
    }

    // flow conservation: one block of |V| rows per aircraft
    let terminal = graph.terminal_node();
    for (k, ac) in scenario.aircraft.iter().enumerate() {
        let mut rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); graph.num_nodes()];
        for (e, edge) in graph.edges.iter().enumerate() {
            rows[edge.tail].push((map.x(k, e), -1.0));
            rows[edge.head].push((map.x(k, e), 1.0));
        }
        for (node, terms) in rows.into_iter().enumerate() {
            let rhs = if node == sources[k] {
                -1.0
            } else if node == terminal {
                1.0
            } else {
                0.0
            };
            inst.add_constraint(LinConstraint::new(
                format!("flow[k={},i={node}]", ac.id),
                terms,
                Sense::Eq,
                rhs,
            ))?;
        }
    }

    // virtual-chain coupling: a chosen flight edge forces its chain's
    // ground edges into the same aircraft's path
    for (k, ac) in scenario.aircraft.iter().enumerate() {
        let mut per_ground: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (fe, chain) in &graph.chains {
            for g in chain {
                per_ground.entry(*g).or_default().push(*fe);
            }
        }
        for (g, fes) in per_ground {
            let mut terms = vec![(map.x(k, g), 1.0)];
            for fe in &fes {
                terms.push((map.x(k, *fe), -1.0));
            }
            inst.add_constraint(LinConstraint::new(
                format!("chain[k={},g={g}]", ac.id),
                terms,
                Sense::Ge,
                0.0,
            ))?;
        }
    }

    // every in-horizon flight assigned exactly once across the fleet
    for (f, flight) in graph.flights.iter().enumerate() {
        let mut terms = Vec::new();
        for k in 0..n_fleet {
            for &fe in &graph.flight_edges[f] {
                terms.push((map.x(k, fe), 1.0));
            }
        }
        inst.add_constraint(LinConstraint::new(
            format!("assign[f={}]", flight.id),
            terms,
            Sense::Eq,
            1.0,
        ))?;
    }

    // charge gating: only on ground edges of the own path (big-M), and
    // never on virtual flight edges
    for (k, ac) in scenario.aircraft.iter().enumerate() {
        for g in 0..n_ground {
            inst.add_constraint(LinConstraint::new(
                format!("gate[k={},g={g}]", ac.id),
                vec![(map.charge(k, g), 1.0), (map.x(k, g), -big_m)],
                Sense::Le,
                0.0,
            ))?;
        }
        for (g, edge) in graph.edges.iter().enumerate().take(n_ground) {
            if edge.chain_of.is_empty() {
                continue;
            }
            let mut terms = vec![(map.charge(k, g), 1.0)];
            for fe in &edge.chain_of {
                terms.push((map.x(k, *fe), big_m));
            }
            inst.add_constraint(LinConstraint::new(
                format!("nochg[k={},g={g}]", ac.id),
                terms,
                Sense::Le,
                big_m,
            ))?;
        }
    }

    // battery dynamics, unrolled cumulatively: E_n = E_M + dt * (charges
    // before n) - (flight energies departing before n)
    for (k, ac) in scenario.aircraft.iter().enumerate() {
        for step in 1..=n {
            let mut terms = vec![(map.energy(k, step), 1.0)];
            for h in 0..n_air {
                for off in 0..step.min(n) {
                    terms.push((map.charge(k, graph.ground_edge(h, off)), -dt_h));
                }
            }
            for (f, flight) in graph.flights.iter().enumerate() {
                for &fe in &graph.flight_edges[f] {
                    let EdgeKind::Flight { departure, .. } = graph.edges[fe].kind else {
                        unreachable!()
                    };
                    if departure - graph.t_anchor < step {
                        terms.push((map.x(k, fe), flight.est_energy));
                    }
                }
            }
            inst.add_constraint(LinConstraint::new(
                format!("energy[k={},n={step}]", ac.id),
                terms,
                Sense::Eq,
                start_energy[k],
            ))?;
        }
    }

    // energy reserve along active virtual chains: chain edge over ground
    // offset o constrains the energy at step o+1
    let softening = options.reserve_softening;
    for (k, ac) in scenario.aircraft.iter().enumerate() {
        let mut per_step: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (fe, chain) in &graph.chains {
            for g in chain {
                let off = g % n;
                per_step.entry(off + 1).or_default().push(*fe);
            }
        }
        for (step, fes) in per_step {
            let mut terms = vec![(map.energy(k, step), 1.0)];
            for fe in &fes {
                terms.push((map.x(k, *fe), -ac.reserve));
            }
            if softening.is_some() {
                let slack = inst.add_variable(VarDef::continuous(
                    format!("sres[k={},n={step}]", ac.id),
                    0.0,
                    ac.reserve,
                ))?;
                map.reserve_slacks.push(slack);
                terms.push((slack, 1.0));
            }
            inst.add_constraint(LinConstraint::new(
                format!("resv[k={},n={step}]", ac.id),
                terms,
                Sense::Ge,
                0.0,
            ))?;
        }
    }

    // BESS dynamics per airport (positive power discharges the battery)
    for (h, ap) in scenario.airports.iter().enumerate() {
        let e_meas = snap
            .bess_energy
            .get(&ap.id)
            .ok_or_else(|| ModelError::MissingSnapshotEntry(format!("bess {}", ap.id)))?;
        for step in 1..=n {
            let mut terms = vec![(map.bess_energy(h, step), 1.0)];
            for n0 in 0..step {
                terms.push((map.bess_power(h, n0), dt_h));
            }
            inst.add_constraint(LinConstraint::new(
                format!("bess[h={},n={step}]", ap.id),
                terms,
                Sense::Eq,
                *e_meas,
            ))?;
        }
    }

    // grid power balance with the apron power substituted in:
    // Pgr >= (sum of charges at h) - forecast - Pb
    for (h, ap) in scenario.airports.iter().enumerate() {
        let fc = &forecast[&ap.id];
        #[allow(clippy::needless_range_loop)]
        for n0 in 0..n {
            let mut terms = vec![(map.grid_power(h, n0), 1.0), (map.bess_power(h, n0), 1.0)];
            for k in 0..n_fleet {
                terms.push((map.charge(k, graph.ground_edge(h, n0)), -1.0));
            }
            inst.add_constraint(LinConstraint::new(
                format!("grid[h={},n={n0}]", ap.id),
                terms,
                Sense::Ge,
                -fc[n0],
            ))?;
        }
    }

    // objective: grid energy cost + squared-delay cost - terminal BESS value
    let mut objective: Vec<(VarId, f64)> = Vec::new();
    for (h, ap) in scenario.airports.iter().enumerate() {
        for n0 in 0..n {
            objective.push((map.grid_power(h, n0), ap.grid_weight));
        }
        if scenario.params.terminal_weight != 0.0 {
            objective.push((map.bess_energy(h, n), -scenario.params.terminal_weight));
        }
    }
    let phi = scenario.params.delay_weight;
    for (f, _) in graph.flights.iter().enumerate() {
        for &fe in &graph.flight_edges[f] {
            let EdgeKind::Flight { delay, .. } = graph.edges[fe].kind else { unreachable!() };
            if delay > 0 && phi != 0.0 {
                let cost = phi * (delay * delay) as f64;
                for k in 0..n_fleet {
                    objective.push((map.x(k, fe), cost));
                }
            }
        }
    }
    if let Some(penalty) = softening {
        for slack in &map.reserve_slacks {
            objective.push((*slack, penalty));
        }
    }
    inst.set_objective(objective)?;

    Ok((inst, map))
}

/// One aircraft's decoded schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftPlan {
    pub aircraft: AircraftId,
    /// Ordered edge ids from the source node to the terminal.
    pub path: Vec<usize>,
    /// Charge power per step offset 0..N-1 [kW].
    pub charge_kw: Vec<f64>,
    /// Battery energy per step offset 1..=N [kWh].
    pub energy_kwh: Vec<f64>,
}

/// One airport's decoded energy schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirportPlan {
    pub airport: AirportId,
    /// BESS power per step offset (positive discharges) [kW].
    pub bess_power_kw: Vec<f64>,
    /// Grid import per step offset [kW].
    pub grid_power_kw: Vec<f64>,
    /// Apron power recovered as the sum of aircraft charges [kW].
    pub apron_power_kw: Vec<f64>,
    /// BESS energy per step offset 1..=N [kWh].
    pub bess_energy_kwh: Vec<f64>,
    /// Slack of the grid balance row: Pgr - max(0, apron - solar - Pb).
    pub grid_slack_kw: Vec<f64>,
}

/// An in-horizon flight pinned to an aircraft and departure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightAssignment {
    pub flight: FlightId,
    pub aircraft: AircraftId,
    pub departure_step: usize,
    pub delay_steps: usize,
}

/// Full decoded plan for one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetPlan {
    pub t_anchor: usize,
    pub horizon_steps: usize,
    pub aircraft: Vec<AircraftPlan>,
    pub airports: Vec<AirportPlan>,
    pub assignments: Vec<FlightAssignment>,
    pub objective: f64,
    /// Total reserve shortfall absorbed by softening slacks [kWh].
    pub reserve_slack_kwh: f64,
}

impl FleetPlan {
    pub fn assignment_for(&self, flight: &str) -> Option<&FlightAssignment> {
        self.assignments.iter().find(|a| a.flight == flight)
    }
}

/// Decodes an optimal (or incumbent) solution into a [`FleetPlan`].
///
/// Paths are reconstructed by walking x = 1 edges from each aircraft's
/// source; a non-path x pattern is reported as a structural error naming
/// the aircraft.
pub fn decode_plan(
    solution: &MilpSolution,
    map: &VariableMap,
    graph: &TimeExpandedGraph,
    snap: &MeasurementSnapshot,
    scenario: &Scenario,
) -> Result<FleetPlan, ModelError> {
    let n = map.n_steps;
    let on = |v: VarId| solution.value(v) > 0.5;

    let mut aircraft_plans = Vec::with_capacity(map.n_aircraft);
    for (k, ac) in scenario.aircraft.iter().enumerate() {
        let obs = &snap.aircraft[&ac.id];
        let source = match obs {
            AircraftObs::OnGround { airport, .. } => {
                graph.node_at(scenario.airport_index(airport).unwrap(), 0)
            }
            AircraftObs::EnRoute { destination, arrival_step } => graph.node_at(
                scenario.airport_index(destination).unwrap(),
                arrival_step.saturating_sub(snap.t_now).min(n),
            ),
        };
        // outgoing chosen edge per node
        let mut chosen: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (e, edge) in graph.edges.iter().enumerate() {
            if on(map.x(k, e)) {
                chosen.entry(edge.tail).or_default().push(e);
            }
        }
        let mut path = Vec::new();
        let mut node = source;
        let terminal = graph.terminal_node();
        while node != terminal {
            let next = match chosen.get(&node) {
                Some(list) if list.len() == 1 => list[0],
                _ => return Err(ModelError::NonPath { aircraft: ac.id.clone(), node }),
            };
            path.push(next);
            node = graph.edges[next].head;
            if path.len() > graph.num_edges() {
                return Err(ModelError::NonPath { aircraft: ac.id.clone(), node });
            }
        }
        let mut charge = vec![0.0; n];
        for &e in &path {
            if let EdgeKind::Ground { offset, .. } = graph.edges[e].kind {
                charge[offset] = solution.value(map.charge(k, e));
            }
        }
        let energy = (1..=n).map(|s| solution.value(map.energy(k, s))).collect();
        aircraft_plans.push(AircraftPlan {
            aircraft: ac.id.clone(),
            path,
            charge_kw: charge,
            energy_kwh: energy,
        });
    }

    // assignments: exactly one chosen copy per in-horizon flight
    let mut assignments = Vec::new();
    for (f, flight) in graph.flights.iter().enumerate() {
        let mut hits = Vec::new();
        for (k, ac) in scenario.aircraft.iter().enumerate() {
            for &fe in &graph.flight_edges[f] {
                if on(map.x(k, fe)) {
                    hits.push((ac.id.clone(), fe));
                }
            }
        }
        if hits.len() != 1 {
            return Err(ModelError::AssignmentCount {
                flight: flight.id.clone(),
                count: hits.len(),
            });
        }
        let (aircraft, fe) = hits.pop().unwrap();
        let EdgeKind::Flight { departure, delay, .. } = graph.edges[fe].kind else {
            unreachable!()
        };
        if delay > map.options.max_delay_steps {
            return Err(ModelError::PlanInvariant {
                what: "delay bound".into(),
                detail: format!(
                    "flight {} delayed {delay} steps, limit {}",
                    flight.id, map.options.max_delay_steps
                ),
            });
        }
        assignments.push(FlightAssignment {
            flight: flight.id.clone(),
            aircraft,
            departure_step: departure,
            delay_steps: delay,
        });
    }

    let mut airport_plans = Vec::with_capacity(map.n_airports);
    for (h, ap) in scenario.airports.iter().enumerate() {
        let bess_power: Vec<f64> = (0..n).map(|n0| solution.value(map.bess_power(h, n0))).collect();
        let grid: Vec<f64> = (0..n).map(|n0| solution.value(map.grid_power(h, n0))).collect();
        let apron: Vec<f64> = (0..n)
            .map(|n0| {
                (0..map.n_aircraft)
                    .map(|k| solution.value(map.charge(k, graph.ground_edge(h, n0))))
                    .sum()
            })
            .collect();
        let bess_energy: Vec<f64> =
            (1..=n).map(|s| solution.value(map.bess_energy(h, s))).collect();
        airport_plans.push(AirportPlan {
            airport: ap.id.clone(),
            grid_slack_kw: Vec::new(),
            bess_power_kw: bess_power,
            grid_power_kw: grid,
            apron_power_kw: apron,
            bess_energy_kwh: bess_energy,
        });
    }

    let reserve_slack_kwh = map.reserve_slacks.iter().map(|s| solution.value(*s)).sum();

    Ok(FleetPlan {
        t_anchor: graph.t_anchor,
        horizon_steps: n,
        aircraft: aircraft_plans,
        airports: airport_plans,
        assignments,
        objective: solution.objective,
        reserve_slack_kwh,
    })
}

/// Fills in the grid-balance slack report of a decoded plan against a given
/// forecast (plan values minus the implied minimum grid draw).
pub fn annotate_grid_slack(plan: &mut FleetPlan, forecast: &BTreeMap<AirportId, Vec<f64>>) {
    for ap in &mut plan.airports {
        let fc = &forecast[&ap.airport];
        ap.grid_slack_kw = (0..plan.horizon_steps)
            .map(|n0| {
                let implied =
                    (ap.apron_power_kw[n0] - fc[n0] - ap.bess_power_kw[n0]).max(0.0);
                ap.grid_power_kw[n0] - implied
            })
            .collect();
    }
}
