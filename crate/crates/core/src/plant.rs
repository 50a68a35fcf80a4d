//! Ground-truth network simulator: advances aircraft, BESS and solar one
//! step at a time under committed controls, injects scripted disturbances,
//! and emits measurement snapshots.
//!
//! The plant stays physical no matter what was planned: charging saturates
//! at the battery ceiling (with the shortfall logged), grid power balances
//! whatever the commitment left open, and any true bound breach is a
//! simulation fault with a state dump, never a silent clip.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AircraftObs, MeasurementSnapshot};
use crate::scenario::{AircraftId, AirportId, FlightId, Scenario};

/// Bound-check slack for accumulated floating-point drift [kWh].
const ENERGY_TOL: f64 = 1e-6;

/// One scripted disturbance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Disturbance {
    /// The flight takes `extra_steps` longer than estimated.
    FlightDelay { flight: FlightId, extra_steps: usize },
    /// The flight consumes `delta_kwh` more (or less, if negative) energy
    /// than estimated.
    FlightEnergyDeviation { flight: FlightId, delta_kwh: f64 },
    /// Realized solar at `airport` is scaled by `factor` during steps
    /// `from_step..to_step`.
    SolarScale { airport: AirportId, from_step: usize, to_step: usize, factor: f64 },
}

/// A reproducible disturbance script.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DisturbanceScript {
    pub events: Vec<Disturbance>,
}

impl DisturbanceScript {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn load(path: &Path) -> Result<Self, PlantError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PlantError::Io(path.display().to_string(), e.to_string()))?;
        serde_json::from_str(&text)
            .map_err(|e| PlantError::Io(path.display().to_string(), e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<(), PlantError> {
        let text = serde_json::to_string_pretty(self).expect("script serializes");
        std::fs::write(path, text)
            .map_err(|e| PlantError::Io(path.display().to_string(), e.to_string()))
    }

    /// Referential-integrity check against a scenario.
    pub fn validate(&self, scenario: &Scenario) -> Vec<String> {
        let mut out = Vec::new();
        for ev in &self.events {
            match ev {
                Disturbance::FlightDelay { flight, .. }
                | Disturbance::FlightEnergyDeviation { flight, .. } => {
                    if scenario.flight(flight).is_none() {
                        out.push(format!("unknown flight id {flight:?}"));
                    }
                }
                Disturbance::SolarScale { airport, factor, .. } => {
                    if scenario.airport(airport).is_none() {
                        out.push(format!("unknown airport id {airport:?}"));
                    }
                    if *factor < 0.0 {
                        out.push(format!("negative solar factor {factor}"));
                    }
                }
            }
        }
        out
    }

    fn extra_flight_steps(&self, flight: &str) -> usize {
        self.events
            .iter()
            .map(|e| match e {
                Disturbance::FlightDelay { flight: f, extra_steps } if f == flight => *extra_steps,
                _ => 0,
            })
            .sum()
    }

    fn extra_flight_energy(&self, flight: &str) -> f64 {
        self.events
            .iter()
            .map(|e| match e {
                Disturbance::FlightEnergyDeviation { flight: f, delta_kwh } if f == flight => {
                    *delta_kwh
                }
                _ => 0.0,
            })
            .sum()
    }

    fn solar_factor(&self, airport: &str, step: usize) -> f64 {
        self.events
            .iter()
            .map(|e| match e {
                Disturbance::SolarScale { airport: a, from_step, to_step, factor }
                    if a == airport && (*from_step..*to_step).contains(&step) =>
                {
                    *factor
                }
                _ => 1.0,
            })
            .product()
    }
}

/// Physical status of one aircraft.
#[derive(Debug, Clone, PartialEq)]
pub enum AircraftState {
    OnGround { airport: AirportId },
    EnRoute { flight: FlightId, destination: AirportId, arrival_step: usize },
}

/// Ground truth at one time point.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantState {
    pub step: usize,
    /// In scenario fleet order.
    pub aircraft: Vec<AircraftState>,
    /// True battery energies [kWh], fleet order.
    pub aircraft_energy: Vec<f64>,
    /// True BESS energies [kWh], airport order.
    pub bess_energy: Vec<f64>,
}

/// First-step controls the controller commits to the plant.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CommittedControls {
    pub step: usize,
    /// Flights that depart at this step, with their assigned aircraft.
    pub departures: Vec<(FlightId, AircraftId)>,
    /// Charging power per aircraft during this step [kW].
    pub charge_kw: BTreeMap<AircraftId, f64>,
    /// BESS power per airport during this step (positive discharges) [kW].
    pub bess_power_kw: BTreeMap<AirportId, f64>,
}

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("control contract violation: {0}")]
    ContractViolation(String),
    #[error("simulation fault: {message}\nstate dump:\n{dump}")]
    Fault { message: String, dump: String },
    #[error("{0}: {1}")]
    Io(String, String),
}

/// Per-aircraft log row (state after the step completed).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AircraftRow {
    pub step: usize,
    pub aircraft: AircraftId,
    /// "ground" or "enroute".
    pub status: String,
    /// Airport when grounded, destination when flying.
    pub location: AirportId,
    pub energy_kwh: f64,
    pub charge_kw: f64,
    /// Commanded minus delivered charging power [kW].
    pub charge_shortfall_kw: f64,
}

/// Per-airport log row for one step interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AirportRow {
    pub step: usize,
    pub airport: AirportId,
    pub solar_kw: f64,
    pub apron_kw: f64,
    pub bess_kw: f64,
    pub grid_kw: f64,
    pub curtailed_kw: f64,
    /// BESS energy after the step [kWh].
    pub bess_energy_kwh: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepartureRow {
    pub step: usize,
    pub flight: FlightId,
    pub aircraft: AircraftId,
    pub sched_departure: usize,
    pub delay_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArrivalRow {
    pub step: usize,
    pub flight: FlightId,
    pub aircraft: AircraftId,
    pub realized_energy_kwh: f64,
}

/// Full closed-loop trajectory record.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TrajectoryLog {
    pub aircraft_rows: Vec<AircraftRow>,
    pub airport_rows: Vec<AirportRow>,
    pub departures: Vec<DepartureRow>,
    pub arrivals: Vec<ArrivalRow>,
}

impl TrajectoryLog {
    /// Wide CSV: one row per (step, entity) with the column union.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "step,entity,kind,status,location,energy_kwh,charge_kw,shortfall_kw,solar_kw,apron_kw,bess_kw,grid_kw,curtailed_kw\n",
        );
        for r in &self.aircraft_rows {
            let _ = writeln!(
                out,
                "{},{},aircraft,{},{},{:.6},{:.6},{:.6},,,,,",
                r.step, r.aircraft, r.status, r.location, r.energy_kwh, r.charge_kw,
                r.charge_shortfall_kw
            );
        }
        for r in &self.airport_rows {
            let _ = writeln!(
                out,
                "{},{},airport,,,{:.6},,,{:.6},{:.6},{:.6},{:.6},{:.6}",
                r.step, r.airport, r.bess_energy_kwh, r.solar_kw, r.apron_kw, r.bess_kw,
                r.grid_kw, r.curtailed_kw
            );
        }
        out
    }

    /// Tidy (entity, step, variable, value) CSV for external plotting.
    pub fn to_tidy_csv(&self) -> String {
        let mut out = String::from("entity,step,variable,value\n");
        for r in &self.aircraft_rows {
            let _ = writeln!(out, "{},{},energy_kwh,{:.6}", r.aircraft, r.step, r.energy_kwh);
            let _ = writeln!(out, "{},{},charge_kw,{:.6}", r.aircraft, r.step, r.charge_kw);
        }
        for r in &self.airport_rows {
            for (name, v) in [
                ("solar_kw", r.solar_kw),
                ("apron_kw", r.apron_kw),
                ("bess_kw", r.bess_kw),
                ("grid_kw", r.grid_kw),
                ("curtailed_kw", r.curtailed_kw),
                ("bess_energy_kwh", r.bess_energy_kwh),
            ] {
                let _ = writeln!(out, "{},{},{name},{v:.6}", r.airport, r.step);
            }
        }
        out
    }

    /// Total grid energy drawn per airport [kWh].
    pub fn grid_kwh_per_airport(&self, dt_hours: f64) -> BTreeMap<AirportId, f64> {
        let mut out = BTreeMap::new();
        for r in &self.airport_rows {
            *out.entry(r.airport.clone()).or_insert(0.0) += r.grid_kw * dt_hours;
        }
        out
    }

    pub fn total_delay_steps(&self) -> usize {
        self.departures.iter().map(|d| d.delay_steps).sum()
    }
}

/// The stepped ground-truth state machine.
pub struct Plant<'a> {
    scenario: &'a Scenario,
    script: DisturbanceScript,
    state: PlantState,
}

impl<'a> Plant<'a> {
    pub fn new(scenario: &'a Scenario, script: DisturbanceScript) -> Self {
        let state = PlantState {
            step: 0,
            aircraft: scenario
                .aircraft
                .iter()
                .map(|k| AircraftState::OnGround { airport: k.initial_airport.clone() })
                .collect(),
            aircraft_energy: scenario.aircraft.iter().map(|k| k.initial_energy).collect(),
            bess_energy: scenario.airports.iter().map(|a| a.bess_initial).collect(),
        };
        Self { scenario, script, state }
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    pub fn current_step(&self) -> usize {
        self.state.step
    }

    /// Realized solar power at `airport` during step `t` [kW].
    pub fn realized_solar(&self, airport: &str, t: usize) -> f64 {
        self.scenario.weather[airport].at(t) * self.script.solar_factor(airport, t)
    }

    /// Measurement exposed to the controller at the current step: battery
    /// energy only for grounded aircraft, destination and arrival estimate
    /// for flying ones.
    pub fn snapshot(&self) -> MeasurementSnapshot {
        let t = self.state.step;
        let aircraft = self
            .scenario
            .aircraft
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let obs = match &self.state.aircraft[i] {
                    AircraftState::OnGround { airport } => AircraftObs::OnGround {
                        airport: airport.clone(),
                        energy_kwh: self.state.aircraft_energy[i],
                    },
                    AircraftState::EnRoute { destination, arrival_step, .. } => {
                        AircraftObs::EnRoute {
                            destination: destination.clone(),
                            arrival_step: *arrival_step,
                        }
                    }
                };
                (spec.id.clone(), obs)
            })
            .collect();
        MeasurementSnapshot {
            t_now: t,
            aircraft,
            bess_energy: self
                .scenario
                .airports
                .iter()
                .enumerate()
                .map(|(h, a)| (a.id.clone(), self.state.bess_energy[h]))
                .collect(),
            solar_now: self
                .scenario
                .airports
                .iter()
                .map(|a| (a.id.clone(), self.realized_solar(&a.id, t)))
                .collect(),
        }
    }

    fn dump(&self) -> String {
        format!("{:#?}", self.state)
    }

    fn fleet_index(&self, id: &str) -> Result<usize, PlantError> {
        self.scenario
            .aircraft
            .iter()
            .position(|k| k.id == id)
            .ok_or_else(|| PlantError::ContractViolation(format!("unknown aircraft {id:?}")))
    }

    /// Advances the world from the current step to the next one under
    /// `controls`, appending to `log`.
    pub fn step(
        &mut self,
        controls: &CommittedControls,
        log: &mut TrajectoryLog,
    ) -> Result<MeasurementSnapshot, PlantError> {
        let t = self.state.step;
        if controls.step != t {
            return Err(PlantError::ContractViolation(format!(
                "controls for step {} applied at step {t}",
                controls.step
            )));
        }
        let dt_h = self.scenario.params.dt_hours();

        // departures first: a departing aircraft occupies its flight edge
        // over [t, t+1] and cannot also charge
        for (flight_id, aircraft_id) in &controls.departures {
            let flight = self.scenario.flight(flight_id).ok_or_else(|| {
                PlantError::ContractViolation(format!("unknown flight {flight_id:?}"))
            })?;
            let k = self.fleet_index(aircraft_id)?;
            match &self.state.aircraft[k] {
                AircraftState::OnGround { airport } if *airport == flight.origin => {}
                other => {
                    return Err(PlantError::ContractViolation(format!(
                        "flight {flight_id} departs {} but aircraft {aircraft_id} is {other:?}",
                        flight.origin
                    )))
                }
            }
            if controls.charge_kw.get(aircraft_id).copied().unwrap_or(0.0) != 0.0 {
                return Err(PlantError::ContractViolation(format!(
                    "aircraft {aircraft_id} commanded to charge while departing {flight_id}"
                )));
            }
            let duration = flight.est_flight_time + self.script.extra_flight_steps(flight_id);
            self.state.aircraft[k] = AircraftState::EnRoute {
                flight: flight_id.clone(),
                destination: flight.destination.clone(),
                arrival_step: t + duration,
            };
            log.departures.push(DepartureRow {
                step: t,
                flight: flight_id.clone(),
                aircraft: aircraft_id.clone(),
                sched_departure: flight.sched_departure,
                delay_steps: t.saturating_sub(flight.sched_departure),
            });
        }

        // charging, saturated at the battery ceiling
        let mut delivered_kw = vec![0.0; self.scenario.aircraft.len()];
        let mut shortfall_kw = vec![0.0; self.scenario.aircraft.len()];
        for (aircraft_id, &kw) in &controls.charge_kw {
            if kw == 0.0 {
                continue;
            }
            let k = self.fleet_index(aircraft_id)?;
            if kw < 0.0 {
                return Err(PlantError::ContractViolation(format!(
                    "negative charge power {kw} for {aircraft_id}"
                )));
            }
            match &self.state.aircraft[k] {
                AircraftState::OnGround { .. } => {}
                _ => {
                    return Err(PlantError::ContractViolation(format!(
                        "charge commanded for airborne aircraft {aircraft_id}"
                    )))
                }
            }
            let spec = &self.scenario.aircraft[k];
            let headroom = (spec.batt_max - self.state.aircraft_energy[k]).max(0.0);
            let actual = kw.min(headroom / dt_h);
            delivered_kw[k] = actual;
            shortfall_kw[k] = kw - actual;
            self.state.aircraft_energy[k] += actual * dt_h;
        }

        // airport energy balance over [t, t+1]
        for (h, airport) in self.scenario.airports.iter().enumerate() {
            let solar = self.realized_solar(&airport.id, t);
            let apron: f64 = self
                .scenario
                .aircraft
                .iter()
                .enumerate()
                .filter(|(k, _)| {
                    matches!(&self.state.aircraft[*k], AircraftState::OnGround { airport: a } if *a == airport.id)
                })
                .map(|(k, _)| delivered_kw[k])
                .sum();
            let bess_kw = controls.bess_power_kw.get(&airport.id).copied().unwrap_or(0.0);
            if bess_kw.abs() > airport.bess_power_max + 1e-9 {
                return Err(PlantError::ContractViolation(format!(
                    "BESS power {bess_kw} beyond limit {} at {}",
                    airport.bess_power_max, airport.id
                )));
            }
            let grid_kw = (apron - solar - bess_kw).max(0.0);
            let curtailed_kw = (solar + bess_kw + grid_kw - apron).max(0.0);
            self.state.bess_energy[h] -= bess_kw * dt_h;
            let (lo, hi) = (airport.bess_capacity_min, airport.bess_capacity_max);
            let e = self.state.bess_energy[h];
            if e < lo - ENERGY_TOL || e > hi + ENERGY_TOL {
                return Err(PlantError::Fault {
                    message: format!(
                        "BESS energy {e} kWh outside [{lo}, {hi}] at {} after step {t}",
                        airport.id
                    ),
                    dump: self.dump(),
                });
            }
            self.state.bess_energy[h] = e.clamp(lo, hi);
            log.airport_rows.push(AirportRow {
                step: t,
                airport: airport.id.clone(),
                solar_kw: solar,
                apron_kw: apron,
                bess_kw,
                grid_kw,
                curtailed_kw,
                bess_energy_kwh: self.state.bess_energy[h],
            });
        }

        // clock advances; arrivals land and reveal realized energy
        let t_next = t + 1;
        self.state.step = t_next;
        for k in 0..self.scenario.aircraft.len() {
            let AircraftState::EnRoute { flight, destination, arrival_step } =
                self.state.aircraft[k].clone()
            else {
                continue;
            };
            if arrival_step != t_next {
                continue;
            }
            let spec = self.scenario.flight(&flight).expect("flight exists");
            let realized = spec.est_energy + self.script.extra_flight_energy(&flight);
            self.state.aircraft_energy[k] -= realized;
            let ac = &self.scenario.aircraft[k];
            let e = self.state.aircraft_energy[k];
            if e < ac.batt_min - ENERGY_TOL || e > ac.batt_max + ENERGY_TOL {
                return Err(PlantError::Fault {
                    message: format!(
                        "aircraft {} lands with {e} kWh outside [{}, {}] after flight {flight}",
                        ac.id, ac.batt_min, ac.batt_max
                    ),
                    dump: self.dump(),
                });
            }
            log.arrivals.push(ArrivalRow {
                step: t_next,
                flight,
                aircraft: ac.id.clone(),
                realized_energy_kwh: realized,
            });
            self.state.aircraft[k] = AircraftState::OnGround { airport: destination };
        }

        // per-aircraft rows reflect the post-step state
        for (k, spec) in self.scenario.aircraft.iter().enumerate() {
            let (status, location) = match &self.state.aircraft[k] {
                AircraftState::OnGround { airport } => ("ground", airport.clone()),
                AircraftState::EnRoute { destination, .. } => ("enroute", destination.clone()),
            };
            log.aircraft_rows.push(AircraftRow {
                step: t,
                aircraft: spec.id.clone(),
                status: status.into(),
                location,
                energy_kwh: self.state.aircraft_energy[k],
                charge_kw: delivered_kw[k],
                charge_shortfall_kw: shortfall_kw[k],
            });
        }

        Ok(self.snapshot())
    }
}
