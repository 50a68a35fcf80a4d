//! Scenario data: airports, fleet, flight schedule, weather series and
//! controller parameters, loaded from a bundle directory
//! (`scenario.json` + one `weather_<airport>.csv` per airport).
//!
//! All times are integer step indices relative to day start at the plant
//! resolution `dt_minutes`. See `docs/scenario-format.md`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Symbolic airport identifier.
pub type AirportId = String;
/// Symbolic aircraft tail number.
pub type AircraftId = String;
/// Symbolic flight identifier.
pub type FlightId = String;

/// An airport with BESS, solar and grid connection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirportSpec {
    pub id: AirportId,
    /// Lower BESS energy limit [kWh].
    pub bess_capacity_min: f64,
    /// Upper BESS energy limit [kWh].
    pub bess_capacity_max: f64,
    /// BESS energy at day start [kWh].
    pub bess_initial: f64,
    /// Symmetric BESS charge/discharge power limit [kW].
    pub bess_power_max: f64,
    /// Installed solar peak power [kW].
    pub pv_peak: f64,
    /// Penalty per kW of grid power per step (entry of the grid-cost vector).
    pub grid_weight: f64,
}

/// An electric aircraft and its battery / performance parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AircraftSpec {
    pub id: AircraftId,
    /// Lower battery energy bound [kWh].
    pub batt_min: f64,
    /// Upper battery energy bound [kWh].
    pub batt_max: f64,
    /// Energy reserve required after a flight [kWh].
    pub reserve: f64,
    /// Minimum charging power on an active charging edge [kW].
    pub charge_min: f64,
    /// Maximum charging power [kW].
    pub charge_max: f64,
    /// Lower bound of the terminal battery set [kWh].
    pub terminal_min: f64,
    /// Aircraft mass [kg].
    pub mass: f64,
    /// Wing area [m^2].
    pub wing_area: f64,
    /// Minimum drag coefficient of the drag polar.
    pub cd_min: f64,
    /// Induced-drag factor of the drag polar.
    pub induced_k: f64,
    /// Constant powertrain efficiency in (0, 1].
    pub powertrain_eff: f64,
    /// Airport the aircraft starts the day at.
    pub initial_airport: AirportId,
    /// Battery energy at day start [kWh].
    pub initial_energy: f64,
}

/// A scheduled flight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightSpec {
    pub id: FlightId,
    /// Scheduled departure step index.
    pub sched_departure: usize,
    /// Estimated flight time in whole steps (>= 1).
    pub est_flight_time: usize,
    pub origin: AirportId,
    pub destination: AirportId,
    /// Estimated energy expenditure [kWh].
    pub est_energy: f64,
}

/// Realized solar power per airport at the plant resolution.
///
/// `history` holds observations from the days before the simulated day
/// (oldest first) and is used to warm forecaster state; `day` starts at
/// step 0 and must cover the simulated day plus one horizon.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct WeatherSeries {
    pub history: Vec<f64>,
    pub day: Vec<f64>,
}

impl WeatherSeries {
    /// Solar power [kW] during step `t` of the simulated day.
    pub fn at(&self, t: usize) -> f64 {
        self.day[t]
    }
}

/// Holt-Winters smoothing parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Season length in steps (one day at plant resolution).
    pub season_steps: usize,
}

impl Default for ForecastParams {
    fn default() -> Self {
        Self { alpha: 0.3, beta: 0.05, gamma: 0.4, season_steps: 288 }
    }
}

/// Controller and problem parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    /// Step length [min].
    pub dt_minutes: f64,
    /// Horizon length N in steps.
    pub horizon_steps: usize,
    /// Maximum allowed departure delay in steps.
    pub max_delay_steps: usize,
    /// Weight on squared departure delay.
    pub delay_weight: f64,
    /// Weight on final BESS energies.
    pub terminal_weight: f64,
    /// Big-M constant for the charge-gating constraints.
    pub big_m: f64,
    pub forecast: ForecastParams,
}

impl ControllerParams {
    /// Step length in hours, for power-to-energy conversions.
    pub fn dt_hours(&self) -> f64 {
        self.dt_minutes / 60.0
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub params: ControllerParams,
    pub airports: Vec<AirportSpec>,
    pub aircraft: Vec<AircraftSpec>,
    pub flights: Vec<FlightSpec>,
    /// Weather per airport, keyed by airport id.
    pub weather: BTreeMap<AirportId, WeatherSeries>,
}

impl Scenario {
    pub fn airport(&self, id: &str) -> Option<&AirportSpec> {
        self.airports.iter().find(|a| a.id == id)
    }

    pub fn aircraft_spec(&self, id: &str) -> Option<&AircraftSpec> {
        self.aircraft.iter().find(|a| a.id == id)
    }

    pub fn flight(&self, id: &str) -> Option<&FlightSpec> {
        self.flights.iter().find(|f| f.id == id)
    }

    pub fn airport_index(&self, id: &str) -> Option<usize> {
        self.airports.iter().position(|a| a.id == id)
    }

    /// Number of day steps covered by every weather series.
    pub fn weather_day_steps(&self) -> usize {
        self.weather.values().map(|w| w.day.len()).min().unwrap_or(0)
    }

    /// Longest simulation (in steps) the weather coverage admits.
    pub fn max_simulation_steps(&self) -> usize {
        self.weather_day_steps().saturating_sub(self.params.horizon_steps)
    }
}

/// One violated invariant, naming the offending entity and field.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub entity: String,
    pub field: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]: {}", self.entity, self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid scenario:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

/// Raw manifest as stored in `scenario.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    name: String,
    #[serde(flatten)]
    params: ControllerParams,
    /// Anchor for ISO-8601 weather timestamps; optional when weather files
    /// use integer step indices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    day_start: Option<NaiveDateTime>,
    airports: Vec<AirportSpec>,
    aircraft: Vec<AircraftSpec>,
    flights: Vec<FlightSpec>,
}

/// Loads and validates a scenario bundle directory.
///
/// The bundle holds `scenario.json` plus one `weather_<airport>.csv` per
/// airport. Returns a parse error with file/line context or a validation
/// error naming every violated invariant.
pub fn load_scenario(dir: &Path) -> Result<Scenario, ScenarioError> {
    let manifest_path = dir.join("scenario.json");
    let text = fs::read_to_string(&manifest_path)
        .map_err(|e| ScenarioError::Io { path: manifest_path.clone(), source: e })?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| ScenarioError::Parse { path: manifest_path, message: e.to_string() })?;

    let mut weather = BTreeMap::new();
    for airport in &manifest.airports {
        let path = dir.join(format!("weather_{}.csv", airport.id));
        let text = fs::read_to_string(&path)
            .map_err(|e| ScenarioError::Io { path: path.clone(), source: e })?;
        let series = parse_weather_csv(&text, manifest.day_start, &manifest.params, &path)?;
        weather.insert(airport.id.clone(), series);
    }

    let scenario = Scenario {
        name: manifest.name,
        params: manifest.params,
        airports: manifest.airports,
        aircraft: manifest.aircraft,
        flights: manifest.flights,
        weather,
    };
    let violations = validate(&scenario);
    if violations.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Invalid(violations))
    }
}

/// Writes a scenario back out as a bundle (canonical integer-step weather).
pub fn write_scenario(scenario: &Scenario, dir: &Path) -> Result<(), ScenarioError> {
    fs::create_dir_all(dir).map_err(|e| ScenarioError::Io { path: dir.to_path_buf(), source: e })?;
    let manifest = Manifest {
        name: scenario.name.clone(),
        params: scenario.params.clone(),
        day_start: None,
        airports: scenario.airports.clone(),
        aircraft: scenario.aircraft.clone(),
        flights: scenario.flights.clone(),
    };
    let path = dir.join("scenario.json");
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| ScenarioError::Parse { path: path.clone(), message: e.to_string() })?;
    fs::write(&path, text).map_err(|e| ScenarioError::Io { path, source: e })?;

    for (id, series) in &scenario.weather {
        let path = dir.join(format!("weather_{id}.csv"));
        let mut out = String::from("timestamp,solar_kw\n");
        let hist = series.history.len() as i64;
        for (i, v) in series.history.iter().enumerate() {
            out.push_str(&format!("{},{v}\n", i as i64 - hist));
        }
        for (t, v) in series.day.iter().enumerate() {
            out.push_str(&format!("{t},{v}\n"));
        }
        fs::write(&path, out).map_err(|e| ScenarioError::Io { path, source: e })?;
    }
    Ok(())
}

/// Parses a weather CSV with header `timestamp,solar_kw`.
///
/// The timestamp column accepts either integer step indices (negative =
/// history before day start) or ISO-8601 timestamps resolved against the
/// manifest's `day_start`.
fn parse_weather_csv(
    text: &str,
    day_start: Option<NaiveDateTime>,
    params: &ControllerParams,
    path: &Path,
) -> Result<WeatherSeries, ScenarioError> {
    let parse_err = |line: usize, message: String| ScenarioError::Parse {
        path: path.to_path_buf(),
        message: format!("line {}: {message}", line + 1),
    };

    let mut rows: Vec<(i64, f64)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if i == 0 {
            // header row required
            let lower = line.to_ascii_lowercase();
            if !lower.contains("timestamp") && !lower.contains("step") {
                return Err(parse_err(i, format!("expected header row, got {line:?}")));
            }
            continue;
        }
        let mut parts = line.splitn(2, ',');
        let ts = parts.next().unwrap_or("").trim();
        let val = parts
            .next()
            .ok_or_else(|| parse_err(i, "missing solar_kw column".into()))?
            .trim();
        let step = if let Ok(step) = ts.parse::<i64>() {
            step
        } else {
            let stamp = NaiveDateTime::parse_from_str(ts, "%Y-%m-%dT%H:%M:%S")
                .or_else(|_| NaiveDateTime::parse_from_str(ts, "%Y-%m-%d %H:%M:%S"))
                .map_err(|e| parse_err(i, format!("bad timestamp {ts:?}: {e}")))?;
            let start = day_start.ok_or_else(|| {
                parse_err(i, "ISO-8601 timestamps require day_start in scenario.json".into())
            })?;
            let minutes = (stamp - start).num_minutes() as f64;
            let steps = minutes / params.dt_minutes;
            if steps.fract() != 0.0 {
                return Err(parse_err(i, format!("timestamp {ts:?} is not on the step grid")));
            }
            steps as i64
        };
        let value: f64 =
            val.parse().map_err(|e| parse_err(i, format!("bad solar_kw {val:?}: {e}")))?;
        rows.push((step, value));
    }

    rows.sort_by_key(|(s, _)| *s);
    for pair in rows.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(ScenarioError::Parse {
                path: path.to_path_buf(),
                message: format!("duplicate step {}", pair[0].0),
            });
        }
        if pair[1].0 != pair[0].0 + 1 {
            return Err(ScenarioError::Parse {
                path: path.to_path_buf(),
                message: format!("gap between steps {} and {}", pair[0].0, pair[1].0),
            });
        }
    }

    let history = rows.iter().filter(|(s, _)| *s < 0).map(|(_, v)| *v).collect();
    let day = rows.iter().filter(|(s, _)| *s >= 0).map(|(_, v)| *v).collect();
    Ok(WeatherSeries { history, day })
}

/// Checks every type invariant; returns one entry per violation.
///
/// Violations are data, not failures: a structurally parsed scenario always
/// yields a (possibly empty) list.
pub fn validate(s: &Scenario) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |entity: &str, field: &str, message: String| {
        out.push(Violation { entity: entity.into(), field: field.into(), message });
    };

    // controller parameters
    let p = &s.params;
    if p.dt_minutes <= 0.0 {
        push("params", "dt_minutes", format!("must be > 0, got {}", p.dt_minutes));
    }
    if p.horizon_steps < 1 {
        push("params", "horizon_steps", "must be >= 1".into());
    }
    if p.delay_weight < 0.0 {
        push("params", "delay_weight", format!("must be >= 0, got {}", p.delay_weight));
    }
    if p.terminal_weight < 0.0 {
        push("params", "terminal_weight", format!("must be >= 0, got {}", p.terminal_weight));
    }
    for k in &s.aircraft {
        if p.big_m < k.charge_max {
            push(
                "params",
                "big_m",
                format!("must be >= charge_max of every aircraft; {} < {} ({})", p.big_m, k.charge_max, k.id),
            );
        }
    }
    let f = &p.forecast;
    if f.season_steps < 2 {
        push("params", "forecast.season_steps", "must be >= 2".into());
    }
    for (name, v) in [("alpha", f.alpha), ("beta", f.beta), ("gamma", f.gamma)] {
        if !(0.0..=1.0).contains(&v) {
            push("params", &format!("forecast.{name}"), format!("must be in [0, 1], got {v}"));
        }
    }

    // airports
    if s.airports.is_empty() {
        push("scenario", "airports", "at least one airport required".into());
    }
    for a in &s.airports {
        if !(a.bess_capacity_min <= a.bess_initial && a.bess_initial <= a.bess_capacity_max) {
            push(
                &a.id,
                "bess_initial",
                format!(
                    "requires bess_capacity_min <= bess_initial <= bess_capacity_max, got {} <= {} <= {}",
                    a.bess_capacity_min, a.bess_initial, a.bess_capacity_max
                ),
            );
        }
        if a.pv_peak < 0.0 {
            push(&a.id, "pv_peak", format!("must be >= 0, got {}", a.pv_peak));
        }
        if a.bess_power_max < 0.0 {
            push(&a.id, "bess_power_max", format!("must be >= 0, got {}", a.bess_power_max));
        }
        if a.grid_weight < 0.0 {
            push(&a.id, "grid_weight", format!("must be >= 0, got {}", a.grid_weight));
        }
    }
    {
        let mut seen = BTreeMap::new();
        for a in &s.airports {
            if seen.insert(&a.id, ()).is_some() {
                push(&a.id, "id", "duplicate airport id".into());
            }
        }
    }

    // aircraft
    for k in &s.aircraft {
        if !(k.batt_min <= k.terminal_min && k.terminal_min <= k.batt_max) {
            push(
                &k.id,
                "terminal_min",
                format!(
                    "requires batt_min <= terminal_min <= batt_max, got {} <= {} <= {}",
                    k.batt_min, k.terminal_min, k.batt_max
                ),
            );
        }
        if k.batt_min + k.reserve > k.batt_max {
            push(
                &k.id,
                "reserve",
                format!("requires batt_min + reserve <= batt_max, got {} + {} > {}", k.batt_min, k.reserve, k.batt_max),
            );
        }
        if !(0.0 <= k.charge_min && k.charge_min <= k.charge_max) {
            push(
                &k.id,
                "charge_min",
                format!("requires 0 <= charge_min <= charge_max, got {} / {}", k.charge_min, k.charge_max),
            );
        }
        if !(k.powertrain_eff > 0.0 && k.powertrain_eff <= 1.0) {
            push(&k.id, "powertrain_eff", format!("must be in (0, 1], got {}", k.powertrain_eff));
        }
        if s.airport(&k.initial_airport).is_none() {
            push(&k.id, "initial_airport", format!("unknown airport id {:?}", k.initial_airport));
        }
        if !(k.batt_min <= k.initial_energy && k.initial_energy <= k.batt_max) {
            push(
                &k.id,
                "initial_energy",
                format!("must be within [{}, {}], got {}", k.batt_min, k.batt_max, k.initial_energy),
            );
        }
        if k.mass <= 0.0 {
            push(&k.id, "mass", format!("must be > 0, got {}", k.mass));
        }
        if k.wing_area <= 0.0 {
            push(&k.id, "wing_area", format!("must be > 0, got {}", k.wing_area));
        }
    }
    {
        let mut seen = BTreeMap::new();
        for k in &s.aircraft {
            if seen.insert(&k.id, ()).is_some() {
                push(&k.id, "id", "duplicate aircraft id".into());
            }
        }
    }

    // flights
    for fl in &s.flights {
        if fl.origin == fl.destination {
            push(&fl.id, "destination", format!("origin == destination ({})", fl.origin));
        }
        if fl.est_flight_time < 1 {
            push(&fl.id, "est_flight_time", "must be >= 1".into());
        }
        if fl.est_energy <= 0.0 {
            push(&fl.id, "est_energy", format!("must be > 0, got {}", fl.est_energy));
        }
        for (field, id) in [("origin", &fl.origin), ("destination", &fl.destination)] {
            if s.airport(id).is_none() {
                push(&fl.id, field, format!("unknown airport id {id:?}"));
            }
        }
    }
    {
        let mut seen = BTreeMap::new();
        for fl in &s.flights {
            if seen.insert(&fl.id, ()).is_some() {
                push(&fl.id, "id", "duplicate flight id".into());
            }
        }
    }

    // weather
    for a in &s.airports {
        match s.weather.get(&a.id) {
            None => push(&a.id, "weather", "missing weather series".into()),
            Some(w) => {
                if w.day.iter().chain(w.history.iter()).any(|v| *v < 0.0) {
                    push(&a.id, "weather", "solar power must be >= 0 everywhere".into());
                }
                if w.day.len() < p.horizon_steps + 1 {
                    push(
                        &a.id,
                        "weather",
                        format!(
                            "day series must cover at least simulation + horizon; got {} steps for horizon {}",
                            w.day.len(),
                            p.horizon_steps
                        ),
                    );
                }
            }
        }
    }

    out
}

/// Shared fixture for unit tests across the crate.
#[cfg(test)]
pub mod tests_support {
    use super::*;

    pub fn tiny_scenario() -> Scenario {
        let params = ControllerParams {
            dt_minutes: 5.0,
            horizon_steps: 4,
            max_delay_steps: 1,
            delay_weight: 10.0,
            terminal_weight: 0.01,
            big_m: 500.0,
            forecast: ForecastParams { season_steps: 12, ..Default::default() },
        };
        let airports = vec![
            AirportSpec {
                id: "ALFA".into(),
                bess_capacity_min: 50.0,
                bess_capacity_max: 500.0,
                bess_initial: 200.0,
                bess_power_max: 300.0,
                pv_peak: 400.0,
                grid_weight: 1.0,
            },
            AirportSpec {
                id: "BRVO".into(),
                bess_capacity_min: 50.0,
                bess_capacity_max: 400.0,
                bess_initial: 150.0,
                bess_power_max: 250.0,
                pv_peak: 300.0,
                grid_weight: 1.0,
            },
        ];
        let aircraft = vec![AircraftSpec {
            id: "EA1".into(),
            batt_min: 80.0,
            batt_max: 800.0,
            reserve: 100.0,
            charge_min: 0.0,
            charge_max: 400.0,
            terminal_min: 200.0,
            mass: 6500.0,
            wing_area: 30.0,
            cd_min: 0.025,
            induced_k: 0.045,
            powertrain_eff: 0.9,
            initial_airport: "ALFA".into(),
            initial_energy: 600.0,
        }];
        let flights = vec![FlightSpec {
            id: "F01".into(),
            sched_departure: 1,
            est_flight_time: 2,
            origin: "ALFA".into(),
            destination: "BRVO".into(),
            est_energy: 150.0,
        }];
        let mut weather = BTreeMap::new();
        for a in &airports {
            weather.insert(
                a.id.clone(),
                WeatherSeries { history: vec![0.0; 24], day: vec![100.0; 16] },
            );
        }
        Scenario { name: "tiny".into(), params, airports, aircraft, flights, weather }
    }
}

#[cfg(test)]
mod tests {
    use super::tests_support::tiny_scenario;
    use super::*;

    #[test]
    fn consistent_scenario_has_no_violations() {
        assert!(validate(&tiny_scenario()).is_empty());
    }

    #[test]
    fn inverted_battery_bounds_flagged() {
        let mut s = tiny_scenario();
        s.aircraft[0].batt_min = 900.0;
        let v = validate(&s);
        assert!(v.iter().any(|v| v.entity == "EA1"), "{v:?}");
    }

    #[test]
    fn zero_flight_time_flagged() {
        let mut s = tiny_scenario();
        s.flights[0].est_flight_time = 0;
        let v = validate(&s);
        assert_eq!(v.iter().filter(|v| v.entity == "F01").count(), 1, "{v:?}");
        assert_eq!(v[0].field, "est_flight_time");
    }

    #[test]
    fn unknown_airport_named_in_violation() {
        let mut s = tiny_scenario();
        s.flights[0].destination = "XYZ".into();
        let v = validate(&s);
        assert!(v.iter().any(|v| v.message.contains("XYZ")), "{v:?}");
    }

    #[test]
    fn empty_flight_list_is_valid() {
        let mut s = tiny_scenario();
        s.flights.clear();
        assert!(validate(&s).is_empty());
    }

    #[test]
    fn bundle_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = tiny_scenario();
        write_scenario(&s, dir.path()).unwrap();
        let loaded = load_scenario(dir.path()).unwrap();
        assert_eq!(loaded, s);
        // write the loaded scenario again: stable fixed point
        let dir2 = tempfile::tempdir().unwrap();
        write_scenario(&loaded, dir2.path()).unwrap();
        let again = load_scenario(dir2.path()).unwrap();
        assert_eq!(again, loaded);
    }

    #[test]
    fn invalid_bundle_reports_all_violations() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = tiny_scenario();
        s.aircraft[0].initial_airport = "XYZ".into();
        s.flights[0].est_energy = -1.0;
        write_scenario(&s, dir.path()).unwrap();
        match load_scenario(dir.path()) {
            Err(ScenarioError::Invalid(v)) => {
                assert!(v.iter().any(|v| v.message.contains("XYZ")));
                assert!(v.iter().any(|v| v.entity == "F01" && v.field == "est_energy"));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn weather_gap_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let s = tiny_scenario();
        write_scenario(&s, dir.path()).unwrap();
        fs::write(dir.path().join("weather_ALFA.csv"), "timestamp,solar_kw\n0,1.0\n2,1.0\n").unwrap();
        match load_scenario(dir.path()) {
            Err(ScenarioError::Parse { message, .. }) => assert!(message.contains("gap")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn iso_timestamps_accepted() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = tiny_scenario();
        s.weather.get_mut("ALFA").unwrap().history.clear();
        s.weather.get_mut("BRVO").unwrap().history.clear();
        write_scenario(&s, dir.path()).unwrap();
        // rewrite one weather file with ISO stamps and add day_start to the manifest
        let mut manifest: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("scenario.json")).unwrap()).unwrap();
        manifest["day_start"] = serde_json::json!("2024-08-10T00:00:00");
        fs::write(dir.path().join("scenario.json"), serde_json::to_string(&manifest).unwrap()).unwrap();
        let mut csv = String::from("timestamp,solar_kw\n");
        for t in 0..16 {
            let minutes = t * 5;
            csv.push_str(&format!("2024-08-10T{:02}:{:02}:00,100\n", minutes / 60, minutes % 60));
        }
        fs::write(dir.path().join("weather_ALFA.csv"), csv).unwrap();
        let loaded = load_scenario(dir.path()).unwrap();
        assert_eq!(loaded.weather["ALFA"].day, vec![100.0; 16]);
    }
}
