//! Quasi-static flight energy model: lift from the exogenous profile, a
//! quadratic drag polar, thrust from the force balance, and trapezoidal
//! integration of thrust power over the flight, divided by a constant
//! powertrain efficiency.
//!
//! Used offline to author estimated flight energies and by the plant for
//! realized energies; nothing here runs inside the MILP loop.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::scenario::AircraftSpec;

/// Standard gravitational acceleration [m/s^2].
pub const G: f64 = 9.80665;
/// ISA sea-level density [kg/m^3].
pub const RHO_0: f64 = 1.225;
/// ISA sea-level temperature [K].
const T_0: f64 = 288.15;
/// ISA tropospheric lapse rate [K/m].
const LAPSE: f64 = 0.0065;
/// Specific gas constant of air [J/(kg K)].
const R_AIR: f64 = 287.053;

/// ISA troposphere air density at `altitude_m` (valid below 11 km).
pub fn isa_density(altitude_m: f64) -> f64 {
    let t = T_0 - LAPSE * altitude_m;
    RHO_0 * (t / T_0).powf(G / (R_AIR * LAPSE) - 1.0)
}

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("profile needs at least 2 samples, got {0}")]
    TooShort(usize),
    #[error("sample {index}: {message}")]
    BadSample { index: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
}

/// One sampled point of a recorded flight profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileSample {
    /// Time since profile start [s].
    pub t: f64,
    /// Altitude [m].
    pub alt: f64,
    /// True airspeed [m/s].
    pub v: f64,
    /// Vertical speed [m/s].
    pub vz: f64,
}

impl ProfileSample {
    /// Horizontal speed component [m/s].
    pub fn vx(&self) -> f64 {
        (self.v * self.v - self.vz * self.vz).max(0.0).sqrt()
    }

    /// Climb angle [rad].
    pub fn theta(&self) -> f64 {
        if self.v == 0.0 {
            0.0
        } else {
            (self.vz / self.v).clamp(-1.0, 1.0).asin()
        }
    }
}

/// A sampled flight profile between departure and arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightProfile {
    pub samples: Vec<ProfileSample>,
}

impl FlightProfile {
    /// Validates monotone time and speed consistency.
    pub fn new(samples: Vec<ProfileSample>) -> Result<Self, ProfileError> {
        if samples.len() < 2 {
            return Err(ProfileError::TooShort(samples.len()));
        }
        for (i, pair) in samples.windows(2).enumerate() {
            if pair[1].t <= pair[0].t {
                return Err(ProfileError::BadSample {
                    index: i + 1,
                    message: format!("time not increasing: {} then {}", pair[0].t, pair[1].t),
                });
            }
        }
        for (i, s) in samples.iter().enumerate() {
            if s.v < 0.0 || s.v < s.vz.abs() - 1e-9 {
                return Err(ProfileError::BadSample {
                    index: i,
                    message: format!("requires v >= |vz|, got v={} vz={}", s.v, s.vz),
                });
            }
        }
        Ok(Self { samples })
    }

    /// Parses the `t_s,alt_m,v_ms,vz_ms` CSV format (header row required).
    pub fn from_csv(text: &str, origin: &str) -> Result<Self, ProfileError> {
        let mut samples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.chars().any(|c| c.is_ascii_alphabetic())) {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(ProfileError::Parse {
                    path: origin.into(),
                    line: i + 1,
                    message: format!("expected 4 columns t_s,alt_m,v_ms,vz_ms, got {}", fields.len()),
                });
            }
            let mut nums = [0.0; 4];
            for (k, f) in fields.iter().enumerate() {
                nums[k] = f.parse().map_err(|e| ProfileError::Parse {
                    path: origin.into(),
                    line: i + 1,
                    message: format!("bad number {f:?}: {e}"),
                })?;
            }
            samples.push(ProfileSample { t: nums[0], alt: nums[1], v: nums[2], vz: nums[3] });
        }
        Self::new(samples)
    }

    pub fn load(path: &Path) -> Result<Self, ProfileError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv(&text, &path.display().to_string())
    }

    pub fn duration(&self) -> f64 {
        self.samples.last().unwrap().t - self.samples[0].t
    }

    /// Central finite differences of `f` over the sample times (one-sided
    /// at the endpoints).
    fn derivative(&self, f: impl Fn(&ProfileSample) -> f64) -> Vec<f64> {
        let s = &self.samples;
        let n = s.len();
        let mut d = vec![0.0; n];
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            d[i] = (f(&s[b]) - f(&s[a])) / (s[b].t - s[a].t);
        }
        d
    }
}

/// Ground-roll takeoff model: constant static thrust from standstill to the
/// computed takeoff speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TakeoffModel {
    /// Maximum static thrust [N].
    pub static_thrust: f64,
    /// Maximum lift coefficient used for the stall speed.
    pub cl_max: f64,
}

impl Default for TakeoffModel {
    fn default() -> Self {
        Self { static_thrust: 15_000.0, cl_max: 1.9 }
    }
}

impl TakeoffModel {
    /// Liftoff speed: 1.1 times the sea-level stall speed.
    pub fn takeoff_speed(&self, aircraft: &AircraftSpec) -> f64 {
        1.1 * (2.0 * aircraft.mass * G / (RHO_0 * aircraft.wing_area * self.cl_max)).sqrt()
    }
}

/// Per-phase energy breakdown [kWh] plus diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyBreakdown {
    pub takeoff_kwh: f64,
    pub enroute_kwh: f64,
    pub total_kwh: f64,
    pub takeoff_speed_ms: f64,
    pub ground_roll_s: f64,
    pub duration_s: f64,
}

/// Required lift coefficient at one sample given the vertical acceleration.
pub fn lift_coefficient(sample: &ProfileSample, vz_dot: f64, aircraft: &AircraftSpec) -> f64 {
    let rho = isa_density(sample.alt);
    2.0 * aircraft.mass / (rho * aircraft.wing_area * sample.v * sample.v)
        * (vz_dot + G * sample.theta().cos())
}

/// Drag polar: quadratic dependence on lift.
pub fn drag_coefficient(c_l: f64, aircraft: &AircraftSpec) -> f64 {
    aircraft.cd_min + aircraft.induced_k * c_l * c_l
}

/// Thrust from the force balance at one sample.
///
/// The acceleration term uses the horizontal acceleration `vx_dot`
/// (finite-differenced from the profile): a raw velocity there would not be
/// dimensionally a force.
pub fn thrust(sample: &ProfileSample, vx_dot: f64, c_d: f64, aircraft: &AircraftSpec) -> f64 {
    let rho = isa_density(sample.alt);
    aircraft.mass * (vx_dot + G * sample.theta().sin())
        + rho * aircraft.wing_area * c_d * sample.v * sample.v / 2.0
}

/// Integrates flight energy over the profile; `takeoff` adds the
/// ground-roll segment before the first sample.
///
/// Samples with `v = 0` (pre-takeoff) contribute nothing to the en-route
/// integral; the takeoff model covers that phase.
pub fn flight_energy(
    profile: &FlightProfile,
    aircraft: &AircraftSpec,
    takeoff: Option<TakeoffModel>,
) -> Result<EnergyBreakdown, ProfileError> {
    if profile.samples.len() < 2 {
        return Err(ProfileError::TooShort(profile.samples.len()));
    }
    let vz_dot = profile.derivative(|s| s.vz);
    let vx_dot = profile.derivative(|s| s.vx());

    // instantaneous required power F_T * v, zero while stationary
    let power: Vec<f64> = profile
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if s.v <= 0.0 {
                return 0.0;
            }
            let c_l = lift_coefficient(s, vz_dot[i], aircraft);
            let c_d = drag_coefficient(c_l, aircraft);
            let f_t = thrust(s, vx_dot[i], c_d, aircraft);
            f_t * s.v
        })
        .collect();

    let mut energy_j = 0.0;
    for (i, pair) in profile.samples.windows(2).enumerate() {
        let dt = pair[1].t - pair[0].t;
        energy_j += 0.5 * (power[i] + power[i + 1]) * dt;
    }
    let enroute_kwh = energy_j / aircraft.powertrain_eff / 3.6e6;

    let (takeoff_kwh, v_to, roll_s) = match takeoff {
        Some(model) => {
            let v_to = model.takeoff_speed(aircraft);
            // constant thrust, no resistive force over the roll: the work
            // delivered equals the kinetic energy at liftoff
            let e_j = 0.5 * aircraft.mass * v_to * v_to;
            let roll_s = aircraft.mass * v_to / model.static_thrust;
            (e_j / aircraft.powertrain_eff / 3.6e6, v_to, roll_s)
        }
        None => (0.0, 0.0, 0.0),
    };

    Ok(EnergyBreakdown {
        takeoff_kwh,
        enroute_kwh,
        total_kwh: takeoff_kwh + enroute_kwh,
        takeoff_speed_ms: v_to,
        ground_roll_s: roll_s,
        duration_s: profile.duration(),
    })
}

/// Constant-speed level cruise profile at a fixed altitude.
pub fn level_cruise_profile(v: f64, alt: f64, duration_s: f64, dt_s: f64) -> FlightProfile {
    let n = (duration_s / dt_s).round() as usize;
    let samples = (0..=n)
        .map(|i| ProfileSample { t: i as f64 * dt_s, alt, v, vz: 0.0 })
        .collect();
    FlightProfile::new(samples).expect("valid synthetic profile")
}

/// Synthetic climb-cruise-descent hop between sea-level airports.
pub fn hop_profile(
    cruise_v: f64,
    cruise_alt: f64,
    climb_rate: f64,
    total_s: f64,
    dt_s: f64,
) -> FlightProfile {
    let climb_s = cruise_alt / climb_rate;
    let n = (total_s / dt_s).round() as usize;
    let samples = (0..=n)
        .map(|i| {
            let t = i as f64 * dt_s;
            let (alt, v, vz) = if t < climb_s {
                (climb_rate * t, cruise_v * 0.85, climb_rate)
            } else if t > total_s - climb_s {
                ((total_s - t) * climb_rate, cruise_v * 0.9, -climb_rate)
            } else {
                (cruise_alt, cruise_v, 0.0)
            };
            ProfileSample { t, alt, v, vz }
        })
        .collect();
    FlightProfile::new(samples).expect("valid synthetic profile")
}

/// Renders the profile back to its CSV format.
pub fn profile_to_csv(profile: &FlightProfile) -> String {
    let mut out = String::from("t_s,alt_m,v_ms,vz_ms\n");
    for s in &profile.samples {
        let _ = writeln!(out, "{},{},{},{}", s.t, s.alt, s.v, s.vz);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn demo_aircraft() -> AircraftSpec {
        AircraftSpec {
            id: "EA1".into(),
            batt_min: 80.0,
            batt_max: 800.0,
            reserve: 100.0,
            charge_min: 0.0,
            charge_max: 400.0,
            terminal_min: 200.0,
            mass: 6000.0,
            wing_area: 30.0,
            cd_min: 0.025,
            induced_k: 0.045,
            powertrain_eff: 0.9,
            initial_airport: "ALFA".into(),
            initial_energy: 600.0,
        }
    }

    #[test]
    fn isa_density_reference_points() {
        assert!((isa_density(0.0) - 1.225).abs() < 1e-12);
        assert!(isa_density(1000.0) < isa_density(0.0));
        // broadly the textbook value at 2 km (~1.007 kg/m^3)
        assert!((isa_density(2000.0) - 1.007).abs() < 0.005);
    }

    #[test]
    fn level_flight_lift_coefficient() {
        // m=6000, rho=1.225, S=30, v=70: c_L = 2*6000*9.80665/(1.225*30*4900)
        let a = demo_aircraft();
        let s = ProfileSample { t: 0.0, alt: 0.0, v: 70.0, vz: 0.0 };
        let c_l = lift_coefficient(&s, 0.0, &a);
        let expect = 2.0 * 6000.0 * G / (1.225 * 30.0 * 4900.0);
        assert!((c_l - expect).abs() < 1e-12);
        assert!((expect - 0.6535).abs() < 1e-4);
    }

    #[test]
    fn vertical_flight_zeroes_gravity_term() {
        // theta = pi/2: cos = 0, steady: c_L = 0
        let a = demo_aircraft();
        let s = ProfileSample { t: 0.0, alt: 0.0, v: 50.0, vz: 50.0 };
        let c_l = lift_coefficient(&s, 0.0, &a);
        assert!(c_l.abs() < 1e-12, "{c_l}");
    }

    #[test]
    fn doubling_speed_quarters_lift() {
        let a = demo_aircraft();
        let s1 = ProfileSample { t: 0.0, alt: 0.0, v: 70.0, vz: 0.0 };
        let s2 = ProfileSample { t: 0.0, alt: 0.0, v: 140.0, vz: 0.0 };
        let r = lift_coefficient(&s1, 0.0, &a) / lift_coefficient(&s2, 0.0, &a);
        assert!((r - 4.0).abs() < 1e-12);
    }

    #[test]
    fn drag_polar_values() {
        let a = demo_aircraft();
        assert_eq!(drag_coefficient(0.0, &a), 0.025);
        let c_d = drag_coefficient(0.6536, &a);
        assert!((c_d - (0.025 + 0.045 * 0.6536f64.powi(2))).abs() < 1e-15);
        assert!((c_d - 0.04422).abs() < 1e-5);
        // even in c_L
        assert_eq!(drag_coefficient(-0.5, &a), drag_coefficient(0.5, &a));
    }

    #[test]
    fn thrust_level_and_climb() {
        let a = demo_aircraft();
        let s = ProfileSample { t: 0.0, alt: 0.0, v: 70.0, vz: 0.0 };
        let c_l = lift_coefficient(&s, 0.0, &a);
        let c_d = drag_coefficient(c_l, &a);
        let f = thrust(&s, 0.0, c_d, &a);
        let drag = 1.225 * 30.0 * c_d * 4900.0 / 2.0;
        assert!((f - drag).abs() < 1e-9);
        assert!((f - 3981.0).abs() < 1.0, "{f}");
        // steady climb adds m g sin(theta)
        let climb = ProfileSample { t: 0.0, alt: 0.0, v: 70.0, vz: 70.0 * 0.05f64.sin() };
        let f_climb = thrust(&climb, 0.0, c_d, &a);
        let expect_extra = 6000.0 * G * 0.05f64.sin();
        assert!((f_climb - drag - expect_extra).abs() < 1.0, "{f_climb}");
        assert!((expect_extra - 2941.0).abs() < 2.0);
    }

    #[test]
    fn cruise_energy_matches_closed_form() {
        // E = rho S c_D v^3 T / (2 eta): v=70, T=1800 s, eta=0.9
        let a = demo_aircraft();
        let profile = level_cruise_profile(70.0, 0.0, 1800.0, 5.0);
        let e = flight_energy(&profile, &a, None).unwrap();
        let c_l = 2.0 * 6000.0 * G / (1.225 * 30.0 * 4900.0);
        let c_d = 0.025 + 0.045 * c_l * c_l;
        let closed = 1.225 * 30.0 * c_d * 70.0f64.powi(3) * 1800.0 / (2.0 * 0.9) / 3.6e6;
        assert!(
            (e.total_kwh - closed).abs() <= 0.001 * closed,
            "trapezoid {} vs closed form {closed}",
            e.total_kwh
        );
        assert!((closed - 154.8).abs() < 0.1, "{closed}");
    }

    #[test]
    fn zero_length_flight_zero_energy() {
        let a = demo_aircraft();
        let profile = FlightProfile::new(vec![
            ProfileSample { t: 0.0, alt: 0.0, v: 0.0, vz: 0.0 },
            ProfileSample { t: 1.0, alt: 0.0, v: 0.0, vz: 0.0 },
        ])
        .unwrap();
        let e = flight_energy(&profile, &a, None).unwrap();
        assert_eq!(e.total_kwh, 0.0);
    }

    #[test]
    fn too_short_profile_rejected() {
        assert!(matches!(
            FlightProfile::new(vec![ProfileSample { t: 0.0, alt: 0.0, v: 1.0, vz: 0.0 }]),
            Err(ProfileError::TooShort(1))
        ));
    }

    #[test]
    fn halving_sample_interval_converges() {
        let a = demo_aircraft();
        let coarse = hop_profile(75.0, 1500.0, 5.0, 1500.0, 10.0);
        let fine = hop_profile(75.0, 1500.0, 5.0, 1500.0, 5.0);
        let e1 = flight_energy(&coarse, &a, None).unwrap().total_kwh;
        let e2 = flight_energy(&fine, &a, None).unwrap().total_kwh;
        assert!((e1 - e2).abs() < 0.001 * e2, "{e1} vs {e2}");
    }

    #[test]
    fn efficiency_scaling() {
        let mut a = demo_aircraft();
        let profile = hop_profile(75.0, 1500.0, 5.0, 1500.0, 5.0);
        a.powertrain_eff = 0.9;
        let e1 = flight_energy(&profile, &a, Some(TakeoffModel::default())).unwrap().total_kwh;
        a.powertrain_eff = 0.45;
        let e2 = flight_energy(&profile, &a, Some(TakeoffModel::default())).unwrap().total_kwh;
        assert!((e1 * 0.9 - e2 * 0.45).abs() < 1e-9 * e1);
    }

    #[test]
    fn takeoff_energy_is_kinetic_over_eff() {
        let a = demo_aircraft();
        let model = TakeoffModel::default();
        let v_to = model.takeoff_speed(&a);
        let profile = level_cruise_profile(70.0, 0.0, 60.0, 5.0);
        let with = flight_energy(&profile, &a, Some(model)).unwrap();
        let without = flight_energy(&profile, &a, None).unwrap();
        let expect = 0.5 * 6000.0 * v_to * v_to / 0.9 / 3.6e6;
        assert!((with.takeoff_kwh - expect).abs() < 1e-12);
        assert!((with.total_kwh - without.total_kwh - expect).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let profile = hop_profile(70.0, 1000.0, 5.0, 900.0, 15.0);
        let csv = profile_to_csv(&profile);
        let parsed = FlightProfile::from_csv(&csv, "mem").unwrap();
        assert_eq!(parsed, profile);
    }

    #[test]
    fn inconsistent_speeds_rejected() {
        let err = FlightProfile::new(vec![
            ProfileSample { t: 0.0, alt: 0.0, v: 10.0, vz: 20.0 },
            ProfileSample { t: 1.0, alt: 0.0, v: 10.0, vz: 0.0 },
        ]);
        assert!(matches!(err, Err(ProfileError::BadSample { index: 0, .. })));
    }
}
