//! Independent a-posteriori checking of decoded plans and executed plant
//! trajectories.
//!
//! Everything here recomputes from first principles — paths, energy
//! recursions, power balances — using only the plan/log data and the
//! scenario, never the MILP instance, so it can catch encoder and solver
//! bugs alike.

use std::collections::BTreeMap;

use crate::model::{AircraftObs, FleetPlan, MeasurementSnapshot};
use crate::plant::TrajectoryLog;
use crate::scenario::{AirportId, Scenario};
use crate::timegraph::{EdgeKind, TimeExpandedGraph};

/// Absolute tolerance on energies [kWh] and powers [kW].
const TOL: f64 = 1e-6;

/// One broken rule, naming the entity it broke on.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditViolation {
    pub rule: String,
    pub entity: String,
    pub detail: String,
}

impl std::fmt::Display for AuditViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}: {}", self.rule, self.entity, self.detail)
    }
}

struct Auditor {
    violations: Vec<AuditViolation>,
}

impl Auditor {
    fn new() -> Self {
        Self { violations: Vec::new() }
    }

    fn check(&mut self, ok: bool, rule: &str, entity: &str, detail: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(AuditViolation {
                rule: rule.into(),
                entity: entity.into(),
                detail: detail(),
            });
        }
    }
}

/// Checks a decoded plan against every path, aircraft-energy and
/// airport-energy rule over the horizon.
///
/// `forecast` must be the same series the plan was optimized against.
/// Returns one entry per violated rule instance; an optimal, correctly
/// decoded plan yields an empty list.
pub fn audit_plan(
    plan: &FleetPlan,
    graph: &TimeExpandedGraph,
    snap: &MeasurementSnapshot,
    enroute_energy: &BTreeMap<String, f64>,
    forecast: &BTreeMap<AirportId, Vec<f64>>,
    scenario: &Scenario,
) -> Vec<AuditViolation> {
    let mut a = Auditor::new();
    let n = plan.horizon_steps;
    let dt_h = scenario.params.dt_hours();

    // flight -> (aircraft index, chosen flight edge)
    let mut chosen_edges: BTreeMap<usize, (usize, usize)> = BTreeMap::new();

    for (k, ac_plan) in plan.aircraft.iter().enumerate() {
        let spec = &scenario.aircraft[k];
        let id = &spec.id;

        // path continuity from the measured source to the terminal
        let source = match &snap.aircraft[id] {
            AircraftObs::OnGround { airport, .. } => {
                graph.node_at(scenario.airport_index(airport).unwrap(), 0)
            }
            AircraftObs::EnRoute { destination, arrival_step } => graph.node_at(
                scenario.airport_index(destination).unwrap(),
                arrival_step.saturating_sub(snap.t_now).min(n),
            ),
        };
        let mut node = source;
        let mut ok_path = true;
        for &e in &ac_plan.path {
            if graph.edges[e].tail != node {
                ok_path = false;
                break;
            }
            node = graph.edges[e].head;
        }
        ok_path &= node == graph.terminal_node();
        a.check(ok_path, "path-continuity", id, || {
            format!("edges do not chain from node {source} to the terminal")
        });

        // flight usage and chain membership
        let path_set: std::collections::BTreeSet<usize> = ac_plan.path.iter().copied().collect();
        for &e in &ac_plan.path {
            if let EdgeKind::Flight { flight, .. } = graph.edges[e].kind {
                let dup = chosen_edges.insert(flight, (k, e));
                a.check(dup.is_none(), "single-assignment", &graph.flights[flight].id, || {
                    "flight appears in more than one aircraft path".into()
                });
            }
        }
        for (fe, chain) in &graph.chains {
            if !path_set.contains(fe) {
                continue;
            }
            for g in chain {
                a.check(path_set.contains(g), "virtual-chain", id, || {
                    format!("chain ground edge {g} of flight edge {fe} missing from path")
                });
            }
        }

        // charge gating: power only while parked on a path ground edge and
        // never on an active chain edge of an own chosen flight
        let mut ground_at: Vec<Option<usize>> = vec![None; n];
        for &e in &ac_plan.path {
            if let EdgeKind::Ground { offset, .. } = graph.edges[e].kind {
                ground_at[offset] = Some(e);
            }
        }
        let mut blocked = vec![false; n];
        for (fe, chain) in &graph.chains {
            if path_set.contains(fe) {
                for g in chain {
                    if let EdgeKind::Ground { offset, .. } = graph.edges[*g].kind {
                        blocked[offset] = true;
                    }
                }
            }
        }
        for (off, &p) in ac_plan.charge_kw.iter().enumerate() {
            a.check(p >= -TOL, "charge-bounds", id, || {
                format!("negative charge {p} kW at offset {off}")
            });
            a.check(p <= spec.charge_max + TOL, "charge-bounds", id, || {
                format!("charge {p} kW beyond limit {} at offset {off}", spec.charge_max)
            });
            if p > TOL {
                a.check(ground_at[off].is_some(), "charge-gating", id, || {
                    format!("charging {p} kW at offset {off} while not parked")
                });
                a.check(!blocked[off], "charge-gating", id, || {
                    format!("charging {p} kW at offset {off} on a virtual flight edge")
                });
            }
        }

        // energy recursion, bounds, reserve and terminal set
        let start = match &snap.aircraft[id] {
            AircraftObs::OnGround { energy_kwh, .. } => *energy_kwh,
            AircraftObs::EnRoute { .. } => enroute_energy[id],
        };
        let mut flight_energy_at = vec![0.0; n];
        for &e in &ac_plan.path {
            if let EdgeKind::Flight { flight, departure, .. } = graph.edges[e].kind {
                flight_energy_at[departure - graph.t_anchor] +=
                    graph.flights[flight].est_energy;
            }
        }
        let mut energy = start;
        for step in 1..=n {
            energy += ac_plan.charge_kw[step - 1] * dt_h - flight_energy_at[step - 1];
            let reported = ac_plan.energy_kwh[step - 1];
            a.check((energy - reported).abs() <= 1e-4, "energy-recursion", id, || {
                format!("step {step}: recomputed {energy} kWh vs plan {reported} kWh")
            });
            a.check(
                energy >= spec.batt_min - TOL && energy <= spec.batt_max + TOL,
                "energy-bounds",
                id,
                || format!("step {step}: {energy} kWh outside [{}, {}]", spec.batt_min, spec.batt_max),
            );
            if blocked[step - 1] && plan.reserve_slack_kwh <= TOL {
                a.check(energy >= spec.reserve - TOL, "energy-reserve", id, || {
                    format!("step {step}: {energy} kWh below reserve {}", spec.reserve)
                });
            }
        }
        a.check(energy >= spec.terminal_min - TOL, "terminal-set", id, || {
            format!("final energy {energy} kWh below terminal floor {}", spec.terminal_min)
        });
    }

    // every in-horizon flight assigned exactly once, consistently with the
    // assignment list
    for (f, flight) in graph.flights.iter().enumerate() {
        let listed = plan.assignment_for(&flight.id);
        match chosen_edges.get(&f) {
            None => a.check(false, "single-assignment", &flight.id, || {
                "no aircraft path uses any copy of this flight".into()
            }),
            Some((k, e)) => {
                let EdgeKind::Flight { departure, .. } = graph.edges[*e].kind else {
                    unreachable!()
                };
                let ok = listed.is_some_and(|asg| {
                    asg.aircraft == scenario.aircraft[*k].id && asg.departure_step == departure
                });
                a.check(ok, "assignment-consistency", &flight.id, || {
                    format!("path uses departure {departure} by {k}, list says {listed:?}")
                });
            }
        }
    }

    // airport rules: BESS recursion/bounds, apron aggregation, grid balance
    for (h, airport) in scenario.airports.iter().enumerate() {
        let ap = &plan.airports[h];
        let mut e = snap.bess_energy[&airport.id];
        let fc = &forecast[&airport.id];
        for step in 1..=n {
            e -= ap.bess_power_kw[step - 1] * dt_h;
            let reported = ap.bess_energy_kwh[step - 1];
            a.check((e - reported).abs() <= 1e-4, "bess-recursion", &airport.id, || {
                format!("step {step}: recomputed {e} kWh vs plan {reported} kWh")
            });
            a.check(
                e >= airport.bess_capacity_min - TOL && e <= airport.bess_capacity_max + TOL,
                "bess-bounds",
                &airport.id,
                || {
                    format!(
                        "step {step}: {e} kWh outside [{}, {}]",
                        airport.bess_capacity_min, airport.bess_capacity_max
                    )
                },
            );
            a.check(
                ap.bess_power_kw[step - 1].abs() <= airport.bess_power_max + TOL,
                "bess-power",
                &airport.id,
                || {
                    format!(
                        "step {step}: power {} kW beyond {}",
                        ap.bess_power_kw[step - 1], airport.bess_power_max
                    )
                },
            );
        }
        #[allow(clippy::needless_range_loop)]
        for off in 0..n {
            let apron: f64 = plan.aircraft.iter().map(|p| {
                // the plan's charge applies at whichever airport the path
                // parks the aircraft; recompute membership from the path
                let parked_here = p.path.iter().any(|&e| {
                    matches!(graph.edges[e].kind, EdgeKind::Ground { airport: ga, offset }
                        if ga == h && offset == off)
                });
                if parked_here {
                    p.charge_kw[off]
                } else {
                    0.0
                }
            })
            .sum();
            a.check((apron - ap.apron_power_kw[off]).abs() <= 1e-4, "apron-aggregation", &airport.id, || {
                format!("offset {off}: recomputed apron {apron} kW vs plan {} kW", ap.apron_power_kw[off])
            });
            let grid = ap.grid_power_kw[off];
            a.check(grid >= -TOL, "grid-bounds", &airport.id, || {
                format!("offset {off}: negative grid power {grid}")
            });
            let need = apron - fc[off] - ap.bess_power_kw[off];
            a.check(grid >= need - 1e-4, "grid-balance", &airport.id, || {
                format!("offset {off}: grid {grid} kW below balance requirement {need} kW")
            });
        }
    }

    a.violations
}

/// Summary of a plant log audit.
#[derive(Debug, Clone, PartialEq)]
pub struct LogAudit {
    pub violations: Vec<AuditViolation>,
    pub flights_flown: usize,
    pub total_delay_steps: usize,
}

/// Checks an executed trajectory log: airport energy balance, aircraft
/// energy bounds, movement consistency and flight completeness.
///
/// `allowed_delay` is the departure-delay ceiling (the scheduled limit, or
/// a widened one when the recovery ladder engaged during the run).
pub fn audit_plant_log(
    log: &TrajectoryLog,
    scenario: &Scenario,
    allowed_delay: usize,
) -> LogAudit {
    let mut a = Auditor::new();
    let dt_h = scenario.params.dt_hours();

    // airport power balance and BESS bounds per step
    let mut prev_bess: BTreeMap<&str, f64> =
        scenario.airports.iter().map(|ap| (ap.id.as_str(), ap.bess_initial)).collect();
    for row in &log.airport_rows {
        let spec = scenario.airport(&row.airport).expect("airport exists");
        let id = &row.airport;
        a.check(
            row.bess_energy_kwh >= spec.bess_capacity_min - TOL
                && row.bess_energy_kwh <= spec.bess_capacity_max + TOL,
            "bess-bounds",
            id,
            || format!("step {}: {} kWh", row.step, row.bess_energy_kwh),
        );
        let expected = prev_bess[id.as_str()] - row.bess_kw * dt_h;
        a.check(
            (row.bess_energy_kwh - expected).abs() <= 1e-4,
            "bess-recursion",
            id,
            || {
                format!(
                    "step {}: logged {} kWh vs recomputed {expected} kWh",
                    row.step, row.bess_energy_kwh
                )
            },
        );
        prev_bess.insert(id.as_str(), row.bess_energy_kwh);

        // P_a = P_gr + P_rnw + P_b - curtailment, curtailment >= 0
        let balance = row.grid_kw + row.solar_kw + row.bess_kw - row.curtailed_kw;
        a.check((balance - row.apron_kw).abs() <= 1e-4, "power-balance", id, || {
            format!(
                "step {}: apron {} kW vs grid {} + solar {} + bess {} - curtailed {}",
                row.step, row.apron_kw, row.grid_kw, row.solar_kw, row.bess_kw, row.curtailed_kw
            )
        });
        a.check(row.curtailed_kw >= -TOL, "power-balance", id, || {
            format!("step {}: negative curtailment {}", row.step, row.curtailed_kw)
        });
        a.check(row.grid_kw >= -TOL, "grid-bounds", id, || {
            format!("step {}: negative grid {}", row.step, row.grid_kw)
        });
    }

    // aircraft: bounds, charging only on ground, no teleporting
    let mut last_loc: BTreeMap<&str, (usize, String, String)> = BTreeMap::new();
    for row in &log.aircraft_rows {
        let spec = scenario.aircraft_spec(&row.aircraft).expect("aircraft exists");
        let id = &row.aircraft;
        a.check(
            row.energy_kwh >= spec.batt_min - TOL && row.energy_kwh <= spec.batt_max + TOL,
            "energy-bounds",
            id,
            || format!("step {}: {} kWh", row.step, row.energy_kwh),
        );
        if row.charge_kw > TOL {
            a.check(row.status == "ground", "charge-gating", id, || {
                format!("step {}: charging {} kW while {}", row.step, row.charge_kw, row.status)
            });
            a.check(row.charge_kw <= spec.charge_max + TOL, "charge-bounds", id, || {
                format!("step {}: {} kW beyond {}", row.step, row.charge_kw, spec.charge_max)
            });
        }
        if let Some((prev_step, prev_status, prev_loc)) = last_loc.get(id.as_str()) {
            // grounded aircraft may only move by departing on a flight
            // logged at exactly that step
            if *prev_status == "ground" && row.status == "ground" && *prev_loc != row.location {
                let moved_by_flight = log.departures.iter().any(|d| {
                    d.aircraft == *id
                        && d.step >= *prev_step
                        && d.step < row.step
                        && scenario.flight(&d.flight).is_some_and(|f| {
                            f.origin == *prev_loc && f.destination == row.location
                        })
                });
                a.check(moved_by_flight, "no-teleport", id, || {
                    format!(
                        "between steps {prev_step} and {}: {} -> {} without a flight",
                        row.step, prev_loc, row.location
                    )
                });
            }
        }
        last_loc.insert(id.as_str(), (row.step, row.status.clone(), row.location.clone()));
    }

    // flights: each departs at most once, within the delay ceiling, from
    // its scheduled origin
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for d in &log.departures {
        *seen.entry(d.flight.as_str()).or_insert(0) += 1;
        a.check(d.delay_steps <= allowed_delay, "delay-ceiling", &d.flight, || {
            format!("departed with delay {} > allowed {allowed_delay}", d.delay_steps)
        });
        a.check(d.step >= d.sched_departure, "no-early-departure", &d.flight, || {
            format!("departed at {} before schedule {}", d.step, d.sched_departure)
        });
    }
    for (flight, count) in &seen {
        a.check(*count == 1, "single-departure", flight, || {
            format!("departed {count} times")
        });
    }

    LogAudit {
        violations: a.violations,
        flights_flown: seen.len(),
        total_delay_steps: log.total_delay_steps(),
    }
}
