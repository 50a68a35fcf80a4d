//! Closed-loop scheduling and energy management for electric regional
//! aviation networks.
//!
//! The library couples a time-expanded flight graph with an airport energy
//! model, encodes the joint aircraft-assignment / charge-scheduling problem
//! as a mixed-integer linear program, solves it with a built-in
//! bounded-variable simplex plus branch-and-bound (or an external solver via
//! LP-file exchange), and runs the whole thing in a receding-horizon loop
//! against a disturbance-injecting plant simulator.
//!
//! Module map:
//! - [`scenario`]: input data (airports, fleet, flights, weather, parameters)
//! - [`timegraph`]: time-expanded DAG and its sparse selector matrices
//! - [`milp`]: solver-agnostic MILP representation and LP-format file I/O
//! - [`simplex`] / [`branch_bound`] / [`external`]: the solvers
//! - [`model`]: Problem encoding and plan decoding
//! - [`forecast`]: Holt-Winters solar forecasting
//! - [`flightsim`]: quasi-static flight energy model
//! - [`plant`]: ground-truth network simulator with scripted disturbances
//! - [`audit`]: independent a-posteriori constraint checker
//! - [`controller`]: the receding-horizon loop

pub mod audit;
pub mod branch_bound;
pub mod controller;
pub mod external;
pub mod flightsim;
pub mod forecast;
pub mod milp;
pub mod model;
pub mod plant;
pub mod scenario;
pub mod simplex;
pub mod timegraph;

pub use scenario::Scenario;
