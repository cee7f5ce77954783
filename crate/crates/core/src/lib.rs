//! Meal-delivery dispatch: assigns couriers to restaurant orders and
//! sequences deliveries under time windows.
//!
//! * [`geo`] and [`model`]: coordinates, vehicles, and the validated day [`Instance`].
//! * [`schedule`]: route timelines, feasibility and bundling.
//! * [`solver`]: GRASP (randomized greedy construction, swap local search, multi-start).
//! * [`sim`]: rolling-horizon replay of a day with fixed dispatch epochs.
//! * [`io`] and [`generator`]: CSV instance files and synthetic instances.
//! * [`bench`]: metrics, GAP, compensation and calibration sweeps.

pub mod bench;
pub mod generator;
pub mod geo;
pub mod io;
pub mod model;
pub mod schedule;
pub mod sim;
pub mod solver;

pub use geo::{haversine_km, travel_time_s, GeoPoint, Seconds, VehicleKind};
pub use model::{Courier, CourierIdx, Instance, Order, OrderIdx, Restaurant, RestaurantIdx};
pub use schedule::{Assignment, CourierState, DispatchProblem, IdlePosition, Route, RouteSchedule};
pub use solver::{grasp, Objective, SolverConfig};
