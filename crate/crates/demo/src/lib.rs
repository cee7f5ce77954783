//! Browser front end for the solver. Every entry point takes and returns
//! JSON text, so the same functions run natively in tests and behind
//! `wasm-bindgen` in the page under `www/`.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use mdrp_core::generator::{generate_instance, BoundingBox, DemandPeak, GeneratorParams};
use mdrp_core::schedule::assignment_feasible;
use mdrp_core::solver::{LocalSearchMode, ObjectiveMode};
use mdrp_core::{
    grasp, Courier, DispatchProblem, GeoPoint, IdlePosition, Instance, Objective, Order, Restaurant, Seconds,
    SolverConfig,
};

/// Orders are placed over these five minutes and dispatched at the end.
const WINDOW: (Seconds, Seconds) = (43_200, 43_500);

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TownParams {
    pub orders: usize,
    pub couriers: usize,
    pub restaurants: usize,
    pub seed: u64,
}

impl Default for TownParams {
    fn default() -> Self {
        Self {
            orders: 30,
            couriers: 6,
            restaurants: 4,
            seed: 1,
        }
    }
}

/// One dispatch snapshot: everything placed so far, couriers at their start points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Town {
    pub dispatch_time: Seconds,
    pub restaurants: Vec<Restaurant>,
    pub couriers: Vec<Courier>,
    pub orders: Vec<Order>,
}

impl Town {
    fn instance(&self) -> Result<Instance, String> {
        Instance::new(self.restaurants.clone(), self.couriers.clone(), self.orders.clone()).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveParams {
    pub alpha: f64,
    pub iterations: u32,
    pub seed: u64,
    pub local_search: LocalSearchMode,
    pub objective: ObjectiveMode,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self {
            alpha: 0.7,
            iterations: 200,
            seed: 0,
            local_search: LocalSearchMode::default(),
            objective: ObjectiveMode::default(),
        }
    }
}

impl SolveParams {
    fn config(&self) -> Result<SolverConfig, String> {
        let config = SolverConfig {
            alpha: self.alpha,
            iterations: self.iterations,
            seed: self.seed,
            local_search: self.local_search,
            objective: self.objective,
            ..SolverConfig::default()
        };
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedRoute {
    pub orders: Vec<String>,
    pub depart: Seconds,
    pub complete: Seconds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CourierPath {
    pub courier: String,
    /// Start point, then restaurant and drop-offs of each route in turn.
    pub path: Vec<GeoPoint>,
    pub routes: Vec<PlannedRoute>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solved {
    pub objective: Objective,
    pub couriers: Vec<CourierPath>,
    pub unassigned: Vec<String>,
    /// Incumbent after each iteration.
    pub trace: Vec<Objective>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub alphas: Vec<f64>,
    pub iterations: u32,
    pub seed: u64,
}

impl Default for SweepParams {
    fn default() -> Self {
        Self {
            alphas: (0..=10).map(|i| f64::from(i) / 10.0).collect(),
            iterations: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub alpha: f64,
    pub objective: Objective,
}

fn parse<'de, T: Deserialize<'de>>(what: &str, json: &'de str) -> Result<T, String> {
    serde_json::from_str(json).map_err(|e| format!("{what}: {e}"))
}

fn to_json(value: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(value).map_err(|e| e.to_string())
}

/// A compact town with a lunch burst of orders.
pub fn generate_town(params_json: &str) -> Result<String, String> {
    let p: TownParams = parse("town parameters", params_json)?;
    let inst = generate_instance(&GeneratorParams {
        n_orders: p.orders,
        n_couriers: p.couriers,
        n_restaurants: p.restaurants,
        bbox: BoundingBox::around((4.65, -74.08), 6.0),
        horizon: WINDOW,
        demand_peaks: vec![DemandPeak {
            center_s: (WINDOW.0 + WINDOW.1) / 2,
            spread_s: 100,
            weight: 1.0,
        }],
        shift_length: (8 * 3600, 10 * 3600),
        delivery_radius_km: 2.0,
        seed: p.seed,
        ..GeneratorParams::default()
    })
    .map_err(|e| e.to_string())?;
    to_json(&Town {
        dispatch_time: WINDOW.1,
        restaurants: inst.restaurants().to_vec(),
        couriers: inst.couriers().to_vec(),
        orders: inst.orders().to_vec(),
    })
}

/// Runs GRASP on the town's snapshot.
pub fn solve_town(town_json: &str, params_json: &str) -> Result<String, String> {
    let town: Town = parse("town", town_json)?;
    let config = parse::<SolveParams>("solver parameters", params_json)?.config()?;
    let inst = town.instance()?;
    let problem = DispatchProblem::whole_instance(&inst, town.dispatch_time, IdlePosition::LastDropoff);
    let out = grasp(&problem, &config);
    let scheduled = assignment_feasible(&out.assignment, &problem).map_err(|v| v.to_string())?;
    let couriers = out
        .assignment
        .iter()
        .filter(|(_, routes)| !routes.is_empty())
        .map(|(c, routes)| {
            let mut path = vec![inst.courier(c).start_location];
            let mut planned = Vec::new();
            for (route, s) in routes.iter().zip(&scheduled.schedules[&c]) {
                path.push(inst.restaurant(route.restaurant()).location);
                path.extend(route.orders().iter().map(|&o| inst.order(o).dropoff));
                planned.push(PlannedRoute {
                    orders: route.orders().iter().map(|&o| inst.order(o).id.clone()).collect(),
                    depart: s.depart,
                    complete: s.completion(),
                });
            }
            CourierPath {
                courier: inst.courier(c).id.clone(),
                path,
                routes: planned,
            }
        })
        .collect();
    to_json(&Solved {
        objective: out.objective,
        couriers,
        unassigned: out
            .assignment
            .unassigned()
            .iter()
            .map(|&o| inst.order(o).id.clone())
            .collect(),
        trace: out.trace,
    })
}

/// Best objective per alpha at a fixed iteration count and seed.
pub fn sweep_town(town_json: &str, params_json: &str) -> Result<String, String> {
    let town: Town = parse("town", town_json)?;
    let p: SweepParams = parse("sweep parameters", params_json)?;
    let inst = town.instance()?;
    let problem = DispatchProblem::whole_instance(&inst, town.dispatch_time, IdlePosition::LastDropoff);
    let points = p
        .alphas
        .iter()
        .map(|&alpha| {
            let config = SolveParams {
                alpha,
                iterations: p.iterations,
                seed: p.seed,
                ..SolveParams::default()
            }
            .config()?;
            Ok(SweepPoint {
                alpha,
                objective: grasp(&problem, &config).objective,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    to_json(&points)
}

#[wasm_bindgen]
pub fn generate(params_json: &str) -> Result<String, JsError> {
    generate_town(params_json).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn solve(town_json: &str, params_json: &str) -> Result<String, JsError> {
    solve_town(town_json, params_json).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn sweep(town_json: &str, params_json: &str) -> Result<String, JsError> {
    sweep_town(town_json, params_json).map_err(|e| JsError::new(&e))
}
