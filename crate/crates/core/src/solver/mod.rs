//! GRASP for one dispatch snapshot: randomized greedy construction over a
//! restricted candidate list, swap local search between couriers, and the
//! multi-start loop keeping the best solution.

mod candidates;
mod construct;
mod grasp;
mod local_search;
mod travel;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::Seconds;
use crate::model::OrderIdx;
use crate::schedule::{Assignment, CourierState, Route};

pub use candidates::{build_candidates, rcl_size, restricted_candidate_list, Candidate, RclError};
pub use construct::constructive_phase;
pub use grasp::{grasp, GraspOutcome};
pub use local_search::{local_search, LocalSearchOutcome};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalSearchMode {
    /// Apply the single best improving swap found in one scan.
    OnePass,
    /// Keep applying best swaps until none improves.
    #[default]
    FullDescent,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveMode {
    /// Most orders fulfilled first, then least routing time.
    #[default]
    Lexicographic,
    /// Routing time alone.
    CostOnly,
}

/// Value used to rank (courier, order) candidates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreedyValue {
    /// Travel time from the courier to the order's restaurant.
    #[default]
    PickupLeg,
    /// Courier to restaurant plus restaurant to customer.
    FullDelivery,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub alpha: f64,
    pub iterations: u32,
    pub seed: u64,
    pub local_search: LocalSearchMode,
    pub objective: ObjectiveMode,
    pub greedy_value: GreedyValue,
    /// Evaluate every candidate from the courier's snapshot state instead of
    /// moving the courier along as orders are committed.
    pub static_positions: bool,
    pub time_budget: Option<Duration>,
    /// Run GRASP iterations on the rayon pool (results are identical either way).
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 0.7,
            iterations: 1000,
            seed: 0,
            local_search: LocalSearchMode::default(),
            objective: ObjectiveMode::default(),
            greedy_value: GreedyValue::default(),
            static_positions: false,
            time_budget: None,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("alpha must lie in [0, 1], got {0}")]
    Alpha(f64),
    #[error("iterations must be at least 1")]
    Iterations,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(ConfigError::Alpha(self.alpha));
        }
        if self.iterations == 0 {
            return Err(ConfigError::Iterations);
        }
        Ok(())
    }
}

/// Solution quality; compare with [`Objective::better_than`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objective {
    pub fulfilled: usize,
    pub routing_time_s: Seconds,
}

impl Objective {
    pub fn of(assignment: &Assignment, routing_time_s: Seconds) -> Self {
        Self {
            fulfilled: assignment.fulfilled_count(),
            routing_time_s,
        }
    }

    /// Strictly better under `mode`.
    pub fn better_than(&self, other: &Objective, mode: ObjectiveMode) -> bool {
        match mode {
            ObjectiveMode::Lexicographic => {
                self.fulfilled > other.fulfilled
                    || (self.fulfilled == other.fulfilled && self.routing_time_s < other.routing_time_s)
            }
            ObjectiveMode::CostOnly => self.routing_time_s < other.routing_time_s,
        }
    }
}

/// One courier's share of a solution under construction or improvement.
#[derive(Debug, Clone, Default)]
pub(crate) struct CourierWork {
    pub seq: Vec<OrderIdx>,
    pub routes: Vec<Route>,
    pub cost: Seconds,
}

/// Solver-internal solution: one entry per courier of the problem, in order.
#[derive(Debug, Clone)]
pub(crate) struct Solution {
    pub work: Vec<CourierWork>,
    pub unassigned: Vec<OrderIdx>,
}

impl Solution {
    pub fn objective(&self) -> Objective {
        Objective {
            fulfilled: self.work.iter().map(|w| w.seq.len()).sum(),
            routing_time_s: self.work.iter().map(|w| w.cost).sum(),
        }
    }

    pub fn to_assignment(&self, states: &[CourierState]) -> Assignment {
        let mut a = Assignment::all_unassigned(self.unassigned.iter().copied());
        for (state, w) in states.iter().zip(&self.work) {
            a.set_routes(state.courier, w.routes.clone());
        }
        a
    }
}
