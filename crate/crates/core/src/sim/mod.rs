//! Rolling-horizon replay of one day.
//!
//! Every `epoch_s` seconds the dispatcher admits newly placed orders, frees
//! couriers whose work is done, abandons orders nobody can still deliver in
//! time, and hands the idle on-shift couriers and pending orders to
//! [`grasp`]. Returned routes are committed and executed to completion.

mod log;

use std::collections::BTreeSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::Seconds;
use crate::model::{CourierIdx, Instance, OrderIdx};
use crate::schedule::{
    assignment_feasible, schedule_route, CourierState, DispatchProblem, IdlePosition, Route, RouteSchedule, Violation,
};
use crate::solver::{grasp, Objective, SolverConfig};

pub use log::{
    event_log_string, read_event_log, validate_event_log, write_event_log, Event, EventKind, LogSummary, LogViolation,
    ReadLogError,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub epoch_s: Seconds,
    /// A `time_budget` of `None` means one epoch.
    pub solver: SolverConfig,
    pub return_to_start: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            epoch_s: 120,
            solver: SolverConfig::default(),
            return_to_start: false,
        }
    }
}

impl SimConfig {
    pub fn idle_position(&self) -> IdlePosition {
        if self.return_to_start {
            IdlePosition::ReturnToStart
        } else {
            IdlePosition::LastDropoff
        }
    }

    fn epoch_solver(&self) -> SolverConfig {
        let mut solver = self.solver.clone();
        solver
            .time_budget
            .get_or_insert(Duration::from_secs(self.epoch_s.max(0) as u64));
        solver
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("epoch length must be at least one second, got {0}")]
    Epoch(Seconds),
    #[error(transparent)]
    Config(#[from] crate::solver::ConfigError),
    #[error("solver returned an infeasible assignment at {clock}: {violation}")]
    Infeasible { clock: Seconds, violation: Violation },
}

/// A route handed to a courier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommittedRoute {
    pub id: u32,
    pub assigned_at: Seconds,
    pub route: Route,
    pub schedule: RouteSchedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderStatus {
    /// Not placed yet at the current clock.
    Future,
    Pending,
    /// On a committed route still executing.
    Active,
    Completed,
    Abandoned,
}

#[derive(Debug, Clone, Copy)]
struct CourierSlot {
    /// Position and availability once all committed work is done.
    state: CourierState,
    /// Completion of the last committed route while it is still running.
    busy_until: Option<Seconds>,
}

/// What one [`SimState::step`] did.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EpochReport {
    pub clock: Seconds,
    pub admitted: usize,
    pub released: usize,
    pub abandoned: usize,
    pub committed_orders: usize,
    pub solver_called: bool,
    /// Incumbent objective after each solver iteration; empty when the solver was not called.
    pub trace: Vec<Objective>,
}

#[derive(Debug, Clone)]
pub struct SimState<'a> {
    instance: &'a Instance,
    clock: Seconds,
    /// Orders by `(placement_time, index)`; `arrivals[..next_arrival]` are admitted.
    arrivals: Vec<OrderIdx>,
    next_arrival: usize,
    status: Vec<OrderStatus>,
    pending: BTreeSet<OrderIdx>,
    couriers: Vec<CourierSlot>,
    active: Vec<CommittedRoute>,
    completed: Vec<CommittedRoute>,
    abandoned: Vec<(OrderIdx, Seconds)>,
    events: Vec<Event>,
    next_route: u32,
    epochs: u32,
    solver_calls: u32,
}

impl<'a> SimState<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        let mut arrivals: Vec<OrderIdx> = instance.order_indices().collect();
        arrivals.sort_by_key(|&o| (instance.order(o).placement_time, o));
        Self {
            instance,
            clock: 0,
            arrivals,
            next_arrival: 0,
            status: vec![OrderStatus::Future; instance.orders().len()],
            pending: BTreeSet::new(),
            couriers: instance
                .courier_indices()
                .map(|c| CourierSlot {
                    state: CourierState::at_start(instance, c, 0),
                    busy_until: None,
                })
                .collect(),
            active: Vec::new(),
            completed: Vec::new(),
            abandoned: Vec::new(),
            events: Vec::new(),
            next_route: 0,
            epochs: 0,
            solver_calls: 0,
        }
    }

    pub fn clock(&self) -> Seconds {
        self.clock
    }

    pub fn status(&self, o: OrderIdx) -> OrderStatus {
        self.status[o.index()]
    }

    pub fn pending(&self) -> impl Iterator<Item = OrderIdx> + '_ {
        self.pending.iter().copied()
    }

    pub fn active_routes(&self) -> &[CommittedRoute] {
        &self.active
    }

    pub fn completed_routes(&self) -> &[CommittedRoute] {
        &self.completed
    }

    pub fn abandoned(&self) -> &[(OrderIdx, Seconds)] {
        &self.abandoned
    }

    /// Where courier `c` will be, and from when, once its committed work is done.
    pub fn projected_state(&self, c: CourierIdx) -> CourierState {
        self.couriers[c.index()].state
    }

    pub fn is_idle(&self, c: CourierIdx) -> bool {
        self.couriers[c.index()].busy_until.is_none()
    }

    /// Every order placed and resolved, every route finished.
    pub fn is_finished(&self) -> bool {
        self.next_arrival == self.arrivals.len() && self.pending.is_empty() && self.active.is_empty()
    }

    fn push_event(&mut self, time: Seconds, event: EventKind, o: OrderIdx, courier: Option<(CourierIdx, u32)>) {
        self.events.push(Event {
            time,
            event,
            order: self.instance.order(o).id.clone(),
            courier: courier.map(|(c, _)| self.instance.courier(c).id.clone()),
            route: courier.map(|(_, r)| r),
        });
    }

    /// Runs one dispatch epoch at the current clock, then advances the clock.
    pub fn step(&mut self, config: &SimConfig) -> Result<EpochReport, SimError> {
        if config.epoch_s < 1 {
            return Err(SimError::Epoch(config.epoch_s));
        }
        config.solver.validate()?;
        let inst = self.instance;
        let clock = self.clock;
        let mut report = EpochReport {
            clock,
            ..EpochReport::default()
        };

        while let Some(&o) = self.arrivals.get(self.next_arrival) {
            let placed = inst.order(o).placement_time;
            if placed > clock {
                break;
            }
            self.next_arrival += 1;
            self.pending.insert(o);
            self.status[o.index()] = OrderStatus::Pending;
            self.push_event(placed, EventKind::Placed, o, None);
            report.admitted += 1;
        }

        for slot in &mut self.couriers {
            if slot.busy_until.is_some_and(|t| t <= clock) {
                slot.busy_until = None;
                report.released += 1;
            }
        }
        let (done, running): (Vec<_>, Vec<_>) = std::mem::take(&mut self.active)
            .into_iter()
            .partition(|r| r.schedule.completion() <= clock);
        self.active = running;
        for r in done {
            for &o in r.route.orders() {
                self.status[o.index()] = OrderStatus::Completed;
            }
            self.completed.push(r);
        }

        let hopeless: Vec<OrderIdx> = self
            .pending
            .iter()
            .copied()
            .filter(|&o| {
                let route = Route::singleton(inst, o);
                self.couriers
                    .iter()
                    .all(|slot| schedule_route(&slot.state, &route, clock, inst).is_err())
            })
            .collect();
        for o in hopeless {
            self.pending.remove(&o);
            self.status[o.index()] = OrderStatus::Abandoned;
            self.abandoned.push((o, clock));
            self.push_event(clock, EventKind::Abandoned, o, None);
            report.abandoned += 1;
        }

        let idle: Vec<CourierState> = inst
            .courier_indices()
            .filter(|&c| {
                let courier = inst.courier(c);
                self.is_idle(c) && courier.on_time <= clock && clock < courier.off_time
            })
            .map(|c| self.couriers[c.index()].state)
            .collect();
        if !idle.is_empty() && !self.pending.is_empty() {
            let orders = self.pending.iter().copied().collect();
            let problem = DispatchProblem::new(inst, clock, idle, orders, config.idle_position());
            let outcome = grasp(&problem, &config.epoch_solver());
            self.solver_calls += 1;
            report.solver_called = true;
            report.trace = outcome.trace;
            let scheduled = assignment_feasible(&outcome.assignment, &problem)
                .map_err(|violation| SimError::Infeasible { clock, violation })?;
            for (c, routes) in outcome.assignment.iter() {
                let schedules = &scheduled.schedules[&c];
                for (route, schedule) in routes.iter().zip(schedules) {
                    let id = self.next_route;
                    self.next_route += 1;
                    for &o in route.orders() {
                        self.pending.remove(&o);
                        self.status[o.index()] = OrderStatus::Active;
                        self.push_event(clock, EventKind::Assigned, o, Some((c, id)));
                    }
                    for &o in route.orders() {
                        self.push_event(schedule.pickup_end, EventKind::PickedUp, o, Some((c, id)));
                    }
                    for d in &schedule.drops {
                        self.push_event(d.complete, EventKind::Delivered, d.order, Some((c, id)));
                    }
                    let slot = &mut self.couriers[c.index()];
                    slot.state = slot.state.after(schedule, inst, config.idle_position());
                    slot.busy_until = Some(schedule.completion());
                    report.committed_orders += route.len();
                    self.active.push(CommittedRoute {
                        id,
                        assigned_at: clock,
                        route: route.clone(),
                        schedule: schedule.clone(),
                    });
                }
            }
        }

        self.clock += config.epoch_s;
        self.epochs += 1;
        Ok(report)
    }

    /// Final result; routes still executing count as completed.
    pub fn into_result(mut self) -> SimResult {
        let mut routes = std::mem::take(&mut self.completed);
        routes.append(&mut self.active);
        routes.sort_by_key(|r| r.id);
        let mut events = std::mem::take(&mut self.events);
        events.sort_by_key(|e| e.time);
        SimResult {
            orders: self.instance.orders().len(),
            available_couriers: self.instance.couriers().len(),
            routes,
            abandoned: self.abandoned,
            events,
            epochs: self.epochs,
            solver_calls: self.solver_calls,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimResult {
    pub orders: usize,
    pub available_couriers: usize,
    /// Every committed route, by id.
    pub routes: Vec<CommittedRoute>,
    pub abandoned: Vec<(OrderIdx, Seconds)>,
    /// Lifecycle events sorted by time; ties keep the order they were recorded in.
    pub events: Vec<Event>,
    pub epochs: u32,
    pub solver_calls: u32,
}

impl SimResult {
    pub fn fulfilled(&self) -> usize {
        self.routes.iter().map(|r| r.route.len()).sum()
    }

    pub fn couriers_used(&self) -> usize {
        self.routes
            .iter()
            .map(|r| r.schedule.courier)
            .collect::<BTreeSet<_>>()
            .len()
    }

    pub fn routing_time_s(&self) -> Seconds {
        self.routes.iter().map(|r| r.schedule.routing_time_s()).sum()
    }

    pub fn event_log(&self) -> String {
        event_log_string(&self.events)
    }
}

/// Steps from time zero until every order is resolved and every route finished.
pub fn simulate_day(instance: &Instance, config: &SimConfig) -> Result<SimResult, SimError> {
    let mut state = SimState::new(instance);
    while !state.is_finished() {
        state.step(config)?;
    }
    Ok(state.into_result())
}
