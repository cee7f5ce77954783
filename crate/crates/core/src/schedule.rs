//! Route timelines, time-window feasibility and same-restaurant bundling.
//!
//! A courier serves an ordered list of [`Route`]s. Each route has a single
//! pickup at one restaurant and up to [`MAX_BUNDLE`] drop-offs. Routes are
//! executed back to back: a route is dispatched once the previous one has
//! completed, from wherever the [`IdlePosition`] policy leaves the courier.

use std::collections::{BTreeMap, BTreeSet};

use arrayvec::ArrayVec;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{travel_time_s, GeoPoint, Seconds};
use crate::model::{CourierIdx, Instance, OrderIdx, RestaurantIdx};

/// Orders a courier can carry on one route.
pub const MAX_BUNDLE: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RouteError {
    #[error("a route needs at least one order")]
    Empty,
    #[error("a route carries at most {MAX_BUNDLE} orders, got {0}")]
    TooMany(usize),
    #[error("orders from different restaurants cannot share a route")]
    MixedRestaurants,
}

/// A single-pickup route. `orders` is already in drop-off sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Route {
    restaurant: RestaurantIdx,
    orders: ArrayVec<OrderIdx, MAX_BUNDLE>,
}

impl Route {
    /// Builds a route and sequences its drop-offs earliest deadline first.
    pub fn new(instance: &Instance, orders: &[OrderIdx]) -> Result<Self, RouteError> {
        let first = *orders.first().ok_or(RouteError::Empty)?;
        if orders.len() > MAX_BUNDLE {
            return Err(RouteError::TooMany(orders.len()));
        }
        let restaurant = instance.restaurant_of(first);
        if orders.iter().any(|&o| instance.restaurant_of(o) != restaurant) {
            return Err(RouteError::MixedRestaurants);
        }
        let mut orders: ArrayVec<OrderIdx, MAX_BUNDLE> = orders.iter().copied().collect();
        orders.sort_by_key(|&o| (instance.order(o).deadline, o));
        Ok(Self { restaurant, orders })
    }

    pub fn singleton(instance: &Instance, order: OrderIdx) -> Self {
        let mut orders = ArrayVec::new();
        orders.push(order);
        Self {
            restaurant: instance.restaurant_of(order),
            orders,
        }
    }

    pub fn restaurant(&self) -> RestaurantIdx {
        self.restaurant
    }

    /// Orders in drop-off sequence.
    pub fn orders(&self) -> &[OrderIdx] {
        &self.orders
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    fn with(&self, instance: &Instance, order: OrderIdx) -> Option<Self> {
        if self.orders.is_full() || instance.restaurant_of(order) != self.restaurant {
            return None;
        }
        let mut orders = self.orders.clone();
        orders.push(order);
        orders.sort_by_key(|&o| (instance.order(o).deadline, o));
        Some(Self {
            restaurant: self.restaurant,
            orders,
        })
    }
}

/// Where a courier waits after finishing a route.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum IdlePosition {
    /// Stay at the last drop-off location.
    #[default]
    LastDropoff,
    /// Travel back to the shift start location before taking new work.
    ReturnToStart,
}

/// Where a courier is and when it can next depart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CourierState {
    pub courier: CourierIdx,
    pub location: GeoPoint,
    pub available_from: Seconds,
}

impl CourierState {
    /// State at the start location, free from `max(on_time, now)`.
    pub fn at_start(instance: &Instance, courier: CourierIdx, now: Seconds) -> Self {
        let c = instance.courier(courier);
        Self {
            courier,
            location: c.start_location,
            available_from: c.on_time.max(now),
        }
    }

    /// State after completing `schedule`.
    pub fn after(&self, schedule: &RouteSchedule, instance: &Instance, idle: IdlePosition) -> Self {
        let last = schedule.drops.last().expect("schedules have at least one drop-off");
        let dropoff = instance.order(last.order).dropoff;
        match idle {
            IdlePosition::LastDropoff => Self {
                courier: self.courier,
                location: dropoff,
                available_from: last.complete,
            },
            IdlePosition::ReturnToStart => {
                let c = instance.courier(self.courier);
                Self {
                    courier: self.courier,
                    location: c.start_location,
                    available_from: last.complete + travel_time_s(dropoff, c.start_location, c.vehicle),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropEvent {
    pub order: OrderIdx,
    pub arrive: Seconds,
    pub complete: Seconds,
}

/// Concrete timeline of one route.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RouteSchedule {
    pub courier: CourierIdx,
    pub depart: Seconds,
    pub arrive_restaurant: Seconds,
    pub pickup_begin: Seconds,
    pub pickup_end: Seconds,
    pub drops: ArrayVec<DropEvent, MAX_BUNDLE>,
}

impl RouteSchedule {
    /// Idle time at the restaurant waiting for food.
    pub fn wait_s(&self) -> Seconds {
        self.pickup_begin - self.arrive_restaurant
    }

    pub fn completion(&self) -> Seconds {
        self.drops.last().map_or(self.pickup_end, |d| d.complete)
    }

    /// Depart to last delivery, waits and service times included.
    pub fn routing_time_s(&self) -> Seconds {
        self.completion() - self.depart
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum Infeasibility {
    #[error("order {order:?} delivered at {complete}, deadline {deadline}")]
    Deadline {
        order: OrderIdx,
        complete: Seconds,
        deadline: Seconds,
    },
    #[error("courier {courier:?} finishes at {complete}, shift ends {off_time}")]
    Shift {
        courier: CourierIdx,
        order: OrderIdx,
        complete: Seconds,
        off_time: Seconds,
    },
}

impl Infeasibility {
    pub fn order(&self) -> OrderIdx {
        match *self {
            Infeasibility::Deadline { order, .. } | Infeasibility::Shift { order, .. } => order,
        }
    }
}

/// Timeline of `route` plus the first violated constraint, if any.
fn timeline(
    state: &CourierState,
    route: &Route,
    dispatch_time: Seconds,
    instance: &Instance,
) -> (RouteSchedule, Option<Infeasibility>) {
    let courier = instance.courier(state.courier);
    let vehicle = courier.vehicle;
    let pickup = instance.restaurant(route.restaurant).location;

    let depart = dispatch_time.max(state.available_from);
    let arrive_restaurant = depart + travel_time_s(state.location, pickup, vehicle);
    let mut ready = Seconds::MIN;
    let mut service = 0;
    for &o in &route.orders {
        let order = instance.order(o);
        ready = ready.max(order.ready_time);
        service = service.max(order.pickup_service);
    }
    let pickup_begin = arrive_restaurant.max(ready);
    let pickup_end = pickup_begin + service;

    let mut violation = None;
    let mut drops = ArrayVec::new();
    let mut clock = pickup_end;
    let mut prev: Option<GeoPoint> = None;
    for &o in &route.orders {
        let order = instance.order(o);
        let leg = match prev {
            None => instance.delivery_leg_s(o, vehicle),
            Some(from) => travel_time_s(from, order.dropoff, vehicle),
        };
        let arrive = clock + leg;
        let complete = arrive + order.dropoff_service;
        if violation.is_none() && complete > order.deadline {
            violation = Some(Infeasibility::Deadline {
                order: o,
                complete,
                deadline: order.deadline,
            });
        }
        drops.push(DropEvent {
            order: o,
            arrive,
            complete,
        });
        clock = complete;
        prev = Some(order.dropoff);
    }
    if violation.is_none() && clock > courier.off_time {
        violation = Some(Infeasibility::Shift {
            courier: state.courier,
            order: *route.orders.last().expect("non-empty route"),
            complete: clock,
            off_time: courier.off_time,
        });
    }
    let schedule = RouteSchedule {
        courier: state.courier,
        depart,
        arrive_restaurant,
        pickup_begin,
        pickup_end,
        drops,
    };
    (schedule, violation)
}

/// Schedules one route for a courier; `Err` when a deadline or the shift end is missed.
pub fn schedule_route(
    state: &CourierState,
    route: &Route,
    dispatch_time: Seconds,
    instance: &Instance,
) -> Result<RouteSchedule, Infeasibility> {
    match timeline(state, route, dispatch_time, instance) {
        (schedule, None) => Ok(schedule),
        (_, Some(v)) => Err(v),
    }
}

/// Greedy bundling walk. Calls `sink` for every route with its timeline and
/// returns false as soon as one of them is infeasible (when `stop_on_violation`).
fn walk_bundled(
    state: &CourierState,
    sequence: &[OrderIdx],
    dispatch_time: Seconds,
    instance: &Instance,
    idle: IdlePosition,
    stop_on_violation: bool,
    mut sink: impl FnMut(Route, RouteSchedule, Option<Infeasibility>),
) -> bool {
    let mut state = *state;
    let mut ok = true;
    let mut i = 0;
    while i < sequence.len() {
        let mut route = Route::singleton(instance, sequence[i]);
        let (mut schedule, mut violation) = timeline(&state, &route, dispatch_time, instance);
        let mut j = i + 1;
        while j < sequence.len() {
            let Some(merged) = route.with(instance, sequence[j]) else {
                break;
            };
            match timeline(&state, &merged, dispatch_time, instance) {
                (s, None) => {
                    route = merged;
                    schedule = s;
                    violation = None;
                    j += 1;
                }
                _ => break,
            }
        }
        state = state.after(&schedule, instance, idle);
        ok &= violation.is_none();
        sink(route, schedule, violation);
        if !ok && stop_on_violation {
            return false;
        }
        i = j;
    }
    ok
}

/// Splits one courier's order sequence into routes.
///
/// Consecutive orders from the same restaurant are merged while the merged
/// route still meets every deadline; anything else becomes its own route.
pub fn bundle_orders(
    state: &CourierState,
    sequence: &[OrderIdx],
    dispatch_time: Seconds,
    instance: &Instance,
    idle: IdlePosition,
) -> Vec<Route> {
    let mut routes = Vec::new();
    walk_bundled(state, sequence, dispatch_time, instance, idle, false, |r, _, _| {
        routes.push(r)
    });
    routes
}

/// Routes of one courier together with their timelines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CourierPlan {
    pub routes: Vec<Route>,
    pub schedules: Vec<RouteSchedule>,
}

impl CourierPlan {
    pub fn routing_time_s(&self) -> Seconds {
        self.schedules.iter().map(RouteSchedule::routing_time_s).sum()
    }

    pub fn end_state(&self, start: &CourierState, instance: &Instance, idle: IdlePosition) -> CourierState {
        self.schedules.last().map_or(*start, |s| start.after(s, instance, idle))
    }
}

fn singleton_walk(
    state: &CourierState,
    sequence: &[OrderIdx],
    dispatch_time: Seconds,
    instance: &Instance,
    idle: IdlePosition,
    mut sink: impl FnMut(Route, RouteSchedule),
) -> bool {
    let mut state = *state;
    for &o in sequence {
        let route = Route::singleton(instance, o);
        match schedule_route(&state, &route, dispatch_time, instance) {
            Ok(s) => {
                state = state.after(&s, instance, idle);
                sink(route, s);
            }
            Err(_) => return false,
        }
    }
    true
}

/// Turns an order sequence into a feasible plan: greedy bundles when they
/// work out, one route per order otherwise, `None` when neither is feasible.
pub fn plan_sequence(
    state: &CourierState,
    sequence: &[OrderIdx],
    dispatch_time: Seconds,
    instance: &Instance,
    idle: IdlePosition,
) -> Option<CourierPlan> {
    let mut plan = CourierPlan {
        routes: Vec::new(),
        schedules: Vec::new(),
    };
    let bundled = walk_bundled(state, sequence, dispatch_time, instance, idle, true, |r, s, _| {
        plan.routes.push(r);
        plan.schedules.push(s);
    });
    if bundled {
        return Some(plan);
    }
    plan.routes.clear();
    plan.schedules.clear();
    singleton_walk(state, sequence, dispatch_time, instance, idle, |r, s| {
        plan.routes.push(r);
        plan.schedules.push(s);
    })
    .then_some(plan)
}

/// Routing time of [`plan_sequence`] without materialising the plan.
pub fn sequence_cost(
    state: &CourierState,
    sequence: &[OrderIdx],
    dispatch_time: Seconds,
    instance: &Instance,
    idle: IdlePosition,
) -> Option<Seconds> {
    let mut total = 0;
    if walk_bundled(state, sequence, dispatch_time, instance, idle, true, |_, s, _| {
        total += s.routing_time_s()
    }) {
        return Some(total);
    }
    total = 0;
    singleton_walk(state, sequence, dispatch_time, instance, idle, |_, s| {
        total += s.routing_time_s()
    })
    .then_some(total)
}

/// A static dispatch snapshot: who is free, what is pending, and when.
#[derive(Debug, Clone)]
pub struct DispatchProblem<'a> {
    pub instance: &'a Instance,
    pub dispatch_time: Seconds,
    couriers: Vec<CourierState>,
    orders: Vec<OrderIdx>,
    pub idle: IdlePosition,
}

impl<'a> DispatchProblem<'a> {
    pub fn new(
        instance: &'a Instance,
        dispatch_time: Seconds,
        mut couriers: Vec<CourierState>,
        mut orders: Vec<OrderIdx>,
        idle: IdlePosition,
    ) -> Self {
        couriers.sort_by_key(|s| s.courier);
        couriers.dedup_by_key(|s| s.courier);
        orders.sort_unstable();
        orders.dedup();
        Self {
            instance,
            dispatch_time,
            couriers,
            orders,
            idle,
        }
    }

    /// Every courier at its start location and every order, at `dispatch_time`.
    pub fn whole_instance(instance: &'a Instance, dispatch_time: Seconds, idle: IdlePosition) -> Self {
        let couriers = instance
            .courier_indices()
            .map(|c| CourierState::at_start(instance, c, dispatch_time))
            .collect();
        Self::new(
            instance,
            dispatch_time,
            couriers,
            instance.order_indices().collect(),
            idle,
        )
    }

    pub fn couriers(&self) -> &[CourierState] {
        &self.couriers
    }

    pub fn orders(&self) -> &[OrderIdx] {
        &self.orders
    }

    pub fn state_of(&self, courier: CourierIdx) -> Option<&CourierState> {
        self.couriers
            .binary_search_by_key(&courier, |s| s.courier)
            .ok()
            .map(|i| &self.couriers[i])
    }
}

/// Per-courier route lists plus the orders nobody serves.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    routes: BTreeMap<CourierIdx, Vec<Route>>,
    unassigned: BTreeSet<OrderIdx>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssignmentError {
    #[error("order {0:?} appears more than once")]
    Duplicate(OrderIdx),
    #[error("order {0:?} is missing")]
    Missing(OrderIdx),
    #[error("order {0:?} is not part of the problem")]
    Foreign(OrderIdx),
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn all_unassigned(orders: impl IntoIterator<Item = OrderIdx>) -> Self {
        Self {
            routes: BTreeMap::new(),
            unassigned: orders.into_iter().collect(),
        }
    }

    /// Replaces a courier's routes; an empty list removes the courier.
    pub fn set_routes(&mut self, courier: CourierIdx, routes: Vec<Route>) {
        if routes.is_empty() {
            self.routes.remove(&courier);
        } else {
            self.routes.insert(courier, routes);
        }
    }

    pub fn push_route(&mut self, courier: CourierIdx, route: Route) {
        self.routes.entry(courier).or_default().push(route);
    }

    pub fn mark_unassigned(&mut self, order: OrderIdx) {
        self.unassigned.insert(order);
    }

    pub fn routes_of(&self, courier: CourierIdx) -> &[Route] {
        self.routes.get(&courier).map_or(&[], Vec::as_slice)
    }

    /// Couriers with at least one route, in index order.
    pub fn iter(&self) -> impl Iterator<Item = (CourierIdx, &[Route])> {
        self.routes.iter().map(|(&c, r)| (c, r.as_slice()))
    }

    pub fn unassigned(&self) -> &BTreeSet<OrderIdx> {
        &self.unassigned
    }

    /// Flattened order sequence of one courier.
    pub fn sequence_of(&self, courier: CourierIdx) -> Vec<OrderIdx> {
        self.routes_of(courier)
            .iter()
            .flat_map(|r| r.orders().iter().copied())
            .collect()
    }

    pub fn fulfilled_count(&self) -> usize {
        self.routes.values().flatten().map(Route::len).sum()
    }

    pub fn route_count(&self) -> usize {
        self.routes.values().map(Vec::len).sum()
    }

    pub fn couriers_used(&self) -> usize {
        self.routes.len()
    }

    /// Every order of `orders` appears exactly once, in a route or unassigned.
    pub fn check_partition(&self, orders: &[OrderIdx]) -> Result<(), AssignmentError> {
        let expected: BTreeSet<OrderIdx> = orders.iter().copied().collect();
        let mut seen = BTreeSet::new();
        let routed = self.routes.values().flatten().flat_map(|r| r.orders().iter().copied());
        for o in routed.chain(self.unassigned.iter().copied()) {
            if !expected.contains(&o) {
                return Err(AssignmentError::Foreign(o));
            }
            if !seen.insert(o) {
                return Err(AssignmentError::Duplicate(o));
            }
        }
        match expected.difference(&seen).next() {
            Some(&o) => Err(AssignmentError::Missing(o)),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("courier {0:?} is not available in this snapshot")]
    UnknownCourier(CourierIdx),
    #[error("courier {courier:?}, route {route}: {cause}")]
    Infeasible {
        courier: CourierIdx,
        route: usize,
        cause: Infeasibility,
    },
}

/// Timelines for every route of a feasible assignment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScheduledAssignment {
    pub schedules: BTreeMap<CourierIdx, Vec<RouteSchedule>>,
}

impl ScheduledAssignment {
    pub fn total_routing_time_s(&self) -> Seconds {
        self.schedules
            .values()
            .flatten()
            .map(RouteSchedule::routing_time_s)
            .sum()
    }
}

/// Schedules each courier's routes back to back; reports the first violation.
pub fn assignment_feasible(
    assignment: &Assignment,
    problem: &DispatchProblem<'_>,
) -> Result<ScheduledAssignment, Violation> {
    let mut out = ScheduledAssignment::default();
    for (courier, routes) in assignment.iter() {
        let mut state = *problem.state_of(courier).ok_or(Violation::UnknownCourier(courier))?;
        let mut schedules = Vec::with_capacity(routes.len());
        for (i, route) in routes.iter().enumerate() {
            let s = schedule_route(&state, route, problem.dispatch_time, problem.instance).map_err(|cause| {
                Violation::Infeasible {
                    courier,
                    route: i,
                    cause,
                }
            })?;
            state = state.after(&s, problem.instance, problem.idle);
            schedules.push(s);
        }
        out.schedules.insert(courier, schedules);
    }
    Ok(out)
}

pub fn total_routing_time_s(assignment: &Assignment, problem: &DispatchProblem<'_>) -> Result<Seconds, Violation> {
    assignment_feasible(assignment, problem).map(|s| s.total_routing_time_s())
}
