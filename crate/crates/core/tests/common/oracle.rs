//! Exhaustive optima for snapshots of a handful of orders.

use mdrp_core::schedule::{schedule_route, sequence_cost};
use mdrp_core::solver::ObjectiveMode;
use mdrp_core::{CourierState, DispatchProblem, Objective, OrderIdx, Route, Seconds};

/// All ways to split `orders` into one ordered list per courier plus a left-out set.
pub fn every_split(orders: &[OrderIdx], couriers: usize, f: &mut impl FnMut(&[Vec<OrderIdx>])) {
    fn go(rest: &[OrderIdx], lists: &mut Vec<Vec<OrderIdx>>, f: &mut impl FnMut(&[Vec<OrderIdx>])) {
        let Some((&o, tail)) = rest.split_first() else {
            f(lists);
            return;
        };
        go(tail, lists, f);
        for c in 0..lists.len() {
            for at in 0..=lists[c].len() {
                lists[c].insert(at, o);
                go(tail, lists, f);
                lists[c].remove(at);
            }
        }
    }
    go(orders, &mut vec![Vec::new(); couriers], f);
}

fn optimum_by(
    problem: &DispatchProblem<'_>,
    cost: impl Fn(&CourierState, &[OrderIdx]) -> Option<Seconds>,
) -> Objective {
    let mut best: Option<Objective> = None;
    every_split(problem.orders(), problem.couriers().len(), &mut |lists| {
        let mut total = 0;
        for (state, seq) in problem.couriers().iter().zip(lists) {
            match cost(state, seq) {
                Some(c) => total += c,
                None => return,
            }
        }
        let obj = Objective {
            fulfilled: lists.iter().map(Vec::len).sum(),
            routing_time_s: total,
        };
        if best.is_none_or(|b| obj.better_than(&b, ObjectiveMode::Lexicographic)) {
            best = Some(obj);
        }
    });
    best.expect("leaving everything unassigned is feasible")
}

/// Best lexicographic objective over order sequences, each planned by
/// the library's own bundling rule.
pub fn sequence_optimum(problem: &DispatchProblem<'_>) -> Objective {
    optimum_by(problem, |state, seq| {
        sequence_cost(state, seq, problem.dispatch_time, problem.instance, problem.idle)
    })
}

/// Cheapest way to cut `seq` into consecutive routes (one restaurant, at
/// most three orders each) executed in that order.
fn best_cut(problem: &DispatchProblem<'_>, state: &CourierState, seq: &[OrderIdx]) -> Option<Seconds> {
    if seq.is_empty() {
        return Some(0);
    }
    let mut best = None;
    for len in 1..=seq.len().min(3) {
        let Ok(route) = Route::new(problem.instance, &seq[..len]) else {
            break;
        };
        let Ok(s) = schedule_route(state, &route, problem.dispatch_time, problem.instance) else {
            continue;
        };
        let next = state.after(&s, problem.instance, problem.idle);
        if let Some(rest) = best_cut(problem, &next, &seq[len..]) {
            let total = s.routing_time_s() + rest;
            if best.is_none_or(|b| total < b) {
                best = Some(total);
            }
        }
    }
    best
}

/// Best lexicographic objective over every feasible assignment: any subset
/// of orders, any split among couriers, any grouping into routes and any
/// route order.
pub fn route_optimum(problem: &DispatchProblem<'_>) -> Objective {
    optimum_by(problem, |state, seq| best_cut(problem, state, seq))
}
