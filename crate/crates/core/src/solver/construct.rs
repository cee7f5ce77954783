use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::OrderIdx;
use crate::schedule::{plan_sequence, schedule_route, Assignment, CourierPlan, CourierState, DispatchProblem, Route};

use super::candidates::{rcl_size, SolveContext};
use super::travel::{Anchor, SequenceEvaluator, WalkState};
use super::{CourierWork, Solution, SolverConfig};

/// RNG for GRASP iteration `iteration`: sub-stream `seed + iteration`.
pub(crate) fn iteration_rng(seed: u64, iteration: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(iteration))
}

/// Randomized greedy construction for GRASP iteration `iteration`.
///
/// Repeatedly draws a (courier, order) pair uniformly from the restricted
/// candidate list, appends the order to the courier and moves the courier
/// to where that delivery leaves it. Orders without any feasible courier end
/// up unassigned. Each courier's sequence is bundled at the end.
pub fn constructive_phase(problem: &DispatchProblem<'_>, config: &SolverConfig, iteration: u64) -> Assignment {
    let ctx = SolveContext::new(problem, config.greedy_value);
    let mut rng = iteration_rng(config.seed, iteration);
    construct(&ctx, config, &mut rng).to_assignment(problem.couriers())
}

pub(crate) fn construct(ctx: &SolveContext<'_, '_>, config: &SolverConfig, rng: &mut impl Rng) -> Solution {
    let problem = ctx.problem;
    let orders = problem.orders();
    let mut pool = ctx.base.clone();
    let eval = SequenceEvaluator {
        problem,
        cache: &ctx.travel,
    };
    let mut states: Vec<WalkState> = problem
        .couriers()
        .iter()
        .map(|s| WalkState {
            anchor: Anchor::Snapshot,
            available_from: s.available_from,
        })
        .collect();
    let mut seqs: Vec<Vec<OrderIdx>> = vec![Vec::new(); states.len()];
    let mut pending: Vec<usize> = (0..orders.len()).collect();
    let mut where_pending: Vec<usize> = (0..orders.len()).collect();
    let mut approach = Vec::new();

    while pool.len() > 0 {
        let k = rcl_size(pool.len(), config.alpha);
        let rank = if k == 1 { 0 } else { rng.random_range(0..k) };
        let (slot, pos) = pool.nth(rank);
        let order = orders[pos];
        seqs[slot].push(order);

        let at = where_pending[pos];
        pending.swap_remove(at);
        if let Some(&moved) = pending.get(at) {
            where_pending[moved] = at;
        }
        pool.remove_order(pos);

        if !config.static_positions {
            let timed = eval.time_route(slot, states[slot], &[order]);
            debug_assert!(timed.feasible, "pool only holds feasible pairings");
            states[slot] = timed.next;
            let st = states[slot];
            ctx.fill_row(&mut pool, slot, st.anchor, st.available_from, &pending, &mut approach);
        }
    }

    let mut unassigned: Vec<OrderIdx> = pending.iter().map(|&p| orders[p]).collect();
    let work = problem
        .couriers()
        .iter()
        .zip(seqs)
        .map(|(state, seq)| plan_work(problem, state, seq, &mut unassigned))
        .collect();
    unassigned.sort_unstable();
    Solution { work, unassigned }
}

/// Plans a courier's sequence, dropping orders that cannot be served in order.
fn plan_work(
    problem: &DispatchProblem<'_>,
    state: &CourierState,
    seq: Vec<OrderIdx>,
    unassigned: &mut Vec<OrderIdx>,
) -> CourierWork {
    let inst = problem.instance;
    let (t, idle) = (problem.dispatch_time, problem.idle);
    if let Some(plan) = plan_sequence(state, &seq, t, inst, idle) {
        return canonical(plan);
    }
    // Only reachable with static positions: keep what still fits in sequence.
    let mut kept = Vec::with_capacity(seq.len());
    let mut cur = *state;
    for o in seq {
        match schedule_route(&cur, &Route::singleton(inst, o), t, inst) {
            Ok(s) => {
                cur = cur.after(&s, inst, idle);
                kept.push(o);
            }
            Err(_) => unassigned.push(o),
        }
    }
    canonical(plan_sequence(state, &kept, t, inst, idle).expect("singleton walk is feasible"))
}

/// The sequence is read back off the routes, exactly as an [`Assignment`]
/// presents it, so improving a construction directly or via its assignment
/// starts from the same point.
fn canonical(plan: CourierPlan) -> CourierWork {
    CourierWork {
        seq: plan.routes.iter().flat_map(|r| r.orders().iter().copied()).collect(),
        cost: plan.routing_time_s(),
        routes: plan.routes,
    }
}
