use crate::geo::Seconds;
use crate::model::OrderIdx;
use crate::schedule::{assignment_feasible, plan_sequence, Assignment, DispatchProblem};

use super::travel::{Checkpoints, SequenceEvaluator, TravelCache};
use super::{CourierWork, LocalSearchMode, Solution, SolverConfig};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalSearchOutcome {
    pub assignment: Assignment,
    /// Improving swaps applied; zero means the input came back unchanged.
    pub swaps_applied: usize,
}

/// Swap local search between couriers.
///
/// A probe exchanges one order of courier A with one order of courier B
/// (each takes the other's place in the sequence), re-bundles and
/// re-schedules both couriers and keeps the exchange only if it is feasible
/// and lowers total routing time. After every exchange each courier's
/// sequence is read back off its new routes. An infeasible input is returned
/// unchanged.
pub fn local_search(
    assignment: &Assignment,
    problem: &DispatchProblem<'_>,
    config: &SolverConfig,
) -> LocalSearchOutcome {
    let Ok(scheduled) = assignment_feasible(assignment, problem) else {
        return LocalSearchOutcome {
            assignment: assignment.clone(),
            swaps_applied: 0,
        };
    };
    let work = problem
        .couriers()
        .iter()
        .map(|s| CourierWork {
            seq: assignment.sequence_of(s.courier),
            routes: assignment.routes_of(s.courier).to_vec(),
            cost: scheduled
                .schedules
                .get(&s.courier)
                .map_or(0, |v| v.iter().map(|r| r.routing_time_s()).sum()),
        })
        .collect();
    let mut solution = Solution {
        work,
        unassigned: assignment.unassigned().iter().copied().collect(),
    };
    let cache = TravelCache::new(problem);
    let swaps_applied = improve(problem, &cache, &mut solution, config.local_search);
    LocalSearchOutcome {
        assignment: if swaps_applied == 0 {
            assignment.clone()
        } else {
            solution.to_assignment(problem.couriers())
        },
        swaps_applied,
    }
}

#[derive(Debug, Clone, Copy)]
struct Swap {
    delta: Seconds,
    i: usize,
    j: usize,
}

const UNKNOWN: Seconds = Seconds::MIN;
const INFEASIBLE: Seconds = -1;

/// Cost of "courier `s` with its order at position `i` replaced by `o`",
/// valid until courier `s` changes. Swaps keep sequence lengths, so the
/// layout `[slot][position][order position]` never moves.
struct Memo {
    offsets: Vec<usize>,
    n_orders: usize,
    cells: Vec<Seconds>,
}

impl Memo {
    fn new(work: &[CourierWork], n_orders: usize) -> Self {
        let mut offsets = Vec::with_capacity(work.len() + 1);
        let mut at = 0;
        for w in work {
            offsets.push(at);
            at += w.seq.len() * n_orders;
        }
        offsets.push(at);
        Self {
            offsets,
            n_orders,
            cells: vec![UNKNOWN; at],
        }
    }

    fn cell(&self, slot: usize, i: usize, pos: usize) -> usize {
        self.offsets[slot] + i * self.n_orders + pos
    }

    fn forget(&mut self, slot: usize) {
        self.cells[self.offsets[slot]..self.offsets[slot + 1]].fill(UNKNOWN);
    }
}

struct Probe<'s, 'a> {
    eval: SequenceEvaluator<'s, 's, 'a>,
    work: &'s [CourierWork],
    memo: &'s mut Memo,
    checkpoints: &'s [Checkpoints],
    scratch: Vec<OrderIdx>,
}

impl Probe<'_, '_> {
    /// Routing time of `slot` with position `i` holding `o` instead.
    fn cost_with(&mut self, slot: usize, i: usize, o: OrderIdx) -> Option<Seconds> {
        let pos = self.eval.cache.pos(o);
        if !self.eval.cache.reachable(slot, pos) {
            return None;
        }
        let cell = self.memo.cell(slot, i, pos);
        let known = self.memo.cells[cell];
        if known != UNKNOWN {
            return (known != INFEASIBLE).then_some(known);
        }
        self.scratch.clone_from(&self.work[slot].seq);
        self.scratch[i] = o;
        let cost = self
            .eval
            .cost_replacing(slot, &self.scratch, i, &self.checkpoints[slot]);
        self.memo.cells[cell] = cost.unwrap_or(INFEASIBLE);
        cost
    }

    /// Best improving exchange between couriers `a` and `b`, first one on ties.
    fn best_between(&mut self, a: usize, b: usize) -> Option<Swap> {
        let (wa, wb) = (&self.work[a], &self.work[b]);
        let base = wa.cost + wb.cost;
        let mut best: Option<Swap> = None;
        for i in 0..wa.seq.len() {
            for j in 0..wb.seq.len() {
                let (oa, ob) = (wa.seq[i], wb.seq[j]);
                let Some(ca) = self.cost_with(a, i, ob) else { continue };
                let Some(cb) = self.cost_with(b, j, oa) else { continue };
                let delta = ca + cb - base;
                if delta < 0 && best.is_none_or(|s| delta < s.delta) {
                    best = Some(Swap { delta, i, j });
                }
            }
        }
        best
    }
}

/// Best exchange per courier pair `x < y`, with the best of each row kept
/// so that picking the overall best is linear. Ties go to the first pair in
/// row-major order.
struct PairTable {
    m: usize,
    cells: Vec<Option<Swap>>,
    row_best: Vec<Option<(usize, Swap)>>,
    dirty: Vec<bool>,
}

impl PairTable {
    fn new(m: usize) -> Self {
        Self {
            m,
            cells: vec![None; m * m],
            row_best: vec![None; m],
            dirty: vec![false; m],
        }
    }

    fn set(&mut self, x: usize, y: usize, v: Option<Swap>) {
        self.cells[x * self.m + y] = v;
        match (self.row_best[x], v) {
            (Some((by, _)), _) if by == y => self.dirty[x] = true,
            (None, Some(s)) => self.row_best[x] = Some((y, s)),
            (Some((by, b)), Some(s)) if s.delta < b.delta || (s.delta == b.delta && y < by) => {
                self.row_best[x] = Some((y, s));
            }
            _ => {}
        }
    }

    fn refresh(&mut self) {
        for x in 0..self.m {
            if std::mem::take(&mut self.dirty[x]) {
                let row = &self.cells[x * self.m..(x + 1) * self.m];
                self.row_best[x] = None;
                for (y, cell) in row.iter().enumerate().skip(x + 1) {
                    if let Some(s) = *cell {
                        if self.row_best[x].is_none_or(|(_, b)| s.delta < b.delta) {
                            self.row_best[x] = Some((y, s));
                        }
                    }
                }
            }
        }
    }

    fn best(&self) -> Option<(usize, usize, Swap)> {
        let mut chosen: Option<(usize, usize, Swap)> = None;
        for (x, rb) in self.row_best.iter().enumerate() {
            if let Some((y, s)) = *rb {
                if chosen.is_none_or(|(_, _, c)| s.delta < c.delta) {
                    chosen = Some((x, y, s));
                }
            }
        }
        chosen
    }
}

/// Runs the swap neighbourhood on `solution` in place; returns swaps applied.
///
/// Full descent caches the best exchange of every courier pair and, after a
/// swap between A and B, re-probes only pairs involving A or B. The outcome is
/// identical to rescanning every pair after each swap.
pub(crate) fn improve(
    problem: &DispatchProblem<'_>,
    cache: &TravelCache,
    solution: &mut Solution,
    mode: LocalSearchMode,
) -> usize {
    let active: Vec<usize> = (0..solution.work.len())
        .filter(|&s| !solution.work[s].seq.is_empty())
        .collect();
    let m = active.len();
    if m < 2 {
        return 0;
    }
    let eval = SequenceEvaluator { problem, cache };
    let mut memo = Memo::new(&solution.work, problem.orders().len());
    let mut checkpoints = vec![Checkpoints::default(); solution.work.len()];
    for &s in &active {
        eval.checkpoints(s, &solution.work[s].seq, &mut checkpoints[s]);
    }
    let mut table = PairTable::new(m);
    {
        let mut probe = Probe {
            eval,
            work: &solution.work,
            memo: &mut memo,
            checkpoints: &checkpoints,
            scratch: Vec::new(),
        };
        for x in 0..m {
            for y in x + 1..m {
                table.set(x, y, probe.best_between(active[x], active[y]));
            }
        }
    }

    let mut swaps = 0;
    loop {
        table.refresh();
        let Some((x, y, swap)) = table.best() else { break };
        let (a, b) = (active[x], active[y]);
        let before = solution.work[a].cost + solution.work[b].cost;
        let oa = solution.work[a].seq[swap.i];
        let ob = solution.work[b].seq[swap.j];
        solution.work[a].seq[swap.i] = ob;
        solution.work[b].seq[swap.j] = oa;
        for slot in [a, b] {
            let w = &mut solution.work[slot];
            let plan = plan_sequence(
                &problem.couriers()[slot],
                &w.seq,
                problem.dispatch_time,
                problem.instance,
                problem.idle,
            )
            .expect("probed exchange is feasible");
            w.cost = plan.routing_time_s();
            w.seq.clear();
            w.seq
                .extend(plan.routes.iter().flat_map(|r| r.orders().iter().copied()));
            w.routes = plan.routes;
        }
        debug_assert_eq!(solution.work[a].cost + solution.work[b].cost - before, swap.delta);
        swaps += 1;
        if mode == LocalSearchMode::OnePass {
            break;
        }
        for slot in [a, b] {
            memo.forget(slot);
            eval.checkpoints(slot, &solution.work[slot].seq, &mut checkpoints[slot]);
        }
        let mut probe = Probe {
            eval,
            work: &solution.work,
            memo: &mut memo,
            checkpoints: &checkpoints,
            scratch: Vec::new(),
        };
        for z in 0..m {
            for touched in [x, y] {
                if z != touched && !(touched == y && z == x) {
                    let (p, q) = (z.min(touched), z.max(touched));
                    table.set(p, q, probe.best_between(active[p], active[q]));
                }
            }
        }
    }
    swaps
}
