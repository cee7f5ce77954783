use thiserror::Error;

use crate::geo::Seconds;
use crate::model::{CourierIdx, OrderIdx};
use crate::schedule::DispatchProblem;

use super::travel::{Anchor, TravelCache};
use super::GreedyValue;

/// A feasible (courier, order) pairing and its greedy value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Candidate {
    pub time_travel: Seconds,
    pub courier: CourierIdx,
    pub order: OrderIdx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("cannot build a restricted candidate list from no candidates")]
pub struct RclError;

/// Number of candidates kept in the restricted list: `max(1, ceil(alpha * n))`.
pub fn rcl_size(n: usize, alpha: f64) -> usize {
    // The epsilon keeps products like 0.1 * 30 = 3.0000000000000004 at 3.
    let k = (alpha * n as f64 - 1e-9).ceil().max(1.0) as usize;
    k.min(n)
}

pub fn restricted_candidate_list(candidates: &[Candidate], alpha: f64) -> Result<&[Candidate], RclError> {
    if candidates.is_empty() {
        return Err(RclError);
    }
    Ok(&candidates[..rcl_size(candidates.len(), alpha)])
}

/// All schedule-feasible singleton pairings of the snapshot, sorted by
/// `(time_travel, courier, order)`.
pub fn build_candidates(problem: &DispatchProblem<'_>, greedy: GreedyValue) -> Vec<Candidate> {
    let ctx = SolveContext::new(problem, greedy);
    ctx.base
        .sorted()
        .into_iter()
        .map(|(t, slot, pos)| Candidate {
            time_travel: Seconds::from(t),
            courier: problem.couriers()[slot].courier,
            order: problem.orders()[pos],
        })
        .collect()
}

const NONE: u32 = u32::MAX;

/// Counts per time bucket with prefix sums and rank search.
#[derive(Debug, Clone)]
struct Fenwick {
    tree: Vec<u32>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self { tree: vec![0; n + 1] }
    }

    fn add(&mut self, bucket: usize, delta: i32) {
        let mut i = bucket + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i].wrapping_add_signed(delta);
            i += i & i.wrapping_neg();
        }
    }

    fn prefix(&self, bucket_exclusive: usize) -> u32 {
        let mut i = bucket_exclusive;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }

    /// Bucket holding the `rank`-th (0-based) element and the offset within it.
    fn find(&self, rank: u32) -> (usize, u32) {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut remaining = rank;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= remaining {
                pos = next;
                remaining -= self.tree[next];
            }
            step >>= 1;
        }
        (pos, remaining)
    }
}

/// Live candidate set of one construction run.
///
/// Cells `slot * n_orders + pos` hold the candidate's time; cells sharing a
/// time are threaded on an intrusive list per time bucket, and a Fenwick tree
/// over bucket sizes turns a global rank into (bucket, offset).
#[derive(Debug, Clone)]
pub(crate) struct CandidatePool {
    counts: Fenwick,
    heads: Vec<u32>,
    next: Vec<u32>,
    prev: Vec<u32>,
    times: Vec<u32>,
    n_orders: usize,
    len: usize,
}

impl CandidatePool {
    fn new(n_slots: usize, n_orders: usize, buckets: usize) -> Self {
        let cells = n_slots * n_orders;
        Self {
            counts: Fenwick::new(buckets),
            heads: vec![NONE; buckets],
            next: vec![NONE; cells],
            prev: vec![NONE; cells],
            times: vec![NONE; cells],
            n_orders,
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    fn insert(&mut self, slot: usize, pos: usize, t: u32) {
        let cell = slot * self.n_orders + pos;
        debug_assert_eq!(self.times[cell], NONE);
        self.times[cell] = t;
        let head = self.heads[t as usize];
        self.next[cell] = head;
        self.prev[cell] = NONE;
        if head != NONE {
            self.prev[head as usize] = cell as u32;
        }
        self.heads[t as usize] = cell as u32;
        self.counts.add(t as usize, 1);
        self.len += 1;
    }

    fn remove(&mut self, slot: usize, pos: usize) {
        let cell = slot * self.n_orders + pos;
        let t = self.times[cell];
        if t == NONE {
            return;
        }
        self.times[cell] = NONE;
        let (p, n) = (self.prev[cell], self.next[cell]);
        if p == NONE {
            self.heads[t as usize] = n;
        } else {
            self.next[p as usize] = n;
        }
        if n != NONE {
            self.prev[n as usize] = p;
        }
        self.counts.add(t as usize, -1);
        self.len -= 1;
    }

    fn time(&self, slot: usize, pos: usize) -> Option<u32> {
        let t = self.times[slot * self.n_orders + pos];
        (t != NONE).then_some(t)
    }

    /// The `rank`-th smallest candidate by `(time, slot, pos)` as `(slot, pos)`.
    pub fn nth(&self, rank: usize) -> (usize, usize) {
        let (bucket, offset) = self.counts.find(rank as u32);
        debug_assert_eq!(self.counts.prefix(bucket) as usize + offset as usize, rank);
        let mut cells = Vec::new();
        let mut c = self.heads[bucket];
        while c != NONE {
            cells.push(c);
            c = self.next[c as usize];
        }
        let (_, &mut cell, _) = cells.select_nth_unstable(offset as usize);
        let cell = cell as usize;
        (cell / self.n_orders, cell % self.n_orders)
    }

    /// Every candidate as `(time, slot, pos)`, sorted.
    fn sorted(&self) -> Vec<(u32, usize, usize)> {
        let mut out: Vec<_> = self
            .times
            .iter()
            .enumerate()
            .filter(|&(_, &t)| t != NONE)
            .map(|(cell, &t)| (t, cell / self.n_orders, cell % self.n_orders))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn remove_order(&mut self, pos: usize) {
        let slots = self.times.len() / self.n_orders.max(1);
        for slot in 0..slots {
            self.remove(slot, pos);
        }
    }
}

/// Snapshot data shared by every GRASP iteration.
#[derive(Debug)]
pub(crate) struct SolveContext<'p, 'a> {
    pub problem: &'p DispatchProblem<'a>,
    pub greedy: GreedyValue,
    pub travel: TravelCache,
    pub base: CandidatePool,
    /// One past the largest greedy value any courier position can produce.
    buckets: usize,
}

impl<'p, 'a> SolveContext<'p, 'a> {
    pub fn new(problem: &'p DispatchProblem<'a>, greedy: GreedyValue) -> Self {
        let n_slots = problem.couriers().len();
        let n_orders = problem.orders().len();
        assert!(
            n_slots.saturating_mul(n_orders) < NONE as usize,
            "snapshot too large for the candidate pool"
        );
        let travel = TravelCache::new(problem);
        let max_value = match greedy {
            GreedyValue::PickupLeg => travel.max_approach(),
            GreedyValue::FullDelivery => travel.max_approach() + travel.max_leg(),
        };
        let buckets = usize::try_from(max_value).expect("travel times are non-negative") + 1;
        let mut ctx = Self {
            problem,
            greedy,
            travel,
            base: CandidatePool::new(0, 0, 0),
            buckets,
        };
        let mut pool = CandidatePool::new(n_slots, n_orders, buckets);
        let all: Vec<usize> = (0..n_orders).collect();
        let mut approach = Vec::new();
        for (slot, state) in problem.couriers().iter().enumerate() {
            ctx.fill_row(
                &mut pool,
                slot,
                Anchor::Snapshot,
                state.available_from,
                &all,
                &mut approach,
            );
        }
        ctx.base = pool;
        ctx
    }

    /// Greedy value of a singleton route, or `None` when it misses a deadline or the shift end.
    #[inline]
    fn evaluate(&self, slot: usize, available_from: Seconds, approach: Seconds, pos: usize) -> Option<u32> {
        let o = self.problem.orders()[pos];
        let order = self.problem.instance.order(o);
        let depart = self.problem.dispatch_time.max(available_from);
        let pickup_begin = (depart + approach).max(order.ready_time);
        let leg = self.problem.instance.delivery_leg_s(o, self.travel.vehicle(slot));
        let complete = pickup_begin + order.pickup_service + leg + order.dropoff_service;
        if complete > order.deadline || complete > self.travel.off_time(slot) {
            return None;
        }
        let value = match self.greedy {
            GreedyValue::PickupLeg => approach,
            GreedyValue::FullDelivery => approach + leg,
        };
        debug_assert!((0..self.buckets as Seconds).contains(&value));
        Some(value as u32)
    }

    /// (Re)computes the candidates of one courier against `pending` orders.
    pub fn fill_row(
        &self,
        pool: &mut CandidatePool,
        slot: usize,
        anchor: Anchor,
        available_from: Seconds,
        pending: &[usize],
        approach: &mut Vec<Seconds>,
    ) {
        self.travel.approach_row(slot, anchor, approach);
        for &pos in pending {
            let t = self.evaluate(slot, available_from, approach[self.travel.order_restaurant[pos]], pos);
            if t != pool.time(slot, pos) {
                pool.remove(slot, pos);
                if let Some(t) = t {
                    pool.insert(slot, pos, t);
                }
            }
        }
    }
}
