//! Distance tables for one snapshot and a table-driven twin of
//! [`crate::schedule::sequence_cost`].

use arrayvec::ArrayVec;

use crate::geo::{haversine_km, travel_time_for_km, travel_time_s, Seconds, VehicleKind};
use crate::model::{OrderIdx, RestaurantIdx};
use crate::schedule::{DispatchProblem, IdlePosition, MAX_BUNDLE};

const NO_POS: u32 = u32::MAX;

/// Where a courier currently stands, in table terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Anchor {
    /// Location given by the snapshot state.
    Snapshot,
    /// Drop-off point of the order at this snapshot position.
    Dropoff(usize),
    /// Shift start location.
    Start,
}

/// Per-order fields needed on the hot path, by snapshot position.
#[derive(Debug, Clone, Copy)]
struct Job {
    ready: Seconds,
    pickup_service: Seconds,
    dropoff_service: Seconds,
    deadline: Seconds,
    restaurant: usize,
    legs: [Seconds; 4],
}

#[derive(Debug)]
pub(crate) struct TravelCache {
    /// Distinct restaurants of the snapshot orders.
    pub restaurants: Vec<RestaurantIdx>,
    /// Snapshot position -> local restaurant index.
    pub order_restaurant: Vec<usize>,
    jobs: Vec<Job>,
    pos_of: Vec<u32>,
    vehicles: Vec<VehicleKind>,
    off_times: Vec<Seconds>,
    /// `[slot][restaurant]`, with the slot's vehicle.
    snapshot_s: Vec<Seconds>,
    /// `[slot][restaurant]` from the shift start location.
    start_s: Vec<Seconds>,
    /// `[vehicle][pos][restaurant]`, only for vehicles present.
    dropoff_s: [Vec<Seconds>; 4],
    /// `[slot][pos]`: false when no sequence can get the order delivered in time.
    reachable: Vec<bool>,
}

impl TravelCache {
    pub fn new(problem: &DispatchProblem<'_>) -> Self {
        let inst = problem.instance;
        let mut restaurants: Vec<RestaurantIdx> = problem.orders().iter().map(|&o| inst.restaurant_of(o)).collect();
        restaurants.sort_unstable();
        restaurants.dedup();
        let order_restaurant: Vec<usize> = problem
            .orders()
            .iter()
            .map(|&o| restaurants.binary_search(&inst.restaurant_of(o)).expect("listed"))
            .collect();
        let jobs = problem
            .orders()
            .iter()
            .zip(&order_restaurant)
            .map(|(&o, &restaurant)| {
                let order = inst.order(o);
                Job {
                    ready: order.ready_time,
                    pickup_service: order.pickup_service,
                    dropoff_service: order.dropoff_service,
                    deadline: order.deadline,
                    restaurant,
                    legs: VehicleKind::ALL.map(|v| inst.delivery_leg_s(o, v)),
                }
            })
            .collect();
        let mut pos_of = vec![NO_POS; inst.orders().len()];
        for (p, &o) in problem.orders().iter().enumerate() {
            pos_of[o.index()] = p as u32;
        }
        let (vehicles, off_times): (Vec<VehicleKind>, Vec<Seconds>) = problem
            .couriers()
            .iter()
            .map(|s| {
                let c = inst.courier(s.courier);
                (c.vehicle, c.off_time)
            })
            .unzip();
        let rest_points: Vec<_> = restaurants.iter().map(|&r| inst.restaurant(r).location).collect();
        let snapshot_s = problem
            .couriers()
            .iter()
            .zip(&vehicles)
            .flat_map(|(s, &v)| rest_points.iter().map(move |&r| travel_time_s(s.location, r, v)))
            .collect();
        let start_s = problem
            .couriers()
            .iter()
            .zip(&vehicles)
            .flat_map(|(s, &v)| {
                let start = inst.courier(s.courier).start_location;
                rest_points.iter().map(move |&r| travel_time_s(start, r, v))
            })
            .collect();
        let dropoff_km: Vec<f64> = problem
            .orders()
            .iter()
            .flat_map(|&o| {
                let d = inst.order(o).dropoff;
                rest_points.iter().map(move |&r| haversine_km(d, r))
            })
            .collect();
        let dropoff_s = VehicleKind::ALL.map(|v| {
            if vehicles.contains(&v) {
                dropoff_km.iter().map(|&km| travel_time_for_km(km, v)).collect()
            } else {
                Vec::new()
            }
        });
        let mut cache = Self {
            restaurants,
            order_restaurant,
            jobs,
            pos_of,
            vehicles,
            off_times,
            snapshot_s,
            start_s,
            dropoff_s,
            reachable: Vec::new(),
        };
        cache.reachable = cache.reachability(problem);
        cache
    }

    /// Any route to an order's restaurant and on to its customer is at least
    /// as long as the direct legs (triangle inequality), so delivering it
    /// straight from the snapshot state bounds every later delivery. Each of
    /// the two legs may round one second lower than the detour it bounds.
    fn reachability(&self, problem: &DispatchProblem<'_>) -> Vec<bool> {
        const ROUNDING_SLACK: Seconds = 2;
        let n = self.restaurants.len();
        let mut out = Vec::with_capacity(self.vehicles.len() * self.jobs.len());
        for (slot, state) in problem.couriers().iter().enumerate() {
            let depart = problem.dispatch_time.max(state.available_from);
            let v = self.vehicles[slot].index();
            out.extend(self.jobs.iter().map(|job| {
                let arrive = depart + self.snapshot_s[slot * n + job.restaurant];
                let complete = arrive.max(job.ready) + job.pickup_service + job.legs[v] + job.dropoff_service;
                complete - ROUNDING_SLACK <= job.deadline.min(self.off_times[slot])
            }));
        }
        out
    }

    pub fn reachable(&self, slot: usize, pos: usize) -> bool {
        self.reachable[slot * self.jobs.len() + pos]
    }

    pub fn vehicle(&self, slot: usize) -> VehicleKind {
        self.vehicles[slot]
    }

    pub fn off_time(&self, slot: usize) -> Seconds {
        self.off_times[slot]
    }

    pub fn pos(&self, o: OrderIdx) -> usize {
        let p = self.pos_of[o.index()];
        debug_assert_ne!(p, NO_POS, "order outside the snapshot");
        p as usize
    }

    /// Travel time from `anchor` to local restaurant `r` for courier `slot`.
    #[inline]
    pub fn approach(&self, slot: usize, anchor: Anchor, r: usize) -> Seconds {
        let n = self.restaurants.len();
        let vehicle = self.vehicles[slot];
        match anchor {
            Anchor::Snapshot => self.snapshot_s[slot * n + r],
            Anchor::Dropoff(p) => self.dropoff_s[vehicle.index()][p * n + r],
            Anchor::Start => self.start_s[slot * n + r],
        }
    }

    /// Upper bound of any approach time the tables can return.
    pub fn max_approach(&self) -> Seconds {
        let dropoffs = self.dropoff_s.iter().flatten();
        self.snapshot_s
            .iter()
            .chain(&self.start_s)
            .chain(dropoffs)
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// Longest restaurant-to-customer leg for the vehicles present.
    pub fn max_leg(&self) -> Seconds {
        self.vehicles
            .iter()
            .flat_map(|v| self.jobs.iter().map(move |j| j.legs[v.index()]))
            .max()
            .unwrap_or(0)
    }

    /// Fills `out` with approach times to every local restaurant.
    pub fn approach_row(&self, slot: usize, anchor: Anchor, out: &mut Vec<Seconds>) {
        out.clear();
        let n = self.restaurants.len();
        match anchor {
            Anchor::Snapshot => out.extend_from_slice(&self.snapshot_s[slot * n..(slot + 1) * n]),
            Anchor::Dropoff(p) => {
                out.extend_from_slice(&self.dropoff_s[self.vehicles[slot].index()][p * n..(p + 1) * n])
            }
            Anchor::Start => out.extend_from_slice(&self.start_s[slot * n..(slot + 1) * n]),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct WalkState {
    pub anchor: Anchor,
    pub available_from: Seconds,
}

pub(crate) struct Timed {
    pub routing: Seconds,
    pub next: WalkState,
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy)]
struct Block {
    start: usize,
    end: usize,
    state: WalkState,
    cost: Seconds,
}

/// Block boundaries of a sequence's bundled walk, with the state and cost
/// before each block.
#[derive(Debug, Clone, Default)]
pub(crate) struct Checkpoints {
    bundled: bool,
    blocks: Vec<Block>,
    block_of: Vec<usize>,
}

/// Table-driven sequence evaluation; must agree with `schedule::sequence_cost`.
#[derive(Clone, Copy)]
pub(crate) struct SequenceEvaluator<'c, 'p, 'a> {
    pub problem: &'p DispatchProblem<'a>,
    pub cache: &'c TravelCache,
}

impl SequenceEvaluator<'_, '_, '_> {
    /// Times one route (orders already in visiting order) from `st`.
    pub fn time_route(&self, slot: usize, st: WalkState, orders: &[OrderIdx]) -> Timed {
        let problem = self.problem;
        let cache = self.cache;
        let vehicle = cache.vehicle(slot);
        let first = cache.pos(orders[0]);
        let depart = problem.dispatch_time.max(st.available_from);
        let arrive = depart + cache.approach(slot, st.anchor, cache.jobs[first].restaurant);
        let (mut ready, mut service) = (Seconds::MIN, 0);
        for &o in orders {
            let job = &cache.jobs[cache.pos(o)];
            ready = ready.max(job.ready);
            service = service.max(job.pickup_service);
        }
        let mut clock = arrive.max(ready) + service;
        let mut feasible = true;
        let mut prev: Option<OrderIdx> = None;
        for &o in orders {
            let job = &cache.jobs[cache.pos(o)];
            clock += match prev {
                None => job.legs[vehicle.index()],
                Some(p) => {
                    let inst = problem.instance;
                    travel_time_s(inst.order(p).dropoff, inst.order(o).dropoff, vehicle)
                }
            } + job.dropoff_service;
            feasible &= clock <= job.deadline;
            prev = Some(o);
        }
        feasible &= clock <= cache.off_time(slot);
        let last = *orders.last().expect("non-empty");
        let next = match problem.idle {
            IdlePosition::LastDropoff => WalkState {
                anchor: Anchor::Dropoff(cache.pos(last)),
                available_from: clock,
            },
            IdlePosition::ReturnToStart => {
                let inst = problem.instance;
                let c = inst.courier(problem.couriers()[slot].courier);
                WalkState {
                    anchor: Anchor::Start,
                    available_from: clock + travel_time_s(inst.order(last).dropoff, c.start_location, vehicle),
                }
            }
        };
        Timed {
            routing: clock - depart,
            next,
            feasible,
        }
    }

    fn snapshot_state(&self, slot: usize) -> WalkState {
        WalkState {
            anchor: Anchor::Snapshot,
            available_from: self.problem.couriers()[slot].available_from,
        }
    }

    /// Greedy bundling walk over `seq[from..]` starting in `st`; `on_block`
    /// sees each block start with the state and cost accumulated before it.
    fn bundled_from(
        &self,
        slot: usize,
        seq: &[OrderIdx],
        from: usize,
        mut st: WalkState,
        mut on_block: impl FnMut(usize, usize, WalkState, Seconds),
    ) -> Option<Seconds> {
        let cache = self.cache;
        let restaurant = |o: OrderIdx| cache.jobs[cache.pos(o)].restaurant;
        let mut total = 0;
        let mut i = from;
        while i < seq.len() {
            let mut route: ArrayVec<OrderIdx, MAX_BUNDLE> = ArrayVec::new();
            route.push(seq[i]);
            let mut timed = self.time_route(slot, st, &route);
            let mut j = i + 1;
            while j < seq.len() && !route.is_full() && restaurant(seq[j]) == restaurant(seq[i]) {
                let mut merged = route.clone();
                merged.push(seq[j]);
                merged.sort_by_key(|&o| (cache.jobs[cache.pos(o)].deadline, o));
                let t = self.time_route(slot, st, &merged);
                if !t.feasible {
                    break;
                }
                route = merged;
                timed = t;
                j += 1;
            }
            if !timed.feasible {
                return None;
            }
            on_block(i, j, st, total);
            total += timed.routing;
            st = timed.next;
            i = j;
        }
        Some(total)
    }

    fn bundled(&self, slot: usize, seq: &[OrderIdx]) -> Option<Seconds> {
        self.bundled_from(slot, seq, 0, self.snapshot_state(slot), |_, _, _, _| {})
    }

    /// Records where the bundled walk of `seq` can be resumed.
    pub fn checkpoints(&self, slot: usize, seq: &[OrderIdx], cp: &mut Checkpoints) {
        cp.blocks.clear();
        cp.block_of.clear();
        cp.block_of.resize(seq.len(), 0);
        let walked = self.bundled_from(slot, seq, 0, self.snapshot_state(slot), |start, end, st, cost| {
            cp.block_of[start..end].fill(cp.blocks.len());
            cp.blocks.push(Block {
                start,
                end,
                state: st,
                cost,
            });
        });
        cp.bundled = walked.is_some();
    }

    /// `cost` of `seq`, which differs from the sequence behind `cp` only at
    /// position `i`.
    pub fn cost_replacing(&self, slot: usize, seq: &[OrderIdx], i: usize, cp: &Checkpoints) -> Option<Seconds> {
        if !cp.bundled || i == 0 {
            return self.cost(slot, seq);
        }
        let cache = self.cache;
        let restaurant = |o: OrderIdx| cache.jobs[cache.pos(o)].restaurant;
        // The block holding position i - 1 is untouched unless it could
        // reach the new order.
        let prev = &cp.blocks[cp.block_of[i - 1]];
        let resume = if prev.end == i
            && (prev.end - prev.start == MAX_BUNDLE || restaurant(seq[i]) != restaurant(seq[prev.start]))
        {
            &cp.blocks[cp.block_of[i]]
        } else {
            prev
        };
        self.bundled_from(slot, seq, resume.start, resume.state, |_, _, _, _| {})
            .map(|c| c + resume.cost)
            .or_else(|| self.singletons(slot, seq))
    }

    fn singletons(&self, slot: usize, seq: &[OrderIdx]) -> Option<Seconds> {
        let mut st = self.snapshot_state(slot);
        let mut total = 0;
        for &o in seq {
            let t = self.time_route(slot, st, &[o]);
            if !t.feasible {
                return None;
            }
            total += t.routing;
            st = t.next;
        }
        Some(total)
    }

    /// Routing time of courier `slot` serving `seq`, `None` if infeasible.
    pub fn cost(&self, slot: usize, seq: &[OrderIdx]) -> Option<Seconds> {
        self.bundled(slot, seq).or_else(|| self.singletons(slot, seq))
    }
}
