//! Order lifecycle event log (JSON lines) and its post-hoc validator.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::Seconds;
use crate::model::{CourierIdx, Instance, OrderIdx, RestaurantIdx};
use crate::schedule::MAX_BUNDLE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Placed,
    Assigned,
    PickedUp,
    Delivered,
    Abandoned,
}

/// One order lifecycle transition. `courier` and `route` are set for
/// `assigned`, `picked_up` and `delivered`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub time: Seconds,
    pub event: EventKind,
    pub order: String,
    pub courier: Option<String>,
    pub route: Option<u32>,
}

pub fn write_event_log<W: Write>(mut out: W, events: &[Event]) -> io::Result<()> {
    for e in events {
        serde_json::to_writer(&mut out, e)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn event_log_string(events: &[Event]) -> String {
    let mut buf = Vec::new();
    write_event_log(&mut buf, events).expect("writing to memory");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

#[derive(Debug, Error)]
pub enum ReadLogError {
    #[error("line {line}: {source}")]
    Json { line: usize, source: serde_json::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn read_event_log<R: BufRead>(input: R) -> Result<Vec<Event>, ReadLogError> {
    let mut events = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        events.push(serde_json::from_str(&line).map_err(|source| ReadLogError::Json { line: i + 1, source })?);
    }
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogViolation {
    #[error("event for unknown order `{0}`")]
    UnknownOrder(String),
    #[error("event for unknown courier `{0}`")]
    UnknownCourier(String),
    #[error("order `{order}`: {kind:?} event without courier or route")]
    MissingCourier { order: String, kind: EventKind },
    #[error("order `{order}`: {kind:?} recorded {count} times")]
    Repeated {
        order: String,
        kind: EventKind,
        count: usize,
    },
    #[error("order `{order}` is neither delivered nor abandoned")]
    Unresolved { order: String },
    #[error("order `{order}` is both delivered and abandoned")]
    DoublyResolved { order: String },
    #[error("order `{order}`: lifecycle out of order ({detail})")]
    Sequence { order: String, detail: String },
    #[error("order `{order}` delivered at {time} after its deadline {deadline}")]
    Deadline {
        order: String,
        time: Seconds,
        deadline: Seconds,
    },
    #[error("order `{order}` picked up at {time} before it was ready at {ready}")]
    NotReady {
        order: String,
        time: Seconds,
        ready: Seconds,
    },
    #[error("courier `{courier}` works on order `{order}` at {time} outside its shift")]
    Shift {
        courier: String,
        order: String,
        time: Seconds,
    },
    #[error("route {route} carries {count} orders")]
    Oversized { route: u32, count: usize },
    #[error("route {route} mixes restaurants")]
    MixedRestaurants { route: u32 },
    #[error("route {route} is split across couriers or pickup times")]
    SplitRoute { route: u32 },
    #[error("courier `{courier}`: route {second} starts at {start} before route {first} ends at {end}")]
    Overlap {
        courier: String,
        first: u32,
        second: u32,
        start: Seconds,
        end: Seconds,
    },
}

/// Counts established by a clean log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LogSummary {
    pub delivered: usize,
    pub abandoned: usize,
    pub routes: usize,
    pub couriers_used: usize,
}

#[derive(Debug, Default)]
struct OrderTrail {
    placed: Vec<Seconds>,
    assigned: Vec<(Seconds, CourierIdx, u32)>,
    picked_up: Vec<(Seconds, CourierIdx, u32)>,
    delivered: Vec<(Seconds, CourierIdx, u32)>,
    abandoned: Vec<Seconds>,
}

#[derive(Debug)]
struct RouteTrail {
    courier: CourierIdx,
    restaurant: RestaurantIdx,
    orders: usize,
    pickup: Seconds,
    end: Seconds,
    split: bool,
}

/// Re-checks a log against the instance using only the recorded timestamps:
/// conservation, lifecycle order, ready times, deadlines, shifts, bundle
/// limits and courier overlaps. Returns every violation found.
pub fn validate_event_log(events: &[Event], instance: &Instance) -> Result<LogSummary, Vec<LogViolation>> {
    let mut violations = Vec::new();
    let mut trails: Vec<OrderTrail> = instance.orders().iter().map(|_| OrderTrail::default()).collect();

    for e in events {
        let Some(o) = instance.find_order(&e.order) else {
            violations.push(LogViolation::UnknownOrder(e.order.clone()));
            continue;
        };
        let trail = &mut trails[o.index()];
        match e.event {
            EventKind::Placed => trail.placed.push(e.time),
            EventKind::Abandoned => trail.abandoned.push(e.time),
            kind => {
                let (Some(cid), Some(route)) = (&e.courier, e.route) else {
                    violations.push(LogViolation::MissingCourier {
                        order: e.order.clone(),
                        kind,
                    });
                    continue;
                };
                let Some(c) = instance.find_courier(cid) else {
                    violations.push(LogViolation::UnknownCourier(cid.clone()));
                    continue;
                };
                let entry = (e.time, c, route);
                match kind {
                    EventKind::Assigned => trail.assigned.push(entry),
                    EventKind::PickedUp => trail.picked_up.push(entry),
                    _ => trail.delivered.push(entry),
                }
            }
        }
    }

    let mut routes: BTreeMap<u32, RouteTrail> = BTreeMap::new();
    let mut summary = LogSummary::default();
    for (i, trail) in trails.iter().enumerate() {
        let o = OrderIdx::from(i);
        let order = instance.order(o);
        let name = || order.id.clone();
        let lists = [
            (EventKind::Placed, trail.placed.len()),
            (EventKind::Assigned, trail.assigned.len()),
            (EventKind::PickedUp, trail.picked_up.len()),
            (EventKind::Delivered, trail.delivered.len()),
            (EventKind::Abandoned, trail.abandoned.len()),
        ];
        for (kind, count) in lists {
            if count > 1 {
                violations.push(LogViolation::Repeated {
                    order: name(),
                    kind,
                    count,
                });
            }
        }
        let placed = trail.placed.first().copied();
        if placed.is_none() {
            violations.push(LogViolation::Repeated {
                order: name(),
                kind: EventKind::Placed,
                count: 0,
            });
        }
        match (trail.delivered.first(), trail.abandoned.first()) {
            (Some(_), Some(_)) => violations.push(LogViolation::DoublyResolved { order: name() }),
            (None, None) => violations.push(LogViolation::Unresolved { order: name() }),
            (None, Some(&t)) => {
                summary.abandoned += 1;
                if !trail.assigned.is_empty() || !trail.picked_up.is_empty() {
                    violations.push(LogViolation::Sequence {
                        order: name(),
                        detail: "abandoned after assignment".into(),
                    });
                }
                if placed.is_some_and(|p| t < p) {
                    violations.push(LogViolation::Sequence {
                        order: name(),
                        detail: "abandoned before placement".into(),
                    });
                }
            }
            (Some(&(t_del, c, route)), None) => {
                summary.delivered += 1;
                let (Some(&(t_asg, c_asg, r_asg)), Some(&(t_pick, c_pick, r_pick))) =
                    (trail.assigned.first(), trail.picked_up.first())
                else {
                    violations.push(LogViolation::Sequence {
                        order: name(),
                        detail: "delivered without assignment and pickup".into(),
                    });
                    continue;
                };
                if c_asg != c || c_pick != c || r_asg != route || r_pick != route {
                    violations.push(LogViolation::Sequence {
                        order: name(),
                        detail: "courier or route changes between events".into(),
                    });
                }
                if !(placed.unwrap_or(t_asg) <= t_asg && t_asg <= t_pick && t_pick <= t_del) {
                    violations.push(LogViolation::Sequence {
                        order: name(),
                        detail: format!("placed {placed:?}, assigned {t_asg}, picked up {t_pick}, delivered {t_del}"),
                    });
                }
                if t_pick < order.ready_time {
                    violations.push(LogViolation::NotReady {
                        order: name(),
                        time: t_pick,
                        ready: order.ready_time,
                    });
                }
                if t_del > order.deadline {
                    violations.push(LogViolation::Deadline {
                        order: name(),
                        time: t_del,
                        deadline: order.deadline,
                    });
                }
                let courier = instance.courier(c);
                for t in [t_asg, t_pick, t_del] {
                    if t < courier.on_time || t > courier.off_time {
                        violations.push(LogViolation::Shift {
                            courier: courier.id.clone(),
                            order: name(),
                            time: t,
                        });
                        break;
                    }
                }
                let restaurant = instance.restaurant_of(o);
                let r = routes.entry(route).or_insert(RouteTrail {
                    courier: c,
                    restaurant,
                    orders: 0,
                    pickup: t_pick,
                    end: t_del,
                    split: false,
                });
                r.orders += 1;
                r.end = r.end.max(t_del);
                r.split |= r.courier != c || r.pickup != t_pick;
                if r.restaurant != restaurant {
                    violations.push(LogViolation::MixedRestaurants { route });
                }
            }
        }
    }

    let mut by_courier: BTreeMap<CourierIdx, Vec<(Seconds, Seconds, u32)>> = BTreeMap::new();
    for (&id, r) in &routes {
        if r.orders > MAX_BUNDLE {
            violations.push(LogViolation::Oversized {
                route: id,
                count: r.orders,
            });
        }
        if r.split {
            violations.push(LogViolation::SplitRoute { route: id });
        }
        by_courier.entry(r.courier).or_default().push((r.pickup, r.end, id));
    }
    for (c, mut spans) in by_courier.into_iter() {
        spans.sort_unstable();
        for w in spans.windows(2) {
            let ((_, end, first), (start, _, second)) = (w[0], w[1]);
            if start < end {
                violations.push(LogViolation::Overlap {
                    courier: instance.courier(c).id.clone(),
                    first,
                    second,
                    start,
                    end,
                });
            }
        }
        summary.couriers_used += 1;
    }
    summary.routes = routes.len();

    if violations.is_empty() {
        Ok(summary)
    } else {
        Err(violations)
    }
}
