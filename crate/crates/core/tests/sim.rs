mod common;

use common::{courier, order, pt, restaurant};
use mdrp_core::generator::{generate_instance, GeneratorParams};
use mdrp_core::sim::{
    read_event_log, simulate_day, validate_event_log, EventKind, LogViolation, OrderStatus, SimConfig, SimState,
};
use mdrp_core::solver::{LocalSearchMode, ObjectiveMode};
use mdrp_core::{Courier, Instance, OrderIdx, Seconds, SolverConfig, VehicleKind};

fn quick(iterations: u32, seed: u64) -> SimConfig {
    SimConfig {
        solver: SolverConfig {
            iterations,
            seed,
            ..SolverConfig::default()
        },
        ..SimConfig::default()
    }
}

fn small_day(n_orders: usize, n_couriers: usize, seed: u64) -> Instance {
    generate_instance(&GeneratorParams {
        n_orders,
        n_couriers,
        n_restaurants: (n_orders / 5).max(1),
        seed,
        ..GeneratorParams::default()
    })
    .unwrap()
}

/// Great-circle distance written out independently of the library.
fn km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (p1, p2) = (a.0.to_radians(), b.0.to_radians());
    let dp = p2 - p1;
    let dl = (b.1 - a.1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * 6371.0 * h.sqrt().asin()
}

fn secs(km: f64, kmh: f64) -> Seconds {
    (km * 3600.0 / kmh).ceil() as Seconds
}

#[test]
fn empty_instance_gives_zero_result() {
    let result = simulate_day(&Instance::empty(), &SimConfig::default()).unwrap();
    assert_eq!(result.fulfilled(), 0);
    assert_eq!(result.couriers_used(), 0);
    assert_eq!(result.routing_time_s(), 0);
    assert!(result.events.is_empty());
    assert_eq!(result.epochs, 0);
}

#[test]
fn single_order_is_served_at_the_first_epoch_after_placement() {
    let (r, d) = ((4.60, -74.08), (4.62, -74.07));
    let mut o = order("o1", "r", pt(d.0, d.1), 200, 5000);
    o.placement_time = 100;
    o.prep_start_time = 100;
    o.pickup_service = 60;
    o.dropoff_service = 60;
    let inst = Instance::new(
        vec![restaurant("r", pt(r.0, r.1))],
        vec![courier("c1", VehicleKind::Car, pt(r.0, r.1), 0, 80_000)],
        vec![o],
    )
    .unwrap();
    let result = simulate_day(&inst, &quick(10, 0)).unwrap();
    assert_eq!(result.fulfilled(), 1);
    assert_eq!(result.couriers_used(), 1);

    // Admitted at clock 120, courier already at the restaurant, food ready at 200.
    let complete = 200 + 60 + secs(km(r, d), 15.0) + 60;
    let s = &result.routes[0].schedule;
    assert_eq!((s.depart, s.pickup_begin, s.completion()), (120, 200, complete));
    assert_eq!(result.routing_time_s(), complete - 120);
    let kinds: Vec<_> = result.events.iter().map(|e| (e.time, e.event)).collect();
    assert_eq!(
        kinds,
        vec![
            (100, EventKind::Placed),
            (120, EventKind::Assigned),
            (260, EventKind::PickedUp),
            (complete, EventKind::Delivered),
        ]
    );
    assert_eq!(validate_event_log(&result.events, &inst).unwrap().delivered, 1);
}

#[test]
fn quiet_epoch_only_moves_the_clock() {
    let inst = small_day(10, 3, 1);
    let mut state = SimState::new(&inst);
    let report = state.step(&quick(10, 0)).unwrap();
    assert_eq!(state.clock(), 120);
    assert_eq!((report.admitted, report.released, report.abandoned), (0, 0, 0));
    assert!(!report.solver_called);
    assert!(state.active_routes().is_empty() && state.pending().next().is_none());
}

#[test]
fn unreachable_order_is_abandoned_without_assignment() {
    // Walking courier 10 km away: two hours before it can even reach the food.
    let far = (4.69, -74.08);
    let r = (4.60, -74.08);
    let inst = Instance::new(
        vec![restaurant("r", pt(r.0, r.1))],
        vec![courier("c1", VehicleKind::Walking, pt(far.0, far.1), 0, 80_000)],
        vec![order("o1", "r", pt(4.601, -74.08), 0, 3600)],
    )
    .unwrap();
    assert!(secs(km(far, r), 5.0) > 3600);
    let mut state = SimState::new(&inst);
    let report = state.step(&quick(10, 0)).unwrap();
    assert_eq!(report.abandoned, 1);
    assert_eq!(state.status(OrderIdx(0)), OrderStatus::Abandoned);
    let result = simulate_day(&inst, &quick(10, 0)).unwrap();
    assert_eq!(result.abandoned, vec![(OrderIdx(0), 0)]);
    assert!(result.events.iter().all(|e| e.event != EventKind::Assigned));
}

#[test]
fn busy_courier_keeps_an_order_alive_until_it_is_free() {
    let r = (4.60, -74.08);
    let mut late = order("o2", "r", pt(4.601, -74.08), 120, 6000);
    late.placement_time = 120;
    late.prep_start_time = 120;
    let inst = Instance::new(
        vec![restaurant("r", pt(r.0, r.1))],
        vec![courier("c1", VehicleKind::Car, pt(r.0, r.1), 0, 80_000)],
        vec![order("o1", "r", pt(4.625, -74.08), 0, 2000), late],
    )
    .unwrap();
    let config = quick(10, 0);
    let mut state = SimState::new(&inst);
    state.step(&config).unwrap();
    assert_eq!(state.status(OrderIdx(0)), OrderStatus::Active);
    let first_done = state.active_routes()[0].schedule.completion();
    assert!(first_done > 240);
    let report = state.step(&config).unwrap();
    assert_eq!((report.admitted, report.abandoned), (1, 0));
    assert!(!report.solver_called, "the only courier is mid-route");
    assert_eq!(state.status(OrderIdx(1)), OrderStatus::Pending);
    while !state.is_finished() {
        state.step(&config).unwrap();
    }
    let result = state.into_result();
    assert_eq!(result.fulfilled(), 2);
    let second = &result.routes[1];
    assert!(second.assigned_at >= first_done);
    assert_eq!(second.assigned_at % 120, 0);
}

fn assert_clean(inst: &Instance, config: &SimConfig) -> mdrp_core::sim::SimResult {
    let result = simulate_day(inst, config).unwrap();
    let summary = validate_event_log(&result.events, inst).unwrap_or_else(|v| panic!("{v:#?}"));
    assert_eq!(summary.delivered + summary.abandoned, inst.orders().len());
    assert_eq!(summary.delivered, result.fulfilled());
    assert_eq!(summary.abandoned, result.abandoned.len());
    assert_eq!(summary.couriers_used, result.couriers_used());
    result
}

#[test]
fn fifty_order_day_conserves_orders_and_meets_deadlines() {
    let inst = small_day(50, 12, 5);
    let result = assert_clean(&inst, &quick(100, 0));
    assert!(result.fulfilled() > 25, "fulfilled {}", result.fulfilled());
    for r in &result.routes {
        for d in &r.schedule.drops {
            assert!(d.complete <= inst.order(d.order).deadline);
        }
    }
}

#[test]
fn literal_modes_and_return_to_start_stay_feasible() {
    let inst = small_day(80, 15, 9);
    for (ls, obj, back) in [
        (LocalSearchMode::OnePass, ObjectiveMode::Lexicographic, false),
        (LocalSearchMode::FullDescent, ObjectiveMode::CostOnly, false),
        (LocalSearchMode::FullDescent, ObjectiveMode::Lexicographic, true),
    ] {
        let mut config = quick(40, 2);
        config.solver.local_search = ls;
        config.solver.objective = obj;
        config.return_to_start = back;
        assert_clean(&inst, &config);
    }
}

#[test]
fn runs_are_reproducible_serial_and_parallel() {
    let inst = small_day(60, 12, 11);
    let config = quick(60, 4);
    let a = simulate_day(&inst, &config).unwrap();
    let b = simulate_day(&inst, &config).unwrap();
    assert_eq!(a, b);
    let mut par = config.clone();
    par.solver.parallel = true;
    let c = simulate_day(&inst, &par).unwrap();
    assert_eq!(a.event_log(), c.event_log());
}

#[test]
fn event_log_round_trips_through_json_lines() {
    let inst = small_day(20, 5, 2);
    let result = simulate_day(&inst, &quick(20, 0)).unwrap();
    let text = result.event_log();
    assert_eq!(text.lines().count(), result.events.len());
    let first = text.lines().next().unwrap();
    assert!(first.starts_with(r#"{"time":"#) && first.contains(r#""event":"placed""#));
    assert_eq!(read_event_log(text.as_bytes()).unwrap(), result.events);
    assert!(result.events.windows(2).all(|w| w[0].time <= w[1].time));
}

#[test]
fn validator_flags_tampered_logs() {
    let inst = small_day(40, 10, 3);
    let result = simulate_day(&inst, &quick(30, 0)).unwrap();
    let delivered = result
        .events
        .iter()
        .position(|e| e.event == EventKind::Delivered)
        .unwrap();

    let mut late = result.events.clone();
    let o = inst.find_order(&late[delivered].order).unwrap();
    late[delivered].time = inst.order(o).deadline + 1;
    let errs = validate_event_log(&late, &inst).unwrap_err();
    assert!(errs.iter().any(|v| matches!(v, LogViolation::Deadline { .. })));

    let mut lost = result.events.clone();
    lost.remove(delivered);
    let errs = validate_event_log(&lost, &inst).unwrap_err();
    assert!(errs.iter().any(|v| matches!(v, LogViolation::Unresolved { .. })));

    // Fold every route of one courier into its first route id.
    let mut merged = result.events.clone();
    let c = merged[delivered].courier.clone();
    let target = merged[delivered].route;
    for e in merged.iter_mut().filter(|e| e.courier == c) {
        e.route = target;
    }
    let errs = validate_event_log(&merged, &inst);
    let routes_of_c: std::collections::BTreeSet<_> = result
        .events
        .iter()
        .filter(|e| e.courier == c)
        .map(|e| e.route)
        .collect();
    if routes_of_c.len() > 1 {
        assert!(errs.is_err());
    }

    // Two couriers' routes swapped onto one courier overlap in time.
    let mut busy = result.events.clone();
    let couriers: std::collections::BTreeSet<_> = busy.iter().filter_map(|e| e.courier.clone()).collect();
    let first = couriers.iter().next().unwrap().clone();
    for e in busy.iter_mut().filter(|e| e.courier.is_some()) {
        e.courier = Some(first.clone());
    }
    let errs = validate_event_log(&busy, &inst).unwrap_err();
    assert!(errs
        .iter()
        .any(|v| matches!(v, LogViolation::Overlap { .. } | LogViolation::Shift { .. })));
}

#[test]
fn tiny_time_budget_still_commits_work() {
    let inst = small_day(40, 10, 8);
    let mut config = quick(100_000, 0);
    config.solver.time_budget = Some(std::time::Duration::from_millis(1));
    let result = assert_clean(&inst, &config);
    assert!(result.fulfilled() > 0);
}

#[test]
fn another_courier_never_lowers_fulfilment_under_pure_greedy() {
    let mut checked = 0;
    for seed in 0..12 {
        let base = small_day(30, 4, seed);
        let extra = small_day(30, 5, seed + 100).couriers()[0].clone();
        let mut couriers: Vec<Courier> = base.couriers().to_vec();
        couriers.push(Courier {
            id: "zz-extra".into(),
            ..extra
        });
        let bigger = Instance::new(base.restaurants().to_vec(), couriers, base.orders().to_vec()).unwrap();
        let mut config = quick(1, 0);
        config.solver.alpha = 0.0;
        let before = simulate_day(&base, &config).unwrap().fulfilled();
        let after = simulate_day(&bigger, &config).unwrap().fulfilled();
        assert!(after >= before, "seed {seed}: {before} -> {after}");
        checked += 1;
    }
    assert_eq!(checked, 12);
}
