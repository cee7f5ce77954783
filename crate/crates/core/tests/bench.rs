mod common;

use std::path::PathBuf;

use arrayvec::ArrayVec;
use common::{courier, order, pt, restaurant};
use mdrp_core::bench::{
    calibrate, compare, comparison_table, compensation, compute_metrics, format_gap, gap_percent, gap_percent_raw,
    read_metrics_csv, write_calibration_csv, write_comparison_csv, write_metrics_csv, CalibrationError,
    CalibrationGrid, GapError, MetricsRow, Pay,
};
use mdrp_core::generator::{generate_instance, GeneratorParams};
use mdrp_core::schedule::DropEvent;
use mdrp_core::sim::{CommittedRoute, SimConfig, SimResult};
use mdrp_core::{CourierIdx, Instance, OrderIdx, Route, RouteSchedule, VehicleKind};

fn reference(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/reference")
        .join(name)
}

#[test]
fn gap_matches_published_examples() {
    assert_eq!(format_gap(gap_percent(54725, 55290).unwrap()), "-1.02");
    assert_eq!(format_gap(gap_percent(57347, 57347).unwrap()), "0.00");
    assert_eq!(format_gap(gap_percent(2878, 2879).unwrap()), "-0.03");
    assert_eq!(format_gap(gap_percent(24114, 24277).unwrap()), "-0.67");
    assert_eq!(gap_percent(10, 0), Err(GapError));
    assert_eq!(gap_percent_raw(10, 0), Err(GapError));
    assert_eq!(gap_percent(110, 100).unwrap(), 10.0);
}

#[test]
fn gap_cuts_toward_zero() {
    // 821 vs 829: -0.9650...% is published as -0.96.
    let raw = gap_percent_raw(821, 829).unwrap();
    assert!((raw + 0.96501).abs() < 1e-4);
    assert_eq!(gap_percent(821, 829).unwrap(), -0.96);
    assert_eq!(gap_percent(1001, 1000).unwrap(), 0.1);
    assert_eq!(format_gap(gap_percent(99_999, 100_000).unwrap()), "0.00");
}

#[test]
fn every_published_gap_is_reproduced() {
    let baseline = read_metrics_csv(std::fs::File::open(reference("baseline.csv")).unwrap()).unwrap();
    let text = std::fs::read_to_string(reference("grasp.csv")).unwrap();
    let candidate = read_metrics_csv(text.as_bytes()).unwrap();
    let published: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(published.len(), 22);
    let rows = compare(&baseline, &candidate).unwrap();
    for (row, want) in rows.iter().zip(&published) {
        assert!(
            (row.gap_percent - want).abs() <= 0.005,
            "instance {}",
            row.baseline.instance
        );
    }
    let mut out = Vec::new();
    write_comparison_csv(&mut out, &rows).unwrap();
    let regenerated = String::from_utf8(out).unwrap();
    for (a, b) in regenerated.lines().zip(text.lines()).skip(1) {
        assert_eq!(a.rsplit(',').next(), b.rsplit(',').next());
    }
}

fn route(inst: &Instance, c: u32, o: u32, depart: i64, complete: i64) -> CommittedRoute {
    let mut drops = ArrayVec::new();
    drops.push(DropEvent {
        order: OrderIdx(o),
        arrive: complete,
        complete,
    });
    CommittedRoute {
        id: o,
        assigned_at: depart,
        route: Route::singleton(inst, OrderIdx(o)),
        schedule: RouteSchedule {
            courier: CourierIdx(c),
            depart,
            arrive_restaurant: depart,
            pickup_begin: depart,
            pickup_end: depart,
            drops,
        },
    }
}

fn result_with(routes: Vec<CommittedRoute>, orders: usize, couriers: usize) -> SimResult {
    SimResult {
        orders,
        available_couriers: couriers,
        routes,
        abandoned: Vec::new(),
        events: Vec::new(),
        epochs: 0,
        solver_calls: 0,
    }
}

fn three_order_instance() -> Instance {
    let to = pt(4.61, -74.08);
    Instance::new(
        vec![restaurant("r", pt(4.60, -74.08))],
        vec![
            courier("a", VehicleKind::Car, to, 0, 80_000),
            courier("b", VehicleKind::Car, to, 0, 80_000),
        ],
        (1..=5).map(|i| order(&format!("o{i}"), "r", to, 0, 80_000)).collect(),
    )
    .unwrap()
}

#[test]
fn metrics_follow_their_definitions() {
    let inst = three_order_instance();
    let empty = compute_metrics("e", &result_with(Vec::new(), 0, 0));
    assert_eq!(
        (
            empty.orders,
            empty.available_couriers,
            empty.couriers_used,
            empty.orders_fulfilled
        ),
        (0, 0, 0, 0)
    );
    assert_eq!(empty.routing_time_min, 0.0);

    let one = compute_metrics("one", &result_with(vec![route(&inst, 0, 0, 100, 1300)], 5, 2));
    assert_eq!(one.routing_time_min, 20.0);
    assert_eq!((one.couriers_used, one.orders_fulfilled), (1, 1));

    let same_courier = vec![
        route(&inst, 1, 0, 0, 600),
        route(&inst, 1, 1, 600, 1200),
        route(&inst, 1, 2, 1200, 1800),
    ];
    let m = compute_metrics("cu", &result_with(same_courier, 5, 2));
    assert_eq!((m.couriers_used, m.orders_fulfilled), (1, 3));
    assert_eq!(m.routing_time_min, 30.0);
    assert!(m.couriers_used <= m.available_couriers && m.orders_fulfilled <= m.orders);
}

#[test]
fn compensation_is_linear_in_pay() {
    let inst = three_order_instance();
    assert_eq!(compensation(&[], Pay::default()), 0.0);
    let five: Vec<_> = (0..5).map(|o| route(&inst, o % 2, o, 0, 600)).collect();
    assert_eq!(compensation(&five, Pay::default()), 5.0);
    let pay = Pay {
        base_per_order: 2.5,
        variable_per_order: 0.75,
    };
    let double = Pay {
        base_per_order: 5.0,
        variable_per_order: 1.5,
    };
    assert_eq!(compensation(&five, double), 2.0 * compensation(&five, pay));
}

#[test]
fn metrics_csv_round_trips_and_is_stable() {
    let rows = vec![
        MetricsRow {
            instance: "day-1".into(),
            orders: 120,
            available_couriers: 30,
            couriers_used: 21,
            orders_fulfilled: 117,
            routing_time_min: 1234.5,
            total_compensation: None,
        },
        MetricsRow {
            instance: "day-2".into(),
            orders: 80,
            available_couriers: 20,
            couriers_used: 20,
            orders_fulfilled: 80,
            routing_time_min: 1.0 / 3.0,
            total_compensation: None,
        },
    ];
    let mut a = Vec::new();
    write_metrics_csv(&mut a, &rows).unwrap();
    let text = String::from_utf8(a.clone()).unwrap();
    assert_eq!(
        text,
        "instance,orders,available_couriers,cu,of,routing_time_min\nday-1,120,30,21,117,1234.50\nday-2,80,20,20,80,0.33\n"
    );
    let back = read_metrics_csv(text.as_bytes()).unwrap();
    let mut b = Vec::new();
    write_metrics_csv(&mut b, &back).unwrap();
    assert_eq!(a, b);
    assert!(read_metrics_csv("name,orders\nx,1\n".as_bytes()).is_err());
}

#[test]
fn comparison_pairs_by_label_and_renders_a_table() {
    let row = |label: &str, of: usize| MetricsRow {
        instance: label.into(),
        orders: 100,
        available_couriers: 10,
        couriers_used: 8,
        orders_fulfilled: of,
        routing_time_min: 500.0,
        total_compensation: None,
    };
    let rows = compare(&[row("a", 90), row("b", 95)], &[row("b", 100), row("a", 90)]).unwrap();
    assert_eq!(rows[0].baseline.instance, "a");
    assert_eq!(rows[0].gap_percent, 0.0);
    assert_eq!(rows[1].gap_percent, -5.0);
    assert_eq!(rows[1].routing_gap_percent, Some(0.0));
    let table = comparison_table(&rows, "base", "grasp");
    assert_eq!(table.lines().count(), 4);
    assert!(table.lines().nth(3).unwrap().trim_end().ends_with("-5.00"));
    assert!(compare(&[row("a", 90)], &[row("z", 90)]).is_err());
    assert!(compare(&[row("a", 90)], &[row("a", 0)]).is_err());
}

#[test]
fn default_calibration_grid() {
    let g = CalibrationGrid::default();
    assert_eq!(g.alphas.len(), 11);
    assert_eq!(g.alphas[7], 0.7);
    assert_eq!(g.alphas[10], 1.0);
    assert_eq!(g.iterations, vec![500, 1000, 1500, 2000]);
}

#[test]
fn calibration_runs_every_cell_in_grid_order() {
    let inst = generate_instance(&GeneratorParams {
        n_orders: 30,
        n_couriers: 6,
        n_restaurants: 5,
        seed: 4,
        ..GeneratorParams::default()
    })
    .unwrap();
    let grid = CalibrationGrid {
        alphas: vec![0.3],
        iterations: vec![20],
    };
    let single = calibrate(&inst, &grid, 1, 0, &SimConfig::default()).unwrap();
    assert_eq!(single.cells.len(), 1);
    assert_eq!(single.runs.len(), 1);

    let grid = CalibrationGrid {
        alphas: vec![0.0, 0.5],
        iterations: vec![5, 10],
    };
    let cal = calibrate(&inst, &grid, 2, 7, &SimConfig::default()).unwrap();
    let order: Vec<_> = cal
        .runs
        .iter()
        .map(|r| (r.alpha, r.iterations, r.replication))
        .collect();
    assert_eq!(order[..3], [(0.0, 5, 0), (0.0, 5, 1), (0.0, 10, 0)]);
    assert_eq!(cal.cells.len(), 4);
    let cell = cal.cell(0.5, 10).unwrap();
    let runs: Vec<_> = cal
        .runs
        .iter()
        .filter(|r| r.alpha == 0.5 && r.iterations == 10)
        .collect();
    assert_eq!(cell.mean_of, (runs[0].of + runs[1].of) as f64 / 2.0);
    assert!(cal.best_mean_of() >= cell.mean_of);

    let mut out = Vec::new();
    write_calibration_csv(&mut out, &cal).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text.starts_with("alpha,iterations,replication,of,runtime_s\n0.0,5,0,"));
    assert_eq!(text.lines().count(), 9);

    let empty = CalibrationGrid {
        alphas: vec![],
        iterations: vec![5],
    };
    assert!(matches!(
        calibrate(&inst, &empty, 1, 0, &SimConfig::default()),
        Err(CalibrationError::EmptyGrid)
    ));
}
