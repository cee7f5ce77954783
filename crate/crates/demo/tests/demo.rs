#[path = "../../core/tests/common/oracle.rs"]
#[allow(dead_code)]
mod oracle;

use mdrp_core::solver::ObjectiveMode;
use mdrp_core::{grasp, DispatchProblem, IdlePosition, Instance, SolverConfig};
use mdrp_demo::{generate_town, solve_town, sweep_town, Solved, SweepPoint, Town};

fn town(params: &str) -> (String, Town) {
    let json = generate_town(params).unwrap();
    let town = serde_json::from_str(&json).unwrap();
    (json, town)
}

fn instance(t: &Town) -> Instance {
    Instance::new(t.restaurants.clone(), t.couriers.clone(), t.orders.clone()).unwrap()
}

#[test]
fn generate_fills_defaults_and_is_deterministic() {
    let (a, t) = town("{}");
    assert_eq!((t.orders.len(), t.couriers.len(), t.restaurants.len()), (30, 6, 4));
    assert!(t.orders.iter().all(|o| o.placement_time <= t.dispatch_time));
    assert_eq!(a, generate_town("{}").unwrap());
    assert_ne!(a, generate_town(r#"{"seed": 2}"#).unwrap());
    let (_, small) = town(r#"{"orders": 5, "couriers": 2, "restaurants": 1}"#);
    assert_eq!((small.orders.len(), small.couriers.len()), (5, 2));
}

#[test]
fn bad_requests_are_errors_not_panics() {
    let (json, _) = town("{}");
    assert!(generate_town(r#"{"orderz": 3}"#).is_err());
    assert!(generate_town("not json").is_err());
    assert!(solve_town(&json, r#"{"alpha": 1.5}"#).is_err());
    assert!(solve_town(&json, r#"{"iterations": 0}"#).is_err());
    assert!(solve_town("{}", "{}").is_err());
    assert!(sweep_town(&json, r#"{"alphas": [0.5, -1]}"#).is_err());
    let broken = json.replacen("\"lat\":", "\"lat\":9", 1);
    assert!(solve_town(&broken, "{}").is_err());
}

#[test]
fn solve_reports_a_consistent_plan() {
    let (json, t) = town(r#"{"orders": 40, "couriers": 5, "seed": 3}"#);
    let out: Solved = serde_json::from_str(&solve_town(&json, r#"{"iterations": 50, "seed": 9}"#).unwrap()).unwrap();
    assert_eq!(out.trace.len(), 50);
    assert_eq!(out.trace.last(), Some(&out.objective));

    let mut seen: Vec<&str> = out.unassigned.iter().map(String::as_str).collect();
    let mut routing = 0;
    for c in &out.couriers {
        let stops: usize = c.routes.iter().map(|r| 1 + r.orders.len()).sum();
        assert_eq!(c.path.len(), 1 + stops);
        for r in &c.routes {
            assert!((1..=3).contains(&r.orders.len()));
            assert!(r.depart >= t.dispatch_time && r.complete > r.depart);
            routing += r.complete - r.depart;
            seen.extend(r.orders.iter().map(String::as_str));
        }
        for w in c.routes.windows(2) {
            assert!(w[0].complete <= w[1].depart);
        }
    }
    assert_eq!(routing, out.objective.routing_time_s);
    assert_eq!(seen.len() - out.unassigned.len(), out.objective.fulfilled);
    seen.sort_unstable();
    let mut all: Vec<&str> = t.orders.iter().map(|o| o.id.as_str()).collect();
    all.sort_unstable();
    assert_eq!(seen, all);
}

#[test]
fn solve_is_the_library_solver_and_never_beats_the_optimum() {
    for seed in 0..5 {
        let (json, t) = town(&format!(
            r#"{{"orders": 5, "couriers": 2, "restaurants": 2, "seed": {seed}}}"#
        ));
        let out: Solved = serde_json::from_str(&solve_town(&json, r#"{"iterations": 300}"#).unwrap()).unwrap();
        let inst = instance(&t);
        let problem = DispatchProblem::whole_instance(&inst, t.dispatch_time, IdlePosition::LastDropoff);
        let direct = grasp(
            &problem,
            &SolverConfig {
                iterations: 300,
                ..SolverConfig::default()
            },
        );
        assert_eq!(out.objective, direct.objective, "seed {seed}");
        let best = oracle::route_optimum(&problem);
        assert!(
            !out.objective.better_than(&best, ObjectiveMode::Lexicographic),
            "seed {seed}"
        );
    }
}

#[test]
fn sweep_matches_individual_solves() {
    let (json, _) = town(r#"{"orders": 25, "couriers": 4}"#);
    let points: Vec<SweepPoint> =
        serde_json::from_str(&sweep_town(&json, r#"{"iterations": 20, "seed": 4}"#).unwrap()).unwrap();
    assert_eq!(points.len(), 11);
    for p in points.iter().step_by(5) {
        let single: Solved = serde_json::from_str(
            &solve_town(
                &json,
                &format!(r#"{{"alpha": {}, "iterations": 20, "seed": 4}}"#, p.alpha),
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(single.objective, p.objective, "alpha {}", p.alpha);
    }
    assert!(points[0].objective.fulfilled > 0);
}
