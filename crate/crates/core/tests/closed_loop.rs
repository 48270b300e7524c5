mod common;

use common::{fixture, valid_fixtures};
use em_planner::output::trace_json;
use em_planner::{load_scenario, run_closed_loop, PlannerConfig, Scenario};

#[test]
fn empty_road_dead_reckons() {
    let scenario = load_scenario(&fixture("minimal_empty")).unwrap();
    let trace = run_closed_loop(&scenario, &PlannerConfig::default(), None);
    assert_eq!(trace.records.len(), 50);
    assert_eq!(trace.fallback_count(), 0);
    // 50 cycles of 0.1 s at a steady 10 m/s, then one more hand-off.
    let last = trace.records.last().unwrap();
    let p = last.result.trajectory.points.iter().find(|p| (p.t - 0.1).abs() < 1e-9).unwrap();
    assert!((p.x - 50.0).abs() <= 0.1, "x = {}", p.x);
    assert!(p.y.abs() <= 0.1, "y = {}", p.y);
}

#[test]
fn traces_are_deterministic() {
    let scenario = load_scenario(&fixture("oncoming_nudge")).unwrap();
    let config = PlannerConfig::default();
    let a = trace_json(&run_closed_loop(&scenario, &config, Some(5)));
    let b = trace_json(&run_closed_loop(&scenario, &config, Some(5)));
    assert_eq!(a, b);
}

#[test]
fn hand_off_is_continuous() {
    for path in valid_fixtures() {
        let scenario = load_scenario(&path).unwrap();
        let trace = run_closed_loop(&scenario, &PlannerConfig::default(), Some(8));
        for pair in trace.records.windows(2) {
            let period = trace.cycle_period;
            let handed = pair[0].result.trajectory.points.iter().find(|p| (p.t - period).abs() < 1e-9).unwrap();
            let ego = &pair[1].ego;
            let gap = (handed.x - ego.x).abs().max((handed.y - ego.y).abs()).max((handed.v - ego.v).abs());
            assert!(gap <= 1e-6, "{}: cycle {} hand-off gap {gap:e}", path.display(), pair[1].cycle);
            let first = &pair[1].result.trajectory.points[0];
            let start = (first.x - ego.x).abs().max((first.y - ego.y).abs());
            assert!(start <= 1e-6, "{}: cycle {} starts {start:e} from the ego", path.display(), pair[1].cycle);
        }
    }
}

#[test]
fn scenarios_round_trip_through_json() {
    for path in valid_fixtures() {
        let scenario = load_scenario(&path).unwrap();
        let again = Scenario::from_json(&scenario.to_json()).unwrap();
        assert_eq!(scenario.to_json(), again.to_json(), "{}", path.display());
    }
}

#[test]
fn short_obstacle_horizon_is_rejected() {
    assert!(load_scenario(&fixture("short_horizon_invalid")).is_err());
}

#[test]
fn malformed_json_reports_position() {
    let err = Scenario::from_json("{\"version\": 1,\n  \"lanes\": [}").unwrap_err();
    assert!(err.to_string().contains('2'), "{err}");
}
