//! One PASS/FAIL line per acceptance criterion.

mod common;

use std::io::Write;
use std::time::Instant;

use common::{
    enumeration_oracle, fixture, kkt_residual, median, random_path_case, random_speed_case, random_spline_qp,
    valid_fixtures,
};
use em_planner::path::corner_linearization_error;
use em_planner::planner::{iterate_case_study, Regulation};
use em_planner::spline::smoothness_cost;
use em_planner::Scenario;
use nalgebra::DVector;
use serde_json::json;
use em_planner::qp::{solve, QpProblem, QpSolution, QpStatus};
use em_planner::{load_scenario, run_closed_loop, PlannerConfig, Trace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn case_study() -> Outcome {
    let scenario = load_scenario(&fixture("oncoming_nudge")).unwrap();
    let config = PlannerConfig::default();
    let cycles = iterate_case_study(&scenario.candidates()[0], &scenario.initial_world(), 2, &config).unwrap();
    // Where the ego passes the obstacle under the speed profile of the
    // previous iteration; cruising at 10 m/s for the first one.
    let passing = |k: usize| cycles[k].interaction_station.unwrap_or(f64::NAN);
    let (first, second) = (passing(0), passing(1));
    let min_speed = cycles[0].min_speed;
    let clock = Instant::now();
    let trace = run_closed_loop(&scenario, &config, Some(20));
    let runtime = clock.elapsed().as_secs_f64();
    let pass = (first - 40.0).abs() <= 5.0
        && (second - 30.0).abs() <= 5.0
        && second < first
        && (min_speed - 5.0).abs() <= 1.0
        && trace.records.len() == 20
        && runtime < 5.0;
    outcome(
        pass,
        format!(
            "passing stations {first:.2} -> {second:.2} m (lateral peak {:.2} -> {:.2} m), \
             min speed {min_speed:.2} m/s, 20 cycles in {runtime:.3} s",
            cycles[0].nudge_station, cycles[1].nudge_station
        ),
    )
}

fn cut_in_vertex() -> Outcome {
    let scenario = load_scenario(&fixture("cut_in")).unwrap();
    let trace = run_closed_loop(&scenario, &PlannerConfig::default(), Some(1));
    let plan = trace.records[0].result.chosen_plan().expect("lane plan");
    let Some(region) = plan.st_regions.iter().find(|r| r.source_id == "cut_in") else {
        return outcome(false, "no region for the cut-in vehicle".into());
    };
    let (t, s) = region.earliest_vertex();
    outcome((t - 2.0).abs() <= 0.1 && (s - 40.0).abs() <= 1.0, format!("earliest vertex ({t:.3} s, {s:.3} m)"))
}

fn dp_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut agree = 0;
    let (mut rows, mut offsets, mut layers, mut cells) = (0, 0, 0, 0);
    for _ in 0..20 {
        let c = random_path_case(&mut rng);
        rows = rows.max(c.rows);
        offsets = offsets.max(c.offsets);
        agree += c.agrees() as usize;
    }
    for _ in 0..30 {
        let c = random_speed_case(&mut rng);
        layers = layers.max(c.layers);
        cells = cells.max(c.cells);
        agree += c.agrees as usize;
    }
    let sizes_ok = rows <= 4 && offsets <= 5 && layers <= 20 && cells <= 30;
    outcome(
        agree == 50 && sizes_ok,
        format!("{agree}/50 agree; path up to {rows}x{offsets}, speed up to {layers}x{cells}"),
    )
}

fn qp_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4096);
    let mut worst: f64 = 0.0;
    let mut rows = 0;
    let mut optimal = 0;
    for _ in 0..100 {
        let problem = random_spline_qp(&mut rng, 5, 100);
        rows = rows.max(problem.constraints.rows.len());
        let sol = solve(&problem, None);
        optimal += (sol.status == QpStatus::Optimal) as usize;
        worst = worst.max(kkt_residual(&problem, &sol));
    }
    let mut gap: f64 = 0.0;
    for _ in 0..20 {
        let problem = random_spline_qp(&mut rng, 2, 2);
        let sol = solve(&problem, None);
        let oracle = enumeration_oracle(&problem).expect("feasible by construction");
        for (a, b) in sol.params.iter().zip(&oracle) {
            gap = gap.max((a - b).abs() / b.abs().max(1.0));
        }
    }
    outcome(
        optimal == 100 && worst <= 1e-6 && gap <= 1e-6,
        format!("100 QPs of 30 vars, up to {rows} rows: worst KKT {worst:.2e}; 12-var oracle gap {gap:.2e}"),
    )
}

/// Corpus traces, run once and shared by the later criteria.
fn corpus() -> &'static [(String, Trace)] {
    static CORPUS: std::sync::OnceLock<Vec<(String, Trace)>> = std::sync::OnceLock::new();
    CORPUS.get_or_init(|| {
        valid_fixtures()
            .iter()
            .map(|p| {
                let scenario = load_scenario(p).unwrap();
                let name = p.file_stem().unwrap().to_string_lossy().into_owned();
                (name, run_closed_loop(&scenario, &PlannerConfig::default(), None))
            })
            .collect()
    })
}

fn time_solve(problem: &QpProblem, warm: Option<&QpSolution>) -> f64 {
    (0..3)
        .map(|_| {
            let clock = Instant::now();
            std::hint::black_box(solve(problem, warm));
            clock.elapsed().as_secs_f64()
        })
        .fold(f64::INFINITY, f64::min)
}

fn qp_latency() -> Outcome {
    let mut cold = Vec::new();
    let mut warm = Vec::new();
    let mut cold_paired = Vec::new();
    for (_, trace) in corpus() {
        for pair in trace.records.windows(2) {
            for lane in &pair[1].result.lanes {
                let Some(plan) = &lane.plan else { continue };
                let prev = pair[0].result.lanes.iter().find(|l| l.lane_id == lane.lane_id).and_then(|l| l.plan.as_ref());
                let stages = [
                    (&plan.path.qp_problem, prev.and_then(|p| p.path.qp_solution.as_ref())),
                    (&plan.speed.qp_problem, prev.and_then(|p| p.speed.qp_solution.as_ref())),
                ];
                for (problem, previous) in stages {
                    let Some(problem) = problem else { continue };
                    let t_cold = time_solve(problem, None);
                    cold.push(t_cold);
                    if let Some(previous) = previous {
                        warm.push(time_solve(problem, Some(previous)));
                        cold_paired.push(t_cold);
                    }
                }
            }
        }
    }
    let count = cold.len();
    let median_cold = median(&mut cold);
    let median_warm = median(&mut warm);
    let median_paired = median(&mut cold_paired);
    let speedup = median_paired / median_warm;
    outcome(
        median_cold <= 0.010 && speedup >= 2.0,
        format!(
            "{count} QPs: median cold {:.3} ms; warm from previous cycle {:.3} ms vs cold {:.3} ms ({speedup:.2}x)",
            median_cold * 1e3,
            median_warm * 1e3,
            median_paired * 1e3
        ),
    )
}

fn cycle_latency() -> Outcome {
    let trace = &corpus().iter().find(|(name, _)| name == "two_lane_ten").expect("fixture").1;
    let mut totals: Vec<f64> = trace.timings.iter().map(|t| t.total_us as f64 / 1e3).collect();
    let cycles = totals.len();
    let med = median(&mut totals);
    outcome(med <= 100.0, format!("median plan_cycle {med:.2} ms over {cycles} cycles, 2 lanes, 10 obstacles"))
}

fn corner_conservatism() -> Outcome {
    let limit = std::f64::consts::PI / 12.0;
    let mut worst: f64 = 0.0;
    for i in 0..=200 {
        let theta = -limit + 2.0 * limit * i as f64 / 200.0;
        for j in 0..=60 {
            worst = worst.max(corner_linearization_error(theta, 3.0 * j as f64 / 60.0));
        }
    }
    outcome(worst <= 0.03, format!("max (tan - sin) * l_f = {:.2} cm", worst * 100.0))
}

fn quadratic_form() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut knots = vec![0.0];
        for _ in 0..rng.gen_range(1..8) {
            knots.push(knots.last().unwrap() + rng.gen_range(0.5..40.0));
        }
        let spline = common::random_c3_spline(&mut rng, &knots);
        let p = DVector::from_column_slice(spline.coeffs());
        for d in 1..=3 {
            let assembled = smoothness_cost(&knots, 5, d, 1.0).unwrap().value(&p);
            let quad = common::quadrature_energy(&spline, d, 2);
            worst = worst.max((assembled - quad).abs() / quad.abs().max(f64::MIN_POSITIVE));
        }
    }
    outcome(worst <= 1e-8, format!("worst relative gap {worst:.2e} over 100 splines, derivatives 1 to 3"))
}

/// Straight two-lane road with `n` vehicles at 12 m/s spread over both
/// neighbouring lanes ahead of the ego.
fn crowd(n: usize, cycles: usize) -> Scenario {
    let line: Vec<[f64; 2]> = (0..=300).map(|i| [i as f64, 0.0]).collect();
    let horizon = cycles as f64 * 0.1 + 8.5;
    let steps = (horizon / 0.1).round() as usize;
    let obstacles: Vec<_> = (0..n)
        .map(|k| {
            let x0 = 15.0 + 185.0 * k as f64 / n as f64;
            let y = if k % 2 == 0 { 3.75 } else { -3.75 };
            let trajectory: Vec<_> = (0..=steps)
                .map(|i| {
                    let t = i as f64 * 0.1;
                    json!({"t": t, "x": x0 + 12.0 * t, "y": y, "heading": 0.0})
                })
                .collect();
            json!({"id": format!("v{k}"), "length": 4.5, "width": 2.0, "kind": "dynamic", "speed": 12.0,
                   "trajectory": trajectory})
        })
        .collect();
    let doc = json!({
        "version": 1,
        "lanes": [{"lane_id": "main", "polyline": line, "width": 3.75, "is_change_lane": false,
                   "is_current": true, "regulations": []}],
        "ego": {"state": {"x": 0.0, "y": 0.0, "heading": 0.0, "kappa": 0.0, "v": 10.0, "a": 0.0},
                "footprint": {"l_f": 2.8, "l_r": 1.0, "width": 2.0}},
        "obstacles": obstacles,
        "sim": {"cycle_period": 0.1, "cycles": cycles},
    });
    Scenario::from_json(&doc.to_string()).unwrap()
}

fn complexity_trend() -> Outcome {
    let config = PlannerConfig::default();
    let sizes = [1usize, 5, 10, 25, 50];
    let times: Vec<f64> = sizes
        .iter()
        .map(|&n| {
            let trace = run_closed_loop(&crowd(n, 10), &config, None);
            let mut ms: Vec<f64> = trace.timings.iter().map(|t| t.total_us as f64 / 1e3).collect();
            median(&mut ms)
        })
        .collect();
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, times.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&times).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = xs.iter().zip(&times).map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let ss_tot: f64 = times.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = 1.0 - ss_res / ss_tot;
    let listed: Vec<String> = sizes.iter().zip(&times).map(|(n, t)| format!("{n}:{t:.2}")).collect();
    outcome(r2 >= 0.9, format!("median ms by obstacle count [{}], slope {slope:.3} ms/obstacle, R^2 {r2:.3}", listed.join(" ")))
}

fn safety_invariants() -> Outcome {
    const TOL: f64 = 1e-6;
    let mut checked = 0;
    let mut violations = Vec::new();
    for (name, trace) in corpus() {
        let scenario = load_scenario(&fixture(name)).unwrap();
        for record in &trace.records {
            let result = &record.result;
            let Some(lane_id) = &result.chosen_lane else { continue };
            let candidate = scenario.candidates().iter().find(|c| &c.lane_id == lane_id).unwrap();
            checked += 1;
            for reg in &candidate.regulations {
                match *reg {
                    Regulation::SpeedLimit { v } => {
                        let top = result.trajectory.points.iter().map(|p| p.v).fold(0.0, f64::max);
                        if top > v + TOL {
                            violations.push(format!("{name} cycle {}: speed {top:.6} over {v}", record.cycle));
                        }
                    }
                    Regulation::StopLine { s } => {
                        let start = candidate.reference_line.project_xy(record.ego.x, record.ego.y).unwrap().0.s;
                        if start > s {
                            continue;
                        }
                        let last = result.trajectory.points.last().unwrap();
                        let reach = candidate.reference_line.project_xy(last.x, last.y).unwrap().0.s;
                        if reach > s + TOL {
                            violations.push(format!("{name} cycle {}: reaches {reach:.6} past {s}", record.cycle));
                        }
                    }
                    _ => {}
                }
            }
            let plan = result.chosen_plan().unwrap();
            let stages = [
                ("path", &plan.path.qp_problem, &plan.path.qp_solution),
                ("speed", &plan.speed.qp_problem, &plan.speed.qp_solution),
            ];
            for (stage, problem, solution) in stages {
                let (Some(problem), Some(solution)) = (problem, solution) else {
                    violations.push(format!("{name} cycle {}: {stage} QP missing", record.cycle));
                    continue;
                };
                let v = problem.constraints.max_violation(&solution.params);
                if v > TOL {
                    violations.push(format!("{name} cycle {}: {stage} tunnel violated by {v:.2e}", record.cycle));
                }
            }
        }
    }
    let detail = match violations.first() {
        None => format!("{checked} chosen trajectories over {} scenarios, no violations", corpus().len()),
        Some(first) => format!("{} violations, first: {first}", violations.len()),
    };
    outcome(violations.is_empty() && checked > 0, detail)
}

type Criterion = (&'static str, fn() -> Outcome);

#[test]
fn acceptance() {
    let criteria: Vec<Criterion> = vec![
        ("oncoming nudge case study", case_study),
        ("cut-in ST vertex", cut_in_vertex),
        ("DP matches enumeration", dp_equivalence),
        ("spline QP optimality", qp_correctness),
        ("QP latency and warm start", qp_latency),
        ("plan_cycle latency", cycle_latency),
        ("corner linearization conservatism", corner_conservatism),
        ("smoothness quadratic form", quadratic_form),
        ("linear complexity in obstacle count", complexity_trend),
        ("regulation and tunnel safety", safety_invariants),
    ];
    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        // Written to the raw handle so the report survives output capture.
        let line = format!("criterion {:>2} {}: {} ({})\n", k + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
        std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
        if !o.pass {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
