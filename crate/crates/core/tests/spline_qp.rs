mod common;

use common::{enumeration_oracle, kkt_residual, quadrature_energy, random_c3_spline, random_spline_qp};
use em_planner::qp::{solve, QpStatus};
use em_planner::spline::smoothness_cost;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn path_shaped_qps_satisfy_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..10 {
        let problem = random_spline_qp(&mut rng, 5, 100);
        assert_eq!(problem.cost.dim(), 30);
        let sol = solve(&problem, None);
        assert_eq!(sol.status, QpStatus::Optimal, "case {case}");
        let r = kkt_residual(&problem, &sol);
        assert!(r <= 1e-6, "case {case}: residual {r:e}");
    }
}

#[test]
fn small_spline_qps_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for case in 0..5 {
        let problem = random_spline_qp(&mut rng, 2, 2);
        assert_eq!(problem.cost.dim(), 12);
        let sol = solve(&problem, None);
        let oracle = enumeration_oracle(&problem).expect("feasible by construction");
        for (a, b) in sol.params.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "case {case}: {a} vs {b}");
        }
    }
}

#[test]
fn smoothness_matrix_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for _ in 0..20 {
        let mut knots = vec![0.0];
        for _ in 0..rng.gen_range(1..6) {
            knots.push(knots.last().unwrap() + rng.gen_range(1.0..30.0));
        }
        let spline = random_c3_spline(&mut rng, &knots);
        let p = DVector::from_column_slice(spline.coeffs());
        for d in 1..=3 {
            let exact = smoothness_cost(&knots, 5, d, 1.0).unwrap().value(&p);
            let quad = quadrature_energy(&spline, d, 2);
            assert!((exact - quad).abs() <= 1e-8 * quad.abs().max(1e-300), "d={d}: {exact} vs {quad}");
        }
    }
}
