mod common;

use common::{enumeration_oracle, random_qp};
use em_planner::qp::{solve, QpProblem, QpStatus};
use em_planner::spline::{ConstraintTag, LinearConstraintSet, QuadraticCost, RowKind};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_active_set_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..8 {
        let problem = random_qp(&mut rng, 10, 15);
        let sol = solve(&problem, None);
        assert_eq!(sol.status, QpStatus::Optimal);
        let oracle = enumeration_oracle(&problem).expect("feasible by construction");
        for (a, b) in sol.params.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
    }
}

#[test]
fn warm_start_from_own_solution_is_faster() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let problem = random_qp(&mut rng, 12, 40);
        let cold = solve(&problem, None);
        let warm = solve(&problem, Some(&cold));
        assert_eq!(warm.status, QpStatus::Optimal);
        assert!(warm.iterations <= 2, "warm start took {}", warm.iterations);
        assert!(warm.iterations < cold.iterations || cold.iterations <= 1);
    }
}

#[test]
fn objective_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let problem = random_qp(&mut rng, 10, 30);
        let sol = solve(&problem, None);
        for w in sol.objective_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9 * w[0].abs().max(1.0), "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn infeasible_rows_are_reported() {
    let mut cons = LinearConstraintSet::new(2);
    cons.push(vec![1.0, 1.0], RowKind::Inequality, -1.0, ConstraintTag::Boundary);
    cons.push(vec![-1.0, -1.0], RowKind::Inequality, -1.0, ConstraintTag::Boundary);
    let problem = QpProblem::new(
        QuadraticCost { q: DMatrix::identity(2, 2), linear: DVector::zeros(2), constant: 0.0 },
        cons,
    );
    assert_eq!(solve(&problem, None).status, QpStatus::Infeasible);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn solutions_are_feasible_and_stationary(seed in any::<u64>(), n in 2usize..12, m in 0usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = random_qp(&mut rng, n, m);
        let sol = solve(&problem, None);
        prop_assert_eq!(sol.status, QpStatus::Optimal);
        prop_assert!(problem.constraints.max_violation(&sol.params) <= 1e-6);
        // Lagrangian gradient with the reported multipliers.
        let x = DVector::from_vec(sol.params.clone());
        let mut grad = &problem.cost.q * &x * 2.0 + &problem.cost.linear;
        for (row, lambda) in problem.constraints.rows.iter().zip(&sol.multipliers) {
            prop_assert!(*lambda >= -1e-8);
            for (g, a) in grad.iter_mut().zip(&row.coeffs) {
                *g += lambda * a;
            }
        }
        let scale = problem.cost.linear.amax().max(1.0);
        prop_assert!(grad.amax() / scale <= 1e-6, "stationarity {}", grad.amax());
    }

    #[test]
    fn argmin_is_invariant_to_objective_scale(seed in any::<u64>(), factor in 0.01f64..100.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let problem = random_qp(&mut rng, 6, 12);
        let mut scaled = problem.clone();
        scaled.cost = scaled.cost.clone().scaled(factor);
        let a = solve(&problem, None);
        let b = solve(&scaled, None);
        for (x, y) in a.params.iter().zip(&b.params) {
            prop_assert!((x - y).abs() <= 1e-8 * x.abs().max(1.0), "{x} vs {y}");
        }
    }
}
