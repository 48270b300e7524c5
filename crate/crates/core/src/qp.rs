//! Dense primal active-set solver for convex quadratic programs.
//!
//! Minimizes `p^T Q p + c^T p` subject to equality rows `a . p = b` and
//! inequality rows `a . p <= b`. Problems are small (tens of variables) but
//! can carry hundreds of inequality rows, which suits an active-set method:
//! each iteration only factors the current working set.
//!
//! Internally the variables are rescaled so that the Hessian has a unit
//! diagonal and every row has unit norm. Spline problems mix monomials of
//! very different magnitude (`t^5` over a 50 m segment), and without this the
//! Hessian is numerically singular.

use std::collections::HashMap;

use log::{debug, warn};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::spline::{LinearConstraintSet, QuadraticCost, RowKind};

pub const DEFAULT_REGULARIZATION: f64 = 1e-8;
const FEASIBILITY_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const DEPENDENCE_TOL: f64 = 1e-10;
const CYCLE_REPEATS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    pub cost: QuadraticCost,
    pub constraints: LinearConstraintSet,
    pub regularization: f64,
}

impl QpProblem {
    pub fn new(cost: QuadraticCost, constraints: LinearConstraintSet) -> Self {
        Self { cost, constraints, regularization: DEFAULT_REGULARIZATION }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum QpStatus {
    Optimal,
    Infeasible,
    IterLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    pub params: Vec<f64>,
    /// Indices (into the constraint rows) of binding inequality rows.
    pub active_set: Vec<usize>,
    /// Lagrange multiplier per constraint row; zero for inactive rows.
    pub multipliers: Vec<f64>,
    pub iterations: usize,
    pub status: QpStatus,
    pub objective: f64,
    /// Largest row violation, in the units of the row right-hand sides.
    pub primal_residual: f64,
    /// Infinity norm of the Lagrangian gradient in scaled variables.
    pub stationarity_residual: f64,
    /// Objective after every accepted step of the optimality phase.
    #[serde(skip)]
    pub objective_history: Vec<f64>,
    /// Equality rows dropped as linearly dependent.
    pub dropped_rows: Vec<usize>,
}

impl QpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == QpStatus::Optimal
    }
}

/// Problem data after variable and row scaling.
struct Scaled {
    n: usize,
    /// Original value = scale * scaled value.
    scale: Vec<f64>,
    rows: Vec<f64>,
    rhs: Vec<f64>,
    row_norm: Vec<f64>,
    is_eq: Vec<bool>,
    /// Rows left out of the solve (dependent or all-zero).
    skipped: Vec<bool>,
}

impl Scaled {
    fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.n..(i + 1) * self.n]
    }

    fn dot(&self, i: usize, x: &DVector<f64>) -> f64 {
        self.row(i).iter().zip(x.iter()).map(|(a, b)| a * b).sum()
    }

    fn m(&self) -> usize {
        self.rhs.len()
    }
}

/// Quadratic model `0.5 y^T H y + g^T y` over the scaled rows.
struct Model<'a> {
    chol: Cholesky<f64, Dyn>,
    h: DMatrix<f64>,
    g: DVector<f64>,
    data: &'a Scaled,
}

/// Orthogonal split of the variable space by a working set: `y` spans the
/// rows, `z` their null space, and `r` is the triangular factor of the rows.
struct Basis {
    y: DMatrix<f64>,
    z: DMatrix<f64>,
    r: DMatrix<f64>,
}

impl<'a> Model<'a> {
    fn new(h: DMatrix<f64>, g: DVector<f64>, data: &'a Scaled) -> Option<Self> {
        let chol = Cholesky::new(h.clone())?;
        Some(Self { chol, h, g, data })
    }

    fn objective(&self, y: &DVector<f64>) -> f64 {
        0.5 * y.dot(&(&self.h * y)) + self.g.dot(y)
    }

    /// QR factorization of the working rows, or `None` when they are
    /// linearly dependent.
    fn basis(&self, working: &[usize]) -> Option<Basis> {
        let n = self.data.n;
        let k = working.len();
        if k > n {
            return None;
        }
        // Appending the identity makes the orthogonal factor square.
        let mut m = DMatrix::zeros(n, k + n);
        for (c, &i) in working.iter().enumerate() {
            for (r, v) in self.data.row(i).iter().enumerate() {
                m[(r, c)] = *v;
            }
        }
        for d in 0..n {
            m[(d, k + d)] = 1.0;
        }
        let qr = m.qr();
        let q = qr.q();
        let r_full = qr.r();
        let r = r_full.view((0, 0), (k, k)).into_owned();
        if (0..k).any(|j| r[(j, j)].abs() < DEPENDENCE_TOL) {
            return None;
        }
        Some(Basis { y: q.columns(0, k).into_owned(), z: q.columns(k, n - k).into_owned(), r })
    }

    fn independent(&self, working: &[usize], candidate: usize) -> bool {
        let mut trial = working.to_vec();
        trial.push(candidate);
        self.basis(&trial).is_some()
    }

    /// Minimizes the model over `base + z w`.
    fn null_space_step(&self, basis: &Basis, grad: &DVector<f64>) -> Option<DVector<f64>> {
        if basis.z.ncols() == 0 {
            return Some(DVector::zeros(self.data.n));
        }
        let reduced = basis.z.transpose() * &self.h * &basis.z;
        let chol = Cholesky::new(reduced)?;
        let w = chol.solve(&(basis.z.transpose() * grad));
        Some(-(&basis.z * w))
    }

    /// Step `p` and multipliers `lambda` of the equality-constrained
    /// subproblem on `working` at `y`, with the relative size of the
    /// gradient's null-space component at `y`.
    fn eqp(&mut self, y: &DVector<f64>, working: &[usize]) -> Option<(DVector<f64>, DVector<f64>, f64)> {
        let grad = &self.h * y + &self.g;
        let scale = grad.amax().max(1.0);
        if working.is_empty() {
            let p = -self.chol.solve(&grad);
            return Some((p, DVector::zeros(0), grad.amax() / scale));
        }
        let basis = self.basis(working)?;
        let p = self.null_space_step(&basis, &grad)?;
        let moved = &grad + &self.h * &p;
        let rhs = -(basis.y.transpose() * &moved);
        let lambda = basis.r.solve_upper_triangular(&rhs)?;
        // Gradient component the working rows cannot balance at `y`.
        let residual = if basis.z.ncols() == 0 { 0.0 } else { (basis.z.transpose() * &grad).amax() };
        Some((p, lambda, residual / scale))
    }

    /// Minimizer of the model subject only to the rows in `working` as
    /// equalities.
    fn eqp_point(&mut self, working: &[usize]) -> Option<DVector<f64>> {
        if working.is_empty() {
            return Some(-self.chol.solve(&self.g));
        }
        let basis = self.basis(working)?;
        let b = DVector::from_iterator(working.len(), working.iter().map(|&i| self.data.rhs[i]));
        let t = basis.r.transpose().solve_lower_triangular(&b)?;
        let base = &basis.y * t;
        let grad = &self.h * &base + &self.g;
        let step = self.null_space_step(&basis, &grad)?;
        Some(base + step)
    }
}

struct PhaseResult {
    y: DVector<f64>,
    working: Vec<usize>,
    lambda: DVector<f64>,
    iterations: usize,
    status: QpStatus,
    history: Vec<f64>,
}

/// Primal active-set iterations from a feasible `y` whose working set
/// contains only rows active at `y`.
fn active_set_phase(
    model: &mut Model<'_>,
    mut y: DVector<f64>,
    mut working: Vec<usize>,
    max_iter: usize,
) -> PhaseResult {
    let data = model.data;
    let m = data.m();
    let mut in_working = vec![false; m];
    for &i in &working {
        in_working[i] = true;
    }
    let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut bland = false;
    let mut history = vec![model.objective(&y)];
    let mut iterations = 0;
    loop {
        if iterations >= max_iter {
            return PhaseResult {
                lambda: DVector::zeros(working.len()),
                y,
                working,
                iterations,
                status: QpStatus::IterLimit,
                history,
            };
        }
        iterations += 1;
        let Some((p, lambda, residual)) = model.eqp(&y, &working) else {
            // Singular working set: drop the most recent inequality.
            if let Some(pos) = working.iter().rposition(|&i| !data.is_eq[i]) {
                in_working[working.remove(pos)] = false;
                continue;
            }
            return PhaseResult {
                lambda: DVector::zeros(working.len()),
                y,
                working,
                iterations,
                status: QpStatus::Infeasible,
                history,
            };
        };
        let y_norm = y.amax().max(1.0);
        if p.amax() <= 1e-11 * y_norm || residual <= 1e-10 {
            // Stationary on the working set: check inequality multipliers.
            let mut leave: Option<(usize, f64)> = None;
            for (j, &i) in working.iter().enumerate() {
                if data.is_eq[i] {
                    continue;
                }
                let dual = lambda[j] / data.row_norm[i];
                if dual < -DUAL_TOL {
                    let better = match leave {
                        None => true,
                        Some((lj, best)) => {
                            if bland {
                                working[j] < working[lj]
                            } else {
                                dual < best
                            }
                        }
                    };
                    if better {
                        leave = Some((j, dual));
                    }
                }
            }
            match leave {
                None => {
                    return PhaseResult {
                        y,
                        working,
                        lambda,
                        iterations,
                        status: QpStatus::Optimal,
                        history,
                    }
                }
                Some((j, _)) => {
                    in_working[working.remove(j)] = false;
                    let mut key = working.clone();
                    key.sort_unstable();
                    let count = seen.entry(key).or_insert(0);
                    *count += 1;
                    if *count >= CYCLE_REPEATS {
                        bland = true;
                    }
                }
            }
            continue;
        }
        let mut alpha = 1.0;
        let mut blocking: Option<(usize, f64)> = None;
        // Rows dependent on the working set have a . p at roundoff level.
        let ap_floor = 1e-11 * p.norm();
        for i in 0..m {
            if in_working[i] || data.is_eq[i] || data.skipped[i] {
                continue;
            }
            let ap = data.dot(i, &p);
            if ap <= ap_floor {
                continue;
            }
            let slack = (data.rhs[i] - data.dot(i, &y)).max(0.0);
            let ratio = slack / ap;
            let take = match blocking {
                None => ratio < alpha,
                Some((bi, bap)) => {
                    if ratio < alpha - 1e-15 {
                        true
                    } else if ratio <= alpha + 1e-15 {
                        if bland {
                            i < bi
                        } else {
                            ap > bap
                        }
                    } else {
                        false
                    }
                }
            };
            if take {
                alpha = ratio.min(alpha);
                blocking = Some((i, ap));
            }
        }
        y.axpy(alpha, &p, 1.0);
        history.push(model.objective(&y));
        if let Some((i, _)) = blocking {
            working.push(i);
            in_working[i] = true;
        }
    }
}

/// Jacobi scaling of the variables and the diagonal shift added to the
/// scaled Hessian.
fn scaling(problem: &QpProblem) -> (Vec<f64>, f64) {
    let n = problem.cost.dim();
    let h = &problem.cost.q * 2.0;
    let max_diag = h.diagonal().iter().fold(0.0_f64, |a, b| a.max(*b));
    let fallback = if max_diag > 0.0 { max_diag } else { 1.0 };
    let scale: Vec<f64> = (0..n)
        .map(|i| {
            let d = h[(i, i)];
            // Monomial spline bases spread the diagonal over many decades;
            // only a genuinely absent curvature falls back.
            if d > 1e-24 * fallback {
                1.0 / d.sqrt()
            } else {
                1.0 / fallback.sqrt()
            }
        })
        .collect();
    let mean_diag = (0..n).map(|i| h[(i, i)] * scale[i] * scale[i]).sum::<f64>() / n.max(1) as f64;
    let reg = problem.regularization * if mean_diag > 0.0 { mean_diag } else { 1.0 };
    (scale, reg.max(f64::MIN_POSITIVE))
}

impl QpProblem {
    /// The cost the solver actually minimizes: the regularization is applied
    /// to the Jacobi-scaled Hessian, which in the original variables is a
    /// diagonal shift proportional to each variable's own curvature.
    pub fn effective_cost(&self) -> QuadraticCost {
        let (scale, reg) = scaling(self);
        let mut cost = self.cost.clone();
        for (i, d) in scale.iter().enumerate() {
            cost.q[(i, i)] += 0.5 * reg / (d * d);
        }
        cost
    }
}

fn scale_problem(problem: &QpProblem) -> (Scaled, DMatrix<f64>, DVector<f64>) {
    let n = problem.cost.dim();
    let h = &problem.cost.q * 2.0;
    let (scale, reg) = scaling(problem);
    let mut hs = h;
    for i in 0..n {
        for j in 0..n {
            hs[(i, j)] *= scale[i] * scale[j];
        }
    }
    for i in 0..n {
        hs[(i, i)] += reg;
    }
    let gs = DVector::from_iterator(n, (0..n).map(|i| problem.cost.linear[i] * scale[i]));

    let rows_in = &problem.constraints.rows;
    let m = rows_in.len();
    let mut rows = Vec::with_capacity(m * n);
    let mut rhs = Vec::with_capacity(m);
    let mut row_norm = Vec::with_capacity(m);
    let mut is_eq = Vec::with_capacity(m);
    let mut skipped = vec![false; m];
    for (i, r) in rows_in.iter().enumerate() {
        let scaled: Vec<f64> = r.coeffs.iter().zip(&scale).map(|(a, d)| a * d).collect();
        let norm = scaled.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 1e-300 {
            skipped[i] = true;
            rows.extend(std::iter::repeat_n(0.0, n));
            rhs.push(r.rhs);
            row_norm.push(1.0);
        } else {
            rows.extend(scaled.iter().map(|v| v / norm));
            rhs.push(r.rhs / norm);
            row_norm.push(norm);
        }
        is_eq.push(r.kind == RowKind::Equality);
    }
    (Scaled { n, scale, rows, rhs, row_norm, is_eq, skipped }, hs, gs)
}

/// Greedy modified Gram-Schmidt over equality rows; returns dependent rows.
fn dependent_equalities(data: &Scaled) -> Vec<usize> {
    let n = data.n;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut dropped = Vec::new();
    for i in 0..data.m() {
        if !data.is_eq[i] || data.skipped[i] {
            continue;
        }
        let mut v = data.row(i).to_vec();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-9 {
            dropped.push(i);
        } else {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
        }
        if basis.len() > n {
            break;
        }
    }
    dropped
}

fn max_scaled_violation(data: &Scaled, y: &DVector<f64>) -> f64 {
    (0..data.m())
        .filter(|&i| !data.skipped[i])
        .map(|i| {
            let r = data.dot(i, y) - data.rhs[i];
            if data.is_eq[i] {
                r.abs()
            } else {
                r
            }
        })
        .fold(0.0, f64::max)
}

/// Big-M start: minimizes the objective plus `M t + t^2 / 2` subject to
/// `a . y - t <= b`, `t >= 0`, raising `M` until the violation `t` vanishes.
/// Any `y` is feasible for this problem once `t` is large enough, and for a
/// large `M` its optimum coincides with the original one.
fn phase_one(
    data: &Scaled,
    h: &DMatrix<f64>,
    g: &DVector<f64>,
    equalities: &[usize],
    max_iter: usize,
) -> Option<(DVector<f64>, Vec<usize>, usize)> {
    let n = data.n;
    // Minimum-norm point of the equality rows.
    let y0 = if equalities.is_empty() {
        DVector::zeros(n)
    } else {
        let k = equalities.len();
        let a = DMatrix::from_fn(k, n, |r, c| data.row(equalities[r])[c]);
        let b = DVector::from_iterator(k, equalities.iter().map(|&i| data.rhs[i]));
        let gram = &a * a.transpose();
        let z = Cholesky::new(gram).map(|c| c.solve(&b))?;
        a.transpose() * z
    };
    let violation = (0..data.m())
        .filter(|&i| !data.is_eq[i] && !data.skipped[i])
        .map(|i| data.dot(i, &y0) - data.rhs[i])
        .fold(0.0, f64::max);
    if violation <= FEASIBILITY_TOL {
        return Some((y0, equalities.to_vec(), 0));
    }

    let na = n + 1;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let mut is_eq = Vec::new();
    let mut origin = Vec::new();
    let sqrt2 = std::f64::consts::SQRT_2;
    for i in 0..data.m() {
        if data.skipped[i] {
            continue;
        }
        if data.is_eq[i] {
            rows.extend_from_slice(data.row(i));
            rows.push(0.0);
            rhs.push(data.rhs[i]);
            is_eq.push(true);
        } else {
            rows.extend(data.row(i).iter().map(|v| v / sqrt2));
            rows.push(-1.0 / sqrt2);
            rhs.push(data.rhs[i] / sqrt2);
            is_eq.push(false);
        }
        origin.push(Some(i));
    }
    rows.extend(std::iter::repeat_n(0.0, n));
    rows.push(-1.0);
    rhs.push(0.0);
    is_eq.push(false);
    origin.push(None);
    let ma = rhs.len();
    let aug = Scaled {
        n: na,
        scale: vec![1.0; na],
        rows,
        rhs,
        row_norm: vec![1.0; ma],
        is_eq,
        skipped: vec![false; ma],
    };
    let mut h_aug = DMatrix::zeros(na, na);
    h_aug.view_mut((0, 0), (n, n)).copy_from(h);
    h_aug[(n, n)] = 1.0;
    let mut y = y0.resize_vertically(na, 0.0);
    y[n] = violation + 1.0;
    let mut working: Vec<usize> = (0..ma).filter(|&i| aug.is_eq[i]).collect();
    let mut iterations = 0;
    let base = 1e6 * (1.0 + g.amax());
    let mut weight = base;
    loop {
        let mut g_aug = g.clone().resize_vertically(na, 0.0);
        g_aug[n] = weight;
        let Some(mut model) = Model::new(h_aug.clone(), g_aug, &aug) else {
            debug!("phase one: augmented model is singular");
            return None;
        };
        let r = active_set_phase(&mut model, y, working, max_iter);
        iterations += r.iterations;
        y = r.y;
        working = r.working;
        if r.status != QpStatus::Optimal {
            debug!("phase one stopped with {:?} after {iterations} iterations", r.status);
            return None;
        }
        if y[n] <= 1e-7 {
            break;
        }
        if weight >= base * 1e9 {
            debug!("phase one: violation {:.3e} remains at the largest penalty", y[n]);
            return None;
        }
        weight *= 1e3;
    }
    let point = y.rows(0, n).into_owned();
    let working = working.iter().filter_map(|&i| origin[i]).collect();
    Some((point, working, iterations))
}

/// Solves the QP, optionally warm-started from a previous solution.
/// Refines the point on the final working set. The stopping test accepts a
/// small reduced gradient, and in a flat direction of an ill-conditioned
/// spline Hessian a single null-space solve can leave the point visibly
/// short of the subspace minimizer.
fn polish(model: &mut Model<'_>, result: &mut PhaseResult) {
    let Some(basis) = model.basis(&result.working) else { return };
    let data = model.data;
    let mut y = result.y.clone();
    for _ in 0..3 {
        let gap = DVector::from_iterator(
            result.working.len(),
            result.working.iter().map(|&i| data.rhs[i] - data.dot(i, &y)),
        );
        let Some(t) = basis.r.transpose().solve_lower_triangular(&gap) else { return };
        y += &basis.y * t;
        let grad = &model.h * &y + &model.g;
        let Some(step) = model.null_space_step(&basis, &grad) else { return };
        y += step;
    }
    if max_scaled_violation(data, &y) > FEASIBILITY_TOL {
        return;
    }
    let Some((_, lambda, _)) = model.eqp(&y, &result.working) else { return };
    let dual_ok = result
        .working
        .iter()
        .zip(lambda.iter())
        .all(|(&i, l)| data.is_eq[i] || l / data.row_norm[i] >= -DUAL_TOL);
    if dual_ok {
        result.history.push(model.objective(&y));
        result.y = y;
        result.lambda = lambda;
    }
}

pub fn solve(problem: &QpProblem, warm_start: Option<&QpSolution>) -> QpSolution {
    let n = problem.cost.dim();
    let (mut data, h, g) = scale_problem(problem);
    let dropped = dependent_equalities(&data);
    if !dropped.is_empty() {
        warn!("dropping {} linearly dependent equality rows", dropped.len());
    }
    for &i in &dropped {
        data.skipped[i] = true;
    }
    let m = data.m();
    let max_iter = (10 * m).max(10 * n).max(50);
    let equalities: Vec<usize> = (0..m).filter(|&i| data.is_eq[i] && !data.skipped[i]).collect();
    let infeasible = |iterations: usize, status: QpStatus, dropped: Vec<usize>| QpSolution {
        params: vec![0.0; n],
        active_set: Vec::new(),
        multipliers: vec![0.0; m],
        iterations,
        status,
        objective: f64::INFINITY,
        primal_residual: f64::INFINITY,
        stationarity_residual: f64::INFINITY,
        objective_history: Vec::new(),
        dropped_rows: dropped,
    };
    // Rows that are all zero but violated make the problem infeasible.
    for i in 0..m {
        if data.skipped[i] && !dropped.contains(&i) {
            let r = -data.rhs[i];
            let bad = if data.is_eq[i] { r.abs() > FEASIBILITY_TOL } else { r > FEASIBILITY_TOL };
            if bad {
                return infeasible(0, QpStatus::Infeasible, dropped);
            }
        }
    }
    let Some(mut model) = Model::new(h, g, &data) else {
        return infeasible(0, QpStatus::Infeasible, dropped);
    };

    let mut start: Option<(DVector<f64>, Vec<usize>)> = None;
    let mut iterations = 0;
    if let Some(warm) = warm_start.filter(|w| w.params.len() == n) {
        let y_warm =
            DVector::from_iterator(n, warm.params.iter().zip(&data.scale).map(|(x, d)| x / d));
        let mut working = equalities.clone();
        let guesses: Vec<usize> =
            warm.active_set.iter().copied().filter(|&i| i < m && !data.skipped[i] && !data.is_eq[i]).collect();
        if max_scaled_violation(&data, &y_warm) <= FEASIBILITY_TOL {
            for i in guesses {
                let active = (data.dot(i, &y_warm) - data.rhs[i]).abs() <= 1e-8;
                if active && model.independent(&working, i) {
                    working.push(i);
                }
            }
            start = Some((y_warm, working));
        } else {
            for i in guesses {
                if model.independent(&working, i) {
                    working.push(i);
                }
            }
            if let Some(y) = model.eqp_point(&working) {
                if max_scaled_violation(&data, &y) <= FEASIBILITY_TOL {
                    start = Some((y, working));
                }
            }
        }
    }
    let (y0, working0) = match start {
        Some(s) => s,
        None => match phase_one(&data, &model.h, &model.g, &equalities, max_iter) {
            Some((y, candidates, iters)) => {
                iterations += iters;
                let mut working = equalities.clone();
                for i in candidates {
                    if data.is_eq[i] || working.contains(&i) {
                        continue;
                    }
                    let active = (data.dot(i, &y) - data.rhs[i]).abs() <= 1e-8;
                    if active && working.len() < n && model.independent(&working, i) {
                        working.push(i);
                    }
                }
                (y, working)
            }
            None => return infeasible(iterations, QpStatus::Infeasible, dropped),
        },
    };

    let mut result = active_set_phase(&mut model, y0, working0, max_iter);
    iterations += result.iterations;
    if result.status == QpStatus::Optimal {
        polish(&mut model, &mut result);
    }

    let y = &result.y;
    let params: Vec<f64> = y.iter().zip(&data.scale).map(|(v, d)| v * d).collect();
    let mut multipliers = vec![0.0; m];
    if result.status == QpStatus::Optimal {
        for (j, &i) in result.working.iter().enumerate() {
            multipliers[i] = result.lambda[j] / data.row_norm[i];
        }
    }
    let mut active_set: Vec<usize> =
        result.working.iter().copied().filter(|&i| !data.is_eq[i]).collect();
    active_set.sort_unstable();
    let mut grad = &model.h * y + &model.g;
    for (j, &i) in result.working.iter().enumerate() {
        if result.status == QpStatus::Optimal {
            for (gk, ak) in grad.iter_mut().zip(data.row(i)) {
                *gk += result.lambda[j] * ak;
            }
        }
    }
    let p = DVector::from_vec(params.clone());
    QpSolution {
        objective: problem.cost.value(&p) - problem.cost.constant,
        primal_residual: problem.constraints.max_violation(&params),
        stationarity_residual: grad.amax(),
        params,
        active_set,
        multipliers,
        iterations,
        status: result.status,
        objective_history: result.history,
        dropped_rows: dropped,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spline::{ConstraintTag, LinearConstraintSet};

    fn cost(q: DMatrix<f64>, c: Vec<f64>) -> QuadraticCost {
        let n = c.len();
        QuadraticCost { q, linear: DVector::from_vec(c), constant: 0.0 }.scaled(1.0).add(&QuadraticCost::zeros(n))
    }

    #[test]
    fn projection_onto_halfspace() {
        let mut cons = LinearConstraintSet::new(1);
        cons.push(vec![-1.0], RowKind::Inequality, -1.0, ConstraintTag::Boundary);
        let sol = solve(&QpProblem::new(cost(DMatrix::identity(1, 1), vec![0.0]), cons), None);
        assert_eq!(sol.status, QpStatus::Optimal);
        assert!((sol.params[0] - 1.0).abs() < 1e-6);
        assert_eq!(sol.active_set, vec![0]);
        assert!(sol.multipliers[0] > 0.0);
    }

    #[test]
    fn unconstrained_least_squares() {
        let c = [1.5, -2.0, 0.25];
        let linear = c.iter().map(|v| -2.0 * v).collect();
        let sol = solve(
            &QpProblem::new(cost(DMatrix::identity(3, 3), linear), LinearConstraintSet::new(3)),
            None,
        );
        assert_eq!(sol.status, QpStatus::Optimal);
        for (p, c) in sol.params.iter().zip(c) {
            assert!((p - c).abs() < 1e-6);
        }
    }

    #[test]
    fn detects_infeasibility() {
        let mut cons = LinearConstraintSet::new(1);
        cons.push(vec![1.0], RowKind::Inequality, 0.0, ConstraintTag::Boundary);
        cons.push(vec![-1.0], RowKind::Inequality, -1.0, ConstraintTag::Boundary);
        let sol = solve(&QpProblem::new(cost(DMatrix::identity(1, 1), vec![0.0]), cons), None);
        assert_eq!(sol.status, QpStatus::Infeasible);
    }

    #[test]
    fn drops_dependent_equalities() {
        let mut cons = LinearConstraintSet::new(2);
        cons.push(vec![1.0, 1.0], RowKind::Equality, 1.0, ConstraintTag::InitialCondition);
        cons.push(vec![2.0, 2.0], RowKind::Equality, 2.0, ConstraintTag::InitialCondition);
        let sol = solve(&QpProblem::new(cost(DMatrix::identity(2, 2), vec![0.0, 0.0]), cons), None);
        assert_eq!(sol.status, QpStatus::Optimal);
        assert_eq!(sol.dropped_rows, vec![1]);
        assert!((sol.params[0] - 0.5).abs() < 1e-6 && (sol.params[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn equality_and_inequality_mix() {
        // min x^2 + y^2 s.t. x + y = 2, x <= 0.5
        let mut cons = LinearConstraintSet::new(2);
        cons.push(vec![1.0, 1.0], RowKind::Equality, 2.0, ConstraintTag::InitialCondition);
        cons.push(vec![1.0, 0.0], RowKind::Inequality, 0.5, ConstraintTag::Boundary);
        let sol = solve(&QpProblem::new(cost(DMatrix::identity(2, 2), vec![0.0, 0.0]), cons), None);
        assert!((sol.params[0] - 0.5).abs() < 1e-6 && (sol.params[1] - 1.5).abs() < 1e-6);
        assert_eq!(sol.active_set, vec![1]);
    }

    #[test]
    fn warm_start_from_optimum_is_immediate() {
        let mut cons = LinearConstraintSet::new(2);
        cons.push(vec![-1.0, 0.0], RowKind::Inequality, -1.0, ConstraintTag::Boundary);
        cons.push(vec![0.0, -1.0], RowKind::Inequality, -2.0, ConstraintTag::Boundary);
        let problem = QpProblem::new(cost(DMatrix::identity(2, 2), vec![0.0, 0.0]), cons);
        let cold = solve(&problem, None);
        let warm = solve(&problem, Some(&cold));
        assert_eq!(warm.status, QpStatus::Optimal);
        assert!(warm.iterations <= 2);
        assert!(warm.iterations < cold.iterations);
    }
}
