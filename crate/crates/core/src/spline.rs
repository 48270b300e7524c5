//! Piecewise polynomial splines and the quadratic costs and linear
//! constraints used by the smoothing QPs.
//!
//! Segment `k` of a spline of order `m` is the polynomial
//! `p_k0 + p_k1 t + ... + p_km t^m` in the local variable `t = x - x_k`.
//! Parameters are stacked segment by segment, so a spline with `n`
//! segments has `n * (m + 1)` parameters.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_ORDER: usize = 5;
pub const DEFAULT_JOINT_ORDER: usize = 3;
pub const MAX_ORDER: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplineError {
    #[error("knots must be strictly increasing and at least two")]
    BadKnots,
    #[error("spline order {0} is not supported (max {MAX_ORDER})")]
    BadOrder(usize),
    #[error("coefficient count {got} does not match {expected}")]
    BadCoefficients { got: usize, expected: usize },
    #[error("x = {x} lies outside the knot range [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },
    #[error("derivative order {derivative} exceeds spline order {order}")]
    DerivativeTooHigh { derivative: usize, order: usize },
    #[error("guidance covers [{g_lo}, {g_hi}] but knots span [{lo}, {hi}]")]
    GuidanceDomainMismatch { g_lo: f64, g_hi: f64, lo: f64, hi: f64 },
    #[error("constraint at x = {x} has lower bound {lower} above upper bound {upper}")]
    InfeasibleBox { x: f64, lower: f64, upper: f64 },
}

/// Falling factorial `a (a - 1) ... (a - i + 1)`.
fn falling(a: usize, i: usize) -> f64 {
    (0..i).map(|k| (a - k) as f64).product()
}

/// Coefficients of the `derivative`-th derivative of the monomial basis at
/// local coordinate `t`, written into `out[0..=order]`.
pub fn local_basis(order: usize, derivative: usize, t: f64, out: &mut [f64]) {
    for (a, slot) in out.iter_mut().enumerate().take(order + 1) {
        *slot = if a < derivative {
            0.0
        } else {
            falling(a, derivative) * t.powi((a - derivative) as i32)
        };
    }
}

fn check_knots(knots: &[f64], order: usize) -> Result<(), SplineError> {
    if knots.len() < 2 || knots.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SplineError::BadKnots);
    }
    if order == 0 || order > MAX_ORDER {
        return Err(SplineError::BadOrder(order));
    }
    Ok(())
}

/// Segment holding `x`, with half-open intervals and the last one closed.
fn segment_of(knots: &[f64], x: f64) -> Result<usize, SplineError> {
    let (lo, hi) = (knots[0], knots[knots.len() - 1]);
    // Roundoff at either end is tolerated; the end polynomial extends smoothly.
    let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
    if !(x >= lo - slack && x <= hi + slack) {
        return Err(SplineError::OutOfDomain { x, lo, hi });
    }
    let idx = knots.partition_point(|&k| k <= x);
    Ok(idx.saturating_sub(1).min(knots.len() - 2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spline {
    knots: Vec<f64>,
    order: usize,
    coeffs: Vec<f64>,
}

impl Spline {
    pub fn new(knots: Vec<f64>, order: usize, coeffs: Vec<f64>) -> Result<Self, SplineError> {
        check_knots(&knots, order)?;
        let expected = (knots.len() - 1) * (order + 1);
        if coeffs.len() != expected {
            return Err(SplineError::BadCoefficients { got: coeffs.len(), expected });
        }
        Ok(Self { knots, order, coeffs })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn num_segments(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// `derivative`-th derivative at `x`.
    pub fn eval(&self, x: f64, derivative: usize) -> Result<f64, SplineError> {
        if derivative > self.order {
            return Err(SplineError::DerivativeTooHigh { derivative, order: self.order });
        }
        let k = segment_of(&self.knots, x)?;
        let t = x - self.knots[k];
        let mut basis = [0.0; MAX_ORDER + 1];
        local_basis(self.order, derivative, t, &mut basis);
        let m1 = self.order + 1;
        Ok(self.coeffs[k * m1..(k + 1) * m1]
            .iter()
            .zip(&basis)
            .map(|(c, b)| c * b)
            .sum())
    }

    /// Evaluation clamped to the domain; derivatives of order 1 and above
    /// are continued from the boundary value.
    pub fn eval_clamped(&self, x: f64, derivative: usize) -> f64 {
        let (lo, hi) = self.domain();
        let xc = x.clamp(lo, hi);
        let base = self.eval(xc, derivative).unwrap_or(0.0);
        if derivative == 0 && x != xc {
            base + self.eval(xc, 1).unwrap_or(0.0) * (x - xc)
        } else {
            base
        }
    }
}

/// Row of the stacked parameter vector evaluating `f^(derivative)(x)`.
pub fn basis_row(
    knots: &[f64],
    order: usize,
    x: f64,
    derivative: usize,
) -> Result<Vec<f64>, SplineError> {
    if derivative > order {
        return Err(SplineError::DerivativeTooHigh { derivative, order });
    }
    let k = segment_of(knots, x)?;
    let m1 = order + 1;
    let mut row = vec![0.0; (knots.len() - 1) * m1];
    local_basis(order, derivative, x - knots[k], &mut row[k * m1..(k + 1) * m1]);
    Ok(row)
}

/// `p^T Q p + linear^T p + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticCost {
    pub q: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
}

impl QuadraticCost {
    pub fn zeros(n: usize) -> Self {
        Self { q: DMatrix::zeros(n, n), linear: DVector::zeros(n), constant: 0.0 }
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn value(&self, p: &DVector<f64>) -> f64 {
        p.dot(&(&self.q * p)) + self.linear.dot(p) + self.constant
    }

    pub fn add(mut self, other: &QuadraticCost) -> Self {
        self.q += &other.q;
        self.linear += &other.linear;
        self.constant += other.constant;
        self
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        self.q *= factor;
        self.linear *= factor;
        self.constant *= factor;
        self
    }
}

/// `weight * integral (f^(derivative))^2` as a block-diagonal quadratic form.
pub fn smoothness_cost(
    knots: &[f64],
    order: usize,
    derivative: usize,
    weight: f64,
) -> Result<QuadraticCost, SplineError> {
    check_knots(knots, order)?;
    if derivative > order {
        return Err(SplineError::DerivativeTooHigh { derivative, order });
    }
    let m1 = order + 1;
    let n = (knots.len() - 1) * m1;
    let mut cost = QuadraticCost::zeros(n);
    for (k, w) in knots.windows(2).enumerate() {
        let h = w[1] - w[0];
        for a in derivative..=order {
            for b in derivative..=order {
                let power = (a + b - 2 * derivative + 1) as i32;
                let value = falling(a, derivative) * falling(b, derivative) * h.powi(power)
                    / power as f64;
                cost.q[(k * m1 + a, k * m1 + b)] = weight * value;
            }
        }
    }
    Ok(cost)
}

/// Piecewise linear function through `(x, y)` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        debug_assert_eq!(xs.len(), ys.len());
        Self { xs, ys }
    }

    pub fn constant(lo: f64, hi: f64, value: f64) -> Self {
        Self { xs: vec![lo, hi], ys: vec![value, value] }
    }

    /// Samples `f` at `n + 1` evenly spaced points on `[lo, hi]`.
    pub fn sample(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let ys = xs.iter().map(|&x| f(x)).collect();
        Self { xs, ys }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.xs[0], self.xs[self.xs.len() - 1])
    }

    /// Linear interpolation; constant extrapolation outside the samples.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let u = if x1 > x0 { (x - x0) / (x1 - x0) } else { 0.0 };
        self.ys[i] + u * (self.ys[i + 1] - self.ys[i])
    }
}

const GAUSS_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

/// `weight * integral (f - g)^2` as `p^T Q p - 2 p^T c + const`.
///
/// The `g` integrals use five-point Gauss-Legendre on every piece between
/// knots and guidance breakpoints, which is exact for a piecewise linear
/// guidance against quintic segments.
pub fn guidance_cost(
    knots: &[f64],
    order: usize,
    guidance: &PiecewiseLinear,
    weight: f64,
) -> Result<QuadraticCost, SplineError> {
    check_knots(knots, order)?;
    let (lo, hi) = (knots[0], knots[knots.len() - 1]);
    let (g_lo, g_hi) = guidance.domain();
    let tol = 1e-9 * (1.0 + hi.abs());
    if g_lo > lo + tol || g_hi < hi - tol {
        return Err(SplineError::GuidanceDomainMismatch { g_lo, g_hi, lo, hi });
    }
    let m1 = order + 1;
    let mut cost = QuadraticCost::zeros((knots.len() - 1) * m1);
    let mut basis = [0.0; MAX_ORDER + 1];
    for (k, w) in knots.windows(2).enumerate() {
        let (x0, x1) = (w[0], w[1]);
        let h = x1 - x0;
        for a in 0..=order {
            for b in 0..=order {
                let power = (a + b + 1) as i32;
                cost.q[(k * m1 + a, k * m1 + b)] = weight * h.powi(power) / power as f64;
            }
        }
        let mut cuts = vec![x0];
        cuts.extend(guidance.xs.iter().copied().filter(|&x| x > x0 && x < x1));
        cuts.push(x1);
        for piece in cuts.windows(2) {
            let (a, b) = (piece[0], piece[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            for (node, gw) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                let x = mid + half * node;
                let g = guidance.eval(x);
                local_basis(order, 0, x - x0, &mut basis);
                for j in 0..=order {
                    cost.linear[k * m1 + j] -= 2.0 * weight * gw * half * basis[j] * g;
                }
                cost.constant += weight * gw * half * g * g;
            }
        }
    }
    Ok(cost)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstraintTag {
    Boundary,
    SmoothnessJoint,
    Monotonicity,
    InitialCondition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowKind {
    /// `a . p = b`
    Equality,
    /// `a . p <= b`
    Inequality,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintRow {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
    pub kind: RowKind,
    pub tag: ConstraintTag,
}

impl ConstraintRow {
    pub fn eval(&self, p: &[f64]) -> f64 {
        self.coeffs.iter().zip(p).map(|(a, b)| a * b).sum()
    }

    /// Positive when the row is violated.
    pub fn violation(&self, p: &[f64]) -> f64 {
        let r = self.eval(p) - self.rhs;
        match self.kind {
            RowKind::Equality => r.abs(),
            RowKind::Inequality => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearConstraintSet {
    pub num_params: usize,
    pub rows: Vec<ConstraintRow>,
}

impl LinearConstraintSet {
    pub fn new(num_params: usize) -> Self {
        Self { num_params, rows: Vec::new() }
    }

    pub fn push(&mut self, coeffs: Vec<f64>, kind: RowKind, rhs: f64, tag: ConstraintTag) {
        debug_assert_eq!(coeffs.len(), self.num_params);
        self.rows.push(ConstraintRow { coeffs, rhs, kind, tag });
    }

    /// Adds `lower <= a . p <= upper`, skipping infinite sides.
    pub fn push_box(&mut self, coeffs: Vec<f64>, lower: f64, upper: f64, tag: ConstraintTag) {
        if lower.is_finite() {
            let neg = coeffs.iter().map(|v| -v).collect();
            self.push(neg, RowKind::Inequality, -lower, tag);
        }
        if upper.is_finite() {
            self.push(coeffs, RowKind::Inequality, upper, tag);
        }
    }

    pub fn equality_count(&self) -> usize {
        self.rows.iter().filter(|r| r.kind == RowKind::Equality).count()
    }

    pub fn max_violation(&self, p: &[f64]) -> f64 {
        self.rows.iter().map(|r| r.violation(p)).fold(0.0, f64::max)
    }
}

/// One requested family of constraint rows.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSpec {
    /// `lower <= f^(derivative)(x) <= upper`
    Bound { x: f64, derivative: usize, lower: f64, upper: f64 },
    /// `lower <= f(x) + c f'(x) <= upper`
    Heading { x: f64, c: f64, lower: f64, upper: f64 },
    /// `f^(derivative)(x) = value`
    Initial { x: f64, derivative: usize, value: f64 },
    /// Continuity of derivatives `0..=order` at every interior knot.
    Joints { order: usize },
    /// `f(points[i]) <= f(points[i + 1])`
    Monotone { points: Vec<f64> },
}

pub fn build_constraints(
    knots: &[f64],
    order: usize,
    specs: &[ConstraintSpec],
) -> Result<LinearConstraintSet, SplineError> {
    check_knots(knots, order)?;
    let m1 = order + 1;
    let n = (knots.len() - 1) * m1;
    let mut set = LinearConstraintSet::new(n);
    for spec in specs {
        match spec {
            &ConstraintSpec::Bound { x, derivative, lower, upper } => {
                if lower > upper {
                    return Err(SplineError::InfeasibleBox { x, lower, upper });
                }
                let row = basis_row(knots, order, x, derivative)?;
                set.push_box(row, lower, upper, ConstraintTag::Boundary);
            }
            &ConstraintSpec::Heading { x, c, lower, upper } => {
                if lower > upper {
                    return Err(SplineError::InfeasibleBox { x, lower, upper });
                }
                let mut row = basis_row(knots, order, x, 0)?;
                let d1 = basis_row(knots, order, x, 1)?;
                row.iter_mut().zip(&d1).for_each(|(a, b)| *a += c * b);
                set.push_box(row, lower, upper, ConstraintTag::Boundary);
            }
            &ConstraintSpec::Initial { x, derivative, value } => {
                let row = basis_row(knots, order, x, derivative)?;
                set.push(row, RowKind::Equality, value, ConstraintTag::InitialCondition);
            }
            &ConstraintSpec::Joints { order: joint } => {
                if joint > order {
                    return Err(SplineError::DerivativeTooHigh { derivative: joint, order });
                }
                for k in 1..knots.len() - 1 {
                    let h = knots[k] - knots[k - 1];
                    for d in 0..=joint {
                        let mut row = vec![0.0; n];
                        local_basis(order, d, h, &mut row[(k - 1) * m1..k * m1]);
                        let mut right = [0.0; MAX_ORDER + 1];
                        local_basis(order, d, 0.0, &mut right);
                        for j in 0..=order {
                            row[k * m1 + j] -= right[j];
                        }
                        set.push(row, RowKind::Equality, 0.0, ConstraintTag::SmoothnessJoint);
                    }
                }
            }
            ConstraintSpec::Monotone { points } => {
                for w in points.windows(2) {
                    let a = basis_row(knots, order, w[0], 0)?;
                    let b = basis_row(knots, order, w[1], 0)?;
                    let row = a.iter().zip(&b).map(|(x, y)| x - y).collect();
                    set.push(row, RowKind::Inequality, 0.0, ConstraintTag::Monotonicity);
                }
            }
        }
    }
    Ok(set)
}

/// Quintic in a local variable on `[0, h]`, used for lattice edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quintic {
    pub h: f64,
    pub c: [f64; 6],
}

impl Quintic {
    /// Unique quintic matching value, slope and curvature at both ends.
    pub fn from_boundary(h: f64, start: [f64; 3], end: [f64; 3]) -> Self {
        let [p0, t0, a0] = start;
        let [p1, t1, a1] = end;
        let d = p1 - p0 - t0 * h - 0.5 * a0 * h * h;
        let e = t1 - t0 - a0 * h;
        let f = a1 - a0;
        let h2 = h * h;
        let h3 = h2 * h;
        Self {
            h,
            c: [
                p0,
                t0,
                0.5 * a0,
                (10.0 * d - 4.0 * e * h + 0.5 * f * h2) / h3,
                (-15.0 * d + 7.0 * e * h - f * h2) / (h3 * h),
                (6.0 * d - 3.0 * e * h + 0.5 * f * h2) / (h3 * h2),
            ],
        }
    }

    pub fn eval(&self, t: f64, derivative: usize) -> f64 {
        let mut basis = [0.0; 6];
        local_basis(5, derivative, t, &mut basis);
        self.c.iter().zip(&basis).map(|(c, b)| c * b).sum()
    }

    /// Exact `integral_0^h (f^(derivative))^2`.
    pub fn integral_sq(&self, derivative: usize) -> f64 {
        let mut total = 0.0;
        for a in derivative..6 {
            for b in derivative..6 {
                let power = (a + b - 2 * derivative + 1) as i32;
                total += self.c[a] * self.c[b] * falling(a, derivative) * falling(b, derivative)
                    * self.h.powi(power)
                    / power as f64;
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_of_square() {
        let s = Spline::new(vec![0.0, 1.0], 2, vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(s.eval(0.5, 1).unwrap(), 1.0);
    }

    #[test]
    fn value_at_knot_is_constant_coefficient() {
        let coeffs: Vec<f64> = (0..18).map(|i| i as f64 * 0.37 - 2.0).collect();
        let s = Spline::new(vec![0.0, 1.5, 2.0, 4.0], 5, coeffs.clone()).unwrap();
        for k in 0..3 {
            assert_eq!(s.eval(s.knots()[k], 0).unwrap(), coeffs[k * 6]);
        }
    }

    #[test]
    fn last_segment_is_closed() {
        let s = Spline::new(vec![0.0, 1.0, 2.0], 1, vec![0.0, 1.0, 5.0, 2.0]).unwrap();
        assert_eq!(s.eval(2.0, 0).unwrap(), 7.0);
        assert!(matches!(s.eval(2.0001, 0), Err(SplineError::OutOfDomain { .. })));
    }

    #[test]
    fn smoothness_of_linear_and_square() {
        let q1 = smoothness_cost(&[0.0, 1.0], 1, 1, 1.0).unwrap();
        let p = DVector::from_vec(vec![0.0, 1.0]);
        assert!((q1.value(&p) - 1.0).abs() < 1e-14);
        let q2 = smoothness_cost(&[0.0, 1.0], 2, 2, 1.0).unwrap();
        let p = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert!((q2.value(&p) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn zero_guidance_has_no_linear_term() {
        let g = PiecewiseLinear::constant(0.0, 3.0, 0.0);
        let c = guidance_cost(&[0.0, 1.0, 3.0], 5, &g, 2.0).unwrap();
        assert!(c.linear.iter().all(|v| *v == 0.0));
        assert_eq!(c.constant, 0.0);
    }

    #[test]
    fn exact_fit_of_linear_guidance_costs_nothing() {
        let g = PiecewiseLinear::new(vec![0.0, 10.0], vec![1.0, 6.0]);
        let knots = [0.0, 4.0, 10.0];
        let c = guidance_cost(&knots, 5, &g, 1.0).unwrap();
        let mut p = vec![0.0; 12];
        p[0] = 1.0;
        p[1] = 0.5;
        p[6] = 3.0;
        p[7] = 0.5;
        let v = c.value(&DVector::from_vec(p));
        assert!(v.abs() < 1e-10, "{v}");
    }

    #[test]
    fn guidance_must_cover_knots() {
        let g = PiecewiseLinear::constant(0.5, 3.0, 0.0);
        assert!(matches!(
            guidance_cost(&[0.0, 3.0], 5, &g, 1.0),
            Err(SplineError::GuidanceDomainMismatch { .. })
        ));
    }

    #[test]
    fn joint_rows_per_interior_knot() {
        let set = build_constraints(&[0.0, 1.0, 2.0], 5, &[ConstraintSpec::Joints { order: 3 }])
            .unwrap();
        assert_eq!(set.rows.len(), 4);
        assert!(set.rows.iter().all(|r| r.kind == RowKind::Equality
            && r.tag == ConstraintTag::SmoothnessJoint));
    }

    #[test]
    fn boundary_box_rows() {
        let set = build_constraints(
            &[0.0, 1.0, 3.0],
            5,
            &[ConstraintSpec::Bound { x: 2.0, derivative: 0, lower: -1.0, upper: 1.0 }],
        )
        .unwrap();
        assert_eq!(set.rows.len(), 2);
        let basis = basis_row(&[0.0, 1.0, 3.0], 5, 2.0, 0).unwrap();
        assert_eq!(set.rows[1].coeffs, basis);
        assert_eq!(set.rows[1].rhs, 1.0);
        assert_eq!(set.rows[0].rhs, 1.0);
        assert!(set.rows[0].coeffs.iter().zip(&basis).all(|(a, b)| *a == -*b));
    }

    #[test]
    fn inverted_box_is_rejected() {
        let err = build_constraints(
            &[0.0, 1.0],
            5,
            &[ConstraintSpec::Bound { x: 0.5, derivative: 0, lower: 1.0, upper: 0.0 }],
        )
        .unwrap_err();
        assert!(matches!(err, SplineError::InfeasibleBox { .. }));
    }

    #[test]
    fn monotone_rows_accept_increasing_reject_decreasing() {
        let knots = [0.0, 1.0, 2.0];
        let set = build_constraints(
            &knots,
            2,
            &[ConstraintSpec::Monotone { points: vec![0.0, 0.5, 1.5, 2.0] }],
        )
        .unwrap();
        assert_eq!(set.rows.len(), 3);
        // f = x^2 on both segments written locally.
        let up = [0.0, 0.0, 1.0, 1.0, 2.0, 1.0];
        assert!(set.rows.iter().all(|r| r.violation(&up) <= 0.0));
        let down: Vec<f64> = up.iter().map(|v| -v).collect();
        assert!(set.rows.iter().any(|r| r.violation(&down) > 0.0));
    }

    #[test]
    fn quintic_edge_matches_boundary() {
        let q = Quintic::from_boundary(12.0, [0.3, -0.1, 0.02], [1.5, 0.0, 0.0]);
        assert!((q.eval(0.0, 0) - 0.3).abs() < 1e-12);
        assert!((q.eval(0.0, 1) + 0.1).abs() < 1e-12);
        assert!((q.eval(12.0, 0) - 1.5).abs() < 1e-10);
        assert!(q.eval(12.0, 1).abs() < 1e-10);
        assert!(q.eval(12.0, 2).abs() < 1e-10);
        let flat = Quintic::from_boundary(10.0, [0.5, 0.0, 0.0], [0.5, 0.0, 0.0]);
        assert!(flat.c[1..].iter().all(|v| v.abs() < 1e-15));
    }
}
