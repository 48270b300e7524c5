//! Longitudinal speed optimization in the station-time plane.
//!
//! The DP state carries the last two station increments besides the station
//! itself, so acceleration and jerk of a candidate transition are exact
//! finite differences rather than estimates from a single best parent. That
//! keeps the search exact under acceleration and jerk pruning.
//!
//! Stations here are relative to the ego's current station.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::SpeedConfig;
use crate::path::NudgeSpeedLimit;
use crate::projection::{StRegion, StRegionKind};
use crate::qp::{self, QpProblem, QpSolution, QpStatus};
use crate::spline::{
    build_constraints, guidance_cost, smoothness_cost, ConstraintSpec, ConstraintTag, PiecewiseLinear,
    Spline, SplineError, DEFAULT_JOINT_ORDER, DEFAULT_ORDER,
};

const TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpeedError {
    #[error("no speed profile survives pruning")]
    NoFeasibleProfile,
    #[error("speed tunnel is empty at t = {t}")]
    DegenerateTunnel { t: f64 },
    #[error("speed QP infeasible; violated rows tagged {tags:?}")]
    QpInfeasible { tags: Vec<ConstraintTag> },
    #[error(transparent)]
    Spline(#[from] SplineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedLimits {
    pub v_ref: f64,
    pub v_upper: f64,
    pub acc_max: f64,
    /// Positive magnitude.
    pub dec_max: f64,
    pub jerk_max: f64,
}

impl SpeedLimits {
    pub fn from_config(config: &SpeedConfig) -> Self {
        Self {
            v_ref: config.v_ref,
            v_upper: config.v_upper,
            acc_max: config.acc_max,
            dec_max: config.dec_max,
            jerk_max: config.jerk_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpeedDecisionKind {
    Yield,
    Overtake,
    Follow,
    Stop,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpeedDecision {
    pub source_id: String,
    pub kind: SpeedDecisionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpSpeedProfile {
    pub times: Vec<f64>,
    pub stations: Vec<f64>,
    pub decisions: Vec<SpeedDecision>,
    pub cost: f64,
}

impl DpSpeedProfile {
    pub fn station_at(&self, t: f64) -> f64 {
        let idx = self.times.partition_point(|&x| x <= t).clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[idx - 1], self.times[idx]);
        let (s0, s1) = (self.stations[idx - 1], self.stations[idx]);
        s0 + (t - t0) / (t1 - t0) * (s1 - s0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedTunnel {
    pub times: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedProfile {
    pub spline: Spline,
    pub objective: f64,
    pub qp_iterations: usize,
}

impl SpeedProfile {
    pub fn station(&self, t: f64) -> f64 {
        self.spline.eval_clamped(t, 0)
    }

    pub fn velocity(&self, t: f64) -> f64 {
        self.spline.eval_clamped(t, 1)
    }

    pub fn acceleration(&self, t: f64) -> f64 {
        self.spline.eval_clamped(t, 2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeedPlan {
    pub dp: DpSpeedProfile,
    pub tunnel: SpeedTunnel,
    pub profile: SpeedProfile,
    #[serde(skip)]
    pub qp_solution: Option<QpSolution>,
    #[serde(skip)]
    pub qp_problem: Option<QpProblem>,
}

/// Everything the search needs besides the grid.
#[derive(Debug, Clone)]
pub struct SpeedProblem<'a> {
    pub regions: &'a [StRegion],
    pub limits: SpeedLimits,
    pub v0: f64,
    pub a0: f64,
    /// Hard speed caps over station spans.
    pub caps: &'a [NudgeSpeedLimit],
    /// Station spans where the ego may not come to a stop.
    pub keep_clear: &'a [(f64, f64)],
    /// Largest admissible station (end of the path).
    pub s_limit: f64,
    pub config: &'a SpeedConfig,
}

impl SpeedProblem<'_> {
    pub fn follow_buffer(&self) -> f64 {
        self.config.follow_min.max(self.config.follow_time * self.v0)
    }

    fn buffer(&self, kind: StRegionKind) -> f64 {
        match kind {
            StRegionKind::Obstacle | StRegionKind::StaticObstacle => self.follow_buffer(),
            StRegionKind::StopLine | StRegionKind::KeepClear => 0.0,
        }
    }

    /// Upper speed at time `t`, relaxed so that an ego above the limit can
    /// brake down to it.
    pub fn v_upper_at(&self, t: f64) -> f64 {
        self.limits.v_upper.max(self.v0 - self.limits.dec_max * t)
    }

    pub fn cap_at(&self, s: f64) -> f64 {
        self.caps
            .iter()
            .filter(|c| s >= c.s_start && s <= c.s_end)
            .map(|c| c.speed)
            .fold(f64::INFINITY, f64::min)
    }
}

/// DP grid and the per-time blocked intervals derived from the regions.
pub struct SpeedGrid<'a> {
    pub problem: SpeedProblem<'a>,
    pub dt: f64,
    pub ds: f64,
    pub layers: usize,
    pub max_cell: i64,
    /// Sub-steps per layer for region checks.
    substeps: usize,
    /// Inflated blocked station intervals per check time.
    blocked: Vec<Vec<(f64, f64)>>,
    /// Raw region intervals per layer time, for the proximity cost.
    raw: Vec<Vec<(f64, f64)>>,
}

/// A DP node: station cell, last increment and last increment change.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpState {
    pub cell: i64,
    pub delta: i64,
    /// Change of increment into this node, in cells (real for layer 1,
    /// whose predecessor is the continuous initial state).
    pub delta_change: f64,
}

impl<'a> SpeedGrid<'a> {
    pub fn new(problem: SpeedProblem<'a>) -> Self {
        let c = problem.config;
        let dt = c.dp_dt;
        let ds = c.dp_ds;
        let layers = (c.horizon / dt).round() as usize;
        let substeps = ((dt / c.check_dt).round() as usize).max(1);
        let max_cell = (problem.s_limit / ds).floor().max(0.0) as i64;
        let check_times: Vec<f64> = (0..=layers * substeps).map(|k| k as f64 * dt / substeps as f64).collect();
        let blocked = check_times
            .iter()
            .map(|&t| {
                problem
                    .regions
                    .iter()
                    .filter(|r| r.kind != StRegionKind::KeepClear)
                    .filter_map(|r| r.s_range_at(t).map(|(lo, hi)| (lo - problem.buffer(r.kind), hi)))
                    .collect()
            })
            .collect();
        let raw = (0..=layers)
            .map(|i| {
                let t = i as f64 * dt;
                problem
                    .regions
                    .iter()
                    .filter(|r| r.kind != StRegionKind::KeepClear)
                    .filter_map(|r| r.s_range_at(t))
                    .collect()
            })
            .collect();
        Self { problem, dt, ds, layers, max_cell, substeps, blocked, raw }
    }

    pub fn initial_delta(&self) -> f64 {
        self.problem.v0 * self.dt / self.ds
    }

    fn is_blocked(&self, k: usize, s: f64) -> bool {
        self.blocked[k].iter().any(|&(lo, hi)| s > lo + TOL && s < hi - TOL)
    }

    fn proximity_cost(&self, layer: usize, s: f64) -> f64 {
        let c = self.problem.config;
        let d = self.raw[layer]
            .iter()
            .map(|&(lo, hi)| if s < lo { lo - s } else if s > hi { s - hi } else { 0.0 })
            .fold(f64::INFINITY, f64::min);
        if d < c.obstacle_range {
            c.w_obstacle * (1.0 / d.max(0.5) - 1.0 / c.obstacle_range)
        } else {
            0.0
        }
    }

    /// Admissible increments out of `prev` into `layer`.
    pub fn candidate_deltas(&self, prev: Option<&DpState>) -> std::ops::RangeInclusive<i64> {
        let l = &self.problem.limits;
        let scale = self.dt * self.dt / self.ds;
        let (base, change) = match prev {
            None => (self.initial_delta(), None),
            Some(p) => (p.delta as f64, Some(p.delta_change)),
        };
        let mut lo = base - l.dec_max * scale;
        let mut hi = base + l.acc_max * scale;
        if let Some(dc) = change {
            let j = l.jerk_max * self.dt * scale;
            lo = lo.max(base + dc - j);
            hi = hi.min(base + dc + j);
        }
        let lo = (lo - TOL).ceil().max(0.0) as i64;
        let hi = (hi + TOL).floor() as i64;
        lo..=hi
    }

    /// Terminal rule for static regions the ego has not passed: one that
    /// would be reached within the horizon at cruise speed demands a halt,
    /// any other must stay within braking reach.
    pub fn terminal_ok(&self, state: &DpState) -> bool {
        let p = &self.problem;
        let v = state.delta as f64 * self.ds / self.dt;
        let s = state.cell as f64 * self.ds;
        let reach = s + v * v / (2.0 * p.limits.dec_max);
        let horizon = self.layers as f64 * self.dt;
        p.regions
            .iter()
            .filter(|r| matches!(r.kind, StRegionKind::StaticObstacle | StRegionKind::StopLine))
            .filter_map(|r| r.s_range_at(horizon).map(|(lo, _)| (lo - p.buffer(r.kind), s > lo)))
            .all(|(limit, passed)| {
                passed || (reach <= limit + TOL && (state.delta == 0 || limit >= p.limits.v_ref * horizon))
            })
    }

    /// Cost of moving from `prev` (or the initial state) into `layer` with
    /// increment `delta`, or `None` if the move is pruned.
    pub fn transition(&self, layer: usize, prev: Option<&DpState>, delta: i64) -> Option<(DpState, f64)> {
        let p = &self.problem;
        let c = p.config;
        let (dt, ds) = (self.dt, self.ds);
        let (cell0, base, change) = match prev {
            None => (0, self.initial_delta(), None),
            Some(s) => (s.cell, s.delta as f64, Some(s.delta_change)),
        };
        if delta < 0 {
            return None;
        }
        let cell = cell0 + delta;
        if cell > self.max_cell {
            return None;
        }
        let dc = delta as f64 - base;
        let v = delta as f64 * ds / dt;
        let a = dc * ds / (dt * dt);
        let jerk = change.map_or(0.0, |prev_dc| (dc - prev_dc) * ds / (dt * dt * dt));
        let t = layer as f64 * dt;
        if v > p.v_upper_at(t) + TOL
            || a > p.limits.acc_max + TOL
            || a < -p.limits.dec_max - TOL
            || jerk.abs() > p.limits.jerk_max + TOL
        {
            return None;
        }
        let (s_from, s_to) = (cell0 as f64 * ds, cell as f64 * ds);
        if v > p.cap_at(s_from).min(p.cap_at(s_to)).min(p.cap_at(0.5 * (s_from + s_to))) + TOL {
            return None;
        }
        if delta == 0 && p.keep_clear.iter().any(|&(lo, hi)| s_to > lo + TOL && s_to < hi - TOL) {
            return None;
        }
        let k0 = (layer - 1) * self.substeps;
        for m in 1..=self.substeps {
            let s = s_from + (s_to - s_from) * m as f64 / self.substeps as f64;
            if self.is_blocked(k0 + m, s) {
                return None;
            }
        }
        let dv = v - p.limits.v_ref;
        let w_v = if dv < 0.0 { c.w_speed_below } else { c.w_speed_above };
        let cost = w_v * dv * dv * dt
            + c.w_acc * a * a * dt
            + c.w_jerk * jerk * jerk * dt
            + self.proximity_cost(layer, s_to);
        Some((DpState { cell, delta, delta_change: dc }, cost))
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    state: DpState,
    cost: f64,
    parent: usize,
}

/// Exact forward DP over the augmented grid. Returns the station cells per
/// layer (layer 0 is the start) and the total cost.
pub fn dp_cells(grid: &SpeedGrid<'_>) -> Result<(Vec<i64>, f64), SpeedError> {
    let mut layers: Vec<Vec<Node>> = Vec::with_capacity(grid.layers + 1);
    let mut first = Vec::new();
    for delta in grid.candidate_deltas(None) {
        if let Some((state, cost)) = grid.transition(1, None, delta) {
            first.push(Node { state, cost, parent: 0 });
        }
    }
    layers.push(first);
    for layer in 2..=grid.layers {
        let prev = &layers[layer - 2];
        let mut next: Vec<Node> = Vec::new();
        let mut index: HashMap<(i64, i64, i64), usize> = HashMap::new();
        for (pi, node) in prev.iter().enumerate() {
            for delta in grid.candidate_deltas(Some(&node.state)) {
                let Some((state, tc)) = grid.transition(layer, Some(&node.state), delta) else { continue };
                let cost = node.cost + tc;
                let key = (state.cell, state.delta, (state.delta_change).round() as i64);
                match index.get(&key) {
                    Some(&i) => {
                        if cost < next[i].cost {
                            next[i] = Node { state, cost, parent: pi };
                        }
                    }
                    None => {
                        index.insert(key, next.len());
                        next.push(Node { state, cost, parent: pi });
                    }
                }
            }
        }
        layers.push(next);
    }
    let last = layers.last().ok_or(SpeedError::NoFeasibleProfile)?;
    let best = last
        .iter()
        .enumerate()
        .filter(|(_, n)| grid.terminal_ok(&n.state))
        .min_by(|a, b| a.1.cost.total_cmp(&b.1.cost).then(b.1.state.cell.cmp(&a.1.state.cell)))
        .map(|(i, _)| i)
        .ok_or(SpeedError::NoFeasibleProfile)?;
    let total = last[best].cost;
    let mut cells = vec![0; grid.layers + 1];
    let mut idx = best;
    for layer in (1..=grid.layers).rev() {
        let node = &layers[layer - 1][idx];
        cells[layer] = node.state.cell;
        idx = node.parent;
    }
    Ok((cells, total))
}

fn region_side(
    region: &StRegion,
    profile: &DpSpeedProfile,
    check_dt: f64,
) -> (usize, usize, f64) {
    let (t0, t1) = region.t_range();
    let horizon = *profile.times.last().unwrap();
    let mut below = 0;
    let mut above = 0;
    let mut min_gap = f64::INFINITY;
    let mut t = t0.max(0.0);
    while t <= t1.min(horizon) + 1e-9 {
        if let Some((lo, hi)) = region.s_range_at(t) {
            let s = profile.station_at(t);
            if s <= 0.5 * (lo + hi) {
                below += 1;
                min_gap = min_gap.min(lo - s);
            } else {
                above += 1;
            }
        }
        t += check_dt;
    }
    (below, above, min_gap)
}

/// Decisions per region and the tunnel they imply, sampled at `times`.
pub fn decide_and_tunnel(
    problem: &SpeedProblem<'_>,
    profile: &DpSpeedProfile,
    times: &[f64],
) -> Result<(Vec<SpeedDecision>, SpeedTunnel), SpeedError> {
    let c = problem.config;
    let terminal = *profile.stations.last().unwrap();
    let mut bounds: Vec<(f64, f64)> = times.iter().map(|_| (0.0, problem.s_limit)).collect();
    let mut decisions = Vec::new();
    for region in problem.regions {
        let buffer = problem.buffer(region.kind);
        let kind = if region.kind == StRegionKind::KeepClear {
            let (lo, _) = region.s_bounds();
            if terminal <= lo + 1e-9 {
                SpeedDecisionKind::Yield
            } else {
                SpeedDecisionKind::Overtake
            }
        } else {
            let (below, above, gap) = region_side(region, profile, c.check_dt);
            if above > below {
                SpeedDecisionKind::Overtake
            } else if matches!(region.kind, StRegionKind::StaticObstacle | StRegionKind::StopLine) {
                SpeedDecisionKind::Stop
            } else if gap <= 2.0 * buffer + 1e-9 && region.kind == StRegionKind::Obstacle {
                SpeedDecisionKind::Follow
            } else {
                SpeedDecisionKind::Yield
            }
        };
        for (k, &t) in times.iter().enumerate() {
            let b = &mut bounds[k];
            if region.kind == StRegionKind::KeepClear {
                if kind == SpeedDecisionKind::Yield {
                    b.1 = b.1.min(region.s_bounds().0);
                }
                continue;
            }
            let Some((lo, hi)) = region.s_range_at(t) else { continue };
            match kind {
                SpeedDecisionKind::Overtake => b.0 = b.0.max(hi),
                _ => b.1 = b.1.min(lo - buffer),
            }
        }
        decisions.push(SpeedDecision { source_id: region.source_id.clone(), kind });
    }
    for (k, &(lo, hi)) in bounds.iter().enumerate() {
        if lo > hi + 1e-9 {
            return Err(SpeedError::DegenerateTunnel { t: times[k] });
        }
    }
    Ok((decisions, SpeedTunnel { times: times.to_vec(), bounds }))
}

/// DP search, decisions and tunnel.
pub fn dp_speed_search(problem: &SpeedProblem<'_>) -> Result<(DpSpeedProfile, SpeedTunnel), SpeedError> {
    let grid = SpeedGrid::new(problem.clone());
    let (cells, cost) = dp_cells(&grid)?;
    let times: Vec<f64> = (0..=grid.layers).map(|i| i as f64 * grid.dt).collect();
    let stations = cells.iter().map(|&c| c as f64 * grid.ds).collect();
    let mut dp = DpSpeedProfile { times, stations, decisions: Vec::new(), cost };
    let check_times = qp_times(problem.config);
    let (decisions, tunnel) = decide_and_tunnel(problem, &dp, &check_times)?;
    dp.decisions = decisions;
    Ok((dp, tunnel))
}

pub fn qp_times(config: &SpeedConfig) -> Vec<f64> {
    let n = (config.horizon / config.qp_dt).round() as usize;
    (0..=n).map(|k| k as f64 * config.qp_dt).collect()
}

/// Spline QP for `S(t)` tracking the DP profile inside the tunnel.
pub fn qp_speed(
    problem: &SpeedProblem<'_>,
    dp: &DpSpeedProfile,
    tunnel: &SpeedTunnel,
    warm_start: Option<&QpSolution>,
) -> Result<(SpeedProfile, QpSolution, QpProblem), SpeedError> {
    let c = problem.config;
    let l = &problem.limits;
    let horizon = c.horizon;
    let segs = c.qp_segments;
    let knots: Vec<f64> = (0..=segs).map(|k| horizon * k as f64 / segs as f64).collect();
    let order = DEFAULT_ORDER;
    let guide = PiecewiseLinear::new(dp.times.clone(), dp.stations.clone());
    let cost = guidance_cost(&knots, order, &guide, c.qp_w_ref)?
        .add(&smoothness_cost(&knots, order, 2, c.qp_w_acc)?)
        .add(&smoothness_cost(&knots, order, 3, c.qp_w_jerk)?);
    let mut specs = vec![
        ConstraintSpec::Initial { x: 0.0, derivative: 0, value: 0.0 },
        ConstraintSpec::Initial { x: 0.0, derivative: 1, value: problem.v0 },
        ConstraintSpec::Initial { x: 0.0, derivative: 2, value: problem.a0 },
        ConstraintSpec::Joints { order: DEFAULT_JOINT_ORDER },
        ConstraintSpec::Monotone { points: tunnel.times.clone() },
    ];
    let acc_lo = -l.dec_max.max(-problem.a0);
    let acc_hi = l.acc_max.max(problem.a0);
    for (k, &t) in tunnel.times.iter().enumerate().skip(1) {
        let (lo, hi) = tunnel.bounds[k];
        let mut v_hi = problem.v_upper_at(t);
        let cap = problem.cap_at(dp.station_at(t));
        if cap.is_finite() {
            v_hi = v_hi.min(cap);
        }
        specs.push(ConstraintSpec::Bound { x: t, derivative: 0, lower: lo, upper: hi });
        specs.push(ConstraintSpec::Bound { x: t, derivative: 1, lower: 0.0, upper: v_hi });
        specs.push(ConstraintSpec::Bound { x: t, derivative: 2, lower: acc_lo, upper: acc_hi });
        specs.push(ConstraintSpec::Bound { x: t, derivative: 3, lower: -l.jerk_max, upper: l.jerk_max });
    }
    // Braking reach past the horizon: with S'(T) <= v_dp the linear row
    // S(T) + v_dp S'(T) / (2 dec) <= limit bounds S(T) + S'(T)^2 / (2 dec).
    let n = dp.times.len();
    let v_dp = (dp.stations[n - 1] - dp.stations[n - 2]) / (dp.times[n - 1] - dp.times[n - 2]);
    for region in problem.regions {
        if !matches!(region.kind, StRegionKind::StaticObstacle | StRegionKind::StopLine) {
            continue;
        }
        let Some((lo, _)) = region.s_range_at(horizon) else { continue };
        if dp.stations[n - 1] > lo {
            continue;
        }
        let limit = lo - problem.buffer(region.kind);
        specs.push(ConstraintSpec::Bound { x: horizon, derivative: 1, lower: 0.0, upper: v_dp });
        specs.push(ConstraintSpec::Heading {
            x: horizon,
            c: v_dp / (2.0 * l.dec_max),
            lower: f64::NEG_INFINITY,
            upper: limit,
        });
    }
    let constraints = build_constraints(&knots, order, &specs)?;
    let qp_problem = QpProblem::new(cost, constraints);
    let solution = qp::solve(&qp_problem, warm_start);
    if solution.status != QpStatus::Optimal {
        return Err(SpeedError::QpInfeasible { tags: crate::path::violated_tags(&qp_problem) });
    }
    let spline = Spline::new(knots, order, solution.params.clone())?;
    let profile = SpeedProfile {
        spline,
        objective: solution.objective + qp_problem.cost.constant,
        qp_iterations: solution.iterations,
    };
    Ok((profile, solution, qp_problem))
}

/// DP, tunnel and QP in sequence.
pub fn plan_speed(problem: &SpeedProblem<'_>, warm_start: Option<&QpSolution>) -> Result<SpeedPlan, SpeedError> {
    let (dp, tunnel) = dp_speed_search(problem)?;
    let (profile, solution, qp_problem) = qp_speed(problem, &dp, &tunnel, warm_start)?;
    Ok(SpeedPlan { dp, tunnel, profile, qp_solution: Some(solution), qp_problem: Some(qp_problem) })
}
