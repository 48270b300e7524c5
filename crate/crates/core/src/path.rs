//! Lateral path optimization: lattice dynamic programming for a rough path
//! and nudge decisions, then a spline QP inside the resulting tunnel.
//!
//! Stations are absolute (on the lane's reference line); the path is the
//! lateral offset `l = f(s)` of the ego reference point.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{LatticeConfig, PathConfig};
use crate::geometry::FrenetState;
use crate::projection::{EgoFootprint, SlBox, SlRegion};
use crate::qp::{self, QpProblem, QpSolution, QpStatus};
use crate::spline::{
    build_constraints, guidance_cost, smoothness_cost, ConstraintSpec, ConstraintTag, PiecewiseLinear,
    Quintic, Spline, SplineError, DEFAULT_JOINT_ORDER, DEFAULT_ORDER,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PathError {
    #[error("lattice row {row} has no offset inside the road")]
    EmptyRow { row: usize },
    #[error("every lattice path collides (best cost {cost})")]
    AllPathsCollide { cost: f64 },
    #[error("tunnel is too narrow at station {s}: [{low}, {high}]")]
    DegenerateTunnel { s: f64, low: f64, high: f64 },
    #[error("path QP infeasible; violated rows tagged {tags:?}")]
    QpInfeasible { tags: Vec<ConstraintTag> },
    #[error(transparent)]
    Spline(#[from] SplineError),
}

/// Lateral road limits (on the body, not the reference point).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoadBounds {
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeRow {
    pub s: f64,
    pub offsets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    pub start: FrenetState,
    pub row_interval: f64,
    pub span: f64,
    /// Row 0 holds only the start offset.
    pub rows: Vec<LatticeRow>,
}

impl Lattice {
    pub fn edge_count(&self) -> usize {
        self.rows.windows(2).map(|w| w[0].offsets.len() * w[1].offsets.len()).sum()
    }

    /// Quintic edge between `from` in row `i` and `to` in row `i + 1`.
    pub fn edge(&self, i: usize, from: usize, to: usize) -> Quintic {
        let (a, b) = (&self.rows[i], &self.rows[i + 1]);
        let start = if i == 0 {
            [self.start.l, self.start.dl, self.start.ddl]
        } else {
            [a.offsets[from], 0.0, 0.0]
        };
        Quintic::from_boundary(b.s - a.s, start, [b.offsets[to], 0.0, 0.0])
    }
}

pub fn row_interval(config: &LatticeConfig, speed: f64, is_change_lane: bool) -> f64 {
    let base = config.min_row_interval.max(config.row_time * speed);
    if is_change_lane {
        base * config.lane_change_interval_factor
    } else {
        base
    }
}

pub fn lattice_span(config: &LatticeConfig, speed: f64) -> f64 {
    config.min_span.max(config.span_time * speed)
}

/// Samples lattice rows ahead of `start`. Offsets are centered on
/// `guidance` and must keep the reference point inside the road.
pub fn sample_lattice(
    config: &LatticeConfig,
    start: FrenetState,
    speed: f64,
    is_change_lane: bool,
    road: RoadBounds,
    guidance: f64,
) -> Result<Lattice, PathError> {
    let interval = row_interval(config, speed, is_change_lane);
    let span = lattice_span(config, speed);
    let n_rows = (span / interval).ceil().max(1.0) as usize;
    let mut rows = vec![LatticeRow { s: start.s, offsets: vec![start.l] }];
    let center = (config.num_offsets as f64 - 1.0) / 2.0;
    for k in 1..=n_rows {
        let offsets: Vec<f64> = (0..config.num_offsets)
            .map(|j| guidance + (j as f64 - center) * config.offset_spacing)
            .filter(|l| *l >= road.low - 1e-9 && *l <= road.high + 1e-9)
            .collect();
        if offsets.is_empty() {
            return Err(PathError::EmptyRow { row: k });
        }
        rows.push(LatticeRow { s: start.s + k as f64 * interval, offsets });
    }
    Ok(Lattice { start, row_interval: interval, span: n_rows as f64 * interval, rows })
}

/// Euclidean gap between two boxes (zero when they overlap).
pub fn box_distance(a: &SlBox, b: &SlBox) -> f64 {
    let ds = (a.s_min - b.s_max).max(b.s_min - a.s_max).max(0.0);
    let dl = (a.l_min - b.l_max).max(b.l_min - a.l_max).max(0.0);
    ds.hypot(dl)
}

pub fn body_box(footprint: &EgoFootprint, s: f64, l: f64) -> SlBox {
    let (s_min, s_max) = footprint.station_extent(s);
    let half = 0.5 * footprint.width;
    SlBox { s_min, s_max, l_min: l - half, l_max: l + half }
}

/// Cost terms shared by the lattice search and the decider.
pub struct PathCostModel<'a> {
    pub config: &'a PathConfig,
    pub footprint: EgoFootprint,
    pub road: RoadBounds,
    pub guidance: f64,
    /// Regions grouped by obstacle id, in id order.
    pub obstacles: Vec<(String, Vec<SlBox>)>,
    pub s0: f64,
}

impl<'a> PathCostModel<'a> {
    pub fn new(
        config: &'a PathConfig,
        footprint: EgoFootprint,
        road: RoadBounds,
        guidance: f64,
        regions: &[SlRegion],
        s0: f64,
    ) -> Self {
        let mut grouped: BTreeMap<String, Vec<SlBox>> = BTreeMap::new();
        for r in regions {
            grouped.entry(r.source_id.clone()).or_default().push(r.bounds());
        }
        Self { config, footprint, road, guidance, obstacles: grouped.into_iter().collect(), s0 }
    }

    /// Nudge-shaped cost of a single clearance `d`.
    pub fn nudge_cost(&self, d: f64) -> f64 {
        let c = self.config;
        if d < c.collision_buffer {
            c.collision_cost
        } else if d < c.nudge_range {
            c.w_obstacle * (c.nudge_range - d).powi(2) / (c.nudge_range - c.collision_buffer).powi(2)
        } else {
            0.0
        }
    }

    /// Smallest clearance to each obstacle with the reference point at `(s, l)`.
    pub fn clearances(&self, s: f64, l: f64) -> impl Iterator<Item = f64> + '_ {
        let body = body_box(&self.footprint, s, l);
        self.obstacles
            .iter()
            .map(move |(_, boxes)| boxes.iter().map(|b| box_distance(&body, b)).fold(f64::INFINITY, f64::min))
    }

    pub fn station_cost(&self, s: f64, l: f64) -> f64 {
        let obstacle: f64 = self.clearances(s, l).map(|d| self.nudge_cost(d)).sum();
        let half = 0.5 * self.footprint.width;
        let excess = (self.road.low - (l - half)).max(0.0) + ((l + half) - self.road.high).max(0.0);
        obstacle + self.config.off_road_cost * excess
    }

    /// Obstacle sample stations in `(s_a, s_b]` on the global grid.
    fn sample_stations(&self, s_a: f64, s_b: f64) -> impl Iterator<Item = f64> {
        let step = self.config.obstacle_sample_step;
        let first = ((s_a - self.s0) / step + 1e-9).floor() as i64 + 1;
        let last = ((s_b - self.s0) / step + 1e-9).floor() as i64;
        let s0 = self.s0;
        (first..=last).map(move |k| s0 + k as f64 * step)
    }

    /// Total cost of one lattice edge starting at station `s_a`.
    pub fn edge_cost(&self, s_a: f64, q: &Quintic) -> f64 {
        let c = self.config;
        let smooth = c.w_dl * q.integral_sq(1) + c.w_ddl * q.integral_sq(2) + c.w_dddl * q.integral_sq(3);
        let mut shifted = *q;
        shifted.c[0] -= self.guidance;
        let guide = c.w_guidance * shifted.integral_sq(0);
        let obstacle: f64 = self.sample_stations(s_a, s_a + q.h).map(|s| self.station_cost(s, q.eval(s - s_a, 0))).sum();
        smooth + guide + obstacle
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpPath {
    /// Node `(s, l)` per lattice row, starting with the start state.
    pub nodes: Vec<(f64, f64)>,
    #[serde(skip)]
    pub edges: Vec<Quintic>,
    pub cost: f64,
}

impl DpPath {
    pub fn eval(&self, s: f64) -> f64 {
        let Some(&(s_first, l_first)) = self.nodes.first() else {
            return 0.0;
        };
        if s <= s_first || self.edges.is_empty() {
            return l_first;
        }
        let idx = self.nodes.partition_point(|n| n.0 <= s).clamp(1, self.nodes.len() - 1) - 1;
        let q = &self.edges[idx];
        q.eval((s - self.nodes[idx].0).min(q.h), 0)
    }
}

fn prefer(cost: f64, l: f64, best_cost: f64, best_l: f64) -> bool {
    let tol = 1e-9 * best_cost.abs().max(1.0);
    if cost < best_cost - tol {
        return true;
    }
    if cost > best_cost + tol {
        return false;
    }
    let (a, b) = (l.abs(), best_l.abs());
    if (a - b).abs() > 1e-12 {
        return a < b;
    }
    l > best_l
}

/// Forward dynamic programming over the lattice.
pub fn dp_search(lattice: &Lattice, model: &PathCostModel<'_>) -> Result<DpPath, PathError> {
    let rows = &lattice.rows;
    let mut cost: Vec<Vec<f64>> = vec![vec![0.0]];
    let mut parent: Vec<Vec<usize>> = vec![vec![0]];
    for i in 0..rows.len() - 1 {
        let next = &rows[i + 1];
        let mut row_cost = vec![f64::INFINITY; next.offsets.len()];
        let mut row_parent = vec![0; next.offsets.len()];
        for (b, _) in next.offsets.iter().enumerate() {
            for (a, &l_a) in rows[i].offsets.iter().enumerate() {
                let c = cost[i][a] + model.edge_cost(rows[i].s, &lattice.edge(i, a, b));
                let best_l = rows[i].offsets[row_parent[b]];
                if row_cost[b].is_infinite() || prefer(c, l_a, row_cost[b], best_l) {
                    row_cost[b] = c;
                    row_parent[b] = a;
                }
            }
        }
        cost.push(row_cost);
        parent.push(row_parent);
    }
    let last = rows.len() - 1;
    let mut best = 0;
    for b in 1..rows[last].offsets.len() {
        if prefer(cost[last][b], rows[last].offsets[b], cost[last][best], rows[last].offsets[best]) {
            best = b;
        }
    }
    let total = cost[last][best];
    if total >= model.config.collision_cost {
        return Err(PathError::AllPathsCollide { cost: total });
    }
    let mut idx = vec![0; rows.len()];
    idx[last] = best;
    for i in (1..rows.len()).rev() {
        idx[i - 1] = parent[i][idx[i]];
    }
    let nodes = (0..rows.len()).map(|i| (rows[i].s, rows[i].offsets[idx[i]])).collect();
    let edges = (0..last).map(|i| lattice.edge(i, idx[i], idx[i + 1])).collect();
    Ok(DpPath { nodes, edges, cost: total })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NudgeKind {
    NudgeLeft,
    NudgeRight,
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathDecision {
    pub obstacle_id: String,
    pub kind: NudgeKind,
}

/// Bounds on the lateral extent of the body at sampled stations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleTunnel {
    pub stations: Vec<f64>,
    pub bounds: Vec<(f64, f64)>,
}

impl FeasibleTunnel {
    /// Tightest bounds over stations in `[lo, hi]`.
    pub fn window(&self, lo: f64, hi: f64) -> (f64, f64) {
        let a = self.stations.partition_point(|&s| s < lo - 1e-9);
        let b = self.stations.partition_point(|&s| s <= hi + 1e-9);
        if a >= b {
            let i = a.min(self.stations.len() - 1);
            return self.bounds[i];
        }
        self.bounds[a..b]
            .iter()
            .fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), &(l, h)| (lo.max(l), hi.min(h)))
    }
}

/// Side decisions from the DP path and the tunnel they imply.
pub fn extract_tunnel_and_decisions(
    dp: &DpPath,
    regions: &[SlRegion],
    road: RoadBounds,
    config: &PathConfig,
    footprint: &EgoFootprint,
) -> Result<(FeasibleTunnel, Vec<PathDecision>), PathError> {
    let (s_start, s_end) = (dp.nodes[0].0, dp.nodes[dp.nodes.len() - 1].0);
    let step = config.obstacle_sample_step;
    let n = ((s_end - s_start) / step).round() as usize;
    let stations: Vec<f64> = (0..=n).map(|k| s_start + k as f64 * step).collect();
    let mut bounds = vec![(road.low, road.high); stations.len()];

    let mut grouped: BTreeMap<&str, Vec<&SlRegion>> = BTreeMap::new();
    for r in regions {
        grouped.entry(r.source_id.as_str()).or_default().push(r);
    }
    let mut decisions = Vec::new();
    for (id, regs) in grouped {
        let mut above = 0usize;
        let mut below = 0usize;
        for r in &regs {
            for &s in stations.iter().filter(|&&s| s >= r.s_min && s <= r.s_max) {
                if dp.eval(s) > 0.5 * (r.l_min + r.l_max) {
                    above += 1;
                } else {
                    below += 1;
                }
            }
        }
        let kind = if above + below == 0 {
            NudgeKind::Ignore
        } else if above >= below {
            NudgeKind::NudgeLeft
        } else {
            NudgeKind::NudgeRight
        };
        if kind != NudgeKind::Ignore {
            for r in &regs {
                for (k, &s) in stations.iter().enumerate() {
                    if s < r.s_min || s > r.s_max {
                        continue;
                    }
                    let b = &mut bounds[k];
                    match kind {
                        NudgeKind::NudgeLeft => b.0 = b.0.max(r.l_max + config.collision_buffer),
                        NudgeKind::NudgeRight => b.1 = b.1.min(r.l_min - config.collision_buffer),
                        NudgeKind::Ignore => {}
                    }
                }
            }
        }
        decisions.push(PathDecision { obstacle_id: id.to_string(), kind });
    }
    for (k, &(low, high)) in bounds.iter().enumerate() {
        if high - low < footprint.width {
            return Err(PathError::DegenerateTunnel { s: stations[k], low, high });
        }
    }
    Ok((FeasibleTunnel { stations, bounds }, decisions))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathProfile {
    pub spline: Spline,
    pub decisions: Vec<PathDecision>,
    pub objective: f64,
    pub qp_iterations: usize,
}

impl PathProfile {
    pub fn lateral(&self, s: f64) -> f64 {
        self.spline.eval_clamped(s, 0)
    }
}

/// Output of the full path step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPlan {
    pub profile: PathProfile,
    pub dp: DpPath,
    pub tunnel: FeasibleTunnel,
    #[serde(skip)]
    pub qp_solution: Option<QpSolution>,
    #[serde(skip)]
    pub qp_problem: Option<QpProblem>,
}

/// Constraint stations for the path QP.
pub fn constraint_stations(s0: f64, s_end: f64, step: f64) -> Vec<f64> {
    let n = ((s_end - s0) / step).floor() as usize;
    let mut out: Vec<f64> = (1..=n).map(|k| s0 + k as f64 * step).collect();
    if out.last().is_none_or(|&s| s_end - s > 1e-6) {
        out.push(s_end);
    }
    out
}

/// How much the linearized corner offset `l_f * l'`, with `l' = tan(theta)`,
/// overstates the true offset `l_f * sin(theta)` at relative heading `theta`.
pub fn corner_linearization_error(theta: f64, l_f: f64) -> f64 {
    (theta.tan() - theta.sin()).abs() * l_f
}

/// Corner bounds on the reference point at station `s`: the tunnel window
/// over the body's extent, shrunk by half the width.
pub fn corner_bounds(tunnel: &FeasibleTunnel, footprint: &EgoFootprint, s: f64) -> (f64, f64) {
    let (lo, hi) = footprint.station_extent(s);
    let (low, high) = tunnel.window(lo, hi);
    let half = 0.5 * footprint.width;
    (low + half, high - half)
}

/// Knots with segment widths growing as 1, 2, ..., n: short segments near
/// the ego where the path has to react, long ones far ahead.
pub fn graded_knots(s0: f64, s_end: f64, segments: usize) -> Vec<f64> {
    let total = (segments * (segments + 1) / 2) as f64;
    (0..=segments).map(|k| s0 + (s_end - s0) * (k * (k + 1) / 2) as f64 / total).collect()
}

/// Spline QP for `l = f(s)` following the DP path inside the tunnel.
pub fn qp_path(
    tunnel: &FeasibleTunnel,
    dp: &DpPath,
    start: &FrenetState,
    footprint: &EgoFootprint,
    config: &PathConfig,
    decisions: Vec<PathDecision>,
    warm_start: Option<&QpSolution>,
) -> Result<(PathProfile, QpSolution, QpProblem), PathError> {
    let s0 = start.s;
    let s_end = dp.nodes[dp.nodes.len() - 1].0;
    let segs = config.qp_segments;
    let knots = graded_knots(s0, s_end, segs);
    let order = DEFAULT_ORDER;
    let n_guide = ((s_end - s0) / config.guidance_step).ceil().max(1.0) as usize + 1;
    let guide = PiecewiseLinear::sample(s0, s_end, n_guide, |s| dp.eval(s));
    let cost = smoothness_cost(&knots, order, 1, config.w_dl)?
        .add(&smoothness_cost(&knots, order, 2, config.w_ddl)?)
        .add(&smoothness_cost(&knots, order, 3, config.w_dddl)?)
        .add(&guidance_cost(&knots, order, &guide, config.qp_w_guidance)?);

    let mut specs = vec![
        ConstraintSpec::Initial { x: s0, derivative: 0, value: start.l },
        ConstraintSpec::Initial { x: s0, derivative: 1, value: start.dl },
        ConstraintSpec::Initial { x: s0, derivative: 2, value: start.ddl },
        ConstraintSpec::Joints { order: DEFAULT_JOINT_ORDER },
    ];
    let kappa = config.kappa_max.max(start.ddl.abs());
    let dkappa = config.dkappa_max.max(start.dddl.abs());
    // Near the start the body may already sit outside the tunnel; keep the
    // start state admissible there.
    let half = 0.5 * footprint.width;
    let start_low = start.l - half - start.dl.abs() * footprint.l_f.max(footprint.l_r);
    let start_high = start.l + half + start.dl.abs() * footprint.l_f.max(footprint.l_r);
    let near = footprint.l_f + footprint.l_r + footprint.width;
    for s in constraint_stations(s0, s_end, config.qp_constraint_step) {
        let (mut low, mut high) = corner_bounds(tunnel, footprint, s);
        if s - s0 <= near {
            low = low.min(start_low + half);
            high = high.max(start_high - half);
        }
        specs.push(ConstraintSpec::Heading { x: s, c: footprint.l_f, lower: low, upper: high });
        specs.push(ConstraintSpec::Heading { x: s, c: -footprint.l_r, lower: low, upper: high });
        specs.push(ConstraintSpec::Bound { x: s, derivative: 2, lower: -kappa, upper: kappa });
        specs.push(ConstraintSpec::Bound { x: s, derivative: 3, lower: -dkappa, upper: dkappa });
    }
    let constraints = build_constraints(&knots, order, &specs)?;
    let problem = QpProblem::new(cost, constraints);
    let solution = qp::solve(&problem, warm_start);
    if solution.status != QpStatus::Optimal {
        return Err(PathError::QpInfeasible { tags: violated_tags(&problem) });
    }
    let spline = Spline::new(knots, order, solution.params.clone())?;
    let profile = PathProfile {
        spline,
        decisions,
        objective: solution.objective + problem.cost.constant,
        qp_iterations: solution.iterations,
    };
    Ok((profile, solution, problem))
}

/// Tags of inequality rows violated by the equality-only optimum, used to
/// explain an infeasible QP.
pub(crate) fn violated_tags(problem: &QpProblem) -> Vec<ConstraintTag> {
    let mut relaxed = problem.clone();
    relaxed.constraints.rows.retain(|r| r.kind == crate::spline::RowKind::Equality);
    let sol = qp::solve(&relaxed, None);
    let mut tags: Vec<ConstraintTag> = problem
        .constraints
        .rows
        .iter()
        .filter(|r| r.violation(&sol.params) > 1e-6)
        .map(|r| r.tag)
        .collect();
    tags.sort_by_key(|t| *t as u8);
    tags.dedup();
    tags
}

/// Stretch of stations (relative to the start) where speed is capped while
/// passing a nudged obstacle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NudgeSpeedLimit {
    pub s_start: f64,
    pub s_end: f64,
    pub speed: f64,
}

/// Speed caps for obstacles passed closer than the nudge range.
pub fn nudge_speed_limits(
    profile: &PathProfile,
    regions: &[SlRegion],
    footprint: &EgoFootprint,
    config: &PathConfig,
    s0: f64,
    v_ref: f64,
) -> Vec<NudgeSpeedLimit> {
    let half = 0.5 * footprint.width;
    let mut limits = Vec::new();
    for decision in &profile.decisions {
        if decision.kind == NudgeKind::Ignore {
            continue;
        }
        let regs: Vec<&SlRegion> = regions.iter().filter(|r| r.source_id == decision.obstacle_id).collect();
        let Some(first) = regs.first() else { continue };
        let s_lo = regs.iter().map(|r| r.s_min).fold(f64::INFINITY, f64::min) - footprint.l_f - footprint.cap_radius();
        let s_hi = regs.iter().map(|r| r.s_max).fold(f64::NEG_INFINITY, f64::max) + footprint.l_r + footprint.cap_radius();
        let mut min_gap = f64::INFINITY;
        let mut deviation: f64 = 0.0;
        let mut s = s_lo.max(s0);
        while s <= s_hi {
            let l = profile.lateral(s);
            deviation = deviation.max(l.abs());
            for r in regs.iter().filter(|r| s + footprint.l_f >= r.s_min && s - footprint.l_r <= r.s_max) {
                let gap = match decision.kind {
                    NudgeKind::NudgeRight => r.l_min - (l + half),
                    _ => (l - half) - r.l_max,
                };
                min_gap = min_gap.min(gap);
            }
            s += config.obstacle_sample_step;
        }
        if min_gap < config.nudge_range && deviation > config.nudge_deviation {
            let ratio = if first.is_static { config.nudge_speed_ratio_static } else { config.nudge_speed_ratio_dynamic };
            limits.push(NudgeSpeedLimit { s_start: s_lo - s0, s_end: s_hi - s0, speed: ratio * v_ref });
        }
    }
    limits
}

/// Runs lattice search, tunnel extraction and the path QP.
#[allow(clippy::too_many_arguments)]
pub fn plan_path(
    start: &FrenetState,
    speed: f64,
    is_change_lane: bool,
    road: RoadBounds,
    regions: &[SlRegion],
    footprint: &EgoFootprint,
    config: &PathConfig,
    warm_start: Option<&QpSolution>,
) -> Result<PathPlan, PathError> {
    let lattice = sample_lattice(&config.lattice, *start, speed, is_change_lane, road_center_bounds(road, footprint), 0.0)?;
    let model = PathCostModel::new(config, *footprint, road, 0.0, regions, start.s);
    let dp = dp_search(&lattice, &model)?;
    let (tunnel, decisions) = extract_tunnel_and_decisions(&dp, regions, road, config, footprint)?;
    let (profile, solution, problem) = qp_path(&tunnel, &dp, start, footprint, config, decisions, warm_start)?;
    Ok(PathPlan { profile, dp, tunnel, qp_solution: Some(solution), qp_problem: Some(problem) })
}

/// Range of reference-point offsets that keep the body on the road, widened
/// to the centerline when the road is narrower than the body.
fn road_center_bounds(road: RoadBounds, footprint: &EgoFootprint) -> RoadBounds {
    let half = 0.5 * footprint.width;
    let (low, high) = (road.low + half, road.high - half);
    if low <= high {
        RoadBounds { low, high }
    } else {
        let mid = 0.5 * (road.low + road.high);
        RoadBounds { low: mid, high: mid }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn start() -> FrenetState {
        FrenetState::default()
    }

    fn lane() -> RoadBounds {
        RoadBounds { low: -1.75, high: 1.75 }
    }

    fn region(id: &str, s: (f64, f64), l: (f64, f64)) -> SlRegion {
        SlRegion {
            s_min: s.0,
            s_max: s.1,
            l_min: l.0,
            l_max: l.1,
            source_id: id.into(),
            interaction_time: None,
            is_static: true,
        }
    }

    #[test]
    fn lattice_counts_edges() {
        let config = LatticeConfig { num_offsets: 3, min_span: 20.0, min_row_interval: 10.0, ..Default::default() };
        let lat = sample_lattice(&config, start(), 0.0, false, lane(), 0.0).unwrap();
        assert_eq!(lat.rows.len(), 3);
        assert_eq!(lat.edge_count(), 3 + 9);
    }

    #[test]
    fn change_lane_doubles_row_interval() {
        let config = LatticeConfig::default();
        assert_eq!(row_interval(&config, 10.0, true), 2.0 * row_interval(&config, 10.0, false));
    }

    #[test]
    fn flat_edge_is_constant() {
        let config = LatticeConfig::default();
        let lat = sample_lattice(&config, start(), 10.0, false, lane(), 0.0).unwrap();
        let center = lat.rows[1].offsets.iter().position(|l| l.abs() < 1e-12).unwrap();
        let q = lat.edge(0, 0, center);
        assert!(q.c.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn empty_row_outside_road() {
        let config = LatticeConfig { num_offsets: 1, ..Default::default() };
        let road = RoadBounds { low: 1.0, high: 2.0 };
        assert_eq!(sample_lattice(&config, start(), 10.0, false, road, 0.0), Err(PathError::EmptyRow { row: 1 }));
    }

    #[test]
    fn empty_road_follows_centerline() {
        let config = PathConfig::default();
        let plan = plan_path(&start(), 10.0, false, lane(), &[], &EgoFootprint::default(), &config, None).unwrap();
        assert!(plan.dp.nodes.iter().all(|n| n.1 == 0.0));
        assert!(plan.dp.cost.abs() < 1e-12);
        for s in [0.0, 37.0, 120.0, 199.0] {
            assert!(plan.profile.lateral(s).abs() < 1e-6);
        }
        assert!(plan.tunnel.bounds.iter().all(|b| *b == (-1.75, 1.75)));
    }

    #[test]
    fn full_width_obstacle_blocks_all_paths() {
        let config = PathConfig::default();
        let regions = [region("wall", (30.0, 32.0), (-3.0, 3.0))];
        let err = plan_path(&start(), 10.0, false, lane(), &regions, &EgoFootprint::default(), &config, None);
        assert!(matches!(err, Err(PathError::AllPathsCollide { .. })));
    }

    #[test]
    fn passes_obstacle_on_open_side() {
        let config = PathConfig::default();
        let road = RoadBounds { low: -1.75, high: 3.25 };
        let regions = [region("o", (28.0, 32.0), (-1.5, 0.2))];
        let fp = EgoFootprint::default();
        let plan = plan_path(&start(), 10.0, false, road, &regions, &fp, &config, None).unwrap();
        assert_eq!(plan.profile.decisions[0].kind, NudgeKind::NudgeLeft);
        for s in constraint_stations(0.0, 150.0, 2.0) {
            let (low, high) = corner_bounds(&plan.tunnel, &fp, s);
            let l = plan.profile.lateral(s);
            let dl = plan.profile.spline.eval_clamped(s, 1);
            for v in [l + dl * fp.l_f, l - dl * fp.l_r] {
                assert!(v >= low - 1e-6 && v <= high + 1e-6, "s={s} v={v} [{low},{high}]");
            }
        }
        assert!(plan.profile.lateral(30.0) > 0.2 + 0.3 + 1.0 - 1e-6);
    }
}
