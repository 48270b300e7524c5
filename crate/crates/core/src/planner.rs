//! Per-lane path/speed iteration and the cross-lane decider.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::PlannerConfig;
use crate::geometry::{CartesianState, FrenetState, GeometryError, ReferenceLine};
use crate::path::{self, NudgeSpeedLimit, PathCostModel, PathError, PathPlan, PathProfile, RoadBounds};
use crate::projection::{
    self, EgoFootprint, Obstacle, ObstacleTrack, SlRegion, StRegion, StRegionKind, StationProfile,
};
use crate::qp::QpSolution;
use crate::speed::{self, SpeedError, SpeedLimits, SpeedPlan, SpeedProblem, SpeedProfile};
pub use crate::trajectory::{Trajectory, TrajectoryPoint};

const REGULATION_TOL: f64 = 1e-6;
/// Station span standing in for "everything beyond the stop line".
const STOP_REGION_DEPTH: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regulation {
    SpeedLimit { v: f64 },
    StopLine { s: f64 },
    KeepClear { s_min: f64, s_max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneCandidate {
    pub lane_id: String,
    pub reference_line: ReferenceLine,
    /// Lane width, centered on the reference line.
    pub width: f64,
    pub is_change_lane: bool,
    /// The lane the ego currently follows.
    pub is_current: bool,
    pub regulations: Vec<Regulation>,
}

/// Snapshot of the world at the start of a cycle. Obstacle predictions use
/// times relative to `time`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub time: f64,
    pub ego: CartesianState,
    pub footprint: EgoFootprint,
    pub obstacles: Vec<Obstacle>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryCost {
    pub lane_change_penalty: f64,
    pub progress_term: f64,
    pub smoothness_term: f64,
    pub obstacle_proximity_term: f64,
    pub total: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LaneFailure {
    #[error("ego cannot be projected onto the lane: {0}")]
    Projection(GeometryError),
    #[error("path: {0}")]
    Path(#[from] PathError),
    #[error("speed: {0}")]
    Speed(#[from] SpeedError),
    #[error("trajectory composition: {0}")]
    Composition(GeometryError),
}

/// How many times each stage ran for one lane in one cycle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub sl_projection: u32,
    pub path_step: u32,
    pub st_projection: u32,
    pub speed_step: u32,
}

/// Wall-clock time per stage, microseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTimings {
    pub e1_us: u64,
    pub m1_us: u64,
    pub e2_us: u64,
    pub m2_us: u64,
}

/// QP solutions carried into the next cycle of the same lane.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LaneWarmStart {
    pub path: Option<QpSolution>,
    pub speed: Option<QpSolution>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanePlan {
    pub lane_id: String,
    pub s0: f64,
    pub trajectory: Trajectory,
    pub cost: TrajectoryCost,
    pub sl_regions: Vec<SlRegion>,
    pub st_regions: Vec<StRegion>,
    pub path: PathPlan,
    pub speed: SpeedPlan,
    pub nudge_limits: Vec<NudgeSpeedLimit>,
    pub counts: StageCounts,
    #[serde(skip)]
    pub timings: StageTimings,
}

impl LanePlan {
    pub fn warm_start(&self) -> LaneWarmStart {
        LaneWarmStart { path: self.path.qp_solution.clone(), speed: self.speed.qp_solution.clone() }
    }
}

fn elapsed_us(start: Instant) -> u64 {
    start.elapsed().as_micros() as u64
}

/// Largest ratio of Cartesian speed to station rate along the path.
fn speed_factor(profile: &PathProfile, reference: &ReferenceLine) -> f64 {
    let (lo, hi) = profile.spline.domain();
    let n = ((hi - lo).ceil() as usize).max(1);
    (0..=n)
        .map(|i| {
            let s = lo + (hi - lo) * i as f64 / n as f64;
            let l = profile.spline.eval_clamped(s, 0);
            let dl = profile.spline.eval_clamped(s, 1);
            let one_minus_kl = 1.0 - reference.pose_at(s).kappa * l;
            one_minus_kl.hypot(dl)
        })
        .fold(1.0, f64::max)
}

/// Lateral limits for the body: the lane plus whatever the ego already
/// occupies, so a lane-change candidate starts on drivable ground.
/// Lateral room beyond the body when the ego starts outside the lane, so
/// that turning back in does not swing a corner off the road.
const ROAD_MARGIN: f64 = 0.5;

fn road_bounds(candidate: &LaneCandidate, l0: f64, footprint: &EgoFootprint) -> RoadBounds {
    let half = 0.5 * footprint.width + ROAD_MARGIN;
    RoadBounds {
        low: (-0.5 * candidate.width).min(l0 - half),
        high: (0.5 * candidate.width).max(l0 + half),
    }
}

/// Drops regions of obstacles that start behind the ego's rear.
fn ahead_regions(regions: Vec<StRegion>) -> Vec<StRegion> {
    regions
        .into_iter()
        .filter(|r| {
            let (t0, _) = r.t_range();
            r.s_range_at(t0).is_none_or(|(_, hi)| hi >= 0.0)
        })
        .collect()
}

struct Regulated {
    limits: SpeedLimits,
    regions: Vec<StRegion>,
    keep_clear: Vec<(f64, f64)>,
    stop_lines: Vec<f64>,
    speed_limit: f64,
}

fn inject_regulations(candidate: &LaneCandidate, s0: f64, config: &PlannerConfig) -> Regulated {
    let horizon = config.speed.horizon;
    let mut out = Regulated {
        limits: SpeedLimits::from_config(&config.speed),
        regions: Vec::new(),
        keep_clear: Vec::new(),
        stop_lines: Vec::new(),
        speed_limit: f64::INFINITY,
    };
    for (i, reg) in candidate.regulations.iter().enumerate() {
        match *reg {
            Regulation::SpeedLimit { v } => {
                out.speed_limit = out.speed_limit.min(v);
                out.limits.v_ref = out.limits.v_ref.min(v);
                out.limits.v_upper = out.limits.v_upper.min(v);
            }
            Regulation::StopLine { s } if s >= s0 => {
                out.stop_lines.push(s);
                out.regions.push(StRegion::rectangle(
                    &format!("stop_line_{i}"),
                    StRegionKind::StopLine,
                    0.0,
                    horizon,
                    s - s0,
                    s - s0 + STOP_REGION_DEPTH,
                ));
            }
            Regulation::KeepClear { s_min, s_max } if s_max >= s0 => {
                out.keep_clear.push((s_min - s0, s_max - s0));
                out.regions.push(StRegion::rectangle(
                    &format!("keep_clear_{i}"),
                    StRegionKind::KeepClear,
                    0.0,
                    horizon,
                    s_min - s0,
                    s_max - s0,
                ));
            }
            _ => {}
        }
    }
    out
}

/// Samples path and speed into a Cartesian trajectory.
fn compose(
    reference: &ReferenceLine,
    path: &PathProfile,
    speed: &SpeedProfile,
    s0: f64,
    start_time: f64,
    config: &PlannerConfig,
) -> Result<Trajectory, GeometryError> {
    let dt = config.decider.output_dt;
    let n = (config.speed.horizon / dt).round() as usize;
    let mut points = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 * dt;
        let s = s0 + speed.station(t);
        let sp = &path.spline;
        let fs = FrenetState {
            s,
            l: sp.eval_clamped(s, 0),
            dl: sp.eval_clamped(s, 1),
            ddl: sp.eval_clamped(s, 2),
            dddl: sp.eval_clamped(s, 3),
        };
        let c = reference.frenet_to_cartesian_motion(&fs, speed.velocity(t).max(0.0), speed.acceleration(t))?;
        points.push(TrajectoryPoint { t, x: c.x, y: c.y, heading: c.heading, kappa: c.kappa, v: c.v.max(0.0), a: c.a });
    }
    Ok(Trajectory { start_time, points })
}

#[allow(clippy::too_many_arguments)]
fn trajectory_cost(
    candidate: &LaneCandidate,
    path_plan: &PathPlan,
    speed_plan: &SpeedPlan,
    tracks: &[ObstacleTrack],
    regulated: &Regulated,
    trajectory: &Trajectory,
    s0: f64,
    footprint: &EgoFootprint,
    config: &PlannerConfig,
) -> TrajectoryCost {
    let d = &config.decider;
    let lane_change_penalty = if candidate.is_change_lane { d.lane_change_penalty } else { 0.0 };
    let (lo, hi) = path_plan.profile.spline.domain();
    let span = (hi - lo).max(1.0);
    let horizon = config.speed.horizon;
    let progress_term = -speed_plan.profile.station(horizon) / span;
    let smoothness_term = path_plan.profile.objective + speed_plan.profile.objective;
    let model = PathCostModel::new(
        &config.path,
        *footprint,
        RoadBounds { low: f64::NEG_INFINITY, high: f64::INFINITY },
        0.0,
        &[],
        s0,
    );
    let times = projection::time_steps(&config.projection);
    let mut obstacle_proximity_term: f64 = 0.0;
    for (k, &t) in times.iter().enumerate() {
        let s = s0 + speed_plan.profile.station(t);
        let body = path::body_box(footprint, s, path_plan.profile.lateral(s));
        for track in tracks {
            if let Some(b) = track.boxes.get(k) {
                obstacle_proximity_term = obstacle_proximity_term.max(model.nudge_cost(path::box_distance(&body, b)));
            }
        }
    }
    let terminal = s0 + speed_plan.profile.station(horizon);
    let violates_stop = regulated.stop_lines.iter().any(|&s| terminal > s + REGULATION_TOL);
    let violates_limit = trajectory.points.iter().any(|p| p.v > regulated.speed_limit + REGULATION_TOL);
    let feasible = !(violates_stop || violates_limit);
    let total = if feasible {
        lane_change_penalty
            + d.w_progress * progress_term
            + d.w_smoothness * smoothness_term
            + d.w_proximity * obstacle_proximity_term
    } else {
        f64::INFINITY
    };
    TrajectoryCost { lane_change_penalty, progress_term, smoothness_term, obstacle_proximity_term, total, feasible }
}

/// One full E/M iteration on a single lane.
pub fn plan_lane(
    candidate: &LaneCandidate,
    world: &World,
    prev: Option<&Trajectory>,
    warm: Option<&LaneWarmStart>,
    config: &PlannerConfig,
) -> Result<LanePlan, LaneFailure> {
    let reference = &candidate.reference_line;
    let footprint = world.footprint;
    let motion = reference.project_motion(&world.ego).map_err(LaneFailure::Projection)?;
    let start = motion.state;
    let s0 = start.s;
    let v0 = world.ego.v;
    let mut counts = StageCounts::default();
    let mut timings = StageTimings::default();

    // E1: SL projection against the historical station profile.
    let clock = Instant::now();
    let tracks = projection::track_obstacles(&world.obstacles, reference, v0, &config.projection);
    let horizon = config.projection.horizon;
    let ego_profile = prev
        .map(|p| StationProfile::from_trajectory(p, reference, world.time, &config.projection))
        .filter(|p| p.samples.len() >= 2)
        .unwrap_or_else(|| StationProfile::constant_speed(s0, v0, horizon));
    let road = road_bounds(candidate, start.l, &footprint);
    let sl_regions = projection::project_sl(&tracks, &ego_profile, &footprint, (road.low, road.high), &config.projection);
    counts.sl_projection += 1;
    timings.e1_us = elapsed_us(clock);

    // M1: lattice DP and path QP.
    let clock = Instant::now();
    let path_plan = path::plan_path(
        &start,
        v0,
        candidate.is_change_lane,
        road,
        &sl_regions,
        &footprint,
        &config.path,
        warm.and_then(|w| w.path.as_ref()),
    )?;
    counts.path_step += 1;
    timings.m1_us = elapsed_us(clock);

    // E2: ST projection along the new path.
    let clock = Instant::now();
    let mut st_regions = ahead_regions(projection::project_st(
        &tracks,
        &path_plan.profile.spline,
        s0,
        &footprint,
        &config.projection,
    ));
    counts.st_projection += 1;
    timings.e2_us = elapsed_us(clock);

    // Regulations, then M2: speed DP and QP.
    let clock = Instant::now();
    let mut regulated = inject_regulations(candidate, s0, config);
    st_regions.append(&mut regulated.regions);
    let factor = speed_factor(&path_plan.profile, reference);
    let mut limits = regulated.limits;
    limits.v_upper /= factor;
    let nudge_limits =
        path::nudge_speed_limits(&path_plan.profile, &sl_regions, &footprint, &config.path, s0, limits.v_ref);
    let (_, s_end) = path_plan.profile.spline.domain();
    let problem = SpeedProblem {
        regions: &st_regions,
        limits,
        v0: motion.s_dot.max(0.0),
        a0: world.ego.a,
        caps: &nudge_limits,
        keep_clear: &regulated.keep_clear,
        s_limit: s_end - s0,
        config: &config.speed,
    };
    let speed_plan = speed::plan_speed(&problem, warm.and_then(|w| w.speed.as_ref()))?;
    counts.speed_step += 1;
    timings.m2_us = elapsed_us(clock);

    let trajectory = compose(reference, &path_plan.profile, &speed_plan.profile, s0, world.time, config)
        .map_err(LaneFailure::Composition)?;
    let cost = trajectory_cost(
        candidate,
        &path_plan,
        &speed_plan,
        &tracks,
        &regulated,
        &trajectory,
        s0,
        &footprint,
        config,
    );
    log::debug!("lane {}: cost {:.4}, feasible {}", candidate.lane_id, cost.total, cost.feasible);
    Ok(LanePlan {
        lane_id: candidate.lane_id.clone(),
        s0,
        trajectory,
        cost,
        sl_regions,
        st_regions,
        path: path_plan,
        speed: speed_plan,
        nudge_limits,
        counts,
        timings,
    })
}

/// Memory threaded from one cycle into the next.
#[derive(Debug, Clone, Default)]
pub struct PlannerState {
    /// Last trajectory produced per lane.
    pub prev_per_lane: BTreeMap<String, Trajectory>,
    pub warm_starts: BTreeMap<String, LaneWarmStart>,
    /// Trajectory returned by the previous cycle.
    pub chosen: Option<Trajectory>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneOutcome {
    pub lane_id: String,
    pub plan: Option<LanePlan>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleResult {
    pub time: f64,
    pub trajectory: Trajectory,
    pub chosen_lane: Option<String>,
    pub fallback: bool,
    pub lanes: Vec<LaneOutcome>,
    #[serde(skip)]
    pub decider_us: u64,
}

impl CycleResult {
    pub fn chosen_plan(&self) -> Option<&LanePlan> {
        let id = self.chosen_lane.as_ref()?;
        self.lanes.iter().find(|l| &l.lane_id == id)?.plan.as_ref()
    }
}

/// Picks the winning lane index among feasible plans: lowest total, but a
/// lane other than the current one must beat it by the hysteresis margin.
pub fn decide(candidates: &[LaneCandidate], plans: &[Option<&LanePlan>], hysteresis: f64) -> Option<usize> {
    let feasible = |i: usize| plans[i].filter(|p| p.cost.feasible).map(|p| p.cost.total);
    let best = (0..plans.len())
        .filter_map(|i| feasible(i).map(|c| (i, c)))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let current = candidates.iter().position(|c| c.is_current).and_then(|i| feasible(i).map(|c| (i, c)));
    match current {
        Some((ci, cc)) if ci != best.0 => {
            // Scaled on |total| so the margin keeps its meaning for
            // negative totals.
            if best.1 < cc - (1.0 - hysteresis) * cc.abs() {
                Some(best.0)
            } else {
                Some(ci)
            }
        }
        _ => Some(best.0),
    }
}

/// Marks the lane whose centerline is nearest the ego as current and every
/// other lane as a change lane. Lanes the ego cannot be projected onto are
/// left as they are; nothing changes if no lane projects.
pub fn relabel_occupied(candidates: &mut [LaneCandidate], ego: &CartesianState) {
    let nearest = candidates
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.reference_line.project_xy(ego.x, ego.y).ok().map(|(_, l)| (i, l.abs())))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((occupied, _)) = nearest {
        for (i, c) in candidates.iter_mut().enumerate() {
            c.is_current = i == occupied;
            c.is_change_lane = i != occupied;
        }
    }
}

/// Comfort stop along the previous trajectory's path, or straight ahead
/// when there is none.
pub fn fallback_stop(prev: Option<&Trajectory>, world: &World, config: &PlannerConfig) -> Trajectory {
    let dec = config.speed.dec_max;
    let v0 = world.ego.v.max(0.0);
    let mut poly: Vec<(f64, f64, f64, f64)> = vec![(world.ego.x, world.ego.y, world.ego.heading, world.ego.kappa)];
    if let Some(prev) = prev {
        let offset = world.time - prev.start_time;
        poly.extend(prev.points.iter().filter(|p| p.t > offset + 1e-9).map(|p| (p.x, p.y, p.heading, p.kappa)));
    }
    let mut cumulative = vec![0.0];
    for w in poly.windows(2) {
        let last = *cumulative.last().unwrap();
        cumulative.push(last + (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1));
    }
    let locate = |dist: f64| -> (f64, f64, f64, f64) {
        let total = *cumulative.last().unwrap();
        if dist >= total {
            let &(x, y, h, k) = poly.last().unwrap();
            let extra = dist - total;
            return (x + extra * h.cos(), y + extra * h.sin(), h, k);
        }
        let i = cumulative.partition_point(|&c| c <= dist).clamp(1, poly.len() - 1);
        let u = (dist - cumulative[i - 1]) / (cumulative[i] - cumulative[i - 1]).max(1e-12);
        let (a, b) = (poly[i - 1], poly[i]);
        let dh = crate::geometry::normalize_angle(b.2 - a.2);
        (a.0 + u * (b.0 - a.0), a.1 + u * (b.1 - a.1), crate::geometry::normalize_angle(a.2 + u * dh), a.3 + u * (b.3 - a.3))
    };
    let dt = config.decider.output_dt;
    let n = (config.speed.horizon / dt).round() as usize;
    let t_stop = v0 / dec;
    let points = (0..=n)
        .map(|k| {
            let t = k as f64 * dt;
            let tc = t.min(t_stop);
            let dist = v0 * tc - 0.5 * dec * tc * tc;
            let (x, y, heading, kappa) = locate(dist);
            let moving = t < t_stop;
            TrajectoryPoint {
                t,
                x,
                y,
                heading,
                kappa,
                v: if moving { v0 - dec * t } else { 0.0 },
                a: if moving { -dec } else { 0.0 },
            }
        })
        .collect();
    Trajectory { start_time: world.time, points }
}

/// Plans every candidate concurrently and decides among them.
pub fn plan_cycle(
    candidates: &[LaneCandidate],
    world: &World,
    state: &mut PlannerState,
    config: &PlannerConfig,
) -> CycleResult {
    let results: Vec<Result<LanePlan, LaneFailure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = candidates
            .iter()
            .map(|c| {
                let prev = state.prev_per_lane.get(&c.lane_id).or(state.chosen.as_ref());
                let warm = state.warm_starts.get(&c.lane_id);
                scope.spawn(move || plan_lane(c, world, prev, warm, config))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("lane planning panicked")).collect()
    });
    let clock = Instant::now();
    let plans: Vec<Option<&LanePlan>> = results.iter().map(|r| r.as_ref().ok()).collect();
    let winner = decide(candidates, &plans, config.decider.hysteresis);
    let (trajectory, chosen_lane, fallback) = match winner {
        Some(i) => (plans[i].unwrap().trajectory.clone(), Some(candidates[i].lane_id.clone()), false),
        None => {
            log::warn!("all lanes failed at t = {:.2}; comfort stop", world.time);
            (fallback_stop(state.chosen.as_ref(), world, config), None, true)
        }
    };
    let decider_us = elapsed_us(clock);
    for (c, r) in candidates.iter().zip(&results) {
        match r {
            Ok(plan) => {
                state.prev_per_lane.insert(c.lane_id.clone(), plan.trajectory.clone());
                state.warm_starts.insert(c.lane_id.clone(), plan.warm_start());
            }
            Err(_) => {
                state.prev_per_lane.remove(&c.lane_id);
                state.warm_starts.remove(&c.lane_id);
            }
        }
    }
    state.chosen = Some(trajectory.clone());
    let lanes = candidates
        .iter()
        .zip(results)
        .map(|(c, r)| match r {
            Ok(plan) => LaneOutcome { lane_id: c.lane_id.clone(), plan: Some(plan), failure: None },
            Err(e) => LaneOutcome { lane_id: c.lane_id.clone(), plan: None, failure: Some(e.to_string()) },
        })
        .collect();
    CycleResult { time: world.time, trajectory, chosen_lane, fallback, lanes, decider_us }
}

/// Summary of one iteration of the case study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudyCycle {
    pub path: PathProfile,
    pub speed: SpeedProfile,
    /// Station (relative to the ego) at the middle of the widest nudge.
    pub nudge_station: f64,
    pub min_speed: f64,
    /// Middle of the SL regions' station span, relative to the ego.
    pub interaction_station: Option<f64>,
}

/// Station at the center of the stretch where the lateral deviation is
/// within 5% of its maximum.
pub fn nudge_station(profile: &PathProfile, s0: f64) -> f64 {
    let (lo, hi) = profile.spline.domain();
    let n = ((hi - lo) / 0.1).round() as usize;
    let samples: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let s = lo + (hi - lo) * i as f64 / n as f64;
            (s, profile.lateral(s))
        })
        .collect();
    let l0 = samples[0].1;
    let peak = samples.iter().map(|&(_, l)| (l - l0).abs()).fold(0.0, f64::max);
    let near: Vec<f64> = samples.iter().filter(|&&(_, l)| (l - l0).abs() >= 0.95 * peak).map(|&(s, _)| s).collect();
    let (a, b) = (near[0], *near.last().unwrap());
    0.5 * (a + b) - s0
}

/// Repeats the lane iteration on a frozen world, each pass using the
/// previous pass's trajectory as the historical profile.
pub fn iterate_case_study(
    candidate: &LaneCandidate,
    world: &World,
    cycles: usize,
    config: &PlannerConfig,
) -> Result<Vec<CaseStudyCycle>, LaneFailure> {
    let mut prev: Option<Trajectory> = None;
    let mut warm: Option<LaneWarmStart> = None;
    let mut out = Vec::with_capacity(cycles);
    for _ in 0..cycles {
        let plan = plan_lane(candidate, world, prev.as_ref(), warm.as_ref(), config)?;
        let times = projection::time_steps(&config.projection);
        let min_speed = times.iter().map(|&t| plan.speed.profile.velocity(t)).fold(f64::INFINITY, f64::min);
        let interaction_station = if plan.sl_regions.is_empty() {
            None
        } else {
            let lo = plan.sl_regions.iter().map(|r| r.s_min).fold(f64::INFINITY, f64::min);
            let hi = plan.sl_regions.iter().map(|r| r.s_max).fold(f64::NEG_INFINITY, f64::max);
            Some(0.5 * (lo + hi) - plan.s0)
        };
        out.push(CaseStudyCycle {
            nudge_station: nudge_station(&plan.path.profile, plan.s0),
            path: plan.path.profile.clone(),
            speed: plan.speed.profile.clone(),
            min_speed,
            interaction_station,
        });
        warm = Some(plan.warm_start());
        prev = Some(plan.trajectory);
    }
    Ok(out)
}
