//! Obstacle projection into the station-lateral (SL) and station-time (ST)
//! frames.
//!
//! Obstacles are first tracked on the lane's reference line: one SL box per
//! prediction step. SL projection compares those boxes with the ego's
//! expected station profile, ST projection with the body envelope swept
//! along a planned path.

use serde::{Deserialize, Serialize};

use crate::config::ProjectionConfig;
use crate::geometry::{normalize_angle, ReferenceLine};
use crate::spline::Spline;
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObstacleKind {
    Static,
    Dynamic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstaclePose {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: String,
    pub length: f64,
    pub width: f64,
    pub kind: ObstacleKind,
    #[serde(default)]
    pub speed: f64,
    /// Predicted poses with relative times; a single pose for static ones.
    pub trajectory: Vec<ObstaclePose>,
}

impl Obstacle {
    /// Pose at relative time `t`, linearly interpolated and held at the ends.
    pub fn pose_at(&self, t: f64) -> ObstaclePose {
        let tr = &self.trajectory;
        if self.kind == ObstacleKind::Static || tr.len() == 1 || t <= tr[0].t {
            return ObstaclePose { t, ..tr[0] };
        }
        let last = tr[tr.len() - 1];
        if t >= last.t {
            return ObstaclePose { t, ..last };
        }
        let idx = tr.partition_point(|p| p.t <= t);
        let (a, b) = (tr[idx - 1], tr[idx]);
        let u = (t - a.t) / (b.t - a.t);
        ObstaclePose {
            t,
            x: a.x + u * (b.x - a.x),
            y: a.y + u * (b.y - a.y),
            heading: normalize_angle(a.heading + u * normalize_angle(b.heading - a.heading)),
        }
    }

    pub fn corners(&self, pose: &ObstaclePose) -> [(f64, f64); 4] {
        let (s, c) = pose.heading.sin_cos();
        let (hl, hw) = (0.5 * self.length, 0.5 * self.width);
        [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)]
            .map(|(a, b)| (pose.x + a * c - b * s, pose.y + a * s + b * c))
    }

    /// Time span covered by the prediction.
    pub fn horizon(&self) -> f64 {
        match self.kind {
            ObstacleKind::Static => f64::INFINITY,
            ObstacleKind::Dynamic => self.trajectory.last().map_or(0.0, |p| p.t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoFootprint {
    /// Distance from the reference point to the front of the body.
    pub l_f: f64,
    /// Distance from the reference point to the rear of the body.
    pub l_r: f64,
    pub width: f64,
}

impl Default for EgoFootprint {
    fn default() -> Self {
        Self { l_f: 2.8, l_r: 1.0, width: 2.0 }
    }
}

impl EgoFootprint {
    pub fn cap_radius(&self) -> f64 {
        0.5 * self.width
    }

    /// Longitudinal extent of the capped body around station `s`.
    pub fn station_extent(&self, s: f64) -> (f64, f64) {
        (s - self.l_r - self.cap_radius(), s + self.l_f + self.cap_radius())
    }
}

/// Axis-aligned box in the SL frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlBox {
    pub s_min: f64,
    pub s_max: f64,
    pub l_min: f64,
    pub l_max: f64,
}

impl SlBox {
    pub fn overlaps(&self, other: &SlBox) -> bool {
        self.s_min <= other.s_max
            && other.s_min <= self.s_max
            && self.l_min <= other.l_max
            && other.l_min <= self.l_max
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlRegion {
    pub s_min: f64,
    pub s_max: f64,
    pub l_min: f64,
    pub l_max: f64,
    pub source_id: String,
    pub interaction_time: Option<f64>,
    pub is_static: bool,
}

impl SlRegion {
    pub fn bounds(&self) -> SlBox {
        SlBox { s_min: self.s_min, s_max: self.s_max, l_min: self.l_min, l_max: self.l_max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StRegionKind {
    Obstacle,
    StaticObstacle,
    StopLine,
    KeepClear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StRegion {
    /// Convex polygon of `(t, s)` vertices in counterclockwise order.
    pub polygon: Vec<(f64, f64)>,
    pub source_id: String,
    pub kind: StRegionKind,
}

impl StRegion {
    pub fn t_range(&self) -> (f64, f64) {
        self.polygon.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(t, _)| (lo.min(t), hi.max(t)))
    }

    pub fn s_bounds(&self) -> (f64, f64) {
        self.polygon.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, s)| (lo.min(s), hi.max(s)))
    }

    /// Station interval of the polygon at time `t`, if `t` is in range.
    pub fn s_range_at(&self, t: f64) -> Option<(f64, f64)> {
        let (t0, t1) = self.t_range();
        if t < t0 - 1e-9 || t > t1 + 1e-9 {
            return None;
        }
        let t = t.clamp(t0, t1);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let n = self.polygon.len();
        for i in 0..n {
            let (ta, sa) = self.polygon[i];
            let (tb, sb) = self.polygon[(i + 1) % n];
            if (ta - tb).abs() < 1e-12 {
                if (ta - t).abs() < 1e-9 {
                    lo = lo.min(sa.min(sb));
                    hi = hi.max(sa.max(sb));
                }
                continue;
            }
            if t >= ta.min(tb) && t <= ta.max(tb) {
                let s = sa + (t - ta) / (tb - ta) * (sb - sa);
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        (lo <= hi).then_some((lo, hi))
    }

    /// Vertex with the smallest time, ties broken by the smallest station.
    pub fn earliest_vertex(&self) -> (f64, f64) {
        *self
            .polygon
            .iter()
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)))
            .expect("non-empty polygon")
    }

    pub fn contains(&self, t: f64, s: f64) -> bool {
        self.s_range_at(t).is_some_and(|(lo, hi)| s >= lo && s <= hi)
    }

    /// Rectangle over `[t0, t1] x [s0, s1]`.
    pub fn rectangle(source_id: &str, kind: StRegionKind, t0: f64, t1: f64, s0: f64, s1: f64) -> Self {
        Self { polygon: vec![(t0, s0), (t1, s0), (t1, s1), (t0, s1)], source_id: source_id.to_string(), kind }
    }
}

/// Obstacle boxes on one reference line at every projection time step.
#[derive(Debug, Clone)]
pub struct ObstacleTrack {
    pub id: String,
    pub is_static: bool,
    /// Whether the obstacle takes part in SL projection.
    pub in_sl: bool,
    pub boxes: Vec<SlBox>,
}

pub fn time_steps(config: &ProjectionConfig) -> Vec<f64> {
    let n = (config.horizon / config.dt).round() as usize;
    (0..=n).map(|k| k as f64 * config.dt).collect()
}

fn sl_box(obstacle: &Obstacle, pose: &ObstaclePose, reference: &ReferenceLine) -> SlBox {
    let mut b = SlBox {
        s_min: f64::INFINITY,
        s_max: f64::NEG_INFINITY,
        l_min: f64::INFINITY,
        l_max: f64::NEG_INFINITY,
    };
    for (x, y) in obstacle.corners(pose) {
        let (s, l) = reference.project_xy_extrapolated(x, y);
        b.s_min = b.s_min.min(s);
        b.s_max = b.s_max.max(s);
        b.l_min = b.l_min.min(l);
        b.l_max = b.l_max.max(l);
    }
    b
}

/// Projects every obstacle onto the reference line at each time step.
pub fn track_obstacles(
    obstacles: &[Obstacle],
    reference: &ReferenceLine,
    ego_speed: f64,
    config: &ProjectionConfig,
) -> Vec<ObstacleTrack> {
    let times = time_steps(config);
    let low_speed = config.low_speed_floor.max(config.low_speed_ratio * ego_speed);
    obstacles
        .iter()
        .map(|ob| {
            let is_static = ob.kind == ObstacleKind::Static;
            let boxes = if is_static {
                vec![sl_box(ob, &ob.trajectory[0], reference); times.len()]
            } else {
                times.iter().map(|&t| sl_box(ob, &ob.pose_at(t), reference)).collect()
            };
            let in_sl = is_static || {
                let pose = ob.pose_at(0.0);
                let (s, _) = reference.project_xy_extrapolated(pose.x, pose.y);
                let ref_heading = reference.pose_at(s).heading;
                let oncoming = ob.speed * normalize_angle(pose.heading - ref_heading).cos() < 0.0;
                oncoming || ob.speed < low_speed
            };
            ObstacleTrack { id: ob.id.clone(), is_static, in_sl, boxes }
        })
        .collect()
}

/// Expected ego station as a function of relative time.
#[derive(Debug, Clone, PartialEq)]
pub struct StationProfile {
    /// `(t, s)` samples with increasing `t`.
    pub samples: Vec<(f64, f64)>,
}

impl StationProfile {
    pub fn constant_speed(s0: f64, v: f64, horizon: f64) -> Self {
        Self { samples: vec![(0.0, s0), (horizon, s0 + v * horizon)] }
    }

    /// Stations of a previous trajectory on `reference`, shifted so that
    /// `t = 0` is `now` (absolute time).
    pub fn from_trajectory(prev: &Trajectory, reference: &ReferenceLine, now: f64, config: &ProjectionConfig) -> Self {
        let offset = now - prev.start_time;
        let samples = time_steps(config)
            .into_iter()
            .filter_map(|t| {
                let p = prev.sample(t + offset)?;
                Some((t, reference.project_xy_extrapolated(p.x, p.y).0))
            })
            .collect();
        Self { samples }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let s = &self.samples;
        match s.len() {
            0 => 0.0,
            1 => s[0].1,
            _ => {
                let idx = s.partition_point(|p| p.0 <= t).clamp(1, s.len() - 1);
                let (a, b) = (s[idx - 1], s[idx]);
                a.1 + (t - a.0) / (b.0 - a.0) * (b.1 - a.1)
            }
        }
    }
}

/// SL projection: static obstacles as one region each, included dynamic
/// obstacles once per time step at which they overlap the ego's expected
/// position. The ego's lateral extent is taken as the whole road, so an
/// obstacle counts as soon as it intrudes on the drivable area.
pub fn project_sl(
    tracks: &[ObstacleTrack],
    ego: &StationProfile,
    footprint: &EgoFootprint,
    road_bounds: (f64, f64),
    config: &ProjectionConfig,
) -> Vec<SlRegion> {
    let times = time_steps(config);
    let mut regions = Vec::new();
    for track in tracks.iter().filter(|t| t.in_sl) {
        if track.is_static {
            let b = track.boxes[0];
            regions.push(SlRegion {
                s_min: b.s_min,
                s_max: b.s_max,
                l_min: b.l_min,
                l_max: b.l_max,
                source_id: track.id.clone(),
                interaction_time: None,
                is_static: true,
            });
            continue;
        }
        for (k, &t) in times.iter().enumerate() {
            let (s_lo, s_hi) = footprint.station_extent(ego.eval(t));
            let ego_box = SlBox { s_min: s_lo, s_max: s_hi, l_min: road_bounds.0, l_max: road_bounds.1 };
            let b = track.boxes[k];
            if ego_box.overlaps(&b) {
                regions.push(SlRegion {
                    s_min: b.s_min,
                    s_max: b.s_max,
                    l_min: b.l_min,
                    l_max: b.l_max,
                    source_id: track.id.clone(),
                    interaction_time: Some(t),
                    is_static: false,
                });
            }
        }
    }
    regions.sort_by(|a, b| {
        a.source_id
            .cmp(&b.source_id)
            .then(a.interaction_time.unwrap_or(-1.0).total_cmp(&b.interaction_time.unwrap_or(-1.0)))
    });
    regions
}

/// Lateral extent of the body along a path, tabulated on a station grid.
pub struct BodyEnvelope {
    s_start: f64,
    step: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BodyEnvelope {
    /// `lateral` gives the path's `l` at any station (held constant beyond
    /// its domain); the table covers `[s_start, s_end]`.
    pub fn new(lateral: impl Fn(f64) -> f64, s_start: f64, s_end: f64, footprint: &EgoFootprint, step: f64) -> Self {
        let n = ((s_end - s_start) / step).ceil().max(1.0) as usize + 1;
        let centers: Vec<f64> = (0..n).map(|i| lateral(s_start + i as f64 * step)).collect();
        let back = ((footprint.l_r + footprint.cap_radius()) / step).ceil() as usize;
        let front = ((footprint.l_f + footprint.cap_radius()) / step).ceil() as usize;
        let half = 0.5 * footprint.width;
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for i in 0..n {
            let a = i.saturating_sub(back);
            let b = (i + front).min(n - 1);
            let window = &centers[a..=b];
            lo[i] = window.iter().copied().fold(f64::INFINITY, f64::min) - half;
            hi[i] = window.iter().copied().fold(f64::NEG_INFINITY, f64::max) + half;
        }
        Self { s_start, step, lo, hi }
    }

    fn index(&self, s: f64) -> usize {
        (((s - self.s_start) / self.step).round().max(0.0) as usize).min(self.lo.len() - 1)
    }

    pub fn lateral_at(&self, s: f64) -> (f64, f64) {
        let i = self.index(s);
        (self.lo[i], self.hi[i])
    }
}

/// Stations (relative to `s0`) at which the body overlaps `b`.
fn blocked_interval(b: &SlBox, envelope: &BodyEnvelope, footprint: &EgoFootprint, s0: f64) -> Option<(f64, f64)> {
    let cap = footprint.cap_radius();
    let lo = b.s_min - footprint.l_f - cap;
    let hi = b.s_max + footprint.l_r + cap;
    let step = envelope.step;
    let mut first = None;
    let mut last = None;
    let mut s = lo;
    loop {
        let (l_lo, l_hi) = envelope.lateral_at(s);
        if l_lo <= b.l_max && b.l_min <= l_hi {
            first.get_or_insert(s);
            last = Some(s);
        }
        if s >= hi {
            break;
        }
        s = (s + step).min(hi);
    }
    Some((first? - s0, last? - s0))
}

/// Monotone-chain convex hull, counterclockwise, without collinear points.
pub fn convex_hull(mut points: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    points.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    points.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    if points.len() < 3 {
        return points;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &points {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 1e-12 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in points.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 1e-12 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// ST projection of every tracked obstacle against the body swept along
/// `path` (l as a function of absolute station). Stations in the output are
/// relative to `s0`, so obstacles behind the ego have negative stations.
pub fn project_st(
    tracks: &[ObstacleTrack],
    path: &Spline,
    s0: f64,
    footprint: &EgoFootprint,
    config: &ProjectionConfig,
) -> Vec<StRegion> {
    let (lo, hi) = path.domain();
    let reach = footprint.l_f + footprint.l_r + footprint.width;
    let s_min = tracks
        .iter()
        .flat_map(|t| t.boxes.iter().map(|b| b.s_min))
        .fold(lo, f64::min)
        - reach;
    let s_max = tracks
        .iter()
        .flat_map(|t| t.boxes.iter().map(|b| b.s_max))
        .fold(hi, f64::max)
        + reach;
    let envelope = BodyEnvelope::new(|s| path.eval_clamped(s, 0), s_min, s_max, footprint, config.envelope_step);
    project_st_with_envelope(tracks, &envelope, s0, footprint, config)
}

pub fn project_st_with_envelope(
    tracks: &[ObstacleTrack],
    envelope: &BodyEnvelope,
    s0: f64,
    footprint: &EgoFootprint,
    config: &ProjectionConfig,
) -> Vec<StRegion> {
    let times = time_steps(config);
    let horizon = *times.last().unwrap_or(&0.0);
    let mut regions = Vec::new();
    for track in tracks {
        let kind = if track.is_static { StRegionKind::StaticObstacle } else { StRegionKind::Obstacle };
        let mut run: Vec<(f64, f64, f64)> = Vec::new();
        let mut flush = |run: &mut Vec<(f64, f64, f64)>| {
            if run.is_empty() {
                return;
            }
            let mut pts = Vec::with_capacity(2 * run.len() + 2);
            if run.len() == 1 {
                let (t, a, b) = run[0];
                let half = 0.5 * config.dt;
                for tt in [(t - half).max(0.0), (t + half).min(horizon)] {
                    pts.push((tt, a));
                    pts.push((tt, b));
                }
            } else {
                for &(t, a, b) in run.iter() {
                    pts.push((t, a));
                    pts.push((t, b));
                }
            }
            let polygon = convex_hull(pts);
            if polygon.len() >= 3 {
                regions.push(StRegion { polygon, source_id: track.id.clone(), kind });
            }
            run.clear();
        };
        for (k, &t) in times.iter().enumerate() {
            match blocked_interval(&track.boxes[k], envelope, footprint, s0) {
                Some((a, b)) => run.push((t, a, b)),
                None => flush(&mut run),
            }
        }
        flush(&mut run);
    }
    regions
}

#[cfg(test)]
mod tests {
    use super::*;

    fn static_box(id: &str, x: f64, y: f64, length: f64, width: f64) -> Obstacle {
        Obstacle {
            id: id.into(),
            length,
            width,
            kind: ObstacleKind::Static,
            speed: 0.0,
            trajectory: vec![ObstaclePose { t: 0.0, x, y, heading: 0.0 }],
        }
    }

    fn moving(id: &str, x: f64, y: f64, vx: f64) -> Obstacle {
        let trajectory = (0..=90)
            .map(|i| {
                let t = i as f64 * 0.1;
                ObstaclePose { t, x: x + vx * t, y, heading: if vx < 0.0 { std::f64::consts::PI } else { 0.0 } }
            })
            .collect();
        Obstacle { id: id.into(), length: 4.0, width: 2.0, kind: ObstacleKind::Dynamic, speed: vx.abs(), trajectory }
    }

    #[test]
    fn static_box_maps_to_axis_aligned_region() {
        let line = ReferenceLine::straight(0.0, 0.0, 0.0, 100.0, 1.0);
        let config = ProjectionConfig::default();
        let tracks = track_obstacles(&[static_box("a", 30.0, 0.5, 2.0, 1.0)], &line, 10.0, &config);
        let ego = StationProfile::constant_speed(0.0, 10.0, 8.0);
        let regions = project_sl(&tracks, &ego, &EgoFootprint::default(), (-1.75, 1.75), &config);
        assert_eq!(regions.len(), 1);
        let r = &regions[0];
        assert!((r.s_min - 29.0).abs() < 1e-6 && (r.s_max - 31.0).abs() < 1e-6);
        assert!((r.l_min - 0.0).abs() < 1e-6 && (r.l_max - 1.0).abs() < 1e-6);
    }

    #[test]
    fn fast_same_direction_obstacle_is_excluded_from_sl() {
        let line = ReferenceLine::straight(0.0, 0.0, 0.0, 300.0, 1.0);
        let config = ProjectionConfig::default();
        let tracks = track_obstacles(&[moving("f", 20.0, 0.0, 15.0)], &line, 10.0, &config);
        assert!(!tracks[0].in_sl);
        let ego = StationProfile::constant_speed(0.0, 10.0, 8.0);
        assert!(project_sl(&tracks, &ego, &EgoFootprint::default(), (-1.75, 1.75), &config).is_empty());
    }

    #[test]
    fn oncoming_obstacle_meets_ego_midway() {
        let line = ReferenceLine::straight(0.0, 0.0, 0.0, 300.0, 1.0);
        let config = ProjectionConfig::default();
        let tracks = track_obstacles(&[moving("o", 80.0, 2.0, -10.0)], &line, 10.0, &config);
        assert!(tracks[0].in_sl);
        let ego = StationProfile::constant_speed(0.0, 10.0, 8.0);
        let regions = project_sl(&tracks, &ego, &EgoFootprint::default(), (-1.875, 1.875), &config);
        assert!(!regions.is_empty());
        let times: Vec<f64> = regions.iter().map(|r| r.interaction_time.unwrap()).collect();
        let mid = 0.5 * (times[0] + times[times.len() - 1]);
        assert!((mid - 4.0).abs() < 0.25, "{mid}");
    }

    #[test]
    fn no_obstacles_no_regions() {
        let path = Spline::new(vec![0.0, 100.0], 5, vec![0.0; 6]).unwrap();
        let regions = project_st(&[], &path, 0.0, &EgoFootprint::default(), &ProjectionConfig::default());
        assert!(regions.is_empty());
    }

    #[test]
    fn static_blocker_spans_full_horizon() {
        let line = ReferenceLine::straight(0.0, 0.0, 0.0, 200.0, 1.0);
        let config = ProjectionConfig::default();
        let tracks = track_obstacles(&[static_box("s", 50.0, 0.0, 4.0, 2.0)], &line, 10.0, &config);
        let path = Spline::new(vec![0.0, 150.0], 5, vec![0.0; 6]).unwrap();
        let fp = EgoFootprint::default();
        let regions = project_st(&tracks, &path, 0.0, &fp, &config);
        assert_eq!(regions.len(), 1);
        let r = &regions[0];
        assert_eq!(r.t_range(), (0.0, 8.0));
        let (lo, hi) = r.s_range_at(3.0).unwrap();
        assert!((lo - (48.0 - fp.l_f - 1.0)).abs() < 1e-9);
        assert!((hi - (52.0 + fp.l_r + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn hull_is_counterclockwise_and_convex() {
        let hull = convex_hull(vec![(0.0, 0.0), (1.0, 0.0), (0.5, 0.2), (1.0, 1.0), (0.0, 1.0)]);
        assert_eq!(hull.len(), 4);
        let area: f64 = (0..hull.len())
            .map(|i| {
                let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
                a.0 * b.1 - b.0 * a.1
            })
            .sum();
        assert!(area > 0.0);
    }
}
