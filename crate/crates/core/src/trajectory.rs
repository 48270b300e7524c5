//! Time-parameterized Cartesian trajectories.

use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, CartesianState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// Seconds since the trajectory's start time.
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub kappa: f64,
    pub v: f64,
    pub a: f64,
}

impl TrajectoryPoint {
    pub fn state(&self) -> CartesianState {
        CartesianState { x: self.x, y: self.y, heading: self.heading, kappa: self.kappa, v: self.v, a: self.a }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    /// Absolute time of the first point, seconds.
    pub start_time: f64,
    pub points: Vec<TrajectoryPoint>,
}

impl Trajectory {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.t)
    }

    /// Linear interpolation at relative time `t`, clamped to the ends.
    pub fn sample(&self, t: f64) -> Option<TrajectoryPoint> {
        let pts = &self.points;
        let first = pts.first()?;
        if t <= first.t {
            return Some(*first);
        }
        let last = pts.last()?;
        if t >= last.t {
            return Some(*last);
        }
        let idx = pts.partition_point(|p| p.t <= t);
        let (a, b) = (&pts[idx - 1], &pts[idx]);
        if (t - a.t).abs() < 1e-12 {
            return Some(*a);
        }
        let u = (t - a.t) / (b.t - a.t);
        let lerp = |p: f64, q: f64| p + u * (q - p);
        Some(TrajectoryPoint {
            t,
            x: lerp(a.x, b.x),
            y: lerp(a.y, b.y),
            heading: normalize_angle(a.heading + u * normalize_angle(b.heading - a.heading)),
            kappa: lerp(a.kappa, b.kappa),
            v: lerp(a.v, b.v),
            a: lerp(a.a, b.a),
        })
    }

    /// Point whose relative time equals `t` within a microsecond, if any.
    pub fn point_at(&self, t: f64) -> Option<&TrajectoryPoint> {
        let idx = self.points.partition_point(|p| p.t < t - 1e-6);
        self.points.get(idx).filter(|p| (p.t - t).abs() <= 1e-6)
    }

    /// Path length along the polyline of points.
    pub fn arc_length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1].x - w[0].x).hypot(w[1].y - w[0].y)).sum()
    }
}
