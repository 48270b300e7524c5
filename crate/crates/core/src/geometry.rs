//! Reference lines and Cartesian/Frenet state conversion.
//!
//! A reference line is a dense list of samples `(s, x, y, heading, kappa,
//! dkappa)`. Between two samples the position is a quintic Hermite curve in
//! the local arc parameter, matching position, tangent and curvature vector
//! at both ends, so heading and curvature are continuous along the line.
//!
//! Lateral offsets are positive to the left of the driving direction.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest allowed gap between consecutive samples, meters.
pub const MAX_SAMPLE_SPACING: f64 = 1.0;
const HEADING_TOLERANCE: f64 = 1e-2;
const NEWTON_MAX_ITERS: usize = 10;
const NEWTON_TOLERANCE: f64 = 1e-6;
const TIE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid reference line: {0}")]
    InvalidReferenceLine(String),
    #[error("projection is ambiguous between stations {s_a:.3} and {s_b:.3}")]
    AmbiguousProjection { s_a: f64, s_b: f64 },
    #[error("point projects outside the reference line (clamped at s = {s:.3})")]
    OutOfRange { s: f64 },
    #[error("lateral offset {l:.3} is beyond the radius of curvature at s = {s:.3} (kappa = {kappa:.4})")]
    CurvatureSingularity { s: f64, l: f64, kappa: f64 },
}

/// Normalizes an angle to `(-pi, pi]`.
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefPoint {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub kappa: f64,
    pub dkappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CartesianState {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub kappa: f64,
    pub v: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrenetState {
    pub s: f64,
    pub l: f64,
    /// dl/ds
    pub dl: f64,
    pub ddl: f64,
    pub dddl: f64,
}

/// A Frenet state together with the station rate and its derivative.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FrenetMotion {
    pub state: FrenetState,
    pub s_dot: f64,
    pub s_ddot: f64,
}

/// Per-segment quintic in the local parameter `tau in [0, h]`.
#[derive(Debug, Clone, Copy)]
struct HermiteSegment {
    h: f64,
    cx: [f64; 6],
    cy: [f64; 6],
}

fn hermite_coeffs(h: f64, p0: f64, t0: f64, a0: f64, p1: f64, t1: f64, a1: f64) -> [f64; 6] {
    let d = p1 - p0 - t0 * h - 0.5 * a0 * h * h;
    let e = t1 - t0 - a0 * h;
    let f = a1 - a0;
    let h2 = h * h;
    let h3 = h2 * h;
    [
        p0,
        t0,
        0.5 * a0,
        (10.0 * d - 4.0 * e * h + 0.5 * f * h2) / h3,
        (-15.0 * d + 7.0 * e * h - f * h2) / (h3 * h),
        (6.0 * d - 3.0 * e * h + 0.5 * f * h2) / (h3 * h2),
    ]
}

/// Value and first two derivatives of a quintic at `t`.
fn poly_eval3(c: &[f64; 6], t: f64) -> (f64, f64, f64) {
    let v = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
    let d1 = c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
    let d2 = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
    (v, d1, d2)
}

impl HermiteSegment {
    fn new(a: &RefPoint, b: &RefPoint) -> Self {
        let h = b.s - a.s;
        let (sa, ca) = a.heading.sin_cos();
        let (sb, cb) = b.heading.sin_cos();
        Self {
            h,
            cx: hermite_coeffs(h, a.x, ca, -a.kappa * sa, b.x, cb, -b.kappa * sb),
            cy: hermite_coeffs(h, a.y, sa, a.kappa * ca, b.y, sb, b.kappa * cb),
        }
    }

    fn eval(&self, tau: f64) -> ([f64; 3], [f64; 3]) {
        let (x, dx, ddx) = poly_eval3(&self.cx, tau);
        let (y, dy, ddy) = poly_eval3(&self.cy, tau);
        ([x, dx, ddx], [y, dy, ddy])
    }
}

/// Pose of the reference line at a station.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefPose {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub heading: f64,
    pub kappa: f64,
    pub dkappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RefPoint>", into = "Vec<RefPoint>")]
pub struct ReferenceLine {
    samples: Vec<RefPoint>,
    segments: Vec<HermiteSegmentData>,
}

// Wrapper so the derived PartialEq on ReferenceLine only compares samples.
#[derive(Debug, Clone, Copy)]
struct HermiteSegmentData(HermiteSegment);

impl PartialEq for HermiteSegmentData {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl TryFrom<Vec<RefPoint>> for ReferenceLine {
    type Error = GeometryError;

    fn try_from(samples: Vec<RefPoint>) -> Result<Self, Self::Error> {
        ReferenceLine::from_samples(samples)
    }
}

impl From<ReferenceLine> for Vec<RefPoint> {
    fn from(line: ReferenceLine) -> Self {
        line.samples
    }
}

impl ReferenceLine {
    /// Builds a reference line from fully specified samples, checking the
    /// station, spacing and heading invariants.
    pub fn from_samples(samples: Vec<RefPoint>) -> Result<Self, GeometryError> {
        if samples.len() < 2 {
            return Err(GeometryError::InvalidReferenceLine(
                "at least two samples are required".into(),
            ));
        }
        if samples[0].s.abs() > 1e-9 {
            return Err(GeometryError::InvalidReferenceLine(format!(
                "first station must be 0, got {}",
                samples[0].s
            )));
        }
        for (i, w) in samples.windows(2).enumerate() {
            let ds = w[1].s - w[0].s;
            if !(ds > 0.0) {
                return Err(GeometryError::InvalidReferenceLine(format!(
                    "stations not strictly increasing at sample {}",
                    i + 1
                )));
            }
            if ds > MAX_SAMPLE_SPACING + 1e-9 {
                return Err(GeometryError::InvalidReferenceLine(format!(
                    "sample spacing {ds:.3} m exceeds {MAX_SAMPLE_SPACING} m at sample {}",
                    i + 1
                )));
            }
        }
        let n = samples.len();
        for i in 0..n {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            let chord = (samples[b].y - samples[a].y).atan2(samples[b].x - samples[a].x);
            // One-sided chords at the ends lag the tangent by kappa * h / 2.
            let slack = if i == 0 || i == n - 1 {
                0.5 * samples[i].kappa.abs() * (samples[b].s - samples[a].s)
            } else {
                0.0
            };
            let err = normalize_angle(samples[i].heading - chord).abs();
            if err > HEADING_TOLERANCE + slack {
                return Err(GeometryError::InvalidReferenceLine(format!(
                    "heading at sample {i} differs from the local chord by {err:.4} rad"
                )));
            }
        }
        let segments = samples
            .windows(2)
            .map(|w| HermiteSegmentData(HermiteSegment::new(&w[0], &w[1])))
            .collect();
        Ok(Self { samples, segments })
    }

    /// Builds a reference line from a dense `(x, y)` polyline. Stations are
    /// cumulative chord lengths, headings come from central chords and
    /// curvature from the circle through each triple of points.
    pub fn from_polyline(points: &[(f64, f64)]) -> Result<Self, GeometryError> {
        let n = points.len();
        if n < 3 {
            return Err(GeometryError::InvalidReferenceLine(
                "a polyline needs at least three points".into(),
            ));
        }
        let mut s = vec![0.0; n];
        for i in 1..n {
            let (dx, dy) = (points[i].0 - points[i - 1].0, points[i].1 - points[i - 1].1);
            s[i] = s[i - 1] + dx.hypot(dy);
        }
        let mut kappa = vec![0.0; n];
        for i in 1..n - 1 {
            kappa[i] = menger_curvature(points[i - 1], points[i], points[i + 1]);
        }
        kappa[0] = kappa[1];
        kappa[n - 1] = kappa[n - 2];
        let mut heading = vec![0.0; n];
        for i in 0..n {
            let (a, b) = match i {
                0 => (0, 1),
                _ if i == n - 1 => (n - 2, n - 1),
                _ => (i - 1, i + 1),
            };
            let chord = (points[b].1 - points[a].1).atan2(points[b].0 - points[a].0);
            // Correct the one-sided end chords by half the turned angle.
            heading[i] = match i {
                0 => chord - 0.5 * kappa[0] * (s[1] - s[0]),
                _ if i == n - 1 => chord + 0.5 * kappa[n - 1] * (s[n - 1] - s[n - 2]),
                _ => chord,
            };
        }
        let mut samples: Vec<RefPoint> = (0..n)
            .map(|i| RefPoint {
                s: s[i],
                x: points[i].0,
                y: points[i].1,
                heading: normalize_angle(heading[i]),
                kappa: kappa[i],
                dkappa: 0.0,
            })
            .collect();
        fill_dkappa(&mut samples);
        Self::from_samples(samples)
    }

    /// Straight line from `(x0, y0)` along `heading`.
    pub fn straight(x0: f64, y0: f64, heading: f64, length: f64, spacing: f64) -> Self {
        let n = (length / spacing).ceil() as usize;
        let ds = length / n as f64;
        let (sh, ch) = heading.sin_cos();
        let samples = (0..=n)
            .map(|i| {
                let s = i as f64 * ds;
                RefPoint {
                    s,
                    x: x0 + s * ch,
                    y: y0 + s * sh,
                    heading: normalize_angle(heading),
                    kappa: 0.0,
                    dkappa: 0.0,
                }
            })
            .collect();
        Self::from_samples(samples).expect("straight line samples are valid")
    }

    /// Circular arc of signed curvature `1/radius` (positive turns left)
    /// starting at `(x0, y0)` with the given heading.
    pub fn arc(x0: f64, y0: f64, heading: f64, radius: f64, length: f64, spacing: f64) -> Self {
        Self::clothoid(x0, y0, heading, 1.0 / radius, 0.0, length, spacing)
    }

    /// Curve with linearly varying curvature `kappa0 + dkappa * s`, sampled
    /// from the closed-form heading with Simpson integration of position.
    pub fn clothoid(
        x0: f64,
        y0: f64,
        heading0: f64,
        kappa0: f64,
        dkappa: f64,
        length: f64,
        spacing: f64,
    ) -> Self {
        let n = (length / spacing).ceil() as usize;
        let ds = length / n as f64;
        let theta = |s: f64| heading0 + kappa0 * s + 0.5 * dkappa * s * s;
        let mut samples = Vec::with_capacity(n + 1);
        let (mut x, mut y) = (x0, y0);
        for i in 0..=n {
            let s = i as f64 * ds;
            if i > 0 {
                let sa = s - ds;
                let sm = sa + 0.5 * ds;
                let (ta, tm, tb) = (theta(sa), theta(sm), theta(s));
                x += ds / 6.0 * (ta.cos() + 4.0 * tm.cos() + tb.cos());
                y += ds / 6.0 * (ta.sin() + 4.0 * tm.sin() + tb.sin());
            }
            samples.push(RefPoint {
                s,
                x,
                y,
                heading: normalize_angle(theta(s)),
                kappa: kappa0 + dkappa * s,
                dkappa,
            });
        }
        Self::from_samples(samples).expect("clothoid samples are valid")
    }

    pub fn samples(&self) -> &[RefPoint] {
        &self.samples
    }

    pub fn total_length(&self) -> f64 {
        self.samples.last().map(|p| p.s).unwrap_or(0.0)
    }

    fn segment_index(&self, s: f64) -> usize {
        let idx = self.samples.partition_point(|p| p.s <= s);
        idx.saturating_sub(1).min(self.segments.len() - 1)
    }

    fn pose_on_segment(&self, seg: usize, tau: f64) -> RefPose {
        let h = &self.segments[seg].0;
        let ([x, dx, ddx], [y, dy, ddy]) = h.eval(tau);
        let speed2 = dx * dx + dy * dy;
        let kappa = (dx * ddy - dy * ddx) / (speed2 * speed2.sqrt());
        let a = &self.samples[seg];
        let b = &self.samples[seg + 1];
        let u = (tau / h.h).clamp(0.0, 1.0);
        RefPose {
            s: a.s + tau,
            x,
            y,
            heading: dy.atan2(dx),
            kappa,
            dkappa: a.dkappa + u * (b.dkappa - a.dkappa),
        }
    }

    /// Interpolated reference pose at station `s`, clamped to the line.
    pub fn pose_at(&self, s: f64) -> RefPose {
        let s = s.clamp(0.0, self.total_length());
        let seg = self.segment_index(s);
        self.pose_on_segment(seg, s - self.samples[seg].s)
    }

    /// Foot point of `(x, y)` on the line: station and signed lateral offset.
    pub fn project_xy(&self, x: f64, y: f64) -> Result<(RefPose, f64), GeometryError> {
        let d2 = |p: &RefPoint| (p.x - x).powi(2) + (p.y - y).powi(2);
        let (best, best_d2) = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, p)| (i, d2(p)))
            .fold((0, f64::INFINITY), |acc, (i, d)| if d < acc.1 { (i, d) } else { acc });
        let best_d = best_d2.sqrt();
        for (j, p) in self.samples.iter().enumerate() {
            if j.abs_diff(best) > 1 && (d2(p).sqrt() - best_d).abs() <= TIE_TOLERANCE {
                // A tie is only ambiguous if it is a separate local minimum.
                let prev = j.checked_sub(1).map(|k| d2(&self.samples[k]));
                let next = self.samples.get(j + 1).map(d2);
                let dj = d2(p);
                if prev.is_none_or(|v| v >= dj) && next.is_none_or(|v| v >= dj) {
                    return Err(GeometryError::AmbiguousProjection {
                        s_a: self.samples[best].s,
                        s_b: p.s,
                    });
                }
            }
        }
        let mut candidates = Vec::with_capacity(2);
        if best > 0 {
            candidates.push(best - 1);
        }
        if best < self.segments.len() {
            candidates.push(best);
        }
        let mut foot: Option<(RefPose, f64)> = None;
        for seg in candidates {
            let tau = self.newton_foot(seg, x, y);
            let pose = self.pose_on_segment(seg, tau);
            let dist2 = (pose.x - x).powi(2) + (pose.y - y).powi(2);
            if foot.as_ref().is_none_or(|(_, d)| dist2 < *d) {
                foot = Some((pose, dist2));
            }
        }
        let (pose, _) = foot.expect("at least one candidate segment");
        let (sh, ch) = pose.heading.sin_cos();
        let (dx, dy) = (x - pose.x, y - pose.y);
        let along = dx * ch + dy * sh;
        let at_start = pose.s <= 1e-12;
        let at_end = pose.s >= self.total_length() - 1e-12;
        if (at_start && along < -NEWTON_TOLERANCE) || (at_end && along > NEWTON_TOLERANCE) {
            return Err(GeometryError::OutOfRange { s: pose.s });
        }
        let l = ch * dy - sh * dx;
        Ok((pose, l))
    }

    /// Like [`project_xy`](Self::project_xy) but extends the line straight
    /// beyond its ends instead of failing, so points behind the start get a
    /// negative station.
    pub fn project_xy_extrapolated(&self, x: f64, y: f64) -> (f64, f64) {
        match self.project_xy(x, y) {
            Ok((pose, l)) => (pose.s, l),
            Err(GeometryError::OutOfRange { s }) => {
                let pose = self.pose_at(s);
                let (sh, ch) = pose.heading.sin_cos();
                let (dx, dy) = (x - pose.x, y - pose.y);
                (pose.s + dx * ch + dy * sh, ch * dy - sh * dx)
            }
            Err(_) => {
                // Fall back to the nearest sample.
                let p = self
                    .samples
                    .iter()
                    .min_by(|a, b| {
                        let da = (a.x - x).powi(2) + (a.y - y).powi(2);
                        let db = (b.x - x).powi(2) + (b.y - y).powi(2);
                        da.total_cmp(&db)
                    })
                    .expect("non-empty reference line");
                let (sh, ch) = p.heading.sin_cos();
                let (dx, dy) = (x - p.x, y - p.y);
                (p.s + dx * ch + dy * sh, ch * dy - sh * dx)
            }
        }
    }

    fn newton_foot(&self, seg: usize, x: f64, y: f64) -> f64 {
        let h = &self.segments[seg].0;
        let a = &self.samples[seg];
        let b = &self.samples[seg + 1];
        let (cx, cy) = (b.x - a.x, b.y - a.y);
        let chord2 = cx * cx + cy * cy;
        let mut tau = (((x - a.x) * cx + (y - a.y) * cy) / chord2).clamp(0.0, 1.0) * h.h;
        for _ in 0..NEWTON_MAX_ITERS {
            let ([px, dx, ddx], [py, dy, ddy]) = h.eval(tau);
            let (ex, ey) = (px - x, py - y);
            let f = ex * dx + ey * dy;
            let df = dx * dx + dy * dy + ex * ddx + ey * ddy;
            if df.abs() < 1e-12 {
                break;
            }
            let next = (tau - f / df).clamp(0.0, h.h);
            let step = (next - tau).abs();
            tau = next;
            if step < NEWTON_TOLERANCE {
                break;
            }
        }
        tau
    }

    /// Converts a Cartesian state into Frenet coordinates.
    pub fn project_to_frenet(&self, state: &CartesianState) -> Result<FrenetState, GeometryError> {
        self.project_motion(state).map(|m| m.state)
    }

    /// Cartesian to Frenet including station rate. The ego curvature rate is
    /// not part of [`CartesianState`], so `dddl` is computed with a zero
    /// path curvature derivative.
    pub fn project_motion(&self, state: &CartesianState) -> Result<FrenetMotion, GeometryError> {
        let (r, l) = self.project_xy(state.x, state.y)?;
        let one_minus_kl = 1.0 - r.kappa * l;
        if one_minus_kl <= 0.0 {
            return Err(GeometryError::CurvatureSingularity { s: r.s, l, kappa: r.kappa });
        }
        let delta = normalize_angle(state.heading - r.heading);
        let (sin_d, cos_d) = delta.sin_cos();
        let tan_d = sin_d / cos_d;
        let dl = one_minus_kl * tan_d;
        let kl_prime = r.dkappa * l + r.kappa * dl;
        let ddl = -kl_prime * tan_d
            + one_minus_kl / (cos_d * cos_d) * (state.kappa * one_minus_kl / cos_d - r.kappa);
        // d/ds of ddl with the ego curvature held constant.
        let dddl = finite_dddl(r.kappa, r.dkappa, state.kappa, l, dl, ddl);
        let s_dot = state.v * cos_d / one_minus_kl;
        Ok(FrenetMotion {
            state: FrenetState { s: r.s, l, dl, ddl, dddl },
            s_dot,
            s_ddot: state.a,
        })
    }

    /// Converts a Frenet state back to a Cartesian pose (zero speed).
    pub fn frenet_to_cartesian(&self, fs: &FrenetState) -> Result<CartesianState, GeometryError> {
        self.frenet_to_cartesian_motion(fs, 0.0, 0.0)
    }

    /// Frenet to Cartesian with the speed and acceleration implied by the
    /// station rate `s_dot` and its derivative `s_ddot`.
    pub fn frenet_to_cartesian_motion(
        &self,
        fs: &FrenetState,
        s_dot: f64,
        s_ddot: f64,
    ) -> Result<CartesianState, GeometryError> {
        let r = self.pose_at(fs.s);
        let one_minus_kl = 1.0 - r.kappa * fs.l;
        if one_minus_kl <= 0.0 {
            return Err(GeometryError::CurvatureSingularity { s: fs.s, l: fs.l, kappa: r.kappa });
        }
        let (sh, ch) = r.heading.sin_cos();
        let x = r.x - sh * fs.l;
        let y = r.y + ch * fs.l;
        let delta = fs.dl.atan2(one_minus_kl);
        let (sin_d, cos_d) = delta.sin_cos();
        let tan_d = sin_d / cos_d;
        let kl_prime = r.dkappa * fs.l + r.kappa * fs.dl;
        let kappa = ((fs.ddl + kl_prime * tan_d) * cos_d * cos_d / one_minus_kl + r.kappa) * cos_d
            / one_minus_kl;
        let v = (one_minus_kl * one_minus_kl + fs.dl * fs.dl).sqrt() * s_dot;
        let delta_prime = one_minus_kl / cos_d * kappa - r.kappa;
        let a = s_ddot * one_minus_kl / cos_d
            + s_dot * s_dot / cos_d * (fs.dl * delta_prime - kl_prime);
        Ok(CartesianState {
            x,
            y,
            heading: normalize_angle(delta + r.heading),
            kappa,
            v,
            a,
        })
    }
}

fn menger_curvature(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    let cross = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
    let ab = (b.0 - a.0).hypot(b.1 - a.1);
    let bc = (c.0 - b.0).hypot(c.1 - b.1);
    let ca = (a.0 - c.0).hypot(a.1 - c.1);
    let denom = ab * bc * ca;
    if denom < 1e-12 {
        0.0
    } else {
        2.0 * cross / denom
    }
}

fn fill_dkappa(samples: &mut [RefPoint]) {
    let n = samples.len();
    let k: Vec<f64> = samples.iter().map(|p| p.kappa).collect();
    for i in 0..n {
        let (a, b) = match i {
            0 => (0, 1),
            _ if i == n - 1 => (n - 2, n - 1),
            _ => (i - 1, i + 1),
        };
        samples[i].dkappa = (k[b] - k[a]) / (samples[b].s - samples[a].s);
    }
}

fn finite_dddl(kr: f64, dkr: f64, kappa: f64, l: f64, dl: f64, ddl: f64) -> f64 {
    // Differentiate ddl(s) numerically along the state's own motion:
    // l(s + h) is advanced with its Taylor expansion and the reference
    // curvature with its first derivative.
    let h = 1e-3;
    let eval = |kr: f64, l: f64, dl: f64| {
        let one_minus_kl = 1.0 - kr * l;
        let tan_d = dl / one_minus_kl;
        let cos_d = 1.0 / (1.0 + tan_d * tan_d).sqrt();
        let kl_prime = dkr * l + kr * dl;
        -kl_prime * tan_d
            + one_minus_kl / (cos_d * cos_d) * (kappa * one_minus_kl / cos_d - kr)
    };
    let fwd = eval(kr + dkr * h, l + dl * h + 0.5 * ddl * h * h, dl + ddl * h);
    let bwd = eval(kr - dkr * h, l - dl * h + 0.5 * ddl * h * h, dl - ddl * h);
    (fwd - bwd) / (2.0 * h)
}
