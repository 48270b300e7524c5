//! Trace files, trajectory CSV and per-cycle SVG plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::planner::LanePlan;
use crate::sim::{Trace, TraceRecord};

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("unknown output format {0:?} (expected json, csv or svg)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub json: bool,
    pub csv: bool,
    pub svg: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self { json: true, csv: true, svg: true }
    }
}

impl std::str::FromStr for Formats {
    type Err = OutputError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut f = Formats { json: false, csv: false, svg: false };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "json" => f.json = true,
                "csv" => f.csv = true,
                "svg" => f.svg = true,
                other => return Err(OutputError::UnknownFormat(other.to_string())),
            }
        }
        Ok(f)
    }
}

fn write_file(path: &Path, contents: &str) -> Result<PathBuf, OutputError> {
    std::fs::write(path, contents).map_err(|source| OutputError::Io { path: path.to_path_buf(), source })?;
    Ok(path.to_path_buf())
}

pub fn trace_json(trace: &Trace) -> String {
    serde_json::to_string_pretty(trace).expect("trace serializes")
}

pub fn timings_json(trace: &Trace) -> String {
    serde_json::to_string_pretty(&trace.timings).expect("timings serialize")
}

pub fn trajectory_csv(trace: &Trace) -> String {
    let mut out = String::from("cycle,t,x,y,v,a\n");
    for r in &trace.records {
        for p in &r.result.trajectory.points {
            let _ = writeln!(out, "{},{:.3},{:.6},{:.6},{:.6},{:.6}", r.cycle, p.t, p.x, p.y, p.v, p.a);
        }
    }
    out
}

/// Writes the selected files into `out_dir`; SVG plots only when `plot`
/// is set. Returns the files written.
pub fn emit_outputs(trace: &Trace, out_dir: &Path, formats: Formats, plot: bool) -> Result<Vec<PathBuf>, OutputError> {
    std::fs::create_dir_all(out_dir).map_err(|source| OutputError::Io { path: out_dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    if formats.json {
        written.push(write_file(&out_dir.join("trace.json"), &trace_json(trace))?);
        written.push(write_file(&out_dir.join("timings.json"), &timings_json(trace))?);
    }
    if formats.csv {
        written.push(write_file(&out_dir.join("trajectory.csv"), &trajectory_csv(trace))?);
    }
    if formats.svg && plot {
        let dir = out_dir.join("plots");
        std::fs::create_dir_all(&dir).map_err(|source| OutputError::Io { path: dir.clone(), source })?;
        for r in &trace.records {
            let c = r.cycle;
            if let Some(plan) = r.result.chosen_plan() {
                written.push(write_file(&dir.join(format!("cycle_{c:03}_sl.svg")), &sl_plot(plan))?);
                written.push(write_file(&dir.join(format!("cycle_{c:03}_st.svg")), &st_plot(plan))?);
            }
            written.push(write_file(&dir.join(format!("cycle_{c:03}_xy.svg")), &xy_plot(trace, r))?);
        }
    }
    Ok(written)
}

/// A plot panel mapping data coordinates onto an SVG viewport.
struct Panel {
    left: f64,
    top: f64,
    width: f64,
    height: f64,
    x: (f64, f64),
    y: (f64, f64),
}

impl Panel {
    fn px(&self, x: f64) -> f64 {
        self.left + (x - self.x.0) / (self.x.1 - self.x.0) * self.width
    }

    fn py(&self, y: f64) -> f64 {
        self.top + (1.0 - (y - self.y.0) / (self.y.1 - self.y.0)) * self.height
    }

    fn points(&self, pts: &[(f64, f64)]) -> String {
        pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y))).collect::<Vec<_>>().join(" ")
    }

    fn polyline(&self, out: &mut String, pts: &[(f64, f64)], stroke: &str, width: f64, dash: bool) {
        let dash = if dash { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"{dash}/>"#,
            self.points(pts)
        );
    }

    fn polygon(&self, out: &mut String, pts: &[(f64, f64)], fill: &str) {
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{fill}" fill-opacity="0.45" stroke="{fill}"/>"#,
            self.points(pts)
        );
    }

    fn frame(&self, out: &mut String, title: &str, x_label: &str, y_label: &str) {
        let _ = writeln!(
            out,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
            self.left, self.top, self.width, self.height
        );
        let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="14">{title}</text>"#, self.left, self.top - 8.0);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{x_label}</text>"#,
            self.left + 0.5 * self.width,
            self.top + self.height + 32.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="12" transform="rotate(-90 {} {})" text-anchor="middle">{y_label}</text>"#,
            self.left - 40.0,
            self.top + 0.5 * self.height,
            self.left - 40.0,
            self.top + 0.5 * self.height
        );
        for (v, anchor) in [(self.x.0, "start"), (self.x.1, "end")] {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="{anchor}">{v:.1}</text>"#,
                self.px(v),
                self.top + self.height + 14.0
            );
        }
        for v in [self.y.0, self.y.1] {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{v:.1}</text>"#,
                self.left - 4.0,
                self.py(v) + 4.0
            );
        }
    }
}

fn svg(width: f64, height: f64, body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{body}</svg>\n"
    )
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if (hi - lo).abs() < 1e-9 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn sl_plot(plan: &LanePlan) -> String {
    let path = &plan.path;
    let (s_lo, s_hi) = path.profile.spline.domain();
    let (l_lo, l_hi) = path.tunnel.bounds.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(lo, hi)| {
        (a.min(lo), b.max(hi))
    });
    let panel = Panel { left: 60.0, top: 30.0, width: 820.0, height: 300.0, x: (s_lo, s_hi), y: padded(l_lo, l_hi) };
    let mut body = String::new();
    panel.frame(&mut body, &format!("SL frame, lane {}", plan.lane_id), "s (m)", "l (m)");
    for r in &plan.sl_regions {
        let (s0, s1) = (r.s_min.clamp(s_lo, s_hi), r.s_max.clamp(s_lo, s_hi));
        if s1 > s0 {
            let pts = [(s0, r.l_min), (s1, r.l_min), (s1, r.l_max), (s0, r.l_max)];
            panel.polygon(&mut body, &pts, "#d62728");
        }
    }
    let low: Vec<(f64, f64)> = path.tunnel.stations.iter().zip(&path.tunnel.bounds).map(|(&s, b)| (s, b.0)).collect();
    let high: Vec<(f64, f64)> = path.tunnel.stations.iter().zip(&path.tunnel.bounds).map(|(&s, b)| (s, b.1)).collect();
    panel.polyline(&mut body, &low, "#2ca02c", 1.0, true);
    panel.polyline(&mut body, &high, "#2ca02c", 1.0, true);
    panel.polyline(&mut body, &path.dp.nodes, "#7f7f7f", 1.0, false);
    let n = 400;
    let qp: Vec<(f64, f64)> = (0..=n)
        .map(|i| {
            let s = s_lo + (s_hi - s_lo) * i as f64 / n as f64;
            (s, path.profile.lateral(s))
        })
        .collect();
    panel.polyline(&mut body, &qp, "#1f77b4", 2.0, false);
    svg(920.0, 380.0, &body)
}

fn st_plot(plan: &LanePlan) -> String {
    let speed = &plan.speed;
    let horizon = *speed.tunnel.times.last().unwrap_or(&8.0);
    let profile: Vec<(f64, f64)> = (0..=160)
        .map(|k| {
            let t = horizon * k as f64 / 160.0;
            (t, speed.profile.station(t))
        })
        .collect();
    let s_max = profile.iter().map(|p| p.1).fold(10.0, f64::max) * 1.3;
    let st = Panel { left: 60.0, top: 30.0, width: 820.0, height: 300.0, x: (0.0, horizon), y: (0.0, s_max) };
    let mut body = String::new();
    st.frame(&mut body, &format!("ST frame, lane {}", plan.lane_id), "t (s)", "s (m)");
    for r in &plan.st_regions {
        let pts: Vec<(f64, f64)> = r.polygon.iter().map(|&(t, s)| (t, s.clamp(0.0, s_max))).collect();
        panel_polygon_if_visible(&st, &mut body, &pts);
    }
    let low: Vec<(f64, f64)> =
        speed.tunnel.times.iter().zip(&speed.tunnel.bounds).map(|(&t, b)| (t, b.0.min(s_max))).collect();
    let high: Vec<(f64, f64)> =
        speed.tunnel.times.iter().zip(&speed.tunnel.bounds).map(|(&t, b)| (t, b.1.min(s_max))).collect();
    st.polyline(&mut body, &low, "#2ca02c", 1.0, true);
    st.polyline(&mut body, &high, "#2ca02c", 1.0, true);
    let dp: Vec<(f64, f64)> = speed.dp.times.iter().copied().zip(speed.dp.stations.iter().copied()).collect();
    st.polyline(&mut body, &dp, "#7f7f7f", 1.0, false);
    st.polyline(&mut body, &profile, "#1f77b4", 2.0, false);

    let velocity: Vec<(f64, f64)> = profile.iter().map(|&(t, _)| (t, speed.profile.velocity(t))).collect();
    let v_max = velocity.iter().map(|p| p.1).fold(1.0, f64::max) * 1.2;
    let vt = Panel { left: 60.0, top: 400.0, width: 820.0, height: 200.0, x: (0.0, horizon), y: (0.0, v_max) };
    vt.frame(&mut body, "speed", "t (s)", "v (m/s)");
    vt.polyline(&mut body, &velocity, "#ff7f0e", 2.0, false);
    svg(920.0, 650.0, &body)
}

fn panel_polygon_if_visible(panel: &Panel, body: &mut String, pts: &[(f64, f64)]) {
    if pts.iter().any(|&(_, s)| s > panel.y.0 && s < panel.y.1) {
        panel.polygon(body, pts, "#d62728");
    }
}

fn xy_plot(trace: &Trace, record: &TraceRecord) -> String {
    let traj = &record.result.trajectory.points;
    let mut xs: Vec<f64> = traj.iter().map(|p| p.x).collect();
    let mut ys: Vec<f64> = traj.iter().map(|p| p.y).collect();
    for o in &record.obstacles {
        xs.extend(o.corners.iter().map(|c| c.0));
        ys.extend(o.corners.iter().map(|c| c.1));
    }
    xs.push(record.ego.x);
    ys.push(record.ego.y);
    let (x_lo, x_hi) = padded(xs.iter().copied().fold(f64::INFINITY, f64::min), xs.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let (y_lo, y_hi) = (ys.iter().copied().fold(f64::INFINITY, f64::min), ys.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    // Equal scales on both axes.
    let width = 820.0;
    let height = 300.0;
    let span = ((x_hi - x_lo) / width).max((y_hi - y_lo + 8.0) / height);
    let (cx, cy) = (0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi));
    let panel = Panel {
        left: 60.0,
        top: 30.0,
        width,
        height,
        x: (cx - 0.5 * span * width, cx + 0.5 * span * width),
        y: (cy - 0.5 * span * height, cy + 0.5 * span * height),
    };
    let mut body = String::new();
    panel.frame(&mut body, &format!("cycle {}, t = {:.1} s", record.cycle, record.result.time), "x (m)", "y (m)");
    for lane in &trace.lanes {
        let pts: Vec<(f64, f64)> =
            lane.polyline.iter().copied().filter(|&(x, _)| x >= panel.x.0 && x <= panel.x.1).collect();
        if pts.len() >= 2 {
            panel.polyline(&mut body, &pts, "#bbbbbb", 1.0, true);
        }
    }
    for o in &record.obstacles {
        panel.polygon(&mut body, &o.corners, "#d62728");
    }
    let path: Vec<(f64, f64)> = traj.iter().map(|p| (p.x, p.y)).collect();
    panel.polyline(&mut body, &path, "#1f77b4", 2.0, false);
    svg(920.0, 380.0, &body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_format_lists() {
        let f: Formats = "csv".parse().unwrap();
        assert_eq!(f, Formats { json: false, csv: true, svg: false });
        assert!("json,pdf".parse::<Formats>().is_err());
    }
}
