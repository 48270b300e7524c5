//! Versioned JSON scenario files.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CartesianState, ReferenceLine};
use crate::planner::{LaneCandidate, Regulation, World};
use crate::projection::{EgoFootprint, Obstacle, ObstacleKind};

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaneSpec {
    pub lane_id: String,
    /// Dense `(x, y)` samples of the lane center, at most 1 m apart.
    pub polyline: Vec<(f64, f64)>,
    pub width: f64,
    #[serde(default)]
    pub is_change_lane: bool,
    #[serde(default)]
    pub is_current: bool,
    #[serde(default)]
    pub regulations: Vec<Regulation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoSpec {
    pub state: CartesianState,
    #[serde(default)]
    pub footprint: EgoFootprint,
}

fn default_cycle_period() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    #[serde(default = "default_cycle_period")]
    pub cycle_period: f64,
    pub cycles: usize,
}

impl SimSpec {
    pub fn horizon(&self) -> f64 {
        self.cycle_period * self.cycles as f64
    }
}

/// A validated scenario. Obstacle pose times are absolute, starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    pub lanes: Vec<LaneSpec>,
    pub ego: EgoSpec,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    pub sim: SimSpec,
    #[serde(skip)]
    candidates: Vec<LaneCandidate>,
}

impl Scenario {
    /// Parses and validates JSON text.
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let mut scenario: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn candidates(&self) -> &[LaneCandidate] {
        &self.candidates
    }

    /// World at time zero.
    pub fn initial_world(&self) -> World {
        World { time: 0.0, ego: self.ego.state, footprint: self.ego.footprint, obstacles: self.obstacles.clone() }
    }

    fn validate(&mut self) -> Result<(), ScenarioError> {
        let invalid = |msg: String| Err(ScenarioError::Validation(msg));
        if self.version != SCENARIO_VERSION {
            return invalid(format!("unsupported version {} (expected {SCENARIO_VERSION})", self.version));
        }
        if self.lanes.is_empty() {
            return invalid("at least one lane is required".into());
        }
        let current = self.lanes.iter().filter(|l| l.is_current).count();
        if current != 1 {
            return invalid(format!("exactly one lane must be current, found {current}"));
        }
        let mut ids = BTreeSet::new();
        let mut candidates = Vec::with_capacity(self.lanes.len());
        for lane in &self.lanes {
            if !ids.insert(lane.lane_id.as_str()) {
                return invalid(format!("duplicate lane id {}", lane.lane_id));
            }
            if !(lane.width > 0.0) {
                return invalid(format!("lane {}: width must be positive", lane.lane_id));
            }
            let reference = ReferenceLine::from_polyline(&lane.polyline)
                .map_err(|e| ScenarioError::Validation(format!("lane {}: {e}", lane.lane_id)))?;
            let span = reference.total_length();
            for reg in &lane.regulations {
                let ok = match *reg {
                    Regulation::SpeedLimit { v } => v > 0.0,
                    Regulation::StopLine { s } => (0.0..=span).contains(&s),
                    Regulation::KeepClear { s_min, s_max } => s_min < s_max && s_min >= 0.0 && s_max <= span,
                };
                if !ok {
                    return invalid(format!("lane {}: regulation {reg:?} outside the lane span [0, {span:.2}]", lane.lane_id));
                }
            }
            candidates.push(LaneCandidate {
                lane_id: lane.lane_id.clone(),
                reference_line: reference,
                width: lane.width,
                is_change_lane: lane.is_change_lane,
                is_current: lane.is_current,
                regulations: lane.regulations.clone(),
            });
        }
        let fp = &self.ego.footprint;
        if !(fp.l_f > 0.0 && fp.l_r >= 0.0 && fp.width > 0.0) {
            return invalid("ego footprint dimensions must be positive".into());
        }
        if !(self.ego.state.v >= 0.0) {
            return invalid("ego speed must be non-negative".into());
        }
        if !(self.sim.cycle_period > 0.0) || self.sim.cycles == 0 {
            return invalid("sim needs a positive cycle period and at least one cycle".into());
        }
        let horizon = self.sim.horizon();
        let mut obstacle_ids = BTreeSet::new();
        for ob in &self.obstacles {
            if !obstacle_ids.insert(ob.id.as_str()) {
                return invalid(format!("duplicate obstacle id {}", ob.id));
            }
            if !(ob.length > 0.0 && ob.width > 0.0) {
                return invalid(format!("obstacle {}: dimensions must be positive", ob.id));
            }
            if ob.trajectory.is_empty() {
                return invalid(format!("obstacle {}: empty trajectory", ob.id));
            }
            if ob.trajectory.windows(2).any(|w| w[1].t <= w[0].t) {
                return invalid(format!("obstacle {}: trajectory times must increase", ob.id));
            }
            if ob.kind == ObstacleKind::Dynamic && ob.horizon() < horizon - 1e-9 {
                return invalid(format!(
                    "obstacle {}: trajectory horizon {:.2} s is shorter than the simulation horizon {horizon:.2} s",
                    ob.id,
                    ob.horizon()
                ));
            }
        }
        self.candidates = candidates;
        Ok(())
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    Scenario::from_json(&text)
}
