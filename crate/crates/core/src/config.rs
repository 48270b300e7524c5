//! Planner tuning parameters, loadable from TOML.
//!
//! Every field has a default, so a config file only needs the keys it
//! changes. `plan --dump-config` prints the full default set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config value: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionConfig {
    /// Prediction horizon, seconds.
    pub horizon: f64,
    /// Time step for SL and ST overlap tests, seconds.
    pub dt: f64,
    /// Obstacles slower than `max(low_speed_floor, low_speed_ratio * v_ego)`
    /// take part in SL projection.
    pub low_speed_floor: f64,
    pub low_speed_ratio: f64,
    /// Station grid for the body envelope along the path, meters.
    pub envelope_step: f64,
}

impl Default for ProjectionConfig {
    fn default() -> Self {
        Self { horizon: 8.0, dt: 0.1, low_speed_floor: 2.0, low_speed_ratio: 0.4, envelope_step: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeConfig {
    pub min_row_interval: f64,
    /// Row spacing grows as `row_time * v`.
    pub row_time: f64,
    pub lane_change_interval_factor: f64,
    pub min_span: f64,
    /// Span grows as `span_time * v`.
    pub span_time: f64,
    pub num_offsets: usize,
    pub offset_spacing: f64,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            min_row_interval: 10.0,
            row_time: 1.5,
            lane_change_interval_factor: 2.0,
            min_span: 200.0,
            span_time: 8.0,
            num_offsets: 7,
            offset_spacing: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathConfig {
    pub lattice: LatticeConfig,
    /// Weights on the integrals of (f')^2, (f'')^2, (f''')^2 and (f - g)^2.
    pub w_dl: f64,
    pub w_ddl: f64,
    pub w_dddl: f64,
    pub w_guidance: f64,
    /// Weight pulling the path QP towards the DP path.
    pub qp_w_guidance: f64,
    /// Scale of the nudge cost at the collision buffer.
    pub w_obstacle: f64,
    pub collision_buffer: f64,
    pub nudge_range: f64,
    pub collision_cost: f64,
    /// Penalty per meter of station with the body outside the road.
    pub off_road_cost: f64,
    pub obstacle_sample_step: f64,
    pub qp_segments: usize,
    pub qp_constraint_step: f64,
    pub guidance_step: f64,
    pub kappa_max: f64,
    pub dkappa_max: f64,
    /// Speed cap while passing a nudged obstacle, as a fraction of the
    /// reference speed.
    pub nudge_speed_ratio_dynamic: f64,
    pub nudge_speed_ratio_static: f64,
    /// Lateral deviation from the guidance line that counts as nudging.
    pub nudge_deviation: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeConfig::default(),
            w_dl: 1.0,
            w_ddl: 10.0,
            w_dddl: 100.0,
            w_guidance: 0.5,
            qp_w_guidance: 0.5,
            w_obstacle: 50.0,
            collision_buffer: 0.3,
            nudge_range: 1.5,
            collision_cost: 1e8,
            off_road_cost: 1e4,
            obstacle_sample_step: 1.0,
            qp_segments: 5,
            qp_constraint_step: 2.0,
            guidance_step: 1.0,
            kappa_max: 0.2,
            dkappa_max: 0.1,
            nudge_speed_ratio_dynamic: 0.5,
            nudge_speed_ratio_static: 0.8,
            nudge_deviation: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpeedConfig {
    pub horizon: f64,
    pub dp_dt: f64,
    pub dp_ds: f64,
    /// Sub-sampling step for region checks between DP layers.
    pub check_dt: f64,
    pub v_ref: f64,
    pub v_upper: f64,
    pub acc_max: f64,
    pub dec_max: f64,
    pub jerk_max: f64,
    pub w_speed_below: f64,
    pub w_speed_above: f64,
    pub w_acc: f64,
    pub w_jerk: f64,
    pub w_obstacle: f64,
    pub obstacle_range: f64,
    pub follow_time: f64,
    pub follow_min: f64,
    pub qp_segments: usize,
    pub qp_dt: f64,
    pub qp_w_ref: f64,
    pub qp_w_acc: f64,
    pub qp_w_jerk: f64,
}

impl Default for SpeedConfig {
    fn default() -> Self {
        Self {
            horizon: 8.0,
            dp_dt: 0.5,
            dp_ds: 0.25,
            check_dt: 0.1,
            v_ref: 10.0,
            v_upper: 15.0,
            acc_max: 2.0,
            dec_max: 4.0,
            jerk_max: 2.0,
            w_speed_below: 1.0,
            w_speed_above: 4.0,
            w_acc: 1.0,
            w_jerk: 1.0,
            w_obstacle: 1.0,
            obstacle_range: 10.0,
            follow_time: 0.5,
            follow_min: 3.0,
            qp_segments: 5,
            qp_dt: 0.1,
            qp_w_ref: 1.0,
            qp_w_acc: 1.0,
            qp_w_jerk: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeciderConfig {
    pub hysteresis: f64,
    pub lane_change_penalty: f64,
    pub w_progress: f64,
    pub w_smoothness: f64,
    pub w_proximity: f64,
    /// Output trajectory step, seconds.
    pub output_dt: f64,
}

impl Default for DeciderConfig {
    fn default() -> Self {
        Self {
            hysteresis: 0.8,
            lane_change_penalty: 0.2,
            w_progress: 1.0,
            w_smoothness: 0.01,
            w_proximity: 0.1,
            output_dt: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub projection: ProjectionConfig,
    pub path: PathConfig,
    pub speed: SpeedConfig,
    pub decider: DeciderConfig,
}

impl PlannerConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let config: PlannerConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |m: &str| Err(ConfigError::Invalid(m.to_string()));
        let p = &self.path;
        if !(p.collision_buffer < p.nudge_range) {
            return fail("path.collision_buffer must be below path.nudge_range");
        }
        if p.lattice.num_offsets == 0 || p.lattice.offset_spacing <= 0.0 {
            return fail("lattice needs at least one offset and a positive spacing");
        }
        if p.qp_segments == 0 || self.speed.qp_segments == 0 {
            return fail("qp_segments must be positive");
        }
        let s = &self.speed;
        for (name, v) in [
            ("speed.v_ref", s.v_ref),
            ("speed.acc_max", s.acc_max),
            ("speed.dec_max", s.dec_max),
            ("speed.jerk_max", s.jerk_max),
            ("speed.dp_dt", s.dp_dt),
            ("speed.dp_ds", s.dp_ds),
            ("speed.qp_dt", s.qp_dt),
            ("projection.dt", self.projection.dt),
            ("decider.output_dt", self.decider.output_dt),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be positive")));
            }
        }
        if s.v_ref > s.v_upper {
            return fail("speed.v_ref must not exceed speed.v_upper");
        }
        if !(self.decider.hysteresis > 0.0 && self.decider.hysteresis <= 1.0) {
            return fail("decider.hysteresis must be in (0, 1]");
        }
        Ok(())
    }
}
