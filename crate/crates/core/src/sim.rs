//! Closed-loop simulation over a scenario.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::PlannerConfig;
use crate::geometry::CartesianState;
use crate::planner::{plan_cycle, relabel_occupied, CycleResult, LaneCandidate, PlannerState, World};
use crate::projection::{Obstacle, ObstacleKind, ObstaclePose};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleSnapshot {
    pub id: String,
    pub corners: [(f64, f64); 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub cycle: usize,
    pub ego: CartesianState,
    pub obstacles: Vec<ObstacleSnapshot>,
    pub result: CycleResult,
}

/// Stage timings of one cycle, microseconds, summed over lanes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleTimings {
    pub cycle: usize,
    /// Keys `e1`, `m1`, `e2`, `m2` and `decider`.
    pub stages: BTreeMap<String, u64>,
    pub per_lane: BTreeMap<String, BTreeMap<String, u64>>,
    pub total_us: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaneOutline {
    pub lane_id: String,
    pub polyline: Vec<(f64, f64)>,
    pub width: f64,
}

/// Everything a run produced. Timings are kept apart from the records so
/// that the records are reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub lanes: Vec<LaneOutline>,
    pub cycle_period: f64,
    pub records: Vec<TraceRecord>,
    #[serde(skip)]
    pub timings: Vec<CycleTimings>,
}

impl Trace {
    pub fn fallback_count(&self) -> usize {
        self.records.iter().filter(|r| r.result.fallback).count()
    }
}

/// Prediction re-based so that `now` becomes relative time zero.
pub fn rebase_obstacle(ob: &Obstacle, now: f64) -> Obstacle {
    if ob.kind == ObstacleKind::Static {
        return ob.clone();
    }
    let first = ob.pose_at(now);
    let mut trajectory = vec![ObstaclePose { t: 0.0, ..first }];
    trajectory.extend(
        ob.trajectory
            .iter()
            .filter(|p| p.t > now + 1e-9)
            .map(|p| ObstaclePose { t: p.t - now, ..*p }),
    );
    Obstacle { trajectory, ..ob.clone() }
}

fn stage_map(e1: u64, m1: u64, e2: u64, m2: u64) -> BTreeMap<String, u64> {
    [("e1", e1), ("m1", m1), ("e2", e2), ("m2", m2)].into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Closed loop advanced one planning cycle at a time.
pub struct Simulation {
    scenario: Scenario,
    config: PlannerConfig,
    candidates: Vec<LaneCandidate>,
    state: PlannerState,
    ego: CartesianState,
    cycle: usize,
}

impl Simulation {
    pub fn new(scenario: Scenario, config: PlannerConfig) -> Self {
        let candidates = scenario.candidates().to_vec();
        let ego = scenario.ego.state;
        Self { scenario, config, candidates, state: PlannerState::default(), ego, cycle: 0 }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    /// Index of the next cycle to run.
    pub fn cycle(&self) -> usize {
        self.cycle
    }

    pub fn ego(&self) -> &CartesianState {
        &self.ego
    }

    /// Plans one cycle and hands the ego over to the chosen trajectory one
    /// cycle period later.
    pub fn step(&mut self) -> (TraceRecord, CycleTimings) {
        let cycle = self.cycle;
        let period = self.scenario.sim.cycle_period;
        let now = cycle as f64 * period;
        let obstacles: Vec<Obstacle> = self.scenario.obstacles.iter().map(|o| rebase_obstacle(o, now)).collect();
        let world = World { time: now, ego: self.ego, footprint: self.scenario.ego.footprint, obstacles };
        if cycle > 0 {
            relabel_occupied(&mut self.candidates, &self.ego);
        }
        let clock = Instant::now();
        let result = plan_cycle(&self.candidates, &world, &mut self.state, &self.config);
        let total_us = clock.elapsed().as_micros() as u64;
        if result.fallback {
            log::warn!("cycle {cycle}: all lanes failed, comfort stop issued");
        }

        let mut per_lane = BTreeMap::new();
        let (mut e1, mut m1, mut e2, mut m2) = (0, 0, 0, 0);
        for lane in &result.lanes {
            if let Some(plan) = &lane.plan {
                let t = plan.timings;
                e1 += t.e1_us;
                m1 += t.m1_us;
                e2 += t.e2_us;
                m2 += t.m2_us;
                per_lane.insert(lane.lane_id.clone(), stage_map(t.e1_us, t.m1_us, t.e2_us, t.m2_us));
            }
        }
        let mut stages = stage_map(e1, m1, e2, m2);
        stages.insert("decider".into(), result.decider_us);
        let timings = CycleTimings { cycle, stages, per_lane, total_us };

        let snapshots = world
            .obstacles
            .iter()
            .map(|o| ObstacleSnapshot { id: o.id.clone(), corners: o.corners(&o.pose_at(0.0)) })
            .collect();
        let next = result.trajectory.sample(period).map(|p| p.state());
        let record = TraceRecord { cycle, ego: self.ego, obstacles: snapshots, result };
        if let Some(next) = next {
            self.ego = next;
        }
        self.cycle += 1;
        (record, timings)
    }
}

/// Runs `cycles` planning cycles (the scenario's count when `None`).
pub fn run_closed_loop(scenario: &Scenario, config: &PlannerConfig, cycles: Option<usize>) -> Trace {
    let cycles = cycles.unwrap_or(scenario.sim.cycles);
    let mut sim = Simulation::new(scenario.clone(), config.clone());
    let mut records = Vec::with_capacity(cycles);
    let mut timings = Vec::with_capacity(cycles);
    for _ in 0..cycles {
        let (record, timing) = sim.step();
        records.push(record);
        timings.push(timing);
    }
    let lanes = scenario
        .lanes
        .iter()
        .map(|l| LaneOutline { lane_id: l.lane_id.clone(), polyline: l.polyline.clone(), width: l.width })
        .collect();
    Trace { lanes, cycle_period: scenario.sim.cycle_period, records, timings }
}
