//! Lane-level motion planning with iterated path/speed optimization.
//!
//! Each planning cycle projects the world onto a lane's Frenet frame,
//! searches a coarse path with dynamic programming, refines it with a
//! spline quadratic program, then repeats the same pair of steps for speed
//! in the station-time plane. Multiple lane candidates are planned
//! independently and a decider picks one of them.

pub mod config;
pub mod geometry;
pub mod output;
pub mod path;
pub mod planner;
pub mod projection;
pub mod qp;
pub mod scenario;
pub mod sim;
pub mod speed;
pub mod spline;
pub mod trajectory;

pub use config::PlannerConfig;
pub use geometry::{CartesianState, FrenetState, ReferenceLine};
pub use planner::{plan_cycle, plan_lane, CycleResult, LaneCandidate, PlannerState, Trajectory, World};
pub use scenario::{load_scenario, Scenario};
pub use sim::{run_closed_loop, Simulation, Trace};
