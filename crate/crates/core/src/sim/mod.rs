//! Closed-loop exploration simulator: procedural truth worlds, sensing,
//! frontier goals, candidate planning and the per-second mission loop.

pub mod frontier;
pub mod mission;
pub mod planner;
pub mod sensor;
pub mod world;

use std::fmt;
use std::str::FromStr;

use crate::costs::GainModel;
use crate::error::{Error, Result};

pub use frontier::{detect_frontiers, FrontierGoal};
pub use mission::{run_mission, MissionLog, MissionRecord};
pub use planner::{plan_candidates, PlannedPath, SearchSpace};
pub use sensor::{RangeSensor, SensorModel};
pub use world::{generate_world, generate_world_for, TruthWorld, WorldParams};

/// Path selection policy of a mission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    /// Risk-weighted planning on classified terrain, VIKOR selection.
    RiskAware,
    /// Geometric obstacle avoidance only, gain-greedy selection.
    Baseline,
}

impl Mode {
    pub const ALL: [Mode; 2] = [Mode::RiskAware, Mode::Baseline];

    pub fn name(self) -> &'static str {
        match self {
            Mode::RiskAware => "risk_aware",
            Mode::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown mode `{s}` (expected risk_aware or baseline)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// s
    pub duration: u32,
    /// Seconds between replanning.
    pub planning_period: u32,
    pub sensor: SensorModel,
    /// Nominal height (m) of a mapped column, for gain and coverage volumes.
    pub column_height: f64,
    pub max_goals: usize,
    /// m
    pub frontier_cluster_radius: f64,
    /// VIKOR weight of group utility against individual regret.
    pub majority: f64,
    /// Distance budget (m) behind the distance weight.
    pub max_distance: f64,
    /// Height step (m) the baseline treats as an obstacle.
    pub baseline_step_limit: f64,
    /// Distance (m) the baseline keeps from obstacles.
    pub baseline_clearance: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            duration: 600,
            planning_period: 2,
            sensor: SensorModel::default(),
            column_height: 2.0,
            max_goals: 6,
            frontier_cluster_radius: 3.0,
            majority: 0.5,
            max_distance: 1000.0,
            baseline_step_limit: 0.5,
            baseline_clearance: 1.0,
        }
    }
}

impl SimConfig {
    pub fn gain_model(&self) -> GainModel {
        GainModel {
            range: self.sensor.range,
            column_height: self.column_height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        if self.duration == 0 || self.planning_period == 0 {
            return bad("duration and planning_period must be positive");
        }
        if !(self.sensor.range > 0.0) || !(self.sensor.variance > 0.0) || !(self.sensor.height >= 0.0) {
            return bad("sensor range and variance must be positive, height non-negative");
        }
        if !(self.column_height > 0.0) || !(self.frontier_cluster_radius > 0.0) || !(self.max_distance > 0.0) {
            return bad("column_height, frontier_cluster_radius and max_distance must be positive");
        }
        if self.max_goals == 0 {
            return bad("max_goals must be positive");
        }
        if !(0.0..=1.0).contains(&self.majority) {
            return bad("majority must lie in [0, 1]");
        }
        if !(self.baseline_step_limit > 0.0) || !(self.baseline_clearance >= 0.0) {
            return bad("baseline_step_limit must be positive, baseline_clearance non-negative");
        }
        Ok(())
    }
}
