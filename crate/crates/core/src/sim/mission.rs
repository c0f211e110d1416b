//! The per-second exploration loop.
//!
//! Every `planning_period` seconds the robot scans, updates the derived
//! terrain layers and replans. While the goal picked last is still a
//! reachable frontier cell the robot keeps heading for it; otherwise it
//! extracts frontier goals, plans one candidate path per goal and picks one.
//! Between replans it drives the current path at `max_speed`. Entering a
//! cell that is untraversable in the truth world is a lethal action: the
//! robot is immobilized for the rest of the mission.

use std::fs;
use std::io::{Read, Write};
use std::path::Path as FsPath;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::costs::{segment_power, segment_slope};
use crate::error::{Error, Result};
use crate::grid_map::{CellIndex, MultiLayerGridMap};
use crate::risk::{pose_risk_at, RiskBreakdown, RobotModel};
use crate::sim::frontier::{detect_frontiers, is_frontier, FrontierGoal};
use crate::sim::planner::{plan_candidates, SearchSpace};
use crate::sim::sensor::RangeSensor;
use crate::sim::world::TruthWorld;
use crate::sim::{Mode, SimConfig};
use crate::terrain::TerrainParams;
use crate::vikor::{baseline_select, dynamic_weights, select_path, MissionState};

/// One row of the per-second mission log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionRecord {
    pub t_s: u32,
    pub x: f64,
    pub y: f64,
    pub risk_c: f64,
    pub risk_t: f64,
    pub risk_s: f64,
    pub risk_total: f64,
    pub coverage_m3: f64,
    pub battery_s: f64,
    /// Wall-clock time (ms) to build the planning cost map, pick a goal and
    /// plan its path. Logged on the first second after each replan when
    /// timing is enabled.
    pub plan_ms: Option<f64>,
    /// 1 from the second of a lethal action onward.
    pub lethal: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MissionLog {
    pub mode: Mode,
    pub seed: u64,
    pub records: Vec<MissionRecord>,
    /// Second in which the lethal action happened.
    pub lethal_at: Option<u32>,
}

impl MissionLog {
    pub fn final_coverage(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.coverage_m3)
    }

    pub fn max_risk(&self) -> f64 {
        self.records.iter().map(|r| r.risk_total).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        for record in &self.records {
            writer.serialize(record)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &FsPath) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::from(e).with_path(path))?;
        self.write_csv(file).map_err(|e| e.with_path(path))
    }

    pub fn read_records<R: Read>(input: R) -> Result<Vec<MissionRecord>> {
        let mut reader = csv::Reader::from_reader(input);
        let records = reader.deserialize().collect::<std::result::Result<Vec<MissionRecord>, _>>()?;
        Ok(records)
    }
}

/// Runs one mission in `world`. With `timing` off no wall-clock value is
/// logged, so the log depends only on the inputs.
pub fn run_mission(
    world: &TruthWorld,
    robot: &RobotModel,
    terrain: &TerrainParams,
    config: &SimConfig,
    mode: Mode,
    timing: bool,
) -> Result<MissionLog> {
    robot.validate()?;
    terrain.validate(world.heights.resolution())?;
    config.validate()?;
    Mission::new(world, robot, terrain, config, mode)?.run(timing)
}

struct Mission<'a> {
    robot: &'a RobotModel,
    terrain: &'a TerrainParams,
    config: &'a SimConfig,
    mode: Mode,
    seed: u64,
    sensor: RangeSensor,
    truth: MultiLayerGridMap,
    truth_heights: Vec<f64>,
    truth_traversable: Vec<bool>,
    known: MultiLayerGridMap,
    settle_offsets: Vec<(isize, isize)>,
    cell: CellIndex,
    energy: f64,
    travelled: f64,
    lethal_at: Option<u32>,
    blacklist: Vec<CellIndex>,
    committed: Option<CellIndex>,
}

impl<'a> Mission<'a> {
    fn new(
        world: &TruthWorld,
        robot: &'a RobotModel,
        terrain: &'a TerrainParams,
        config: &'a SimConfig,
        mode: Mode,
    ) -> Result<Self> {
        let truth = world.analyzed(robot, terrain)?;
        let truth_heights = truth.cells().map(|c| truth.elevation(c).unwrap_or(0.0)).collect();
        let truth_traversable = truth
            .cells()
            .map(|c| crate::terrain::is_traversable(&truth, c))
            .collect();
        let known = MultiLayerGridMap::new(truth.rows(), truth.cols(), truth.resolution(), truth.origin())?;
        Ok(Self {
            settle_offsets: known.disk_offsets(terrain.smoothing_radius),
            sensor: RangeSensor::new(config.sensor, &world.heights),
            robot,
            terrain,
            config,
            mode,
            seed: world.seed,
            truth,
            truth_heights,
            truth_traversable,
            known,
            cell: world.start,
            energy: robot.battery_capacity_joules(),
            travelled: 0.0,
            lethal_at: None,
            blacklist: Vec::new(),
            committed: None,
        })
    }

    fn run(mut self, timing: bool) -> Result<MissionLog> {
        let duration = self.config.duration;
        let mut records = Vec::with_capacity(duration as usize);
        let mut t = 0u32;
        while t < duration {
            let active = self.lethal_at.is_none() && self.energy > 0.0;
            let mut plan_ms = None;
            let mut route: Vec<CellIndex> = Vec::new();
            let mut goal = None;
            if active {
                self.update_map()?;
                let started = Instant::now();
                let space = match self.mode {
                    Mode::RiskAware => SearchSpace::risk_aware(&self.known, self.robot),
                    Mode::Baseline => SearchSpace::geometric(
                        &self.known,
                        self.config.baseline_step_limit,
                        self.config.baseline_clearance,
                    ),
                };
                if let Some((g, cells)) = self.plan(&space, t)? {
                    goal = Some(g);
                    route = cells;
                }
                if timing {
                    plan_ms = Some(started.elapsed().as_secs_f64() * 1000.0);
                }
            }

            let mut next = 1;
            let mut budget = 0.0;
            let mut moved = false;
            for _ in 0..self.config.planning_period {
                if t >= duration {
                    break;
                }
                t += 1;
                if self.lethal_at.is_none() && self.energy > 0.0 && next < route.len() {
                    budget += self.robot.max_speed;
                    while next < route.len() {
                        let target = route[next];
                        if !self.may_enter(target) {
                            route.truncate(next);
                            break;
                        }
                        let length = self.step_length(self.cell, target);
                        if length > budget + 1e-9 {
                            break;
                        }
                        self.drive(target, length);
                        budget -= length;
                        next += 1;
                        moved = true;
                        if !self.truth_traversable[self.truth.offset(target)] {
                            self.lethal_at = Some(t);
                            break;
                        }
                    }
                    if next >= route.len() {
                        budget = 0.0;
                    }
                }
                records.push(self.record(t, plan_ms.take()));
            }
            if let (Some(g), false) = (goal, moved) {
                self.blacklist.push(g);
                self.committed = None;
            }
        }
        Ok(MissionLog {
            mode: self.mode,
            seed: self.seed,
            records,
            lethal_at: self.lethal_at,
        })
    }

    fn update_map(&mut self) -> Result<()> {
        self.sensor.observe(&mut self.known, self.cell, self.robot, self.terrain)?;
        Ok(())
    }

    fn plan(&mut self, space: &SearchSpace, t: u32) -> Result<Option<(CellIndex, Vec<CellIndex>)>> {
        if let Some(goal) = self.committed.take() {
            let target = [FrontierGoal {
                cell: goal,
                cluster_size: 1,
            }];
            if is_frontier(&self.known, &space.passable, goal) {
                if let Ok(mut planned) =
                    plan_candidates(&self.known, space, self.cell, &target, self.robot, &self.config.gain_model())
                {
                    self.committed = Some(goal);
                    return Ok(Some((goal, planned.swap_remove(0).cells)));
                }
            }
        }
        let goals = detect_frontiers(
            &self.known,
            &space.passable,
            self.config.frontier_cluster_radius,
            self.config.max_goals,
            &self.blacklist,
        );
        if goals.is_empty() {
            return Ok(None);
        }
        let planned = match plan_candidates(&self.known, space, self.cell, &goals, self.robot, &self.config.gain_model()) {
            Ok(p) => p,
            Err(Error::NoFeasiblePath) => return Ok(None),
            Err(e) => return Err(e),
        };
        let candidates: Vec<_> = planned.iter().map(|p| p.candidate.clone()).collect();
        let index = match self.mode {
            Mode::RiskAware => {
                let state = MissionState {
                    elapsed: t as f64,
                    mission_duration: self.config.duration as f64,
                    distance_traversed: self.travelled,
                    max_distance: self.config.max_distance,
                    battery_remaining: self.battery_seconds(),
                };
                select_path(&candidates, &dynamic_weights(&state), self.config.majority)?.index
            }
            Mode::Baseline => baseline_select(&candidates)?,
        };
        let chosen = &planned[index];
        self.committed = Some(chosen.goal);
        Ok(Some((chosen.goal, chosen.cells.clone())))
    }

    /// The risk-aware executor only enters cells whose whole smoothing
    /// neighborhood has been observed, so their classification is final.
    fn may_enter(&self, cell: CellIndex) -> bool {
        if !self.known.is_known(cell) {
            return false;
        }
        match self.mode {
            Mode::Baseline => true,
            Mode::RiskAware => self.settle_offsets.iter().all(|&(dr, dc)| {
                self.known
                    .offset_cell(cell, dr, dc)
                    .is_none_or(|n| self.known.is_known(n))
            }),
        }
    }

    fn point(&self, cell: CellIndex) -> [f64; 3] {
        let [x, y] = self.truth.cell_center(cell);
        [x, y, self.truth_heights[self.truth.offset(cell)]]
    }

    fn step_length(&self, from: CellIndex, to: CellIndex) -> f64 {
        crate::grid_map::distance3(&self.point(from), &self.point(to))
    }

    fn drive(&mut self, target: CellIndex, length: f64) {
        let slope = segment_slope(&self.point(self.cell), &self.point(target));
        let power = segment_power(self.robot, slope);
        self.energy = (self.energy - power * length / self.robot.max_speed).max(0.0);
        self.travelled += length;
        self.cell = target;
    }

    fn battery_seconds(&self) -> f64 {
        self.energy / self.robot.flat_power()
    }

    fn perceived_risk(&self) -> RiskBreakdown {
        pose_risk_at(&self.known, self.cell, self.robot)
            .or_else(|_| pose_risk_at(&self.truth, self.cell, self.robot))
            .unwrap_or(RiskBreakdown::new(1.0, 2.0, 1.0))
    }

    fn record(&self, t: u32, plan_ms: Option<f64>) -> MissionRecord {
        let [x, y] = self.known.cell_center(self.cell);
        let risk = self.perceived_risk();
        MissionRecord {
            t_s: t,
            x,
            y,
            risk_c: risk.collision,
            risk_t: risk.traversability,
            risk_s: risk.slip,
            risk_total: risk.total,
            coverage_m3: self.known.known_count() as f64 * self.known.cell_area() * self.config.column_height,
            battery_s: self.battery_seconds(),
            plan_ms,
            lethal: u8::from(self.lethal_at.is_some()),
        }
    }
}
