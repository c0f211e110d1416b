//! Collision, traversability and slip risk.
//!
//! All three terms are read off the derived terrain layers at the cell under
//! a pose and summed into a per-pose risk `R_k`; a path's risk is the mean of
//! its per-waypoint values.

use crate::error::{Error, Result};
use crate::grid_map::{CellIndex, LayerId, MultiLayerGridMap, Path, Pose};
use crate::terrain::ROUGHNESS_CAP;
use crate::GRAVITY;

/// Physical parameters of a wheeled ground robot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotModel {
    /// kg
    pub mass: f64,
    /// Wheel thickness (m).
    pub wheel_thickness: f64,
    /// Length of the wheel patch touching the ground (m).
    pub wheel_contact_length: f64,
    pub wheel_count: u32,
    /// Steepest traversable inclination (rad).
    pub max_slope: f64,
    /// m/s
    pub max_speed: f64,
    /// Largest robot dimension (m); the collision inflation distance.
    pub footprint_dim: f64,
    /// Assumed ground friction coefficient.
    pub friction: f64,
    pub gravity: f64,
    /// Multiplier on the rolling-resistance force. 1.0 uses `m·g·cos θ` as is.
    pub rolling_coefficient: f64,
    /// Battery capacity expressed as hours of driving on flat ground at
    /// `max_speed`.
    pub battery_hours: f64,
}

impl Default for RobotModel {
    fn default() -> Self {
        Self {
            mass: 50.0,
            wheel_thickness: 0.1,
            wheel_contact_length: 0.2,
            wheel_count: 4,
            max_slope: 30f64.to_radians(),
            max_speed: 1.0,
            footprint_dim: 0.8,
            friction: 0.6,
            gravity: GRAVITY,
            rolling_coefficient: 1.0,
            battery_hours: 10.0,
        }
    }
}

impl RobotModel {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("wheel_thickness", self.wheel_thickness),
            ("wheel_contact_length", self.wheel_contact_length),
            ("max_speed", self.max_speed),
            ("footprint_dim", self.footprint_dim),
            ("friction", self.friction),
            ("gravity", self.gravity),
            ("rolling_coefficient", self.rolling_coefficient),
            ("battery_hours", self.battery_hours),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.max_slope > 0.0 && self.max_slope < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!(
                "max_slope must lie in (0, π/2), got {}",
                self.max_slope
            )));
        }
        if ![2, 4, 6].contains(&self.wheel_count) {
            return Err(Error::InvalidParameter(format!(
                "wheel_count must be 2, 4 or 6, got {}",
                self.wheel_count
            )));
        }
        Ok(())
    }

    /// Total wheel-ground contact area (m²).
    pub fn contact_area(&self) -> f64 {
        self.wheel_thickness * self.wheel_contact_length * self.wheel_count as f64
    }

    /// Ground pressure (Pa) on an incline of `slope` radians.
    pub fn ground_pressure(&self, slope: f64) -> f64 {
        self.mass * self.gravity * slope.cos() / self.contact_area()
    }

    /// Unnormalized slip index `Pr·tan θ / μ`.
    pub fn slip_index(&self, slope: f64) -> f64 {
        self.ground_pressure(slope) * slope.tan() / self.friction
    }

    /// Power (W) drawn driving at `max_speed` on flat ground.
    pub fn flat_power(&self) -> f64 {
        self.max_speed * self.mass * self.gravity * self.rolling_coefficient
    }

    pub fn battery_capacity_joules(&self) -> f64 {
        self.battery_hours * 3600.0 * self.flat_power()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RiskBreakdown {
    pub collision: f64,
    pub traversability: f64,
    pub slip: f64,
    pub total: f64,
}

impl RiskBreakdown {
    pub fn new(collision: f64, traversability: f64, slip: f64) -> Self {
        Self {
            collision,
            traversability,
            slip,
            total: collision + traversability + slip,
        }
    }
}

/// `min(1, e^(X_dim - d_min))`; zero when no hazard exists (`d_min = ∞`).
pub fn collision_cost_from_distance(d_min: f64, footprint_dim: f64) -> f64 {
    (footprint_dim - d_min).exp().min(1.0)
}

/// Exact Euclidean distance (in cells) from every cell to the nearest seed
/// cell, `f64::INFINITY` where there is no seed. Separable two-pass lower
/// envelope of parabolas (Felzenszwalb & Huttenlocher).
pub fn distance_transform(seeds: &[bool], rows: usize, cols: usize) -> Vec<f64> {
    assert_eq!(seeds.len(), rows * cols);
    let mut sq: Vec<f64> = seeds.iter().map(|&s| if s { 0.0 } else { f64::INFINITY }).collect();
    let mut line = Vec::new();
    let mut out = Vec::new();
    for r in 0..rows {
        line.clear();
        line.extend_from_slice(&sq[r * cols..(r + 1) * cols]);
        squared_distance_1d(&line, &mut out);
        sq[r * cols..(r + 1) * cols].copy_from_slice(&out);
    }
    for c in 0..cols {
        line.clear();
        line.extend((0..rows).map(|r| sq[r * cols + c]));
        squared_distance_1d(&line, &mut out);
        for (r, v) in out.iter().enumerate() {
            sq[r * cols + c] = *v;
        }
    }
    sq.into_iter().map(f64::sqrt).collect()
}

fn squared_distance_1d(f: &[f64], out: &mut Vec<f64>) {
    let n = f.len();
    out.clear();
    out.resize(n, f64::INFINITY);
    // Parabola apexes (sample positions) and the boundaries between them.
    let mut apex: Vec<usize> = Vec::with_capacity(n);
    let mut bounds: Vec<f64> = Vec::with_capacity(n + 1);
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        loop {
            match apex.last() {
                None => {
                    apex.push(q);
                    bounds.clear();
                    bounds.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let (qf, pf) = (q as f64, p as f64);
                    let s = ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * (qf - pf));
                    if s <= *bounds.last().expect("one bound per apex") {
                        apex.pop();
                        bounds.pop();
                    } else {
                        apex.push(q);
                        bounds.push(s);
                        break;
                    }
                }
            }
        }
    }
    if apex.is_empty() {
        return;
    }
    let mut k = 0;
    for (q, slot) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while k + 1 < apex.len() && bounds[k + 1] < qf {
            k += 1;
        }
        let d = qf - apex[k] as f64;
        *slot = d * d + f[apex[k]];
    }
}

/// Fills the collision-cost layer from the traversability layer. Known
/// untraversable cells seed the distance transform and get cost 1; known
/// traversable cells get `min(1, e^(X_dim - d_min))`; unknown cells stay
/// undefined.
pub fn build_collision_cost_layer(map: &mut MultiLayerGridMap, robot: &RobotModel) -> Result<()> {
    let trav = map.layer(LayerId::Traversability)?.clone();
    let known = map.known_mask().to_vec();
    let seeds: Vec<bool> = (0..map.len()).map(|i| known[i] && trav.get(i) == Some(0.0)).collect();
    let distances = distance_transform(&seeds, map.rows(), map.cols());
    let res = map.resolution();
    let layer = map.ensure_layer(LayerId::CollisionCost);
    for i in 0..known.len() {
        if !known[i] {
            layer.clear(i);
        } else if seeds[i] {
            layer.set(i, 1.0);
        } else {
            layer.set(i, collision_cost_from_distance(distances[i] * res, robot.footprint_dim));
        }
    }
    Ok(())
}

fn pose_cell(map: &MultiLayerGridMap, pose: &Pose) -> Result<CellIndex> {
    map.world_to_cell(pose.xy())
}

fn required(map: &MultiLayerGridMap, id: LayerId, cell: CellIndex) -> Result<f64> {
    map.get_layer_value(id, cell)?.ok_or(Error::UnknownTerrain(cell))
}

pub fn collision_risk(map: &MultiLayerGridMap, pose: &Pose) -> Result<f64> {
    collision_risk_at(map, pose_cell(map, pose)?)
}

pub fn collision_risk_at(map: &MultiLayerGridMap, cell: CellIndex) -> Result<f64> {
    required(map, LayerId::CollisionCost, cell)
}

/// `θ/θ_max + r/r_max`, in `[0, 2]` for admissible terrain.
pub fn traversability_cost(map: &MultiLayerGridMap, pose: &Pose, robot: &RobotModel) -> Result<f64> {
    traversability_cost_at(map, pose_cell(map, pose)?, robot)
}

pub fn traversability_cost_at(map: &MultiLayerGridMap, cell: CellIndex, robot: &RobotModel) -> Result<f64> {
    let slope = required(map, LayerId::Slope, cell)?;
    let roughness = required(map, LayerId::Roughness, cell)?;
    Ok(slope / robot.max_slope + roughness / ROUGHNESS_CAP)
}

/// Slip index at the local slope normalized by its value at the robot's
/// slope limit, capped at 1.
pub fn slip_risk(map: &MultiLayerGridMap, pose: &Pose, robot: &RobotModel) -> Result<f64> {
    slip_risk_at(map, pose_cell(map, pose)?, robot)
}

pub fn slip_risk_at(map: &MultiLayerGridMap, cell: CellIndex, robot: &RobotModel) -> Result<f64> {
    Ok(slip_risk_for_slope(required(map, LayerId::Slope, cell)?, robot))
}

pub fn slip_risk_for_slope(slope: f64, robot: &RobotModel) -> f64 {
    (robot.slip_index(slope) / robot.slip_index(robot.max_slope)).min(1.0)
}

pub fn pose_risk(map: &MultiLayerGridMap, pose: &Pose, robot: &RobotModel) -> Result<RiskBreakdown> {
    pose_risk_at(map, pose_cell(map, pose)?, robot)
}

pub fn pose_risk_at(map: &MultiLayerGridMap, cell: CellIndex, robot: &RobotModel) -> Result<RiskBreakdown> {
    Ok(RiskBreakdown::new(
        collision_risk_at(map, cell)?,
        traversability_cost_at(map, cell, robot)?,
        slip_risk_at(map, cell, robot)?,
    ))
}

/// Mean per-pose risk over all waypoints of the path.
pub fn path_risk(map: &MultiLayerGridMap, path: &Path, robot: &RobotModel) -> Result<f64> {
    let mut sum = 0.0;
    for pose in path.waypoints() {
        sum += pose_risk(map, pose, robot)?.total;
    }
    Ok(sum / path.len() as f64)
}
