//! Energy, distance, time and exploration gain of a candidate path.

use crate::grid_map::{distance3, MultiLayerGridMap, Path};
use crate::risk::RobotModel;

/// Raw criterion values of one candidate path.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PathCosts {
    /// J
    pub energy: f64,
    /// m
    pub distance: f64,
    /// s
    pub time: f64,
    /// m³ of currently unmapped volume the path would expose.
    pub gain: f64,
}

/// How segment lengths are accumulated into a path distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMetric {
    /// Physical path length, `Σ ‖x_k − x_{k+1}‖`.
    #[default]
    Euclidean,
    /// `Σ ‖x_k − x_{k+1}‖²`, kept for comparison runs.
    SquaredNorm,
}

/// Mechanical power (W) needed to climb (`slope ≥ 0`) or descend
/// (`slope < 0`) an incline at `max_speed`. Descending power never goes
/// below zero: there is no regenerative braking.
pub fn segment_power(robot: &RobotModel, slope: f64) -> f64 {
    let weight = robot.mass * robot.gravity;
    let rolling = robot.rolling_coefficient * weight * slope.abs().cos();
    let grade = weight * slope.abs().sin();
    if slope >= 0.0 {
        robot.max_speed * (rolling + grade)
    } else {
        (robot.max_speed * (rolling - grade)).max(0.0)
    }
}

/// Signed inclination of the segment `a → b` from its elevation change.
pub fn segment_slope(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let horizontal = (b[0] - a[0]).hypot(b[1] - a[1]);
    (b[2] - a[2]).atan2(horizontal)
}

/// Energy (J) to drive the path at `max_speed`, integrating the per-segment
/// power over each segment's travel time.
pub fn path_energy(path: &Path, robot: &RobotModel) -> f64 {
    path.segments()
        .filter_map(|(a, b)| {
            let length = distance3(&a.position, &b.position);
            (length > 0.0).then(|| segment_power(robot, segment_slope(&a.position, &b.position)) * length / robot.max_speed)
        })
        .sum()
}

pub fn path_distance(path: &Path) -> f64 {
    path_distance_with(path, DistanceMetric::Euclidean)
}

pub fn path_distance_with(path: &Path, metric: DistanceMetric) -> f64 {
    path.segments()
        .map(|(a, b)| {
            let d = distance3(&a.position, &b.position);
            match metric {
                DistanceMetric::Euclidean => d,
                DistanceMetric::SquaredNorm => d * d,
            }
        })
        .sum()
}

pub fn path_time(path: &Path, robot: &RobotModel) -> f64 {
    path_distance(path) / robot.max_speed
}

/// Footprint used to count unmapped volume along a path: an un-occluded
/// disk of `range` meters around each waypoint, and a nominal column height
/// turning cell areas into volumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainModel {
    pub range: f64,
    pub column_height: f64,
}

impl Default for GainModel {
    fn default() -> Self {
        Self {
            range: 10.0,
            column_height: 2.0,
        }
    }
}

/// Volume (m³) of distinct unknown cells whose centers lie within sensor
/// range of at least one waypoint. Waypoints off the grid contribute nothing.
pub fn estimate_gain(map: &MultiLayerGridMap, sensor: &GainModel, path: &Path) -> f64 {
    let offsets = map.disk_offsets(sensor.range);
    let mut seen = vec![false; map.len()];
    let mut count = 0usize;
    let mut last_cell = None;
    for pose in path.waypoints() {
        let Ok(center) = map.world_to_cell(pose.xy()) else {
            continue;
        };
        if last_cell == Some(center) {
            continue;
        }
        last_cell = Some(center);
        for &(dr, dc) in &offsets {
            let Some(cell) = map.offset_cell(center, dr, dc) else {
                continue;
            };
            let i = map.offset(cell);
            if !seen[i] && !map.known_mask()[i] {
                seen[i] = true;
                count += 1;
            }
        }
    }
    count as f64 * map.cell_area() * sensor.column_height
}

/// Evaluates energy, distance, time and gain in one call.
pub fn evaluate_path(map: &MultiLayerGridMap, path: &Path, robot: &RobotModel, sensor: &GainModel) -> PathCosts {
    PathCosts {
        energy: path_energy(path, robot),
        distance: path_distance(path),
        time: path_time(path, robot),
        gain: estimate_gain(map, sensor, path),
    }
}
