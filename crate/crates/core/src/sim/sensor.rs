//! Range-limited 2.5D line-of-sight sensing against the truth heightmap.

use crate::error::Result;
use crate::grid_map::{CellIndex, CellRegion, MultiLayerGridMap};
use crate::risk::{build_collision_cost_layer, RobotModel};
use crate::terrain::{fuse_elevation, influence_margin, update_derived_layers, ElevationObservation, TerrainParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorModel {
    /// m
    pub range: f64,
    /// Height (m) of the sensor above the ground under the robot.
    pub height: f64,
    /// Variance (m²) attached to every height observation.
    pub variance: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            range: 10.0,
            height: 1.0,
            variance: 0.01,
        }
    }
}

/// Sensor bound to one truth heightmap.
#[derive(Debug, Clone)]
pub struct RangeSensor {
    model: SensorModel,
    heights: Vec<f64>,
    rows: usize,
    cols: usize,
    offsets: Vec<(isize, isize)>,
}

impl RangeSensor {
    /// `truth` must be fully known.
    pub fn new(model: SensorModel, truth: &MultiLayerGridMap) -> Self {
        let heights = truth
            .cells()
            .map(|c| truth.elevation(c).expect("truth maps are fully known"))
            .collect();
        Self {
            offsets: truth.disk_offsets(model.range),
            model,
            heights,
            rows: truth.rows(),
            cols: truth.cols(),
        }
    }

    pub fn model(&self) -> &SensorModel {
        &self.model
    }

    fn height(&self, cell: CellIndex) -> f64 {
        self.heights[cell.row * self.cols + cell.col]
    }

    /// Cells within range whose top surface is visible from the sensor
    /// mounted above `origin`. The sight line runs from the sensor to the
    /// center of the target's top; a cell it crosses strictly between the
    /// two hides the target when its top rises above the lower end of the
    /// line's span over that cell. Cells the line only touches at a corner
    /// do not block.
    pub fn visible_cells(&self, origin: CellIndex) -> Vec<CellIndex> {
        let z0 = self.height(origin) + self.model.height;
        let mut visible = Vec::new();
        for &(dr, dc) in &self.offsets {
            let (row, col) = (origin.row as isize + dr, origin.col as isize + dc);
            if row < 0 || col < 0 || row as usize >= self.rows || col as usize >= self.cols {
                continue;
            }
            let target = CellIndex::new(row as usize, col as usize);
            if self.line_of_sight(origin, z0, target) {
                visible.push(target);
            }
        }
        visible
    }

    fn line_of_sight(&self, origin: CellIndex, z0: f64, target: CellIndex) -> bool {
        let z1 = self.height(target);
        let z = |t: f64| z0 + t * (z1 - z0);
        // Grid traversal in cell units from the origin center.
        let (dx, dy) = (target.col as f64 - origin.col as f64, target.row as f64 - origin.row as f64);
        let axis = |d: f64| -> (isize, f64, f64) {
            if d == 0.0 {
                (0, f64::INFINITY, f64::INFINITY)
            } else {
                (d.signum() as isize, 0.5 / d.abs(), 1.0 / d.abs())
            }
        };
        let (step_c, mut next_c, delta_c) = axis(dx);
        let (step_r, mut next_r, delta_r) = axis(dy);
        let (mut row, mut col) = (origin.row as isize, origin.col as isize);
        let mut t_enter = 0.0;
        loop {
            let cell = CellIndex::new(row as usize, col as usize);
            if cell == target {
                return true;
            }
            let t_exit = next_c.min(next_r).min(1.0);
            if cell != origin && self.height(cell) > z(t_enter).min(z(t_exit)) {
                return false;
            }
            if next_c < next_r {
                col += step_c;
                t_enter = next_c;
                next_c += delta_c;
            } else if next_r < next_c {
                row += step_r;
                t_enter = next_r;
                next_r += delta_r;
            } else {
                col += step_c;
                row += step_r;
                t_enter = next_c;
                next_c += delta_c;
                next_r += delta_r;
            }
        }
    }

    /// Height observations of every visible cell.
    pub fn observations(&self, origin: CellIndex) -> Vec<ElevationObservation> {
        self.visible_cells(origin)
            .into_iter()
            .map(|cell| ElevationObservation {
                cell,
                height: self.height(cell),
                variance: self.model.variance,
            })
            .collect()
    }

    /// Fuses one scan into `map` and returns the bounding region of the
    /// observed cells, if any.
    pub fn scan(&self, map: &mut MultiLayerGridMap, origin: CellIndex, terrain: &TerrainParams) -> Result<Option<CellRegion>> {
        let mut bbox: Option<CellRegion> = None;
        for obs in self.observations(origin) {
            fuse_elevation(map, obs, terrain)?;
            let c = obs.cell;
            bbox = Some(match bbox {
                None => CellRegion {
                    row_start: c.row,
                    row_end: c.row + 1,
                    col_start: c.col,
                    col_end: c.col + 1,
                },
                Some(b) => CellRegion {
                    row_start: b.row_start.min(c.row),
                    row_end: b.row_end.max(c.row + 1),
                    col_start: b.col_start.min(c.col),
                    col_end: b.col_end.max(c.col + 1),
                },
            });
        }
        Ok(bbox)
    }

    /// Scans from `origin`, recomputes the derived terrain layers around the
    /// observed cells and rebuilds the collision-cost layer.
    pub fn observe(
        &self,
        map: &mut MultiLayerGridMap,
        origin: CellIndex,
        robot: &RobotModel,
        terrain: &TerrainParams,
    ) -> Result<Option<CellRegion>> {
        let bbox = self.scan(map, origin, terrain)?;
        if let Some(b) = bbox {
            let region = b.grow(influence_margin(map, terrain) + 1, map.rows(), map.cols());
            update_derived_layers(map, robot, terrain, region);
        }
        build_collision_cost_layer(map, robot)?;
        Ok(bbox)
    }
}
