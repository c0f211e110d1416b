//! Elevation fusion and the derived terrain layers.
//!
//! Every derived layer is a pure function of the elevation layer and the known
//! mask, so any rectangular region can be recomputed in isolation as long as
//! the region covers all cells whose neighborhoods changed.

use crate::error::Result;
use crate::grid_map::{CellIndex, CellRegion, LayerId, MultiLayerGridMap};
use crate::risk::RobotModel;

/// Roughness values are capped at this height difference (m).
pub const ROUGHNESS_CAP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElevationObservation {
    pub cell: CellIndex,
    pub height: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrainParams {
    /// Radius (m) of the disk averaged by the smoothing filter.
    pub smoothing_radius: f64,
    pub roughness_cap: f64,
    /// Half-width of the elevation confidence band in standard deviations.
    pub confidence_k: f64,
    /// Cells at or above this roughness are untraversable.
    pub roughness_limit: f64,
}

impl TerrainParams {
    pub fn for_resolution(resolution: f64) -> Self {
        Self {
            smoothing_radius: 3.0 * resolution,
            roughness_cap: ROUGHNESS_CAP,
            confidence_k: 2.0,
            roughness_limit: 0.09,
        }
    }

    pub fn validate(&self, resolution: f64) -> Result<()> {
        use crate::error::Error::InvalidParameter;
        if self.smoothing_radius < resolution {
            return Err(InvalidParameter(format!(
                "smoothing_radius {} is below the grid resolution {resolution}",
                self.smoothing_radius
            )));
        }
        if !(self.roughness_cap > 0.0) {
            return Err(InvalidParameter("roughness_cap must be positive".into()));
        }
        if !(self.confidence_k >= 0.0) {
            return Err(InvalidParameter("confidence_k must be non-negative".into()));
        }
        Ok(())
    }
}

impl Default for TerrainParams {
    fn default() -> Self {
        Self::for_resolution(0.5)
    }
}

/// Fused height and variance of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellEstimate {
    pub height: f64,
    pub variance: f64,
}

/// Folds one observation into the cell estimate by inverse-variance
/// weighting. The first observation of a cell is adopted as is. A prior with
/// zero variance is exact and absorbs any further observation unchanged.
pub fn fuse_elevation(map: &mut MultiLayerGridMap, obs: ElevationObservation, params: &TerrainParams) -> Result<CellEstimate> {
    debug_assert!(obs.variance > 0.0, "observation variance must be positive");
    let cell = obs.cell;
    let prior = match (map.is_known(cell), map.get_layer_value(LayerId::Elevation, cell)?) {
        (true, Some(h)) => Some(CellEstimate {
            height: h,
            variance: map.get_layer_value(LayerId::Variance, cell)?.unwrap_or(0.0),
        }),
        _ => None,
    };
    let estimate = match prior {
        None => CellEstimate {
            height: obs.height,
            variance: obs.variance,
        },
        Some(p) if p.variance == 0.0 => p,
        Some(p) => {
            // Kalman form: exact when the observation equals the prior.
            let gain = p.variance / (p.variance + obs.variance);
            CellEstimate {
                height: p.height + gain * (obs.height - p.height),
                variance: p.variance * obs.variance / (p.variance + obs.variance),
            }
        }
    };
    let half_width = params.confidence_k * estimate.variance.sqrt();
    map.set_known(cell, true);
    map.set_layer_value(LayerId::Elevation, cell, estimate.height)?;
    map.set_layer_value(LayerId::Variance, cell, estimate.variance)?;
    map.set_layer_value(LayerId::HeightMin, cell, estimate.height - half_width)?;
    map.set_layer_value(LayerId::HeightMax, cell, estimate.height + half_width)?;
    Ok(estimate)
}

pub fn smooth_elevation(map: &mut MultiLayerGridMap, params: &TerrainParams) {
    let region = map.full_region();
    smooth_elevation_in(map, params, region);
}

/// Mean of the known elevations within the smoothing radius, for every known
/// cell of `region`.
pub fn smooth_elevation_in(map: &mut MultiLayerGridMap, params: &TerrainParams, region: CellRegion) {
    let offsets = map.disk_offsets(params.smoothing_radius);
    let mut updates = Vec::with_capacity((region.row_end - region.row_start) * (region.col_end - region.col_start));
    for cell in region.cells() {
        if map.elevation(cell).is_none() {
            updates.push((cell, None));
            continue;
        }
        let (sum, n) = offsets
            .iter()
            .filter_map(|&(dr, dc)| map.offset_cell(cell, dr, dc))
            .filter_map(|c| map.elevation(c))
            .fold((0.0, 0usize), |(s, n), h| (s + h, n + 1));
        updates.push((cell, Some(sum / n as f64)));
    }
    write_layer(map, LayerId::Smoothed, updates);
}

pub fn compute_roughness(map: &mut MultiLayerGridMap, params: &TerrainParams) {
    let region = map.full_region();
    compute_roughness_in(map, params, region);
}

/// `min(|h - smoothed|, cap)` for every known cell of `region`. Requires the
/// smoothed layer to be current over the region.
pub fn compute_roughness_in(map: &mut MultiLayerGridMap, params: &TerrainParams, region: CellRegion) {
    let updates: Vec<_> = {
        let smoothed = map.ensure_layer(LayerId::Smoothed).clone();
        region
            .cells()
            .map(|cell| {
                let i = map.offset(cell);
                let value = match (map.elevation(cell), smoothed.get(i)) {
                    (Some(h), Some(s)) => Some((h - s).abs().min(params.roughness_cap)),
                    _ => None,
                };
                (cell, value)
            })
            .collect()
    };
    write_layer(map, LayerId::Roughness, updates);
}

pub fn compute_normals_and_slope(map: &mut MultiLayerGridMap) {
    let region = map.full_region();
    compute_normals_and_slope_in(map, region);
}

/// Unit surface normal from central elevation differences, falling back to a
/// one-sided difference when only one axis neighbor is known or in bounds.
/// Slope is the angle between the normal and +z. A cell with no usable
/// neighbor along some axis gets no normal and no slope.
pub fn compute_normals_and_slope_in(map: &mut MultiLayerGridMap, region: CellRegion) {
    let mut updates = Vec::new();
    for cell in region.cells() {
        let normal = surface_gradient(map, cell).map(|(gx, gy)| {
            let norm = (gx * gx + gy * gy + 1.0).sqrt();
            let slope = gx.hypot(gy).atan();
            ([-gx / norm, -gy / norm, 1.0 / norm], slope)
        });
        updates.push((cell, normal));
    }
    map.ensure_layer(LayerId::Slope);
    for (cell, value) in updates {
        let i = map.offset(cell);
        map.normals_mut()[i] = value.map(|(n, _)| n);
        let layer = map.ensure_layer(LayerId::Slope);
        match value {
            // atan(|∇h|) equals acos(n_z) and stays accurate near zero slope.
            Some((_, slope)) => layer.set(i, slope),
            None => layer.clear(i),
        }
    }
}

/// Elevation gradient `(∂h/∂x, ∂h/∂y)` at a known cell.
fn surface_gradient(map: &MultiLayerGridMap, cell: CellIndex) -> Option<(f64, f64)> {
    let h = map.elevation(cell)?;
    let res = map.resolution();
    let axis = |d_row: isize, d_col: isize| -> Option<f64> {
        let fwd = map.offset_cell(cell, d_row, d_col).and_then(|c| map.elevation(c));
        let back = map.offset_cell(cell, -d_row, -d_col).and_then(|c| map.elevation(c));
        match (fwd, back) {
            (Some(f), Some(b)) => Some((f - b) / (2.0 * res)),
            (Some(f), None) => Some((f - h) / res),
            (None, Some(b)) => Some((h - b) / res),
            (None, None) => None,
        }
    };
    Some((axis(0, 1)?, axis(1, 0)?))
}

pub fn classify_traversability(map: &mut MultiLayerGridMap, robot: &RobotModel, params: &TerrainParams) {
    let region = map.full_region();
    classify_traversability_in(map, robot, params, region);
}

/// 1 where slope and roughness are both within the robot's limits, 0
/// otherwise. Unknown cells and cells without a slope estimate are 0.
pub fn classify_traversability_in(map: &mut MultiLayerGridMap, robot: &RobotModel, params: &TerrainParams, region: CellRegion) {
    map.ensure_layer(LayerId::Slope);
    map.ensure_layer(LayerId::Roughness);
    let updates: Vec<_> = region
        .cells()
        .map(|cell| {
            let i = map.offset(cell);
            let slope = map.layer(LayerId::Slope).ok().and_then(|l| l.get(i));
            let roughness = map.layer(LayerId::Roughness).ok().and_then(|l| l.get(i));
            let ok = match (map.is_known(cell), slope, roughness) {
                (true, Some(s), Some(r)) => s <= robot.max_slope && r < params.roughness_limit,
                _ => false,
            };
            (cell, Some(if ok { 1.0 } else { 0.0 }))
        })
        .collect();
    write_layer(map, LayerId::Traversability, updates);
}

/// True for known cells classified traversable.
pub fn is_traversable(map: &MultiLayerGridMap, cell: CellIndex) -> bool {
    map.get_layer_value(LayerId::Traversability, cell).ok().flatten() == Some(1.0)
}

/// Recomputes smoothed, roughness, normal/slope and traversability over
/// `region`. The region must already include the margin around changed
/// elevations (see [`influence_margin`]).
pub fn update_derived_layers(map: &mut MultiLayerGridMap, robot: &RobotModel, params: &TerrainParams, region: CellRegion) {
    smooth_elevation_in(map, params, region);
    compute_roughness_in(map, params, region);
    compute_normals_and_slope_in(map, region);
    classify_traversability_in(map, robot, params, region);
}

/// Number of cells around an elevation change whose derived layers can be
/// affected by it.
pub fn influence_margin(map: &MultiLayerGridMap, params: &TerrainParams) -> usize {
    ((params.smoothing_radius / map.resolution()).floor() as usize).max(1)
}

pub fn analyze(map: &mut MultiLayerGridMap, robot: &RobotModel, params: &TerrainParams) {
    let region = map.full_region();
    update_derived_layers(map, robot, params, region);
}

fn write_layer(map: &mut MultiLayerGridMap, id: LayerId, updates: Vec<(CellIndex, Option<f64>)>) {
    let offsets: Vec<_> = updates.iter().map(|(c, v)| (map.offset(*c), *v)).collect();
    let layer = map.ensure_layer(id);
    for (i, value) in offsets {
        match value {
            Some(v) => layer.set(i, v),
            None => layer.clear(i),
        }
    }
}
