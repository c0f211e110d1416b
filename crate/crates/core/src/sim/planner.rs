//! Grid search from the robot to frontier goals and evaluation of the
//! resulting candidate paths.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::costs::{evaluate_path, GainModel};
use crate::error::{Error, Result};
use crate::grid_map::{CellIndex, LayerId, MultiLayerGridMap, Path, Pose};
use crate::risk::{distance_transform, path_risk, pose_risk_at, RobotModel};
use crate::sim::frontier::FrontierGoal;
use crate::terrain::is_traversable;
use crate::vikor::PathCandidate;

/// Cells the planner may enter, and optionally a per-cell risk that
/// inflates the cost of entering a cell to `length · (1 + risk)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pub passable: Vec<bool>,
    pub cell_risk: Option<Vec<f64>>,
}

impl SearchSpace {
    /// Known traversable cells, weighted by their per-pose risk.
    pub fn risk_aware(map: &MultiLayerGridMap, robot: &RobotModel) -> Self {
        let mut passable = vec![false; map.len()];
        let mut risk = vec![f64::NAN; map.len()];
        for cell in map.cells() {
            if !is_traversable(map, cell) {
                continue;
            }
            if let Ok(r) = pose_risk_at(map, cell, robot) {
                let i = map.offset(cell);
                passable[i] = true;
                risk[i] = r.total;
            }
        }
        Self {
            passable,
            cell_risk: Some(risk),
        }
    }

    /// Known cells with a slope estimate that keep more than `clearance`
    /// meters from any geometric obstacle (see [`step_obstacles`]). Slope
    /// and roughness classification is ignored.
    pub fn geometric(map: &MultiLayerGridMap, step_limit: f64, clearance: f64) -> Self {
        let obstacles = step_obstacles(map, step_limit);
        let distance = distance_transform(&obstacles, map.rows(), map.cols());
        let res = map.resolution();
        let passable = map
            .cells()
            .map(|cell| {
                let i = map.offset(cell);
                map.is_known(cell)
                    && map.get_layer_value(LayerId::Slope, cell).ok().flatten().is_some()
                    && distance[i] * res > clearance
            })
            .collect();
        Self {
            passable,
            cell_risk: None,
        }
    }

    /// Plain shortest paths over `passable`.
    pub fn unweighted(passable: Vec<bool>) -> Self {
        Self {
            passable,
            cell_risk: None,
        }
    }

    fn step_cost(&self, length: f64, target: usize) -> f64 {
        match &self.cell_risk {
            Some(risk) => length * (1.0 + risk[target]),
            None => length,
        }
    }
}

/// Known cells whose height differs from some known 8-neighbor by more than
/// `step_limit` meters.
pub fn step_obstacles(map: &MultiLayerGridMap, step_limit: f64) -> Vec<bool> {
    map.cells()
        .map(|cell| {
            let Some(h) = map.elevation(cell) else { return false };
            NEIGHBORS.iter().any(|&(dr, dc, _)| {
                map.offset_cell(cell, dr, dc)
                    .and_then(|n| map.elevation(n))
                    .is_some_and(|hn| (hn - h).abs() > step_limit)
            })
        })
        .collect()
}

const NEIGHBORS: [(isize, isize, bool); 8] = [
    (-1, 0, false),
    (1, 0, false),
    (0, -1, false),
    (0, 1, false),
    (-1, -1, true),
    (-1, 1, true),
    (1, -1, true),
    (1, 1, true),
];

#[derive(PartialEq)]
struct Entry {
    cost: f64,
    cell: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then(other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Least-cost tree from `start` over 8-connected moves. Diagonal moves need
/// both adjacent orthogonal cells passable. `start` itself is always
/// admitted. Returns per-cell cost (infinite when unreachable) and parent.
pub fn search(map: &MultiLayerGridMap, space: &SearchSpace, start: CellIndex, targets: &[CellIndex]) -> (Vec<f64>, Vec<usize>) {
    let n = map.len();
    let res = map.resolution();
    let mut cost = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut done = vec![false; n];
    let mut pending: Vec<usize> = targets.iter().map(|&t| map.offset(t)).collect();
    let s = map.offset(start);
    cost[s] = 0.0;
    let mut heap = BinaryHeap::from([Entry { cost: 0.0, cell: s }]);
    while let Some(Entry { cost: c, cell: i }) = heap.pop() {
        if done[i] {
            continue;
        }
        done[i] = true;
        pending.retain(|&t| t != i);
        if pending.is_empty() && !targets.is_empty() {
            break;
        }
        let here = map.index_of(i);
        for (dr, dc, diagonal) in NEIGHBORS {
            let Some(next) = map.offset_cell(here, dr, dc) else { continue };
            let j = map.offset(next);
            if done[j] || !space.passable[j] {
                continue;
            }
            if diagonal {
                let side_a = map.offset_cell(here, dr, 0).map(|a| space.passable[map.offset(a)]);
                let side_b = map.offset_cell(here, 0, dc).map(|b| space.passable[map.offset(b)]);
                if side_a != Some(true) || side_b != Some(true) {
                    continue;
                }
            }
            let length = if diagonal { res * std::f64::consts::SQRT_2 } else { res };
            let candidate = c + space.step_cost(length, j);
            if candidate < cost[j] {
                cost[j] = candidate;
                parent[j] = i;
                heap.push(Entry {
                    cost: candidate,
                    cell: j,
                });
            }
        }
    }
    (cost, parent)
}

/// Cells from `start` to `goal` along the search tree, or `None` when the
/// goal was not reached.
pub fn trace(map: &MultiLayerGridMap, parent: &[usize], start: CellIndex, goal: CellIndex) -> Option<Vec<CellIndex>> {
    let s = map.offset(start);
    let mut i = map.offset(goal);
    let mut cells = vec![goal];
    while i != s {
        i = parent[i];
        if i == usize::MAX {
            return None;
        }
        cells.push(map.index_of(i));
    }
    cells.reverse();
    Some(cells)
}

/// Poses at the cell centers at their known heights, each heading along the
/// direction of travel.
pub fn cells_to_path(map: &MultiLayerGridMap, cells: &[CellIndex]) -> Result<Path> {
    let mut poses = Vec::with_capacity(cells.len());
    for (k, &cell) in cells.iter().enumerate() {
        let [x, y] = map.cell_center(cell);
        let z = map.elevation(cell).ok_or(Error::UnknownTerrain(cell))?;
        let (from, to) = if k + 1 < cells.len() {
            (cell, cells[k + 1])
        } else if k > 0 {
            (cells[k - 1], cell)
        } else {
            (cell, cell)
        };
        let heading = (to.row as f64 - from.row as f64).atan2(to.col as f64 - from.col as f64);
        poses.push(Pose::new([x, y, z], heading));
    }
    Path::new(poses)
}

/// Path to one frontier goal with its evaluated criteria.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannedPath {
    pub goal: CellIndex,
    pub cells: Vec<CellIndex>,
    pub candidate: PathCandidate,
}

/// Plans one path per reachable goal (goals at the start cell are skipped)
/// and evaluates risk, energy, distance, time and gain for each.
pub fn plan_candidates(
    map: &MultiLayerGridMap,
    space: &SearchSpace,
    start: CellIndex,
    goals: &[FrontierGoal],
    robot: &RobotModel,
    gain: &GainModel,
) -> Result<Vec<PlannedPath>> {
    let targets: Vec<CellIndex> = goals.iter().map(|g| g.cell).filter(|&c| c != start).collect();
    let (_, parent) = search(map, space, start, &targets);
    let mut planned = Vec::new();
    for goal in targets {
        let Some(cells) = trace(map, &parent, start, goal) else { continue };
        let Ok(path) = cells_to_path(map, &cells) else { continue };
        let Ok(risk) = path_risk(map, &path, robot) else { continue };
        let costs = evaluate_path(map, &path, robot, gain);
        planned.push(PlannedPath {
            goal,
            cells,
            candidate: PathCandidate { path, risk, costs },
        });
    }
    if planned.is_empty() {
        return Err(Error::NoFeasiblePath);
    }
    Ok(planned)
}
