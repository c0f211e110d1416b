//! Frontier detection and clustering.

use std::collections::VecDeque;

use crate::grid_map::{CellIndex, MultiLayerGridMap};

/// Navigation goal standing for one frontier cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrontierGoal {
    pub cell: CellIndex,
    pub cluster_size: usize,
}

const NEIGHBORS_4: [(isize, isize); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];
const NEIGHBORS_8: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

/// Cells passable under `passable` with at least one in-bounds unknown
/// 4-neighbor.
pub fn frontier_cells(map: &MultiLayerGridMap, passable: &[bool]) -> Vec<bool> {
    map.cells().map(|cell| is_frontier(map, passable, cell)).collect()
}

pub fn is_frontier(map: &MultiLayerGridMap, passable: &[bool], cell: CellIndex) -> bool {
    passable[map.offset(cell)]
        && NEIGHBORS_4
            .iter()
            .any(|&(dr, dc)| map.offset_cell(cell, dr, dc).is_some_and(|n| !map.is_known(n)))
}

/// Groups frontier cells into 8-connected clusters no wider than
/// `cluster_radius` (m) around their seed cell and returns up to
/// `max_goals` goals, largest clusters first. Each goal is the member cell
/// closest to its cluster's centroid. Frontier cells within `cluster_radius`
/// of a `blacklist` cell are ignored.
pub fn detect_frontiers(
    map: &MultiLayerGridMap,
    passable: &[bool],
    cluster_radius: f64,
    max_goals: usize,
    blacklist: &[CellIndex],
) -> Vec<FrontierGoal> {
    let mut frontier = frontier_cells(map, passable);
    if !blacklist.is_empty() {
        for (i, f) in frontier.iter_mut().enumerate() {
            if *f {
                let p = map.cell_center(map.index_of(i));
                *f = !blacklist.iter().any(|&b| distance(map.cell_center(b), p) <= cluster_radius);
            }
        }
    }
    let mut assigned = vec![false; map.len()];
    let mut goals = Vec::new();
    for seed_offset in 0..map.len() {
        if !frontier[seed_offset] || assigned[seed_offset] {
            continue;
        }
        let seed = map.index_of(seed_offset);
        let seed_xy = map.cell_center(seed);
        let mut members = vec![seed];
        assigned[seed_offset] = true;
        let mut queue = VecDeque::from([seed]);
        while let Some(cell) = queue.pop_front() {
            for (dr, dc) in NEIGHBORS_8 {
                let Some(next) = map.offset_cell(cell, dr, dc) else { continue };
                let i = map.offset(next);
                if frontier[i] && !assigned[i] && distance(map.cell_center(next), seed_xy) <= cluster_radius {
                    assigned[i] = true;
                    members.push(next);
                    queue.push_back(next);
                }
            }
        }
        let n = members.len() as f64;
        let (sx, sy) = members.iter().fold((0.0, 0.0), |(sx, sy), &c| {
            let [x, y] = map.cell_center(c);
            (sx + x, sy + y)
        });
        let centroid = [sx / n, sy / n];
        let cell = *members
            .iter()
            .min_by(|&&a, &&b| {
                distance(map.cell_center(a), centroid)
                    .total_cmp(&distance(map.cell_center(b), centroid))
                    .then(a.cmp(&b))
            })
            .expect("cluster has a seed");
        goals.push(FrontierGoal {
            cell,
            cluster_size: members.len(),
        });
    }
    goals.sort_by(|a, b| b.cluster_size.cmp(&a.cluster_size).then(a.cell.cmp(&b.cell)));
    goals.truncate(max_goals);
    goals
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}
