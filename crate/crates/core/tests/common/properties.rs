//! Property functions over every module's invariants. Each one drives a
//! seeded proptest runner for [`CASES`] cases and reports the first
//! counterexample as text, so the same list serves the test harness and the
//! acceptance report.

use std::fmt::Debug;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

use riskplan::costs::{estimate_gain, path_distance, path_energy, path_time, segment_power, GainModel, PathCosts};
use riskplan::experiment::{aggregate, mission_file_name};
use riskplan::risk::{
    build_collision_cost_layer, collision_cost_from_distance, distance_transform, path_risk, pose_risk_at,
    slip_risk_for_slope,
};
use riskplan::sim::frontier::detect_frontiers;
use riskplan::sim::planner::{cells_to_path, plan_candidates, search, trace, SearchSpace};
use riskplan::sim::sensor::{RangeSensor, SensorModel};
use riskplan::sim::world::{generate_world, WorldParams};
use riskplan::sim::{run_mission, MissionLog, MissionRecord, Mode, SimConfig};
use riskplan::terrain::{analyze, fuse_elevation, is_traversable, ElevationObservation};
use riskplan::vikor::{
    dynamic_weights, select_path, vikor_rank, CriteriaMatrix, MissionState, PathCandidate, CRITERIA,
};
use riskplan::sim::frontier::FrontierGoal;
use riskplan::{CellIndex, LayerId, MultiLayerGridMap, Path, Pose, RobotModel, TerrainParams};

use super::{component_count, edt_oracle, oracle_ranking, sampled_map, shortest_cost_oracle, transect_visible, vikor_oracle};

pub const CASES: u32 = 256;

pub type Property = fn() -> Result<(), String>;

/// Every property, by name.
pub const ALL: &[(&str, Property)] = &[
    ("grid_round_trip", grid_round_trip),
    ("grid_neighborhood_symmetric", grid_neighborhood_symmetric),
    ("grid_write_isolation", grid_write_isolation),
    ("fusion_variance_and_convergence", fusion_variance_and_convergence),
    ("fusion_bounds_bracket_height", fusion_bounds_bracket_height),
    ("terrain_layer_ranges", terrain_layer_ranges),
    ("terrain_plane_slope", terrain_plane_slope),
    ("terrain_affine_roughness", terrain_affine_roughness),
    ("edt_matches_brute_force", edt_matches_brute_force),
    ("collision_monotone", collision_monotone),
    ("slip_increasing_and_mu_free", slip_increasing_and_mu_free),
    ("slip_index_decreasing_in_friction", slip_index_decreasing_in_friction),
    ("path_risk_permutation_and_bounds", path_risk_permutation_and_bounds),
    ("path_risk_dilution", path_risk_dilution),
    ("energy_additive", energy_additive),
    ("power_ordering", power_ordering),
    ("gain_monotone", gain_monotone),
    ("distance_reverse_and_time_scaling", distance_reverse_and_time_scaling),
    ("vikor_affine_invariance", vikor_affine_invariance),
    ("weights_bounded_monotone", weights_bounded_monotone),
    ("selection_order_invariant", selection_order_invariant),
    ("vikor_oracle_equivalence", vikor_oracle_equivalence),
    ("dominant_alternative_selected", dominant_alternative_selected),
    ("frontier_clusters_match_components", frontier_clusters_match_components),
    ("planner_avoids_untraversable", planner_avoids_untraversable),
    ("planner_matches_oracle", planner_matches_oracle),
    ("sensor_matches_transect_oracle", sensor_matches_transect_oracle),
    ("mission_invariants", mission_invariants),
    ("report_pure_and_signed", report_pure_and_signed),
];

fn check<S>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Result<(), String>
where
    S: Strategy,
    S::Value: Debug,
{
    let config = Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn flat_robot() -> RobotModel {
    RobotModel::default()
}

/// Analyzed map with random heights of amplitude `amp` and collision costs.
fn rough_map(rows: usize, cols: usize, heights: &[f64]) -> MultiLayerGridMap {
    let map = sampled_map(rows, cols, 0.5, |x, y| {
        let (c, r) = ((x / 0.5) as usize, (y / 0.5) as usize);
        heights[r * cols + c]
    });
    analyzed(map)
}

fn analyzed(mut map: MultiLayerGridMap) -> MultiLayerGridMap {
    let robot = flat_robot();
    let params = TerrainParams::for_resolution(map.resolution());
    analyze(&mut map, &robot, &params);
    build_collision_cost_layer(&mut map, &robot).unwrap();
    map
}

fn heights_strategy(max_side: usize, amp: f64) -> impl Strategy<Value = (usize, usize, Vec<f64>)> {
    (3..=max_side, 3..=max_side).prop_flat_map(move |(r, c)| (Just(r), Just(c), prop::collection::vec(0.0..amp, r * c)))
}

fn pose(map: &MultiLayerGridMap, cell: CellIndex) -> Pose {
    let [x, y] = map.cell_center(cell);
    Pose::new([x, y, map.elevation(cell).unwrap_or(0.0)], 0.0)
}

// grid_map

pub fn grid_round_trip() -> Result<(), String> {
    let s = (1..40usize, 1..40usize, 0.05..3.0f64, -50.0..50.0f64, -50.0..50.0f64, any::<prop::sample::Index>());
    check(s, |(rows, cols, res, ox, oy, pick)| {
        let map = MultiLayerGridMap::new(rows, cols, res, [ox, oy]).unwrap();
        let cell = map.index_of(pick.index(map.len()));
        prop_assert_eq!(map.world_to_cell(map.cell_center(cell)).unwrap(), cell);
        Ok(())
    })
}

pub fn grid_neighborhood_symmetric() -> Result<(), String> {
    let s = (1..25usize, 1..25usize, 0.1..2.0f64, 0.0..6.0f64, any::<prop::sample::Index>(), any::<prop::sample::Index>());
    check(s, |(rows, cols, res, radius, a, b)| {
        let map = MultiLayerGridMap::new(rows, cols, res, [0.0, 0.0]).unwrap();
        let (i, j) = (map.index_of(a.index(map.len())), map.index_of(b.index(map.len())));
        prop_assert_eq!(
            map.neighborhood(i, radius).contains(&j),
            map.neighborhood(j, radius).contains(&i)
        );
        prop_assert!(map.neighborhood(i, radius).contains(&i));
        Ok(())
    })
}

pub fn grid_write_isolation() -> Result<(), String> {
    let s = (heights_strategy(8, 1.0), any::<prop::sample::Index>(), 0..LayerId::ALL.len(), -5.0..5.0f64);
    check(s, |((rows, cols, heights), pick, layer, value)| {
        let before = rough_map(rows, cols, &heights);
        let mut after = before.clone();
        let cell = before.index_of(pick.index(before.len()));
        let id = LayerId::ALL[layer];
        after.set_layer_value(id, cell, value).unwrap();
        for other in before.cells().filter(|&c| c != cell) {
            for id in LayerId::ALL {
                prop_assert_eq!(
                    before.get_layer_value(id, other).unwrap(),
                    after.get_layer_value(id, other).unwrap()
                );
            }
        }
        prop_assert_eq!(after.layer(id).unwrap().get(after.offset(cell)), Some(value));
        Ok(())
    })
}

// terrain

pub fn fusion_variance_and_convergence() -> Result<(), String> {
    let s = (-5.0..5.0f64, prop::collection::vec((-5.0..5.0f64, 1e-4..1.0f64), 1..20), 1e-4..1.0f64);
    check(s, |(target, noisy, variance)| {
        let mut map = MultiLayerGridMap::new(1, 1, 0.5, [0.0, 0.0]).unwrap();
        let params = TerrainParams::default();
        let cell = CellIndex::new(0, 0);
        let mut last_var = f64::INFINITY;
        for (height, variance) in noisy {
            let e = fuse_elevation(&mut map, ElevationObservation { cell, height, variance }, &params).unwrap();
            prop_assert!(e.variance <= last_var);
            last_var = e.variance;
        }
        let mut gap = f64::INFINITY;
        for _ in 0..20 {
            let e = fuse_elevation(&mut map, ElevationObservation { cell, height: target, variance }, &params).unwrap();
            prop_assert!(e.variance <= last_var);
            let g = (e.height - target).abs();
            prop_assert!(g <= gap + 1e-12, "gap grew from {} to {}", gap, g);
            gap = g;
            last_var = e.variance;
        }
        Ok(())
    })
}

pub fn fusion_bounds_bracket_height() -> Result<(), String> {
    let s = prop::collection::vec((-5.0..5.0f64, 1e-6..4.0f64), 1..15);
    check(s, |obs| {
        let mut map = MultiLayerGridMap::new(1, 1, 0.5, [0.0, 0.0]).unwrap();
        let params = TerrainParams::default();
        let cell = CellIndex::new(0, 0);
        for (height, variance) in obs {
            fuse_elevation(&mut map, ElevationObservation { cell, height, variance }, &params).unwrap();
            let h = map.elevation(cell).unwrap();
            let lo = map.get_layer_value(LayerId::HeightMin, cell).unwrap().unwrap();
            let hi = map.get_layer_value(LayerId::HeightMax, cell).unwrap().unwrap();
            prop_assert!(lo <= h && h <= hi);
        }
        Ok(())
    })
}

pub fn terrain_layer_ranges() -> Result<(), String> {
    check((heights_strategy(14, 2.0), 0.0..1.0f64), |((rows, cols, heights), known)| {
        let mut map = MultiLayerGridMap::new(rows, cols, 0.5, [0.0, 0.0]).unwrap();
        let params = TerrainParams::default();
        // A reproducible subset of cells observed.
        for (i, &h) in heights.iter().enumerate() {
            if (i as f64 * 0.618_033_988_75).fract() < known {
                let cell = map.index_of(i);
                super::observe(&mut map, cell, h, &params);
            }
        }
        analyze(&mut map, &flat_robot(), &params);
        for cell in map.cells() {
            if let Some(slope) = map.get_layer_value(LayerId::Slope, cell).unwrap() {
                prop_assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&slope));
            }
            if let Some(r) = map.get_layer_value(LayerId::Roughness, cell).unwrap() {
                prop_assert!((0.0..=0.1).contains(&r));
            }
            if let Some(t) = map.get_layer_value(LayerId::Traversability, cell).unwrap() {
                prop_assert!(t == 0.0 || t == 1.0);
            }
        }
        Ok(())
    })
}

fn plane(a: f64, b: f64) -> MultiLayerGridMap {
    let mut map = sampled_map(15, 15, 0.5, |x, y| a * x + b * y);
    analyze(&mut map, &flat_robot(), &TerrainParams::default());
    map
}

pub fn terrain_plane_slope() -> Result<(), String> {
    check((-2.0..2.0f64, -2.0..2.0f64), |(a, b)| {
        let map = plane(a, b);
        let expected = (1.0 / (1.0 + a * a + b * b).sqrt()).acos();
        for cell in map.cells().filter(|c| (1..14).contains(&c.row) && (1..14).contains(&c.col)) {
            let slope = map.get_layer_value(LayerId::Slope, cell).unwrap().unwrap();
            prop_assert!((slope - expected).abs() < 1e-6, "slope {} vs {}", slope, expected);
        }
        Ok(())
    })
}

pub fn terrain_affine_roughness() -> Result<(), String> {
    check((-2.0..2.0f64, -2.0..2.0f64), |(a, b)| {
        let map = plane(a, b);
        // Smoothing disk of 3 cells fits inside rows and cols 3..12.
        for cell in map.cells().filter(|c| (3..12).contains(&c.row) && (3..12).contains(&c.col)) {
            let r = map.get_layer_value(LayerId::Roughness, cell).unwrap().unwrap();
            prop_assert!(r.abs() < 1e-12, "roughness {}", r);
        }
        Ok(())
    })
}

// risk

pub fn edt_matches_brute_force() -> Result<(), String> {
    let s = (1..13usize, 1..13usize).prop_flat_map(|(r, c)| (Just(r), Just(c), prop::collection::vec(prop::bool::weighted(0.15), r * c)));
    check(s, |(rows, cols, seeds)| {
        let got = distance_transform(&seeds, rows, cols);
        let want = edt_oracle(&seeds, rows, cols);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!(g == w || (g - w).abs() < 1e-9, "{} vs {}", g, w);
        }
        Ok(())
    })
}

pub fn collision_monotone() -> Result<(), String> {
    check((0.0..20.0f64, 0.0..20.0f64, 0.1..3.0f64), |(d1, d2, x)| {
        let (near, far) = (d1.min(d2), d1.max(d2));
        let (cn, cf) = (collision_cost_from_distance(near, x), collision_cost_from_distance(far, x));
        prop_assert!(cn >= cf);
        prop_assert!((0.0..=1.0).contains(&cn) && (0.0..=1.0).contains(&cf));
        prop_assert_eq!(collision_cost_from_distance(x, x), 1.0);
        Ok(())
    })
}

fn robot_strategy() -> impl Strategy<Value = RobotModel> {
    (10.0..200.0f64, 0.05..1.5f64, 5.0..60.0f64, 0.05..0.5f64, 0.05..0.5f64).prop_map(|(mass, friction, deg, thick, contact)| {
        RobotModel {
            mass,
            friction,
            max_slope: deg.to_radians(),
            wheel_thickness: thick,
            wheel_contact_length: contact,
            ..RobotModel::default()
        }
    })
}

pub fn slip_increasing_and_mu_free() -> Result<(), String> {
    check(robot_strategy(), |robot| {
        let tm = robot.max_slope;
        let mut last = 0.0;
        for k in 1..100 {
            let theta = tm * k as f64 / 100.0;
            let rs = slip_risk_for_slope(theta, &robot);
            prop_assert!(rs > last, "R_s not increasing at {}", theta);
            let closed = (theta.cos() * theta.tan()) / (tm.cos() * tm.tan());
            prop_assert!((rs - closed).abs() < 1e-12);
            last = rs;
        }
        prop_assert_eq!(slip_risk_for_slope(tm, &robot), 1.0);
        Ok(())
    })
}

pub fn slip_index_decreasing_in_friction() -> Result<(), String> {
    check((robot_strategy(), 0.01..1.5f64, 0.01..1.5f64), |(robot, mu1, mu2)| {
        prop_assume!((mu1 - mu2).abs() > 1e-6);
        let (lo, hi) = (mu1.min(mu2), mu1.max(mu2));
        let theta = robot.max_slope * 0.5;
        let s = |mu| RobotModel { friction: mu, ..robot }.slip_index(theta);
        prop_assert!(s(lo) > s(hi));
        Ok(())
    })
}

pub fn path_risk_permutation_and_bounds() -> Result<(), String> {
    let s = (heights_strategy(10, 1.5), prop::collection::vec(any::<prop::sample::Index>(), 1..12))
        .prop_flat_map(|(map, picks)| {
            let order = Just((0..picks.len()).collect::<Vec<usize>>()).prop_shuffle();
            (Just(map), Just(picks), order)
        });
    check(s, |((rows, cols, heights), picks, order)| {
        let map = rough_map(rows, cols, &heights);
        let robot = flat_robot();
        let cells: Vec<CellIndex> = picks.iter().map(|p| map.index_of(p.index(map.len()))).collect();
        let risks: Vec<f64> = cells.iter().map(|&c| pose_risk_at(&map, c, &robot).unwrap().total).collect();
        let path = Path::new(cells.iter().map(|&c| pose(&map, c)).collect()).unwrap();
        let total = path_risk(&map, &path, &robot).unwrap();
        let other = Path::new(order.iter().map(|&k| pose(&map, cells[k])).collect()).unwrap();
        prop_assert!(close(total, path_risk(&map, &other, &robot).unwrap(), 1e-12));
        let lo = risks.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = risks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo - 1e-12 <= total && total <= hi + 1e-12);
        Ok(())
    })
}

pub fn path_risk_dilution() -> Result<(), String> {
    // Gentle bumps on the right half only: every cell stays traversable, so
    // there is no collision cost and the flat left edge carries zero risk.
    let s = (prop::collection::vec(0.0..0.04f64, 20 * 20), prop::collection::vec(any::<prop::sample::Index>(), 1..10));
    check(s, |(bumps, picks)| {
        let map = analyzed(sampled_map(20, 20, 0.5, |x, y| {
            let (c, r) = ((x / 0.5) as usize, (y / 0.5) as usize);
            if c >= 10 { bumps[r * 20 + c] } else { 0.0 }
        }));
        let robot = flat_robot();
        let mut poses: Vec<Pose> = picks.iter().map(|p| pose(&map, map.index_of(p.index(map.len())))).collect();
        let before = path_risk(&map, &Path::new(poses.clone()).unwrap(), &robot).unwrap();
        let safe = CellIndex::new(10, 1);
        prop_assert_eq!(pose_risk_at(&map, safe, &robot).unwrap().total, 0.0);
        poses.push(pose(&map, safe));
        let after = path_risk(&map, &Path::new(poses).unwrap(), &robot).unwrap();
        if before > 0.0 {
            prop_assert!(after < before);
        } else {
            prop_assert_eq!(after, 0.0);
        }
        Ok(())
    })
}

// cost_models

fn point() -> impl Strategy<Value = [f64; 3]> {
    (-20.0..20.0f64, -20.0..20.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| [x, y, z])
}

pub fn energy_additive() -> Result<(), String> {
    check((point(), point(), 2..20usize, 10.0..200.0f64), |(a, b, pieces, mass)| {
        let robot = RobotModel { mass, ..RobotModel::default() };
        let whole = path_energy(&Path::new(vec![Pose::new(a, 0.0), Pose::new(b, 0.0)]).unwrap(), &robot);
        let split: Vec<Pose> = (0..=pieces)
            .map(|k| {
                let t = k as f64 / pieces as f64;
                Pose::new([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])], 0.0)
            })
            .collect();
        let parts = path_energy(&Path::new(split).unwrap(), &robot);
        prop_assert!((whole - parts).abs() <= 1e-9 * whole.abs().max(1.0), "{} vs {}", whole, parts);
        Ok(())
    })
}

pub fn power_ordering() -> Result<(), String> {
    check((0.0..1.5f64, 10.0..200.0f64, 0.1..3.0f64), |(theta, mass, speed)| {
        let robot = RobotModel { mass, max_speed: speed, ..RobotModel::default() };
        let (down, flat, up) = (segment_power(&robot, -theta), segment_power(&robot, 0.0), segment_power(&robot, theta));
        prop_assert!(down <= flat + 1e-9 && flat <= up + 1e-9, "{} {} {}", down, flat, up);
        Ok(())
    })
}

pub fn gain_monotone() -> Result<(), String> {
    let s = (
        prop::collection::vec(any::<bool>(), 30 * 30),
        prop::collection::vec((0.0..15.0f64, 0.0..15.0f64), 1..8),
        (0.0..15.0f64, 0.0..15.0f64),
        0.5..6.0f64,
    );
    check(s, |(known, xy, extra, range)| {
        let mut map = MultiLayerGridMap::new(30, 30, 0.5, [0.0, 0.0]).unwrap();
        let params = TerrainParams::default();
        for (i, k) in known.iter().enumerate() {
            if *k {
                let cell = map.index_of(i);
                super::observe(&mut map, cell, 0.0, &params);
            }
        }
        let sensor = GainModel { range, column_height: 2.0 };
        let mut poses: Vec<Pose> = xy.iter().map(|&(x, y)| Pose::new([x, y, 0.0], 0.0)).collect();
        let before = estimate_gain(&map, &sensor, &Path::new(poses.clone()).unwrap());
        poses.push(Pose::new([extra.0, extra.1, 0.0], 0.0));
        let after = estimate_gain(&map, &sensor, &Path::new(poses).unwrap());
        prop_assert!(after >= before);
        Ok(())
    })
}

pub fn distance_reverse_and_time_scaling() -> Result<(), String> {
    check((prop::collection::vec(point(), 1..12), 0.1..5.0f64, 0.1..10.0f64), |(points, speed, k)| {
        let path = Path::new(points.into_iter().map(|p| Pose::new(p, 0.0)).collect()).unwrap();
        prop_assert!(close(path_distance(&path), path_distance(&path.reversed()), 1e-12));
        let slow = RobotModel { max_speed: speed, ..RobotModel::default() };
        let fast = RobotModel { max_speed: speed * k, ..RobotModel::default() };
        prop_assert!(close(path_time(&path, &slow), k * path_time(&path, &fast), 1e-12));
        Ok(())
    })
}

// vikor

fn matrix_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(0.0..10.0f64, 4), 1..=6)
}

fn weights_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, 4)
}

fn rank(rows: &[Vec<f64>], weights: &[f64], v: f64) -> riskplan::vikor::VikorResult {
    let matrix = CriteriaMatrix::new(CRITERIA.iter().map(|s| s.to_string()).collect(), rows.to_vec()).unwrap();
    vikor_rank(&matrix, weights, v).unwrap()
}

pub fn vikor_affine_invariance() -> Result<(), String> {
    let s = (matrix_strategy(), weights_strategy(), 0.0..=1.0f64, 0..4usize, 0.1..10.0f64, 0.0..10.0f64);
    check(s, |(rows, weights, v, column, scale, shift)| {
        let base = rank(&rows, &weights, v);
        let mut scaled = rows.clone();
        for row in &mut scaled {
            row[column] = scale * row[column] + shift;
        }
        let other = rank(&scaled, &weights, v);
        for (a, b) in base.q.iter().zip(&other.q) {
            prop_assert!((a - b).abs() < 1e-9, "Q {} vs {}", a, b);
        }
        // Same order up to ties within tolerance.
        for pair in other.ranking().windows(2) {
            prop_assert!(base.q[pair[0]] <= base.q[pair[1]] + 1e-9);
        }
        Ok(())
    })
}

fn state_strategy() -> impl Strategy<Value = (MissionState, MissionState)> {
    (
        (1.0..2000.0f64, 1.0..5000.0f64),
        (0.0..3000.0f64, 0.0..3000.0f64),
        (0.0..6000.0f64, 0.0..6000.0f64),
        (0.0..100_000.0f64, 0.0..100_000.0f64),
    )
        .prop_map(|((duration, budget), (t1, t2), (d1, d2), (b1, b2))| {
            let state = |t, d, b| MissionState {
                elapsed: t,
                mission_duration: duration,
                distance_traversed: d,
                max_distance: budget,
                battery_remaining: b,
            };
            (state(t1.min(t2), d1.min(d2), b1.max(b2)), state(t1.max(t2), d1.max(d2), b1.min(b2)))
        })
}

pub fn weights_bounded_monotone() -> Result<(), String> {
    check(state_strategy(), |(early, late)| {
        let (a, b) = (dynamic_weights(&early), dynamic_weights(&late));
        for w in a.as_array().into_iter().chain(b.as_array()) {
            prop_assert!((0.0..=1.0).contains(&w), "weight {}", w);
        }
        prop_assert!(a.time <= b.time && a.distance <= b.distance && a.energy <= b.energy);
        Ok(())
    })
}

fn candidate(values: &[f64], gain: f64) -> PathCandidate {
    PathCandidate {
        path: Path::new(vec![Pose::new([0.0; 3], 0.0)]).unwrap(),
        risk: values[0],
        costs: PathCosts {
            distance: values[1],
            time: values[2],
            energy: values[3],
            gain,
        },
    }
}

fn weights_from(w: &[f64]) -> riskplan::vikor::CriterionWeights {
    riskplan::vikor::CriterionWeights {
        risk: w[0],
        distance: w[1],
        time: w[2],
        energy: w[3],
    }
}

pub fn selection_order_invariant() -> Result<(), String> {
    let s = (1..=6usize)
        .prop_flat_map(|m| {
            (
                prop::collection::vec(prop::collection::vec(0.0..10.0f64, 4), m),
                prop::collection::vec(0.0..100.0f64, m),
                Just((0..m).collect::<Vec<usize>>()).prop_shuffle(),
            )
        })
        .prop_flat_map(|(rows, gains, order)| (Just(rows), Just(gains), Just(order), weights_strategy(), 0.0..=1.0f64));
    check(s, |(rows, gains, order, w, v)| {
        let weights = weights_from(&w);
        let candidates: Vec<PathCandidate> = rows.iter().zip(&gains).map(|(r, &g)| candidate(r, g)).collect();
        let permuted: Vec<PathCandidate> = order.iter().map(|&i| candidates[i].clone()).collect();
        let a = select_path(&candidates, &weights, v).unwrap();
        let b = select_path(&permuted, &weights, v).unwrap();
        prop_assert_eq!(&candidates[a.index], &permuted[b.index]);
        Ok(())
    })
}

pub fn vikor_oracle_equivalence() -> Result<(), String> {
    let s = (matrix_strategy(), weights_strategy(), 0.0..=1.0f64, any::<bool>());
    check(s, |(rows, weights, v, integral)| {
        let rows: Vec<Vec<f64>> = if integral {
            rows.iter().map(|r| r.iter().map(|x| x.round()).collect()).collect()
        } else {
            rows
        };
        let got = rank(&rows, &weights, v);
        let (s_o, r_o, q_o) = vikor_oracle(&rows, &weights, v);
        for i in 0..rows.len() {
            prop_assert!((got.s[i] - s_o[i]).abs() < 1e-9);
            prop_assert!((got.r[i] - r_o[i]).abs() < 1e-9);
            prop_assert!((got.q[i] - q_o[i]).abs() < 1e-9);
        }
        prop_assert_eq!(got.ranking(), oracle_ranking(&q_o));
        Ok(())
    })
}

pub fn dominant_alternative_selected() -> Result<(), String> {
    let s = (matrix_strategy(), weights_strategy(), 0.0..=1.0f64, prop::collection::vec(0.0..1.0f64, 4), any::<prop::sample::Index>());
    check(s, |(rows, w, v, shrink, slot)| {
        let mut rows = rows;
        let best: Vec<f64> = (0..4)
            .map(|j| rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min) * shrink[j])
            .collect();
        let at = slot.index(rows.len() + 1);
        rows.insert(at, best);
        let result = rank(&rows, &w, v);
        prop_assert_eq!(result.q[at], 0.0);
        let gains: Vec<f64> = (0..rows.len()).map(|i| if i == at { 100.0 } else { i as f64 }).collect();
        let candidates: Vec<PathCandidate> = rows.iter().zip(&gains).map(|(r, &g)| candidate(r, g)).collect();
        prop_assert_eq!(select_path(&candidates, &weights_from(&w), v).unwrap().index, at);
        Ok(())
    })
}

// exploration_sim

pub fn frontier_clusters_match_components() -> Result<(), String> {
    let s = (2..14usize, 2..14usize).prop_flat_map(|(r, c)| {
        (Just(r), Just(c), prop::collection::vec(prop::bool::weighted(0.6), r * c), prop::collection::vec(prop::bool::weighted(0.85), r * c))
    });
    check(s, |(rows, cols, known, open)| {
        let mut map = MultiLayerGridMap::new(rows, cols, 0.5, [0.0, 0.0]).unwrap();
        let params = TerrainParams::default();
        for (i, &k) in known.iter().enumerate() {
            if k {
                let cell = map.index_of(i);
                super::observe(&mut map, cell, 0.0, &params);
            }
        }
        let passable: Vec<bool> = (0..map.len()).map(|i| known[i] && open[i]).collect();
        let frontier: Vec<bool> = (0..map.len())
            .map(|i| {
                let (r, c) = ((i / cols) as i64, (i % cols) as i64);
                passable[i]
                    && [(-1, 0), (1, 0), (0, -1), (0, 1)].iter().any(|&(dr, dc)| {
                        let (nr, nc) = (r + dr, c + dc);
                        nr >= 0 && nc >= 0 && (nr as usize) < rows && (nc as usize) < cols && !known[nr as usize * cols + nc as usize]
                    })
            })
            .collect();
        let goals = detect_frontiers(&map, &passable, 1000.0, usize::MAX, &[]);
        prop_assert_eq!(goals.len(), component_count(&frontier, rows, cols));
        prop_assert_eq!(goals.iter().map(|g| g.cluster_size).sum::<usize>(), frontier.iter().filter(|&&f| f).count());
        for g in &goals {
            prop_assert!(frontier[map.offset(g.cell)]);
        }
        Ok(())
    })
}

pub fn planner_avoids_untraversable() -> Result<(), String> {
    check((heights_strategy(12, 1.2), any::<prop::sample::Index>()), |((rows, cols, heights), pick)| {
        let map = rough_map(rows, cols, &heights);
        let robot = flat_robot();
        let space = SearchSpace::risk_aware(&map, &robot);
        let open: Vec<CellIndex> = map.cells().filter(|&c| space.passable[map.offset(c)]).collect();
        prop_assume!(!open.is_empty());
        let start = open[pick.index(open.len())];
        let goals: Vec<FrontierGoal> = open.iter().map(|&cell| FrontierGoal { cell, cluster_size: 1 }).collect();
        let Ok(planned) = plan_candidates(&map, &space, start, &goals, &robot, &GainModel::default()) else {
            return Ok(());
        };
        for p in planned {
            prop_assert_eq!(p.cells[0], start);
            for &c in &p.cells {
                prop_assert!(is_traversable(&map, c), "path enters {:?}", c);
            }
        }
        Ok(())
    })
}

pub fn planner_matches_oracle() -> Result<(), String> {
    check((heights_strategy(8, 1.2), any::<prop::sample::Index>()), |((rows, cols, heights), pick)| {
        let map = rough_map(rows, cols, &heights);
        let space = SearchSpace::risk_aware(&map, &flat_robot());
        let open: Vec<usize> = (0..map.len()).filter(|&i| space.passable[i]).collect();
        prop_assume!(!open.is_empty());
        let start = open[pick.index(open.len())];
        let (cost, parent) = search(&map, &space, map.index_of(start), &[]);
        let risk = space.cell_risk.clone().unwrap();
        let want = shortest_cost_oracle(&space.passable, &risk, rows, cols, 0.5, start);
        for i in 0..map.len() {
            prop_assert!(cost[i] == want[i] || (cost[i] - want[i]).abs() < 1e-9, "cell {}: {} vs {}", i, cost[i], want[i]);
            if cost[i].is_finite() {
                let cells = trace(&map, &parent, map.index_of(start), map.index_of(i)).unwrap();
                prop_assert!(cells_to_path(&map, &cells).is_ok());
            }
        }
        Ok(())
    })
}

pub fn sensor_matches_transect_oracle() -> Result<(), String> {
    let s = (2..30usize)
        .prop_flat_map(|n| (prop::collection::vec(0.0..3.0f64, n), 0..n, 0.0..2.0f64));
    check(s, |(heights, origin, sensor_height)| {
        let cols = heights.len();
        let truth = sampled_map(1, cols, 0.5, |x, _| heights[(x / 0.5) as usize]);
        let model = SensorModel { range: cols as f64 * 0.5, height: sensor_height, variance: 0.01 };
        let sensor = RangeSensor::new(model, &truth);
        let visible = sensor.visible_cells(CellIndex::new(0, origin));
        for target in 0..cols {
            let seen = visible.contains(&CellIndex::new(0, target));
            prop_assert_eq!(seen, transect_visible(&heights, origin, target, sensor_height), "target {}", target);
        }
        Ok(())
    })
}

/// Small cave worlds for mission-level properties.
pub fn small_world_params() -> WorldParams {
    WorldParams {
        rows: 48,
        cols: 48,
        corridor_count: 3,
        min_reach: 6.0,
        start_clearance: 2.0,
        ..WorldParams::preset("hazard_dense").unwrap()
    }
}

pub fn mission_invariants() -> Result<(), String> {
    let params = small_world_params();
    let config = SimConfig { duration: 30, ..SimConfig::default() };
    check((any::<u64>(), prop::sample::select(Mode::ALL.to_vec())), |(seed, mode)| {
        let world = generate_world(seed, &params).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let robot = flat_robot();
        let terrain = TerrainParams::for_resolution(params.resolution);
        let run = || run_mission(&world, &robot, &terrain, &config, mode, false).unwrap();
        let (a, b) = (run(), run());
        let bytes = |log: &MissionLog| {
            let mut out = Vec::new();
            log.write_csv(&mut out).unwrap();
            out
        };
        prop_assert_eq!(bytes(&a), bytes(&b));
        let volume = (params.rows * params.cols) as f64 * params.resolution.powi(2) * config.column_height;
        for w in a.records.windows(2) {
            prop_assert!(w[0].t_s < w[1].t_s);
            prop_assert!(w[0].coverage_m3 <= w[1].coverage_m3);
            prop_assert!(w[0].battery_s >= w[1].battery_s);
            prop_assert!(w[0].lethal <= w[1].lethal);
        }
        prop_assert!(a.records.iter().all(|r| r.coverage_m3 <= volume + 1e-9));
        Ok(())
    })
}

fn record(t: u32, risk: f64, coverage: f64) -> MissionRecord {
    MissionRecord {
        t_s: t,
        x: 0.0,
        y: 0.0,
        risk_c: 0.0,
        risk_t: risk,
        risk_s: 0.0,
        risk_total: risk,
        coverage_m3: coverage,
        battery_s: 100.0,
        plan_ms: None,
        lethal: 0,
    }
}

// experiment_cli

pub fn report_pure_and_signed() -> Result<(), String> {
    let run = prop::collection::vec((0.0..3.0f64, 0.0..50.0f64), 1..8);
    let s = (prop::collection::vec(run.clone(), 1..4), prop::collection::vec(run, 1..4));
    check(s, |(risk_aware, baseline)| {
        let dir = tempfile::tempdir().unwrap();
        let mut files = Vec::new();
        for (mode, runs) in [(Mode::RiskAware, &risk_aware), (Mode::Baseline, &baseline)] {
            for (seed, samples) in runs.iter().enumerate() {
                let mut coverage = 0.0;
                let records = samples
                    .iter()
                    .enumerate()
                    .map(|(t, &(risk, step))| {
                        coverage += step;
                        record(t as u32 + 1, risk, coverage)
                    })
                    .collect();
                let log = MissionLog { mode, seed: seed as u64, records, lethal_at: None };
                let path = dir.path().join(mission_file_name(mode, seed as u64));
                log.save(&path).unwrap();
                files.push(path);
            }
        }
        let first = aggregate(&files).unwrap();
        files.reverse();
        let second = aggregate(&files).unwrap();
        prop_assert_eq!(first.to_csv().unwrap(), second.to_csv().unwrap());
        let mean = |m| first.mode(m).unwrap().final_coverage_mean;
        let (r, b) = (mean(Mode::RiskAware), mean(Mode::Baseline));
        match first.coverage_change_percent {
            Some(p) => prop_assert_eq!(p.partial_cmp(&0.0), r.partial_cmp(&b)),
            None => prop_assert_eq!(b, 0.0),
        }
        Ok(())
    })
}
