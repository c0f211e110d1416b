//! Procedural cave-like truth worlds.
//!
//! A world is a heightmap: a network of corridors and rooms carved into tall
//! rock, with a gently undulating floor. Hazards are placed on the floor:
//! conical mounds (some steeper than the robot can climb), rough patches of
//! random bumps, and boulders that are as tall as the rock walls.

use std::collections::VecDeque;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};

use noise::{NoiseFn, Perlin};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{parse_kv, KvTarget};
use crate::error::{Error, Result};
use crate::grid_map::{CellIndex, MultiLayerGridMap};
use crate::risk::{build_collision_cost_layer, RobotModel};
use crate::terrain::{analyze, is_traversable, TerrainParams};

/// Attempts made (seed, seed+1, ...) before generation gives up.
pub const MAX_GENERATION_ATTEMPTS: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct WorldParams {
    pub rows: usize,
    pub cols: usize,
    pub resolution: f64,
    /// Number of corridor segments; 0 makes an open world without rock.
    pub corridor_count: u32,
    pub corridor_width: f64,
    pub room_radius: f64,
    pub wall_height: f64,
    /// Amplitude (m) of the floor undulation.
    pub slope_amplitude: f64,
    /// Horizontal scale (m) of the floor undulation.
    pub slope_wavelength: f64,
    /// Mounds per 100 m² of floor.
    pub mound_density: f64,
    pub mound_radius: f64,
    pub mound_slope_min_deg: f64,
    pub mound_slope_max_deg: f64,
    /// Rough patches per 100 m² of floor.
    pub rough_patch_density: f64,
    pub rough_patch_radius: f64,
    pub rough_amplitude: f64,
    /// Boulders per 100 m² of floor.
    pub obstacle_density: f64,
    /// Hazard-free radius (m) around the start cell.
    pub start_clearance: f64,
    /// Traversable ground must extend at least this far (m) from the start.
    pub min_reach: f64,
    pub friction: f64,
}

impl WorldParams {
    pub const PRESETS: [&'static str; 3] = ["flat", "default", "hazard_dense"];

    pub fn preset(name: &str) -> Result<Self> {
        let base = Self::cave();
        match name {
            "flat" => Ok(Self::flat(160, 160)),
            "default" => Ok(base),
            "hazard_dense" => Ok(Self {
                mound_density: 0.9,
                mound_slope_min_deg: 24.0,
                mound_slope_max_deg: 42.0,
                rough_patch_density: 0.9,
                obstacle_density: 0.4,
                ..base
            }),
            other => Err(Error::InvalidParameter(format!(
                "unknown world preset `{other}` (expected one of {:?})",
                Self::PRESETS
            ))),
        }
    }

    /// Open, level world without hazards.
    pub fn flat(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            corridor_count: 0,
            slope_amplitude: 0.0,
            mound_density: 0.0,
            rough_patch_density: 0.0,
            obstacle_density: 0.0,
            min_reach: 0.0,
            ..Self::cave()
        }
    }

    fn cave() -> Self {
        Self {
            rows: 160,
            cols: 160,
            resolution: 0.5,
            corridor_count: 10,
            corridor_width: 9.0,
            room_radius: 6.0,
            wall_height: 3.0,
            slope_amplitude: 0.8,
            slope_wavelength: 14.0,
            mound_density: 0.35,
            mound_radius: 2.0,
            mound_slope_min_deg: 15.0,
            mound_slope_max_deg: 40.0,
            rough_patch_density: 0.3,
            rough_patch_radius: 1.5,
            rough_amplitude: 0.2,
            obstacle_density: 0.2,
            start_clearance: 4.0,
            min_reach: 20.0,
            friction: 0.6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("world parameter {what}")));
        if self.rows < 3 || self.cols < 3 {
            return bad("rows/cols must be at least 3");
        }
        if !(self.resolution > 0.0) {
            return bad("resolution must be positive");
        }
        for (name, v) in [
            ("corridor_width", self.corridor_width),
            ("room_radius", self.room_radius),
            ("wall_height", self.wall_height),
            ("slope_amplitude", self.slope_amplitude),
            ("mound_density", self.mound_density),
            ("mound_radius", self.mound_radius),
            ("rough_patch_density", self.rough_patch_density),
            ("rough_patch_radius", self.rough_patch_radius),
            ("rough_amplitude", self.rough_amplitude),
            ("obstacle_density", self.obstacle_density),
            ("start_clearance", self.start_clearance),
            ("min_reach", self.min_reach),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(&format!("{name} must be non-negative"));
            }
        }
        if !(self.slope_wavelength > 0.0) || !(self.friction > 0.0) {
            return bad("slope_wavelength and friction must be positive");
        }
        if self.mound_slope_min_deg > self.mound_slope_max_deg || self.mound_slope_max_deg >= 90.0 {
            return bad("mound slope range must be ordered and below 90°");
        }
        if self.corridor_count > 0 && self.corridor_width <= 0.0 {
            return bad("corridor_width must be positive when corridors are carved");
        }
        Ok(())
    }

    pub(crate) fn to_kv(&self) -> Vec<(&'static str, String)> {
        vec![
            ("rows", self.rows.to_string()),
            ("cols", self.cols.to_string()),
            ("resolution", self.resolution.to_string()),
            ("corridor_count", self.corridor_count.to_string()),
            ("corridor_width", self.corridor_width.to_string()),
            ("room_radius", self.room_radius.to_string()),
            ("wall_height", self.wall_height.to_string()),
            ("slope_amplitude", self.slope_amplitude.to_string()),
            ("slope_wavelength", self.slope_wavelength.to_string()),
            ("mound_density", self.mound_density.to_string()),
            ("mound_radius", self.mound_radius.to_string()),
            ("mound_slope_min_deg", self.mound_slope_min_deg.to_string()),
            ("mound_slope_max_deg", self.mound_slope_max_deg.to_string()),
            ("rough_patch_density", self.rough_patch_density.to_string()),
            ("rough_patch_radius", self.rough_patch_radius.to_string()),
            ("rough_amplitude", self.rough_amplitude.to_string()),
            ("obstacle_density", self.obstacle_density.to_string()),
            ("start_clearance", self.start_clearance.to_string()),
            ("min_reach", self.min_reach.to_string()),
            ("friction", self.friction.to_string()),
        ]
    }
}

impl KvTarget for WorldParams {
    fn apply(&mut self, key: &str, value: &str) -> Result<bool> {
        use crate::config::parse_value as p;
        match key {
            "rows" => self.rows = p(key, value)?,
            "cols" => self.cols = p(key, value)?,
            "resolution" => self.resolution = p(key, value)?,
            "corridor_count" => self.corridor_count = p(key, value)?,
            "corridor_width" => self.corridor_width = p(key, value)?,
            "room_radius" => self.room_radius = p(key, value)?,
            "wall_height" => self.wall_height = p(key, value)?,
            "slope_amplitude" => self.slope_amplitude = p(key, value)?,
            "slope_wavelength" => self.slope_wavelength = p(key, value)?,
            "mound_density" => self.mound_density = p(key, value)?,
            "mound_radius" => self.mound_radius = p(key, value)?,
            "mound_slope_min_deg" => self.mound_slope_min_deg = p(key, value)?,
            "mound_slope_max_deg" => self.mound_slope_max_deg = p(key, value)?,
            "rough_patch_density" => self.rough_patch_density = p(key, value)?,
            "rough_patch_radius" => self.rough_patch_radius = p(key, value)?,
            "rough_amplitude" => self.rough_amplitude = p(key, value)?,
            "obstacle_density" => self.obstacle_density = p(key, value)?,
            "start_clearance" => self.start_clearance = p(key, value)?,
            "min_reach" => self.min_reach = p(key, value)?,
            "friction" => self.friction = p(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Ground truth used by the simulator: exact heights, per-cell friction and
/// the start cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TruthWorld {
    /// Seed that was requested.
    pub seed: u64,
    /// Seed that produced this world (differs from `seed` after retries).
    pub effective_seed: u64,
    pub params: WorldParams,
    /// Fully known heightmap (exact elevations, zero variance).
    pub heights: MultiLayerGridMap,
    pub friction: Vec<f64>,
    pub start: CellIndex,
}

impl TruthWorld {
    /// Heightmap with every derived layer (including collision cost) computed
    /// on full knowledge for the given robot.
    pub fn analyzed(&self, robot: &RobotModel, terrain: &TerrainParams) -> Result<MultiLayerGridMap> {
        let mut map = self.heights.clone();
        analyze(&mut map, robot, terrain);
        build_collision_cost_layer(&mut map, robot)?;
        Ok(map)
    }

    /// Writes the heightmap in the map text format plus a `<path>.params`
    /// sidecar holding the seed, start cell, friction and generator
    /// parameters.
    pub fn save(&self, path: &FsPath) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::from(e).with_path(path))?;
        let mut out = BufWriter::new(file);
        self.heights.write_text(&mut out).map_err(|e| e.with_path(path))?;
        out.flush().map_err(|e| Error::from(e).with_path(path))?;

        let sidecar = sidecar_path(path);
        let mut text = String::new();
        text.push_str(&format!("seed = {}\n", self.seed));
        text.push_str(&format!("effective_seed = {}\n", self.effective_seed));
        text.push_str(&format!("start_row = {}\n", self.start.row));
        text.push_str(&format!("start_col = {}\n", self.start.col));
        for (k, v) in self.params.to_kv() {
            text.push_str(&format!("{k} = {v}\n"));
        }
        fs::write(&sidecar, text).map_err(|e| Error::from(e).with_path(&sidecar))
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::from(e).with_path(path))?;
        let heights = MultiLayerGridMap::read_text(BufReader::new(file)).map_err(|e| e.with_path(path))?;
        if heights.known_count() != heights.len() {
            return Err(Error::InvalidParameter(format!("{}: truth worlds must be fully known", path.display())));
        }
        let sidecar = sidecar_path(path);
        let text = fs::read_to_string(&sidecar).map_err(|e| Error::from(e).with_path(&sidecar))?;
        let mut params = WorldParams::flat(heights.rows(), heights.cols());
        let (mut seed, mut effective_seed, mut start_row, mut start_col) = (0u64, None, None, None);
        for (line, key, value) in parse_kv(&text)? {
            use crate::config::parse_value as p;
            match key.as_str() {
                "seed" => seed = p(&key, &value)?,
                "effective_seed" => effective_seed = Some(p(&key, &value)?),
                "start_row" => start_row = Some(p(&key, &value)?),
                "start_col" => start_col = Some(p(&key, &value)?),
                _ => {
                    if !params.apply(&key, &value)? {
                        return Err(Error::parse(line, format!("unknown world key `{key}`")));
                    }
                }
            }
        }
        params.rows = heights.rows();
        params.cols = heights.cols();
        params.resolution = heights.resolution();
        let start = CellIndex::new(
            start_row.unwrap_or(heights.rows() / 2),
            start_col.unwrap_or(heights.cols() / 2),
        );
        if !heights.contains(start) {
            return Err(Error::InvalidParameter(format!("start cell {start} outside the world")));
        }
        Ok(Self {
            seed,
            effective_seed: effective_seed.unwrap_or(seed),
            friction: vec![params.friction; heights.len()],
            params,
            heights,
            start,
        })
    }
}

pub fn sidecar_path(path: &FsPath) -> PathBuf {
    let mut os = path.as_os_str().to_owned();
    os.push(".params");
    PathBuf::from(os)
}

/// Generates a world checked for connectivity against the default robot.
pub fn generate_world(seed: u64, params: &WorldParams) -> Result<TruthWorld> {
    let terrain = TerrainParams::for_resolution(params.resolution);
    generate_world_for(seed, params, &RobotModel::default(), &terrain)
}

/// Generates a world whose start cell is traversable for `robot` and from
/// which traversable ground reaches at least `min_reach` meters. On failure
/// the seed is bumped by one, up to [`MAX_GENERATION_ATTEMPTS`] times.
pub fn generate_world_for(seed: u64, params: &WorldParams, robot: &RobotModel, terrain: &TerrainParams) -> Result<TruthWorld> {
    params.validate()?;
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let effective_seed = seed.wrapping_add(attempt as u64);
        let world = build(seed, effective_seed, params)?;
        if reach_ok(&world, robot, terrain) {
            return Ok(world);
        }
    }
    Err(Error::GenerationFailed {
        seed,
        attempts: MAX_GENERATION_ATTEMPTS,
    })
}

fn reach_ok(world: &TruthWorld, robot: &RobotModel, terrain: &TerrainParams) -> bool {
    let mut map = world.heights.clone();
    analyze(&mut map, robot, terrain);
    if !is_traversable(&map, world.start) {
        return false;
    }
    let start_xy = map.cell_center(world.start);
    let mut seen = vec![false; map.len()];
    let mut queue = VecDeque::from([world.start]);
    seen[map.offset(world.start)] = true;
    let mut reach: f64 = 0.0;
    while let Some(cell) = queue.pop_front() {
        let [x, y] = map.cell_center(cell);
        reach = reach.max((x - start_xy[0]).hypot(y - start_xy[1]));
        if reach >= world.params.min_reach {
            return true;
        }
        for (dr, dc) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
            if let Some(next) = map.offset_cell(cell, dr, dc) {
                let i = map.offset(next);
                if !seen[i] && is_traversable(&map, next) {
                    seen[i] = true;
                    queue.push_back(next);
                }
            }
        }
    }
    reach >= world.params.min_reach
}

fn build(seed: u64, effective_seed: u64, params: &WorldParams) -> Result<TruthWorld> {
    let mut rng = ChaCha8Rng::seed_from_u64(effective_seed);
    let (rows, cols, res) = (params.rows, params.cols, params.resolution);
    let mut heights = MultiLayerGridMap::new(rows, cols, res, [0.0, 0.0])?;
    let len = rows * cols;
    let center = |i: usize| -> [f64; 2] { [((i % cols) as f64 + 0.5) * res, ((i / cols) as f64 + 0.5) * res] };
    let start = CellIndex::new(rows / 2, cols / 2);
    let start_xy = heights.cell_center(start);

    let perlin = Perlin::new(rng.gen());
    let mut floor: Vec<f64> = (0..len)
        .map(|i| {
            let [x, y] = center(i);
            params.slope_amplitude * perlin.get([x / params.slope_wavelength, y / params.slope_wavelength])
        })
        .collect();

    let mut open = vec![params.corridor_count == 0; len];
    if params.corridor_count > 0 {
        carve_network(&mut open, params, start_xy, &mut rng);
    }
    let open_area = open.iter().filter(|&&o| o).count() as f64 * res * res;

    let count_for = |density: f64, rng: &mut ChaCha8Rng| -> usize {
        let expected = density * open_area / 100.0;
        let whole = expected.floor();
        whole as usize + usize::from(rng.gen::<f64>() < expected - whole)
    };
    let pick_site = |open: &[bool], margin: f64, rng: &mut ChaCha8Rng| -> Option<[f64; 2]> {
        for _ in 0..200 {
            let i = rng.gen_range(0..len);
            let p = center(i);
            if open[i] && (p[0] - start_xy[0]).hypot(p[1] - start_xy[1]) >= params.start_clearance + margin {
                return Some(p);
            }
        }
        None
    };

    for _ in 0..count_for(params.mound_density, &mut rng) {
        let Some(site) = pick_site(&open, params.mound_radius, &mut rng) else { break };
        let slope = rng.gen_range(params.mound_slope_min_deg..=params.mound_slope_max_deg).to_radians();
        stamp_disk(rows, cols, res, site, params.mound_radius, |i, d| {
            if open[i] {
                floor[i] += (params.mound_radius - d) * slope.tan();
            }
        });
    }
    for _ in 0..count_for(params.rough_patch_density, &mut rng) {
        let Some(site) = pick_site(&open, params.rough_patch_radius, &mut rng) else { break };
        let mut bumps = Vec::new();
        stamp_disk(rows, cols, res, site, params.rough_patch_radius, |i, _| bumps.push(i));
        for i in bumps {
            let bump = rng.gen_range(-params.rough_amplitude..=params.rough_amplitude);
            if open[i] {
                floor[i] += bump;
            }
        }
    }
    for _ in 0..count_for(params.obstacle_density, &mut rng) {
        let radius = rng.gen_range(0.5..=1.0);
        let Some(site) = pick_site(&open, radius, &mut rng) else { break };
        stamp_disk(rows, cols, res, site, radius, |i, _| open[i] = false);
    }

    for i in 0..len {
        let h = if open[i] { floor[i] } else { floor[i] + params.wall_height };
        heights.set_exact_elevation(heights.index_of(i), h);
    }
    Ok(TruthWorld {
        seed,
        effective_seed,
        friction: vec![params.friction; len],
        params: params.clone(),
        heights,
        start,
    })
}

/// Carves a tree of corridors: every new node joins the nearest existing one
/// through a bent segment, and every node gets a round room.
fn carve_network(open: &mut [bool], params: &WorldParams, start_xy: [f64; 2], rng: &mut ChaCha8Rng) {
    let (rows, cols, res) = (params.rows, params.cols, params.resolution);
    let half_width = params.corridor_width / 2.0;
    let margin = params.room_radius.max(half_width) + 2.0 * res;
    let (w, h) = (cols as f64 * res, rows as f64 * res);
    let mut nodes = vec![start_xy];
    let mut segments = Vec::new();
    for _ in 0..params.corridor_count {
        let p = if w > 2.0 * margin && h > 2.0 * margin {
            [rng.gen_range(margin..w - margin), rng.gen_range(margin..h - margin)]
        } else {
            [w / 2.0, h / 2.0]
        };
        let nearest = *nodes
            .iter()
            .min_by(|a, b| dist(**a, p).total_cmp(&dist(**b, p)))
            .expect("start node present");
        let length = dist(nearest, p);
        let bend = rng.gen_range(-0.25..=0.25) * length;
        let (nx, ny) = if length > 0.0 {
            (-(p[1] - nearest[1]) / length, (p[0] - nearest[0]) / length)
        } else {
            (0.0, 0.0)
        };
        let mid = [
            ((nearest[0] + p[0]) / 2.0 + bend * nx).clamp(margin, (w - margin).max(margin)),
            ((nearest[1] + p[1]) / 2.0 + bend * ny).clamp(margin, (h - margin).max(margin)),
        ];
        segments.push((nearest, mid));
        segments.push((mid, p));
        nodes.push(p);
    }
    for (a, b) in segments {
        for (i, cell) in open.iter_mut().enumerate() {
            let c = [((i % cols) as f64 + 0.5) * res, ((i / cols) as f64 + 0.5) * res];
            if segment_distance(c, a, b) <= half_width {
                *cell = true;
            }
        }
    }
    for node in nodes {
        stamp_disk(rows, cols, res, node, params.room_radius, |i, _| open[i] = true);
    }
    // Solid rim so nothing is carved through the map edge.
    for row in 0..rows {
        for col in 0..cols {
            if row == 0 || col == 0 || row == rows - 1 || col == cols - 1 {
                open[row * cols + col] = false;
            }
        }
    }
}

fn stamp_disk(rows: usize, cols: usize, res: f64, site: [f64; 2], radius: f64, mut f: impl FnMut(usize, f64)) {
    let col_lo = (((site[0] - radius) / res).floor().max(0.0)) as usize;
    let col_hi = (((site[0] + radius) / res).ceil() as usize).min(cols);
    let row_lo = (((site[1] - radius) / res).floor().max(0.0)) as usize;
    let row_hi = (((site[1] + radius) / res).ceil() as usize).min(rows);
    for row in row_lo..row_hi {
        for col in col_lo..col_hi {
            let c = [(col as f64 + 0.5) * res, (row as f64 + 0.5) * res];
            let d = dist(c, site);
            if d <= radius {
                f(row * cols + col, d);
            }
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (abx, aby) = (b[0] - a[0], b[1] - a[1]);
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * abx + (p[1] - a[1]) * aby) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    dist(p, [a[0] + t * abx, a[1] + t * aby])
}
