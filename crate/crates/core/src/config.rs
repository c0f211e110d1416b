//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Robot, terrain and simulator
//! keys are bare names; world generator keys carry a `world.` prefix.
//!
//! ```text
//! # heavier robot, shorter sensor
//! mass = 80
//! max_slope_deg = 25
//! sensor_range = 8
//! world.mound_density = 0.5
//! ```

use std::fs;
use std::path::Path as FsPath;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::risk::RobotModel;
use crate::sim::{SimConfig, WorldParams};
use crate::terrain::TerrainParams;

/// Splits a configuration text into `(line, key, value)` triples.
pub fn parse_kv(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(n + 1, format!("expected `key = value`, got `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(Error::parse(n + 1, format!("empty key or value in `{line}`")));
        }
        out.push((n + 1, key.to_string(), value.to_string()));
    }
    Ok(out)
}

pub fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidParameter(format!("bad value `{value}` for `{key}`")))
}

/// A parameter struct that can take a named setting.
pub trait KvTarget {
    /// Applies `key`; returns `false` when the key is not one of ours.
    fn apply(&mut self, key: &str, value: &str) -> Result<bool>;
}

impl KvTarget for RobotModel {
    fn apply(&mut self, key: &str, value: &str) -> Result<bool> {
        let p = parse_value::<f64>;
        match key {
            "mass" => self.mass = p(key, value)?,
            "wheel_thickness" => self.wheel_thickness = p(key, value)?,
            "wheel_contact_length" => self.wheel_contact_length = p(key, value)?,
            "wheel_count" => self.wheel_count = parse_value(key, value)?,
            "max_slope_deg" => self.max_slope = p(key, value)?.to_radians(),
            "max_speed" => self.max_speed = p(key, value)?,
            "footprint_dim" => self.footprint_dim = p(key, value)?,
            "friction" => self.friction = p(key, value)?,
            "gravity" => self.gravity = p(key, value)?,
            "rolling_coefficient" => self.rolling_coefficient = p(key, value)?,
            "battery_hours" => self.battery_hours = p(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

impl KvTarget for TerrainParams {
    fn apply(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "smoothing_radius" => self.smoothing_radius = parse_value(key, value)?,
            "roughness_cap" => self.roughness_cap = parse_value(key, value)?,
            "confidence_k" => self.confidence_k = parse_value(key, value)?,
            "roughness_limit" => self.roughness_limit = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

impl KvTarget for SimConfig {
    fn apply(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "duration" => self.duration = parse_value(key, value)?,
            "planning_period" => self.planning_period = parse_value(key, value)?,
            "sensor_range" => self.sensor.range = parse_value(key, value)?,
            "sensor_height" => self.sensor.height = parse_value(key, value)?,
            "observation_variance" => self.sensor.variance = parse_value(key, value)?,
            "column_height" => self.column_height = parse_value(key, value)?,
            "max_goals" => self.max_goals = parse_value(key, value)?,
            "frontier_cluster_radius" => self.frontier_cluster_radius = parse_value(key, value)?,
            "majority" => self.majority = parse_value(key, value)?,
            "max_distance" => self.max_distance = parse_value(key, value)?,
            "baseline_step_limit" => self.baseline_step_limit = parse_value(key, value)?,
            "baseline_clearance" => self.baseline_clearance = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

/// Settings loaded from a configuration file. Terrain and world settings are
/// kept as overrides because their defaults depend on the world.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub robot: RobotModel,
    pub sim: SimConfig,
    terrain_overrides: Vec<(String, String)>,
    world_overrides: Vec<(String, String)>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Config::default();
        let mut probe_terrain = TerrainParams::default();
        let mut probe_world = WorldParams::preset("default")?;
        for (line, key, value) in parse_kv(text)? {
            let located = |e: Error| match e {
                Error::InvalidParameter(m) => Error::parse(line, m),
                other => other,
            };
            if let Some(world_key) = key.strip_prefix("world.") {
                if !probe_world.apply(world_key, &value).map_err(located)? {
                    return Err(Error::parse(line, format!("unknown world key `{world_key}`")));
                }
                config.world_overrides.push((world_key.to_string(), value));
            } else if probe_terrain.apply(&key, &value).map_err(located)? {
                config.terrain_overrides.push((key, value));
            } else if !config.robot.apply(&key, &value).map_err(located)?
                && !config.sim.apply(&key, &value).map_err(located)?
            {
                return Err(Error::parse(line, format!("unknown key `{key}`")));
            }
        }
        config.robot.validate()?;
        config.sim.validate()?;
        Ok(config)
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).with_path(path))?;
        Self::parse(&text)
    }

    /// Terrain parameters for a grid of the given resolution.
    pub fn terrain_for(&self, resolution: f64) -> Result<TerrainParams> {
        let mut terrain = TerrainParams::for_resolution(resolution);
        for (k, v) in &self.terrain_overrides {
            terrain.apply(k, v)?;
        }
        terrain.validate(resolution)?;
        Ok(terrain)
    }

    /// World parameters of a preset with this configuration's overrides.
    pub fn world_params(&self, preset: &str) -> Result<WorldParams> {
        let mut params = WorldParams::preset(preset)?;
        for (k, v) in &self.world_overrides {
            params.apply(k, v)?;
        }
        params.validate()?;
        Ok(params)
    }
}
