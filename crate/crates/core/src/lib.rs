//! Risk-aware exploration planning for ground robots on 2.5D terrain.
//!
//! The crate is organised bottom-up:
//!
//! * [`grid_map`]: multi-layer elevation grid, coordinate transforms, map text format.
//! * [`terrain`]: elevation fusion and the derived smoothed / roughness / slope /
//!   traversability layers.
//! * [`risk`]: collision, traversability and slip risk, per pose and per path.
//! * [`costs`]: energy, distance, time and exploration gain of a candidate path.
//! * [`vikor`]: mission-dependent criterion weights, VIKOR ranking and the
//!   risk-versus-gain path selection.
//! * [`sim`]: procedural truth worlds, line-of-sight sensing, frontier detection,
//!   candidate planning and the mission loop.
//! * [`experiment`]: seeded batch runs, mission CSV logs and aggregate reports.
//! * [`config`]: flat `key = value` configuration files.

// Parameter checks are written `!(x > 0.0)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod costs;
pub mod error;
pub mod experiment;
pub mod grid_map;
pub mod risk;
pub mod sim;
pub mod terrain;
pub mod vikor;

pub use error::{Error, Result};
pub use grid_map::{CellIndex, CellRegion, LayerId, MultiLayerGridMap, Path, Pose};
pub use risk::{RiskBreakdown, RobotModel};
pub use terrain::TerrainParams;

/// Standard gravity, m/s².
pub const GRAVITY: f64 = 9.81;
