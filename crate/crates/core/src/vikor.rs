//! Mission-dependent criterion weights, VIKOR compromise ranking, and the
//! final risk-versus-gain path selection.
//!
//! All criteria are cost-type: for each column the ideal value `f*` is the
//! column minimum and the anti-ideal `f⁻` the maximum. A column, or an
//! S / R spread, with zero range cannot discriminate between alternatives and
//! contributes nothing.

use std::io::{Read, Write};

use crate::costs::PathCosts;
use crate::error::{Error, Result};
use crate::grid_map::Path;

/// Column order of the path criteria matrix.
pub const CRITERIA: [&str; 4] = ["risk", "distance", "time", "energy"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MissionState {
    /// s
    pub elapsed: f64,
    /// Mission duration (s).
    pub mission_duration: f64,
    /// m
    pub distance_traversed: f64,
    /// Distance budget (m).
    pub max_distance: f64,
    /// Remaining battery life (s).
    pub battery_remaining: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionWeights {
    pub risk: f64,
    pub distance: f64,
    pub time: f64,
    pub energy: f64,
}

impl CriterionWeights {
    /// Weights in [`CRITERIA`] order.
    pub fn as_array(&self) -> [f64; 4] {
        [self.risk, self.distance, self.time, self.energy]
    }
}

/// Time and distance weights are the consumed fractions of the mission
/// budgets, the energy weight is the reciprocal of the remaining battery life
/// in hours; each is clamped to `[0, 1]`. Risk gets whatever the other three
/// leave, so it starts near 1 and decays as the mission progresses.
pub fn dynamic_weights(state: &MissionState) -> CriterionWeights {
    let time = (state.elapsed / state.mission_duration).clamp(0.0, 1.0);
    let distance = (state.distance_traversed / state.max_distance).clamp(0.0, 1.0);
    let battery_hours = state.battery_remaining / 3600.0;
    let energy = if battery_hours > 0.0 {
        (1.0 / battery_hours).clamp(0.0, 1.0)
    } else {
        1.0
    };
    CriterionWeights {
        risk: 1.0 - (distance + time + energy) / 3.0,
        distance,
        time,
        energy,
    }
}

/// Alternatives × criteria table of non-negative cost values.
#[derive(Debug, Clone, PartialEq)]
pub struct CriteriaMatrix {
    criteria: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CriteriaMatrix {
    pub fn new(criteria: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != criteria.len() {
                return Err(Error::InvalidParameter(format!(
                    "alternative {i} has {} values for {} criteria",
                    row.len(),
                    criteria.len()
                )));
            }
            if let Some(v) = row.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("alternative {i} has non-finite value {v}")));
            }
        }
        Ok(Self { criteria, rows })
    }

    /// Matrix over the standard path criteria.
    pub fn from_paths(rows: Vec<[f64; 4]>) -> Result<Self> {
        Self::new(
            CRITERIA.iter().map(|s| s.to_string()).collect(),
            rows.into_iter().map(|r| r.to_vec()).collect(),
        )
    }

    pub fn criteria(&self) -> &[String] {
        &self.criteria
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn alternatives(&self) -> usize {
        self.rows.len()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(&self.criteria)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(|v| v.to_string()))?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let criteria = reader.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (n, record) in reader.records().enumerate() {
            let record = record?;
            let row = record
                .iter()
                .map(|field| {
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::parse(n + 2, format!("{field}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(criteria, rows)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VikorResult {
    /// Group utility per alternative.
    pub s: Vec<f64>,
    /// Individual regret per alternative.
    pub r: Vec<f64>,
    /// Compromise index per alternative; lower is better.
    pub q: Vec<f64>,
    pub selected: usize,
}

impl VikorResult {
    /// Alternatives ordered by ascending Q, ties by index.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.q.len()).collect();
        order.sort_by(|&a, &b| self.q[a].total_cmp(&self.q[b]).then(a.cmp(&b)));
        order
    }
}

/// VIKOR ranking with weight-of-majority `majority` (the υ parameter).
pub fn vikor_rank(matrix: &CriteriaMatrix, weights: &[f64], majority: f64) -> Result<VikorResult> {
    let m = matrix.alternatives();
    if m == 0 {
        return Err(Error::EmptyMatrix);
    }
    let n = matrix.criteria.len();
    if weights.len() != n {
        return Err(Error::InvalidParameter(format!("{} weights for {n} criteria", weights.len())));
    }
    let mut s = vec![0.0; m];
    let mut r = vec![0.0; m];
    for j in 0..n {
        let column = matrix.rows.iter().map(|row| row[j]);
        let best = column.clone().fold(f64::INFINITY, f64::min);
        let worst = column.fold(f64::NEG_INFINITY, f64::max);
        if worst == best {
            continue;
        }
        for (i, row) in matrix.rows.iter().enumerate() {
            let term = weights[j] * (best - row[j]) / (best - worst);
            s[i] += term;
            r[i] = f64::max(r[i], term);
        }
    }
    let spread = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    };
    let (s_best, s_worst) = spread(&s);
    let (r_best, r_worst) = spread(&r);
    let normalized = |v: f64, lo: f64, hi: f64| if hi == lo { 0.0 } else { (v - lo) / (hi - lo) };
    let q: Vec<f64> = (0..m)
        .map(|i| majority * normalized(s[i], s_best, s_worst) + (1.0 - majority) * normalized(r[i], r_best, r_worst))
        .collect();
    let selected = (0..m)
        .min_by(|&a, &b| q[a].total_cmp(&q[b]).then(a.cmp(&b)))
        .expect("at least one alternative");
    Ok(VikorResult { s, r, q, selected })
}

/// A planned path with its evaluated criteria.
#[derive(Debug, Clone, PartialEq)]
pub struct PathCandidate {
    pub path: Path,
    /// Mean per-waypoint risk.
    pub risk: f64,
    pub costs: PathCosts,
}

impl PathCandidate {
    /// Criterion values in [`CRITERIA`] order.
    pub fn criteria(&self) -> [f64; 4] {
        [self.risk, self.costs.distance, self.costs.time, self.costs.energy]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub q_gain: Vec<f64>,
    pub scores: Vec<f64>,
    pub vikor: VikorResult,
}

/// Min-max normalized gains; all ones when every gain is equal.
pub fn normalized_gains(gains: &[f64]) -> Vec<f64> {
    let lo = gains.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = gains.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return vec![1.0; gains.len()];
    }
    gains.iter().map(|g| (g - lo) / (hi - lo)).collect()
}

/// Scores `Q_gain·(1 − Q)` and returns the best one. Ties go to the lower
/// Q, then to the lower index.
pub fn select_by_score(q_gain: &[f64], q: &[f64]) -> (usize, Vec<f64>) {
    let scores: Vec<f64> = q_gain.iter().zip(q).map(|(g, q)| g - g * q).collect();
    let best = (0..scores.len())
        .min_by(|&a, &b| {
            scores[b]
                .total_cmp(&scores[a])
                .then(q[a].total_cmp(&q[b]))
                .then(a.cmp(&b))
        })
        .expect("non-empty");
    (best, scores)
}

/// Picks the candidate that best trades VIKOR cost rank against gain.
pub fn select_path(candidates: &[PathCandidate], weights: &CriterionWeights, majority: f64) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidateSet);
    }
    let matrix = CriteriaMatrix::from_paths(candidates.iter().map(PathCandidate::criteria).collect())?;
    let vikor = vikor_rank(&matrix, &weights.as_array(), majority)?;
    let gains: Vec<f64> = candidates.iter().map(|c| c.costs.gain).collect();
    let q_gain = normalized_gains(&gains);
    let (index, scores) = select_by_score(&q_gain, &vikor.q);
    Ok(Selection {
        index,
        q_gain,
        scores,
        vikor,
    })
}

/// Gain-greedy comparator: highest gain, then shortest distance, then lowest
/// index.
pub fn baseline_select(candidates: &[PathCandidate]) -> Result<usize> {
    (0..candidates.len())
        .min_by(|&a, &b| {
            let (ca, cb) = (&candidates[a].costs, &candidates[b].costs);
            cb.gain
                .total_cmp(&ca.gain)
                .then(ca.distance.total_cmp(&cb.distance))
                .then(a.cmp(&b))
        })
        .ok_or(Error::EmptyCandidateSet)
}
