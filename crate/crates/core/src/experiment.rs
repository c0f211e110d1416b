//! Seeded batch runs and aggregate reports.
//!
//! A run writes one `mission_<mode>_seed<seed>.csv` per mission, then a
//! long-format `report.csv` (`mode,metric,key,value`) and a human-readable
//! `summary.txt` computed from those files. Re-running the same experiment
//! overwrites the same files with the same content (when timing is off).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path as FsPath, PathBuf};

use rayon::prelude::*;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::sim::mission::{run_mission, MissionLog, MissionRecord};
use crate::sim::world::{generate_world_for, TruthWorld};
use crate::sim::Mode;

#[derive(Debug, Clone, PartialEq)]
pub enum WorldSource {
    /// Generator preset, one world per seed.
    Preset(String),
    /// A saved world shared by every seed.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub world: WorldSource,
    pub seeds: Vec<u64>,
    /// Overrides the configured mission duration (s).
    pub duration: u32,
    pub modes: Vec<Mode>,
    pub config: Config,
    pub out_dir: PathBuf,
    /// Log wall-clock planning time. Makes the logs non-reproducible.
    pub timing: bool,
    /// Worker threads; 0 uses all cores.
    pub jobs: usize,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::InvalidSpec("no seeds".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::InvalidSpec("no modes".into()));
        }
        if self.duration == 0 {
            return Err(Error::InvalidSpec("duration must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutcome {
    pub logs: Vec<MissionLog>,
    pub files: Vec<PathBuf>,
    pub report: Report,
}

pub fn mission_file_name(mode: Mode, seed: u64) -> String {
    format!("mission_{mode}_seed{seed}.csv")
}

/// Mode and seed encoded in a mission log file name.
pub fn parse_mission_file_name(path: &FsPath) -> Result<(Mode, u64)> {
    let bad = || Error::InvalidParameter(format!("{}: not a mission_<mode>_seed<seed>.csv file", path.display()));
    let name = path.file_name().and_then(|n| n.to_str()).ok_or_else(bad)?;
    let stem = name.strip_prefix("mission_").and_then(|s| s.strip_suffix(".csv")).ok_or_else(bad)?;
    let (mode, seed) = stem.rsplit_once("_seed").ok_or_else(bad)?;
    Ok((mode.parse().map_err(|_| bad())?, seed.parse().map_err(|_| bad())?))
}

pub fn load_world(spec: &ExperimentSpec, seed: u64) -> Result<TruthWorld> {
    match &spec.world {
        WorldSource::Preset(name) => {
            let params = spec.config.world_params(name)?;
            let terrain = spec.config.terrain_for(params.resolution)?;
            generate_world_for(seed, &params, &spec.config.robot, &terrain)
        }
        WorldSource::File(path) => {
            let mut world = TruthWorld::load(path)?;
            world.seed = seed;
            Ok(world)
        }
    }
}

/// Runs every (seed, mode) mission, writes the logs and the report.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    fs::create_dir_all(&spec.out_dir).map_err(|e| Error::from(e).with_path(&spec.out_dir))?;
    let sim = crate::sim::SimConfig {
        duration: spec.duration,
        ..spec.config.sim
    };
    let jobs: Vec<(u64, Mode)> = spec
        .seeds
        .iter()
        .flat_map(|&seed| spec.modes.iter().map(move |&mode| (seed, mode)))
        .collect();
    let run_one = |&(seed, mode): &(u64, Mode)| -> Result<MissionLog> {
        let world = load_world(spec, seed)?;
        let terrain = spec.config.terrain_for(world.heights.resolution())?;
        run_mission(&world, &spec.config.robot, &terrain, &sim, mode, spec.timing)
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.jobs)
        .build()
        .map_err(|e| Error::InvalidSpec(format!("thread pool: {e}")))?;
    let logs: Vec<MissionLog> = pool.install(|| jobs.par_iter().map(run_one).collect::<Result<_>>())?;

    let mut files = Vec::with_capacity(logs.len());
    for log in &logs {
        let path = spec.out_dir.join(mission_file_name(log.mode, log.seed));
        log.save(&path)?;
        files.push(path);
    }
    let report = aggregate(&files)?;
    report.save(&spec.out_dir)?;
    Ok(ExperimentOutcome { logs, files, report })
}

/// Aggregate statistics of all runs of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSummary {
    pub mode: Mode,
    pub runs: usize,
    pub final_coverage_mean: f64,
    /// Sample variance; 0 for a single run.
    pub final_coverage_variance: f64,
    pub single_run: bool,
    /// Mean risk over all seconds of all runs.
    pub mean_risk: f64,
    pub max_risk: f64,
    /// `(t_s, mean risk across runs)`.
    pub risk_per_second: Vec<(u32, f64)>,
    /// `(seed, t_s, risk)` of every risk sample above `Q3 + 1.5·IQR` of all
    /// samples of this mode.
    pub risk_outliers: Vec<(u64, u32, f64)>,
    /// Runs that contain a lethal action.
    pub lethal_runs: usize,
    pub plan_ms_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub modes: Vec<ModeSummary>,
    /// `100·(risk_aware − baseline)/baseline` of the mean final coverage,
    /// when both modes are present and the baseline coverage is non-zero.
    pub coverage_change_percent: Option<f64>,
    /// The same relative change of the mean perceived risk.
    pub risk_change_percent: Option<f64>,
}

impl Report {
    pub fn mode(&self, mode: Mode) -> Option<&ModeSummary> {
        self.modes.iter().find(|m| m.mode == mode)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(["mode", "metric", "key", "value"])?;
        for m in &self.modes {
            let mode = m.mode.name();
            let mut row = |metric: &str, key: String, value: String| writer.write_record([mode, metric, &key, &value]);
            row("runs", String::new(), m.runs.to_string())?;
            row("final_coverage_mean", String::new(), m.final_coverage_mean.to_string())?;
            row("final_coverage_variance", String::new(), m.final_coverage_variance.to_string())?;
            row("single_run", String::new(), u8::from(m.single_run).to_string())?;
            row("mean_risk", String::new(), m.mean_risk.to_string())?;
            row("max_risk", String::new(), m.max_risk.to_string())?;
            row("lethal_runs", String::new(), m.lethal_runs.to_string())?;
            if let Some(ms) = m.plan_ms_mean {
                row("plan_ms_mean", String::new(), ms.to_string())?;
            }
            for (t, r) in &m.risk_per_second {
                row("risk_per_second", t.to_string(), r.to_string())?;
            }
            for (seed, t, r) in &m.risk_outliers {
                row("risk_outlier", format!("seed{seed}_t{t}"), r.to_string())?;
            }
        }
        if let Some(p) = self.coverage_change_percent {
            writer.write_record(["comparison", "coverage_change_percent", "", &p.to_string()])?;
        }
        if let Some(p) = self.risk_change_percent {
            writer.write_record(["comparison", "risk_change_percent", "", &p.to_string()])?;
        }
        let bytes = writer.into_inner().map_err(|e| Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for m in &self.modes {
            let _ = writeln!(s, "{}: {} run(s)", m.mode, m.runs);
            let spread = if m.single_run {
                "single run, no variance".to_string()
            } else {
                format!("variance {:.3}", m.final_coverage_variance)
            };
            let _ = writeln!(s, "  final coverage   {:.3} m³ ({spread})", m.final_coverage_mean);
            let _ = writeln!(s, "  mean risk        {:.4}", m.mean_risk);
            let _ = writeln!(s, "  max risk         {:.4}", m.max_risk);
            let _ = writeln!(s, "  risk outliers    {} sample(s)", m.risk_outliers.len());
            let _ = writeln!(s, "  lethal runs      {}", m.lethal_runs);
            if let Some(ms) = m.plan_ms_mean {
                let _ = writeln!(s, "  mean plan time   {ms:.3} ms");
            }
        }
        if let Some(p) = self.coverage_change_percent {
            let _ = writeln!(s, "coverage change (risk_aware vs baseline): {p:+.2}%");
        }
        if let Some(p) = self.risk_change_percent {
            let _ = writeln!(s, "risk change (risk_aware vs baseline):     {p:+.2}%");
        }
        s
    }

    pub fn save(&self, dir: &FsPath) -> Result<()> {
        let report = dir.join("report.csv");
        fs::write(&report, self.to_csv()?).map_err(|e| Error::from(e).with_path(&report))?;
        let summary = dir.join("summary.txt");
        fs::write(&summary, self.summary()).map_err(|e| Error::from(e).with_path(&summary))
    }
}

/// Reads mission logs (mode and seed taken from the file names) and
/// computes per-mode statistics.
pub fn aggregate(files: &[PathBuf]) -> Result<Report> {
    if files.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut by_mode: BTreeMap<Mode, Vec<(u64, Vec<MissionRecord>)>> = BTreeMap::new();
    for path in files {
        let (mode, seed) = parse_mission_file_name(path)?;
        let file = fs::File::open(path).map_err(|e| Error::from(e).with_path(path))?;
        let records = MissionLog::read_records(file).map_err(|e| e.with_path(path))?;
        by_mode.entry(mode).or_default().push((seed, records));
    }
    let modes: Vec<ModeSummary> = by_mode
        .into_iter()
        .map(|(mode, mut runs)| {
            runs.sort_by_key(|(seed, _)| *seed);
            summarize(mode, &runs)
        })
        .collect();
    let find = |mode| modes.iter().find(|m: &&ModeSummary| m.mode == mode);
    let change = |value: fn(&ModeSummary) -> f64| match (find(Mode::RiskAware), find(Mode::Baseline)) {
        (Some(r), Some(b)) => percent_change(value(r), value(b)),
        _ => None,
    };
    Ok(Report {
        coverage_change_percent: change(|m| m.final_coverage_mean),
        risk_change_percent: change(|m| m.mean_risk),
        modes,
    })
}

/// `100·(value − reference)/reference`, undefined for a zero reference.
pub fn percent_change(value: f64, reference: f64) -> Option<f64> {
    (reference != 0.0).then(|| 100.0 * (value - reference) / reference)
}

fn summarize(mode: Mode, runs: &[(u64, Vec<MissionRecord>)]) -> ModeSummary {
    let finals: Vec<f64> = runs
        .iter()
        .map(|(_, r)| r.last().map_or(0.0, |x| x.coverage_m3))
        .collect();
    let n = finals.len() as f64;
    let mean = finals.iter().sum::<f64>() / n;
    let variance = if finals.len() > 1 {
        finals.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let mut per_second: BTreeMap<u32, (f64, usize)> = BTreeMap::new();
    let (mut risk_sum, mut risk_count, mut max_risk) = (0.0, 0usize, 0.0f64);
    let (mut plan_sum, mut plan_count) = (0.0, 0usize);
    for (_, records) in runs {
        for r in records {
            let e = per_second.entry(r.t_s).or_insert((0.0, 0));
            e.0 += r.risk_total;
            e.1 += 1;
            risk_sum += r.risk_total;
            risk_count += 1;
            max_risk = max_risk.max(r.risk_total);
            if let Some(ms) = r.plan_ms {
                plan_sum += ms;
                plan_count += 1;
            }
        }
    }
    let risk_per_second: Vec<(u32, f64)> = per_second.into_iter().map(|(t, (s, c))| (t, s / c as f64)).collect();
    let samples: Vec<f64> = runs.iter().flat_map(|(_, r)| r.iter().map(|x| x.risk_total)).collect();
    let risk_outliers = match upper_fence(&samples) {
        Some(fence) => runs
            .iter()
            .flat_map(|(seed, r)| r.iter().map(move |x| (*seed, x.t_s, x.risk_total)))
            .filter(|&(_, _, r)| r > fence)
            .collect(),
        None => Vec::new(),
    };
    ModeSummary {
        mode,
        runs: runs.len(),
        final_coverage_mean: mean,
        final_coverage_variance: variance,
        single_run: runs.len() == 1,
        mean_risk: if risk_count > 0 { risk_sum / risk_count as f64 } else { 0.0 },
        max_risk,
        risk_per_second,
        risk_outliers,
        lethal_runs: runs.iter().filter(|(_, r)| r.iter().any(|x| x.lethal != 0)).count(),
        plan_ms_mean: (plan_count > 0).then(|| plan_sum / plan_count as f64),
    }
}

/// Linearly interpolated quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `Q3 + 1.5·IQR`, or `None` for an empty series.
pub fn upper_fence(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (q1, q3) = (quantile(&sorted, 0.25), quantile(&sorted, 0.75));
    Some(q3 + 1.5 * (q3 - q1))
}
