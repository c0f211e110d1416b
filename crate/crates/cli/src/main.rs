use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use riskplan::config::Config;
use riskplan::experiment::{aggregate, load_world, run_experiment, ExperimentSpec, Report, WorldSource};
use riskplan::sim::{Mode, WorldParams};

/// Risk-aware exploration experiments on procedural 2.5D worlds.
#[derive(Parser)]
#[command(name = "riskplan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run missions and write per-mission CSV logs plus an aggregate report.
    Run(RunArgs),
    /// Recompute the aggregate report from existing mission logs.
    Aggregate(AggregateArgs),
    /// Generate a world and save it in the map text format.
    GenWorld(GenWorldArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    RiskAware,
    Baseline,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<Mode> {
        match self {
            ModeArg::RiskAware => vec![Mode::RiskAware],
            ModeArg::Baseline => vec![Mode::Baseline],
            ModeArg::Both => Mode::ALL.to_vec(),
        }
    }
}

#[derive(clap::Args)]
struct RunArgs {
    /// World preset (flat, default, hazard_dense) or a saved world file.
    #[arg(long, default_value = "default")]
    world: String,
    /// Seeds: single values, comma lists and half-open ranges such as 0..10.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "0")]
    seed: Vec<String>,
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,
    /// Mission duration in seconds; defaults to the configured value.
    #[arg(long)]
    duration: Option<u32>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Log planning wall-clock time (runs missions one at a time).
    #[arg(long)]
    timing: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(clap::Args)]
struct AggregateArgs {
    /// Directory receiving report.csv and summary.txt.
    #[arg(long)]
    out: PathBuf,
    /// Mission logs; defaults to every mission_*.csv in the output directory.
    files: Vec<PathBuf>,
}

#[derive(clap::Args)]
struct GenWorldArgs {
    #[arg(long, default_value = "default")]
    world: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Destination of the map file; a `.params` sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_seeds(tokens: &[String]) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for token in tokens {
        let token = token.trim();
        if let Some((a, b)) = token.split_once("..") {
            let (a, b): (u64, u64) = (
                a.parse().with_context(|| format!("bad seed range `{token}`"))?,
                b.parse().with_context(|| format!("bad seed range `{token}`"))?,
            );
            if a >= b {
                bail!("empty seed range `{token}`");
            }
            seeds.extend(a..b);
        } else {
            seeds.push(token.parse().with_context(|| format!("bad seed `{token}`"))?);
        }
    }
    Ok(seeds)
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn world_source(world: &str) -> WorldSource {
    if WorldParams::PRESETS.contains(&world) {
        WorldSource::Preset(world.to_string())
    } else {
        WorldSource::File(PathBuf::from(world))
    }
}

fn run(args: RunArgs) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let spec = ExperimentSpec {
        world: world_source(&args.world),
        seeds: parse_seeds(&args.seed)?,
        duration: args.duration.unwrap_or(config.sim.duration),
        modes: args.mode.modes(),
        config,
        out_dir: args.out,
        timing: args.timing,
        jobs: if args.timing { 1 } else { args.jobs },
    };
    let outcome = run_experiment(&spec)?;
    print_report(&outcome.report, &spec.out_dir);
    Ok(())
}

fn aggregate_cmd(args: AggregateArgs) -> Result<()> {
    let files = if args.files.is_empty() {
        let mut found: Vec<PathBuf> = std::fs::read_dir(&args.out)
            .with_context(|| format!("reading {}", args.out.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("mission_") && n.ends_with(".csv"))
            })
            .collect();
        found.sort();
        found
    } else {
        args.files
    };
    let report = aggregate(&files)?;
    std::fs::create_dir_all(&args.out)?;
    report.save(&args.out)?;
    print_report(&report, &args.out);
    Ok(())
}

fn gen_world(args: GenWorldArgs) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let spec = ExperimentSpec {
        world: WorldSource::Preset(args.world),
        seeds: vec![args.seed],
        duration: config.sim.duration,
        modes: Mode::ALL.to_vec(),
        config,
        out_dir: PathBuf::new(),
        timing: false,
        jobs: 1,
    };
    let world = load_world(&spec, args.seed)?;
    world.save(&args.out)?;
    println!(
        "wrote {} ({}×{} cells, seed {}, effective seed {})",
        args.out.display(),
        world.heights.rows(),
        world.heights.cols(),
        world.seed,
        world.effective_seed
    );
    Ok(())
}

fn print_report(report: &Report, dir: &Path) {
    print!("{}", report.summary());
    println!("report written to {}", dir.join("report.csv").display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => run(a),
        Command::Aggregate(a) => aggregate_cmd(a),
        Command::GenWorld(a) => gen_world(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
