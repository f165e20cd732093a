use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use usable_info::experiment::{mean_ratios, run_sweep, Method, SweepConfig, SweepRow};
use usable_info::Execution;

use super::{expand_scenario, SimFlags};
use crate::config::{sidecar, usage, Layered, RunRecord};

const DEFAULT_SIZES: [usize; 6] = [10, 30, 100, 300, 1000, 5000];
const DEFAULT_REPLICATES: u64 = 10;

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimFlags,
    /// Sample sizes [default: 10,30,100,300,1000,5000].
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Explicit seed list; otherwise `--replicates` seeds from `--seed`.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    /// First seed of a consecutive run.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of consecutive seeds [default: 10].
    #[arg(long)]
    pub replicates: Option<u64>,
    /// Families and baselines [default: linear_gaussian].
    #[arg(long, value_delimiter = ',', alias = "families")]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub mode: Option<String>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Long-format CSV; the run record goes to `<output>.run.json`.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Deserialize)]
struct SweepCliConfig {
    #[serde(flatten)]
    sweep: SweepConfig,
    output: PathBuf,
    #[serde(default)]
    jobs: Option<usize>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scenario: &'a str,
    family: &'a str,
    #[serde(rename = "N")]
    n: usize,
    seed: u64,
    wrong_edges_ratio: f64,
    total_weight: f64,
}

#[derive(Serialize)]
struct MeanRatio {
    family: String,
    n: usize,
    mean_wrong_edges_ratio: f64,
}

#[derive(Serialize)]
struct SweepResults {
    csv: PathBuf,
    rows: usize,
    means: Vec<MeanRatio>,
}

pub fn run(args: SweepArgs) -> Result<()> {
    let started = Instant::now();
    let mut config = Layered::load(args.config.as_deref())?;
    args.sim.apply(&mut config, "");
    expand_scenario(&mut config, "scenario");
    config.set("sizes", args.sizes);
    config.default_value("sizes", DEFAULT_SIZES);
    config.set("methods", args.methods);
    config.default_value("methods", ["linear_gaussian"]);
    config.expand_each::<Method, _>("methods")?;
    config.set("mode", args.mode);
    config.set("jobs", args.jobs);
    config.set("output", args.output);

    config.set("seeds", args.seeds);
    if !config.has("seeds") {
        let base = config.resolve_seed("seed", args.seed)?;
        config.set("replicates", args.replicates);
        config.default_value("replicates", DEFAULT_REPLICATES);
        let k = config.parse_key::<u64>("replicates")?;
        config.set("seeds", Some((base..base + k).collect::<Vec<u64>>()));
    }

    let cfg: SweepCliConfig = config.parse()?;
    let rows = match cfg.jobs {
        Some(0) => return Err(usage("--jobs must be at least 1")),
        Some(1) => run_sweep(&cfg.sweep, Execution::Sequential)?,
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .context("building the worker pool")?
            .install(|| run_sweep(&cfg.sweep, Execution::Parallel))?,
        None => run_sweep(&cfg.sweep, Execution::Parallel)?,
    };
    write_rows(&cfg.output, &rows)?;

    let results = SweepResults {
        csv: cfg.output.clone(),
        rows: rows.len(),
        means: mean_ratios(&rows)
            .into_iter()
            .map(|(family, n, mean)| MeanRatio {
                family,
                n,
                mean_wrong_edges_ratio: mean,
            })
            .collect(),
    };
    let seeds = cfg.sweep.seeds.clone();
    RunRecord::new("sweep", config.into_value(), seeds, started, results)
        .emit(Some(&sidecar(&cfg.output, "run.json")))
}

fn write_rows(path: &PathBuf, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    for r in rows {
        w.serialize(CsvRow {
            scenario: &r.scenario,
            family: &r.family,
            n: r.n,
            seed: r.seed,
            wrong_edges_ratio: r.wrong_edges_ratio,
            total_weight: r.total_weight,
        })?;
    }
    w.flush()?;
    Ok(())
}
