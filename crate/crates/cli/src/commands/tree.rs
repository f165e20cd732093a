use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use usable_info::baselines::BatchSpec;
use usable_info::experiment::{learn_tree, Method, TreeResult};
use usable_info::{simulate, CompareMode, Execution, SimulationConfig};

use super::{expand_scenario, SimFlags};
use crate::config::{usage, Layered, RunRecord};
use crate::io::{read_dataset, read_tree, write_matrix};

#[derive(Args, Debug)]
pub struct TreeArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset CSV; otherwise the simulation flags generate one.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimFlags,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Family name or baseline (cpc, nwj, cpc_quadratic, ...).
    #[arg(long, alias = "family")]
    pub method: Option<String>,
    /// Ground-truth tree (a `simulate` truth record).
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// `undirected` or `directed` edge comparison.
    #[arg(long)]
    pub mode: Option<String>,
    /// Also write the edge-weight matrix as CSV.
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Deserialize)]
struct TreeConfig {
    #[serde(default)]
    data: Option<PathBuf>,
    #[serde(default)]
    simulation: Option<SimulationConfig>,
    method: Method,
    #[serde(default)]
    truth: Option<PathBuf>,
    #[serde(default)]
    mode: CompareMode,
    #[serde(default)]
    baseline: BatchSpec,
    #[serde(default)]
    scores: Option<PathBuf>,
    #[serde(default)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct TreeResults {
    method: String,
    edges: Vec<(usize, usize)>,
    #[serde(flatten)]
    result: TreeResult,
}

pub fn run(args: TreeArgs) -> Result<()> {
    let started = Instant::now();
    let mut config = Layered::load(args.config.as_deref())?;
    config.set("data", args.data);
    args.sim.apply(&mut config, "simulation");
    expand_scenario(&mut config, "simulation.scenario");
    config.set("simulation.n", args.n);
    config.set("method", args.method);
    config.default_value("method", "linear_gaussian");
    config.expand::<Method, _>("method")?;
    config.set("truth", args.truth);
    config.set("mode", args.mode);
    config.set("scores", args.scores);
    config.set("output", args.output);

    let simulated = config.has("simulation");
    if config.has("data") == simulated {
        return Err(usage("pass either --data or a simulation (--scenario, --n, --seed)"));
    }
    let mut seeds = Vec::new();
    if simulated {
        seeds.push(config.resolve_seed("simulation.seed", args.seed)?);
    }
    let baseline_method = matches!(config.parse_key::<Method>("method")?, Method::Baseline { .. });
    if baseline_method {
        let seed = match seeds.first() {
            Some(&s) => s,
            None => config.resolve_seed("baseline.seed", args.seed)?,
        };
        config.default_value("baseline.seed", seed);
        if !seeds.contains(&seed) {
            seeds.push(seed);
        }
    }

    let cfg: TreeConfig = config.parse()?;
    let (data, generated_truth) = match (&cfg.data, &cfg.simulation) {
        (Some(path), _) => (read_dataset(path)?, None),
        (None, Some(sim)) => {
            let (d, t) = simulate(sim)?;
            (d, Some(t.tree))
        }
        (None, None) => unreachable!("checked above"),
    };
    let truth = match &cfg.truth {
        Some(path) => Some(read_tree(path)?),
        None => generated_truth,
    };

    let result = learn_tree(
        &data,
        &cfg.method,
        &cfg.baseline,
        truth.as_ref().map(|t| (t, cfg.mode)),
        Execution::Parallel,
    )?;
    if let Some(path) = &cfg.scores {
        write_matrix(path, &result.weights)?;
    }
    let results = TreeResults {
        method: cfg.method.to_string(),
        edges: result.tree.edges(),
        result,
    };
    RunRecord::new("tree", config.into_value(), seeds, started, results).emit(cfg.output.as_deref())
}
