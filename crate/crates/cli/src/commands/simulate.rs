use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use usable_info::{simulate, GroundTruth, SimulationConfig};

use super::{expand_scenario, SimFlags};
use crate::config::{sidecar, Layered, RunRecord};
use crate::io::write_dataset;

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// JSON config; flags override its keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub sim: SimFlags,
    /// Sample count.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset CSV path.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Ground-truth record path [default: <output>.truth.json].
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Deserialize)]
struct SimulateConfig {
    #[serde(flatten)]
    simulation: SimulationConfig,
    output: PathBuf,
    #[serde(default)]
    truth: Option<PathBuf>,
}

#[derive(Serialize)]
struct SimulateResults<'a> {
    data: &'a PathBuf,
    samples: usize,
    columns: Vec<String>,
    truth: &'a GroundTruth,
}

pub fn run(args: SimulateArgs) -> Result<()> {
    let started = Instant::now();
    let mut config = Layered::load(args.config.as_deref())?;
    args.sim.apply(&mut config, "");
    expand_scenario(&mut config, "scenario");
    config.set("n", args.n);
    config.set("output", args.output);
    config.set("truth", args.truth);
    let seed = config.resolve_seed("seed", args.seed)?;

    let cfg: SimulateConfig = config.parse()?;
    let (data, truth) = simulate(&cfg.simulation)?;
    write_dataset(&cfg.output, &data)?;

    let truth_path = cfg.truth.clone().unwrap_or_else(|| sidecar(&cfg.output, "truth.json"));
    let results = SimulateResults {
        data: &cfg.output,
        samples: data.num_samples(),
        columns: data.headers(),
        truth: &truth,
    };
    RunRecord::new("simulate", config.into_value(), vec![seed], started, results).emit(Some(&truth_path))
}
