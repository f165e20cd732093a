use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use usable_info::baselines::{baseline_estimate, gaussian_mutual_information, BatchSpec};
use usable_info::experiment::Method;
use usable_info::{empirical_f_information, simulate, Scenario, SimulationConfig, Variable};

use crate::config::{usage, Layered, RunRecord};
use crate::io::read_dataset;

#[derive(Args, Debug)]
pub struct BaselinesArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset CSV; otherwise a Gaussian pair from `--rho` and `--n`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub y: Option<Vec<String>>,
    /// Correlation of the generated Gaussian pair.
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Per-variable dimension of the generated pair [default: 1].
    #[arg(long = "d", visible_alias = "dim")]
    pub d: Option<usize>,
    /// Estimators [default: cpc_bilinear,nwj_bilinear].
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Cap on critic outputs before exponentiation.
    #[arg(long)]
    pub cap: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Deserialize)]
struct GaussianSource {
    rho: f64,
    n: usize,
    #[serde(default = "one")]
    d: usize,
}

fn one() -> usize {
    1
}

#[derive(Deserialize)]
struct BaselinesConfig {
    #[serde(default)]
    data: Option<PathBuf>,
    #[serde(default)]
    x: Vec<String>,
    #[serde(default)]
    y: Vec<String>,
    #[serde(default)]
    gaussian: Option<GaussianSource>,
    methods: Vec<Method>,
    batch: BatchSpec,
    #[serde(default)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct MethodEstimate {
    method: String,
    estimate: f64,
}

#[derive(Serialize)]
struct BaselinesResults {
    samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    mutual_information: Option<f64>,
    estimates: Vec<MethodEstimate>,
}

pub fn run(args: BaselinesArgs) -> Result<()> {
    let started = Instant::now();
    let mut config = Layered::load(args.config.as_deref())?;
    config.set("data", args.data);
    config.set("x", args.x);
    config.set("y", args.y);
    config.set("gaussian.rho", args.rho);
    config.set("gaussian.n", args.n);
    config.set("gaussian.d", args.d);
    config.set("methods", args.methods);
    config.default_value("methods", ["cpc_bilinear", "nwj_bilinear"]);
    config.expand_each::<Method, _>("methods")?;
    config.set("batch.batch_size", args.batch_size);
    config.set("batch.iterations", args.iterations);
    config.set("batch.learning_rate", args.learning_rate);
    config.set("batch.cap", args.cap);
    config.set("output", args.output);
    let seed = config.resolve_seed("seed", args.seed)?;
    config.set("batch.seed", Some(seed));

    let cfg: BaselinesConfig = config.parse()?;
    let (xs, ys, mi) = match (&cfg.data, &cfg.gaussian) {
        (Some(path), None) => {
            if cfg.x.is_empty() || cfg.y.is_empty() {
                return Err(usage("--data needs --x and --y"));
            }
            let data = read_dataset(path)?;
            let x: Vec<&str> = cfg.x.iter().map(String::as_str).collect();
            let y: Vec<&str> = cfg.y.iter().map(String::as_str).collect();
            (data.gather(&x)?, data.gather(&y)?, None)
        }
        (None, Some(g)) => {
            let sim = SimulationConfig::new(Scenario::GaussianPair { rho: g.rho, var_y: 1.0 }, g.n, seed).with_dim(g.d);
            let (data, _) = simulate(&sim)?;
            let mi = g.d as f64 * gaussian_mutual_information(g.rho);
            (data.variable(0).clone(), data.variable(1).clone(), Some(mi))
        }
        _ => return Err(usage("pass either --data with --x/--y or a Gaussian pair (--rho, --n)")),
    };

    let estimates = cfg
        .methods
        .iter()
        .map(|m| {
            Ok(MethodEstimate {
                method: m.to_string(),
                estimate: estimate(m, &xs, &ys, &cfg.batch)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let results = BaselinesResults {
        samples: ys.len(),
        mutual_information: mi,
        estimates,
    };
    RunRecord::new("baselines", config.into_value(), vec![seed], started, results).emit(cfg.output.as_deref())
}

fn estimate(method: &Method, xs: &Variable, ys: &Variable, spec: &BatchSpec) -> Result<f64> {
    Ok(match method {
        Method::Family(config) => empirical_f_information(config, xs, ys, None, false)?.point_estimate,
        Method::Baseline { objective, critic } => baseline_estimate(*critic, *objective, xs, ys, spec)?,
    })
}
