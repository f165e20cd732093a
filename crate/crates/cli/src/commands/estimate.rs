use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use usable_info::{
    empirical_f_information, holdout_f_information, FInfoEstimate, FamilyConfig, FamilyKind, PacConfig,
};

use crate::config::{usage, Layered, RunRecord};
use crate::io::read_dataset;

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset CSV.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Held-out CSV with the same columns; fit on `--data`, score here.
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    /// Columns or variable prefixes for X (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub x: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub y: Option<Vec<String>>,
    /// Family name, e.g. linear_gaussian or polynomial_gaussian3.
    #[arg(long)]
    pub family: Option<String>,
    /// Clamp log-densities to [-B, B].
    #[arg(long)]
    pub clip: Option<f64>,
    /// Spectral-norm bound on the regression parameters.
    #[arg(long)]
    pub norm_radius: Option<f64>,
    /// Attach a PAC half-width.
    #[arg(long)]
    pub pac: bool,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Bound on |log f[x](y)|.
    #[arg(long)]
    pub b: Option<f64>,
    /// Rademacher complexity bound R for the generic bound.
    #[arg(long)]
    pub rademacher: Option<f64>,
    /// Input norm bound for the closed-form linear-Gaussian bound.
    #[arg(long)]
    pub kx: Option<f64>,
    /// Output norm bound for the closed-form linear-Gaussian bound.
    #[arg(long)]
    pub ky: Option<f64>,
    /// Report negative estimates as 0.
    #[arg(long)]
    pub clamp: bool,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Deserialize)]
struct EstimateConfig {
    data: PathBuf,
    #[serde(default)]
    test_data: Option<PathBuf>,
    x: Vec<String>,
    y: Vec<String>,
    family: FamilyConfig,
    #[serde(default)]
    pac: Option<PacConfig>,
    #[serde(default)]
    clamp: bool,
    #[serde(default)]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct EstimateResults {
    #[serde(flatten)]
    estimate: FInfoEstimate,
    holdout: bool,
}

const DEFAULT_DELTA: f64 = 0.1;

pub fn run(args: EstimateArgs) -> Result<()> {
    let started = Instant::now();
    let mut config = Layered::load(args.config.as_deref())?;
    config.set("data", args.data);
    config.set("test_data", args.test_data);
    config.set("x", args.x);
    config.set("y", args.y);
    config.expand::<FamilyKind, _>("family")?;
    if let Some(name) = &args.family {
        let kind: FamilyKind = name.parse().map_err(|e: usable_info::Error| usage(e.to_string()))?;
        if let Some(obj) = config.get_mut("family").and_then(|v| v.as_object_mut()) {
            obj.remove("kind");
            obj.remove("order");
        }
        if let serde_json::Value::Object(fields) = serde_json::to_value(kind)? {
            for (k, v) in fields {
                config.set_value(&format!("family.{k}"), v);
            }
        }
    }
    config.default_value("family.kind", "linear_gaussian");
    config.set("family.clip", args.clip);
    config.set("family.norm_radius", args.norm_radius);
    config.set("pac.delta", args.delta);
    config.set("pac.b", args.b);
    config.set("pac.rademacher_bound", args.rademacher);
    config.set("pac.k_x", args.kx);
    config.set("pac.k_y", args.ky);
    if args.pac && !config.has("pac") {
        config.set_value("pac", serde_json::json!({}));
    }
    if args.clamp {
        config.set("clamp", Some(true));
    }
    config.set("output", args.output);
    if config.has("pac") {
        complete_pac(&mut config)?;
    }

    let cfg: EstimateConfig = config.parse()?;
    let data = read_dataset(&cfg.data)?;
    let xs = data.gather(&names(&cfg.x))?;
    let ys = data.gather(&names(&cfg.y))?;
    let estimate = match &cfg.test_data {
        None => empirical_f_information(&cfg.family, &xs, &ys, cfg.pac.as_ref(), cfg.clamp)?,
        Some(path) => {
            if cfg.pac.is_some() || cfg.clamp {
                return Err(usage("--pac and --clamp apply to in-sample estimates only"));
            }
            let test = read_dataset(path)?;
            holdout_f_information(&cfg.family, &xs, &ys, &test.gather(&names(&cfg.x))?, &test.gather(&names(&cfg.y))?)?
        }
    };
    let results = EstimateResults {
        estimate,
        holdout: cfg.test_data.is_some(),
    };
    RunRecord::new("estimate", config.into_value(), Vec::new(), started, results).emit(cfg.output.as_deref())
}

fn names(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

/// Fills PAC defaults. The closed-form bound gets `norm_radius = 1` when
/// unset and `B = (k_x + k_y)² + log 2π`, its own log-density bound.
fn complete_pac(config: &mut Layered) -> Result<()> {
    config.default_value("pac.delta", DEFAULT_DELTA);
    let closed_form = config.has("pac.k_x") || config.has("pac.k_y");
    if closed_form {
        let (kx, ky) = match (config.get("pac.k_x"), config.get("pac.k_y")) {
            (Some(a), Some(b)) => (a.as_f64(), b.as_f64()),
            _ => return Err(usage("the closed-form bound needs both --kx and --ky")),
        };
        let (kx, ky) = kx.zip(ky).ok_or_else(|| usage("--kx and --ky must be numbers"))?;
        config.default_value("pac.b", (kx + ky).powi(2) + (2.0 * std::f64::consts::PI).ln());
        if config.get("family.kind").and_then(|v| v.as_str()) == Some("linear_gaussian") {
            config.default_value("family.norm_radius", 1.0);
        }
    } else if !config.has("pac.rademacher_bound") {
        return Err(usage("--pac needs --rademacher R (with --b) or --kx and --ky"));
    } else if !config.has("pac.b") {
        return Err(usage("the generic bound needs --b"));
    }
    Ok(())
}
