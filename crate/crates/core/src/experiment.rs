//! Sample-size sweeps of tree recovery over simulated scenarios.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_estimate, BatchSpec, CriticKind, Objective};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::families::{FamilyConfig, FamilyKind};
use crate::parallel::{try_map_range, Execution};
use crate::structure::{edge_weights, max_arborescence, wrong_edges_ratio, Arborescence, CompareMode, EdgeWeightMatrix};
use crate::synth::{simulate, ExponentialParam, Scenario, SimulationConfig};

/// Edge-weight estimator: an F-family or a variational baseline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Family(FamilyConfig),
    Baseline { objective: Objective, critic: CriticKind },
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Family(c) => write!(f, "{}", c.kind),
            Method::Baseline { objective, critic } => {
                let c = match critic {
                    CriticKind::Bilinear => "bilinear",
                    CriticKind::Quadratic => "quadratic",
                };
                write!(f, "{objective}_{c}")
            }
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Family names (`linear_gaussian`, `polynomial_gaussian3`, ...) or
    /// `cpc`/`nwj` with an optional `_bilinear`/`_quadratic` suffix.
    fn from_str(s: &str) -> Result<Self> {
        let (head, tail) = s.split_once('_').unwrap_or((s, "bilinear"));
        if let Ok(objective) = head.parse::<Objective>() {
            let critic = match tail {
                "bilinear" => CriticKind::Bilinear,
                "quadratic" => CriticKind::Quadratic,
                other => return Err(Error::invalid(format!("unknown critic {other:?}"))),
            };
            return Ok(Method::Baseline { objective, critic });
        }
        let kind: FamilyKind = s.parse()?;
        Ok(Method::Family(FamilyConfig::new(kind)))
    }
}

/// Directed edge weights for `method`. Baseline critics are seeded per edge
/// from `spec.seed`.
pub fn method_edge_weights(
    dataset: &Dataset,
    method: &Method,
    spec: &BatchSpec,
    exec: Execution,
) -> Result<EdgeWeightMatrix> {
    match method {
        Method::Family(config) => edge_weights(dataset, |_, _| *config, exec),
        Method::Baseline { objective, critic } => {
            let m = dataset.num_variables();
            EdgeWeightMatrix::from_fn(m, exec, |i, j| {
                let edge_spec = BatchSpec {
                    seed: spec.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add((i * m + j) as u64),
                    ..*spec
                };
                baseline_estimate(*critic, *objective, dataset.variable(i), dataset.variable(j), &edge_spec)
            })
        }
    }
}

/// Learned tree and, when a truth is given, its wrong-edges ratio.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TreeResult {
    pub tree: Arborescence,
    pub weights: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wrong_edges_ratio: Option<f64>,
}

pub fn learn_tree(
    dataset: &Dataset,
    method: &Method,
    spec: &BatchSpec,
    truth: Option<(&Arborescence, CompareMode)>,
    exec: Execution,
) -> Result<TreeResult> {
    let w = method_edge_weights(dataset, method, spec, exec)?;
    let tree = max_arborescence(&w);
    let ratio = truth.map(|(t, mode)| wrong_edges_ratio(&tree, t, mode)).transpose()?;
    Ok(TreeResult {
        tree,
        weights: w.rows(),
        wrong_edges_ratio: ratio,
    })
}

fn default_dim() -> usize {
    crate::synth::DEFAULT_DIM
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default = "default_dim")]
    pub d: usize,
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub exponential: ExponentialParam,
    #[serde(default)]
    pub mode: CompareMode,
    #[serde(default)]
    pub baseline: BatchSpec,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() || self.seeds.is_empty() || self.methods.is_empty() {
            return Err(Error::invalid("sweeps need at least one size, seed and method"));
        }
        for &n in &self.sizes {
            self.simulation(n, self.seeds[0]).validate()?;
        }
        for method in &self.methods {
            if let Method::Family(c) = method {
                c.validate()?;
            }
        }
        self.baseline.validate()
    }

    fn simulation(&self, n: usize, seed: u64) -> SimulationConfig {
        SimulationConfig {
            scenario: self.scenario.clone(),
            m: self.m,
            d: self.d,
            n,
            seed,
            exponential: self.exponential,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub scenario: String,
    pub family: String,
    pub n: usize,
    pub seed: u64,
    pub wrong_edges_ratio: f64,
    pub total_weight: f64,
}

/// One row per `(method, N, seed)`, sorted by scenario, method name, `N` and
/// seed. Each `(N, seed)` dataset is simulated once and shared by all
/// methods.
pub fn run_sweep(config: &SweepConfig, exec: Execution) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let cells: Vec<(usize, u64)> = config
        .sizes
        .iter()
        .flat_map(|&n| config.seeds.iter().map(move |&s| (n, s)))
        .collect();
    let datasets = try_map_range(cells.len(), exec, |k| {
        let (n, seed) = cells[k];
        simulate(&config.simulation(n, seed))
    })?;

    let per_cell = config.methods.len();
    let mut rows = try_map_range(cells.len() * per_cell, exec, |k| {
        let (cell, mi) = (k / per_cell, k % per_cell);
        let (n, seed) = cells[cell];
        let (data, truth) = &datasets[cell];
        let method = &config.methods[mi];
        let spec = BatchSpec {
            seed: config.baseline.seed ^ seed,
            ..config.baseline
        };
        let result = learn_tree(data, method, &spec, Some((&truth.tree, config.mode)), Execution::Sequential)?;
        Ok(SweepRow {
            scenario: config.scenario.name().to_string(),
            family: method.to_string(),
            n,
            seed,
            wrong_edges_ratio: result.wrong_edges_ratio.unwrap_or(f64::NAN),
            total_weight: result.tree.total_weight,
        })
    })?;
    rows.sort_by(|a, b| {
        (&a.scenario, &a.family, a.n, a.seed).cmp(&(&b.scenario, &b.family, b.n, b.seed))
    });
    Ok(rows)
}

/// Mean wrong-edges ratio per `(family, N)`, in row order.
pub fn mean_ratios(rows: &[SweepRow]) -> Vec<(String, usize, f64)> {
    let mut out: Vec<(String, usize, f64, usize)> = Vec::new();
    for r in rows {
        match out.last_mut() {
            Some(last) if last.0 == r.family && last.1 == r.n => {
                last.2 += r.wrong_edges_ratio;
                last.3 += 1;
            }
            _ => out.push((r.family.clone(), r.n, r.wrong_edges_ratio, 1)),
        }
    }
    out.into_iter().map(|(f, n, s, c)| (f, n, s / c as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_sweep(methods: Vec<Method>) -> SweepConfig {
        SweepConfig {
            scenario: Scenario::Sim1,
            m: Some(5),
            d: 3,
            sizes: vec![20, 200],
            seeds: vec![1, 2, 3],
            methods,
            exponential: ExponentialParam::Rate,
            mode: CompareMode::Undirected,
            baseline: BatchSpec {
                iterations: 50,
                batch_size: 16,
                ..BatchSpec::default()
            },
        }
    }

    #[test]
    fn method_names_round_trip() {
        for name in ["linear_gaussian", "polynomial_gaussian2", "cpc_bilinear", "nwj_quadratic"] {
            assert_eq!(name.parse::<Method>().unwrap().to_string(), name);
        }
        assert_eq!("cpc".parse::<Method>().unwrap().to_string(), "cpc_bilinear");
        assert!("cpc_cubic".parse::<Method>().is_err());
        assert!("mine".parse::<Method>().is_err());
    }

    #[test]
    fn sweep_shape_and_order() {
        let cfg = small_sweep(vec!["linear_gaussian".parse().unwrap(), "cpc".parse().unwrap()]);
        let rows = run_sweep(&cfg, Execution::Parallel).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 3);
        assert_eq!(rows[0].family, "cpc_bilinear");
        assert_eq!((rows[0].n, rows[0].seed), (20, 1));
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.wrong_edges_ratio)));
        let means = mean_ratios(&rows);
        assert_eq!(means.len(), 4);
    }

    #[test]
    fn sweep_is_independent_of_scheduling() {
        let cfg = small_sweep(vec!["linear_gaussian".parse().unwrap(), "nwj".parse().unwrap()]);
        let a = run_sweep(&cfg, Execution::Parallel).unwrap();
        let b = run_sweep(&cfg, Execution::Sequential).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.family, y.family);
            assert_eq!(x.wrong_edges_ratio.to_bits(), y.wrong_edges_ratio.to_bits());
            assert_eq!(x.total_weight.to_bits(), y.total_weight.to_bits());
        }
    }

    #[test]
    fn invalid_sweeps() {
        let mut cfg = small_sweep(vec![]);
        assert!(run_sweep(&cfg, Execution::Parallel).is_err());
        cfg.methods = vec!["linear_gaussian".parse().unwrap()];
        cfg.scenario = Scenario::Sim4;
        assert!(run_sweep(&cfg, Execution::Parallel).is_err());
    }

    #[test]
    fn learned_tree_without_truth_has_no_ratio() {
        let (data, _) = simulate(&SimulationConfig::new(Scenario::Sim1, 50, 3).with_nodes(2).with_dim(2)).unwrap();
        let r = learn_tree(
            &data,
            &"linear_gaussian".parse().unwrap(),
            &BatchSpec::default(),
            None,
            Execution::Parallel,
        )
        .unwrap();
        assert_eq!(r.tree.edges().len(), 1);
        assert!(r.wrong_edges_ratio.is_none());
        let json = serde_json::to_value(&r).unwrap();
        assert!(json.get("wrong_edges_ratio").is_none());
    }
}
