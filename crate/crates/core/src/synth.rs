//! Synthetic tree-structured datasets with known generative structure.
//!
//! Star trees (`sim1`..`sim3`, root plus `m − 1` children) and depth-two
//! trees (`sim4`..`sim6`, seven nodes) follow
//!
//! | scenario | edges out of the root       | deeper edges            |
//! |----------|-----------------------------|-------------------------|
//! | sim1     | `N(W x, 6I)`                | -                       |
//! | sim2     | `W E(x + ε)`                | -                       |
//! | sim3     | fair coin between the above | -                       |
//! | sim4     | `N(W x, 2I)`                | `N(W x, 2I)`            |
//! | sim5     | `E(x + ε)` (no rotation)    | `W E(x + ε)`            |
//! | sim6     | `W E(x + ε)`                | `N(W x, 2I)`            |
//!
//! with the root `X_1 ~ U(0, 10)` elementwise, `ε ~ E(0.1)` elementwise and
//! every `W` a random orthogonal matrix. `E(λ)` is an elementwise exponential
//! with rate `λ` unless [`ExponentialParam::Mean`] is selected.

use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Exp, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Variable};
use crate::error::{Error, Result};
use crate::parallel::rng_for;
use crate::structure::Arborescence;

pub const DEFAULT_DIM: usize = 10;
pub const STAR_NODES: usize = 20;
pub const DEPTH_TWO_NODES: usize = 7;
const ROOT_UPPER: f64 = 10.0;
const EPSILON_PARAM: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum Scenario {
    Sim1,
    Sim2,
    Sim3,
    Sim4,
    Sim5,
    Sim6,
    /// `X ~ N(0, I_d)`, `Y = ρ √var_y X + √(var_y (1 − ρ²)) Z` per coordinate.
    GaussianPair { rho: f64, var_y: f64 },
    /// Gaussian edges `N(W x_parent, noise_var I)` on an arbitrary tree.
    CustomTree { parents: Vec<Option<usize>>, noise_var: f64 },
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Sim1 => "sim1",
            Scenario::Sim2 => "sim2",
            Scenario::Sim3 => "sim3",
            Scenario::Sim4 => "sim4",
            Scenario::Sim5 => "sim5",
            Scenario::Sim6 => "sim6",
            Scenario::GaussianPair { .. } => "gaussian_pair",
            Scenario::CustomTree { .. } => "custom_tree",
        }
    }

    fn default_nodes(&self) -> usize {
        match self {
            Scenario::Sim1 | Scenario::Sim2 | Scenario::Sim3 => STAR_NODES,
            Scenario::Sim4 | Scenario::Sim5 | Scenario::Sim6 => DEPTH_TWO_NODES,
            Scenario::GaussianPair { .. } => 2,
            Scenario::CustomTree { parents, .. } => parents.len(),
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    /// Parses the fixed scenarios `sim1`..`sim6`.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sim1" => Scenario::Sim1,
            "sim2" => Scenario::Sim2,
            "sim3" => Scenario::Sim3,
            "sim4" => Scenario::Sim4,
            "sim5" => Scenario::Sim5,
            "sim6" => Scenario::Sim6,
            other => return Err(Error::invalid(format!("unknown scenario {other:?}"))),
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExponentialParam {
    #[default]
    Rate,
    Mean,
}

fn default_dim() -> usize {
    DEFAULT_DIM
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub scenario: Scenario,
    /// Node count; only star scenarios accept a value other than the default.
    #[serde(default)]
    pub m: Option<usize>,
    #[serde(default = "default_dim")]
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    #[serde(default)]
    pub exponential: ExponentialParam,
}

impl SimulationConfig {
    pub fn new(scenario: Scenario, n: usize, seed: u64) -> Self {
        Self {
            scenario,
            m: None,
            d: DEFAULT_DIM,
            n,
            seed,
            exponential: ExponentialParam::Rate,
        }
    }

    pub fn with_nodes(mut self, m: usize) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_dim(mut self, d: usize) -> Self {
        self.d = d;
        self
    }

    pub fn with_exponential(mut self, p: ExponentialParam) -> Self {
        self.exponential = p;
        self
    }

    /// Resolved node count after validation.
    pub fn node_count(&self) -> Result<usize> {
        let default = self.scenario.default_nodes();
        let m = self.m.unwrap_or(default);
        match self.scenario {
            Scenario::Sim1 | Scenario::Sim2 | Scenario::Sim3 if m >= 2 => Ok(m),
            Scenario::Sim1 | Scenario::Sim2 | Scenario::Sim3 => {
                Err(Error::invalid("star scenarios need at least 2 nodes"))
            }
            _ if m == default => Ok(m),
            _ => Err(Error::invalid(format!(
                "scenario {} has a fixed node count of {default}",
                self.scenario.name()
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptySamples);
        }
        if self.d == 0 {
            return Err(Error::invalid("d must be positive"));
        }
        self.node_count()?;
        match &self.scenario {
            Scenario::GaussianPair { rho, var_y } => {
                if !(rho.abs() < 1.0) || !(*var_y > 0.0 && var_y.is_finite()) {
                    return Err(Error::invalid("gaussian_pair needs |rho| < 1 and var_y > 0"));
                }
            }
            Scenario::CustomTree { parents, noise_var } => {
                if parents.len() < 2 {
                    return Err(Error::invalid("custom_tree needs at least 2 nodes"));
                }
                Arborescence::unweighted(parents.clone())?;
                if !(*noise_var >= 0.0 && noise_var.is_finite()) {
                    return Err(Error::invalid("noise_var must be non-negative"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeLaw {
    /// `N(W x, variance · I)`, or `N(0, I)` for a Gaussian root.
    Gaussian { variance: f64 },
    /// Elementwise exponential of `x + ε`, optionally rotated by `W`.
    Exponential { rotated: bool },
    /// Fair coin per sample between the Gaussian and rotated exponential laws.
    Mixture { variance: f64 },
    /// `U(0, 10)` elementwise.
    UniformRoot,
    /// Standard Gaussian root.
    GaussianRoot,
    /// Correlated pair child.
    PairChild { rho: f64, var_y: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroundTruth {
    pub tree: Arborescence,
    /// Row-major `d × d` orthogonal matrix per node; `None` where unused.
    pub rotations: Vec<Option<Vec<f64>>>,
    pub laws: Vec<EdgeLaw>,
    pub d: usize,
}

impl GroundTruth {
    pub fn rotation(&self, i: usize) -> Option<DMatrix<f64>> {
        self.rotations[i]
            .as_ref()
            .map(|w| DMatrix::from_row_slice(self.d, self.d, w))
    }
}

/// Haar-distributed orthogonal matrix: QR of a standard Gaussian matrix with
/// the signs of `R`'s diagonal folded into `Q`.
pub fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..d {
        if r[(k, k)] < 0.0 {
            q.column_mut(k).neg_mut();
        }
    }
    q
}

fn structure(config: &SimulationConfig, m: usize) -> (Vec<Option<usize>>, Vec<EdgeLaw>) {
    let star = |law: EdgeLaw| {
        let parents = (0..m).map(|i| (i > 0).then_some(0)).collect();
        let laws = (0..m).map(|i| if i == 0 { EdgeLaw::UniformRoot } else { law }).collect();
        (parents, laws)
    };
    let depth_two = |first: EdgeLaw, second: EdgeLaw| {
        let parents = vec![None, Some(0), Some(0), Some(1), Some(1), Some(2), Some(2)];
        let laws = (0..7)
            .map(|i| match i {
                0 => EdgeLaw::UniformRoot,
                1 | 2 => first,
                _ => second,
            })
            .collect();
        (parents, laws)
    };
    let exp_rot = EdgeLaw::Exponential { rotated: true };
    let gauss2 = EdgeLaw::Gaussian { variance: 2.0 };
    match &config.scenario {
        Scenario::Sim1 => star(EdgeLaw::Gaussian { variance: 6.0 }),
        Scenario::Sim2 => star(exp_rot),
        Scenario::Sim3 => star(EdgeLaw::Mixture { variance: 6.0 }),
        Scenario::Sim4 => depth_two(gauss2, gauss2),
        Scenario::Sim5 => depth_two(EdgeLaw::Exponential { rotated: false }, exp_rot),
        Scenario::Sim6 => depth_two(exp_rot, gauss2),
        Scenario::GaussianPair { rho, var_y } => (
            vec![None, Some(0)],
            vec![
                EdgeLaw::GaussianRoot,
                EdgeLaw::PairChild {
                    rho: *rho,
                    var_y: *var_y,
                },
            ],
        ),
        Scenario::CustomTree { parents, noise_var } => (
            parents.clone(),
            parents
                .iter()
                .map(|p| match p {
                    None => EdgeLaw::UniformRoot,
                    Some(_) => EdgeLaw::Gaussian { variance: *noise_var },
                })
                .collect(),
        ),
    }
}

fn uses_rotation(law: EdgeLaw) -> bool {
    matches!(
        law,
        EdgeLaw::Gaussian { .. } | EdgeLaw::Exponential { rotated: true } | EdgeLaw::Mixture { .. }
    )
}

/// Parents before children.
fn topological_order(parents: &[Option<usize>]) -> Vec<usize> {
    let m = parents.len();
    let mut children = vec![Vec::new(); m];
    let mut root = 0;
    for (c, p) in parents.iter().enumerate() {
        match p {
            Some(p) => children[*p].push(c),
            None => root = c,
        }
    }
    let mut order = Vec::with_capacity(m);
    let mut queue = std::collections::VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        queue.extend(children[v].iter().copied());
    }
    order
}

struct Sampler {
    eps: Exp<f64>,
    param: ExponentialParam,
}

impl Sampler {
    fn exponential(&self, x: &DVector<f64>, rng: &mut ChaCha8Rng) -> DVector<f64> {
        x.map(|xk| {
            let e: f64 = self.eps.sample(rng);
            let p = (xk + e).max(f64::MIN_POSITIVE);
            let unit: f64 = rng.sample(rand_distr::Exp1);
            match self.param {
                ExponentialParam::Rate => unit / p,
                ExponentialParam::Mean => unit * p,
            }
        })
    }
}

fn gaussian_noise(d: usize, sd: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(d, |_, _| sd * rng.sample::<f64, _>(StandardNormal))
}

/// Draws a dataset and its generative ground truth. Deterministic in the
/// config, including the seed.
pub fn simulate(config: &SimulationConfig) -> Result<(Dataset, GroundTruth)> {
    config.validate()?;
    let m = config.node_count()?;
    let d = config.d;
    let n = config.n;
    let (parents, laws) = structure(config, m);
    let mut rng = rng_for(config.seed);

    let rotations: Vec<Option<DMatrix<f64>>> = laws
        .iter()
        .map(|&law| uses_rotation(law).then(|| random_orthogonal(d, &mut rng)))
        .collect();

    let eps = match config.exponential {
        ExponentialParam::Rate => Exp::new(EPSILON_PARAM),
        ExponentialParam::Mean => Exp::new(1.0 / EPSILON_PARAM),
    }
    .map_err(|e| Error::invalid(e.to_string()))?;
    let sampler = Sampler {
        eps,
        param: config.exponential,
    };
    let uniform = Uniform::new(0.0, ROOT_UPPER).map_err(|e| Error::invalid(e.to_string()))?;

    let order = topological_order(&parents);
    let mut columns: Vec<Vec<f64>> = vec![Vec::with_capacity(n * d); m];
    let mut row: Vec<DVector<f64>> = vec![DVector::zeros(d); m];
    for _ in 0..n {
        for &v in &order {
            let parent = parents[v].map(|p| row[p].clone());
            let w = rotations[v].as_ref();
            let value = match (laws[v], parent) {
                (EdgeLaw::UniformRoot, _) => DVector::from_fn(d, |_, _| uniform.sample(&mut rng)),
                (EdgeLaw::GaussianRoot, _) => gaussian_noise(d, 1.0, &mut rng),
                (EdgeLaw::Gaussian { variance }, Some(x)) => {
                    w.expect("rotation") * x + gaussian_noise(d, variance.sqrt(), &mut rng)
                }
                (EdgeLaw::Exponential { rotated }, Some(x)) => {
                    let e = sampler.exponential(&x, &mut rng);
                    if rotated {
                        w.expect("rotation") * e
                    } else {
                        e
                    }
                }
                (EdgeLaw::Mixture { variance }, Some(x)) => {
                    let w = w.expect("rotation");
                    if rng.random_bool(0.5) {
                        w * x + gaussian_noise(d, variance.sqrt(), &mut rng)
                    } else {
                        w * sampler.exponential(&x, &mut rng)
                    }
                }
                (EdgeLaw::PairChild { rho, var_y }, Some(x)) => {
                    let sd = var_y.sqrt();
                    x * (rho * sd) + gaussian_noise(d, sd * (1.0 - rho * rho).sqrt(), &mut rng)
                }
                (_, None) => unreachable!("non-root laws always have a parent"),
            };
            row[v] = value;
        }
        for (col, value) in columns.iter_mut().zip(&row) {
            col.extend(value.iter());
        }
    }

    let variables = columns
        .into_iter()
        .map(|c| Variable::real(d, c))
        .collect::<Result<Vec<_>>>()?;
    let truth = GroundTruth {
        tree: Arborescence::unweighted(parents)?,
        rotations: rotations
            .into_iter()
            .map(|w| w.map(|w| w.transpose().as_slice().to_vec()))
            .collect(),
        laws,
        d,
    };
    Ok((Dataset::new(variables)?, truth))
}

/// Population F-information of the linear-Gaussian family on a bivariate
/// Gaussian pair: `ρ² · var_y`.
pub fn analytic_f_information_gaussian_pair(rho: f64, var_y: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) || !(var_y > 0.0 && var_y.is_finite()) {
        return Err(Error::invalid("need |rho| < 1 and var_y > 0"));
    }
    Ok(rho * rho * var_y)
}
