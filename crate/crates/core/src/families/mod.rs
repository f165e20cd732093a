//! Predictive families.
//!
//! A family maps side information `x` (or nothing) to a distribution over
//! `Y`. Every family here is closed under optional ignorance: whatever
//! distribution a fitted conditional predictor outputs for some `x` can also be
//! produced by a constant member of the same family (see
//! [`ConditionalPredictor::constant`]).
//!
//! | kind                   | marginal `f[∅]`           | conditional `f[x]`                       |
//! |------------------------|---------------------------|------------------------------------------|
//! | `tabular`              | empirical pmf             | empirical pmf per `x` symbol              |
//! | `gaussian_mean`        | `N(ȳ, ½I)`                | `N(mean of y in x's group, ½I)`           |
//! | `laplace_mean`         | `∝ exp(-‖y-μ‖)`, μ = geometric median | geometric median per `x` symbol |
//! | `linear_gaussian`      | `N(ȳ, ½I)`                | `N(W x + b, ½I)` by least squares         |
//! | `polynomial_gaussian`  | `N(ȳ, ½I)`                | `N(Σ_p W_p x^p + b, ½I)` (elementwise powers) |
//! | `categorical_softmax`  | empirical pmf             | `softmax(W x + b)` by gradient descent    |
//!
//! All log-densities are natural logarithms.

mod median;
mod optim;
mod regression;
mod softmax;

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{Sample, Variable, VariableSpec};
use crate::error::{Error, Result};

pub use median::{geometric_median, laplace_log_normalizer};
use regression::Features;

/// Iterate-movement tolerance for Weiszfeld's geometric-median iteration.
pub const WEISZFELD_TOLERANCE: f64 = 1e-9;
pub const WEISZFELD_MAX_ITERS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FamilyKind {
    Tabular,
    GaussianMean,
    LaplaceMean,
    LinearGaussian,
    PolynomialGaussian { order: usize },
    CategoricalSoftmax,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilyKind::Tabular => write!(f, "tabular"),
            FamilyKind::GaussianMean => write!(f, "gaussian_mean"),
            FamilyKind::LaplaceMean => write!(f, "laplace_mean"),
            FamilyKind::LinearGaussian => write!(f, "linear_gaussian"),
            FamilyKind::PolynomialGaussian { order } => write!(f, "polynomial_gaussian{order}"),
            FamilyKind::CategoricalSoftmax => write!(f, "categorical_softmax"),
        }
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    /// Accepts the `Display` names; `polynomial_gaussian` alone means order 3.
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "tabular" => FamilyKind::Tabular,
            "gaussian_mean" => FamilyKind::GaussianMean,
            "laplace_mean" => FamilyKind::LaplaceMean,
            "linear_gaussian" => FamilyKind::LinearGaussian,
            "categorical_softmax" => FamilyKind::CategoricalSoftmax,
            "polynomial_gaussian" => FamilyKind::PolynomialGaussian { order: 3 },
            other => match other.strip_prefix("polynomial_gaussian").map(str::parse::<usize>) {
                Some(Ok(order)) => FamilyKind::PolynomialGaussian { order },
                _ => return Err(Error::invalid(format!("unknown family {s:?}"))),
            },
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientSettings {
    pub max_iters: usize,
    /// Initial step of the backtracking line search.
    pub step_size: f64,
    /// Stop once the (projected) gradient's max-norm falls below this.
    pub tolerance: f64,
}

impl Default for GradientSettings {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            step_size: 1.0,
            tolerance: 1e-7,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FitMode {
    #[default]
    ClosedForm,
    Gradient(GradientSettings),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyConfig {
    #[serde(flatten)]
    pub kind: FamilyKind,
    #[serde(default)]
    pub fit: FitMode,
    /// Spectral-norm bound on `(W, b)` for the regression families.
    #[serde(default)]
    pub norm_radius: Option<f64>,
    /// Clamp log-densities to `[-B, B]`.
    #[serde(default)]
    pub clip: Option<f64>,
}

impl FamilyConfig {
    pub fn new(kind: FamilyKind) -> Self {
        Self {
            kind,
            fit: FitMode::ClosedForm,
            norm_radius: None,
            clip: None,
        }
    }

    pub fn tabular() -> Self {
        Self::new(FamilyKind::Tabular)
    }

    pub fn gaussian_mean() -> Self {
        Self::new(FamilyKind::GaussianMean)
    }

    pub fn laplace_mean() -> Self {
        Self::new(FamilyKind::LaplaceMean)
    }

    pub fn linear_gaussian() -> Self {
        Self::new(FamilyKind::LinearGaussian)
    }

    pub fn polynomial_gaussian(order: usize) -> Self {
        Self::new(FamilyKind::PolynomialGaussian { order })
    }

    pub fn categorical_softmax() -> Self {
        Self::new(FamilyKind::CategoricalSoftmax)
    }

    pub fn with_clip(mut self, bound: f64) -> Self {
        self.clip = Some(bound);
        self
    }

    pub fn with_norm_radius(mut self, radius: f64) -> Self {
        self.norm_radius = Some(radius);
        self
    }

    pub fn with_fit(mut self, fit: FitMode) -> Self {
        self.fit = fit;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let FamilyKind::PolynomialGaussian { order } = self.kind {
            if order == 0 {
                return Err(Error::invalid("polynomial order must be >= 1"));
            }
        }
        if let Some(b) = self.clip {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::invalid("clip bound B must be positive and finite"));
            }
        }
        if let Some(r) = self.norm_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::invalid("norm radius must be positive and finite"));
            }
            if !matches!(
                self.kind,
                FamilyKind::LinearGaussian | FamilyKind::PolynomialGaussian { .. }
            ) {
                return Err(Error::unsupported(self.kind, "a norm constraint"));
            }
        }
        if let FitMode::Gradient(g) = self.fit {
            if g.max_iters == 0 || !(g.step_size > 0.0) || !(g.tolerance > 0.0) {
                return Err(Error::invalid("gradient settings must be positive"));
            }
        }
        Ok(())
    }

    fn gradient_settings(&self) -> GradientSettings {
        match self.fit {
            FitMode::Gradient(g) => g,
            FitMode::ClosedForm => GradientSettings::default(),
        }
    }
}

/// One distribution over `Y`.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Categorical { probs: Vec<f64> },
    /// `N(mean, ½I)`, density `π^{-d/2} exp(-‖y - mean‖²)`.
    Gaussian { mean: Vec<f64> },
    /// Density `exp(-‖y - center‖₂) / Z_d`.
    Laplace { center: Vec<f64> },
}

impl Distribution {
    pub fn log_density(&self, y: Sample<'_>) -> Result<f64> {
        match (self, y) {
            (Distribution::Categorical { probs }, Sample::Categorical(s)) => match probs.get(s) {
                Some(p) => Ok(p.ln()),
                None => Err(Error::SymbolOutOfRange {
                    symbol: s,
                    cardinality: probs.len(),
                }),
            },
            (Distribution::Gaussian { mean }, Sample::Real(y)) => {
                check_real(y, mean.len(), "y")?;
                Ok(gaussian_log_density(y, mean))
            }
            (Distribution::Laplace { center }, Sample::Real(y)) => {
                check_real(y, center.len(), "y")?;
                let dist = y
                    .iter()
                    .zip(center)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                Ok(-dist - laplace_log_normalizer(center.len()))
            }
            _ => Err(Error::invalid("sample kind does not match the distribution")),
        }
    }
}

fn gaussian_log_density(y: &[f64], mean: &[f64]) -> f64 {
    let sq: f64 = y.iter().zip(mean).map(|(a, b)| (a - b) * (a - b)).sum();
    -0.5 * y.len() as f64 * PI.ln() - sq
}

fn check_real(y: &[f64], dim: usize, what: &'static str) -> Result<()> {
    if y.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

fn check_sample(spec: VariableSpec, s: Sample<'_>, what: &'static str) -> Result<()> {
    match (spec, s) {
        (VariableSpec::Real { dim }, Sample::Real(v)) => check_real(v, dim, what),
        (VariableSpec::Categorical { cardinality }, Sample::Categorical(c)) => {
            if c < cardinality {
                Ok(())
            } else {
                Err(Error::SymbolOutOfRange {
                    symbol: c,
                    cardinality,
                })
            }
        }
        _ => Err(Error::invalid(format!("{what} sample kind does not match its variable"))),
    }
}

fn clip(v: f64, bound: Option<f64>) -> f64 {
    match bound {
        Some(b) => v.clamp(-b, b),
        None => v,
    }
}

/// How a predictor was fitted.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    /// Final gradient-mapping norm (iterative fits) or iterate movement
    /// (Weiszfeld); zero for closed-form fits.
    pub residual: f64,
}

impl FitDiagnostics {
    const EXACT: FitDiagnostics = FitDiagnostics {
        iterations: 0,
        residual: 0.0,
    };
}

/// A fitted `f[∅]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalPredictor {
    family: FamilyKind,
    clip: Option<f64>,
    #[serde(skip)]
    y_spec: VariableSpec,
    distribution: Distribution,
    diagnostics: FitDiagnostics,
}

impl MarginalPredictor {
    pub fn family(&self) -> FamilyKind {
        self.family
    }

    pub fn distribution(&self) -> &Distribution {
        &self.distribution
    }

    pub fn diagnostics(&self) -> FitDiagnostics {
        self.diagnostics
    }

    /// `log f[∅](y)`, clamped to `[-B, B]` when a clip bound is configured.
    pub fn log_density(&self, y: Sample<'_>) -> Result<f64> {
        check_sample(self.y_spec, y, "y")?;
        Ok(clip(self.distribution.log_density(y)?, self.clip))
    }

    pub fn log_densities(&self, ys: &Variable) -> Result<Vec<f64>> {
        ys.samples().map(|y| self.log_density(y)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
enum ConditionalModel {
    Constant(Distribution),
    /// Per-symbol distributions for categorical side information; symbols
    /// not seen during fitting use `fallback` (the fitted marginal).
    PerSymbol {
        table: Vec<Option<Distribution>>,
        fallback: Distribution,
    },
    /// Gaussian with mean `coef · φ(x)`, `coef` is `d_y × (1 + p)`.
    Regression { features: Features, coef: DMatrix<f64> },
    /// Softmax over `coef · φ(x)`, `coef` is `k × (1 + p)`.
    Softmax { features: Features, coef: DMatrix<f64> },
}

/// A fitted `f[x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalPredictor {
    family: FamilyKind,
    clip: Option<f64>,
    x_spec: VariableSpec,
    y_spec: VariableSpec,
    model: ConditionalModel,
    diagnostics: FitDiagnostics,
}

impl ConditionalPredictor {
    /// The member of `family` that outputs `distribution` for every input.
    ///
    /// This is the optional-ignorance witness for any distribution in the
    /// range of a fitted predictor of the same family.
    pub fn constant(
        family: FamilyKind,
        x_spec: VariableSpec,
        distribution: Distribution,
        clip: Option<f64>,
    ) -> Result<Self> {
        let y_spec = match &distribution {
            Distribution::Categorical { probs } => VariableSpec::Categorical {
                cardinality: probs.len(),
            },
            Distribution::Gaussian { mean } => VariableSpec::Real { dim: mean.len() },
            Distribution::Laplace { center } => VariableSpec::Real { dim: center.len() },
        };
        let model = match (family, &distribution) {
            (FamilyKind::LinearGaussian | FamilyKind::PolynomialGaussian { .. }, Distribution::Gaussian { mean }) => {
                let features = Features::for_input(family, x_spec)?;
                let mut coef = DMatrix::zeros(mean.len(), features.width());
                coef.column_mut(0).copy_from_slice(mean);
                ConditionalModel::Regression { features, coef }
            }
            (FamilyKind::CategoricalSoftmax, Distribution::Categorical { probs }) => {
                // Zero probabilities need infinite logits; keep them as -inf so
                // the softmax reproduces the pmf exactly.
                let features = Features::for_input(family, x_spec)?;
                let mut coef = DMatrix::zeros(probs.len(), features.width());
                for (k, p) in probs.iter().enumerate() {
                    coef[(k, 0)] = p.ln();
                }
                ConditionalModel::Softmax { features, coef }
            }
            (FamilyKind::Tabular, Distribution::Categorical { .. })
            | (FamilyKind::GaussianMean, Distribution::Gaussian { .. })
            | (FamilyKind::LaplaceMean, Distribution::Laplace { .. }) => ConditionalModel::Constant(distribution),
            _ => return Err(Error::unsupported(family, "this distribution kind")),
        };
        Ok(Self {
            family,
            clip,
            x_spec,
            y_spec,
            model,
            diagnostics: FitDiagnostics::EXACT,
        })
    }

    pub fn family(&self) -> FamilyKind {
        self.family
    }

    pub fn diagnostics(&self) -> FitDiagnostics {
        self.diagnostics
    }

    /// Regression coefficients `[b | W]` (`d_y × (1 + p)`), if this is a
    /// Gaussian regression model.
    pub fn coefficients(&self) -> Option<&DMatrix<f64>> {
        match &self.model {
            ConditionalModel::Regression { coef, .. } | ConditionalModel::Softmax { coef, .. } => Some(coef),
            _ => None,
        }
    }

    /// The distribution `f[x]`.
    pub fn distribution_at(&self, x: Sample<'_>) -> Result<Distribution> {
        check_sample(self.x_spec, x, "x")?;
        Ok(match &self.model {
            ConditionalModel::Constant(d) => d.clone(),
            ConditionalModel::PerSymbol { table, fallback } => match x {
                Sample::Categorical(s) => table[s].clone().unwrap_or_else(|| fallback.clone()),
                Sample::Real(_) => unreachable!("checked against x_spec"),
            },
            ConditionalModel::Regression { features, coef } => {
                let phi = features.expand(x);
                let mean = coef * phi;
                Distribution::Gaussian {
                    mean: mean.as_slice().to_vec(),
                }
            }
            ConditionalModel::Softmax { features, coef } => {
                let logits = coef * features.expand(x);
                Distribution::Categorical {
                    probs: softmax::softmax(logits.as_slice()),
                }
            }
        })
    }

    /// `log f[x](y)`, clamped to `[-B, B]` when a clip bound is configured.
    pub fn log_density(&self, x: Sample<'_>, y: Sample<'_>) -> Result<f64> {
        check_sample(self.y_spec, y, "y")?;
        let raw = match (&self.model, y) {
            (ConditionalModel::Regression { features, coef }, Sample::Real(y)) => {
                check_sample(self.x_spec, x, "x")?;
                let mean = coef * features.expand(x);
                gaussian_log_density(y, mean.as_slice())
            }
            (ConditionalModel::Softmax { features, coef }, Sample::Categorical(s)) => {
                check_sample(self.x_spec, x, "x")?;
                let logits = coef * features.expand(x);
                softmax::log_softmax_at(logits.as_slice(), s)
            }
            _ => self.distribution_at(x)?.log_density(y)?,
        };
        Ok(clip(raw, self.clip))
    }

    pub fn log_densities(&self, xs: &Variable, ys: &Variable) -> Result<Vec<f64>> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch {
                left: xs.len(),
                right: ys.len(),
            });
        }
        if let (ConditionalModel::Regression { features, coef }, Some(yv)) = (&self.model, ys.real_values()) {
            // Batched path: one matrix product instead of n small ones.
            if xs.spec() != self.x_spec {
                return Err(Error::invalid("x variable does not match the fitted input"));
            }
            if ys.spec() != self.y_spec {
                return Err(Error::invalid("y variable does not match the fitted output"));
            }
            let design = features.design(xs);
            let pred = design * coef.transpose();
            let dy = coef.nrows();
            let c = -0.5 * dy as f64 * PI.ln();
            return Ok((0..xs.len())
                .map(|i| {
                    let sq: f64 = (0..dy).map(|k| (yv[i * dy + k] - pred[(i, k)]).powi(2)).sum();
                    clip(c - sq, self.clip)
                })
                .collect());
        }
        (0..xs.len())
            .map(|i| self.log_density(xs.sample(i), ys.sample(i)))
            .collect()
    }
}

/// Either kind of fitted predictor, for call sites that take an optional
/// side-information sample.
#[derive(Clone, Copy, Debug)]
pub enum Predictor<'a> {
    Marginal(&'a MarginalPredictor),
    Conditional(&'a ConditionalPredictor),
}

impl Predictor<'_> {
    /// `x` must be present exactly when the predictor is conditional.
    pub fn log_density(&self, x: Option<Sample<'_>>, y: Sample<'_>) -> Result<f64> {
        match (self, x) {
            (Predictor::Marginal(p), None) => p.log_density(y),
            (Predictor::Conditional(p), Some(x)) => p.log_density(x, y),
            (Predictor::Marginal(_), Some(_)) => Err(Error::invalid("marginal predictor takes no side information")),
            (Predictor::Conditional(_), None) => Err(Error::invalid("conditional predictor needs side information")),
        }
    }
}

fn empirical_pmf(symbols: impl Iterator<Item = usize>, cardinality: usize) -> Vec<f64> {
    let mut counts = vec![0usize; cardinality];
    let mut n = 0usize;
    for s in symbols {
        counts[s] += 1;
        n += 1;
    }
    counts.iter().map(|&c| c as f64 / n as f64).collect()
}

fn sample_mean(values: &[f64], dim: usize, rows: impl Iterator<Item = usize>) -> Vec<f64> {
    let mut mean = vec![0.0; dim];
    let mut n = 0usize;
    for i in rows {
        for k in 0..dim {
            mean[k] += values[i * dim + k];
        }
        n += 1;
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    mean
}

/// Fits the marginal distribution of `ys` within the family, rows restricted
/// to `rows`.
fn fit_distribution(
    config: &FamilyConfig,
    ys: &Variable,
    rows: &[usize],
) -> Result<(Distribution, FitDiagnostics)> {
    match (config.kind, ys.spec()) {
        (FamilyKind::Tabular | FamilyKind::CategoricalSoftmax, VariableSpec::Categorical { cardinality }) => {
            let symbols = ys.symbols().expect("categorical");
            Ok((
                Distribution::Categorical {
                    probs: empirical_pmf(rows.iter().map(|&i| symbols[i]), cardinality),
                },
                FitDiagnostics::EXACT,
            ))
        }
        (
            FamilyKind::GaussianMean | FamilyKind::LinearGaussian | FamilyKind::PolynomialGaussian { .. },
            VariableSpec::Real { dim },
        ) => Ok((
            Distribution::Gaussian {
                mean: sample_mean(ys.real_values().expect("real"), dim, rows.iter().copied()),
            },
            FitDiagnostics::EXACT,
        )),
        (FamilyKind::LaplaceMean, VariableSpec::Real { dim }) => {
            let values = ys.real_values().expect("real");
            let pts: Vec<f64> = rows
                .iter()
                .flat_map(|&i| values[i * dim..(i + 1) * dim].iter().copied())
                .collect();
            let (center, iterations, residual) =
                geometric_median(&pts, dim, WEISZFELD_TOLERANCE, WEISZFELD_MAX_ITERS);
            Ok((
                Distribution::Laplace { center },
                FitDiagnostics { iterations, residual },
            ))
        }
        (kind, VariableSpec::Real { .. }) => Err(Error::unsupported(kind, "real-valued targets")),
        (kind, VariableSpec::Categorical { .. }) => Err(Error::unsupported(kind, "categorical targets")),
    }
}

/// Fits `f[∅]`: the member of the family minimising the empirical negative
/// log-likelihood of `ys`.
pub fn fit_marginal(config: &FamilyConfig, ys: &Variable) -> Result<MarginalPredictor> {
    config.validate()?;
    if ys.is_empty() {
        return Err(Error::EmptySamples);
    }
    let rows: Vec<usize> = (0..ys.len()).collect();
    let (distribution, diagnostics) = fit_distribution(config, ys, &rows)?;
    Ok(MarginalPredictor {
        family: config.kind,
        clip: config.clip,
        y_spec: ys.spec(),
        distribution,
        diagnostics,
    })
}

/// Fits `f[x]`: the member of the family minimising the empirical conditional
/// negative log-likelihood of `ys` given `xs`.
pub fn fit_conditional(config: &FamilyConfig, xs: &Variable, ys: &Variable) -> Result<ConditionalPredictor> {
    config.validate()?;
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if ys.is_empty() {
        return Err(Error::EmptySamples);
    }

    let (model, diagnostics) = match config.kind {
        FamilyKind::Tabular | FamilyKind::GaussianMean | FamilyKind::LaplaceMean => {
            let cardinality = xs.cardinality().ok_or_else(|| {
                Error::unsupported(config.kind, "real-valued side information (use a regression family)")
            })?;
            let all: Vec<usize> = (0..ys.len()).collect();
            let (fallback, _) = fit_distribution(config, ys, &all)?;
            let mut groups = vec![Vec::new(); cardinality];
            for (i, &s) in xs.symbols().expect("categorical").iter().enumerate() {
                groups[s].push(i);
            }
            let mut table = Vec::with_capacity(cardinality);
            let mut diag = FitDiagnostics::EXACT;
            for rows in &groups {
                if rows.is_empty() {
                    table.push(None);
                } else {
                    let (d, g) = fit_distribution(config, ys, rows)?;
                    diag.iterations = diag.iterations.max(g.iterations);
                    diag.residual = diag.residual.max(g.residual);
                    table.push(Some(d));
                }
            }
            (ConditionalModel::PerSymbol { table, fallback }, diag)
        }
        FamilyKind::LinearGaussian | FamilyKind::PolynomialGaussian { .. } => {
            if ys.dim().is_none() {
                return Err(Error::unsupported(config.kind, "categorical targets"));
            }
            let features = Features::for_input(config.kind, xs.spec())?;
            let (coef, diag) = regression::fit(config, &features, xs, ys)?;
            (ConditionalModel::Regression { features, coef }, diag)
        }
        FamilyKind::CategoricalSoftmax => {
            let cardinality = ys
                .cardinality()
                .ok_or_else(|| Error::unsupported(config.kind, "real-valued targets"))?;
            let features = Features::for_input(config.kind, xs.spec())?;
            let (coef, diag) = softmax::fit(&config.gradient_settings(), &features, xs, ys, cardinality)?;
            (ConditionalModel::Softmax { features, coef }, diag)
        }
    };

    Ok(ConditionalPredictor {
        family: config.kind,
        clip: config.clip,
        x_spec: xs.spec(),
        y_spec: ys.spec(),
        model,
        diagnostics,
    })
}
