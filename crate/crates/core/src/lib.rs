//! Predictive F-information: usable information under a restricted family of
//! predictors.
//!
//! The crate is organised around the pipeline
//!
//! 1. [`families`]: fittable predictive families (tabular, fixed-covariance
//!    Gaussian, Laplace, linear/polynomial Gaussian, softmax) that satisfy
//!    optional ignorance,
//! 2. [`estimation`]: empirical F-entropy / F-information with PAC half-widths,
//! 3. [`structure`]: directed edge weights, maximum-weight arborescences and
//!    tree scoring,
//! 4. [`baselines`]: CPC (InfoNCE) and NWJ variational MI estimators,
//! 5. [`synth`]: synthetic tree-structured datasets with known ground truth,
//! 6. [`experiment`]: sample-size sweeps over the above.
//!
//! Data-parallel loops (edge weights, Monte-Carlo trials, sweeps) run on rayon
//! when the default `parallel` feature is enabled and fall back to plain
//! iteration otherwise. Both paths produce identical results.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auc;
pub mod baselines;
pub mod data;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod families;
mod linalg;
pub mod parallel;
pub mod structure;
pub mod synth;

pub use data::{Dataset, Sample, Variable, VariableSpec};
pub use error::{Error, Result};
pub use estimation::{
    corollary1_half_width, empirical_conditional_f_entropy, empirical_f_entropy,
    empirical_f_information, holdout_f_information, rademacher_half_width, BoundKind, FInfoEstimate, PacConfig,
    PacInterval,
};
pub use families::{
    fit_conditional, fit_marginal, ConditionalPredictor, Distribution, FamilyConfig, FamilyKind,
    FitMode, GradientSettings, MarginalPredictor, Predictor,
};
pub use parallel::Execution;
pub use structure::{
    brute_force_arborescence, edge_weights, max_arborescence, theorem2_gap, wrong_edges_ratio,
    Arborescence, CompareMode, EdgeSampleSizes, EdgeWeightMatrix,
};
pub use synth::{analytic_f_information_gaussian_pair, simulate, GroundTruth, Scenario, SimulationConfig};
