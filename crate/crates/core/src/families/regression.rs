use nalgebra::{DMatrix, DVector};

use super::{optim, FamilyConfig, FamilyKind, FitDiagnostics, FitMode};
use crate::data::{Sample, Variable, VariableSpec};
use crate::error::{Error, Result};
use crate::linalg;

/// Input feature map `φ(x)`; the first entry is always the intercept `1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Features {
    Linear { dim: usize },
    /// Elementwise powers `x_k^p` for `p = 1..=order`, grouped by power.
    Polynomial { dim: usize, order: usize },
    OneHot { cardinality: usize },
}

impl Features {
    pub(crate) fn for_input(kind: FamilyKind, x: VariableSpec) -> Result<Self> {
        Ok(match (kind, x) {
            (_, VariableSpec::Categorical { cardinality }) => Features::OneHot { cardinality },
            (FamilyKind::PolynomialGaussian { order }, VariableSpec::Real { dim }) => {
                Features::Polynomial { dim, order }
            }
            (FamilyKind::LinearGaussian | FamilyKind::CategoricalSoftmax, VariableSpec::Real { dim }) => {
                Features::Linear { dim }
            }
            (kind, _) => return Err(Error::unsupported(kind, "feature maps")),
        })
    }

    /// Length of `φ(x)` including the intercept.
    pub(crate) fn width(&self) -> usize {
        1 + match *self {
            Features::Linear { dim } => dim,
            Features::Polynomial { dim, order } => dim * order,
            Features::OneHot { cardinality } => cardinality,
        }
    }

    fn fill(&self, x: Sample<'_>, out: &mut [f64]) {
        out[0] = 1.0;
        match (*self, x) {
            (Features::Linear { .. }, Sample::Real(v)) => out[1..].copy_from_slice(v),
            (Features::Polynomial { dim, order }, Sample::Real(v)) => {
                for (k, &xk) in v.iter().enumerate() {
                    let mut pow = 1.0;
                    for p in 0..order {
                        pow *= xk;
                        out[1 + p * dim + k] = pow;
                    }
                }
            }
            (Features::OneHot { .. }, Sample::Categorical(s)) => {
                out[1..].iter_mut().for_each(|o| *o = 0.0);
                out[1 + s] = 1.0;
            }
            _ => unreachable!("sample kind validated by caller"),
        }
    }

    pub(crate) fn expand(&self, x: Sample<'_>) -> DVector<f64> {
        let mut out = DVector::zeros(self.width());
        self.fill(x, out.as_mut_slice());
        out
    }

    /// `n × width` design matrix.
    pub(crate) fn design(&self, xs: &Variable) -> DMatrix<f64> {
        let w = self.width();
        let mut row = vec![0.0; w];
        let mut m = DMatrix::zeros(xs.len(), w);
        for i in 0..xs.len() {
            self.fill(xs.sample(i), &mut row);
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = *v;
            }
        }
        m
    }
}

fn targets(ys: &Variable) -> DMatrix<f64> {
    let dim = ys.dim().expect("real target");
    DMatrix::from_row_slice(ys.len(), dim, ys.real_values().expect("real target"))
}

/// Mean squared residual `(1/n) Σ ‖y_i - B φ_i‖²` and its gradient in `B`.
fn squared_loss(design: &DMatrix<f64>, y: &DMatrix<f64>, coef: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
    let n = design.nrows() as f64;
    let resid = design * coef.transpose() - y;
    let loss = resid.norm_squared() / n;
    let grad = resid.transpose() * design * (2.0 / n);
    (loss, grad)
}

/// Coefficients `[b | W]` (`d_y × width`) of the Gaussian-mean regression.
///
/// Closed-form mode solves least squares via the pseudo-inverse. A norm
/// radius switches to projected gradient descent onto the spectral-norm ball;
/// gradient mode without a radius runs plain gradient descent.
pub(crate) fn fit(
    config: &FamilyConfig,
    features: &Features,
    xs: &Variable,
    ys: &Variable,
) -> Result<(DMatrix<f64>, FitDiagnostics)> {
    let design = features.design(xs);
    let y = targets(ys);

    if config.norm_radius.is_none() && matches!(config.fit, FitMode::ClosedForm) {
        let coef = linalg::lstsq(&design, &y).transpose();
        return Ok((coef, FitDiagnostics::EXACT));
    }

    let settings = config.gradient_settings();
    let mut init = DMatrix::zeros(y.ncols(), design.ncols());
    for k in 0..y.ncols() {
        init[(k, 0)] = y.column(k).mean();
    }
    let radius = config.norm_radius;
    let project = |m: DMatrix<f64>| match radius {
        Some(r) => linalg::project_spectral(&m, r),
        None => m,
    };
    let init = project(init);
    let out = optim::minimize(init, &settings, |c| squared_loss(&design, &y, c), project)?;
    Ok((
        out.theta,
        FitDiagnostics {
            iterations: out.iterations,
            residual: out.residual,
        },
    ))
}
