use nalgebra::DMatrix;

use super::regression::Features;
use super::{optim, FitDiagnostics, GradientSettings};
use crate::data::Variable;
use crate::error::Result;

pub(crate) fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + logits.iter().map(|&l| (l - max).exp()).sum::<f64>().ln()
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(logits);
    logits.iter().map(|&l| (l - lse).exp()).collect()
}

pub(crate) fn log_softmax_at(logits: &[f64], k: usize) -> f64 {
    logits[k] - log_sum_exp(logits)
}

/// Multinomial logistic regression by gradient descent, started from the
/// input-ignoring solution (intercepts at the log empirical pmf), so the
/// fitted loss never exceeds the marginal one.
pub(crate) fn fit(
    settings: &GradientSettings,
    features: &Features,
    xs: &Variable,
    ys: &Variable,
    cardinality: usize,
) -> Result<(DMatrix<f64>, FitDiagnostics)> {
    let design = features.design(xs);
    let symbols = ys.symbols().expect("categorical target");
    let n = symbols.len() as f64;

    let mut init = DMatrix::zeros(cardinality, design.ncols());
    let mut counts = vec![0usize; cardinality];
    symbols.iter().for_each(|&s| counts[s] += 1);
    for (k, &c) in counts.iter().enumerate() {
        init[(k, 0)] = (c as f64 / n).max(1e-12).ln();
    }

    let objective = |coef: &DMatrix<f64>| {
        let logits = &design * coef.transpose();
        let mut loss = 0.0;
        let mut resid = DMatrix::zeros(design.nrows(), cardinality);
        let mut row = vec![0.0; cardinality];
        for (i, &y) in symbols.iter().enumerate() {
            for k in 0..cardinality {
                row[k] = logits[(i, k)];
            }
            let lse = log_sum_exp(&row);
            loss += lse - row[y];
            for k in 0..cardinality {
                resid[(i, k)] = (row[k] - lse).exp();
            }
            resid[(i, y)] -= 1.0;
        }
        let grad = resid.transpose() * &design / n;
        (loss / n, grad)
    };

    let out = optim::minimize(init, settings, objective, |c| c)?;
    Ok((
        out.theta,
        FitDiagnostics {
            iterations: out.iterations,
            residual: out.residual,
        },
    ))
}
