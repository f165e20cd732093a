use nalgebra::DMatrix;

use super::GradientSettings;
use crate::error::{Error, Result};

pub(crate) struct Outcome {
    pub theta: DMatrix<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Projected gradient descent with a backtracking (Armijo) line search.
///
/// Stops once the gradient mapping `‖θ - P(θ - t∇f)‖∞ / t` drops below
/// `settings.tolerance`. Pass the identity as `project` for unconstrained
/// problems, where the gradient mapping is the gradient itself.
pub(crate) fn minimize(
    theta0: DMatrix<f64>,
    settings: &GradientSettings,
    objective: impl Fn(&DMatrix<f64>) -> (f64, DMatrix<f64>),
    project: impl Fn(DMatrix<f64>) -> DMatrix<f64>,
) -> Result<Outcome> {
    let mut theta = theta0;
    let (mut f, mut grad) = objective(&theta);
    let mut step = settings.step_size;
    let mut residual = f64::INFINITY;

    for iter in 0..settings.max_iters {
        if !f.is_finite() {
            return Err(Error::NonConvergence {
                iterations: iter,
                residual: f,
            });
        }
        // Let the step grow back after earlier backtracking.
        step = (step * 2.0).min(settings.step_size);
        loop {
            let candidate = project(&theta - &grad * step);
            let diff = &candidate - &theta;
            residual = diff.amax() / step;
            if residual < settings.tolerance {
                return Ok(Outcome {
                    theta,
                    iterations: iter,
                    residual,
                });
            }
            let (fc, gc) = objective(&candidate);
            let sufficient = f - diff.norm_squared() / (2.0 * step);
            if fc <= sufficient + 1e-15 * f.abs() {
                theta = candidate;
                f = fc;
                grad = gc;
                break;
            }
            step *= 0.5;
            if step < 1e-30 {
                // No representable descent step: numerically stationary.
                return Ok(Outcome {
                    theta,
                    iterations: iter,
                    residual,
                });
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: settings.max_iters,
        residual,
    })
}
