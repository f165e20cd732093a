//! Empirical F-entropy and F-information with PAC half-widths.
//!
//! Estimates are in-sample: each infimum is taken by fitting the family on
//! the data it is then evaluated on. [`holdout_f_information`] is the
//! out-of-sample variant, useful as a diagnostic; it can go negative.
//! All values are in nats.

use serde::Serialize;

use crate::data::Variable;
use crate::error::{Error, Result};
use crate::families::{fit_conditional, fit_marginal, FamilyConfig, FamilyKind};

/// Parameters of a PAC half-width.
///
/// Exactly one of `rademacher_bound` or the pair `(k_x, k_y)` must be set.
/// The first gives the generic bound `4R + 2B √(2 log(1/δ) / n)` with a
/// caller-supplied Rademacher complexity bound `R`; the second gives the
/// closed form for norm-constrained linear-Gaussian families with inputs in
/// `‖x‖ ≤ k_x` and outputs in `‖y‖ ≤ k_y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct PacConfig {
    pub delta: f64,
    /// Bound on `|log f[x](y)|` over the family.
    pub b: f64,
    #[serde(default)]
    pub rademacher_bound: Option<f64>,
    #[serde(default)]
    pub k_x: Option<f64>,
    #[serde(default)]
    pub k_y: Option<f64>,
}

impl PacConfig {
    pub fn rademacher(delta: f64, b: f64, rademacher_bound: f64) -> Self {
        Self {
            delta,
            b,
            rademacher_bound: Some(rademacher_bound),
            k_x: None,
            k_y: None,
        }
    }

    pub fn corollary1(delta: f64, b: f64, k_x: f64, k_y: f64) -> Self {
        Self {
            delta,
            b,
            rademacher_bound: None,
            k_x: Some(k_x),
            k_y: Some(k_y),
        }
    }

    pub fn bound_kind(&self) -> Result<BoundKind> {
        check_delta(self.delta)?;
        if !(self.b > 0.0 && self.b.is_finite()) {
            return Err(Error::invalid("B must be positive and finite"));
        }
        match (self.rademacher_bound, self.k_x, self.k_y) {
            (Some(r), None, None) if r >= 0.0 && r.is_finite() => Ok(BoundKind::GenericRademacher),
            (Some(_), None, None) => Err(Error::invalid("Rademacher bound must be non-negative")),
            (None, Some(kx), Some(ky)) if kx > 0.0 && ky > 0.0 => Ok(BoundKind::Corollary1),
            (None, Some(_), Some(_)) => Err(Error::invalid("k_x and k_y must be positive")),
            _ => Err(Error::invalid(
                "set exactly one of rademacher_bound or the pair (k_x, k_y)",
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    GenericRademacher,
    Corollary1,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PacInterval {
    pub delta: f64,
    pub half_width: f64,
    pub bound_kind: BoundKind,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FInfoEstimate {
    pub point_estimate: f64,
    pub h_marginal: f64,
    pub h_conditional: f64,
    pub sample_count: usize,
    pub pac: Option<PacInterval>,
    pub clamped_nonnegative: bool,
}

impl FInfoEstimate {
    /// `h_marginal - h_conditional`, before any clamping.
    pub fn raw(&self) -> f64 {
        self.h_marginal - self.h_conditional
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 0.5 {
        Ok(())
    } else {
        Err(Error::invalid(format!("delta must lie in (0, 0.5), got {delta}")))
    }
}

fn mean_nll(log_densities: &[f64]) -> Result<f64> {
    if log_densities.contains(&f64::NEG_INFINITY) {
        return Err(Error::UnboundedLogDensity);
    }
    let s: f64 = log_densities.iter().sum();
    if !s.is_finite() {
        return Err(Error::NonFinite("log-densities"));
    }
    Ok(-s / log_densities.len() as f64)
}

/// `inf_f (1/N) Σ -log f[∅](y_i)`.
pub fn empirical_f_entropy(config: &FamilyConfig, ys: &Variable) -> Result<f64> {
    let p = fit_marginal(config, ys)?;
    mean_nll(&p.log_densities(ys)?)
}

/// `inf_f (1/N) Σ -log f[x_i](y_i)`.
pub fn empirical_conditional_f_entropy(config: &FamilyConfig, xs: &Variable, ys: &Variable) -> Result<f64> {
    let p = fit_conditional(config, xs, ys)?;
    mean_nll(&p.log_densities(xs, ys)?)
}

/// `(M / √(4n)) (1 + 4 √(2 log(1/δ)))` with `M = (k_x + k_y)² + log 2π`.
pub fn corollary1_half_width(k_x: f64, k_y: f64, delta: f64, n: usize) -> Result<f64> {
    if !(k_x > 0.0 && k_y > 0.0) {
        return Err(Error::invalid("k_x and k_y must be positive"));
    }
    check_delta(delta)?;
    if n == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    let m = (k_x + k_y).powi(2) + (2.0 * std::f64::consts::PI).ln();
    Ok(m / (4.0 * n as f64).sqrt() * (1.0 + 4.0 * (2.0 * (1.0 / delta).ln()).sqrt()))
}

/// `4R + 2B √(2 log(1/δ) / n)`.
pub fn rademacher_half_width(rademacher_bound: f64, b: f64, delta: f64, n: usize) -> Result<f64> {
    check_delta(delta)?;
    if n == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    Ok(4.0 * rademacher_bound + 2.0 * b * (2.0 * (1.0 / delta).ln() / n as f64).sqrt())
}

/// Empirical F-information `Ĥ_F(Y) - Ĥ_F(Y|X)` on `(xs, ys)`.
///
/// With `pac`, a half-width is attached. The generic bound assumes
/// `|log f[x](y)| ≤ B`; if the family has no clip bound of its own, `B` is
/// applied as one so the assumption holds for the evaluated densities. The
/// closed-form bound is only available for `linear_gaussian` with a norm
/// radius of at most 1.
///
/// With `clamp`, a negative estimate is reported as 0 and flagged.
pub fn empirical_f_information(
    config: &FamilyConfig,
    xs: &Variable,
    ys: &Variable,
    pac: Option<&PacConfig>,
    clamp: bool,
) -> Result<FInfoEstimate> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let n = ys.len();
    if n < 2 {
        return Err(Error::invalid("F-information needs at least 2 samples"));
    }

    let mut config = *config;
    let pac_kind = match pac {
        Some(pac) => {
            let kind = pac.bound_kind()?;
            match kind {
                BoundKind::GenericRademacher => match config.clip {
                    Some(c) if c > pac.b => {
                        return Err(Error::invalid(format!(
                            "family clip bound {c} exceeds the PAC bound B = {}",
                            pac.b
                        )))
                    }
                    Some(_) => {}
                    None => config.clip = Some(pac.b),
                },
                BoundKind::Corollary1 => {
                    let constrained = config.kind == FamilyKind::LinearGaussian
                        && config.norm_radius.is_some_and(|r| r <= 1.0);
                    if !constrained {
                        return Err(Error::invalid(
                            "the closed-form bound needs linear_gaussian with norm_radius <= 1",
                        ));
                    }
                }
            }
            Some((pac, kind))
        }
        None => None,
    };

    let h_marginal = empirical_f_entropy(&config, ys)?;
    let h_conditional = empirical_conditional_f_entropy(&config, xs, ys)?;

    let pac = match pac_kind {
        None => None,
        Some((p, kind)) => {
            let half_width = match kind {
                BoundKind::GenericRademacher => {
                    rademacher_half_width(p.rademacher_bound.unwrap_or(0.0), p.b, p.delta, n)?
                }
                BoundKind::Corollary1 => {
                    corollary1_half_width(p.k_x.unwrap_or(0.0), p.k_y.unwrap_or(0.0), p.delta, n)?
                }
            };
            Some(PacInterval {
                delta: p.delta,
                half_width,
                bound_kind: kind,
            })
        }
    };

    let raw = h_marginal - h_conditional;
    let clamped = clamp && raw < 0.0;
    Ok(FInfoEstimate {
        point_estimate: if clamped { 0.0 } else { raw },
        h_marginal,
        h_conditional,
        sample_count: n,
        pac,
        clamped_nonnegative: clamped,
    })
}

/// Fits on the training split and evaluates the mean negative log-densities
/// on the test split. Not clamped.
pub fn holdout_f_information(
    config: &FamilyConfig,
    train_xs: &Variable,
    train_ys: &Variable,
    test_xs: &Variable,
    test_ys: &Variable,
) -> Result<FInfoEstimate> {
    if train_ys.is_empty() || test_ys.is_empty() {
        return Err(Error::EmptySamples);
    }
    if test_xs.len() != test_ys.len() {
        return Err(Error::LengthMismatch {
            left: test_xs.len(),
            right: test_ys.len(),
        });
    }
    let marginal = fit_marginal(config, train_ys)?;
    let conditional = fit_conditional(config, train_xs, train_ys)?;
    let h_marginal = mean_nll(&marginal.log_densities(test_ys)?)?;
    let h_conditional = mean_nll(&conditional.log_densities(test_xs, test_ys)?)?;
    Ok(FInfoEstimate {
        point_estimate: h_marginal - h_conditional,
        h_marginal,
        h_conditional,
        sample_count: test_ys.len(),
        pac: None,
        clamped_nonnegative: false,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{E, PI};

    use approx::assert_abs_diff_eq;

    use super::*;

    fn scalars(v: &[f64]) -> Variable {
        Variable::scalars(v).unwrap()
    }

    fn cat(c: usize, v: &[usize]) -> Variable {
        Variable::categorical(c, v.to_vec()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_abs_diff_eq!(
            empirical_f_entropy(&FamilyConfig::tabular(), &cat(2, &[0, 1])).unwrap(),
            2f64.ln(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            empirical_f_entropy(&FamilyConfig::gaussian_mean(), &scalars(&[-1.0, 1.0])).unwrap(),
            1.0 + 0.5 * PI.ln(),
            epsilon = 1e-15
        );
        let same = Variable::real(3, [2.0, -1.0, 0.5].repeat(7)).unwrap();
        assert_abs_diff_eq!(
            empirical_f_entropy(&FamilyConfig::gaussian_mean(), &same).unwrap(),
            1.5 * PI.ln(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn conditional_entropy_examples() {
        let xs = cat(2, &[0, 1, 0, 1]);
        assert_eq!(
            empirical_conditional_f_entropy(&FamilyConfig::tabular(), &xs, &xs).unwrap(),
            0.0
        );
        let x = scalars(&[-1.0, 0.0, 2.0, 3.5]);
        let y = x.map_values(|v| 2.0 * v + 1.0).unwrap();
        assert_abs_diff_eq!(
            empirical_conditional_f_entropy(&FamilyConfig::linear_gaussian(), &x, &y).unwrap(),
            0.5 * PI.ln(),
            epsilon = 1e-12
        );
        let xi = cat(2, &[0, 0, 1, 1]);
        let yi = cat(2, &[0, 1, 0, 1]);
        assert_abs_diff_eq!(
            empirical_conditional_f_entropy(&FamilyConfig::tabular(), &xi, &yi).unwrap(),
            2f64.ln(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn information_examples() {
        let xs = cat(2, &[0, 1, 0, 1]);
        let est = empirical_f_information(&FamilyConfig::tabular(), &xs, &xs, None, false).unwrap();
        assert_abs_diff_eq!(est.point_estimate, 2f64.ln(), epsilon = 1e-15);
        assert_eq!(est.sample_count, 4);

        // y = x with unit (1/N) variance: R² = 1 and I = Var(y) = 1.
        let y = scalars(&[-1.0, 1.0, -1.0, 1.0]);
        let est = empirical_f_information(&FamilyConfig::linear_gaussian(), &y, &y, None, false).unwrap();
        assert_abs_diff_eq!(est.point_estimate, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn unseen_zero_probability_needs_clip() {
        // Holdout: test symbol never seen in training has probability 0.
        let cfg = FamilyConfig::tabular();
        let (trx, tr) = (cat(2, &[0, 0]), cat(2, &[0, 0]));
        let (tex, te) = (cat(2, &[0]), cat(2, &[1]));
        assert!(matches!(
            holdout_f_information(&cfg, &trx, &tr, &tex, &te),
            Err(Error::UnboundedLogDensity)
        ));
        let clipped = cfg.with_clip(10.0);
        let est = holdout_f_information(&clipped, &trx, &tr, &tex, &te).unwrap();
        assert_eq!(est.h_marginal, 10.0);
    }

    #[test]
    fn corollary1_examples() {
        let w = corollary1_half_width(1.0, 1.0, (-1.0f64).exp(), 100).unwrap();
        let expected = (4.0 + (2.0 * PI).ln()) / 20.0 * (1.0 + 4.0 * 2f64.sqrt());
        assert_abs_diff_eq!(w, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(w, 1.9431, epsilon = 5e-5);

        let a = corollary1_half_width(0.7, 1.3, 0.1, 50).unwrap();
        let b = corollary1_half_width(0.7, 1.3, 0.1, 200).unwrap();
        assert_abs_diff_eq!(b, a / 2.0, epsilon = 1e-12);

        let m = 4.0 + (2.0 * PI).ln();
        let floor = (1.0 + 4.0 * (2.0 * 2f64.ln()).sqrt()) * m / (4.0f64 * 100.0).sqrt();
        let near = corollary1_half_width(1.0, 1.0, 0.5 - 1e-12, 100).unwrap();
        assert_abs_diff_eq!(near, floor, epsilon = 1e-9);
        assert!(corollary1_half_width(1.0, 1.0, 0.3, 100).unwrap() > near);

        assert!(corollary1_half_width(0.0, 1.0, 0.1, 1).is_err());
        assert!(corollary1_half_width(1.0, 1.0, 0.5, 1).is_err());
        assert!(corollary1_half_width(1.0, 1.0, 0.1, 0).is_err());
    }

    #[test]
    fn pac_config_validation() {
        assert!(PacConfig::rademacher(0.1, 1.0, 0.2).bound_kind().is_ok());
        assert!(PacConfig::rademacher(0.6, 1.0, 0.2).bound_kind().is_err());
        assert!(PacConfig::rademacher(0.1, 0.0, 0.2).bound_kind().is_err());
        let both = PacConfig {
            k_x: Some(1.0),
            k_y: Some(1.0),
            ..PacConfig::rademacher(0.1, 1.0, 0.2)
        };
        assert!(both.bound_kind().is_err());
        let neither = PacConfig {
            rademacher_bound: None,
            ..both
        };
        let neither = PacConfig { k_x: None, ..neither };
        assert!(neither.bound_kind().is_err());
    }

    #[test]
    fn pac_half_widths_are_attached() {
        let x = scalars(&[-0.5, -0.2, 0.1, 0.4, 0.6]);
        let y = x.map_values(|v| 0.8 * v).unwrap();
        let cfg = FamilyConfig::linear_gaussian().with_norm_radius(1.0);
        let pac = PacConfig::corollary1(0.1, 1.0, 1.0, 1.0);
        let est = empirical_f_information(&cfg, &x, &y, Some(&pac), false).unwrap();
        let pi = est.pac.unwrap();
        assert_eq!(pi.bound_kind, BoundKind::Corollary1);
        assert_abs_diff_eq!(pi.half_width, corollary1_half_width(1.0, 1.0, 0.1, 5).unwrap());

        // Unconstrained family: closed form refused.
        assert!(empirical_f_information(&FamilyConfig::linear_gaussian(), &x, &y, Some(&pac), false).is_err());

        let generic = PacConfig::rademacher(0.1, 2.0, 0.05);
        let est = empirical_f_information(&FamilyConfig::linear_gaussian(), &x, &y, Some(&generic), false).unwrap();
        let expected = 4.0 * 0.05 + 2.0 * 2.0 * (2.0 * 10f64.ln() / 5.0).sqrt();
        assert_abs_diff_eq!(est.pac.unwrap().half_width, expected, epsilon = 1e-12);
        assert!(est.pac.unwrap().half_width > 0.0);

        let too_wide = FamilyConfig::linear_gaussian().with_clip(3.0);
        assert!(empirical_f_information(&too_wide, &x, &y, Some(&generic), false).is_err());
    }

    #[test]
    fn clamping_is_opt_in_and_flagged() {
        // Holdout-like negative value cannot occur in-sample for exact fits,
        // so exercise the flag through a softmax fit that stops early.
        let x = scalars(&[0.0, 1.0, 2.0, 3.0]);
        let y = cat(2, &[0, 1, 1, 0]);
        let est = empirical_f_information(&FamilyConfig::categorical_softmax(), &x, &y, None, true).unwrap();
        assert!(est.point_estimate >= 0.0);
        assert_eq!(est.clamped_nonnegative, est.raw() < 0.0);
        assert_abs_diff_eq!(est.raw(), est.h_marginal - est.h_conditional);
    }

    #[test]
    fn holdout_on_training_data_equals_in_sample() {
        let x = scalars(&[0.1, 0.5, 0.9, 1.3, 2.0, 2.2]);
        let y = scalars(&[1.0, 0.2, 1.9, 2.1, 3.3, 2.0]);
        for cfg in [FamilyConfig::linear_gaussian(), FamilyConfig::polynomial_gaussian(2)] {
            let a = empirical_f_information(&cfg, &x, &y, None, false).unwrap();
            let b = holdout_f_information(&cfg, &x, &y, &x, &y).unwrap();
            assert_abs_diff_eq!(a.point_estimate, b.point_estimate, epsilon = 1e-12);
        }
    }

    #[test]
    fn errors() {
        let one = scalars(&[1.0]);
        assert!(empirical_f_information(&FamilyConfig::linear_gaussian(), &one, &one, None, false).is_err());
        let e = Variable::real(1, vec![]).unwrap();
        assert!(holdout_f_information(&FamilyConfig::linear_gaussian(), &one, &one, &e, &e).is_err());
        let _ = E;
    }
}
