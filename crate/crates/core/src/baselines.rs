//! Variational mutual-information baselines: CPC (InfoNCE) and NWJ with
//! small parametric critics.
//!
//! Both fittable critics have the form `f(x, y) = g(x) + h(y) + x̃ᵀ M ỹ` on
//! standardized inputs `x̃, ỹ`. The bilinear critic has affine `g, h`; the
//! quadratic critic adds every degree-two monomial of `x̃` and of `ỹ`, which
//! together with `M` spans all degree-two monomials of `(x̃, ỹ)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Sample, Variable};
use crate::error::{Error, Result};
use crate::parallel::rng_for;

pub const DEFAULT_CAP: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticKind {
    Bilinear,
    Quadratic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Cpc,
    Nwj,
}

impl std::fmt::Display for Objective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Objective::Cpc => "cpc",
            Objective::Nwj => "nwj",
        })
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cpc" => Ok(Objective::Cpc),
            "nwj" => Ok(Objective::Nwj),
            other => Err(Error::invalid(format!("unknown objective {other:?}"))),
        }
    }
}

/// Per-coordinate affine standardization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    fn identity(dim: usize) -> Self {
        Self {
            shift: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    fn fit(points: &DMatrix<f64>) -> Self {
        let n = points.nrows() as f64;
        let (shift, scale) = points
            .column_iter()
            .map(|c| {
                let mean = c.mean();
                let sd = (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
                (mean, if sd > 1e-12 { sd } else { 1.0 })
            })
            .unzip();
        Self { shift, scale }
    }

    fn apply(&self, points: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(points.nrows(), points.ncols(), |i, k| {
            (points[(i, k)] - self.shift[k]) / self.scale[k]
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Critic {
    /// `f ≡ value`.
    Constant { value: f64 },
    /// Fittable critic; see the module docs for the parameter layout.
    Parametric {
        family: CriticKind,
        dx: usize,
        dy: usize,
        x_standardizer: Standardizer,
        y_standardizer: Standardizer,
        theta: Vec<f64>,
    },
    /// `offset + log p(x, y) / (p(x) p(y))` for a standard bivariate Gaussian
    /// with correlation `rho`; scalar inputs only.
    GaussianOracle { rho: f64, offset: f64 },
}

fn tri(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Offsets of the blocks `c | u | v | M | P | Q` inside `theta`.
#[derive(Clone, Copy)]
struct Layout {
    dx: usize,
    dy: usize,
    quadratic: bool,
}

impl Layout {
    fn u(&self) -> usize {
        1
    }
    fn v(&self) -> usize {
        1 + self.dx
    }
    fn m(&self) -> usize {
        1 + self.dx + self.dy
    }
    fn p(&self) -> usize {
        self.m() + self.dx * self.dy
    }
    fn q(&self) -> usize {
        self.p() + if self.quadratic { tri(self.dx) } else { 0 }
    }
    fn len(&self) -> usize {
        self.q() + if self.quadratic { tri(self.dy) } else { 0 }
    }
}

/// Upper-triangular monomials `z_a z_b`, `a ≤ b`, row-major.
fn monomials(z: &[f64], out: &mut Vec<f64>) {
    out.clear();
    for a in 0..z.len() {
        for b in a..z.len() {
            out.push(z[a] * z[b]);
        }
    }
}

impl Critic {
    pub fn constant(value: f64) -> Self {
        Critic::Constant { value }
    }

    pub fn gaussian_oracle(rho: f64) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(Error::invalid("oracle critic needs |rho| < 1"));
        }
        Ok(Critic::GaussianOracle { rho, offset: 1.0 })
    }

    /// Zero-initialized parametric critic on the identity standardization.
    pub fn zeros(family: CriticKind, dx: usize, dy: usize) -> Self {
        let layout = Layout {
            dx,
            dy,
            quadratic: family == CriticKind::Quadratic,
        };
        Critic::Parametric {
            family,
            dx,
            dy,
            x_standardizer: Standardizer::identity(dx),
            y_standardizer: Standardizer::identity(dy),
            theta: vec![0.0; layout.len()],
        }
    }

    /// Scores `S[i][j] = f(x_i, y_j)` for dense row-major inputs.
    fn score_matrix(&self, xs: &DMatrix<f64>, ys: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let (n, k) = (xs.nrows(), ys.nrows());
        let s = match self {
            Critic::Constant { value } => DMatrix::from_element(n, k, *value),
            Critic::GaussianOracle { rho, offset } => {
                if xs.ncols() != 1 || ys.ncols() != 1 {
                    return Err(Error::invalid("oracle critic needs scalar x and y"));
                }
                DMatrix::from_fn(n, k, |i, j| offset + gaussian_log_ratio(*rho, xs[(i, 0)], ys[(j, 0)]))
            }
            Critic::Parametric {
                x_standardizer,
                y_standardizer,
                ..
            } => {
                let (x, y) = (x_standardizer.apply(xs), y_standardizer.apply(ys));
                let (g, h, m) = self.parts(&x, &y);
                let mut s = &x * m * y.transpose();
                for i in 0..n {
                    for j in 0..k {
                        s[(i, j)] += g[i] + h[j];
                    }
                }
                s
            }
        };
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("critic output"));
        }
        Ok(s)
    }

    /// `g(x_i)`, `h(y_j)` and `M` for standardized inputs.
    fn parts(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>, DMatrix<f64>) {
        let Critic::Parametric {
            family, dx, dy, theta, ..
        } = self
        else {
            unreachable!("parametric critic")
        };
        let l = Layout {
            dx: *dx,
            dy: *dy,
            quadratic: *family == CriticKind::Quadratic,
        };
        let u = DVector::from_column_slice(&theta[l.u()..l.v()]);
        let v = DVector::from_column_slice(&theta[l.v()..l.m()]);
        let m = DMatrix::from_row_slice(*dx, *dy, &theta[l.m()..l.p()]);
        let mut g = x * u;
        let mut h = y * v;
        g.add_scalar_mut(theta[0]);
        if l.quadratic {
            let mut buf = Vec::new();
            for (i, row) in x.row_iter().enumerate() {
                let z: Vec<f64> = row.iter().copied().collect();
                monomials(&z, &mut buf);
                g[i] += buf.iter().zip(&theta[l.p()..l.q()]).map(|(a, b)| a * b).sum::<f64>();
            }
            for (j, row) in y.row_iter().enumerate() {
                let z: Vec<f64> = row.iter().copied().collect();
                monomials(&z, &mut buf);
                h[j] += buf.iter().zip(&theta[l.q()..l.len()]).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        (g, h, m)
    }

    /// Single evaluation `f(x, y)`.
    pub fn score(&self, x: Sample<'_>, y: Sample<'_>) -> Result<f64> {
        let row = |s: Sample<'_>, dim: Option<usize>| match (s, dim) {
            (Sample::Real(v), _) => DMatrix::from_row_slice(1, v.len(), v),
            (Sample::Categorical(c), Some(d)) => DMatrix::from_fn(1, d, |_, k| f64::from(u8::from(k == c))),
            (Sample::Categorical(c), None) => DMatrix::from_element(1, 1, c as f64),
        };
        let (dx, dy) = match self {
            Critic::Parametric { dx, dy, .. } => (Some(*dx), Some(*dy)),
            _ => (None, None),
        };
        Ok(self.score_matrix(&row(x, dx), &row(y, dy))?[(0, 0)])
    }
}

/// `log p(x, y) − log p(x) − log p(y)` for a standard bivariate Gaussian.
pub fn gaussian_log_ratio(rho: f64, x: f64, y: f64) -> f64 {
    let r2 = rho * rho;
    -0.5 * (1.0 - r2).ln() - (r2 * x * x - 2.0 * rho * x * y + r2 * y * y) / (2.0 * (1.0 - r2))
}

/// Mutual information `−½ log(1 − ρ²)` of a bivariate Gaussian.
pub fn gaussian_mutual_information(rho: f64) -> f64 {
    -0.5 * (1.0 - rho * rho).ln()
}

/// Dense `n × dim` matrix of a variable; categorical symbols are one-hot.
pub fn dense(v: &Variable) -> DMatrix<f64> {
    if let Some(values) = v.real_values() {
        let d = v.dim().unwrap_or(1);
        DMatrix::from_row_slice(v.len(), d, values)
    } else {
        let c = v.cardinality().unwrap_or(1);
        let symbols = v.symbols().unwrap_or(&[]);
        DMatrix::from_fn(v.len(), c, |i, k| f64::from(u8::from(symbols[i] == k)))
    }
}

fn log_sum_exp(row: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = row.clone().fold(f64::NEG_INFINITY, f64::max);
    max + row.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// InfoNCE value of a score matrix: `mean_i (S_ii − log mean_j e^{S_ij})`.
/// Never exceeds `log N`.
pub fn cpc_from_scores(scores: &DMatrix<f64>) -> Result<f64> {
    let n = scores.nrows();
    if n < 2 || scores.ncols() != n {
        return Err(Error::invalid("CPC needs a square batch of at least 2 pairs"));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("critic output"));
    }
    let ln_n = (n as f64).ln();
    let total: f64 = (0..n)
        .map(|i| scores[(i, i)] - log_sum_exp(scores.row(i).iter().copied()))
        .sum();
    Ok(total / n as f64 + ln_n)
}

/// `mean f(joint) − e^{−1} mean e^{min(f, cap)}(product)`.
pub fn nwj_from_scores(joint: &[f64], product: &[f64], cap: f64) -> Result<f64> {
    if joint.is_empty() || product.is_empty() {
        return Err(Error::EmptySamples);
    }
    if joint.iter().chain(product).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("critic output"));
    }
    let a = joint.iter().sum::<f64>() / joint.len() as f64;
    let b = product.iter().map(|f| f.min(cap).exp()).sum::<f64>() / product.len() as f64;
    Ok(a - (-1.0f64).exp() * b)
}

fn check_pair(xs: &Variable, ys: &Variable) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    Ok(())
}

/// InfoNCE on one batch of `N` aligned pairs.
pub fn cpc_estimate(critic: &Critic, xs: &Variable, ys: &Variable) -> Result<f64> {
    check_pair(xs, ys)?;
    cpc_from_scores(&critic.score_matrix(&dense(xs), &dense(ys))?)
}

/// Empirical NWJ value from joint pairs and product-of-marginals pairs.
pub fn nwj_estimate(
    critic: &Critic,
    joint: (&Variable, &Variable),
    product: (&Variable, &Variable),
    cap: f64,
) -> Result<f64> {
    check_pair(joint.0, joint.1)?;
    check_pair(product.0, product.1)?;
    let fj = pair_scores(critic, &dense(joint.0), &dense(joint.1))?;
    let fp = pair_scores(critic, &dense(product.0), &dense(product.1))?;
    nwj_from_scores(&fj, &fp, cap)
}

/// `f(x_i, y_i)` for aligned rows, in blocks to bound memory.
fn pair_scores(critic: &Critic, xs: &DMatrix<f64>, ys: &DMatrix<f64>) -> Result<Vec<f64>> {
    const BLOCK: usize = 256;
    let n = xs.nrows();
    let mut out = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let len = BLOCK.min(n - start);
        let s = critic.score_matrix(&xs.rows(start, len).into_owned(), &ys.rows(start, len).into_owned())?;
        out.extend((0..len).map(|i| s[(i, i)]));
        start += len;
    }
    Ok(out)
}

fn default_batch_size() -> usize {
    64
}
fn default_iterations() -> usize {
    300
}
fn default_learning_rate() -> f64 {
    0.05
}
fn default_cap() -> f64 {
    DEFAULT_CAP
}

/// Minibatch settings for critic fitting.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchSpec {
    /// CPC batch size `N`; also the NWJ joint and product batch size.
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    /// Adam learning rate.
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default)]
    pub seed: u64,
    /// Cap on critic outputs before exponentiation in NWJ.
    #[serde(default = "default_cap")]
    pub cap: f64,
}

impl Default for BatchSpec {
    fn default() -> Self {
        Self {
            batch_size: default_batch_size(),
            iterations: default_iterations(),
            learning_rate: default_learning_rate(),
            seed: 0,
            cap: DEFAULT_CAP,
        }
    }
}

impl BatchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size < 2 {
            return Err(Error::invalid("batch size must be at least 2"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !self.cap.is_finite() {
            return Err(Error::invalid("cap must be finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FittedCritic {
    pub critic: Critic,
    pub iterations: usize,
    /// Objective on the last minibatch.
    pub final_objective: f64,
}

/// Gradient of the objective with respect to the scores, `∂L/∂S`, for one
/// minibatch (rows index x, columns index y).
fn score_gradient(objective: Objective, s: &DMatrix<f64>, shift: usize, cap: f64) -> (f64, DMatrix<f64>) {
    let n = s.nrows();
    let nf = n as f64;
    let mut d = DMatrix::zeros(n, n);
    match objective {
        Objective::Cpc => {
            let mut value = 0.0;
            for i in 0..n {
                let lse = log_sum_exp(s.row(i).iter().copied());
                value += s[(i, i)] - lse;
                for j in 0..n {
                    d[(i, j)] -= (s[(i, j)] - lse).exp() / nf;
                }
                d[(i, i)] += 1.0 / nf;
            }
            (value / nf + nf.ln(), d)
        }
        Objective::Nwj => {
            let inv_e = (-1.0f64).exp();
            let mut value = 0.0;
            for i in 0..n {
                let j = (i + shift) % n;
                let f = s[(i, j)];
                let e = f.min(cap).exp();
                value += s[(i, i)] - inv_e * e;
                d[(i, i)] += 1.0 / nf;
                if f < cap {
                    d[(i, j)] -= inv_e * e / nf;
                }
            }
            (value / nf, d)
        }
    }
}

/// Maximizes the objective by minibatch Adam from a zero critic.
///
/// Each step draws `batch_size` rows with replacement; NWJ pairs row `i`'s
/// `x` with row `i + k`'s `y` (random `k ≠ 0`) for its product samples.
pub fn fit_critic(
    kind: CriticKind,
    objective: Objective,
    xs: &Variable,
    ys: &Variable,
    spec: &BatchSpec,
) -> Result<FittedCritic> {
    spec.validate()?;
    check_pair(xs, ys)?;
    let n = xs.len();
    if n < 2 {
        return Err(Error::invalid("critic fitting needs at least 2 pairs"));
    }
    let (x_raw, y_raw) = (dense(xs), dense(ys));
    let (sx, sy) = (Standardizer::fit(&x_raw), Standardizer::fit(&y_raw));
    let (x_all, y_all) = (sx.apply(&x_raw), sy.apply(&y_raw));
    let (dx, dy) = (x_all.ncols(), y_all.ncols());
    let layout = Layout {
        dx,
        dy,
        quadratic: kind == CriticKind::Quadratic,
    };
    let mut critic = Critic::zeros(kind, dx, dy);
    let batch = spec.batch_size.min(n);

    let mut rng = rng_for(spec.seed);
    let p = layout.len();
    let (mut m1, mut m2) = (vec![0.0; p], vec![0.0; p]);
    let (beta1, beta2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut last = 0.0;
    let mut buf = Vec::new();
    for t in 1..=spec.iterations {
        let rows: Vec<usize> = (0..batch).map(|_| rng.random_range(0..n)).collect();
        let shift = rng.random_range(1..batch);
        let x = x_all.select_rows(&rows);
        let y = y_all.select_rows(&rows);
        let s = critic.score_matrix(&x, &y)?;
        let (value, d) = score_gradient(objective, &s, shift, spec.cap);
        if !value.is_finite() {
            return Err(Error::NonConvergence {
                iterations: t,
                residual: value,
            });
        }
        last = value;

        let row_sums: DVector<f64> = d.column_sum();
        let col_sums: DVector<f64> = d.row_sum().transpose();
        let mut grad = vec![0.0; p];
        grad[0] = d.sum();
        let gu = x.transpose() * &row_sums;
        let gv = y.transpose() * &col_sums;
        let gm = x.transpose() * &d * &y;
        grad[layout.u()..layout.v()].copy_from_slice(gu.as_slice());
        grad[layout.v()..layout.m()].copy_from_slice(gv.as_slice());
        for a in 0..dx {
            for b in 0..dy {
                grad[layout.m() + a * dy + b] = gm[(a, b)];
            }
        }
        if layout.quadratic {
            for (i, r) in row_sums.iter().enumerate() {
                let z: Vec<f64> = x.row(i).iter().copied().collect();
                monomials(&z, &mut buf);
                for (g, m) in grad[layout.p()..layout.q()].iter_mut().zip(&buf) {
                    *g += r * m;
                }
            }
            for (j, c) in col_sums.iter().enumerate() {
                let z: Vec<f64> = y.row(j).iter().copied().collect();
                monomials(&z, &mut buf);
                for (g, m) in grad[layout.q()..layout.len()].iter_mut().zip(&buf) {
                    *g += c * m;
                }
            }
        }

        let Critic::Parametric { theta, .. } = &mut critic else {
            unreachable!()
        };
        let (b1t, b2t) = (1.0 - beta1.powi(t as i32), 1.0 - beta2.powi(t as i32));
        for k in 0..p {
            m1[k] = beta1 * m1[k] + (1.0 - beta1) * grad[k];
            m2[k] = beta2 * m2[k] + (1.0 - beta2) * grad[k] * grad[k];
            theta[k] += spec.learning_rate * (m1[k] / b1t) / ((m2[k] / b2t).sqrt() + eps);
        }
    }

    if let Critic::Parametric {
        x_standardizer,
        y_standardizer,
        ..
    } = &mut critic
    {
        *x_standardizer = sx;
        *y_standardizer = sy;
    }
    Ok(FittedCritic {
        critic,
        iterations: spec.iterations,
        final_objective: last,
    })
}

/// Pairs each `x_i` with `y_{(i+1) mod n}`: a deterministic stand-in for
/// product-of-marginals samples.
pub fn shifted_product(xs: &Variable, ys: &Variable) -> Result<(Variable, Variable)> {
    check_pair(xs, ys)?;
    let n = ys.len();
    let order: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
    Ok((xs.clone(), ys.select(&order)))
}

/// CPC averaged over consecutive batches of `batch_size` pairs (a single
/// batch when fewer pairs are available; a trailing partial batch is
/// dropped).
pub fn batched_cpc(critic: &Critic, xs: &Variable, ys: &Variable, batch_size: usize) -> Result<f64> {
    check_pair(xs, ys)?;
    let n = xs.len();
    if n < 2 || batch_size < 2 {
        return Err(Error::invalid("CPC needs batches of at least 2 pairs"));
    }
    let size = batch_size.min(n);
    let (x, y) = (dense(xs), dense(ys));
    let batches = n / size;
    let mut total = 0.0;
    for b in 0..batches {
        let s = critic.score_matrix(
            &x.rows(b * size, size).into_owned(),
            &y.rows(b * size, size).into_owned(),
        )?;
        total += cpc_from_scores(&s)?;
    }
    Ok(total / batches as f64)
}

/// Fits a critic and evaluates its objective on the same data: CPC in
/// batches, NWJ against [`shifted_product`] pairs.
pub fn baseline_estimate(
    kind: CriticKind,
    objective: Objective,
    xs: &Variable,
    ys: &Variable,
    spec: &BatchSpec,
) -> Result<f64> {
    let fitted = fit_critic(kind, objective, xs, ys, spec)?;
    match objective {
        Objective::Cpc => batched_cpc(&fitted.critic, xs, ys, spec.batch_size),
        Objective::Nwj => {
            let (px, py) = shifted_product(xs, ys)?;
            nwj_estimate(&fitted.critic, (xs, ys), (&px, &py), spec.cap)
        }
    }
}
