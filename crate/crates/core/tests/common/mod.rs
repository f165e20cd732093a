#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use usable_info::Variable;

/// Plug-in Shannon mutual information (nats) of paired symbols.
pub fn plug_in_mutual_information(xs: &[usize], ys: &[usize], cx: usize, cy: usize) -> f64 {
    let n = xs.len() as f64;
    let mut joint = vec![0usize; cx * cy];
    let mut px = vec![0usize; cx];
    let mut py = vec![0usize; cy];
    for (&x, &y) in xs.iter().zip(ys) {
        joint[x * cy + y] += 1;
        px[x] += 1;
        py[y] += 1;
    }
    let mut mi = 0.0;
    for x in 0..cx {
        for y in 0..cy {
            let c = joint[x * cy + y];
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (px[x] as f64 * py[y] as f64)).ln();
            }
        }
    }
    mi
}

/// Random discrete joint with a random dependence strength.
pub fn random_discrete_pair(rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>, usize, usize) {
    let cx = rng.random_range(2..=8);
    let cy = rng.random_range(2..=8);
    let n = rng.random_range(2..=200);
    let coupling: f64 = rng.random();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.random_range(0..cx);
        let y = if rng.random_bool(coupling) { x % cy } else { rng.random_range(0..cy) };
        xs.push(x);
        ys.push(y);
    }
    (xs, ys, cx, cy)
}

/// Row-major `n × d` Gaussian matrix.
pub fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<f64> {
    (0..n * d).map(|_| rng.sample(StandardNormal)).collect()
}

/// `y = x B + c + noise` with random shapes and noise level.
pub fn random_regression(rng: &mut ChaCha8Rng) -> (Variable, Variable) {
    let n = rng.random_range(10..=200);
    let dx = rng.random_range(1..=4);
    let dy = rng.random_range(1..=3);
    let noise = rng.random_range(0.0..2.0);
    let x = gaussian_rows(rng, n, dx);
    let b: Vec<f64> = gaussian_rows(rng, dx, dy);
    let c: Vec<f64> = gaussian_rows(rng, 1, dy);
    let mut y = vec![0.0; n * dy];
    for i in 0..n {
        for k in 0..dy {
            let mut v = c[k] + noise * rng.sample::<f64, _>(StandardNormal);
            for a in 0..dx {
                v += x[i * dx + a] * b[a * dy + k];
            }
            y[i * dy + k] = v;
        }
    }
    (Variable::real(dx, x).unwrap(), Variable::real(dy, y).unwrap())
}

/// `(TSS − RSS) / n` summed over output coordinates, i.e. `R² · tr Ĉov(Y)`,
/// from a Householder QR solve of the intercept-augmented design.
pub fn explained_variance_qr(xs: &Variable, ys: &Variable) -> f64 {
    let n = xs.len();
    let dx = xs.dim().unwrap();
    let dy = ys.dim().unwrap();
    let xv = xs.real_values().unwrap();
    let yv = ys.real_values().unwrap();
    let design = DMatrix::from_fn(n, dx + 1, |i, k| if k == 0 { 1.0 } else { xv[i * dx + k - 1] });
    let target = DMatrix::from_fn(n, dy, |i, k| yv[i * dy + k]);
    let qr = design.clone().qr();
    let qt_y = qr.q().transpose() * &target;
    let beta = qr.r().solve_upper_triangular(&qt_y).expect("full-rank design");
    let resid = &target - &design * beta;
    let rss: f64 = resid.iter().map(|r| r * r).sum();
    let tss: f64 = (0..dy)
        .map(|k| {
            let col = target.column(k);
            let mean = col.mean();
            col.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
        })
        .sum();
    (tss - rss) / n as f64
}

pub fn scalars(v: &[f64]) -> Variable {
    Variable::scalars(v).unwrap()
}

/// `x ~ N(0, 1)`, `y = x³ + 0.1·noise` on a fixed seed.
pub fn cubic_dataset(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let y = x
        .iter()
        .map(|v| v.powi(3) + 0.1 * rng.sample::<f64, _>(StandardNormal))
        .collect();
    (x, y)
}

/// Bivariate Gaussian with unit-variance `x`, `Var(y) = var_y` and
/// correlation `rho`.
pub fn gaussian_pair(rng: &mut ChaCha8Rng, n: usize, rho: f64, var_y: f64) -> (Vec<f64>, Vec<f64>) {
    let sd = var_y.sqrt();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        x.push(a);
        y.push(sd * (rho * a + (1.0 - rho * rho).sqrt() * b));
    }
    (x, y)
}
