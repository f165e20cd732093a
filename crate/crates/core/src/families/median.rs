use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

/// `log Z_d` for the density `exp(-‖y - μ‖₂) / Z_d` on `R^d`:
/// `Z_d = 2 π^{d/2} Γ(d) / Γ(d/2)` (surface of the unit sphere times `Γ(d)`).
/// `Z_1 = 2`, `Z_2 = 2π`, `Z_3 = 8π`.
pub fn laplace_log_normalizer(dim: usize) -> f64 {
    let d = dim as f64;
    2f64.ln() + 0.5 * d * PI.ln() + ln_gamma(d) - ln_gamma(0.5 * d)
}

/// Geometric median of `points` (row-major, `dim` columns).
///
/// One dimension uses the exact median (midpoint of the two central order
/// statistics for even counts). Higher dimensions run Weiszfeld's iteration
/// from the centroid, with the Vardi–Zhang correction when an iterate lands
/// on a data point. Returns `(median, iterations, last movement)`.
pub fn geometric_median(points: &[f64], dim: usize, tol: f64, max_iters: usize) -> (Vec<f64>, usize, f64) {
    let n = points.len() / dim;
    assert!(n > 0, "geometric median of an empty set");

    if dim == 1 {
        let mut v = points.to_vec();
        v.sort_by(f64::total_cmp);
        let m = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        return (vec![m], 0, 0.0);
    }

    let mut y = vec![0.0; dim];
    for p in points.chunks_exact(dim) {
        for k in 0..dim {
            y[k] += p[k] / n as f64;
        }
    }

    let scale = points.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let coincide = 1e-14 * scale;
    let mut movement = f64::INFINITY;
    let mut num = vec![0.0; dim];
    let mut pull = vec![0.0; dim];

    for iter in 0..max_iters {
        num.iter_mut().for_each(|v| *v = 0.0);
        pull.iter_mut().for_each(|v| *v = 0.0);
        let mut den = 0.0;
        let mut eta = 0.0;
        for p in points.chunks_exact(dim) {
            let dist = p.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if dist <= coincide {
                eta += 1.0;
                continue;
            }
            let w = 1.0 / dist;
            den += w;
            for k in 0..dim {
                num[k] += w * p[k];
                pull[k] += w * (p[k] - y[k]);
            }
        }
        if den == 0.0 {
            return (y, iter, 0.0);
        }
        let t: Vec<f64> = num.iter().map(|v| v / den).collect();
        let next: Vec<f64> = if eta == 0.0 {
            t
        } else {
            let r = pull.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r <= eta {
                // The data point under the iterate is itself optimal.
                return (y, iter, 0.0);
            }
            let a = eta / r;
            t.iter().zip(&y).map(|(ti, yi)| (1.0 - a) * ti + a * yi).collect()
        };
        movement = next.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        y = next;
        if movement < tol {
            return (y, iter + 1, movement);
        }
    }
    (y, max_iters, movement)
}
