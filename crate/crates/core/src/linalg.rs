use nalgebra::DMatrix;

/// Minimum-norm least-squares solution of `a · x ≈ b` via the SVD
/// pseudo-inverse. Singular values below `max(n, p) · ε · σ_max` are dropped,
/// so rank-deficient designs get the minimum-norm minimiser.
pub(crate) fn lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, p) = a.shape();
    if n == 0 || p == 0 {
        return DMatrix::zeros(p, b.ncols());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = (n.max(p) as f64) * f64::EPSILON * smax.max(f64::MIN_POSITIVE);
    svd.solve(b, eps).expect("U and V were computed")
}

/// Projects `m` onto the spectral-norm ball of radius `r` by clipping its
/// singular values.
pub(crate) fn project_spectral(m: &DMatrix<f64>, r: f64) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    if svd.singular_values.max() <= r {
        return m.clone();
    }
    let u = svd.u.as_ref().expect("u");
    let v_t = svd.v_t.as_ref().expect("v_t");
    let s = svd.singular_values.map(|s| s.min(r));
    u * DMatrix::from_diagonal(&s) * v_t
}

#[cfg(test)]
pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values.max()
}
