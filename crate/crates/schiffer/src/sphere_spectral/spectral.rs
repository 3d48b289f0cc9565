//! Chebyshev collocation of the same eigenproblems on a [`RadialGrid`].
//!
//! The solutions are even in `t`, so the `ρ = t²` grid of the field
//! discretisation represents them to spectral accuracy. The sphere branch
//! builds its trivial solution and kernel from these nodal values, which
//! makes both exact for the discrete operator.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::check_lambda;
use crate::error::{Error, Result};
use crate::field_discretization::RadialGrid;

/// Eigenpair on the grid nodes.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralEigen {
    pub lambda: f64,
    pub ell: u32,
    /// `μ(λ)` or `σ_ℓ(λ)`.
    pub value: f64,
    pub mu: f64,
    /// `U(r_i)` with `U(1) = 1`, or `V(r_i)` with `V(0) = 1`.
    pub nodal: Vec<f64>,
    /// `U''(1)` or `V'(1)` from the differentiation matrices.
    pub boundary_slope: f64,
}

/// `λ tan(λt)/t`, with its limit `λ²` at `t = 0`.
pub(crate) fn tan_over_t(lambda: f64, t: f64) -> f64 {
    if t == 0.0 {
        lambda * lambda
    } else {
        lambda * (lambda * t).tan() / t
    }
}

/// `A = -∂_tt + λ tan(λt) ∂_t + (ℓλ)²/cos²(λt)` on all nodes.
pub(crate) fn operator(grid: &RadialGrid, lambda: f64, ell: u32) -> DMatrix<f64> {
    let mut a = -&grid.drr;
    for i in 0..=grid.k {
        let t = grid.r[i];
        let c = tan_over_t(lambda, t);
        for j in 0..=grid.k {
            a[(i, j)] += c * grid.dt[(i, j)];
        }
        a[(i, i)] += (ell as f64 * lambda).powi(2) / (lambda * t).cos().powi(2);
    }
    a
}

/// Real eigenvalues of `b` sorted ascending, with spurious complex pairs dropped.
fn real_spectrum(b: &DMatrix<f64>) -> Vec<f64> {
    let scale = b.amax().max(1.0);
    let mut ev: Vec<f64> = b
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-8 * scale)
        .map(|z| z.re)
        .collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

fn null_vector(b: &DMatrix<f64>, value: f64) -> Result<DVector<f64>> {
    let n = b.nrows();
    let shifted = b - DMatrix::identity(n, n) * value;
    let svd = shifted.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::Eigen("missing singular vectors".into()))?;
    let s = &svd.singular_values;
    let i = (0..s.len()).min_by(|a, c| s[*a].total_cmp(&s[*c])).expect("nonempty");
    let mut y = vt.row(i).transpose();
    // Inverse iteration: its rounding errors lie in the slow modes, where the
    // SVD vector carries grid-scale noise that second derivatives amplify.
    let shift = value + 1e-10 * (1.0 + value.abs());
    {
        let lu = (b - DMatrix::identity(n, n) * shift).lu();
        for _ in 0..2 {
            match lu.solve(&y) {
                Some(z) if z.iter().all(|v| v.is_finite()) => y = &z / z.norm(),
                _ => break,
            }
        }
    }
    Ok(y)
}

/// `μ(λ)` and `U_λ` on the grid: `u'(1) = 0` eliminates `u(1)` and the
/// interior collocation rows give a `K × K` eigenproblem whose bottom
/// eigenvalue `0` (the constant) is skipped.
pub fn spectral_mu(grid: &RadialGrid, lambda: f64) -> Result<SpectralEigen> {
    check_lambda(lambda)?;
    let k = grid.k;
    let a = operator(grid, lambda, 0);
    // u_K = Σ_j e_j u_j with e_j = -dt[K, j]/dt[K, K]
    let dkk = grid.dt[(k, k)];
    let e: Vec<f64> = (0..k).map(|j| -grid.dt[(k, j)] / dkk).collect();
    let b = DMatrix::from_fn(k, k, |i, j| a[(i, j)] + a[(i, k)] * e[j]);
    let ev = real_spectrum(&b);
    let zero_tol = 1e-8 * b.amax();
    if !ev.iter().any(|v| v.abs() <= zero_tol) {
        return Err(Error::Eigen(format!("no constant mode found at lambda = {lambda}")));
    }
    let mu = *ev
        .iter()
        .find(|v| **v > zero_tol)
        .ok_or_else(|| Error::Eigen(format!("no positive eigenvalue at lambda = {lambda}")))?;
    let y = null_vector(&b, mu)?;
    let uk: f64 = (0..k).map(|j| e[j] * y[j]).sum();
    let mut u = DVector::from_fn(k + 1, |i, _| if i < k { y[i] } else { uk });
    u /= uk;
    let slope = (grid.drr.row(k) * &u)[0];
    Ok(SpectralEigen { lambda, ell: 0, value: mu, mu, nodal: u.as_slice().to_vec(), boundary_slope: slope })
}

/// `σ_ℓ(λ)` and `V_λ` on the grid, with `v(1) = 0` imposed by dropping the
/// last node.
pub fn spectral_sigma(grid: &RadialGrid, ell: u32, lambda: f64) -> Result<SpectralEigen> {
    let m = spectral_mu(grid, lambda)?;
    let k = grid.k;
    let a = operator(grid, lambda, ell);
    let b = a.view((0, 0), (k, k)).clone_owned();
    let ev = real_spectrum(&b);
    let nu = *ev.first().ok_or_else(|| Error::Eigen(format!("empty spectrum at lambda = {lambda}")))?;
    let y = null_vector(&b, nu)?;
    let mut v = DVector::from_fn(k + 1, |i, _| if i < k { y[i] } else { 0.0 });
    v /= y[0];
    let slope = (grid.dr.row(k) * &v)[0];
    Ok(SpectralEigen { lambda, ell, value: nu - m.mu, mu: m.mu, nodal: v.as_slice().to_vec(), boundary_slope: slope })
}

/// Root of the collocated `σ_ℓ` inside `[a, b]`, where it changes sign.
pub fn spectral_lambda_star(grid: &RadialGrid, ell: u32, a: f64, b: f64) -> Result<f64> {
    let f = |l: f64| -> Result<f64> { Ok(spectral_sigma(grid, ell, l)?.value) };
    let (fa, fb) = (f(a)?, f(b)?);
    if (fa < 0.0) == (fb < 0.0) {
        return Err(Error::NoSignChange { ell, lambda0: b });
    }
    let (lo, hi, flo, fhi) = if fa < 0.0 { (a, b, fa, fb) } else { (b, a, fb, fa) };
    super::illinois(&f, lo, hi, flo, fhi, 1e-12)
}
