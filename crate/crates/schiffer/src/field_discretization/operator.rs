//! Linear operators of the form `Σ_p f_p(r, x) · (X_p ⊗ T_p) u`, where `X_p`
//! acts in `x` (value, `∂_x`, `∂_xx`) and `T_p` is a radial matrix.
//!
//! Application is pseudo-spectral: coefficients go to collocation values,
//! get multiplied pointwise by `f_p`, and the sum is transformed back.
//! The same term list yields the exact coefficient-space matrix.

use nalgebra::DMatrix;

use super::field::{Field2D, Grid};
use super::xgrid::XOp;
use crate::exec::Execution;

#[derive(Clone, Debug)]
pub struct Term {
    /// `f_p` at the collocation points, `(M+1) × (K+1)`
    pub coef: DMatrix<f64>,
    pub xop: XOp,
    pub radial: DMatrix<f64>,
}

impl Term {
    /// Term whose coefficient depends on `x` only.
    pub fn in_x(grid: &Grid, f: &[f64], xop: XOp, radial: DMatrix<f64>) -> Self {
        let k = grid.k();
        let coef = DMatrix::from_fn(f.len(), k + 1, |j, _| f[j]);
        Term { coef, xop, radial }
    }

    pub fn constant(grid: &Grid, c: f64, xop: XOp, radial: DMatrix<f64>) -> Self {
        Term { coef: DMatrix::from_element(grid.x.m + 1, grid.k() + 1, c), xop, radial }
    }
}

#[derive(Clone, Debug, Default)]
pub struct PointwiseOperator {
    pub terms: Vec<Term>,
}

impl PointwiseOperator {
    pub fn new(terms: Vec<Term>) -> Self {
        PointwiseOperator { terms }
    }

    /// Collocation values of the image of `coeffs`.
    pub fn apply_values(&self, grid: &Grid, coeffs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(grid.x.m + 1, grid.k() + 1);
        for t in &self.terms {
            let v = grid.x.op(t.xop) * coeffs * t.radial.transpose();
            out += t.coef.component_mul(&v);
        }
        out
    }

    pub fn apply_coeffs(&self, grid: &Grid, coeffs: &DMatrix<f64>) -> DMatrix<f64> {
        &grid.x.v2c * self.apply_values(grid, coeffs)
    }

    pub fn apply(&self, grid: &Grid, u: &Field2D) -> Field2D {
        Field2D::from_coeffs(grid, self.apply_coeffs(grid, &u.coeffs))
    }

    /// Coefficient-space matrix with index `(ℓ, i) ↦ ℓ (K+1) + i`:
    /// `J[(ℓ,i),(k,i')] = Σ_p Σ_j V2C[ℓ,j] f_p[j,i] X_p[j,k] T_p[i,i']`.
    pub fn matrix(&self, grid: &Grid, exec: Execution) -> DMatrix<f64> {
        let kk = grid.k() + 1;
        let ll = grid.l() + 1;
        let n = kk * ll;
        // rows of all modes at radial node i, computed independently per i
        let blocks: Vec<DMatrix<f64>> = exec.map_range(kk, |i| {
            let mut rows = DMatrix::zeros(ll, n);
            for t in &self.terms {
                let x = grid.x.op(t.xop);
                let scaled = DMatrix::from_fn(x.nrows(), x.ncols(), |j, k| t.coef[(j, i)] * x[(j, k)]);
                let b = &grid.x.v2c * scaled;
                for l in 0..ll {
                    for k in 0..ll {
                        let c = b[(l, k)];
                        if c == 0.0 {
                            continue;
                        }
                        for ip in 0..kk {
                            rows[(l, k * kk + ip)] += c * t.radial[(i, ip)];
                        }
                    }
                }
            }
            rows
        });
        let mut out = DMatrix::zeros(n, n);
        for (i, rows) in blocks.into_iter().enumerate() {
            for l in 0..ll {
                out.row_mut(l * kk + i).copy_from(&rows.row(l));
            }
        }
        out
    }
}

/// Row-major flattening of a mode × node coefficient matrix.
pub fn flatten(coeffs: &DMatrix<f64>) -> nalgebra::DVector<f64> {
    let (ll, kk) = coeffs.shape();
    nalgebra::DVector::from_fn(ll * kk, |idx, _| coeffs[(idx / kk, idx % kk)])
}

pub fn unflatten(v: &nalgebra::DVector<f64>, ll: usize, kk: usize) -> DMatrix<f64> {
    DMatrix::from_fn(ll, kk, |l, i| v[l * kk + i])
}
