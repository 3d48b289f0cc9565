//! The linearisation `L_λ = j_m² + λ∂_xx + Δ_t` at the trivial branch,
//! split into its cosine modes, with kernel detection by SVD and the
//! transversality indicator.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cylinder_model::CylinderModel;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field_discretization::{Field2D, Grid};

/// Default kernel tolerance on the smallest singular value at `K = 48`.
pub const DEFAULT_KERNEL_TOL: f64 = 1e-7;

/// One cosine mode of `L_λ`: `A_ℓ = Δ_t + j_m² - λ(qℓ)²` on radial values,
/// with the last row replaced by the Dirichlet condition `u(1) = 0`.
#[derive(Clone, Debug)]
pub struct ModeOperator {
    pub ell: usize,
    pub lambda: f64,
    pub matrix: DMatrix<f64>,
}

impl ModeOperator {
    pub fn new(grid: &Grid, j2: f64, lambda: f64, ell: usize) -> Self {
        let k = grid.k();
        let w = grid.x.q * ell as f64;
        let mut a = grid.radial.lap.clone();
        for i in 0..k {
            a[(i, i)] += j2 - lambda * w * w;
        }
        a.row_mut(k).fill(0.0);
        a[(k, k)] = 1.0;
        ModeOperator { ell, lambda, matrix: a }
    }

    /// Interior block (Dirichlet node removed), acting on `u(r_0..r_{K-1})`.
    pub fn interior(&self) -> DMatrix<f64> {
        let k = self.matrix.nrows() - 1;
        self.matrix.view((0, 0), (k, k)).clone_owned()
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }
}

/// Mode blocks `ℓ = 0..=L` of `DG_λ(0)`.
pub fn assemble_linearized(grid: &Grid, model: &CylinderModel, lambda: f64) -> Vec<ModeOperator> {
    let j2 = model.j_m * model.j_m;
    (0..=grid.l()).map(|l| ModeOperator::new(grid, j2, lambda, l)).collect()
}

/// Apply all mode blocks to a field.
pub fn apply_linearized(ops: &[ModeOperator], u: &Field2D) -> Field2D {
    let mut out = u.clone();
    for op in ops {
        let row = op.apply(&u.coeffs.row(op.ell).transpose());
        out.coeffs.row_mut(op.ell).copy_from(&row.transpose());
    }
    out.dirichlet = false;
    out.neumann = false;
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct ModeSpectrum {
    pub ell: usize,
    /// Smallest singular value of the mode block.
    pub sigma_min: f64,
    /// Second smallest, the gap witness.
    pub sigma_next: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralReport {
    pub lambda: f64,
    pub tol: f64,
    pub modes: Vec<ModeSpectrum>,
    pub kernel_count: usize,
    /// Mode carrying the kernel when the count is one.
    pub kernel_mode: Option<usize>,
    /// Radial nodal values of the kernel vector, normalised to agree with
    /// `φ₁` at the origin.
    pub kernel_vector: Option<Vec<f64>>,
    /// `⟨v*, ∂_λL v*⟩`, filled in when the kernel is one-dimensional.
    pub transversality: Option<f64>,
}

impl SpectralReport {
    /// Kernel vector as a field `v(r) cos(qℓx)`.
    pub fn kernel_field(&self, grid: &Grid) -> Option<Field2D> {
        let (l, v) = (self.kernel_mode?, self.kernel_vector.as_ref()?);
        let mut f = Field2D::radial_mode(grid, l, |_| 0.0);
        for (i, x) in v.iter().enumerate() {
            f.coeffs[(l, i)] = *x;
        }
        Some(f.with_dirichlet())
    }
}

struct ModeSvd {
    sigma_min: f64,
    sigma_next: f64,
    vector: DVector<f64>,
}

fn mode_svd(op: &ModeOperator) -> ModeSvd {
    let svd = op.matrix.clone().svd(false, true);
    let s = &svd.singular_values;
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|a, b| s[*a].total_cmp(&s[*b]));
    let vt = svd.v_t.expect("right singular vectors requested");
    let vector = vt.row(idx[0]).transpose();
    // The bidiagonal iteration deflates values below ~1e-9‖A‖ to exactly 0;
    // the residual of the singular vector is an honest upper bound there.
    let sigma_min = s[idx[0]].max((&op.matrix * &vector).norm());
    ModeSvd { sigma_min, sigma_next: s[idx[1]], vector }
}

/// Per-mode SVD of `L_λ` and kernel detection.
pub fn kernel_scan(grid: &Grid, model: &CylinderModel, lambda: f64, tol: f64, exec: Execution) -> SpectralReport {
    let ops = assemble_linearized(grid, model, lambda);
    let svds = exec.map(&ops, mode_svd);
    let modes: Vec<ModeSpectrum> = svds
        .iter()
        .enumerate()
        .map(|(ell, s)| ModeSpectrum { ell, sigma_min: s.sigma_min, sigma_next: s.sigma_next })
        .collect();
    let hits: Vec<usize> = modes.iter().filter(|m| m.sigma_min < tol).map(|m| m.ell).collect();
    let mut report = SpectralReport {
        lambda,
        tol,
        modes,
        kernel_count: hits.len(),
        kernel_mode: None,
        kernel_vector: None,
        transversality: None,
    };
    if let [l] = hits[..] {
        let v = &svds[l].vector;
        let scale = model.phi1(0.0) / v[0];
        report.kernel_mode = Some(l);
        report.kernel_vector = Some(v.iter().map(|x| x * scale).collect());
        if let Some(f) = report.kernel_field(grid) {
            report.transversality = Some(-(grid.x.q * l as f64).powi(2) * grid.inner(&f, &f));
        }
    }
    report
}

#[derive(Clone, Debug, Serialize)]
pub struct Transversality {
    /// `-‖v*‖²` in the discrete product.
    pub analytic: f64,
    /// `⟨v*, (L_{λ+δ} - L_{λ-δ}) v* / 2δ⟩`.
    pub finite_difference: f64,
    pub delta: f64,
}

impl Transversality {
    pub fn value(&self) -> f64 {
        self.analytic
    }

    pub fn relative_gap(&self) -> f64 {
        (self.analytic - self.finite_difference).abs() / self.analytic.abs()
    }
}

/// `⟨v*, ∂_λL v*⟩` at `λ_m`, computed analytically and by central
/// differences of the assembled blocks.
pub fn transversality(grid: &Grid, model: &CylinderModel, tol: f64) -> Result<Transversality> {
    let report = kernel_scan(grid, model, model.lambda_m, tol, Execution::default());
    if report.kernel_count != 1 {
        return Err(Error::Precondition(format!(
            "kernel at lambda_m has dimension {}, expected 1",
            report.kernel_count
        )));
    }
    let v = report.kernel_field(grid).expect("one-dimensional kernel has a vector");
    let l = report.kernel_mode.unwrap_or(1);
    let analytic = -(grid.x.q * l as f64).powi(2) * grid.inner(&v, &v);
    let delta = 1e-4;
    let plus = apply_linearized(&assemble_linearized(grid, model, model.lambda_m + delta), &v);
    let minus = apply_linearized(&assemble_linearized(grid, model, model.lambda_m - delta), &v);
    let mut d = plus.axpy(-1.0, &minus).scaled(0.5 / delta);
    // the Dirichlet row carries no λ; drop it from the product
    let k = grid.k();
    d.coeffs.column_mut(k).fill(0.0);
    Ok(Transversality { analytic, finite_difference: grid.inner(&v, &d), delta })
}

/// Signed eigenvalue of smallest magnitude of the interior Dirichlet block of
/// mode `ℓ` at `λ`. Its zeros are the crossings `ℓ²λ = j_m² - j²_{N/2-1,k}`.
pub struct CrossingScanner {
    /// Real parts of the eigenvalues of the interior Dirichlet Laplacian.
    dirichlet_eigs: Vec<f64>,
    j2: f64,
    q: f64,
}

impl CrossingScanner {
    pub fn new(grid: &Grid, model: &CylinderModel) -> Self {
        let k = grid.k();
        let lap = grid.radial.lap.view((0, 0), (k, k)).clone_owned();
        let mut eigs: Vec<f64> = lap.complex_eigenvalues().iter().map(|z| z.re).collect();
        eigs.sort_by(|a, b| b.total_cmp(a));
        CrossingScanner { dirichlet_eigs: eigs, j2: model.j_m * model.j_m, q: grid.x.q }
    }

    /// Interior Dirichlet eigenvalues `-j²_{N/2-1,k}`, least negative first.
    pub fn dirichlet_eigenvalues(&self) -> &[f64] {
        &self.dirichlet_eigs
    }

    pub fn indicator(&self, ell: usize, lambda: f64) -> f64 {
        let w = self.q * ell as f64;
        let shift = self.j2 - lambda * w * w;
        self.dirichlet_eigs
            .iter()
            .map(|e| e + shift)
            .min_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(f64::NAN)
    }

    /// Sign changes of the indicator on `lambdas` (ascending), refined by
    /// bisection to `1e-12` relative.
    pub fn crossings(&self, ell: usize, lambdas: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        for w in lambdas.windows(2) {
            let (mut a, mut b) = (w[0], w[1]);
            let (fa, fb) = (self.indicator(ell, a), self.indicator(ell, b));
            if fa == 0.0 {
                out.push(a);
                continue;
            }
            if fa * fb >= 0.0 {
                continue;
            }
            // the indicator jumps where the nearest eigenvalue switches;
            // only continuous sign changes are crossings
            let mut fa = fa;
            for _ in 0..200 {
                let c = 0.5 * (a + b);
                let fc = self.indicator(ell, c);
                if fa * fc <= 0.0 {
                    b = c;
                } else {
                    a = c;
                    fa = fc;
                }
                if b - a < 1e-12 * b.abs().max(1.0) {
                    break;
                }
            }
            let root = 0.5 * (a + b);
            if self.indicator(ell, root).abs() < 1e-6 * self.j2.max(1.0) {
                out.push(root);
            }
        }
        out
    }
}

/// Truncated-SVD least-squares solve of `L_λ u = w`, mode by mode. Singular
/// values below `tol` are dropped. Returns `u` and the relative residual
/// `‖L u - w‖ / ‖w‖` over interior nodes.
pub fn least_squares_solve(grid: &Grid, model: &CylinderModel, lambda: f64, w: &Field2D, tol: f64) -> (Field2D, f64) {
    let ops = assemble_linearized(grid, model, lambda);
    let k = grid.k();
    let mut u = grid.zeros();
    let mut rhs_all = w.coeffs.clone();
    rhs_all.column_mut(k).fill(0.0);
    for op in &ops {
        let svd = op.matrix.clone().svd(true, true);
        let rhs = rhs_all.row(op.ell).transpose();
        let sol = svd.solve(&rhs, tol).expect("both factors computed");
        u.coeffs.row_mut(op.ell).copy_from(&sol.transpose());
    }
    let r = apply_linearized(&ops, &u);
    let res = (&r.coeffs - &rhs_all).amax();
    let norm = rhs_all.amax();
    (u.with_dirichlet(), if norm > 0.0 { res / norm } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_row_enforced() {
        let g = Grid::cylinder(2, 16, 4, 4);
        let c = CylinderModel::new(2, 1).unwrap();
        let ops = assemble_linearized(&g, &c, 3.0);
        for op in &ops {
            let last = op.matrix.row(16);
            assert_eq!(last[16], 1.0);
            assert_eq!(last.iter().filter(|x| **x != 0.0).count(), 1);
        }
    }
}
