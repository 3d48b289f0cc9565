//! Pulled-back cylinder operator, the elimination map `M = (M₁, h_u)` and
//! the reduced map `G_λ`.

use nalgebra::{DMatrix, DVector};

use super::field::{DomainProfile, Field2D, Grid};
use super::operator::{PointwiseOperator, Term};
use super::xgrid::XOp;
use crate::cylinder_model::CylinderModel;
use crate::error::{Error, Result};

/// Flag tolerance for fields produced by `M₁`.
const FLAG_TOL: f64 = 1e-8;

/// `h_u = c · ∂_r u(1, ·)` and `M₁ u = u - g ⊗ h_u`, mode by mode.
#[derive(Clone, Debug)]
pub struct ElimMap {
    pub g: DVector<f64>,
    pub c: f64,
}

impl ElimMap {
    /// Cosine coefficients of `h_u`; `∂_r = r ∂_r` at `r = 1`.
    pub fn h_coeffs(&self, grid: &Grid, coeffs: &DMatrix<f64>) -> DVector<f64> {
        let k = grid.k();
        let row = grid.radial.dt.row(k).transpose();
        coeffs * row * self.c
    }

    pub fn m1(&self, grid: &Grid, coeffs: &DMatrix<f64>) -> DMatrix<f64> {
        let h = self.h_coeffs(grid, coeffs);
        coeffs - h * self.g.transpose()
    }

    /// Radial matrix of `M₁` acting on one mode: `I - c g (e_K^T D_t)`.
    pub fn radial_matrix(&self, grid: &Grid) -> DMatrix<f64> {
        let k = grid.k();
        let row = grid.radial.dt.row(k).clone_owned();
        DMatrix::identity(k + 1, k + 1) - (&self.g * row) * self.c
    }
}

/// Derived `x`-coefficients of a profile `H = 1 + h`.
pub(crate) struct Shape {
    pub h: DVector<f64>,
    /// `H'/H`
    pub a: DVector<f64>,
    /// `H''/H`
    pub b: DVector<f64>,
}

pub(crate) fn shape(grid: &Grid, h: &DomainProfile, floor: f64) -> Result<Shape> {
    if h.coefficients.len() != grid.l() + 1 {
        return Err(Error::GridMismatch(format!(
            "profile has {} coefficients, grid expects {}",
            h.coefficients.len(),
            grid.l() + 1
        )));
    }
    let s = h.samples(grid);
    let hh = s.h.map(|v| 1.0 + v);
    let min = hh.min();
    if !(min > floor) {
        return Err(Error::Admissibility(format!("min(1 + h) = {min} must exceed {floor}")));
    }
    let a = s.dh.component_div(&hh);
    let b = s.ddh.component_div(&hh);
    Ok(Shape { h: hh, a, b })
}

/// Cylinder operator with the exact radial profiles of `u_m` sampled on the grid.
#[derive(Clone, Debug)]
pub struct CylinderOperator {
    pub grid: Grid,
    pub model: CylinderModel,
    pub u_m: DVector<f64>,
    pub g: DVector<f64>,
    pub dd_u: DVector<f64>,
    pub phi1: DVector<f64>,
    pub elim: ElimMap,
}

impl CylinderOperator {
    pub fn new(grid: &Grid, model: &CylinderModel) -> Result<Self> {
        if grid.radial.n_dim != model.n {
            return Err(Error::GridMismatch(format!(
                "grid dimension {} vs model dimension {}",
                grid.radial.n_dim, model.n
            )));
        }
        let r = &grid.radial.r;
        let k = grid.k();
        let u_m = r.map(|r| model.u(r));
        let mut g = r.map(|r| model.g(r));
        g[k] = 0.0;
        let dd_u = r.map(|r| model.dd_u(r));
        let mut phi1 = r.map(|r| model.phi1(r));
        phi1[k] = 0.0;
        let elim = ElimMap { g: g.clone(), c: model.c_m() };
        Ok(CylinderOperator { grid: grid.clone(), model: model.clone(), u_m, g, dd_u, phi1, elim })
    }

    /// Kernel direction `v* = φ₁(r) cos x` as a Dirichlet field.
    pub fn kernel_field(&self) -> Field2D {
        let mut c = DMatrix::zeros(self.grid.l() + 1, self.grid.k() + 1);
        c.row_mut(1).copy_from(&self.phi1.transpose());
        Field2D::from_coeffs(&self.grid, c).with_dirichlet()
    }

    /// `P_H = j²  + λ∂_xx + H²Δ_t + λa² D_tD_t + 2λa D_t∂_x + λ(b - a²) D_t`
    /// with `a = H'/H`, `b = H''/H`.
    pub fn pullback_operator(&self, lambda: f64, h: &DomainProfile) -> Result<PointwiseOperator> {
        let s = shape(&self.grid, h, 0.0)?;
        Ok(self.pullback_from_shape(lambda, &s))
    }

    pub(crate) fn pullback_from_shape(&self, lambda: f64, s: &Shape) -> PointwiseOperator {
        let g = &self.grid;
        let rg = &g.radial;
        let j2 = self.model.j_m * self.model.j_m;
        let id = DMatrix::identity(rg.k + 1, rg.k + 1);
        let h2: Vec<f64> = s.h.iter().map(|h| h * h).collect();
        let a2: Vec<f64> = s.a.iter().map(|a| lambda * a * a).collect();
        let mixed: Vec<f64> = s.a.iter().map(|a| 2.0 * lambda * a).collect();
        let first: Vec<f64> = s.a.iter().zip(s.b.iter()).map(|(a, b)| lambda * (b - a * a)).collect();
        PointwiseOperator::new(vec![
            Term::constant(g, j2, XOp::Value, id.clone()),
            Term::constant(g, lambda, XOp::Dxx, id),
            Term::in_x(g, &h2, XOp::Value, rg.lap.clone()),
            Term::in_x(g, &a2, XOp::Value, rg.dd.clone()),
            Term::in_x(g, &mixed, XOp::Dx, rg.dt.clone()),
            Term::in_x(g, &first, XOp::Value, rg.dt.clone()),
        ])
    }

    /// Collocation values of `P_H u_m`, evaluated from the closed-form profiles.
    pub(crate) fn trivial_values(&self, lambda: f64, s: &Shape) -> DMatrix<f64> {
        let j2 = self.model.j_m * self.model.j_m;
        let mm = self.grid.x.m;
        let kk = self.grid.k();
        DMatrix::from_fn(mm + 1, kk + 1, |j, i| {
            let h = s.h[j];
            let a = s.a[j];
            j2 * self.u_m[i] * (1.0 - h * h) + lambda * a * a * self.dd_u[i] + lambda * (s.b[j] - a * a) * self.g[i]
        })
    }

    /// `G_λ(u) = P_{1+h_u}(M₁u) + P_{1+h_u}(u_m)` in coefficient space.
    pub fn g_coeffs(&self, lambda: f64, coeffs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let h = DomainProfile { coefficients: self.elim.h_coeffs(&self.grid, coeffs).as_slice().to_vec() };
        let s = shape(&self.grid, &h, 0.0)?;
        let w = self.elim.m1(&self.grid, coeffs);
        let op = self.pullback_from_shape(lambda, &s);
        let vals = op.apply_values(&self.grid, &w) + self.trivial_values(lambda, &s);
        Ok(&self.grid.x.v2c * vals)
    }

    /// `F(w, h) = P_{1+h}(w) + P_{1+h}(u_m)` for independent `w` and `h`.
    pub(crate) fn f_coeffs(&self, lambda: f64, w: &DMatrix<f64>, h: &DomainProfile) -> Result<DMatrix<f64>> {
        let s = shape(&self.grid, h, 0.0)?;
        let op = self.pullback_from_shape(lambda, &s);
        Ok(&self.grid.x.v2c * (op.apply_values(&self.grid, w) + self.trivial_values(lambda, &s)))
    }

    /// `L_λ = j² + λ∂_xx + Δ_t`, the linearisation at `u = 0`.
    pub fn linearized(&self, lambda: f64) -> PointwiseOperator {
        let s = Shape {
            h: DVector::from_element(self.grid.x.m + 1, 1.0),
            a: DVector::zeros(self.grid.x.m + 1),
            b: DVector::zeros(self.grid.x.m + 1),
        };
        self.pullback_from_shape(lambda, &s)
    }
}

fn radial_apply(grid: &Grid, u: &Field2D, op: &DMatrix<f64>) -> Result<Field2D> {
    grid.ensure(u)?;
    Ok(Field2D::from_coeffs(grid, &u.coeffs * op.transpose()))
}

/// `D_t u = r ∂_r u`, mode by mode.
pub fn apply_dt(grid: &Grid, u: &Field2D) -> Result<Field2D> {
    radial_apply(grid, u, &grid.radial.dt)
}

/// `Δ_t u = u'' + (N-1)/r u'`, mode by mode; at `r = 0` this is `N u''(0)`.
pub fn apply_laplace_t(grid: &Grid, u: &Field2D) -> Result<Field2D> {
    radial_apply(grid, u, &grid.radial.lap)
}

/// `∂_x u`, returned as sine coefficients (mode `ℓ` holds the factor of `sin(qℓx)`).
pub fn apply_dx_sine(grid: &Grid, u: &Field2D) -> Field2D {
    let mut c = u.coeffs.clone();
    for l in 0..=grid.l() {
        let w = -grid.x.q * l as f64;
        c.row_mut(l).scale_mut(w);
    }
    Field2D::from_coeffs(grid, c)
}

/// `P_{1+h}` applied to `u`; `u_m` is not added.
pub fn apply_pullback(grid: &Grid, model: &CylinderModel, lambda: f64, h: &DomainProfile, u: &Field2D) -> Result<Field2D> {
    grid.ensure(u)?;
    let op = CylinderOperator::new(grid, model)?;
    Ok(op.pullback_operator(lambda, h)?.apply(grid, u))
}

pub fn compute_h_u(grid: &Grid, model: &CylinderModel, u: &Field2D) -> Result<DomainProfile> {
    grid.ensure(u)?;
    if !u.dirichlet {
        return Err(Error::Flag("h_u requires a Dirichlet field".into()));
    }
    let elim = ElimMap { g: grid.radial.r.map(|r| model.g(r)), c: model.c_m() };
    Ok(DomainProfile { coefficients: elim.h_coeffs(grid, &u.coeffs).as_slice().to_vec() })
}

pub fn apply_m1(grid: &Grid, model: &CylinderModel, u: &Field2D) -> Result<Field2D> {
    grid.ensure(u)?;
    if !u.dirichlet {
        return Err(Error::Flag("M1 requires a Dirichlet field".into()));
    }
    let mut g = grid.radial.r.map(|r| model.g(r));
    g[grid.k()] = 0.0;
    let elim = ElimMap { g, c: model.c_m() };
    let mut out = Field2D::from_coeffs(grid, elim.m1(grid, &u.coeffs));
    out.dirichlet = true;
    out.neumann = true;
    out.verify_flags(grid, FLAG_TOL)?;
    Ok(out)
}

#[allow(non_snake_case)]
pub fn G_of(grid: &Grid, model: &CylinderModel, lambda: f64, u: &Field2D) -> Result<Field2D> {
    grid.ensure(u)?;
    if !u.dirichlet {
        return Err(Error::Flag("G requires a Dirichlet field".into()));
    }
    let op = CylinderOperator::new(grid, model)?;
    Ok(Field2D::from_coeffs(grid, op.g_coeffs(lambda, &u.coeffs)?))
}
