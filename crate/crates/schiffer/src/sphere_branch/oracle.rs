//! Physical check of a sphere branch point that avoids the collocated
//! operator: the Laplace–Beltrami operator of the pulled-back metric
//!
//! `g = h² dt² + 2 h h' t dt dx + (h'² t² + cos²(ht)) dx²`,  `√det g = h cos(ht)`,
//!
//! applied in divergence form with nested central differences.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{SphereOperator, Trivial};
use crate::field_discretization::{DomainProfile, Grid};

/// Default difference step of the oracle.
pub const DEFAULT_ORACLE_STEP: f64 = 0.005;

/// `ũ = M₁u + u_λ` on `|t| ≤ 1` with band half-width `h̃ = λ/(1 + h_u)`.
#[derive(Clone, Debug)]
pub struct SphereSolution {
    pub grid: Grid,
    pub ell: u32,
    pub lambda: f64,
    /// `μ(λ)/λ²`
    pub mu: f64,
    pub h_u: DomainProfile,
    w: DMatrix<f64>,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct OracleResidual {
    pub delta: f64,
    /// `max |Δ_g ũ + μ ũ|` over the interior sample.
    pub interior: f64,
    /// `max(|ũ(1,·) - 1|, |∂_t ũ(1,·)|)`
    pub boundary: f64,
}

impl SphereSolution {
    pub(crate) fn new(op: &SphereOperator, tr: &Trivial, u: &DMatrix<f64>) -> Self {
        SphereSolution {
            grid: op.grid.clone(),
            ell: op.model.ell,
            lambda: tr.lambda,
            mu: tr.mu / (tr.lambda * tr.lambda),
            h_u: op.h_profile(tr, u),
            w: op.full_w(tr, u),
        }
    }

    pub fn tilde_u(&self, t: f64, x: f64) -> f64 {
        let row = self.grid.radial.lagrange_row(t * t);
        let radial = &self.w * row;
        self.grid.x.eval(radial.as_slice(), x).0
    }

    /// `(h̃(x), h̃'(x))`
    pub fn band(&self, x: f64) -> (f64, f64) {
        let (h, dh, _) = self.h_u.eval(&self.grid, x);
        (self.lambda / (1.0 + h), -self.lambda * dh / (1.0 + h).powi(2))
    }

    /// Boundary rows at the collocation points: `ũ = 1` and `∂_t ũ = 0` at `t = 1`.
    pub fn boundary_residual(&self) -> f64 {
        let k = self.grid.k();
        let vals = &self.grid.x.c2v * self.w.column(k);
        let dt = &self.grid.x.c2v * (&self.w * self.grid.radial.dr.row(k).transpose());
        vals.iter().map(|v| (v - 1.0).abs()).chain(dt.iter().map(|d| d.abs())).fold(0.0, f64::max)
    }

    /// Interior sample: `t ∈ {0.15, 0.35, 0.55, 0.75}`, six points of the half period in `x`.
    fn sample(&self) -> Vec<(f64, f64)> {
        let ell = self.ell as f64;
        let mut pts = Vec::new();
        for &t in &[0.15, 0.35, 0.55, 0.75] {
            for j in 0..6 {
                pts.push((t, std::f64::consts::PI * (j as f64 + 0.5) / (6.0 * ell)));
            }
        }
        pts
    }

    /// `max |Δ_g f + μ f|` over the sample for an arbitrary function `f(t, x)`.
    pub fn residual_of(&self, f: &dyn Fn(f64, f64) -> f64, delta: f64) -> f64 {
        let flux = |t: f64, x: f64| -> (f64, f64) {
            let (h, hp) = self.band(x);
            let c = (h * t).cos();
            let det = h * h * c * c;
            let (gtt, gtx, gxx) = (h * h, h * hp * t, hp * hp * t * t + c * c);
            let (itt, itx, ixx) = (gxx / det, -gtx / det, gtt / det);
            let ut = (f(t + delta, x) - f(t - delta, x)) / (2.0 * delta);
            let ux = (f(t, x + delta) - f(t, x - delta)) / (2.0 * delta);
            let sq = h * c;
            (sq * (itt * ut + itx * ux), sq * (itx * ut + ixx * ux))
        };
        self.sample()
            .into_iter()
            .map(|(t, x)| {
                let (h, _) = self.band(x);
                let sq = h * (h * t).cos();
                let div = (flux(t + delta, x).0 - flux(t - delta, x).0 + flux(t, x + delta).1 - flux(t, x - delta).1)
                    / (2.0 * delta);
                (div / sq + self.mu * f(t, x)).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn interior_residual(&self, delta: f64) -> f64 {
        self.residual_of(&|t, x| self.tilde_u(t, x), delta)
    }

    pub fn oracle(&self, delta: f64) -> OracleResidual {
        OracleResidual { delta, interior: self.interior_residual(delta), boundary: self.boundary_residual() }
    }
}
