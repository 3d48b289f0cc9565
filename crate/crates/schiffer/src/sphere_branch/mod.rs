//! Bifurcating bands around the equator of `S²`: the pulled-back operator
//! `L_λ^h`, the reduced map `G_λ = F_λ ∘ M` and its Newton continuation.
//!
//! The reference domain is `|t| < 1`; a profile `h` describes the band
//! `|θ| < λ/(1 + h(x))` in latitude. Radial data reuse the even `ρ = t²`
//! collocation, with `x`-modes `cos(kℓx)`.

mod oracle;

use std::f64::consts::FRAC_2_PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use oracle::{OracleResidual, SphereSolution, DEFAULT_ORACLE_STEP};

use crate::branch_continuation::{NewtonSettings, DECREASE_FACTOR};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field_discretization::cylinder::{shape, Shape};
use crate::field_discretization::{DomainProfile, ElimMap, Field2D, Grid, PointwiseOperator, RadialWeight, Term, XOp};
use crate::linear_analysis::ModeSpectrum;
use crate::sphere_spectral::spectral::{operator as radial_operator, tan_over_t};
use crate::sphere_spectral::{
    ell_zero, find_lambda_star, solve_mu, solve_sigma, spectral_lambda_star, spectral_mu, spectral_sigma, EigenCurveSample,
};

/// Bifurcation data from the finite-difference eigencurves.
#[derive(Clone, Debug, Serialize)]
pub struct SphereModel {
    pub ell: u32,
    pub lambda0: f64,
    pub lambda_star: f64,
    /// `μ(λ*)`
    pub mu_at_star: f64,
    /// `U''_{λ*}(1) = -μ(λ*)`
    pub u_pp_one: f64,
    /// `V'_{λ*}(1)`
    pub v_prime_one: f64,
    pub sigma_at_star: f64,
    pub sigma_prime_star: f64,
    pub gridsize: usize,
    #[serde(skip)]
    pub u_star: EigenCurveSample,
    #[serde(skip)]
    pub v_star: EigenCurveSample,
}

impl SphereModel {
    /// `ell = None` picks the least admissible mode for `lambda0`.
    pub fn new(lambda0: f64, ell: Option<u32>, gridsize: usize) -> Result<Self> {
        let ell = match ell {
            Some(e) => e,
            None => ell_zero(lambda0, gridsize)?,
        };
        let ls = find_lambda_star(ell, lambda0, gridsize)?;
        let u = solve_mu(ls.lambda_star, gridsize)?;
        let v = solve_sigma(ell, ls.lambda_star, gridsize)?;
        if !(ls.sigma.abs() <= 1e-10) {
            return Err(Error::Precondition(format!("sigma(lambda*) = {:e} exceeds 1e-10", ls.sigma)));
        }
        if !(u.boundary_slope.abs() >= 1e-6 && v.boundary_slope.abs() >= 1e-6) {
            return Err(Error::Precondition("U''(1) or V'(1) vanishes at lambda*".into()));
        }
        Ok(SphereModel {
            ell,
            lambda0,
            lambda_star: ls.lambda_star,
            mu_at_star: u.value,
            u_pp_one: u.boundary_slope,
            v_prime_one: v.boundary_slope,
            sigma_at_star: ls.sigma,
            sigma_prime_star: ls.sigma_prime,
            gridsize,
            u_star: u,
            v_star: v,
        })
    }

    /// Collocation grid with `x`-frequency `ℓ` and weight `cos(λ* t)`.
    pub fn grid(&self, k: usize, l: usize, m: usize) -> Grid {
        Grid::sphere(self.lambda_star, self.ell, k, l, m)
    }
}

/// Trivial solution `u_λ = U_λ(|t|)` on the grid and the elimination map
/// `h_u = ∂_t u(1)/U''(1)`, `M₁u = u - tU'_λ h_u`.
#[derive(Clone, Debug)]
pub struct Trivial {
    pub lambda: f64,
    pub mu: f64,
    pub u: DVector<f64>,
    /// `U''` from the equation, `λ tan(λt) U' - μ U`.
    pub upp: DVector<f64>,
    /// `g = tU'` with `g(1) = 0` and `c = 1/g'(1)`.
    pub elim: ElimMap,
    /// `t∂_t g` and `∂_tt g`, from the equation rather than differentiation
    /// matrices (which amplify the rounding in `g` by `O(K⁴)`).
    pub g1: DVector<f64>,
    pub g2: DVector<f64>,
}

/// Admissibility floor for `1 + h`: the band half-width `λ/(1+h)` stays below `π/2`.
fn floor(lambda: f64) -> f64 {
    FRAC_2_PI * lambda
}

/// `L_λ^h` with `H = 1 + h`, `a = H'/H`, `b = H''/H`, `θ = λt/H`:
/// `μ + H²∂_tt - λH tan θ ∂_t + λ²/cos²θ (∂_xx + a²t²∂_tt + 2a t∂_t∂_x + b t∂_t)`.
pub(crate) fn pullback_from_shape(grid: &Grid, lambda: f64, mu: f64, s: &Shape) -> PointwiseOperator {
    let rg = &grid.radial;
    let (mm, kk) = (grid.x.m + 1, grid.k() + 1);
    let id = DMatrix::identity(kk, kk);
    let field = |f: &dyn Fn(usize, usize) -> f64| DMatrix::from_fn(mm, kk, f);
    let c2 = |j: usize, i: usize| -> f64 {
        let c = (lambda * rg.r[i] / s.h[j]).cos();
        lambda * lambda / (c * c)
    };
    let h2: Vec<f64> = s.h.iter().map(|h| h * h).collect();
    PointwiseOperator::new(vec![
        Term::constant(grid, mu, XOp::Value, id.clone()),
        Term::in_x(grid, &h2, XOp::Value, rg.drr.clone()),
        Term {
            coef: field(&|j, i| -s.h[j] * s.h[j] * tan_over_t(lambda / s.h[j], rg.r[i])),
            xop: XOp::Value,
            radial: rg.dt.clone(),
        },
        Term { coef: field(&c2), xop: XOp::Dxx, radial: id },
        Term { coef: field(&|j, i| c2(j, i) * s.a[j] * s.a[j]), xop: XOp::Value, radial: rg.r2drr.clone() },
        Term { coef: field(&|j, i| 2.0 * c2(j, i) * s.a[j]), xop: XOp::Dx, radial: rg.dt.clone() },
        Term { coef: field(&|j, i| c2(j, i) * s.b[j]), xop: XOp::Value, radial: rg.dt.clone() },
    ])
}

/// `L_λ^h u` for a given value `mu_val` of `μ(λ)`, in coefficient space.
pub fn apply_sphere_pullback(grid: &Grid, lambda: f64, h: &DomainProfile, u: &Field2D, mu_val: f64) -> Result<Field2D> {
    grid.ensure(u)?;
    let s = shape(grid, h, floor(lambda))?;
    Ok(pullback_from_shape(grid, lambda, mu_val, &s).apply(grid, u))
}

/// Sphere operator on a fixed grid, with `λ*` refined for the collocated problem.
#[derive(Clone, Debug)]
pub struct SphereOperator {
    pub grid: Grid,
    pub model: SphereModel,
    /// Zero of the collocated `σ_ℓ`.
    pub lambda_star: f64,
    /// `V_{λ*}` on the radial nodes, `V(0) = 1`, `V(1) = 0`.
    pub v_nodal: DVector<f64>,
    /// `V'_{λ*}(1)` and `U''_{λ*}(1)` of the collocated problem.
    pub v_prime_one: f64,
    pub u_pp_one: f64,
}

impl SphereOperator {
    pub fn new(grid: &Grid, model: &SphereModel) -> Result<Self> {
        if grid.x.q != model.ell as f64 || !matches!(grid.radial.weight, RadialWeight::Cosine(_)) {
            return Err(Error::GridMismatch(format!("sphere grid with base frequency {} expected", model.ell)));
        }
        let (a, b) = (0.98 * model.lambda_star, (1.02 * model.lambda_star).min(0.999));
        let lambda_star = spectral_lambda_star(&grid.radial, model.ell, a, b)?;
        let v = spectral_sigma(&grid.radial, model.ell, lambda_star)?;
        let mu = spectral_mu(&grid.radial, lambda_star)?;
        Ok(SphereOperator {
            grid: grid.clone(),
            model: model.clone(),
            lambda_star,
            v_nodal: DVector::from_vec(v.nodal),
            v_prime_one: v.boundary_slope,
            u_pp_one: -mu.value,
        })
    }

    pub fn trivial(&self, lambda: f64) -> Result<Trivial> {
        let rg = &self.grid.radial;
        let k = rg.k;
        let e = spectral_mu(rg, lambda)?;
        let u = DVector::from_vec(e.nodal);
        let mut g = &rg.dt * &u;
        g[k] = 0.0;
        let gp = (rg.dt.row(k) * &g)[0];
        let mu = e.value;
        let upp = DVector::from_fn(k + 1, |i, _| tan_over_t(lambda, rg.r[i]) * g[i] - mu * u[i]);
        let g1 = DVector::from_fn(k + 1, |i, _| g[i] + rg.rho[i] * upp[i]);
        let g2 = DVector::from_fn(k + 1, |i, _| {
            let t = rg.r[i];
            let sec2 = 1.0 / (lambda * t).cos().powi(2);
            2.0 * upp[i] + (lambda * lambda * sec2 - mu) * g[i] + rg.rho[i] * tan_over_t(lambda, t) * upp[i]
        });
        Ok(Trivial { lambda, mu, u, upp, elim: ElimMap { g, c: 1.0 / gp }, g1, g2 })
    }

    /// `u_λ` as a field (mode 0 only).
    pub fn trivial_field(&self, lambda: f64) -> Result<Field2D> {
        let tr = self.trivial(lambda)?;
        let mut c = DMatrix::zeros(self.grid.l() + 1, self.grid.k() + 1);
        c.row_mut(0).copy_from(&tr.u.transpose());
        Ok(Field2D::from_coeffs(&self.grid, c))
    }

    /// Kernel direction `v* = V_{λ*}(|t|) cos(ℓx)`.
    pub fn kernel_field(&self) -> Field2D {
        let mut c = DMatrix::zeros(self.grid.l() + 1, self.grid.k() + 1);
        c.row_mut(1).copy_from(&self.v_nodal.transpose());
        Field2D::from_coeffs(&self.grid, c).with_dirichlet()
    }

    fn full_w(&self, tr: &Trivial, coeffs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut w = tr.elim.m1(&self.grid, coeffs);
        let mut row0 = w.row_mut(0);
        row0 += tr.u.transpose();
        w
    }

    fn h_profile(&self, tr: &Trivial, coeffs: &DMatrix<f64>) -> DomainProfile {
        DomainProfile { coefficients: tr.elim.h_coeffs(&self.grid, coeffs).as_slice().to_vec() }
    }

    /// Collocation values of `L_λ^H u_λ` from the nodal `U`, `tU'` and the
    /// equation for `U''`; at `H = 1` they vanish up to rounding.
    pub(crate) fn trivial_values(&self, tr: &Trivial, s: &Shape) -> DMatrix<f64> {
        let rg = &self.grid.radial;
        let lambda = tr.lambda;
        DMatrix::from_fn(self.grid.x.m + 1, rg.k + 1, |j, i| {
            let (t, hh) = (rg.r[i], s.h[j]);
            let (u, g, upp) = (tr.u[i], tr.elim.g[i], tr.upp[i]);
            let c = (lambda * t / hh).cos();
            let c2 = lambda * lambda / (c * c);
            tr.mu * u + hh * hh * (upp - tan_over_t(lambda / hh, t) * g) + c2 * (s.a[j] * s.a[j] * rg.rho[i] * upp + s.b[j] * g)
        })
    }

    /// Collocation values of `L_λ^H (g ⊗ h)` with `h = H - 1`, built from the
    /// nodal `g`, `t∂_t g`, `∂_tt g`.
    fn elim_values(&self, tr: &Trivial, s: &Shape) -> DMatrix<f64> {
        let rg = &self.grid.radial;
        let lambda = tr.lambda;
        DMatrix::from_fn(self.grid.x.m + 1, rg.k + 1, |j, i| {
            let (t, hh, a, b) = (rg.r[i], s.h[j], s.a[j], s.b[j]);
            let (eta, eta1, eta2) = (hh - 1.0, a * hh, b * hh);
            let (g0, g1, g2) = (tr.elim.g[i], tr.g1[i], tr.g2[i]);
            let c = (lambda * t / hh).cos();
            let c2 = lambda * lambda / (c * c);
            (tr.mu * g0 + hh * hh * (g2 - tan_over_t(lambda / hh, t) * g1)) * eta
                + c2 * (g0 * eta2 + a * a * rg.rho[i] * g2 * eta + 2.0 * a * g1 * eta1 + b * g1 * eta)
        })
    }

    /// `F_λ(M₁u, h) = L_λ^h(u - g ⊗ h + u_λ)`; only `u` passes through the
    /// collocation matrices.
    pub(crate) fn f_coeffs(&self, tr: &Trivial, u: &DMatrix<f64>, h: &DomainProfile) -> Result<DMatrix<f64>> {
        let s = shape(&self.grid, h, floor(tr.lambda))?;
        let op = pullback_from_shape(&self.grid, tr.lambda, tr.mu, &s);
        let vals = op.apply_values(&self.grid, u) - self.elim_values(tr, &s) + self.trivial_values(tr, &s);
        Ok(&self.grid.x.v2c * vals)
    }

    fn g_with(&self, tr: &Trivial, coeffs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let h = self.h_profile(tr, coeffs);
        self.f_coeffs(tr, coeffs, &h)
    }

    /// `G_λ(u) = L_λ^{h_u}(M₁u + u_λ)` in coefficient space.
    pub fn g_coeffs(&self, lambda: f64, coeffs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.g_with(&self.trivial(lambda)?, coeffs)
    }

    /// `L_λ⁰ = μ(λ) + ∂_tt - λ tan(λt)∂_t + λ²/cos²(λt) ∂_xx`.
    pub fn linearized(&self, lambda: f64) -> Result<PointwiseOperator> {
        let tr = self.trivial(lambda)?;
        let s = shape(&self.grid, &DomainProfile::zero(&self.grid), floor(lambda))?;
        Ok(pullback_from_shape(&self.grid, lambda, tr.mu, &s))
    }

    /// `r(s) = -s U''(1) / (λ* V'(1))`
    pub fn r_of_s(&self, s: f64) -> f64 {
        -s * self.u_pp_one / (self.lambda_star * self.v_prime_one)
    }
}

#[allow(non_snake_case)]
pub fn sphere_G(op: &SphereOperator, lambda: f64, u: &Field2D) -> Result<Field2D> {
    op.grid.ensure(u)?;
    if !u.dirichlet {
        return Err(Error::Flag("G requires a Dirichlet field".into()));
    }
    Ok(Field2D::from_coeffs(&op.grid, op.g_coeffs(lambda, &u.coeffs)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereKernelReport {
    pub lambda: f64,
    pub tol: f64,
    /// Mode `k` of the grid is the frequency `kℓ`.
    pub modes: Vec<ModeSpectrum>,
    pub kernel_count: usize,
    pub kernel_mode: Option<usize>,
}

/// Per-mode singular values of `L_λ⁰` with the Dirichlet row at `t = 1`.
pub fn sphere_kernel_scan(op: &SphereOperator, lambda: f64, tol: f64, exec: Execution) -> Result<SphereKernelReport> {
    let rg = &op.grid.radial;
    let k = rg.k;
    let mu = spectral_mu(rg, lambda)?.value;
    let ell = op.model.ell;
    let modes: Vec<usize> = (0..=op.grid.l()).collect();
    let spectra = exec.map(&modes, |&mode| {
        let mut a = -radial_operator(rg, lambda, ell * mode as u32);
        for i in 0..k {
            a[(i, i)] += mu;
        }
        a.row_mut(k).fill(0.0);
        a[(k, k)] = 1.0;
        let svd = a.clone().svd(false, true);
        let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
        idx.sort_by(|x, y| svd.singular_values[*x].total_cmp(&svd.singular_values[*y]));
        let v = svd.v_t.as_ref().expect("right singular vectors requested").row(idx[0]).transpose();
        // deflated singular values come back as exact zeros; see `kernel_scan`
        let sigma_min = svd.singular_values[idx[0]].max((&a * &v).norm());
        ModeSpectrum { ell: mode, sigma_min, sigma_next: svd.singular_values[idx[1]] }
    });
    let hits: Vec<usize> = spectra.iter().filter(|m| m.sigma_min < tol).map(|m| m.ell).collect();
    Ok(SphereKernelReport {
        lambda,
        tol,
        kernel_count: hits.len(),
        kernel_mode: if hits.len() == 1 { Some(hits[0]) } else { None },
        modes: spectra,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereTransversality {
    /// `⟨v*, ∂_λL_λ⁰ v*⟩` with weight `cos(λ*t)`, by central differences.
    pub inner_product: f64,
    /// `‖v*‖²` with the same weight.
    pub norm_sq: f64,
    /// `σ_ℓ'(λ*)` from the eigencurves.
    pub sigma_prime: f64,
    pub delta: f64,
}

impl SphereTransversality {
    /// `|⟨v*, ∂_λL v*⟩ + σ'‖v*‖²| / (σ'‖v*‖²)`; the product carries the sign
    /// of `-σ'` because `L_λ⁰ (V cos ℓx) = -σ_ℓ V cos ℓx`.
    pub fn relative_gap(&self) -> f64 {
        let expected = -self.sigma_prime * self.norm_sq;
        (self.inner_product - expected).abs() / expected.abs()
    }
}

pub fn sphere_transversality(op: &SphereOperator) -> Result<SphereTransversality> {
    let v = op.kernel_field();
    let delta = 1e-5;
    let lp = op.linearized(op.lambda_star + delta)?.apply(&op.grid, &v);
    let lm = op.linearized(op.lambda_star - delta)?.apply(&op.grid, &v);
    let mut d = lp.axpy(-1.0, &lm).scaled(0.5 / delta);
    d.coeffs.column_mut(op.grid.k()).fill(0.0);
    let sigma_prime = solve_sigma(op.model.ell, op.lambda_star, op.model.gridsize)?.derivative;
    Ok(SphereTransversality {
        inner_product: op.grid.inner(&v, &d),
        norm_sq: op.grid.inner(&v, &v),
        sigma_prime,
        delta,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereBranchPoint {
    pub s: f64,
    /// Amplitude along `v*` before reparametrisation.
    pub r: f64,
    pub lambda: f64,
    /// `ξ_s = λ(r(s))`
    pub xi: f64,
    pub u: Field2D,
    /// Band half-width `h̃ = λ/(1 + h_u)` as cosine coefficients.
    pub h_tilde: DomainProfile,
    pub h_tilde_min: f64,
    pub h_tilde_max: f64,
    /// `μ(λ)/λ²`, the eigenvalue on the band.
    pub mu: f64,
    /// `μ(λ)`
    pub mu_lambda: f64,
    #[serde(rename = "residual_G")]
    pub residual_g: f64,
    pub constraint_residual: f64,
    pub boundary_residual: f64,
    /// Metric finite-difference residual at [`DEFAULT_ORACLE_STEP`].
    pub residual_oracle: f64,
    pub newton_iters: usize,
}

impl SphereBranchPoint {
    /// `h̃(x) = λ/(1 + h_u(x))` and its derivative, from the exact `h_u`.
    pub fn band(&self, grid: &Grid, h_u: &DomainProfile, x: f64) -> (f64, f64) {
        let (h, dh, _) = h_u.eval(grid, x);
        (self.lambda / (1.0 + h), -self.lambda * dh / (1.0 + h).powi(2))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereBranch {
    pub ell: u32,
    pub lambda0: f64,
    pub lambda_star: f64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub ds: f64,
    pub s_max: f64,
    pub points: Vec<SphereBranchPoint>,
    pub truncated: bool,
    pub s_reached: f64,
}

struct System<'a> {
    op: &'a SphereOperator,
    r: f64,
    v_star: Field2D,
    vv: f64,
    exec: Execution,
    fd_step: f64,
}

impl<'a> System<'a> {
    fn nr(&self) -> usize {
        self.op.grid.k()
    }

    fn ll(&self) -> usize {
        self.op.grid.l() + 1
    }

    fn pack(&self, lambda: f64, u: &DMatrix<f64>) -> DVector<f64> {
        let (nr, ll) = (self.nr(), self.ll());
        let mut x = DVector::zeros(ll * nr + 1);
        for l in 0..ll {
            for i in 0..nr {
                x[l * nr + i] = u[(l, i)];
            }
        }
        x[ll * nr] = lambda;
        x
    }

    fn unpack(&self, x: &DVector<f64>) -> (f64, DMatrix<f64>) {
        let (nr, ll) = (self.nr(), self.ll());
        let u = DMatrix::from_fn(ll, nr + 1, |l, i| if i < nr { x[l * nr + i] } else { 0.0 });
        (x[ll * nr], u)
    }

    fn interior(&self, g: &DMatrix<f64>) -> DVector<f64> {
        let (nr, ll) = (self.nr(), self.ll());
        DVector::from_fn(ll * nr, |p, _| g[(p / nr, p % nr)])
    }

    fn residual(&self, tr: &Trivial, u: &DMatrix<f64>) -> Result<(DVector<f64>, f64, f64)> {
        let g = self.interior(&self.op.g_with(tr, u)?);
        let n = g.len();
        let uf = Field2D::from_coeffs(&self.op.grid, u.clone());
        let c = self.op.grid.inner(&uf, &self.v_star) - self.r * self.vv;
        let f = DVector::from_fn(n + 1, |p, _| if p < n { g[p] } else { c });
        Ok((f, g.amax(), c.abs() / self.vv))
    }

    fn jacobian(&self, tr: &Trivial, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let op = self.op;
        let grid = &op.grid;
        let (nr, ll) = (self.nr(), self.ll());
        let kk = nr + 1;
        let n = ll * nr + 1;
        let lambda = tr.lambda;
        let h = op.h_profile(tr, u);
        let sh = shape(grid, &h, floor(lambda))?;
        let a = pullback_from_shape(grid, lambda, tr.mu, &sh).matrix(grid, self.exec);
        let mut j = DMatrix::zeros(n, n);

        // L^H on u with H frozen
        for l in 0..ll {
            let block = a.columns(l * kk, kk);
            for l2 in 0..ll {
                for i in 0..nr {
                    for ip in 0..nr {
                        j[(l2 * nr + i, l * nr + ip)] = block[(l2 * kk + i, ip)];
                    }
                }
            }
        }

        // dependence through h_u, both in H and in the g ⊗ h_u correction
        let dh = self.exec.map_range(ll, |l| -> Result<DMatrix<f64>> {
            let mut hp = h.clone();
            let mut hm = h.clone();
            hp.coefficients[l] += self.fd_step;
            hm.coefficients[l] -= self.fd_step;
            let fp = op.f_coeffs(tr, u, &hp)?;
            let fm = op.f_coeffs(tr, u, &hm)?;
            Ok((fp - fm) / (2.0 * self.fd_step))
        });
        let dt_row = grid.radial.dt.row(nr);
        for (l, d) in dh.into_iter().enumerate() {
            let d = d?;
            for ip in 0..nr {
                let c = tr.elim.c * dt_row[ip];
                if c == 0.0 {
                    continue;
                }
                for l2 in 0..ll {
                    for i in 0..nr {
                        j[(l2 * nr + i, l * nr + ip)] += d[(l2, i)] * c;
                    }
                }
            }
        }

        // λ enters through μ(λ), U_λ, M₁ and the coefficients
        let step = self.fd_step;
        let (gp, gm) = self.exec.join(
            || op.g_coeffs(lambda + step, u),
            || op.g_coeffs(lambda - step, u),
        );
        let dl = self.interior(&((gp? - gm?) / (2.0 * step)));
        for p in 0..n - 1 {
            j[(p, n - 1)] = dl[p];
        }

        for l in 0..ll {
            let wl = grid.x.mode_weight(l);
            for i in 0..nr {
                j[(n - 1, l * nr + i)] = wl * grid.radial.quad[i] * self.v_star.coeffs[(l, i)];
            }
        }
        Ok(j)
    }
}

/// Newton correction at amplitude `s` (constraint `⟨u, v*⟩ = r(s)‖v*‖²`).
pub fn sphere_correct(
    op: &SphereOperator,
    s: f64,
    lambda0: f64,
    u0: &Field2D,
    settings: &NewtonSettings,
    exec: Execution,
) -> Result<SphereBranchPoint> {
    op.grid.ensure(u0)?;
    let v_star = op.kernel_field();
    let vv = op.grid.inner(&v_star, &v_star);
    let sys = System { op, r: op.r_of_s(s), v_star, vv, exec, fd_step: settings.fd_step };
    let mut x = sys.pack(lambda0, &u0.coeffs);
    let mut last = f64::INFINITY;
    for it in 1..=settings.maxit {
        let (lambda, u) = sys.unpack(&x);
        if !(lambda > 0.0 && lambda < 1.0) {
            break;
        }
        let tr = op.trivial(lambda)?;
        let (f, gmax, cres) = sys.residual(&tr, &u)?;
        last = gmax;
        if gmax <= settings.tol && cres <= 1e-12 {
            return sphere_finish(op, s, &tr, u, gmax, cres, it);
        }
        if !gmax.is_finite() {
            break;
        }
        let j = sys.jacobian(&tr, &u)?;
        let dx = j
            .lu()
            .solve(&f)
            .ok_or_else(|| Error::Singular(format!("sphere Newton Jacobian at s = {s}")))?;
        x -= dx;
    }
    Err(Error::NoConvergence { s, residual: last, iters: settings.maxit })
}

fn sphere_finish(
    op: &SphereOperator,
    s: f64,
    tr: &Trivial,
    u: DMatrix<f64>,
    gmax: f64,
    cres: f64,
    iters: usize,
) -> Result<SphereBranchPoint> {
    let grid = &op.grid;
    let lambda = tr.lambda;
    let h_u = op.h_profile(tr, &u);
    let samples = h_u.samples(grid).h;
    let band = samples.map(|h| lambda / (1.0 + h));
    let (lo, hi) = (band.min(), band.max());
    if !(lo > 0.0 && hi < std::f64::consts::FRAC_PI_2) {
        return Err(Error::Admissibility(format!("band half-width leaves (0, pi/2) at s = {s}")));
    }
    let h_tilde = DomainProfile { coefficients: (&grid.x.v2c * &band).as_slice().to_vec() };
    let sol = SphereSolution::new(op, tr, &u);
    Ok(SphereBranchPoint {
        s,
        r: op.r_of_s(s),
        lambda,
        xi: lambda,
        u: Field2D::from_coeffs(grid, u).with_dirichlet(),
        h_tilde,
        h_tilde_min: lo,
        h_tilde_max: hi,
        mu: tr.mu / (lambda * lambda),
        mu_lambda: tr.mu,
        residual_g: gmax,
        constraint_residual: cres,
        boundary_residual: sol.boundary_residual(),
        residual_oracle: sol.interior_residual(DEFAULT_ORACLE_STEP),
        newton_iters: iters,
    })
}

/// Reconstruct the physical solution of a converged point.
pub fn sphere_solution(op: &SphereOperator, p: &SphereBranchPoint) -> Result<SphereSolution> {
    op.grid.ensure(&p.u)?;
    let tr = op.trivial(p.lambda)?;
    Ok(SphereSolution::new(op, &tr, &p.u.coeffs))
}

/// `h_u` of a converged point, `h̃ = λ/(1 + h_u)`.
pub fn h_u_of(op: &SphereOperator, p: &SphereBranchPoint) -> Result<DomainProfile> {
    let tr = op.trivial(p.lambda)?;
    Ok(op.h_profile(&tr, &p.u.coeffs))
}

fn extrapolate(op: &SphereOperator, path: &[SphereBranchPoint], s: f64) -> (f64, Field2D) {
    match path {
        [.., a, b] if b.s != a.s => {
            let t = (s - b.s) / (b.s - a.s);
            let lambda = b.lambda + t * (b.lambda - a.lambda);
            let mut u = b.u.axpy(t, &b.u.axpy(-1.0, &a.u));
            u.dirichlet = true;
            (lambda, u)
        }
        _ => (op.lambda_star, op.kernel_field().scaled(op.r_of_s(s))),
    }
}

fn half_branch(
    op: &SphereOperator,
    sign: f64,
    s_max: f64,
    ds: f64,
    settings: &NewtonSettings,
    exec: Execution,
    origin: &SphereBranchPoint,
) -> (Vec<SphereBranchPoint>, bool) {
    let steps = (s_max / ds).round() as usize;
    let mut path = vec![origin.clone()];
    let mut out = Vec::new();
    for k in 1..=steps {
        let target = sign * ds * k as f64;
        let mut step = target - path.last().map_or(0.0, |p| p.s);
        let mut halvings = 0;
        loop {
            let here = path.last().map_or(0.0, |p| p.s);
            let s_try = if ((here + step) - target).abs() <= 1e-14 { target } else { here + step };
            let (lambda0, u0) = extrapolate(op, &path, s_try);
            match sphere_correct(op, s_try, lambda0, &u0, settings, exec) {
                Ok(p) => {
                    let reached = s_try == target;
                    path.push(p.clone());
                    if reached {
                        out.push(p);
                        break;
                    }
                }
                Err(_) => {
                    halvings += 1;
                    if halvings > settings.max_halvings {
                        return (out, true);
                    }
                    step *= 0.5;
                }
            }
        }
    }
    (out, false)
}

/// Continue the sphere branch to `±s_max` in steps of `ds` of the
/// reparametrised amplitude `s`.
pub fn sphere_trace(op: &SphereOperator, s_max: f64, ds: f64, settings: &NewtonSettings, exec: Execution) -> Result<SphereBranch> {
    if !(ds > 0.0 && s_max >= ds) {
        return Err(Error::Precondition(format!("need ds > 0 and s_max >= ds, got ds = {ds}, s_max = {s_max}")));
    }
    let origin = sphere_correct(op, 0.0, op.lambda_star, &op.grid.zeros().with_dirichlet(), settings, exec)?;
    let ((mut neg, tn), (pos, tp)) = exec.join(
        || half_branch(op, -1.0, s_max, ds, settings, exec, &origin),
        || half_branch(op, 1.0, s_max, ds, settings, exec, &origin),
    );
    let s_reached = neg.last().map_or(0.0, |p| p.s.abs()).min(pos.last().map_or(0.0, |p| p.s));
    neg.reverse();
    let mut points = neg;
    points.push(origin);
    points.extend(pos);
    Ok(SphereBranch {
        ell: op.model.ell,
        lambda0: op.model.lambda0,
        lambda_star: op.lambda_star,
        k: op.grid.k(),
        l: op.grid.l(),
        ds,
        s_max,
        points,
        truncated: tn || tp,
        s_reached,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereExpansionRow {
    pub s: f64,
    pub xi: f64,
    /// `max_x |h̃_s - ξ_s - s cos(ℓx)|`
    pub e: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SphereExpansionReport {
    pub rows: Vec<SphereExpansionRow>,
    /// `E(s)/|s|` shrinks by at least [`DECREASE_FACTOR`] per halving of `|s|`.
    pub monotone: bool,
}

pub fn sphere_expansion(op: &SphereOperator, branch: &SphereBranch) -> Result<SphereExpansionReport> {
    let ell = op.model.ell as f64;
    let xs: Vec<f64> = (0..=256).map(|j| std::f64::consts::PI * j as f64 / (256.0 * ell)).collect();
    let mut rows = Vec::new();
    for p in &branch.points {
        let h_u = h_u_of(op, p)?;
        let e = xs
            .iter()
            .map(|&x| (p.band(&op.grid, &h_u, x).0 - p.xi - p.s * (ell * x).cos()).abs())
            .fold(0.0, f64::max);
        rows.push(SphereExpansionRow { s: p.s, xi: p.xi, e });
    }
    let mut monotone = true;
    for sign in [-1.0, 1.0] {
        let mut side: Vec<&SphereExpansionRow> = rows.iter().filter(|r| r.s * sign > 0.0).collect();
        side.sort_by(|a, b| a.s.abs().total_cmp(&b.s.abs()));
        for i in 0..side.len() {
            for j in i + 1..side.len() {
                if (side[j].s / side[i].s - 2.0).abs() < 1e-9 {
                    monotone &= side[i].e / side[i].s.abs() <= DECREASE_FACTOR * side[j].e / side[j].s.abs();
                }
            }
        }
    }
    Ok(SphereExpansionReport { rows, monotone })
}
