//! Newton continuation of the bifurcating cylinder branch `s ↦ (λ(s), φ_s)`.
//!
//! Unknowns are the interior radial values of every cosine mode of `u`
//! together with `λ`; equations are the interior rows of `G_λ(u)` and the
//! amplitude constraint `⟨u, v*⟩ = s ⟨v*, v*⟩`.

mod reconstruct;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

pub use reconstruct::{
    expansion_report, nodal_domains, DECREASE_FACTOR, reconstruct_solution, slice_sign_changes, ExpansionReport, ExpansionRow,
    PhysicalSolution,
};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::field_discretization::cylinder::shape;
use crate::field_discretization::{CylinderOperator, DomainProfile, Field2D};

/// Newton parameters for one branch point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct NewtonSettings {
    /// Target for the max norm of `G` over interior rows.
    pub tol: f64,
    pub maxit: usize,
    /// Step of the central differences in the `h` columns.
    pub fd_step: f64,
    /// Maximum number of step halvings during tracing.
    pub max_halvings: u32,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings { tol: 1e-10, maxit: 12, fd_step: 1e-6, max_halvings: 5 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BranchPoint {
    pub s: f64,
    pub lambda: f64,
    pub u: Field2D,
    /// `μ_s = j_m² / λ(s)`
    pub mu: f64,
    /// `h_s = (1 + h_{φ_s}) / √λ(s)` as cosine coefficients.
    pub h_phys: DomainProfile,
    #[serde(rename = "residual_G")]
    pub residual_g: f64,
    pub residual_oracle: f64,
    /// `max(|ũ(1,·) - 1|, |D_t ũ(1,·)|)` at the collocation points.
    pub boundary_residual: f64,
    /// `|⟨u, v*⟩ / ⟨v*, v*⟩ - s|`
    pub constraint_residual: f64,
    pub newton_iters: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Branch {
    #[serde(rename = "N")]
    pub n: u32,
    pub m: u32,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub ds: f64,
    pub s_max: f64,
    pub points: Vec<BranchPoint>,
    /// Set when Newton failed before `±s_max` was reached.
    pub truncated: bool,
    /// Largest `|s|` reached on both sides; an empirical branch extent.
    pub s_reached: f64,
}

/// Initial guess `(λ_m, s v*)`.
pub fn predict(op: &CylinderOperator, s: f64) -> (f64, Field2D) {
    (op.model.lambda_m, op.kernel_field().scaled(s))
}

struct System<'a> {
    op: &'a CylinderOperator,
    s: f64,
    v_star: Field2D,
    vv: f64,
    exec: Execution,
    fd_step: f64,
}

impl<'a> System<'a> {
    fn new(op: &'a CylinderOperator, s: f64, exec: Execution, fd_step: f64) -> Self {
        let v_star = op.kernel_field();
        let vv = op.grid.inner(&v_star, &v_star);
        System { op, s, v_star, vv, exec, fd_step }
    }

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

    /// Interior rows of `G` and the constraint; also returns `‖G‖_max`.
    fn residual(&self, lambda: f64, u: &DMatrix<f64>) -> Result<(DVector<f64>, f64, f64)> {
        let g = self.op.g_coeffs(lambda, u)?;
        let (nr, ll) = (self.nr(), self.ll());
        let mut f = DVector::zeros(ll * nr + 1);
        let mut gmax: f64 = 0.0;
        for l in 0..ll {
            for i in 0..nr {
                f[l * nr + i] = g[(l, i)];
                gmax = gmax.max(g[(l, i)].abs());
            }
        }
        let uf = Field2D::from_coeffs(&self.op.grid, u.clone());
        let c = self.op.grid.inner(&uf, &self.v_star) - self.s * self.vv;
        f[ll * nr] = c;
        Ok((f, gmax, c.abs() / self.vv))
    }

    fn jacobian(&self, lambda: f64, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let op = self.op;
        let grid = &op.grid;
        let (nr, ll) = (self.nr(), self.ll());
        let kk = nr + 1;
        let n = ll * nr + 1;
        let h = DomainProfile { coefficients: op.elim.h_coeffs(grid, u).as_slice().to_vec() };
        let sh = shape(grid, &h, 0.0)?;
        let w = op.elim.m1(grid, u);
        let a = op.pullback_from_shape(lambda, &sh).matrix(grid, self.exec);
        let m1r = op.elim.radial_matrix(grid);
        let mut j = DMatrix::zeros(n, n);

        // linear part: P_H ∘ M₁ with H frozen
        for l in 0..ll {
            let block = a.columns(l * kk, kk) * &m1r;
            for l2 in 0..ll {
                for i in 0..nr {
                    for ip in 0..nr {
                        j[(l2 * nr + i, l * nr + ip)] = block[(l2 * kk + i, ip)];
                    }
                }
            }
        }

        // dependence through h_u, by central differences in each h mode
        let dh = self.exec.map_range(ll, |l| -> Result<DMatrix<f64>> {
            let mut hp = h.clone();
            let mut hm = h.clone();
            hp.coefficients[l] += self.fd_step;
            hm.coefficients[l] -= self.fd_step;
            let fp = op.f_coeffs(lambda, &w, &hp)?;
            let fm = op.f_coeffs(lambda, &w, &hm)?;
            Ok((fp - fm) / (2.0 * self.fd_step))
        });
        let dt_row = grid.radial.dt.row(nr);
        for (l, d) in dh.into_iter().enumerate() {
            let d = d?;
            for ip in 0..nr {
                let c = op.elim.c * dt_row[ip];
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

        // G is affine in λ
        let g1 = op.g_coeffs(1.0, u)?;
        let g0 = op.g_coeffs(0.0, u)?;
        for l in 0..ll {
            for i in 0..nr {
                j[(l * nr + i, n - 1)] = g1[(l, i)] - g0[(l, i)];
            }
        }

        // constraint row: ⟨u, v*⟩
        for l in 0..ll {
            let wl = grid.x.mode_weight(l);
            for i in 0..nr {
                j[(n - 1, l * nr + i)] = wl * grid.radial.quad[i] * self.v_star.coeffs[(l, i)];
            }
        }
        Ok(j)
    }
}

/// Newton correction of `(λ0, u0)` at amplitude `s`.
pub fn correct(
    op: &CylinderOperator,
    s: f64,
    lambda0: f64,
    u0: &Field2D,
    settings: &NewtonSettings,
    exec: Execution,
) -> Result<BranchPoint> {
    op.grid.ensure(u0)?;
    let sys = System::new(op, s, exec, settings.fd_step);
    let mut x = sys.pack(lambda0, &u0.coeffs);
    let mut last = f64::INFINITY;
    for it in 1..=settings.maxit {
        let (lambda, u) = sys.unpack(&x);
        let (f, gmax, cres) = sys.residual(lambda, &u)?;
        last = gmax;
        if gmax <= settings.tol && cres <= 1e-12 {
            return finish(op, s, lambda, u, gmax, cres, it);
        }
        if !gmax.is_finite() {
            break;
        }
        let j = sys.jacobian(lambda, &u)?;
        let dx = j
            .lu()
            .solve(&f)
            .ok_or_else(|| Error::Singular(format!("Newton Jacobian at s = {s}")))?;
        x -= dx;
    }
    Err(Error::NoConvergence { s, residual: last, iters: settings.maxit })
}

fn finish(op: &CylinderOperator, s: f64, lambda: f64, u: DMatrix<f64>, gmax: f64, cres: f64, iters: usize) -> Result<BranchPoint> {
    let grid = &op.grid;
    let h = op.elim.h_coeffs(grid, &u);
    let sq = lambda.sqrt();
    let mut hp: Vec<f64> = h.iter().map(|v| v / sq).collect();
    hp[0] += 1.0 / sq;
    let h_phys = DomainProfile { coefficients: hp };
    if h_phys.min_one_plus(grid) - 1.0 <= 0.0 {
        return Err(Error::Admissibility(format!("h_s is not positive at s = {s}")));
    }
    let j2 = op.model.j_m * op.model.j_m;
    let mut point = BranchPoint {
        s,
        lambda,
        u: Field2D::from_coeffs(grid, u).with_dirichlet(),
        mu: j2 / lambda,
        h_phys,
        residual_g: gmax,
        residual_oracle: f64::NAN,
        boundary_residual: f64::NAN,
        constraint_residual: cres,
        newton_iters: iters,
    };
    let sol = reconstruct_solution(op, &point)?;
    point.boundary_residual = sol.boundary_residual();
    point.residual_oracle = sol.fd_residual(1e-3);
    Ok(point)
}

/// Extrapolate from the last one or two converged points to `s`.
fn extrapolate(op: &CylinderOperator, path: &[BranchPoint], s: f64) -> (f64, Field2D) {
    match path {
        [.., a, b] if b.s != a.s => {
            let t = (s - b.s) / (b.s - a.s);
            let lambda = b.lambda + t * (b.lambda - a.lambda);
            let mut u = b.u.axpy(t, &b.u.axpy(-1.0, &a.u));
            u.dirichlet = true;
            (lambda, u)
        }
        _ => predict(op, s),
    }
}

/// One half-branch `0 → sign · s_max`; returns recorded points (excluding
/// `s = 0`) and whether it was truncated.
fn half_branch(
    op: &CylinderOperator,
    sign: f64,
    s_max: f64,
    ds: f64,
    settings: &NewtonSettings,
    exec: Execution,
    origin: &BranchPoint,
) -> (Vec<BranchPoint>, bool) {
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
            match correct(op, s_try, lambda0, &u0, settings, exec) {
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

/// Continue the branch to `±s_max` in steps of `ds`; the two halves run
/// through `exec.join`.
pub fn trace(op: &CylinderOperator, s_max: f64, ds: f64, settings: &NewtonSettings, exec: Execution) -> Result<Branch> {
    if !(ds > 0.0 && s_max >= ds) {
        return Err(Error::Precondition(format!("need ds > 0 and s_max >= ds, got ds = {ds}, s_max = {s_max}")));
    }
    let (l0, u0) = predict(op, 0.0);
    let origin = correct(op, 0.0, l0, &u0, settings, exec)?;
    let ((mut neg, tn), (pos, tp)) = exec.join(
        || half_branch(op, -1.0, s_max, ds, settings, exec, &origin),
        || half_branch(op, 1.0, s_max, ds, settings, exec, &origin),
    );
    let s_reached = neg.last().map_or(0.0, |p| p.s.abs()).min(pos.last().map_or(0.0, |p| p.s));
    neg.reverse();
    let mut points = neg;
    points.push(origin);
    points.extend(pos);
    Ok(Branch {
        n: op.model.n,
        m: op.model.m,
        k: op.grid.k(),
        l: op.grid.l(),
        ds,
        s_max,
        points,
        truncated: tn || tp,
        s_reached,
    })
}
