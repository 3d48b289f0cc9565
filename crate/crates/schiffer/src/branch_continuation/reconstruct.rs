//! Physical solutions `w_s` on `Ω_{h_s} = {|t| h_s(x) < 1}` rebuilt from a
//! branch point, an independent finite-difference residual, nodal domains,
//! and the first-order expansion remainders.

use std::collections::VecDeque;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{Branch, BranchPoint};
use crate::cylinder_model::CylinderModel;
use crate::error::{Error, Result};
use crate::field_discretization::{CylinderOperator, DomainProfile, Grid};

/// `ũ_s = u_m + M₁φ_s` on the reference cylinder and `w_s(t,x) = ũ_s(h_s(x)|t|, x)`.
#[derive(Clone, Debug)]
pub struct PhysicalSolution {
    pub model: CylinderModel,
    pub grid: Grid,
    pub s: f64,
    pub lambda: f64,
    pub mu: f64,
    pub h_phys: DomainProfile,
    /// coefficients of `M₁ φ_s`
    m1: DMatrix<f64>,
}

pub fn reconstruct_solution(op: &CylinderOperator, point: &BranchPoint) -> Result<PhysicalSolution> {
    op.grid.ensure(&point.u)?;
    Ok(PhysicalSolution {
        model: op.model.clone(),
        grid: op.grid.clone(),
        s: point.s,
        lambda: point.lambda,
        mu: point.mu,
        h_phys: point.h_phys.clone(),
        m1: op.elim.m1(&op.grid, &point.u.coeffs),
    })
}

impl PhysicalSolution {
    /// `ũ_s(r, x)` for `r ∈ [0, 1]`.
    pub fn tilde_u(&self, r: f64, x: f64) -> f64 {
        let row = self.grid.radial.lagrange_row(r * r);
        let radial = &self.m1 * row;
        self.model.u(r) + self.grid.x.eval(radial.as_slice(), x).0
    }

    /// `M₁φ_s(r, x)`, the deviation of `ũ_s` from the trivial solution.
    pub fn deviation(&self, r: f64, x: f64) -> f64 {
        let row = self.grid.radial.lagrange_row(r * r);
        let radial = &self.m1 * row;
        self.grid.x.eval(radial.as_slice(), x).0
    }

    pub fn h_s(&self, x: f64) -> f64 {
        self.h_phys.eval(&self.grid, x).0
    }

    /// `w_s` at radial distance `rho = |t|`; points outside the domain are rejected.
    pub fn w(&self, rho: f64, x: f64) -> Result<f64> {
        let r = rho.abs() * self.h_s(x);
        if r > 1.0 + 1e-12 {
            return Err(Error::Domain(format!("|t| = {rho} lies outside the domain at x = {x}")));
        }
        Ok(self.tilde_u(r.min(1.0), x))
    }

    /// `max(|ũ(1,x_j) - 1|, |D_t ũ(1,x_j)|)` over the collocation points.
    pub fn boundary_residual(&self) -> f64 {
        let k = self.grid.k();
        let vals = &self.grid.x.c2v * &self.m1;
        let dt = &self.grid.x.c2v * (&self.m1 * self.grid.radial.dt.row(k).transpose());
        let u1 = self.model.u(1.0);
        let g1 = self.model.g(1.0);
        let mut e: f64 = 0.0;
        for j in 0..vals.nrows() {
            e = e.max((u1 + vals[(j, k)] - 1.0).abs()).max((g1 + dt[j]).abs());
        }
        e
    }

    /// Max of `|Δ w + μ_s w|` in physical coordinates by fourth-order
    /// differences of step `delta` on an interior sample. Uses only point
    /// evaluations of `w`, not the pulled-back operator.
    pub fn fd_residual(&self, delta: f64) -> f64 {
        let n = self.model.n as f64;
        let w = |rho: f64, x: f64| -> f64 { self.tilde_u((rho * self.h_s(x)).min(1.0), x) };
        let d1 = |f: &dyn Fn(f64) -> f64, a: f64| -> f64 {
            (f(a - 2.0 * delta) - 8.0 * f(a - delta) + 8.0 * f(a + delta) - f(a + 2.0 * delta)) / (12.0 * delta)
        };
        let d2 = |f: &dyn Fn(f64) -> f64, a: f64| -> f64 {
            (-f(a - 2.0 * delta) + 16.0 * f(a - delta) - 30.0 * f(a) + 16.0 * f(a + delta) - f(a + 2.0 * delta))
                / (12.0 * delta * delta)
        };
        let mut worst: f64 = 0.0;
        for &theta in &[0.2, 0.4, 0.6, 0.8] {
            for jx in 0..7 {
                let x = PI * (jx as f64 + 0.5) / 7.0;
                let rho = theta / self.h_s(x);
                let in_rho = |p: f64| w(p, x);
                let in_x = |y: f64| w(rho, y);
                let lap = d2(&in_rho, rho) + (n - 1.0) / rho * d1(&in_rho, rho) + d2(&in_x, x);
                worst = worst.max((lap + self.mu * w(rho, x)).abs());
            }
        }
        worst
    }
}

/// Connected components of `{w_s > 0}` and `{w_s < 0}` sampled on `nt × nx`
/// points of the scaled domain `θ = t h_s(x)`, periodic in `x`.
///
/// For `N = 1` the variable `θ` runs over `(-1, 1)`; for `N ≥ 2` over
/// `[0, 1)`, since spheres `|t| = const` are connected.
pub fn nodal_domains(sol: &PhysicalSolution, nt: usize, nx: usize) -> usize {
    let two_sided = sol.model.n == 1;
    let theta = |i: usize| -> f64 {
        let a = (i as f64 + 0.5) / nt as f64;
        if two_sided {
            2.0 * a - 1.0
        } else {
            a
        }
    };
    let mut sign = vec![0i8; nt * nx];
    for j in 0..nx {
        let x = 2.0 * PI * j as f64 / nx as f64;
        for i in 0..nt {
            let v = sol.tilde_u(theta(i).abs(), x);
            sign[i * nx + j] = if v > 0.0 {
                1
            } else if v < 0.0 {
                -1
            } else {
                0
            };
        }
    }
    let mut seen = vec![false; nt * nx];
    let mut count = 0;
    for start in 0..nt * nx {
        if seen[start] || sign[start] == 0 {
            continue;
        }
        count += 1;
        let sg = sign[start];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(p) = queue.pop_front() {
            let (i, j) = (p / nx, p % nx);
            let mut nb = vec![i * nx + (j + 1) % nx, i * nx + (j + nx - 1) % nx];
            if i + 1 < nt {
                nb.push((i + 1) * nx + j);
            }
            if i > 0 {
                nb.push((i - 1) * nx + j);
            }
            for q in nb {
                if !seen[q] && sign[q] == sg {
                    seen[q] = true;
                    queue.push_back(q);
                }
            }
        }
    }
    count
}

/// Sign changes of `w_s` along the slice `x = const`, `t ∈ (-1/h_s, 1/h_s)`
/// (`N = 1`) or `|t| ∈ [0, 1/h_s)`.
pub fn slice_sign_changes(sol: &PhysicalSolution, x: f64, samples: usize) -> usize {
    let two_sided = sol.model.n == 1;
    let vals: Vec<f64> = (0..samples)
        .map(|i| {
            let a = (i as f64 + 0.5) / samples as f64;
            let th = if two_sided { 2.0 * a - 1.0 } else { a };
            sol.tilde_u(th.abs(), x)
        })
        .collect();
    vals.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionRow {
    pub s: f64,
    pub lambda: f64,
    /// `max_x |h_s - κ√μ_s - sβ cos x|`
    pub e_h: f64,
    /// `max |ũ_s - U_m - s(φ₁ + γ r U_m') cos x|`, the form with `+γ`
    pub e_w_plus: f64,
    /// the same with `-γ`, which is what `ũ_s = u_m + φ_s - g h_{φ_s}` gives
    pub e_w_minus: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExpansionReport {
    pub beta: f64,
    pub gamma: f64,
    pub rows: Vec<ExpansionRow>,
    /// `E_h(s)/|s|` decreases by at least [`DECREASE_FACTOR`] over each
    /// halving of `|s|`, on both sides.
    pub e_h_monotone: bool,
    pub e_w_plus_monotone: bool,
    pub e_w_minus_monotone: bool,
    /// `E_h(s)/s²` ratios between consecutive halvings, diagnostic only.
    pub e_h_second_order_ratios: Vec<f64>,
}

fn remainders(op: &CylinderOperator, p: &BranchPoint) -> Result<ExpansionRow> {
    let c = &op.model;
    let sol = reconstruct_solution(op, p)?;
    let xs: Vec<f64> = (0..=256).map(|j| PI * j as f64 / 256.0).collect();
    let base = c.kappa * p.mu.sqrt();
    let e_h = xs.iter().map(|&x| (sol.h_s(x) - base - p.s * c.beta * x.cos()).abs()).fold(0.0, f64::max);
    let rs: Vec<f64> = (0..=64).map(|i| i as f64 / 64.0).collect();
    let (mut plus, mut minus) = (0.0f64, 0.0f64);
    for &r in &rs {
        let (phi, g) = (c.phi1(r), c.g(r));
        for &x in xs.iter().step_by(4) {
            let dev = sol.deviation(r, x);
            plus = plus.max((dev - p.s * (phi + c.gamma * g) * x.cos()).abs());
            minus = minus.max((dev - p.s * (phi - c.gamma * g) * x.cos()).abs());
        }
    }
    Ok(ExpansionRow { s: p.s, lambda: p.lambda, e_h, e_w_plus: plus, e_w_minus: minus })
}

/// A halving of `|s|` must shrink `E(s)/|s|` at least by this factor; a
/// remainder that is `O(s)` rather than `o(s)` only drifts at roundoff level.
pub const DECREASE_FACTOR: f64 = 0.9;

fn monotone_over_halvings(rows: &[ExpansionRow], f: impl Fn(&ExpansionRow) -> f64) -> bool {
    let mut ok = true;
    for sign in [-1.0, 1.0] {
        let mut side: Vec<&ExpansionRow> = rows.iter().filter(|r| r.s * sign > 0.0).collect();
        side.sort_by(|a, b| a.s.abs().total_cmp(&b.s.abs()));
        for i in 0..side.len() {
            for j in i + 1..side.len() {
                let ratio = side[j].s / side[i].s;
                if (ratio - 2.0).abs() < 1e-9 {
                    ok &= f(side[i]) / side[i].s.abs() <= DECREASE_FACTOR * f(side[j]) / side[j].s.abs();
                }
            }
        }
    }
    ok
}

/// Remainders of the first-order expansions at every branch point.
pub fn expansion_report(op: &CylinderOperator, branch: &Branch) -> Result<ExpansionReport> {
    let rows = branch.points.iter().map(|p| remainders(op, p)).collect::<Result<Vec<_>>>()?;
    let e_h_monotone = monotone_over_halvings(&rows, |r| r.e_h);
    let e_w_plus_monotone = monotone_over_halvings(&rows, |r| r.e_w_plus);
    let e_w_minus_monotone = monotone_over_halvings(&rows, |r| r.e_w_minus);
    let mut ratios = Vec::new();
    let mut pos: Vec<&ExpansionRow> = rows.iter().filter(|r| r.s > 0.0).collect();
    pos.sort_by(|a, b| a.s.total_cmp(&b.s));
    for i in 0..pos.len() {
        for j in i + 1..pos.len() {
            if (pos[j].s / pos[i].s - 2.0).abs() < 1e-9 && pos[i].e_h > 0.0 {
                ratios.push((pos[j].e_h / pos[j].s.powi(2)) / (pos[i].e_h / pos[i].s.powi(2)));
            }
        }
    }
    Ok(ExpansionReport {
        beta: op.model.beta,
        gamma: op.model.gamma,
        rows,
        e_h_monotone,
        e_w_plus_monotone,
        e_w_minus_monotone,
        e_h_second_order_ratios: ratios,
    })
}
