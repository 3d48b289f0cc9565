//! Weighted Sturm–Liouville eigencurves on `[0, 1]` with weight `cos(λt)`.
//!
//! `μ(λ)` is the first positive eigenvalue of `-(cos(λt) u')' / cos(λt) = μ u`
//! with `u'(0) = u'(1) = 0`; `σ_ℓ(λ)` is the first eigenvalue of
//! `-(cos(λt) v')' / cos(λt) + (ℓλ)² v / cos²(λt) - μ(λ) v = σ v` with
//! `v'(0) = v(1) = 0`. Both come from a symmetric second-order finite
//! difference scheme on `n` and `2n` cells, Richardson-extrapolated.
//! A Chebyshev collocation route lives in [`spectral`].

pub mod spectral;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;

pub use spectral::{spectral_lambda_star, spectral_mu, spectral_sigma, SpectralEigen};

/// Coarse cell count; the fine solve uses twice as many.
pub const DEFAULT_SL_N: usize = 500;

/// Cap of the `ℓ₀` search.
pub const ELL_SEARCH_CAP: u32 = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// `u'(0) = u'(1) = 0`, the problem for `μ(λ)`.
    NeumannNeumann,
    /// `v'(0) = v(1) = 0`, the problem for `σ_ℓ(λ)`.
    NeumannDirichlet,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::Domain(format!("lambda = {lambda} must lie in [0, 1)")));
    }
    Ok(())
}

/// `-(w v')' + w q v = ν w v` on `n` uniform cells, `w = cos(λt)`,
/// `q = (ℓλ)²/cos²(λt)` for the Dirichlet problem and `0` otherwise.
#[derive(Clone, Debug)]
pub struct SLProblem {
    pub lambda: f64,
    pub ell: u32,
    pub bc: Boundary,
    pub n: usize,
}

/// Symmetric tridiagonal form `M^{-1/2} K M^{-1/2}` plus the lumped mass.
struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    mass: Vec<f64>,
}

impl SLProblem {
    pub fn new(lambda: f64, ell: u32, bc: Boundary, n: usize) -> Result<Self> {
        check_lambda(lambda)?;
        if n < 8 {
            return Err(Error::Precondition(format!("grid size {n} is below 8")));
        }
        Ok(SLProblem { lambda, ell, bc, n })
    }

    pub fn weight(&self, t: f64) -> f64 {
        (self.lambda * t).cos()
    }

    pub fn potential(&self, t: f64) -> f64 {
        match self.bc {
            Boundary::NeumannNeumann => 0.0,
            Boundary::NeumannDirichlet => {
                let c = (self.lambda * t).cos();
                (self.ell as f64 * self.lambda).powi(2) / (c * c)
            }
        }
    }

    pub fn step(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Number of unknown nodes; the Dirichlet node `t = 1` is dropped.
    fn unknowns(&self) -> usize {
        match self.bc {
            Boundary::NeumannNeumann => self.n + 1,
            Boundary::NeumannDirichlet => self.n,
        }
    }

    fn assemble(&self) -> Tridiagonal {
        let h = self.step();
        let nu = self.unknowns();
        let a: Vec<f64> = (0..self.n).map(|i| self.weight((i as f64 + 0.5) * h) / h).collect();
        let mut k_diag = vec![0.0; nu];
        let mut k_off = vec![0.0; nu.saturating_sub(1)];
        let mut mass = vec![0.0; nu];
        for i in 0..nu {
            let t = i as f64 * h;
            let lump = if i == 0 || i == self.n { 0.5 } else { 1.0 };
            mass[i] = lump * h * self.weight(t);
            k_diag[i] = mass[i] * self.potential(t);
            if i > 0 {
                k_diag[i] += a[i - 1];
            }
            if i < self.n {
                k_diag[i] += a[i];
            }
            if i + 1 < nu {
                k_off[i] = -a[i];
            }
        }
        let diag = (0..nu).map(|i| k_diag[i] / mass[i]).collect();
        let off = (0..nu.saturating_sub(1)).map(|i| k_off[i] / (mass[i] * mass[i + 1]).sqrt()).collect();
        Tridiagonal { diag, off, mass }
    }

    /// `index`-th smallest discrete eigenvalue (from 0) and its eigenvector
    /// on the nodes `t_i = i/n`, `i = 0..=n` (zero at a Dirichlet end).
    pub fn eigenpair(&self, index: usize) -> Result<(f64, Vec<f64>)> {
        let tri = self.assemble();
        let nu = tri.diag.len();
        if index >= nu {
            return Err(Error::Eigen(format!("index {index} exceeds {nu} unknowns")));
        }
        let estimate = tri.kth_eigenvalue(index);
        let y = tri.eigenvector(estimate)?;
        let mut v: Vec<f64> = y.iter().zip(tri.mass.iter()).map(|(y, m)| y / m.sqrt()).collect();
        if self.bc == Boundary::NeumannDirichlet {
            v.push(0.0);
        }
        // Bisection is limited to about ε‖T‖ ~ ε/h²; the quotient in
        // difference form is accurate to a few ulps of the eigenvalue.
        let value = if index == 0 && self.bc == Boundary::NeumannNeumann { estimate } else { self.rayleigh(&v) };
        Ok((value, v))
    }

    /// Trapezoid rule on the nodes.
    pub fn integrate(&self, f: impl Fn(usize, f64) -> f64) -> f64 {
        let h = self.step();
        (0..=self.n)
            .map(|i| {
                let lump = if i == 0 || i == self.n { 0.5 } else { 1.0 };
                lump * h * f(i, i as f64 * h)
            })
            .sum()
    }

    /// Discrete Rayleigh quotient `(Σ a (Δv)²/h + Σ m q v²) / Σ m v²`.
    pub fn rayleigh(&self, v: &[f64]) -> f64 {
        let h = self.step();
        let mut num = 0.0;
        for i in 0..self.n {
            let d = v[i + 1] - v[i];
            num += self.weight((i as f64 + 0.5) * h) / h * d * d;
        }
        let mut den = 0.0;
        for (i, vi) in v.iter().enumerate() {
            let t = i as f64 * h;
            let lump = if i == 0 || i == self.n { 0.5 } else { 1.0 };
            let m = lump * h * self.weight(t);
            num += m * self.potential(t) * vi * vi;
            den += m * vi * vi;
        }
        num / den
    }
}

impl Tridiagonal {
    /// Number of eigenvalues below `x`, by the signs of the `LDLᵀ` pivots.
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.diag.len() {
            let e2 = if i > 0 { self.off[i - 1] * self.off[i - 1] } else { 0.0 };
            q = self.diag[i] - x - if i > 0 { e2 / q } else { 0.0 };
            if q == 0.0 {
                q = -f64::EPSILON * (x.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    fn kth_eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Inverse iteration at a shift next to `value`, unit Euclidean norm.
    fn eigenvector(&self, value: f64) -> Result<Vec<f64>> {
        let n = self.diag.len();
        let shift = value + 1e-10 * (1.0 + value.abs());
        let mut y = vec![1.0; n];
        for _ in 0..3 {
            y = self.solve_shifted(shift, &y);
            let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm.is_finite() && norm > 0.0) {
                return Err(Error::Eigen(format!("inverse iteration broke down at {value}")));
            }
            y.iter_mut().for_each(|v| *v /= norm);
        }
        Ok(y)
    }

    /// Thomas algorithm for `(T - shift) x = b`.
    fn solve_shifted(&self, shift: f64, b: &[f64]) -> Vec<f64> {
        let n = self.diag.len();
        let tiny = f64::EPSILON * (1.0 + shift.abs());
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut piv = self.diag[0] - shift;
        if piv.abs() < tiny {
            piv = tiny;
        }
        c[0] = if n > 1 { self.off[0] / piv } else { 0.0 };
        d[0] = b[0] / piv;
        for i in 1..n {
            let e = self.off[i - 1];
            piv = self.diag[i] - shift - e * c[i - 1];
            if piv.abs() < tiny {
                piv = tiny;
            }
            c[i] = if i + 1 < n { self.off[i] / piv } else { 0.0 };
            d[i] = (b[i] - e * d[i - 1]) / piv;
        }
        let mut x = vec![0.0; n];
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
        x
    }
}

/// `(4 f(2n) - f(n)) / 3`
pub fn richardson(coarse: f64, fine: f64) -> f64 {
    (4.0 * fine - coarse) / 3.0
}

/// `ρ(τ) = -∂_τ[sin τ + τ / cos τ] = -(cos τ + (1 + τ tan τ) / cos τ)`
pub fn rho(tau: f64) -> f64 {
    -(tau.cos() + (1.0 + tau * tau.tan()) / tau.cos())
}

pub fn rho_over_cos(tau: f64) -> f64 {
    rho(tau) / tau.cos()
}

/// `∂_τ(ρ/cos) = -(3 tan τ + 2τ tan²τ + τ/cos²τ) / cos²τ`
pub fn rho_over_cos_derivative(tau: f64) -> f64 {
    let (t, c2) = (tau.tan(), tau.cos().powi(2));
    -(3.0 * t + 2.0 * tau * t * t + tau / c2) / c2
}

/// `∂_λ(λ²/cos²(λt)) = 2λ/cos² + 2λ² t sin/cos³`
fn d_lambda_potential(lambda: f64, t: f64) -> f64 {
    let (s, c) = (lambda * t).sin_cos();
    2.0 * lambda / (c * c) + 2.0 * lambda * lambda * t * s / (c * c * c)
}

/// One point of an eigencurve.
#[derive(Clone, Debug, Serialize)]
pub struct EigenCurveSample {
    pub bc: Boundary,
    pub lambda: f64,
    pub ell: u32,
    /// Extrapolated `μ(λ)` or `σ_ℓ(λ)`.
    pub value: f64,
    /// Extrapolated `μ(λ)`, equal to `value` for the Neumann problem.
    pub mu: f64,
    /// Hellmann–Feynman `d value / dλ`, extrapolated.
    pub derivative: f64,
    /// Part of `μ'(λ)` coming from the endpoint `t = 1`,
    /// `½(sin λ + λ/cos λ) U(1)² / ∫U² cos`; zero for the Dirichlet problem.
    pub derivative_boundary_term: f64,
    /// `U''(1) = -μ` or `V'(1)`.
    pub boundary_slope: f64,
    pub gridsize: usize,
    /// Discrete values on `n` and `2n` cells before extrapolation.
    pub raw: [f64; 2],
    /// Eigenfunction on the fine nodes `t_i = i/(2n)`, normalised by
    /// `U(1) = 1` or `V(0) = 1`.
    pub profile: Vec<f64>,
}

impl EigenCurveSample {
    /// Linear interpolation of the profile.
    pub fn profile_at(&self, t: f64) -> f64 {
        let n = self.profile.len() - 1;
        let x = t.clamp(0.0, 1.0) * n as f64;
        let i = (x.floor() as usize).min(n - 1);
        let a = x - i as f64;
        (1.0 - a) * self.profile[i] + a * self.profile[i + 1]
    }

    pub fn fine_problem(&self) -> SLProblem {
        SLProblem { lambda: self.lambda, ell: self.ell, bc: self.bc, n: 2 * self.gridsize }
    }
}

/// Values of one discrete solve at a single grid size.
struct Level {
    value: f64,
    mu: f64,
    derivative: f64,
    boundary_term: f64,
    slope: f64,
    profile: Vec<f64>,
}

fn mu_level(lambda: f64, n: usize) -> Result<Level> {
    let p = SLProblem::new(lambda, 0, Boundary::NeumannNeumann, n)?;
    // the bottom of the spectrum is the constant mode with eigenvalue 0
    let (_, c) = p.eigenpair(0)?;
    let mean = c.iter().sum::<f64>() / c.len() as f64;
    let var = c.iter().map(|v| (v / mean - 1.0).powi(2)).sum::<f64>() / c.len() as f64;
    if !(var < 1e-12) {
        return Err(Error::Eigen(format!("lowest Neumann mode is not constant (variance {var:e})")));
    }
    let (mu, mut u) = p.eigenpair(1)?;
    let u1 = u[n];
    u.iter_mut().for_each(|v| *v /= u1);
    let den = p.integrate(|i, t| u[i] * u[i] * (lambda * t).cos());
    let interior = 0.5 * lambda * p.integrate(|i, t| rho(lambda * t) * u[i] * u[i]) / den;
    let boundary = 0.5 * (lambda.sin() + lambda / lambda.cos()) / den;
    Ok(Level { value: mu, mu, derivative: interior + boundary, boundary_term: boundary, slope: -mu, profile: u })
}

fn sigma_level(ell: u32, lambda: f64, n: usize) -> Result<Level> {
    let m = mu_level(lambda, n)?;
    let p = SLProblem::new(lambda, ell, Boundary::NeumannDirichlet, n)?;
    let (nu, mut v) = p.eigenpair(0)?;
    let v0 = v[0];
    v.iter_mut().for_each(|x| *x /= v0);
    let sigma = nu - m.mu;
    let den = p.integrate(|i, t| v[i] * v[i] * (lambda * t).cos());
    let a = 0.5 * lambda * p.integrate(|i, t| rho(lambda * t) * v[i] * v[i]) / den;
    let l2 = (ell as f64).powi(2);
    let c = l2 * p.integrate(|i, t| d_lambda_potential(lambda, t) * v[i] * v[i] * (lambda * t).cos()) / den;
    // (cos V')' = cos (q - μ - σ) V integrated from 0, where V'(0) = 0
    let flux = p.integrate(|i, t| (lambda * t).cos() * (p.potential(t) - m.mu - sigma) * v[i]);
    Ok(Level {
        value: sigma,
        mu: m.mu,
        derivative: a - m.derivative + c,
        boundary_term: 0.0,
        slope: flux / lambda.cos(),
        profile: v,
    })
}

fn combine(bc: Boundary, lambda: f64, ell: u32, n: usize, coarse: Level, fine: Level) -> EigenCurveSample {
    EigenCurveSample {
        bc,
        lambda,
        ell,
        value: richardson(coarse.value, fine.value),
        mu: richardson(coarse.mu, fine.mu),
        derivative: richardson(coarse.derivative, fine.derivative),
        derivative_boundary_term: richardson(coarse.boundary_term, fine.boundary_term),
        boundary_slope: richardson(coarse.slope, fine.slope),
        gridsize: n,
        raw: [coarse.value, fine.value],
        profile: fine.profile,
    }
}

/// `μ(λ)` with `U_λ(1) = 1` and the Hellmann–Feynman `μ'(λ)`, including
/// the endpoint contribution at `t = 1`.
pub fn solve_mu(lambda: f64, gridsize: usize) -> Result<EigenCurveSample> {
    let coarse = mu_level(lambda, gridsize)?;
    let fine = mu_level(lambda, 2 * gridsize)?;
    Ok(combine(Boundary::NeumannNeumann, lambda, 0, gridsize, coarse, fine))
}

/// `σ_ℓ(λ)` with `V_λ(0) = 1` and its Hellmann–Feynman derivative.
pub fn solve_sigma(ell: u32, lambda: f64, gridsize: usize) -> Result<EigenCurveSample> {
    let coarse = sigma_level(ell, lambda, gridsize)?;
    let fine = sigma_level(ell, lambda, 2 * gridsize)?;
    Ok(combine(Boundary::NeumannDirichlet, lambda, ell, gridsize, coarse, fine))
}

pub fn mu_derivative(lambda: f64, gridsize: usize) -> Result<f64> {
    Ok(solve_mu(lambda, gridsize)?.derivative)
}

pub fn sigma_derivative(ell: u32, lambda: f64, gridsize: usize) -> Result<f64> {
    Ok(solve_sigma(ell, lambda, gridsize)?.derivative)
}

/// Curve samples over a `(ℓ, λ)` product; `ell = None` gives `μ`.
pub fn sweep(ell: Option<u32>, lambdas: &[f64], gridsize: usize, exec: Execution) -> Result<Vec<EigenCurveSample>> {
    exec.map(lambdas, |&l| match ell {
        None => solve_mu(l, gridsize),
        Some(e) => solve_sigma(e, l, gridsize),
    })
    .into_iter()
    .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct RhoReport {
    /// `ρ(0)/cos 0`
    pub at_zero: f64,
    pub at_zero_is_minus_two: bool,
    pub mesh_points: usize,
    /// `∂_τ(ρ/cos) < 0` and consecutive values decrease on the mesh.
    pub monotone: bool,
    pub max_derivative: f64,
    /// `ρ(1)/cos 1`
    pub lower_bound: f64,
    /// `ρ(1)/cos 1 ≤ ρ(λt)/cos(λt) ≤ -2` on the `(λ, t)` mesh.
    pub bounds_hold: bool,
    pub spot_tau: f64,
    pub spot_closed_form: f64,
    pub spot_finite_difference: f64,
}

impl RhoReport {
    pub fn passed(&self) -> bool {
        self.at_zero_is_minus_two
            && self.monotone
            && self.bounds_hold
            && (self.spot_closed_form - self.spot_finite_difference).abs() <= 1e-8
    }
}

pub fn rho_checks() -> RhoReport {
    let n = 1000;
    let taus: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let vals: Vec<f64> = taus.iter().map(|&t| rho_over_cos(t)).collect();
    let ders: Vec<f64> = taus.iter().map(|&t| rho_over_cos_derivative(t)).collect();
    // the closed-form derivative vanishes at τ = 0; strictness is checked inside
    let max_derivative = ders[1..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let monotone = max_derivative < 0.0 && vals.windows(2).all(|w| w[1] < w[0]);
    let lower = rho_over_cos(1.0);
    let mut bounds_hold = true;
    for i in 0..=100 {
        let lambda = i as f64 / 100.0;
        for j in 0..=100 {
            let v = rho_over_cos(lambda * j as f64 / 100.0);
            bounds_hold &= lower <= v && v <= -2.0;
        }
    }
    let tau = 0.5;
    let f = |t: f64| t.sin() + t / t.cos();
    let d = 1e-4;
    let fd = -(f(tau - 2.0 * d) - 8.0 * f(tau - d) + 8.0 * f(tau + d) - f(tau + 2.0 * d)) / (12.0 * d);
    RhoReport {
        at_zero: rho_over_cos(0.0),
        at_zero_is_minus_two: rho_over_cos(0.0) == -2.0,
        mesh_points: n,
        monotone,
        max_derivative,
        lower_bound: lower,
        bounds_hold,
        spot_tau: tau,
        spot_closed_form: rho(tau),
        spot_finite_difference: fd,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LambdaStar {
    pub ell: u32,
    pub lambda0: f64,
    pub lambda_star: f64,
    /// `σ_ℓ(λ*)`
    pub sigma: f64,
    pub sigma_prime: f64,
    pub mu: f64,
    /// `V'_{λ*}(1)`
    pub v_prime_one: f64,
    /// Sign changes of `σ_ℓ` over `0` and a 50-point mesh of `(0, λ0]`.
    pub sign_changes: usize,
    pub gridsize: usize,
}

/// Root of `σ_ℓ` in `(0, λ0)`: bracketed by a 50-point scan, refined by
/// the Illinois variant of regula falsi.
pub fn find_lambda_star(ell: u32, lambda0: f64, gridsize: usize) -> Result<LambdaStar> {
    if !(lambda0 > 0.0 && lambda0 < 1.0) {
        return Err(Error::Domain(format!("lambda0 = {lambda0} must lie in (0, 1)")));
    }
    let sigma = |l: f64| -> Result<f64> { Ok(solve_sigma(ell, l, gridsize)?.value) };
    let mesh: Vec<f64> = (1..=50).map(|k| lambda0 * k as f64 / 50.0).collect();
    let mut vals = vec![sigma(0.0)?];
    let scanned: Result<Vec<f64>> = Execution::default().map(&mesh, |&l| sigma(l)).into_iter().collect();
    vals.extend(scanned?);
    if !(vals[50] > 0.0) {
        return Err(Error::NoSignChange { ell, lambda0 });
    }
    let sign_changes = vals.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count();
    let k = vals.windows(2).position(|w| w[0] < 0.0 && w[1] >= 0.0).expect("σ(0) < 0 < σ(λ0)");
    let lambda_star = illinois(&sigma, if k == 0 { 0.0 } else { mesh[k - 1] }, mesh[k], vals[k], vals[k + 1], 1e-12)?;
    let s = solve_sigma(ell, lambda_star, gridsize)?;
    Ok(LambdaStar {
        ell,
        lambda0,
        lambda_star,
        sigma: s.value,
        sigma_prime: s.derivative,
        mu: s.mu,
        v_prime_one: s.boundary_slope,
        sign_changes,
        gridsize,
    })
}

/// Illinois regula falsi on a bracket with `fa < 0 ≤ fb`; stops when
/// `|f| ≤ ftol` or the bracket collapses.
pub(crate) fn illinois(
    f: &dyn Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    ftol: f64,
) -> Result<f64> {
    if fb == 0.0 {
        return Ok(b);
    }
    let mut side = 0i8;
    let mut best = (b, fb.abs());
    for _ in 0..200 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = f(c)?;
        if fc.abs() < best.1 {
            best = (c, fc.abs());
        }
        if fc.abs() <= ftol || (b - a).abs() <= 4.0 * f64::EPSILON * b.abs() {
            return Ok(c);
        }
        if (fc < 0.0) == (fa < 0.0) {
            a = c;
            fa = fc;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        } else {
            b = c;
            fb = fc;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
    }
    Ok(best.0)
}

/// Least `ℓ ≥ 1` with `σ_ℓ(λ0) > 0` and `σ_ℓ' > 0` on a 20-point mesh of
/// `(0, λ0]`, a numerical stand-in for the sufficient conditions on `ℓ₀`.
pub fn ell_zero(lambda0: f64, gridsize: usize) -> Result<u32> {
    if !(lambda0 > 0.0 && lambda0 < 1.0) {
        return Err(Error::Domain(format!("lambda0 = {lambda0} must lie in (0, 1)")));
    }
    for ell in 1..=ELL_SEARCH_CAP {
        if ell_conditions(ell, lambda0, gridsize)?.all() {
            return Ok(ell);
        }
    }
    Err(Error::Precondition(format!("no ell <= {ELL_SEARCH_CAP} qualifies for lambda0 = {lambda0}")))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct EllConditions {
    /// `σ_ℓ(λ0) > 0`
    pub positive_at_lambda0: bool,
    /// `σ_ℓ' > 0` on the 20-point mesh
    pub increasing: bool,
}

impl EllConditions {
    pub fn all(&self) -> bool {
        self.positive_at_lambda0 && self.increasing
    }
}

pub fn ell_conditions(ell: u32, lambda0: f64, gridsize: usize) -> Result<EllConditions> {
    let positive_at_lambda0 = solve_sigma(ell, lambda0, gridsize)?.value > 0.0;
    let mut increasing = true;
    for k in 1..=20 {
        if !increasing {
            break;
        }
        increasing = solve_sigma(ell, lambda0 * k as f64 / 20.0, gridsize)?.derivative > 0.0;
    }
    Ok(EllConditions { positive_at_lambda0, increasing })
}

/// `Ĉ = max (2ℓ² - σ_ℓ'(λ)/λ)` over the mesh, an empirical stand-in for
/// the unspecified constant of the derivative bound.
pub fn estimate_c_hat(ells: &[u32], lambdas: &[f64], gridsize: usize, exec: Execution) -> Result<f64> {
    let pairs: Vec<(u32, f64)> = ells.iter().flat_map(|&e| lambdas.iter().map(move |&l| (e, l))).collect();
    let vals: Result<Vec<f64>> = exec
        .map(&pairs, |&(e, l)| -> Result<f64> {
            let d = sigma_derivative(e, l, gridsize)?;
            Ok(2.0 * (e as f64).powi(2) - d / l)
        })
        .into_iter()
        .collect();
    Ok(vals?.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

/// Both forms of the lower bound for `σ_ℓ` in terms of `σ_0`.
#[derive(Clone, Debug, Serialize)]
pub struct FirstEstimate {
    pub ell: u32,
    pub lambda: f64,
    pub sigma_ell: f64,
    pub sigma_0: f64,
    pub mu: f64,
    /// `σ_ℓ ≥ σ_0 + (ℓλ)²`
    pub without_mu_holds: bool,
    /// `σ_ℓ ≥ σ_0 - μ + ℓ²λ²`
    pub with_mu_holds: bool,
}

pub fn first_estimate(ell: u32, lambda: f64, gridsize: usize) -> Result<FirstEstimate> {
    let s = solve_sigma(ell, lambda, gridsize)?;
    let s0 = solve_sigma(0, lambda, gridsize)?;
    let l2 = (ell as f64 * lambda).powi(2);
    // slack for the extrapolation error at ℓ = 0 or λ = 0, where equality holds
    let slack = 1e-9 * (1.0 + s.value.abs());
    Ok(FirstEstimate {
        ell,
        lambda,
        sigma_ell: s.value,
        sigma_0: s0.value,
        mu: s.mu,
        without_mu_holds: s.value >= s0.value + l2 - slack,
        with_mu_holds: s.value >= s0.value - s.mu + l2 - slack,
    })
}

/// `σ_k(λ)` for `k = 0..=kmax`, used for mode separation at `λ*`.
pub fn mode_values(kmax: u32, lambda: f64, gridsize: usize, exec: Execution) -> Result<Vec<f64>> {
    let ks: Vec<u32> = (0..=kmax).collect();
    exec.map(&ks, |&k| solve_sigma(k, lambda, gridsize).map(|s| s.value)).into_iter().collect()
}
