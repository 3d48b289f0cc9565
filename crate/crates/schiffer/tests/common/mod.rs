#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schiffer::field_discretization::{Field2D, Grid};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Smooth random field: in mode `l < modes`, a random polynomial of degree
/// `deg` in `rho = r^2`, multiplied by `(1 - rho)^vanish`, damped in `l`.
pub fn smooth_field(grid: &Grid, rng: &mut ChaCha8Rng, modes: usize, deg: usize, vanish: i32) -> Field2D {
    let mut c = DMatrix::zeros(grid.l() + 1, grid.k() + 1);
    for l in 0..modes.min(grid.l() + 1) {
        let a: Vec<f64> = (0..=deg).map(|_| rng.random_range(-1.0..1.0)).collect();
        let damp = 1.0 / (1.0 + l as f64).powi(2);
        for i in 0..=grid.k() {
            let rho = grid.radial.rho[i];
            let p: f64 = a.iter().enumerate().map(|(p, c)| c * rho.powi(p as i32)).sum();
            c[(l, i)] = damp * (1.0 - rho).powi(vanish) * p;
        }
    }
    let mut f = Field2D::from_coeffs(grid, c);
    if vanish >= 1 {
        f = f.enforce_dirichlet();
    }
    f
}

/// RK4 for `u'' = λ tan(λt) u' - (ν - p(t)) u`, `u(0) = 1`, `u'(0) = 0`;
/// returns `(u(1), u'(1))`.
pub fn shoot(lambda: f64, nu: f64, p: &dyn Fn(f64) -> f64, steps: usize) -> (f64, f64) {
    let f = |t: f64, y: [f64; 2]| [y[1], lambda * (lambda * t).tan() * y[1] - (nu - p(t)) * y[0]];
    let h = 1.0 / steps as f64;
    let mut y = [1.0, 0.0];
    for i in 0..steps {
        let t = i as f64 * h;
        let k1 = f(t, y);
        let k2 = f(t + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = f(t + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = f(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for j in 0..2 {
            y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    (y[0], y[1])
}

/// First root above `start` of `g`, by a scan with step `dx` and bisection.
fn first_root(g: &dyn Fn(f64) -> f64, start: f64, dx: f64) -> f64 {
    let (mut a, mut ga) = (start, g(start));
    loop {
        let b = a + dx;
        let gb = g(b);
        if (ga < 0.0) != (gb < 0.0) {
            let (mut lo, mut hi) = (a, b);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if (g(mid) < 0.0) == (ga < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return 0.5 * (lo + hi);
        }
        a = b;
        ga = gb;
    }
}

/// `μ(λ)` by shooting on `u'(1) = 0`.
pub fn shoot_mu(lambda: f64) -> f64 {
    first_root(&|nu| shoot(lambda, nu, &|_| 0.0, 2000).1, 0.5, 0.5)
}

/// `σ_ℓ(λ)` by shooting on `v(1) = 0`.
pub fn shoot_sigma(ell: u32, lambda: f64) -> f64 {
    let p = move |t: f64| (ell as f64 * lambda / (lambda * t).cos()).powi(2);
    let nu = first_root(&|nu| shoot(lambda, nu, &p, 2000).0, p(0.0), 0.25);
    nu - shoot_mu(lambda)
}
