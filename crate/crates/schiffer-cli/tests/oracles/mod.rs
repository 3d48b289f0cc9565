//! Reference computations that share no code with the library.

/// `J_ν(r) / (r/2)^ν` up to the positive factor `1/Γ(ν+1)`:
/// `Σ (-1)^k (r/2)^{2k} / (k! (ν+1)_k)`. Same zeros as `J_ν` for `r > 0`.
pub fn j_series(nu: f64, r: f64) -> f64 {
    let q = -(r * r) / 4.0;
    let (mut term, mut sum) = (1.0, 1.0);
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * (nu + k));
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && k > r {
            break;
        }
    }
    sum
}

fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First `count` positive zeros of `J_ν` by a scan with step 0.05 and bisection.
pub fn j_zeros(nu: f64, count: usize) -> Vec<f64> {
    let f = |r: f64| j_series(nu, r);
    let mut out = Vec::new();
    let mut a = 1e-3;
    while out.len() < count {
        let b = a + 0.05;
        if (f(a) < 0.0) != (f(b) < 0.0) {
            out.push(bisect(&f, a, b));
        }
        a = b;
    }
    out
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

fn first_root(g: &dyn Fn(f64) -> f64, start: f64, dx: f64) -> f64 {
    let mut a = start;
    loop {
        let b = a + dx;
        if (g(a) < 0.0) != (g(b) < 0.0) {
            return bisect(g, a, b);
        }
        a = b;
    }
}

/// `μ(λ)`: least positive `ν` with `u'(1) = 0`.
pub fn shoot_mu(lambda: f64) -> f64 {
    first_root(&|nu| shoot(lambda, nu, &|_| 0.0, 2000).1, 0.5, 0.5)
}

/// `σ_ℓ(λ)`: least `ν` with `v(1) = 0`, minus `μ(λ)`.
pub fn shoot_sigma(ell: u32, lambda: f64) -> f64 {
    let p = move |t: f64| (ell as f64 * lambda / (lambda * t).cos()).powi(2);
    let nu = first_root(&|nu| shoot(lambda, nu, &p, 2000).0, p(0.0), 0.25);
    nu - shoot_mu(lambda)
}
