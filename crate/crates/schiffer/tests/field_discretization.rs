mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use schiffer::cylinder_model::CylinderModel;
use schiffer::field_discretization::{
    apply_dt, apply_laplace_t, apply_m1, apply_pullback, compute_h_u, CylinderOperator, DomainProfile, Field2D, Grid,
    G_of, RadialGrid,
};
use schiffer::Execution;

fn grid(n: u32) -> Grid {
    Grid::cylinder(n, 48, 16, 16)
}

fn radial_field(g: &Grid, f: impl Fn(f64) -> f64) -> Field2D {
    Field2D::radial_mode(g, 0, f)
}

#[test]
fn radial_operators_on_monomials() {
    for n in 1..=5 {
        let rg = RadialGrid::new(48, n);
        let r2 = rg.r.map(|r| r * r);
        let r4 = rg.r.map(|r| r.powi(4));
        assert!((&rg.dt * &r2 - 2.0 * &r2).amax() < 1e-10);
        // ∂_r is exact on even monomials; odd powers of r are not
        // polynomials in r² and never occur for even radial fields.
        assert!((&rg.dr * &r2 - rg.r.map(|r| 2.0 * r)).amax() < 1e-10);
        assert!((&rg.dr * &r4 - rg.r.map(|r| 4.0 * r.powi(3))).amax() < 1e-10);
        assert!((&rg.drr * &r4 - rg.r.map(|r| 12.0 * r * r)).amax() < 1e-9);
        // second ρ-derivative roundoff grows like K⁴ ε
        assert!((&rg.lap * &r2).add_scalar(-2.0 * n as f64).amax() < 1e-8);
        let one = rg.r.map(|_| 1.0);
        assert!((&rg.lap * &one).amax() < 1e-8);
        assert!((&rg.dt * &one).amax() < 1e-10);
    }
}

#[test]
fn quadrature_exact_on_even_polynomials() {
    for n in 1..=5 {
        let rg = RadialGrid::new(48, n);
        for p in 0..=46 {
            let vals: Vec<f64> = rg.r.iter().map(|r| r.powi(2 * p)).collect();
            let want = 1.0 / (2.0 * p as f64 + n as f64);
            assert!((rg.integrate(&vals) - want).abs() < 1e-10, "N={n} p={p}");
        }
    }
}

#[test]
fn dt_and_laplacian_on_profiles() {
    for n in 1..=3 {
        for m in 1..=2 {
            let g = grid(n);
            let c = CylinderModel::new(n, m).unwrap();
            let u = radial_field(&g, |r| c.u(r));
            let du = apply_dt(&g, &u).unwrap();
            let lap = apply_laplace_t(&g, &u).unwrap();
            for i in 0..=48 {
                let r = g.radial.r[i];
                assert!((du.coeffs[(0, i)] - c.g(r)).abs() < 1e-9, "D_t U_m N={n} m={m}");
                let j2 = c.j_m * c.j_m;
                assert!((lap.coeffs[(0, i)] + j2 * c.u(r)).abs() < 1e-9 * j2 * j2, "Δ U_m");
            }
        }
    }
    let g = grid(2);
    let r2 = radial_field(&g, |r| r * r);
    assert!((apply_dt(&g, &r2).unwrap().coeffs.row(0) - 2.0 * r2.coeffs.row(0)).amax() < 1e-10);
    assert!((apply_laplace_t(&g, &r2).unwrap().coeffs.row(0).add_scalar(-4.0)).amax() < 1e-8);
    let one = radial_field(&g, |_| 1.0);
    assert!(apply_dt(&g, &one).unwrap().max_abs() < 1e-10);
    assert!(apply_laplace_t(&g, &one).unwrap().max_abs() < 1e-8);
}

#[test]
fn grid_mismatch_rejected() {
    let g = grid(2);
    let other = Grid::cylinder(2, 24, 8, 8);
    assert!(apply_dt(&g, &other.zeros()).is_err());
}

#[test]
fn pullback_annihilates_trivial_solutions() {
    for n in 1..=3 {
        let g = grid(n);
        let c = CylinderModel::new(n, 1).unwrap();
        let lambda = 0.7 * c.lambda_m;
        let u_m = radial_field(&g, |r| c.u(r));
        let p = apply_pullback(&g, &c, lambda, &DomainProfile::zero(&g), &u_m).unwrap();
        assert!(p.max_abs() < 1e-8, "h = 0: {}", p.max_abs());
        for cst in [-0.2, 0.15] {
            let h = DomainProfile::constant(&g, cst);
            let u = radial_field(&g, |r| c.u(r / (1.0 + cst)));
            let p = apply_pullback(&g, &c, lambda, &h, &u).unwrap();
            assert!(p.max_abs() < 1e-8, "h = {cst}: {}", p.max_abs());
        }
        let z = apply_pullback(&g, &c, lambda, &DomainProfile::constant(&g, 0.3), &g.zeros()).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }
}

#[test]
fn pullback_matches_physical_laplacian() {
    // For w(t,x) = f(|t| H(x), x) on {|t| H < 1}, the pulled-back operator
    // applied to f must equal Δ_t w + λ w_xx + j² w evaluated at t = τ/H.
    // Check with f(τ, x) = τ² cos x + τ⁴ for N = 2 by direct differentiation.
    let g = grid(2);
    let c = CylinderModel::new(2, 1).unwrap();
    let lambda = 3.0;
    let mut h = DomainProfile::zero(&g);
    h.coefficients[1] = 0.2;
    h.coefficients[2] = -0.05;
    let f = Field2D::from_fn(&g, |r, x| r * r * x.cos() + r.powi(4));
    let p = apply_pullback(&g, &c, lambda, &h, &f).unwrap();
    let j2 = c.j_m * c.j_m;
    for &tau in &[0.0, 0.3, 0.8] {
        for &x in &[0.0, 0.4, 1.9] {
            let hh = h.eval(&g, x).0;
            let hh = 1.0 + hh;
            // w(t,x) = (tH)² cos x + (tH)⁴ with t = tau/H
            let t = tau / hh;
            let w = |t: f64, x: f64| -> f64 {
                let hx = 1.0 + h.eval(&g, x).0;
                (t * hx).powi(2) * x.cos() + (t * hx).powi(4)
            };
            // radial Laplacian in N = 2 of s ↦ w(s, x): w_ss + w_s / s
            let a2 = hh * hh;
            let lap = 4.0 * a2 * x.cos() + 16.0 * a2 * a2 * t * t;
            let e = 1e-3;
            let wxx = (-w(t, x + 2.0 * e) + 16.0 * w(t, x + e) - 30.0 * w(t, x) + 16.0 * w(t, x - e)
                - w(t, x - 2.0 * e))
                / (12.0 * e * e);
            let want = lap + lambda * wxx + j2 * w(t, x);
            let got = p.eval(&g, tau, x);
            assert!((got - want).abs() < 1e-6 * want.abs().max(1.0), "tau={tau} x={x}: {got} vs {want}");
        }
    }
}

#[test]
fn h_u_examples() {
    let g = grid(2);
    let c = CylinderModel::new(2, 1).unwrap();
    let z = compute_h_u(&g, &c, &g.zeros().with_dirichlet()).unwrap();
    assert!(z.coefficients.iter().all(|v| *v == 0.0));
    assert!(compute_h_u(&g, &c, &g.zeros()).is_err());

    for n in 1..=3 {
        let g = grid(n);
        let c = CylinderModel::new(n, 1).unwrap();
        let op = CylinderOperator::new(&g, &c).unwrap();
        let s = 0.01;
        let h = compute_h_u(&g, &c, &op.kernel_field().scaled(s)).unwrap();
        // D_t φ₁(1) = j_dir I'_{N/2-1}(j_dir) = -j_dir² I_{N/2}(j_dir)
        let want = s * c.c_m() * c.j_dir * c.dphi1(1.0) / c.j_dir;
        assert!((h.coefficients[1] - want).abs() < 1e-10 * want.abs().max(1e-3));
        assert!((want - s * c.gamma).abs() < 1e-12);
        assert!(h.coefficients.iter().enumerate().all(|(l, v)| l == 1 || v.abs() < 1e-14));
    }
    // ∂_r u(1) = 0 gives h_u = 0
    let u = Field2D::radial_mode(&g, 2, |r| (1.0 - r * r).powi(2)).with_dirichlet();
    let h = compute_h_u(&g, &c, &u).unwrap();
    assert!(h.coefficients.iter().all(|v| v.abs() < 1e-10));
}

#[test]
fn m1_examples() {
    let g = grid(1);
    let c = CylinderModel::new(1, 2).unwrap();
    let z = apply_m1(&g, &c, &g.zeros().with_dirichlet()).unwrap();
    assert_eq!(z.max_abs(), 0.0);
    let u = Field2D::radial_mode(&g, 1, |r| c.g(r)).enforce_dirichlet();
    let h = compute_h_u(&g, &c, &u).unwrap();
    assert!((h.coefficients[1] - 1.0).abs() < 1e-9);
    let w = apply_m1(&g, &c, &u).unwrap();
    assert!(w.max_abs() < 1e-9);
}

#[test]
fn dt_commutes_with_dx_in_coefficient_space() {
    let g = grid(3);
    let mut r = common::rng(3);
    let u = common::smooth_field(&g, &mut r, 8, 6, 1);
    let a = schiffer::field_discretization::cylinder::apply_dx_sine(&g, &apply_dt(&g, &u).unwrap());
    let b = apply_dt(&g, &schiffer::field_discretization::cylinder::apply_dx_sine(&g, &u)).unwrap();
    assert!((a.coeffs - b.coeffs).amax() < 1e-13);
}

#[test]
fn g_vanishes_on_trivial_branch() {
    for n in 1..=3 {
        for m in 1..=2 {
            let g = grid(n);
            let c = CylinderModel::new(n, m).unwrap();
            for lambda in [0.5 * c.lambda_m, c.lambda_m, 2.0 * c.lambda_m] {
                let r = G_of(&g, &c, lambda, &g.zeros().with_dirichlet()).unwrap();
                assert!(r.max_abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn g_is_quadratic_along_kernel() {
    let g = grid(2);
    let c = CylinderModel::new(2, 1).unwrap();
    let op = CylinderOperator::new(&g, &c).unwrap();
    let v = op.kernel_field();
    let norms: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|e| G_of(&g, &c, c.lambda_m, &v.scaled(*e)).unwrap().interior_max())
        .collect();
    for w in norms.windows(2) {
        let ratio = w[0] / w[1];
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }
}

#[test]
fn directional_derivative_off_kernel() {
    let g = grid(2);
    let c = CylinderModel::new(2, 1).unwrap();
    let op = CylinderOperator::new(&g, &c).unwrap();
    let w = Field2D::radial_mode(&g, 2, |r| 1.0 - r * r).enforce_dirichlet();
    let lw = op.linearized(c.lambda_m).apply(&g, &w).interior_max();
    assert!(lw > 1.0);
    let mut prev = f64::INFINITY;
    for e in [1e-3, 1e-4, 1e-5] {
        let q = G_of(&g, &c, c.lambda_m, &w.scaled(e)).unwrap().interior_max() / e;
        let err = (q - lw).abs();
        assert!(err < prev);
        prev = err;
    }
    assert!(prev / lw < 1e-4);
}

#[test]
fn linearization_consistency() {
    let mut r = common::rng(11);
    for n in [1, 2] {
        let g = grid(n);
        let c = CylinderModel::new(n, 1).unwrap();
        let op = CylinderOperator::new(&g, &c).unwrap();
        let lambda = c.lambda_m * 1.1;
        let lin = op.linearized(lambda);
        for _ in 0..5 {
            let v = common::smooth_field(&g, &mut r, 6, 5, 1);
            let lv = lin.apply(&g, &v);
            let errs: Vec<f64> = [1e-3, 5e-4]
                .iter()
                .map(|&e| {
                    let p = G_of(&g, &c, lambda, &v.scaled(e)).unwrap();
                    let m = G_of(&g, &c, lambda, &v.scaled(-e)).unwrap();
                    let fd = (&p.coeffs - &m.coeffs) / (2.0 * e);
                    (fd - &lv.coeffs).columns(0, 48).amax()
                })
                .collect();
            // second-order: halving epsilon divides the error by about 4
            assert!(errs[0] < 1e-3 * lv.interior_max(), "{errs:?}");
            assert!(errs[1] < 0.3 * errs[0], "{errs:?}");
        }
    }
}

#[test]
fn assembled_matrix_matches_application() {
    let g = Grid::cylinder(2, 12, 5, 7);
    let c = CylinderModel::new(2, 1).unwrap();
    let op = CylinderOperator::new(&g, &c).unwrap();
    let mut h = DomainProfile::zero(&g);
    h.coefficients[1] = 0.1;
    h.coefficients[3] = 0.02;
    let p = op.pullback_operator(2.0, &h).unwrap();
    let mut r = common::rng(5);
    let u = common::smooth_field(&g, &mut r, 6, 4, 0);
    let flat = schiffer::field_discretization::operator::flatten(&u.coeffs);
    let a = p.matrix(&g, Execution::Sequential) * flat;
    let b = schiffer::field_discretization::operator::flatten(&p.apply(&g, &u).coeffs);
    assert!((a - b).amax() < 1e-10);
    let par = p.matrix(&g, Execution::default());
    assert_eq!(par, p.matrix(&g, Execution::Sequential));
}

#[test]
fn json_roundtrip() {
    let g = Grid::cylinder(2, 8, 3, 3);
    let mut r = common::rng(1);
    let u = common::smooth_field(&g, &mut r, 4, 3, 1);
    let s = serde_json::to_string(&u).unwrap();
    let v: serde_json::Value = serde_json::from_str(&s).unwrap();
    assert_eq!(v["K"], 8);
    assert_eq!(v["L"], 3);
    assert_eq!(v["N"], 2);
    assert_eq!(v["coefficients"].as_array().unwrap().len(), 36);
    assert_eq!(v["coefficients"][9].as_f64().unwrap(), u.coeffs[(1, 0)]);
    let back: Field2D = serde_json::from_str(&s).unwrap();
    assert_eq!(back, u);
    let p = DomainProfile { coefficients: vec![0.5, 0.25] };
    let s = serde_json::to_string(&p).unwrap();
    assert_eq!(s, r#"{"coefficients":[0.5,0.25]}"#);
}

#[test]
fn inner_product_matches_continuous_integral() {
    // ⟨cos x φ, cos x φ⟩ = π ∫ φ² r^{N-1} dr; check against a fine
    // midpoint rule.
    let g = grid(2);
    let c = CylinderModel::new(2, 1).unwrap();
    let op = CylinderOperator::new(&g, &c).unwrap();
    let v = op.kernel_field();
    let n = 20000;
    let fine: f64 = (0..n)
        .map(|i| {
            let r = (i as f64 + 0.5) / n as f64;
            c.phi1(r).powi(2) * r
        })
        .sum::<f64>()
        / n as f64;
    assert!((g.inner(&v, &v) - PI * fine).abs() < 1e-8);
}

fn profile_strategy(l: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.1f64..0.1, l + 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn m1_lands_in_dirichlet_neumann_space(seed in 0u64..10_000, n in 1u32..=3, m in 1u32..=2) {
        let g = Grid::cylinder(n, 32, 8, 8);
        let c = CylinderModel::new(n, m).unwrap();
        let mut r = common::rng(seed);
        let u = common::smooth_field(&g, &mut r, 9, 8, 1);
        let w = apply_m1(&g, &c, &u).unwrap();
        prop_assert!(w.neumann_defect(&g) <= 1e-8);
        prop_assert!(w.boundary_max() <= 1e-12);
    }

    #[test]
    fn m_inverts_n(seed in 0u64..10_000, h in profile_strategy(8)) {
        let g = Grid::cylinder(2, 32, 8, 8);
        let c = CylinderModel::new(2, 1).unwrap();
        let mut r = common::rng(seed);
        // w in X^{DN}: (1 - rho)^2 times a polynomial
        let w = common::smooth_field(&g, &mut r, 9, 6, 2);
        let gvec = g.radial.r.map(|r| c.g(r));
        let mut u = w.coeffs.clone();
        for l in 0..=8 {
            for i in 0..=32 {
                u[(l, i)] += gvec[i] * h[l];
            }
        }
        let mut uf = Field2D::from_coeffs(&g, u).enforce_dirichlet();
        uf.dirichlet = true;
        let hu = compute_h_u(&g, &c, &uf).unwrap();
        let m1 = apply_m1(&g, &c, &uf).unwrap();
        for (a, b) in hu.coefficients.iter().zip(&h) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        prop_assert!((m1.coeffs - w.coeffs).amax() < 1e-10);
    }
}
