//! Radial collocation on `[0, 1]`.
//!
//! Every function handled here is even in `r`, hence a smooth function of
//! `ρ = r²`. Nodes are Chebyshev–Gauss–Lobatto points in `ρ`, so `r = 0`
//! needs no special treatment and `N = 1` is not a special case.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

/// Weight of the radial inner product.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RadialWeight {
    /// `r^{N-1}`, the polar Jacobian of `ℝ^N`.
    Power(u32),
    /// `cos(λ t)`, the area element of the sphere near the equator.
    Cosine(f64),
}

impl RadialWeight {
    pub fn eval(self, r: f64) -> f64 {
        match self {
            RadialWeight::Power(n) => r.powi(n as i32 - 1),
            RadialWeight::Cosine(l) => (l * r).cos(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RadialGrid {
    pub k: usize,
    /// Dimension used by the radial Laplacian.
    pub n_dim: u32,
    pub weight: RadialWeight,
    pub rho: DVector<f64>,
    pub r: DVector<f64>,
    /// `d/dρ`
    pub d_rho: DMatrix<f64>,
    /// `d²/dρ²`
    pub d_rhorho: DMatrix<f64>,
    /// `D_t = r ∂_r = 2ρ d/dρ`
    pub dt: DMatrix<f64>,
    /// `D_t D_t`
    pub dd: DMatrix<f64>,
    /// `∂_r = 2 r d/dρ`
    pub dr: DMatrix<f64>,
    /// `∂_rr = 2 d/dρ + 4ρ d²/dρ²`
    pub drr: DMatrix<f64>,
    /// `r² ∂_rr`
    pub r2drr: DMatrix<f64>,
    /// `Δ_t = ∂_rr + (N-1)/r ∂_r = 4ρ d²/dρ² + 2N d/dρ`
    pub lap: DMatrix<f64>,
    /// `∫_0^1 f(r) w(r) dr ≈ Σ_i quad[i] f(r_i)`
    pub quad: DVector<f64>,
    bary: Vec<f64>,
}

impl RadialGrid {
    pub fn new(k: usize, n_dim: u32) -> Self {
        Self::with_weight(k, n_dim, RadialWeight::Power(n_dim))
    }

    pub fn with_weight(k: usize, n_dim: u32, weight: RadialWeight) -> Self {
        assert!(k >= 2, "radial grid needs at least 3 nodes");
        let kf = k as f64;
        let theta: Vec<f64> = (0..=k).map(|i| PI * i as f64 / kf).collect();
        let rho = DVector::from_iterator(k + 1, theta.iter().map(|t| (0.5 * t).sin().powi(2)));
        let r = DVector::from_iterator(k + 1, theta.iter().map(|t| (0.5 * t).sin()));

        // Chebyshev differentiation in x = cos θ, then d/dρ = -2 d/dx.
        let c = |i: usize| -> f64 {
            let s = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
            if i == 0 || i == k {
                2.0 * s
            } else {
                s
            }
        };
        let mut d_rho = DMatrix::<f64>::zeros(k + 1, k + 1);
        for i in 0..=k {
            for j in 0..=k {
                if i != j {
                    // x_i - x_j without cancellation
                    let dx = -2.0 * (0.5 * (theta[i] + theta[j])).sin() * (0.5 * (theta[i] - theta[j])).sin();
                    d_rho[(i, j)] = -2.0 * c(i) / (c(j) * dx);
                }
            }
        }
        negative_sum_diagonal(&mut d_rho);
        let mut d_rhorho = &d_rho * &d_rho;
        negative_sum_diagonal(&mut d_rhorho);

        let rho_diag = DMatrix::from_diagonal(&rho);
        let r_diag = DMatrix::from_diagonal(&r);
        let dt = 2.0 * &rho_diag * &d_rho;
        let drr = 2.0 * &d_rho + 4.0 * &rho_diag * &d_rhorho;
        let r2drr = &rho_diag * &drr;
        let dd = &dt + &r2drr;
        let dr = 2.0 * &r_diag * &d_rho;
        let lap = 4.0 * &rho_diag * &d_rhorho + 2.0 * n_dim as f64 * &d_rho;

        let bary: Vec<f64> = (0..=k)
            .map(|i| {
                let s = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
                if i == 0 || i == k {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();

        let mut grid = RadialGrid {
            k,
            n_dim,
            weight,
            rho,
            r,
            d_rho,
            d_rhorho,
            dt,
            dd,
            dr,
            drr,
            r2drr,
            lap,
            quad: DVector::zeros(k + 1),
            bary,
        };
        grid.quad = grid.quadrature_weights();
        grid
    }

    pub fn len(&self) -> usize {
        self.k + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Values of the Lagrange basis `ℓ_i(ρ)` at `ρ`, barycentric form.
    pub fn lagrange_row(&self, rho: f64) -> DVector<f64> {
        let mut out = DVector::zeros(self.k + 1);
        for i in 0..=self.k {
            if rho == self.rho[i] {
                out[i] = 1.0;
                return out;
            }
        }
        let mut den = 0.0;
        for i in 0..=self.k {
            let t = self.bary[i] / (rho - self.rho[i]);
            out[i] = t;
            den += t;
        }
        out / den
    }

    /// Interpolate nodal values to radius `r`.
    pub fn interpolate(&self, values: &[f64], r: f64) -> f64 {
        let row = self.lagrange_row(r * r);
        values.iter().zip(row.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(self.quad.iter()).map(|(a, b)| a * b).sum()
    }

    fn quadrature_weights(&self) -> DVector<f64> {
        // Gauss-Legendre in r: ℓ_i(r²) r^{N-1} is a polynomial of degree
        // 2K + N - 1, integrated exactly with K + N/2 + 1 points; the
        // cosine weight is entire and a few dozen extra points suffice.
        let n_gl = match self.weight {
            RadialWeight::Power(n) => self.k + n as usize / 2 + 2,
            RadialWeight::Cosine(_) => self.k + 40,
        };
        let (xs, ws) = gauss_legendre(n_gl);
        let mut q = DVector::zeros(self.k + 1);
        for (x, w) in xs.iter().zip(ws.iter()) {
            let r = 0.5 * (x + 1.0);
            let row = self.lagrange_row(r * r);
            q += row * (0.5 * w * self.weight.eval(r));
        }
        q
    }
}

fn negative_sum_diagonal(d: &mut DMatrix<f64>) {
    for i in 0..d.nrows() {
        let mut s = 0.0;
        for j in 0..d.ncols() {
            if i != j {
                s += d[(i, j)];
            }
        }
        d[(i, i)] = -s;
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        xs[i] = -x;
        xs[n - 1 - i] = x;
        ws[i] = w;
        ws[n - 1 - i] = w;
    }
    (xs, ws)
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
