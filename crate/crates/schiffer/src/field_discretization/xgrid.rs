//! Even, periodic dependence on `x` stored as cosine coefficients of
//! `cos(q k x)`, `k = 0..=L`, with collocation values on the half period
//! `x_j = π j / (q M)`, `j = 0..=M`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

/// Which `x`-operator maps coefficients to collocation values.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XOp {
    /// point values
    Value,
    /// values of `∂_x`
    Dx,
    /// values of `∂_xx`
    Dxx,
}

#[derive(Clone, Debug)]
pub struct XGrid {
    pub l: usize,
    pub m: usize,
    /// base frequency
    pub q: f64,
    pub x: Vec<f64>,
    pub c2v: DMatrix<f64>,
    pub c2v_x: DMatrix<f64>,
    pub c2v_xx: DMatrix<f64>,
    /// discrete cosine transform (type I), projected onto `k ≤ L`
    pub v2c: DMatrix<f64>,
}

impl XGrid {
    pub fn new(l: usize, m: usize, q: f64) -> Self {
        assert!(m >= l && m >= 1, "collocation count M must be at least L");
        let mf = m as f64;
        let x: Vec<f64> = (0..=m).map(|j| PI * j as f64 / (q * mf)).collect();
        let mut c2v = DMatrix::zeros(m + 1, l + 1);
        let mut c2v_x = DMatrix::zeros(m + 1, l + 1);
        let mut c2v_xx = DMatrix::zeros(m + 1, l + 1);
        for j in 0..=m {
            for k in 0..=l {
                // angles reduced exactly: q k x_j = π j k / M
                let a = PI * ((j * k) % (2 * m)) as f64 / mf;
                let w = q * k as f64;
                c2v[(j, k)] = a.cos();
                c2v_x[(j, k)] = -w * a.sin();
                c2v_xx[(j, k)] = -w * w * a.cos();
            }
        }
        let mut v2c = DMatrix::zeros(l + 1, m + 1);
        for k in 0..=l {
            let eps = if k == 0 || k == m { 1.0 } else { 2.0 };
            for j in 0..=m {
                let wj = if j == 0 || j == m { 0.5 } else { 1.0 };
                v2c[(k, j)] = eps / mf * wj * c2v[(j, k)];
            }
        }
        XGrid { l, m, q, x, c2v, c2v_x, c2v_xx, v2c }
    }

    pub fn op(&self, op: XOp) -> &DMatrix<f64> {
        match op {
            XOp::Value => &self.c2v,
            XOp::Dx => &self.c2v_x,
            XOp::Dxx => &self.c2v_xx,
        }
    }

    /// Evaluate a cosine series and its first two derivatives at `x`.
    pub fn eval(&self, coeffs: &[f64], x: f64) -> (f64, f64, f64) {
        let mut v = (0.0, 0.0, 0.0);
        for (k, a) in coeffs.iter().enumerate() {
            let w = self.q * k as f64;
            let (s, c) = (w * x).sin_cos();
            v.0 += a * c;
            v.1 -= a * w * s;
            v.2 -= a * w * w * c;
        }
        v
    }

    /// Cosine weight `c_k = ∫_0^{2π} cos²(q k x) dx` for the discrete L² product.
    pub fn mode_weight(&self, k: usize) -> f64 {
        if k == 0 {
            2.0 * PI
        } else {
            PI
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transform_roundtrip() {
        for (l, m) in [(8, 8), (6, 10)] {
            let g = XGrid::new(l, m, 1.0);
            let id = &g.v2c * &g.c2v;
            assert!((id - DMatrix::<f64>::identity(l + 1, l + 1)).amax() < 1e-13);
        }
    }

    #[test]
    fn base_frequency_scales_derivatives() {
        let g = XGrid::new(4, 4, 3.0);
        let mut a = vec![0.0; 5];
        a[1] = 1.0;
        let (v, d, dd) = g.eval(&a, 0.2);
        assert!((v - (0.6f64).cos()).abs() < 1e-15);
        assert!((d + 3.0 * (0.6f64).sin()).abs() < 1e-15);
        assert!((dd + 9.0 * (0.6f64).cos()).abs() < 1e-14);
    }
}
