use nalgebra::{DMatrix, DVector};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::radial::{RadialGrid, RadialWeight};
use super::xgrid::XGrid;
use crate::error::{Error, Result};

/// Tensor grid on `[0,1]_r × [0, π/q]_x`.
#[derive(Clone, Debug)]
pub struct Grid {
    pub radial: RadialGrid,
    pub x: XGrid,
}

impl Grid {
    /// Cylinder grid: weight `r^{N-1}`, base frequency 1.
    pub fn cylinder(n_dim: u32, k: usize, l: usize, m: usize) -> Self {
        Grid { radial: RadialGrid::new(k, n_dim), x: XGrid::new(l, m, 1.0) }
    }

    /// Sphere grid: `t ∈ [0,1]`, weight `cos(λ t)`, base frequency `ell`.
    pub fn sphere(lambda: f64, ell: u32, k: usize, l: usize, m: usize) -> Self {
        Grid {
            radial: RadialGrid::with_weight(k, 1, RadialWeight::Cosine(lambda)),
            x: XGrid::new(l, m, ell as f64),
        }
    }

    pub fn k(&self) -> usize {
        self.radial.k
    }

    pub fn l(&self) -> usize {
        self.x.l
    }

    pub fn zeros(&self) -> Field2D {
        Field2D::from_coeffs(self, DMatrix::zeros(self.l() + 1, self.k() + 1))
    }

    /// Discrete L² product `Σ_ℓ c_ℓ Σ_i w_i u_{ℓ,i} v_{ℓ,i}`.
    pub fn inner(&self, a: &Field2D, b: &Field2D) -> f64 {
        let mut s = 0.0;
        for l in 0..=self.l() {
            let mut t = 0.0;
            for i in 0..=self.k() {
                t += self.radial.quad[i] * a.coeffs[(l, i)] * b.coeffs[(l, i)];
            }
            s += self.x.mode_weight(l) * t;
        }
        s
    }

    fn check(&self, f: &Field2D) -> Result<()> {
        if f.coeffs.nrows() != self.l() + 1 || f.coeffs.ncols() != self.k() + 1 {
            return Err(Error::GridMismatch(format!(
                "field is {}x{}, grid expects {}x{}",
                f.coeffs.nrows(),
                f.coeffs.ncols(),
                self.l() + 1,
                self.k() + 1
            )));
        }
        Ok(())
    }

    pub fn ensure(&self, f: &Field2D) -> Result<()> {
        self.check(f)
    }
}

/// `u(t,x) = Σ_ℓ u_ℓ(|t|) cos(q ℓ x)`; row `ℓ` of `coeffs` holds the radial
/// nodal values of mode `ℓ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2D {
    pub k: usize,
    pub l: usize,
    pub n: u32,
    pub coeffs: DMatrix<f64>,
    pub dirichlet: bool,
    pub neumann: bool,
}

impl Field2D {
    pub fn from_coeffs(grid: &Grid, coeffs: DMatrix<f64>) -> Self {
        Field2D { k: grid.k(), l: grid.l(), n: grid.radial.n_dim, coeffs, dirichlet: false, neumann: false }
    }

    /// Single-mode field `f(r) cos(q ℓ x)` sampled from a radial function.
    pub fn radial_mode(grid: &Grid, mode: usize, f: impl Fn(f64) -> f64) -> Self {
        let mut c = DMatrix::zeros(grid.l() + 1, grid.k() + 1);
        for i in 0..=grid.k() {
            c[(mode, i)] = f(grid.radial.r[i]);
        }
        Self::from_coeffs(grid, c)
    }

    /// Field sampled from `f(r, x)` at the collocation points.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut v = DMatrix::zeros(grid.x.m + 1, grid.k() + 1);
        for j in 0..=grid.x.m {
            for i in 0..=grid.k() {
                v[(j, i)] = f(grid.radial.r[i], grid.x.x[j]);
            }
        }
        Self::from_coeffs(grid, &grid.x.v2c * v)
    }

    pub fn with_dirichlet(mut self) -> Self {
        self.dirichlet = true;
        self
    }

    /// Set the Dirichlet flag after zeroing the boundary row.
    pub fn enforce_dirichlet(mut self) -> Self {
        let k = self.k;
        for l in 0..=self.l {
            self.coeffs[(l, k)] = 0.0;
        }
        self.dirichlet = true;
        self
    }

    /// Values at the collocation points, `(M+1) × (K+1)`.
    pub fn values(&self, grid: &Grid) -> DMatrix<f64> {
        &grid.x.c2v * &self.coeffs
    }

    pub fn boundary_max(&self) -> f64 {
        self.coeffs.column(self.k).amax()
    }

    /// Max over modes of `|r ∂_r u_ℓ(1)|`.
    pub fn neumann_defect(&self, grid: &Grid) -> f64 {
        let row = grid.radial.dt.row(self.k);
        (0..=self.l).map(|l| (row * self.coeffs.row(l).transpose())[(0, 0)].abs()).fold(0.0, f64::max)
    }

    /// Check set flags against the data.
    pub fn verify_flags(&self, grid: &Grid, tol: f64) -> Result<()> {
        if self.dirichlet && self.boundary_max() > tol {
            return Err(Error::Flag(format!("u(1) = {:e} with Dirichlet flag set", self.boundary_max())));
        }
        if self.neumann {
            let d = self.neumann_defect(grid);
            if d > tol {
                return Err(Error::Flag(format!("r u_r(1) = {d:e} with Neumann flag set")));
            }
        }
        Ok(())
    }

    /// Evaluate at an arbitrary point by radial interpolation and cosine sum.
    pub fn eval(&self, grid: &Grid, r: f64, x: f64) -> f64 {
        let row = grid.radial.lagrange_row(r * r);
        let radial = &self.coeffs * row;
        grid.x.eval(radial.as_slice(), x).0
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.amax()
    }

    /// Max of `|u|` over interior radial nodes (`i < K`), the rows where the
    /// collocation equations are imposed.
    pub fn interior_max(&self) -> f64 {
        self.coeffs.columns(0, self.k).amax()
    }

    pub fn scaled(&self, a: f64) -> Field2D {
        let mut f = self.clone();
        f.coeffs *= a;
        f
    }

    pub fn axpy(&self, a: f64, other: &Field2D) -> Field2D {
        let mut f = self.clone();
        f.coeffs += &other.coeffs * a;
        f.dirichlet = self.dirichlet && other.dirichlet;
        f.neumann = self.neumann && other.neumann;
        f
    }
}

#[derive(Serialize, Deserialize)]
struct FieldRepr {
    #[serde(rename = "K")]
    k: usize,
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "N")]
    n: u32,
    coefficients: Vec<f64>,
    #[serde(default)]
    dirichlet: bool,
    #[serde(default)]
    neumann: bool,
}

impl Serialize for Field2D {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut coefficients = Vec::with_capacity(self.coeffs.len());
        for l in 0..=self.l {
            coefficients.extend(self.coeffs.row(l).iter());
        }
        FieldRepr {
            k: self.k,
            l: self.l,
            n: self.n,
            coefficients,
            dirichlet: self.dirichlet,
            neumann: self.neumann,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Field2D {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = FieldRepr::deserialize(d)?;
        if r.coefficients.len() != (r.k + 1) * (r.l + 1) {
            return Err(D::Error::custom("coefficient count does not match (K+1)(L+1)"));
        }
        Ok(Field2D {
            k: r.k,
            l: r.l,
            n: r.n,
            coeffs: DMatrix::from_row_slice(r.l + 1, r.k + 1, &r.coefficients),
            dirichlet: r.dirichlet,
            neumann: r.neumann,
        })
    }
}

/// Boundary perturbation `h(x) = Σ_ℓ h_ℓ cos(q ℓ x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainProfile {
    pub coefficients: Vec<f64>,
}

/// Collocation samples of `h`, `h'`, `h''`.
#[derive(Clone, Debug)]
pub struct ProfileSamples {
    pub h: DVector<f64>,
    pub dh: DVector<f64>,
    pub ddh: DVector<f64>,
}

impl DomainProfile {
    pub fn zero(grid: &Grid) -> Self {
        DomainProfile { coefficients: vec![0.0; grid.l() + 1] }
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        let mut p = Self::zero(grid);
        p.coefficients[0] = c;
        p
    }

    pub fn samples(&self, grid: &Grid) -> ProfileSamples {
        let c = DVector::from_column_slice(&self.coefficients);
        ProfileSamples { h: &grid.x.c2v * &c, dh: &grid.x.c2v_x * &c, ddh: &grid.x.c2v_xx * &c }
    }

    pub fn eval(&self, grid: &Grid, x: f64) -> (f64, f64, f64) {
        grid.x.eval(&self.coefficients, x)
    }

    pub fn scaled(&self, a: f64) -> Self {
        DomainProfile { coefficients: self.coefficients.iter().map(|c| a * c).collect() }
    }

    /// `min_j (1 + h(x_j))`; the cylinder requires this to be positive.
    pub fn min_one_plus(&self, grid: &Grid) -> f64 {
        self.samples(grid).h.iter().map(|h| 1.0 + h).fold(f64::INFINITY, f64::min)
    }
}
