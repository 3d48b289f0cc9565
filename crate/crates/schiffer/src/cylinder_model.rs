//! Closed-form data of the straight cylinder `B_1 × ℝ/2πℤ` for a fixed
//! dimension `N` and radial Neumann mode `m`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{bessel_zero, cap_i_deriv_raw, cap_i_raw, BesselOrder};

/// Bifurcation data attached to the `m`-th nonconstant radial Neumann
/// eigenfunction of the unit ball in `ℝ^N`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CylinderModel {
    #[serde(rename = "N")]
    pub n: u32,
    pub m: u32,
    /// `j_{N/2, m}`
    pub j_m: f64,
    /// `j_{N/2-1, 1}`
    pub j_dir: f64,
    pub lambda_m: f64,
    pub mu0: f64,
    pub kappa: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Profiles of the model at one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Profiles {
    pub u: f64,
    pub du: f64,
    pub g: f64,
    pub phi1: f64,
}

impl CylinderModel {
    pub fn new(n: u32, m: u32) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::Domain(format!("N and m must be positive, got N={n}, m={m}")));
        }
        let half = n as f64 / 2.0;
        let j_m = bessel_zero(BesselOrder::new(half)?, m as usize)?;
        let j_dir = bessel_zero(BesselOrder::new(half - 1.0)?, 1)?;
        let lambda_m = j_m * j_m - j_dir * j_dir;
        if lambda_m <= 0.0 {
            return Err(Error::Precondition(format!("lambda_m = {lambda_m} is not positive")));
        }
        let a = half - 1.0;
        let num = j_dir * j_dir * cap_i_raw(a, j_m) * cap_i_raw(half, j_dir);
        let den = j_m * j_m * cap_i_deriv_raw(a, j_m, 2);
        let gamma = -num / den;
        Ok(CylinderModel {
            n,
            m,
            j_m,
            j_dir,
            lambda_m,
            mu0: j_m * j_m / lambda_m,
            kappa: 1.0 / j_m,
            beta: gamma / lambda_m.sqrt(),
            gamma,
        })
    }

    fn a(&self) -> f64 {
        self.n as f64 / 2.0 - 1.0
    }

    fn check(r: f64) -> Result<()> {
        if (0.0..=1.0).contains(&r) {
            Ok(())
        } else {
            Err(Error::Domain(format!("radius {r} outside [0, 1]")))
        }
    }

    /// `c_m = I_{N/2-1}(j_m) / (j_m² I''_{N/2-1}(j_m)) = 1/g'(1)`.
    pub fn c_m(&self) -> f64 {
        let a = self.a();
        cap_i_raw(a, self.j_m) / (self.j_m * self.j_m * cap_i_deriv_raw(a, self.j_m, 2))
    }

    pub fn u(&self, r: f64) -> f64 {
        let a = self.a();
        cap_i_raw(a, self.j_m * r) / cap_i_raw(a, self.j_m)
    }

    pub fn du(&self, r: f64) -> f64 {
        let a = self.a();
        self.j_m * cap_i_deriv_raw(a, self.j_m * r, 1) / cap_i_raw(a, self.j_m)
    }

    pub fn ddu(&self, r: f64) -> f64 {
        let a = self.a();
        self.j_m * self.j_m * cap_i_deriv_raw(a, self.j_m * r, 2) / cap_i_raw(a, self.j_m)
    }

    /// `g(r) = r U_m'(r)` through the closed form `-j_m² r² I_{N/2}(j_m r)/I_{N/2-1}(j_m)`.
    pub fn g(&self, r: f64) -> f64 {
        let a = self.a();
        -self.j_m * self.j_m * r * r * cap_i_raw(a + 1.0, self.j_m * r) / cap_i_raw(a, self.j_m)
    }

    /// `g'(r) = U_m'(r) + r U_m''(r)`.
    pub fn dg(&self, r: f64) -> f64 {
        self.du(r) + r * self.ddu(r)
    }

    /// `(r ∂_r)² U_m = -j_m² r² U_m - (N-2) g`, from the radial ODE.
    pub fn dd_u(&self, r: f64) -> f64 {
        -self.j_m * self.j_m * r * r * self.u(r) - (self.n as f64 - 2.0) * self.g(r)
    }

    /// First Dirichlet eigenfunction `I_{N/2-1}(j_dir r)`; also the radial
    /// factor of the kernel direction.
    pub fn phi1(&self, r: f64) -> f64 {
        cap_i_raw(self.a(), self.j_dir * r)
    }

    pub fn dphi1(&self, r: f64) -> f64 {
        self.j_dir * cap_i_deriv_raw(self.a(), self.j_dir * r, 1)
    }

    pub fn eval_profiles(&self, r: f64) -> Result<Profiles> {
        Self::check(r)?;
        Ok(Profiles { u: self.u(r), du: self.du(r), g: self.g(r), phi1: self.phi1(r) })
    }

    pub fn kernel_profile(&self, r: f64) -> Result<f64> {
        Self::check(r)?;
        Ok(self.phi1(r))
    }

    /// Sign changes of `U_m` on a uniform sample of `(0, 1)`.
    pub fn u_sign_changes(&self, samples: usize) -> usize {
        let vals: Vec<f64> = (1..samples).map(|i| self.u(i as f64 / samples as f64)).collect();
        vals.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
    }
}

/// Convenience constructor mirroring the library's operation list.
pub fn build_cylinder_model(n: u32, m: u32) -> Result<CylinderModel> {
    CylinderModel::new(n, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_zero_indices() {
        assert!(CylinderModel::new(0, 1).is_err());
        assert!(CylinderModel::new(1, 0).is_err());
    }

    #[test]
    fn normalisation_and_boundary_values() {
        for n in 1..=5 {
            for m in 1..=3 {
                let c = CylinderModel::new(n, m).unwrap();
                assert!((c.u(1.0) - 1.0).abs() < 1e-10);
                assert!(c.du(1.0).abs() < 1e-10);
                assert!(c.g(1.0).abs() < 1e-10);
                assert!(c.phi1(1.0).abs() < 1e-10);
                assert!((c.gamma - c.beta * c.lambda_m.sqrt()).abs() <= 1e-15 * c.gamma.abs());
                assert!((c.c_m() * c.dg(1.0) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn profiles_domain() {
        let c = CylinderModel::new(2, 1).unwrap();
        assert!(c.eval_profiles(1.5).is_err());
        assert!(c.kernel_profile(-0.1).is_err());
        let p = c.eval_profiles(1.0).unwrap();
        assert!((p.u - 1.0).abs() < 1e-12 && p.g.abs() < 1e-12);
        assert!((c.kernel_profile(1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn n1_closed_forms() {
        let c = CylinderModel::new(1, 1).unwrap();
        assert!((c.j_m - PI).abs() < 1e-13);
        assert!((c.j_dir - PI / 2.0).abs() < 1e-13);
    }
}
