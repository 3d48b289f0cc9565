//! Discrete fields on `[0,1]_r × [0,π]_x` and the operators acting on them.

pub mod cylinder;
pub mod field;
pub mod operator;
pub mod radial;
pub mod xgrid;

pub use cylinder::{apply_dt, apply_laplace_t, apply_m1, apply_pullback, compute_h_u, CylinderOperator, ElimMap, G_of};
pub use field::{DomainProfile, Field2D, Grid, ProfileSamples};
pub use operator::{PointwiseOperator, Term};
pub use radial::{RadialGrid, RadialWeight};
pub use xgrid::{XGrid, XOp};

/// Default resolution: radial nodes `K`, cosine modes `L`, collocation `M`.
pub const DEFAULT_K: usize = 48;
pub const DEFAULT_L: usize = 16;
/// Default `x` collocation count; twice `L` keeps quadratic products in `h`
/// free of aliasing.
pub const DEFAULT_M: usize = 2 * DEFAULT_L;
