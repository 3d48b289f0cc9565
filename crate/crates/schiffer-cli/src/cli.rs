use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::Overrides;

#[derive(Debug, Parser)]
#[command(name = "schiffer", version, about = "Bifurcating Schiffer domains on the cylinder and the sphere")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

/// Run-configuration flags, accepted before or after the subcommand.
#[derive(Debug, Args, Default)]
pub struct GlobalArgs {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Dimension of the cylinder cross-section.
    #[arg(id = "dim", long = "N", value_name = "N", global = true)]
    pub n: Option<u32>,
    /// Radial mode index on the cylinder.
    #[arg(long, global = true)]
    pub m: Option<u32>,
    /// Band half-width parameter on the sphere, in (0, 1).
    #[arg(long, global = true)]
    pub lambda0: Option<f64>,
    /// Sphere mode, 0 for the least admissible one.
    #[arg(long, global = true)]
    pub ell: Option<u32>,
    /// Radial Chebyshev nodes.
    #[arg(long = "K", global = true)]
    pub k: Option<usize>,
    /// Cosine modes of the profile.
    #[arg(long = "L", global = true)]
    pub l: Option<usize>,
    /// Collocation points in x.
    #[arg(long = "M", global = true)]
    pub m_colloc: Option<usize>,
    /// Finite-difference nodes for the 1D eigenproblems.
    #[arg(long, global = true)]
    pub sl_n: Option<usize>,
    /// Newton tolerance.
    #[arg(long = "tol", visible_alias = "newton-tol", global = true)]
    pub newton_tol: Option<f64>,
    /// Relative singular-value threshold for kernel detection.
    #[arg(long, global = true)]
    pub kernel_tol: Option<f64>,
    /// Tolerance on the eigencurve zero.
    #[arg(long, global = true)]
    pub zero_tol: Option<f64>,
    /// Largest branch parameter |s| to trace.
    #[arg(long = "smax", global = true)]
    pub s_max: Option<f64>,
    /// Continuation step in s.
    #[arg(long, global = true)]
    pub ds: Option<f64>,
    /// Output directory; overrides SCHIFFER_OUT.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

impl GlobalArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            config: self.config.clone(),
            n: self.n,
            m: self.m,
            lambda0: self.lambda0,
            ell: self.ell,
            k: self.k,
            l: self.l,
            m_colloc: self.m_colloc,
            sl_n: self.sl_n,
            newton_tol: self.newton_tol,
            kernel_tol: self.kernel_tol,
            zero_tol: self.zero_tol,
            s_max: self.s_max,
            ds: self.ds,
            out: self.out.clone(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form constants of the cylinder model, as JSON.
    Constants,
    /// The n-th positive zero of J_nu.
    BesselZero {
        #[arg(long, allow_hyphen_values = true)]
        nu: f64,
        #[arg(long)]
        n: usize,
    },
    /// Kernel scans at lambda_m and lambda_m +- 0.1, as JSON.
    Kernel,
    /// Trace the cylinder branch; writes branch.json and profiles.csv.
    Branch,
    /// Run the acceptance suite; writes report.json.
    Verify {
        /// Comma-separated subset of criteria.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u8>>,
    },
    /// Eigencurves and the branch on the sphere.
    #[command(subcommand)]
    Sphere(SphereCommand),
}

#[derive(Debug, Subcommand)]
pub enum SphereCommand {
    /// CSV of (lambda, mu, mu').
    Mu {
        #[arg(long, value_delimiter = ',', default_values_t = default_lambdas())]
        lambdas: Vec<f64>,
    },
    /// CSV of (lambda, sigma_ell, sigma_ell').
    Sigma {
        #[arg(long, value_delimiter = ',', default_values_t = default_lambdas())]
        lambdas: Vec<f64>,
    },
    /// The root of sigma_ell in (0, lambda0), as JSON.
    LambdaStar,
    /// Trace the sphere branch; writes sphere_branch.json and boundary samples.
    Branch,
}

fn default_lambdas() -> Vec<f64> {
    (0..=9).map(|i| i as f64 / 10.0).collect()
}
