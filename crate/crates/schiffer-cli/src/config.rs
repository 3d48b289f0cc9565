//! Run configuration: defaults, a flat `key = value` file, the
//! `SCHIFFER_OUT` environment variable and command-line flags, applied in
//! that order so flags win.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const OUT_ENV: &str = "SCHIFFER_OUT";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}:{line}: {msg}")]
    Syntax { path: String, line: usize, msg: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {msg}")]
    BadValue { key: String, value: String, msg: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Cylinder dimension.
    #[serde(rename = "N")]
    pub n: u32,
    /// Cylinder eigenvalue index.
    pub m: u32,
    pub lambda0: f64,
    /// Sphere mode; `0` picks the least admissible one.
    pub ell: u32,
    /// Radial collocation degree.
    #[serde(rename = "K")]
    pub k: usize,
    /// Highest `x`-mode.
    #[serde(rename = "L")]
    pub l: usize,
    /// `x`-collocation intervals.
    #[serde(rename = "M")]
    pub m_colloc: usize,
    /// Cells of the coarse Sturm–Liouville grid.
    pub sl_n: usize,
    pub newton_tol: f64,
    pub kernel_tol: f64,
    pub zero_tol: f64,
    pub s_max: f64,
    pub ds: f64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 1,
            m: 1,
            lambda0: 0.5,
            ell: 0,
            k: 48,
            l: 16,
            m_colloc: 32,
            sl_n: schiffer::sphere_spectral::DEFAULT_SL_N,
            newton_tol: 1e-10,
            kernel_tol: schiffer::linear_analysis::DEFAULT_KERNEL_TOL,
            zero_tol: 1e-10,
            s_max: 0.05,
            ds: 0.005,
            out: PathBuf::from("out"),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| ConfigError::BadValue { key: key.into(), value: value.into(), msg: e.to_string() })
}

impl RunConfig {
    /// Set one field by its file key (the same spelling as the JSON echo).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "N" => self.n = parse(key, value)?,
            "m" => self.m = parse(key, value)?,
            "lambda0" => self.lambda0 = parse(key, value)?,
            "ell" => self.ell = parse(key, value)?,
            "K" => self.k = parse(key, value)?,
            "L" => self.l = parse(key, value)?,
            "M" => self.m_colloc = parse(key, value)?,
            "sl_n" => self.sl_n = parse(key, value)?,
            "newton_tol" => self.newton_tol = parse(key, value)?,
            "kernel_tol" => self.kernel_tol = parse(key, value)?,
            "zero_tol" => self.zero_tol = parse(key, value)?,
            "s_max" => self.s_max = parse(key, value)?,
            "ds" => self.ds = parse(key, value)?,
            "out" => self.out = PathBuf::from(value),
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    /// Apply a `key = value` text; `#` starts a comment, blank lines are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                path: origin.into(),
                line: i + 1,
                msg: "expected `key = value`".into(),
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// The supported envelope.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        for (name, v) in [("K", self.k), ("L", self.l), ("M", self.m_colloc), ("sl_n", self.sl_n)] {
            if v < 8 {
                return bad(format!("{name} = {v} is below 8"));
            }
        }
        if self.m_colloc < self.l {
            return bad(format!("M = {} must be at least L = {}", self.m_colloc, self.l));
        }
        for (name, v) in [("newton_tol", self.newton_tol), ("kernel_tol", self.kernel_tol), ("zero_tol", self.zero_tol)] {
            if !(v > 0.0 && v < 1e-2) {
                return bad(format!("{name} = {v} must lie in (0, 1e-2)"));
            }
        }
        if !(1..=5).contains(&self.n) {
            return bad(format!("N = {} must lie in [1, 5]", self.n));
        }
        if !(1..=6).contains(&self.m) {
            return bad(format!("m = {} must lie in [1, 6]", self.m));
        }
        if !(self.lambda0 > 0.0 && self.lambda0 < 1.0) {
            return bad(format!("lambda0 = {} must lie in (0, 1)", self.lambda0));
        }
        if !(self.ds > 0.0 && self.s_max >= self.ds && self.s_max.is_finite()) {
            return bad(format!("need 0 < ds <= s_max, got ds = {}, s_max = {}", self.ds, self.s_max));
        }
        Ok(())
    }

    /// `None` when the mode is left to the `ℓ₀` search.
    pub fn sphere_ell(&self) -> Option<u32> {
        (self.ell != 0).then_some(self.ell)
    }
}

/// Command-line values that override the file; `None` leaves the field alone.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub n: Option<u32>,
    pub m: Option<u32>,
    pub lambda0: Option<f64>,
    pub ell: Option<u32>,
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub m_colloc: Option<usize>,
    pub sl_n: Option<usize>,
    pub newton_tol: Option<f64>,
    pub kernel_tol: Option<f64>,
    pub zero_tol: Option<f64>,
    pub s_max: Option<f64>,
    pub ds: Option<f64>,
    pub out: Option<PathBuf>,
}

/// Defaults, then the config file, then `SCHIFFER_OUT`, then flags.
pub fn resolve(flags: &Overrides, env_out: Option<PathBuf>) -> Result<RunConfig, ConfigError> {
    let mut c = RunConfig::default();
    if let Some(path) = &flags.config {
        c.apply_file(path)?;
    }
    if let Some(out) = env_out {
        c.out = out;
    }
    macro_rules! take {
        ($($f:ident),*) => { $( if let Some(v) = flags.$f.clone() { c.$f = v; } )* };
    }
    take!(n, m, lambda0, ell, k, l, m_colloc, sl_n, newton_tol, kernel_tol, zero_tol, s_max, ds, out);
    c.validate()?;
    Ok(c)
}
