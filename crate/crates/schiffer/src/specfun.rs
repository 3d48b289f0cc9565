//! Bessel functions of the first kind, the rescaled family
//! `I_ν(r) = r^{-ν} J_ν(r)` and the positive zeros `j_{ν,n}`.
//!
//! Small arguments use the power series of `I_ν`, which has no `r^ν`
//! factor and stays accurate down to `r = 0`. Larger arguments use Miller's
//! backward recurrence normalised by the Neumann series
//! `(x/2)^ν = Σ_k (ν+2k) Γ(ν+k)/k! · J_{ν+2k}(x)`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_2_PI, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SERIES_MAX: f64 = 8.0;
const RESCALE: f64 = 1e250;

/// Order of a Bessel function, restricted to `ν > -1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselOrder(f64);

impl BesselOrder {
    pub fn new(nu: f64) -> Result<Self> {
        if nu.is_finite() && nu > -1.0 {
            Ok(BesselOrder(nu))
        } else {
            Err(Error::Domain(format!("Bessel order must exceed -1, got {nu}")))
        }
    }

    pub fn nu(self) -> f64 {
        self.0
    }

    /// The order `ν + k`.
    pub fn shifted(self, k: u32) -> BesselOrder {
        BesselOrder(self.0 + k as f64)
    }
}

/// Gamma function (Lanczos, g = 7, nine terms) with reflection below 1/2.
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const P: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x == x.round() && (1.0..=21.0).contains(&x) {
        return (1..x as u64).map(|k| k as f64).product();
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = P[0];
    let t = x + G + 0.5;
    for (i, p) in P.iter().enumerate().skip(1) {
        a += p / (x + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

fn is_half(nu: f64) -> bool {
    nu == 0.5
}

fn is_minus_half(nu: f64) -> bool {
    nu == -0.5
}

/// Power series of `I_ν(r) = Σ_k (-r²/4)^k / (2^ν k! Γ(ν+k+1))`.
fn cap_i_series(nu: f64, r: f64) -> f64 {
    let q = -0.25 * r * r;
    let mut term = 2f64.powf(-nu) / gamma(nu + 1.0);
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (nu + kf));
        sum += term;
        if term.abs() <= 1e-18 * sum.abs() && kf > 0.5 * r {
            break;
        }
    }
    sum
}

/// `J_ν(x)` for `x > SERIES_MAX` by Miller's algorithm.
fn bessel_j_miller(nu: f64, x: f64) -> f64 {
    // base order nu1 in [0, 1); target = nu1 + n with n >= -1
    let n = nu.floor();
    let nu1 = nu - n;
    let n = n as i64;
    let top = (x + 10.0 * x.cbrt() + 30.0).max(n as f64 + 30.0);
    let kmax = 2 * ((top as i64) / 2 + 1);

    let need = n.max(0) + 1;
    let mut f_next = 0.0f64; // f_{k+1}
    let mut f_cur = 1e-30f64; // f_k
    let mut norm = 0.0f64;
    let mut kept = vec![0.0f64; (need + 1) as usize];

    // Neumann coefficients (nu1+2k) Γ(nu1+k)/k!, with Γ(nu1+1) for k = 0
    let half = (kmax / 2) as usize;
    let mut cs = Vec::with_capacity(half + 1);
    let mut c = gamma(nu1 + 1.0);
    cs.push(c);
    for k in 1..=half {
        if k > 1 {
            let kk = (k - 1) as f64;
            c *= (nu1 + kk) / (kk + 1.0);
        }
        cs.push((nu1 + 2.0 * k as f64) * c);
    }

    let mut k = kmax;
    loop {
        if k <= need {
            kept[k as usize] = f_cur;
        }
        if k % 2 == 0 {
            norm += cs[(k / 2) as usize] * f_cur;
        }
        if k == 0 {
            break;
        }
        // J_{μ-1} = (2μ/x) J_μ - J_{μ+1}
        let mu = nu1 + k as f64;
        let f_prev = 2.0 * mu / x * f_cur - f_next;
        f_next = f_cur;
        f_cur = f_prev;
        k -= 1;
        if f_cur.abs() > RESCALE {
            f_cur /= RESCALE;
            f_next /= RESCALE;
            norm /= RESCALE;
            for v in kept.iter_mut() {
                *v /= RESCALE;
            }
        }
    }
    let scale = (0.5 * x).powf(nu1) / norm;
    if n >= 0 {
        kept[n as usize] * scale
    } else {
        // one stable downward step to nu1 - 1
        (2.0 * nu1 / x * kept[0] - kept[1]) * scale
    }
}

pub(crate) fn j_raw(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 {
            1.0
        } else if nu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    if is_half(nu) {
        return (FRAC_2_PI / x).sqrt() * x.sin();
    }
    if is_minus_half(nu) {
        return (FRAC_2_PI / x).sqrt() * x.cos();
    }
    if x <= SERIES_MAX {
        x.powf(nu) * cap_i_series(nu, x)
    } else {
        bessel_j_miller(nu, x)
    }
}

pub(crate) fn cap_i_raw(nu: f64, r: f64) -> f64 {
    if is_minus_half(nu) {
        return FRAC_2_PI.sqrt() * r.cos();
    }
    if r == 0.0 {
        return 2f64.powf(-nu) / gamma(nu + 1.0);
    }
    if is_half(nu) {
        return FRAC_2_PI.sqrt() * r.sin() / r;
    }
    if r <= SERIES_MAX {
        cap_i_series(nu, r)
    } else {
        bessel_j_miller(nu, r) / r.powf(nu)
    }
}

pub(crate) fn cap_i_deriv_raw(nu: f64, r: f64, k: u8) -> f64 {
    match k {
        1 => -r * cap_i_raw(nu + 1.0, r),
        _ => -cap_i_raw(nu + 1.0, r) + r * r * cap_i_raw(nu + 2.0, r),
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius must be finite and nonnegative, got {r}")))
    }
}

/// `J_ν(r)` for `r ≥ 0`.
pub fn bessel_j(nu: BesselOrder, r: f64) -> Result<f64> {
    check_radius(r)?;
    Ok(j_raw(nu.0, r))
}

/// `I_ν(r) = r^{-ν} J_ν(r)`, extended to `r = 0` by `2^{-ν}/Γ(ν+1)`.
pub fn cap_i(nu: BesselOrder, r: f64) -> Result<f64> {
    check_radius(r)?;
    Ok(cap_i_raw(nu.0, r))
}

/// First (`k = 1`) or second (`k = 2`) derivative of `I_ν` at `r`.
pub fn cap_i_deriv(nu: BesselOrder, r: f64, k: u8) -> Result<f64> {
    check_radius(r)?;
    if !(k == 1 || k == 2) {
        return Err(Error::Domain(format!("derivative order {k} not supported")));
    }
    Ok(cap_i_deriv_raw(nu.0, r, k))
}

/// Bracketing parameters for the zero search.
#[derive(Clone, Copy, Debug)]
pub struct ZeroSearch {
    pub step: f64,
    pub radius_cap: f64,
}

impl Default for ZeroSearch {
    fn default() -> Self {
        ZeroSearch { step: PI / 8.0, radius_cap: 2000.0 }
    }
}

impl ZeroSearch {
    /// First `count` positive zeros of `J_ν`.
    pub fn zeros(&self, nu: BesselOrder, count: usize) -> Result<Vec<f64>> {
        let nu = nu.0;
        // For ν ≥ -1/2 the first zero lies beyond max(ν, 1); below that the
        // scan starts near the origin.
        let mut a = if nu >= -0.5 { nu.max(1.0) } else { 1e-6 };
        let mut fa = j_raw(nu, a);
        let mut out = Vec::with_capacity(count);
        while out.len() < count {
            if a > self.radius_cap {
                return Err(Error::ZeroSearch { nu, cap: self.radius_cap, found: out.len() });
            }
            let b = a + self.step;
            let fb = j_raw(nu, b);
            if fb == 0.0 {
                out.push(b);
                a = b + 1e-9;
                fa = j_raw(nu, a);
                continue;
            }
            if fa.signum() != fb.signum() {
                out.push(refine_zero(nu, a, b, fa));
            }
            a = b;
            fa = fb;
        }
        Ok(out)
    }
}

/// Safeguarded Newton on a sign-change bracket `[a, b]`.
fn refine_zero(nu: f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let fx = j_raw(nu, x);
        if fx == 0.0 {
            return x;
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        // J_ν' = (ν/x) J_ν - J_{ν+1}
        let d = nu / x * fx - j_raw(nu + 1.0, x);
        let newton = x - fx / d;
        let next = if d != 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if (next - x).abs() <= 4.0 * f64::EPSILON * x || (b - a) <= 4.0 * f64::EPSILON * x {
            return next;
        }
        x = next;
    }
    x
}

/// `j_{ν,n}`, the n-th positive zero of `J_ν` (n ≥ 1).
pub fn bessel_zero(nu: BesselOrder, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("zero index starts at 1".into()));
    }
    Ok(ZeroSearch::default().zeros(nu, n)?[n - 1])
}

/// Zeros of one order together with a cache of sampled values.
#[derive(Clone, Debug)]
pub struct BesselTable {
    order: BesselOrder,
    zeros: Vec<f64>,
    cache: BTreeMap<u64, f64>,
}

impl BesselTable {
    pub fn new(order: BesselOrder, count: usize) -> Result<Self> {
        let zeros = ZeroSearch::default().zeros(order, count)?;
        Ok(BesselTable { order, zeros, cache: BTreeMap::new() })
    }

    /// Precompute `J_ν` at the given radii; later lookups hit the cache.
    pub fn with_samples(mut self, radii: &[f64]) -> Result<Self> {
        for &r in radii {
            check_radius(r)?;
            self.cache.insert(r.to_bits(), j_raw(self.order.0, r));
        }
        Ok(self)
    }

    pub fn order(&self) -> BesselOrder {
        self.order
    }

    pub fn zeros(&self) -> &[f64] {
        &self.zeros
    }

    /// `j_{ν,n}` for `1 ≤ n ≤ count`.
    pub fn zero(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|i| self.zeros.get(i).copied())
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        Ok(self.cache.get(&r.to_bits()).copied().unwrap_or_else(|| j_raw(self.order.0, r)))
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }
}
