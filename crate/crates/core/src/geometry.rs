//! Closed-form Schwarzschild quantities.
//!
//! Everything here is a pure function of [`GeometryParams`] and a radius `r`
//! or tortoise coordinate `s = r + 2M ln(r - 2M)`. Near the horizon the gap
//! `r - 2M` is carried as a logarithm so that points with `s` far below zero
//! (where the gap underflows) are still represented faithfully.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Background parameters: black-hole mass, spatial dimension and the
/// damping/potential profiles `D = mu1 r^-beta`, `V = mu2 r^-gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeometryParams {
    pub mass: f64,
    pub dim: u32,
    pub mu1: f64,
    pub beta: f64,
    pub mu2: f64,
    pub gamma: f64,
}

impl Default for GeometryParams {
    fn default() -> Self {
        Self {
            mass: 1.0,
            dim: 3,
            mu1: 0.0,
            beta: 2.0,
            mu2: 0.0,
            gamma: 3.0,
        }
    }
}

impl GeometryParams {
    /// Undamped, potential-free background.
    pub fn new(mass: f64, dim: u32) -> Result<Self> {
        let params = Self {
            mass,
            dim,
            ..Self::default()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn with_damping(mut self, mu1: f64, beta: f64) -> Result<Self> {
        self.mu1 = mu1;
        self.beta = beta;
        self.validate()?;
        Ok(self)
    }

    pub fn with_potential(mut self, mu2: f64, gamma: f64) -> Result<Self> {
        self.mu2 = mu2;
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::Validation(format!("M > 0 required (got {})", self.mass)));
        }
        if self.dim < 3 {
            return Err(Error::Validation(format!("n >= 3 required (got {})", self.dim)));
        }
        if !(self.mu1 >= 0.0 && self.mu1.is_finite()) {
            return Err(Error::Validation(format!("mu1 >= 0 required (got {})", self.mu1)));
        }
        if !(self.mu2 >= 0.0 && self.mu2.is_finite()) {
            return Err(Error::Validation(format!("mu2 >= 0 required (got {})", self.mu2)));
        }
        if !(self.beta > 1.0) {
            return Err(Error::Validation(format!("beta > 1 required (got {})", self.beta)));
        }
        if !(self.gamma > 2.0) {
            return Err(Error::Validation(format!("gamma > 2 required (got {})", self.gamma)));
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        2.0 * self.mass
    }

    /// `(n - 1) / 2`, the power relating `u` and the reduced field `v = u r^{(n-1)/2}`.
    pub fn half_dim(&self) -> f64 {
        (self.dim as f64 - 1.0) / 2.0
    }

    /// Tortoise value `4M + e` separating the near-horizon and far-field regimes.
    pub fn regime_split(&self) -> f64 {
        4.0 * self.mass + std::f64::consts::E
    }

    pub fn potential_vanishes(&self) -> bool {
        self.mu2 == 0.0
    }
}

/// A point of the exterior region described in both radial coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadialPoint {
    pub r: f64,
    pub s: f64,
    /// Lapse `F = 1 - 2M/r`, evaluated as `(r - 2M)/r` so it stays positive
    /// even when `r` rounds to `2M`.
    pub lapse: f64,
    /// `ln(r - 2M)`.
    pub log_gap: f64,
}

impl RadialPoint {
    pub fn from_r(params: &GeometryParams, r: f64) -> Result<Self> {
        let gap = radial_gap(params, r)?;
        let log_gap = gap.ln();
        Ok(Self {
            r,
            s: r + params.horizon() * log_gap,
            lapse: gap / r,
            log_gap,
        })
    }

    pub fn from_s(params: &GeometryParams, s: f64) -> Result<Self> {
        let log_gap = tortoise_log_gap(params, s)?;
        let gap = log_gap.exp();
        let r = params.horizon() + gap;
        Ok(Self {
            r,
            s,
            lapse: gap / r,
            log_gap,
        })
    }
}

fn radial_gap(params: &GeometryParams, r: f64) -> Result<f64> {
    let gap = r - params.horizon();
    if !(gap > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!(
            "r = {r} is not outside the horizon r = {}",
            params.horizon()
        )));
    }
    Ok(gap)
}

/// Lapse `F = 1 - 2M/r` and its radial derivative `2M/r^2`.
pub fn lapse(params: &GeometryParams, r: f64) -> Result<(f64, f64)> {
    let gap = radial_gap(params, r)?;
    Ok((gap / r, params.horizon() / (r * r)))
}

/// `s = r + 2M ln(r - 2M)`.
pub fn tortoise_forward(params: &GeometryParams, r: f64) -> Result<f64> {
    let gap = radial_gap(params, r)?;
    Ok(r + params.horizon() * gap.ln())
}

/// Inverse tortoise map `s -> r`.
pub fn tortoise_inverse(params: &GeometryParams, s: f64) -> Result<f64> {
    let log_gap = tortoise_log_gap(params, s)?;
    Ok(params.horizon() + log_gap.exp())
}

/// Solves `e^y + 2M y = s - 2M` for `y = ln(r - 2M)`.
///
/// The left side is increasing and convex in `y`, so a bracket is easy to
/// build; Newton steps are taken when they stay inside the bracket and
/// bisection otherwise.
pub fn tortoise_log_gap(params: &GeometryParams, s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::domain(format!("tortoise coordinate must be finite (got {s})")));
    }
    let two_m = params.horizon();
    let target = s - two_m;
    let residual = |y: f64| y.exp() + two_m * y - target;

    // The root satisfies y < target/2M, and y <= ln(target) whenever the gap exceeds 1.
    let mut hi = target / two_m;
    if target > 1.0 {
        hi = hi.min(target.ln());
    }
    let mut lo = hi - 1.0;
    let mut width = 1.0;
    while residual(lo) > 0.0 {
        width *= 2.0;
        lo = hi - width;
        if width > 1e300 {
            return Err(Error::NonConvergence(s));
        }
    }
    while residual(hi) < 0.0 {
        hi += width;
    }

    let mut y = if s <= params.regime_split() {
        target / two_m
    } else {
        (target - two_m * target.max(std::f64::consts::E).ln()).max(f64::MIN_POSITIVE).ln()
    };
    if !(y > lo && y <= hi) {
        y = 0.5 * (lo + hi);
    }

    for _ in 0..200 {
        let f = residual(y);
        if f == 0.0 {
            return Ok(y);
        }
        if f > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let slope = y.exp() + two_m;
        let mut next = y - f / slope;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - y).abs() <= 4.0 * f64::EPSILON * (1.0 + y.abs()) || hi - lo <= f64::EPSILON * (1.0 + y.abs()) {
            return Ok(next);
        }
        y = next;
    }
    Err(Error::NonConvergence(s))
}

/// Damping and potential profiles `(D, V)` at radius `r`.
pub fn profiles(params: &GeometryParams, r: f64) -> Result<(f64, f64)> {
    radial_gap(params, r)?;
    Ok(profiles_unchecked(params, r))
}

pub(crate) fn profiles_unchecked(params: &GeometryParams, r: f64) -> (f64, f64) {
    let damping = if params.mu1 == 0.0 { 0.0 } else { params.mu1 * r.powf(-params.beta) };
    let potential = if params.mu2 == 0.0 { 0.0 } else { params.mu2 * r.powf(-params.gamma) };
    (damping, potential)
}

/// Reduced potential of the 1+1 dimensional equation at a known point.
pub fn rw_potential_at(params: &GeometryParams, point: &RadialPoint) -> f64 {
    let n = params.dim as f64;
    let (r, f) = (point.r, point.lapse);
    let (_, v) = profiles_unchecked(params, r);
    f * v + (n * n - 4.0 * n + 3.0) * f * f / (4.0 * r * r) + (n - 1.0) * params.mass * f / (r * r * r)
}

/// `Q(s) = F V + (n^2 - 4n + 3) F^2 / (4 r^2) + (n - 1) M F / r^3` with `r = r(s)`.
pub fn rw_potential(params: &GeometryParams, s: f64) -> Result<f64> {
    let point = RadialPoint::from_s(params, s)?;
    Ok(rw_potential_at(params, &point))
}

/// `J = r(s)^{-(n-1)/2}`.
pub fn amplitude_weight(params: &GeometryParams, s: f64) -> Result<f64> {
    let r = tortoise_inverse(params, s)?;
    Ok(r.powf(-params.half_dim()))
}

/// Strauss and Glassey exponents for a given spatial dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalExponents {
    pub dim: u32,
    pub strauss: f64,
    pub glassey: f64,
}

impl CriticalExponents {
    /// `gamma(p, n) = 2 + (n + 1) p - (n - 1) p^2`.
    pub fn gamma_of(&self, p: f64) -> f64 {
        strauss_quadratic(p, self.dim)
    }

    /// Upper end of the range `1 < p <= n/(n-1)` of the first |u|^p branch.
    pub fn first_branch_end(&self) -> f64 {
        let n = self.dim as f64;
        n / (n - 1.0)
    }
}

pub fn strauss_quadratic(p: f64, dim: u32) -> f64 {
    let n = dim as f64;
    2.0 + (n + 1.0) * p - (n - 1.0) * p * p
}

pub fn critical_exponents(dim: u32) -> Result<CriticalExponents> {
    if dim < 2 {
        return Err(Error::invalid(format!("critical exponents need n >= 2 (got {dim})")));
    }
    let n = dim as f64;
    let a = n - 1.0;
    let b = n + 1.0;
    // Positive root of a p^2 - b p - 2 = 0, written to avoid cancellation.
    let disc = (b * b + 8.0 * a).sqrt();
    let strauss = (b + disc) / (2.0 * a);
    Ok(CriticalExponents {
        dim,
        strauss,
        glassey: (n + 1.0) / (n - 1.0),
    })
}

/// Which power nonlinearity drives the equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Nonlinearity {
    /// `|u|^p`
    #[serde(rename = "u")]
    Power,
    /// `|u_t|^p`
    #[serde(rename = "ut")]
    DerivativePower,
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Nonlinearity::Power => "u",
            Nonlinearity::DerivativePower => "ut",
        })
    }
}

impl FromStr for Nonlinearity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "u" => Ok(Nonlinearity::Power),
            "ut" => Ok(Nonlinearity::DerivativePower),
            other => Err(Error::invalid(format!("unknown nonlinearity kind '{other}' (expected u or ut)"))),
        }
    }
}

/// Upper-bound lifespan law `T <= C eps^-k` or `T <= exp(C eps^-a)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LifespanLaw {
    Polynomial { exponent: f64 },
    Exponential { exponent: f64 },
}

impl LifespanLaw {
    pub fn exponent(&self) -> f64 {
        match *self {
            LifespanLaw::Polynomial { exponent } | LifespanLaw::Exponential { exponent } => exponent,
        }
    }

    /// `ln T` predicted by the law with constant `c`.
    pub fn log_lifespan(&self, epsilon: f64, c: f64) -> f64 {
        match *self {
            LifespanLaw::Polynomial { exponent } => c.ln() - exponent * epsilon.ln(),
            LifespanLaw::Exponential { exponent } => c * epsilon.powf(-exponent),
        }
    }
}

fn near(p: f64, critical: f64) -> bool {
    (p - critical).abs() <= 1e-12 * critical
}

/// Lifespan exponent proved for the given dimension, power and nonlinearity.
pub fn theorem_exponent(dim: u32, p: f64, kind: Nonlinearity, potential_vanishes: bool) -> Result<LifespanLaw> {
    let crit = critical_exponents(dim)?;
    let n = dim as f64;
    if !(p > 1.0) {
        return Err(Error::invalid(format!("p > 1 required (got {p})")));
    }
    match kind {
        Nonlinearity::Power => {
            if near(p, crit.strauss) {
                if !potential_vanishes {
                    return Err(Error::invalid(
                        "the critical case p = p_S is only covered when V = 0",
                    ));
                }
                Ok(LifespanLaw::Exponential { exponent: p * (p - 1.0) })
            } else if p > crit.strauss {
                Err(Error::invalid(format!("p = {p} exceeds the Strauss exponent {}", crit.strauss)))
            } else if p <= crit.first_branch_end() {
                Ok(LifespanLaw::Polynomial {
                    exponent: 2.0 * (p - 1.0) / (n + 1.0 - (n - 1.0) * p),
                })
            } else {
                Ok(LifespanLaw::Polynomial {
                    exponent: 2.0 * p * (p - 1.0) / crit.gamma_of(p),
                })
            }
        }
        Nonlinearity::DerivativePower => {
            if near(p, crit.glassey) {
                Ok(LifespanLaw::Exponential { exponent: p - 1.0 })
            } else if p > crit.glassey {
                Err(Error::invalid(format!("p = {p} exceeds the Glassey exponent {}", crit.glassey)))
            } else {
                Ok(LifespanLaw::Polynomial {
                    exponent: 1.0 / (1.0 / (p - 1.0) - (n - 1.0) / 2.0),
                })
            }
        }
    }
}

/// Logarithm of the bound `T <= exp(K3 delta^{-(p1-1)/(p1-p2+1)})` from the
/// ODE blow-up lemma. The bound itself overflows for small `delta`.
pub fn ode_lemma_bound(delta: f64, p1: f64, p2: f64, k3: f64) -> Result<f64> {
    if !(p1 > 1.0 && p2 > 1.0) {
        return Err(Error::invalid(format!("p1, p2 > 1 required (got {p1}, {p2})")));
    }
    if !(p2 < p1 + 1.0) {
        return Err(Error::invalid(format!("p2 < p1 + 1 required (got p1 = {p1}, p2 = {p2})")));
    }
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("delta > 0 required (got {delta})")));
    }
    Ok(k3 * delta.powf(-(p1 - 1.0) / (p1 - p2 + 1.0)))
}
