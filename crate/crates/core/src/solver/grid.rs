use serde::{Deserialize, Serialize};

use crate::background::Background;
use crate::error::{Error, Result};
use crate::geometry::GeometryParams;
use crate::quadrature::GaussRule;

/// Uniform symmetric tortoise mesh `s_i = i ds`, `|i| <= half_cells`, with the time step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub s_lo: f64,
    pub s_hi: f64,
    pub ds: f64,
    pub dt: f64,
    /// Effective `dt / ds`; at most the requested ratio.
    pub cfl: f64,
    pub t_max: f64,
    pub half_cells: usize,
    pub steps: usize,
}

impl Grid1D {
    /// Smallest symmetric mesh containing the cone `|s| <= t_max + R` plus a
    /// two-cell guard band. `dt` is shrunk so that `t_max` is a whole number of steps.
    pub fn for_cone(ds: f64, cfl: f64, t_max: f64, support_radius: f64) -> Result<Self> {
        Self::with_half_width(ds, cfl, t_max, t_max + support_radius + 2.0 * ds)
    }

    pub fn with_half_width(ds: f64, cfl: f64, t_max: f64, half_width: f64) -> Result<Self> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::Cfl(cfl));
        }
        if !(ds > 0.0 && ds.is_finite()) {
            return Err(Error::invalid(format!("ds > 0 required (got {ds})")));
        }
        if !(t_max > 0.0 && t_max.is_finite()) {
            return Err(Error::invalid(format!("t_max > 0 required (got {t_max})")));
        }
        let half_cells = (half_width / ds).ceil() as usize;
        let steps = (t_max / (cfl * ds)).ceil() as usize;
        let dt = t_max / steps as f64;
        let s_hi = half_cells as f64 * ds;
        Ok(Self {
            s_lo: -s_hi,
            s_hi,
            ds,
            dt,
            cfl: dt / ds,
            t_max,
            half_cells,
            steps,
        })
    }

    pub fn len(&self) -> usize {
        2 * self.half_cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, i: usize) -> f64 {
        (i as f64 - self.half_cells as f64) * self.ds
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    /// Checks cone containment for data supported in `|s| <= R`.
    pub fn validate(&self, support_radius: f64) -> Result<()> {
        if self.cfl > 1.0 {
            return Err(Error::Cfl(self.cfl));
        }
        let need = self.t_max + support_radius + 2.0 * self.ds;
        if self.s_hi < need * (1.0 - 1e-14) {
            return Err(Error::invalid(format!(
                "grid half-width {} does not contain the cone t_max + R + 2 ds = {need}",
                self.s_hi
            )));
        }
        Ok(())
    }
}

/// Per-node coefficients of the reduced equation
/// `v_tt - v_ss + Q v + F D v_t = F J^{p-1} |.|^p`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tables {
    pub s: Vec<f64>,
    pub q: Vec<f64>,
    /// `F D`
    pub fd: Vec<f64>,
    /// `F J^{p-1}`
    pub fj: Vec<f64>,
}

impl Tables {
    pub fn from_background<B: Background + ?Sized>(bg: &B, grid: &Grid1D, p: f64) -> Self {
        let k = bg.half_dim();
        let s = grid.nodes();
        let mut q = Vec::with_capacity(s.len());
        let mut fd = Vec::with_capacity(s.len());
        let mut fj = Vec::with_capacity(s.len());
        for &x in &s {
            let c = bg.coefficients(x);
            q.push(c.potential);
            fd.push(c.damping);
            fj.push(c.lapse * c.r.powf(-k * (p - 1.0)));
        }
        Self { s, q, fd, fj }
    }

    /// Spatially constant coefficients.
    pub fn uniform(grid: &Grid1D, q: f64, fd: f64, fj: f64) -> Self {
        let n = grid.len();
        Self {
            s: grid.nodes(),
            q: vec![q; n],
            fd: vec![fd; n],
            fj: vec![fj; n],
        }
    }
}

/// `exp(1 - 1/(1 - z^2))` for `z = (2s - a - b)/(b - a)`, zero outside `(a, b)`.
pub fn bump(s: f64, a: f64, b: f64) -> f64 {
    let z = (2.0 * s - a - b) / (b - a);
    if z.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - z * z)).exp()
    }
}

/// `int_{-1}^{1} exp(1 - 1/(1 - z^2)) dz`.
fn bump_mass() -> f64 {
    let rule = GaussRule::new(64).expect("order 64 rule");
    // The bump is flat at both ends; splitting at the centre keeps the rule accurate.
    let f = |z: f64| bump(z, -1.0, 1.0);
    (0..16)
        .map(|i| {
            let lo = -1.0 + i as f64 / 8.0;
            rule.integrate(lo, lo + 0.125, f)
        })
        .sum()
}

/// Smooth nonnegative bump data `v(0) = eps f`, `v_t(0) = eps g` on `[a, b]`.
///
/// `f` and `g` share the profile and are normalised to unit integral in `s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialData {
    pub epsilon: f64,
    pub support: (f64, f64),
    pub radius: f64,
    /// Factor turning the raw bump into a unit-mass profile.
    pub normalization: f64,
}

impl InitialData {
    pub fn f(&self, s: f64) -> f64 {
        self.normalization * bump(s, self.support.0, self.support.1)
    }

    pub fn g(&self, s: f64) -> f64 {
        self.f(s)
    }

    /// `(eps f, eps g)` sampled on the mesh.
    pub fn sample(&self, grid: &Grid1D) -> (Vec<f64>, Vec<f64>) {
        let nodes = grid.nodes();
        let v0 = nodes.iter().map(|&s| self.epsilon * self.f(s)).collect();
        let v1 = nodes.iter().map(|&s| self.epsilon * self.g(s)).collect();
        (v0, v1)
    }
}

/// Bump data supported in `support`, or `[R/4, R/2]` by default.
pub fn make_initial_data(epsilon: f64, radius: f64, support: Option<(f64, f64)>) -> Result<InitialData> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("epsilon >= 0 required (got {epsilon})")));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid(format!("support radius R > 0 required (got {radius})")));
    }
    let (a, b) = support.unwrap_or((0.25 * radius, 0.5 * radius));
    if !(a < b) {
        return Err(Error::invalid(format!("support [{a}, {b}] is empty")));
    }
    if !(a > 0.0) || b > radius {
        return Err(Error::invalid(format!("support [{a}, {b}] must lie in (0, R] with R = {radius}")));
    }
    Ok(InitialData {
        epsilon,
        support: (a, b),
        radius,
        normalization: 2.0 / ((b - a) * bump_mass()),
    })
}

/// Coefficients for a Schwarzschild run.
pub fn schwarzschild_tables(params: &GeometryParams, grid: &Grid1D, p: f64) -> Result<Tables> {
    params.validate()?;
    Ok(Tables::from_background(&crate::background::Schwarzschild::new(*params), grid, p))
}
