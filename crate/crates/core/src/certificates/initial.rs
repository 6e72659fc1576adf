use serde::{Deserialize, Serialize};

use crate::background::{Background, Schwarzschild};
use crate::error::{Error, Result};
use crate::geometry::GeometryParams;
use crate::ode::OdeOptions;
use crate::quadrature::GaussRule;
use crate::solver::InitialData;
use crate::testfuncs::phi_start_point;
use crate::testfuncs::phi_integrate as integrate_phi;

use super::cutoffs::Cutoffs;
use super::{FunctionalName, FunctionalReport};

/// Surface area of the unit sphere `S^{n-1}`.
pub fn sphere_area(dim: u32) -> f64 {
    // Gamma(n/2) for integer n via the half-integer recursion.
    let mut gamma = if dim % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if dim % 2 == 0 { 1.0 } else { 0.5 };
    while x + 0.5 < dim as f64 / 2.0 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * std::f64::consts::PI.powf(dim as f64 / 2.0) / gamma
}

/// Smallest admissible `lambda_0`: the strict bound `4 / (M p (p-1))`.
pub fn lambda0_bound(mass: f64, p: f64) -> f64 {
    4.0 / (mass * p * (p - 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InitialOptions {
    pub p: f64,
    /// Accept `lambda_0` at or below the admissibility bound (exploration only).
    pub allow_unsafe: bool,
    /// Order-doubling change allowed, relative to the integral of the absolute integrand.
    pub rel_tol: f64,
}

impl InitialOptions {
    pub fn new(p: f64) -> Self {
        Self {
            p,
            allow_unsafe: false,
            rel_tol: 1e-9,
        }
    }
}

/// `C1`, `C2`, `C3` per unit `epsilon`, in reduced variables:
///
/// * `C1 = |S^{n-1}| int (g + lambda_0 f + D F f) phi_{lambda_0} ds`, the radial
///   integral `int r^{n-1} ((u1 + lambda_0 u0)/F + D u0) psi_{lambda_0} dr` after
///   `u = v r^{-(n-1)/2}`, `dr = F ds`;
/// * `C2`, the same with the cone weight `chi_T^{2p'}(2R - s)` of the second test function at `t = 0`;
///   it equals `C1` once `T >= 4R`;
/// * `C3 = int phi_{lambda_0} (g + (lambda_0 D F + lambda_0^2 - Q) f) ds`.
pub fn initial_functionals(
    params: &GeometryParams,
    data: &InitialData,
    lambda0: f64,
    cutoffs: &Cutoffs,
    opts: &InitialOptions,
) -> Result<[FunctionalReport; 3]> {
    params.validate()?;
    let bound = lambda0_bound(params.mass, opts.p);
    if !(lambda0 > bound) && !opts.allow_unsafe {
        return Err(Error::invalid(format!(
            "lambda_0 = {lambda0} must exceed 4/(M p (p-1)) = {bound}"
        )));
    }
    if !(lambda0 > 0.0) {
        return Err(Error::invalid(format!("lambda_0 > 0 required (got {lambda0})")));
    }
    let bg = Schwarzschild::new(*params);
    let (a, b) = data.support;
    let s_min = phi_start_point(&bg, lambda0, 1e-12).min(a - 1.0);
    let area = sphere_area(params.dim);
    let two_r = 2.0 * data.radius;

    // Sums and the sums of absolute integrands, the latter scaling the
    // convergence test so a C3 near zero still converges.
    let evaluate = |order: usize| -> Result<([f64; 3], [f64; 3])> {
        let rule = GaussRule::new(order)?;
        let panels = 16;
        let h = (b - a) / panels as f64;
        let nodes: Vec<(f64, f64)> = (0..panels).flat_map(|k| rule.on(a + k as f64 * h, a + (k + 1) as f64 * h).collect::<Vec<_>>()).collect();
        let s: Vec<f64> = nodes.iter().map(|n| n.0).collect();
        let w = integrate_phi(&bg, lambda0, s_min, &s, &OdeOptions::with_tolerance(1e-12))?;
        let mut sums = [0.0; 3];
        let mut mags = [0.0; 3];
        for ((&x, weight), y) in s.iter().zip(nodes.iter().map(|n| n.1)).zip(&w) {
            let phi = y[0] * (lambda0 * x).exp();
            let c = bg.coefficients(x);
            let (f, g) = (data.f(x), data.g(x));
            let c1 = (g + lambda0 * f + c.damping * f) * phi;
            let terms = [
                c1,
                c1 * cutoffs.chi_pow(two_r - x).value,
                phi * (g + (lambda0 * c.damping + lambda0 * lambda0 - c.potential) * f),
            ];
            for i in 0..3 {
                sums[i] += weight * terms[i];
                mags[i] += weight * terms[i].abs();
            }
        }
        Ok(([area * sums[0], area * sums[1], sums[2]], [area * mags[0], area * mags[1], mags[2]]))
    };

    let mut order = 8;
    let (mut prev, _) = evaluate(order)?;
    let change = loop {
        order *= 2;
        let (next, mags) = evaluate(order)?;
        let change = (0..3)
            .map(|i| {
                let diff = (next[i] - prev[i]).abs();
                if mags[i] == 0.0 { diff } else { diff / mags[i] }
            })
            .fold(0.0, f64::max);
        prev = next;
        if change < opts.rel_tol {
            break change;
        }
        if order >= 128 {
            return Err(Error::Quadrature(format!("initial functionals changed by {change:e} at order {order}")));
        }
    };
    let report = |name, value| FunctionalReport {
        name,
        value,
        horizon: None,
        quadrature_change: change,
    };
    Ok([
        report(FunctionalName::C1, prev[0]),
        FunctionalReport {
            horizon: Some(cutoffs.horizon),
            ..report(FunctionalName::C2, prev[1])
        },
        report(FunctionalName::C3, prev[2]),
    ])
}
