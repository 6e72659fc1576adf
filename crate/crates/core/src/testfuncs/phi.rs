use crate::background::Background;
use crate::error::{Error, Result};
use crate::ode::{solve_at, OdeOptions};

use super::{uniform_grid, Abscissa, Band, TestFunction, TestFunctionKind};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiOptions {
    pub ode: OdeOptions,
    /// Relative size of `Q + lambda D F` against `lambda^2` tolerated at the start point.
    pub placement_tol: f64,
    pub output_step: f64,
    /// Window for the asymptotic band; the whole grid when `None`.
    pub band_window: Option<(f64, f64)>,
    /// Largest admissible `c2 / c1`; `None` skips the check.
    pub band_ceiling: Option<f64>,
}

impl Default for PhiOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions::default(),
            placement_tol: 1e-12,
            output_step: 0.05,
            band_window: None,
            band_ceiling: Some(100.0),
        }
    }
}

fn perturbation<B: Background + ?Sized>(bg: &B, lambda: f64, s: f64) -> f64 {
    let c = bg.coefficients(s);
    c.potential.abs() + lambda * c.damping.abs()
}

/// Largest `s <= 0` (on a unit lattice) below which the perturbation
/// `|Q| + lambda D F` stays under `tol * lambda^2`.
pub fn phi_start_point<B: Background + ?Sized>(bg: &B, lambda: f64, tol: f64) -> f64 {
    let bound = tol * lambda * lambda;
    let mut s = 0.0;
    loop {
        if perturbation(bg, lambda, s) <= bound
            && perturbation(bg, lambda, s - 5.0) <= bound
            && perturbation(bg, lambda, s - 10.0) <= bound
        {
            return s;
        }
        s -= 1.0;
        if s < -1e5 {
            return s;
        }
    }
}

/// `(w, w')` with `w = phi_lambda e^{-lambda s}` at the sorted `nodes`, started
/// from free data `w = 1, w' = 0` at `s_min`.
pub(crate) fn integrate_phi<B: Background + ?Sized>(
    bg: &B,
    lambda: f64,
    s_min: f64,
    nodes: &[f64],
    ode: &OdeOptions,
) -> Result<Vec<[f64; 2]>> {
    let rhs = |s: f64, y: &[f64; 2]| {
        let c = bg.coefficients(s);
        [y[1], (c.potential + lambda * c.damping) * y[0] - 2.0 * lambda * y[1]]
    };
    solve_at(rhs, s_min, [1.0, 0.0], nodes, ode)
}

/// Growing solution of `phi'' = (Q + lambda D F + lambda^2) phi` normalised so
/// that `phi e^{-lambda s} -> 1` as `s -> -infinity`.
///
/// Values are stored as `w = phi e^{-lambda s}` with `dvalues = w'`. The band
/// records `c1 <= w <= c2`, i.e. `c1 e^{lambda s} <= phi <= c2 e^{lambda s}`.
pub fn solve_phi_lambda<B: Background + ?Sized>(
    bg: &B,
    lambda: f64,
    s_min: f64,
    s_max: f64,
    opts: &PhiOptions,
) -> Result<TestFunction> {
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("lambda > 0 required (got {lambda})")));
    }
    if !(s_max > s_min) {
        return Err(Error::invalid(format!("empty tortoise range [{s_min}, {s_max}]")));
    }
    let pert = perturbation(bg, lambda, s_min);
    if pert > opts.placement_tol * lambda * lambda {
        return Err(Error::invalid(format!(
            "start point s_min = {s_min} too close to the potential: |Q| + lambda D F = {pert:e} exceeds {:e}",
            opts.placement_tol * lambda * lambda
        )));
    }
    let grid = uniform_grid(s_min, s_max, opts.output_step);
    let states = integrate_phi(bg, lambda, s_min, &grid, &opts.ode)?;
    let values: Vec<f64> = states.iter().map(|y| y[0]).collect();
    let dvalues: Vec<f64> = states.iter().map(|y| y[1]).collect();

    let window = opts.band_window.unwrap_or((s_min, s_max));
    let band = Band::over(&grid, &values, window)?;
    if let Some(ceiling) = opts.band_ceiling {
        if band.ratio() > ceiling {
            return Err(Error::Certificate(format!(
                "phi_lambda band c2/c1 = {} exceeds {ceiling} (lambda = {lambda})",
                band.ratio()
            )));
        }
    }
    Ok(TestFunction {
        kind: TestFunctionKind::PhiLambda,
        abscissa: Abscissa::Tortoise,
        grid,
        values,
        dvalues,
        lambda: Some(lambda),
        log_scaled: true,
        radius: Vec::new(),
        band: Some(band),
        derivative_constant: None,
    })
}

/// `psi_lambda(r) = phi_lambda(s(r)) r^{-(n-1)/2}` on the tortoise grid of `phi`.
///
/// Stored as `psi e^{-lambda s}` and `e^{-lambda s} d psi / dr`. The recorded
/// `derivative_constant` is the smallest `C` with
/// `|d_r psi| <= C (lambda + 1) F^{-1} r^{-(n-1)/2} e^{lambda s}` on the grid;
/// when the potential vanishes, `zero_potential_constant` gives the smallest `C`
/// with `|d_r psi| <= C lambda psi / F`.
pub fn psi_lambda<B: Background + ?Sized>(bg: &B, lambda: f64, phi: &TestFunction) -> Result<(TestFunction, Option<f64>)> {
    if phi.kind != TestFunctionKind::PhiLambda || phi.lambda != Some(lambda) {
        return Err(Error::invalid("psi_lambda needs the phi_lambda table built for the same lambda"));
    }
    let k = bg.half_dim();
    let mut values = Vec::with_capacity(phi.len());
    let mut dvalues = Vec::with_capacity(phi.len());
    let mut radius = Vec::with_capacity(phi.len());
    let mut general: f64 = 0.0;
    let mut zero_potential: f64 = 0.0;
    for ((&s, &w), &dw) in phi.grid.iter().zip(&phi.values).zip(&phi.dvalues) {
        let c = bg.coefficients(s);
        let weight = c.r.powf(-k);
        let psi = w * weight;
        let dpsi = weight / c.lapse * (dw + lambda * w - k * w * c.lapse / c.r);
        if !(psi > 0.0) {
            return Err(Error::Certificate(format!("psi_lambda not positive at s = {s}")));
        }
        if dpsi < -1e-12 * (lambda + 1.0) * psi / c.lapse {
            return Err(Error::Certificate(format!("d_r psi_lambda = {dpsi:e} < 0 at s = {s}")));
        }
        general = general.max(dpsi.abs() * c.lapse / (weight * (lambda + 1.0)));
        zero_potential = zero_potential.max(dpsi.abs() * c.lapse / (lambda * psi));
        values.push(psi);
        dvalues.push(dpsi);
        radius.push(c.r);
    }
    let tf = TestFunction {
        kind: TestFunctionKind::PsiLambda,
        abscissa: Abscissa::Tortoise,
        grid: phi.grid.clone(),
        values,
        dvalues,
        lambda: Some(lambda),
        log_scaled: true,
        radius,
        band: phi.band,
        derivative_constant: Some(general),
    };
    Ok((tf, bg.potential_vanishes().then_some(zero_potential)))
}
