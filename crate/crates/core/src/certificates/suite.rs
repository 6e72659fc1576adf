use serde::{Deserialize, Serialize};

use crate::background::Schwarzschild;
use crate::error::Result;
use crate::geometry::{GeometryParams, Nonlinearity};
use crate::solver::{make_initial_data, run, Grid1D, RunOptions};
use crate::testfuncs::{
    build_ba, check_time_derivative, phi_start_point, psi_lambda, solve_phi_lambda, solve_psi0, verify_ba_bounds,
    BaOptions, PhiOptions, Psi0Options, SchwarzschildPsi,
};

use super::cutoffs::{make_cutoffs, Cutoffs};
use super::initial::{initial_functionals, lambda0_bound, InitialOptions};

/// One pass/fail line of the certificate suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: value <= bound,
            value,
            bound,
            detail: detail.into(),
        }
    }

    fn at_least(name: impl Into<String>, value: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: value >= bound,
            value,
            bound,
            detail: detail.into(),
        }
    }

    fn failed(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: false,
            value: f64::NAN,
            bound: f64::NAN,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub params: GeometryParams,
    pub p: f64,
    pub kind: Nonlinearity,
    pub lambda0: f64,
    pub checks: Vec<Check>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub lambdas: Vec<f64>,
    /// Tortoise window of the `phi_lambda` band.
    pub band_window: (f64, f64),
    pub band_ceiling: f64,
    /// `lambda_0`; `1.1` times the admissibility bound when `None`.
    pub lambda0: Option<f64>,
    pub support_radius: f64,
    pub ba_exponent: f64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            lambdas: vec![0.5, 1.0, 2.0],
            band_window: (-60.0, 200.0),
            band_ceiling: 100.0,
            lambda0: None,
            support_radius: 2.0,
            ba_exponent: 0.5,
        }
    }
}

fn phi_checks(params: &GeometryParams, lambda: f64, opts: &SuiteOptions, out: &mut Vec<Check>) {
    let bg = Schwarzschild::new(*params);
    let (lo, hi) = opts.band_window;
    let s_min = phi_start_point(&bg, lambda, 1e-12).min(lo);
    let popts = PhiOptions {
        band_window: Some(opts.band_window),
        band_ceiling: None,
        ..PhiOptions::default()
    };
    let phi = match solve_phi_lambda(&bg, lambda, s_min, hi, &popts) {
        Ok(phi) => phi,
        Err(e) => return out.push(Check::failed(format!("phi band (lambda = {lambda})"), e.to_string())),
    };
    let ratio = phi.band.map_or(f64::NAN, |b| b.ratio());
    out.push(Check::at_most(
        format!("phi band (lambda = {lambda})"),
        ratio,
        opts.band_ceiling,
        format!("c2/c1 of phi e^(-lambda s) over s in [{lo}, {hi}]"),
    ));
    match psi_lambda(&bg, lambda, &phi) {
        Ok((psi, _)) => {
            let min = psi.dvalues.iter().copied().fold(f64::INFINITY, f64::min);
            out.push(Check::at_least(
                format!("psi radial derivative (lambda = {lambda})"),
                min,
                -1e-12,
                "min of e^(-lambda s) d_r psi over the nodes",
            ));
        }
        Err(e) => out.push(Check::failed(format!("psi radial derivative (lambda = {lambda})"), e.to_string())),
    }
}

fn cutoff_checks(cut: &Cutoffs, out: &mut Vec<Check>) {
    let t = cut.horizon;
    let mut defect: f64 = 0.0;
    for i in 0..=100 {
        let x = i as f64 / 100.0;
        defect = defect.max((cut.eta(x * t / 3.0).value - 1.0).abs());
        defect = defect.max(cut.eta(t * (1.0 + x)).value.abs());
        defect = defect.max(cut.alpha(x * t / 8.0).value.abs());
        defect = defect.max((cut.alpha(t * (0.25 + x)).value - 1.0).abs());
        defect = defect.max((cut.chi(x * 0.75 * t).value - 1.0).abs());
        defect = defect.max(cut.chi(t * (5.0 / 6.0 + x)).value.abs());
    }
    out.push(Check::at_most("cutoff plateaus", defect, 0.0, "largest deviation from the exact plateau values"));
    let rise = (0..=4000)
        .map(|i| cut.eta(t * i as f64 / 4000.0).d1)
        .fold(f64::NEG_INFINITY, f64::max);
    out.push(Check::at_most("eta non-increasing", rise, 0.0, "max of d_t eta_T"));
    let (c1, c2) = cut.derivative_loss(4000);
    out.push(Check::at_most(
        "cutoff derivative loss",
        c1.max(c2),
        f64::MAX,
        "max T |d eta_T^q| / eta_T^(q-2) and T^2 |d^2 eta_T^q| / eta_T^(q-2) (finite)",
    ));
}

/// Runs every certificate for one background and nonlinearity:
/// `phi_lambda` bands and the sign of `d_r psi_lambda`, monotonicity of `psi_0`,
/// the `b_a` bounds and `d_t b_a = -b_{a+1}`, cutoff plateaus and derivative loss,
/// positivity of `C1`, `C2`, `C3`, and light-cone containment on a short run.
pub fn certificate_suite(params: &GeometryParams, p: f64, kind: Nonlinearity, opts: &SuiteOptions) -> Result<SuiteReport> {
    params.validate()?;
    let lambda0 = opts.lambda0.unwrap_or(1.1 * lambda0_bound(params.mass, p));
    let mut checks = Vec::new();

    for &lambda in &opts.lambdas {
        phi_checks(params, lambda, opts, &mut checks);
    }

    match solve_psi0(params, 200.0, &Psi0Options::default()) {
        Ok(psi0) => {
            let min = psi0.dvalues.iter().copied().fold(f64::INFINITY, f64::min);
            checks.push(Check::at_least("psi0 non-decreasing", min, 0.0, "min of d_r psi_0 on [2M, 200]"));
        }
        Err(e) => checks.push(Check::failed("psi0 non-decreasing", e.to_string())),
    }

    let a = opts.ba_exponent;
    if a < params.half_dim() {
        let split = params.regime_split();
        let t_grid = [10.0, 20.0, 40.0];
        let s_grid: Vec<f64> = (0..12).map(|i| split + 3.6 * i as f64).collect();
        let family = SchwarzschildPsi::new(Schwarzschild::new(*params));
        let built = build_ba(&family, a, opts.support_radius, &t_grid, &s_grid, &BaOptions::default()).and_then(|ta| {
            let ta1 = build_ba(&family, a + 1.0, opts.support_radius, &t_grid, &s_grid, &BaOptions::default())?;
            Ok((verify_ba_bounds(&ta, params)?, check_time_derivative(&ta, &ta1)?))
        });
        match built {
            Ok((cert, defect)) => {
                checks.push(Check::at_most(
                    format!("b_a band (a = {a})"),
                    cert.band_ratio,
                    50.0,
                    "max/min of b_a (t+R)^a in the far cone",
                ));
                checks.push(Check::at_most(
                    format!("d_t b_a = -b_(a+1) (a = {a})"),
                    defect,
                    1e-7,
                    "largest relative defect",
                ));
            }
            Err(e) => checks.push(Check::failed(format!("b_a (a = {a})"), e.to_string())),
        }
    }

    let horizon = 36.0 * opts.support_radius;
    let cut = make_cutoffs(horizon, p)?;
    cutoff_checks(&cut, &mut checks);

    let data = make_initial_data(1.0, opts.support_radius, None)?;
    match initial_functionals(params, &data, lambda0, &cut, &InitialOptions::new(p)) {
        Ok(reports) => {
            for r in reports {
                checks.push(Check {
                    name: format!("{:?} > 0", r.name),
                    passed: r.value > 0.0,
                    value: r.value,
                    bound: 0.0,
                    detail: format!("unit amplitude data, lambda_0 = {lambda0}"),
                });
            }
        }
        Err(e) => checks.push(Check::failed("initial functionals", e.to_string())),
    }

    let cone = Grid1D::for_cone(0.02, 0.9, 20.0, opts.support_radius)
        .and_then(|grid| run(params, &grid, &make_initial_data(1e-3, opts.support_radius, None)?, &RunOptions::new(kind, p)));
    match cone {
        Ok(res) => {
            let margin = res.cone.map_or(f64::NAN, |c| c.worst_margin);
            checks.push(Check::at_most(
                "light-cone containment",
                margin,
                0.0,
                "max over outputs of support extent - (t + R + 2 ds), t <= 20",
            ));
        }
        Err(e) => checks.push(Check::failed("light-cone containment", e.to_string())),
    }

    let passed = checks.iter().all(|c| c.passed);
    Ok(SuiteReport {
        params: *params,
        p,
        kind,
        lambda0,
        checks,
        passed,
    })
}
