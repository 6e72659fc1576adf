use crate::error::{Error, Result};
use crate::geometry::{profiles_unchecked, GeometryParams};
use crate::ode::{solve_at, OdeOptions};

use super::{Abscissa, Band, TestFunction, TestFunctionKind};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Psi0Options {
    pub ode: OdeOptions,
    /// Distance from the horizon, in units of `M`, where the series start hands off to the integrator.
    pub start_offset: f64,
    /// Number of log-spaced output samples in `r - 2M`.
    pub samples: usize,
}

impl Default for Psi0Options {
    fn default() -> Self {
        Self {
            ode: OdeOptions::default(),
            start_offset: 1e-5,
            samples: 400,
        }
    }
}

/// Static radial solution of `r^{1-n} (r^{n-1} F psi')' = V psi` regular at
/// the horizon with `psi(2M) = 1`.
///
/// Integrated in `x = r - 2M` with state `(psi, r^{n-1} F psi')`; the flux
/// vanishes at the horizon, which fixes the regular branch. The first
/// `start_offset * M` is covered by a second-order series. The returned band
/// is `[min psi, max psi]` and `derivative_constant` is `sup r psi'`.
pub fn solve_psi0(params: &GeometryParams, r_max: f64, opts: &Psi0Options) -> Result<TestFunction> {
    params.validate()?;
    let a = params.horizon();
    if !(r_max > a) {
        return Err(Error::domain(format!("r_max = {r_max} must exceed 2M = {a}")));
    }
    let n = params.dim as f64;
    let x_end = r_max - a;
    let h = (opts.start_offset * params.mass).min(0.5 * x_end);

    // Series coefficients about x = 0.
    let w0 = a.powf(n - 1.0) * profiles_unchecked(params, a).1;
    let w1 = if params.mu2 == 0.0 {
        0.0
    } else {
        (n - 1.0 - params.gamma) * params.mu2 * a.powf(n - 2.0 - params.gamma)
    };
    let phi1 = w0;
    let c1 = phi1 / a.powf(n - 2.0);
    let phi2 = 0.5 * (w1 + w0 * c1);
    let c2 = 0.5 * (phi2 / a.powf(n - 2.0) - (n - 2.0) * phi1 / a.powf(n - 1.0));
    let y0 = [1.0 + c1 * h + c2 * h * h, phi1 * h + phi2 * h * h];

    let samples = opts.samples.max(2);
    let (lx0, lx1) = (h.ln(), x_end.ln());
    let xs: Vec<f64> = (0..samples)
        .map(|i| {
            if i == 0 {
                h
            } else if i == samples - 1 {
                x_end
            } else {
                (lx0 + (lx1 - lx0) * i as f64 / (samples - 1) as f64).exp()
            }
        })
        .collect();

    let flux_to_slope = |x: f64, flux: f64| {
        let r = a + x;
        flux / (r.powf(n - 2.0) * x)
    };
    let rhs = |x: f64, y: &[f64; 2]| {
        let r = a + x;
        let (_, v) = profiles_unchecked(params, r);
        [flux_to_slope(x, y[1]), r.powf(n - 1.0) * v * y[0]]
    };
    let states = solve_at(rhs, h, y0, &xs, &opts.ode)?;

    let grid: Vec<f64> = xs.iter().map(|x| a + x).collect();
    let values: Vec<f64> = states.iter().map(|y| y[0]).collect();
    let dvalues: Vec<f64> = xs.iter().zip(&states).map(|(&x, y)| flux_to_slope(x, y[1])).collect();

    for (i, (&v, &d)) in values.iter().zip(&dvalues).enumerate() {
        if !(v >= 1.0 - 1e-12) || !(d >= -1e-14 * v) {
            return Err(Error::Certificate(format!(
                "psi_0 lost monotonicity at r = {} (value {v}, slope {d})",
                grid[i]
            )));
        }
    }
    let band = Band::over(&grid, &values, (grid[0], *grid.last().unwrap()))?;
    let derivative_constant = grid.iter().zip(&dvalues).map(|(r, d)| r * d).fold(0.0, f64::max);

    Ok(TestFunction {
        kind: TestFunctionKind::Psi0,
        abscissa: Abscissa::Radius,
        grid,
        values,
        dvalues,
        lambda: None,
        log_scaled: false,
        radius: Vec::new(),
        band: Some(band),
        derivative_constant: Some(derivative_constant),
    })
}
