//! Positive solutions of the dual linear problems used as test functions.
//!
//! * [`solve_psi0`]: the static solution `psi_0` of `Delta_g psi = V psi`.
//! * [`solve_phi_lambda`]: `phi_lambda'' = (Q + lambda D F + lambda^2) phi_lambda`
//!   in tortoise coordinates, carried as `w = phi_lambda e^{-lambda s}`.
//! * [`psi_lambda`]: the radial eigenfunction `psi_lambda = phi_lambda r^{-(n-1)/2}`.
//! * [`build_ba`]: the superposition `b_a(t, r) = int_0^1 e^{-lambda t} psi_lambda lambda^{a-1} d lambda`.

mod ba;
mod phi;
mod psi0;

pub use ba::{build_ba, check_time_derivative, verify_ba_bounds, BaCertificate, BaOptions, BaTable, PsiFamily, SchwarzschildPsi, UnitPsi};
pub use phi::{phi_start_point, psi_lambda, solve_phi_lambda, PhiOptions};
pub(crate) use phi::integrate_phi as phi_integrate;
pub use psi0::{solve_psi0, Psi0Options};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunctionKind {
    Psi0,
    PhiLambda,
    PsiLambda,
}

/// Which coordinate the sample abscissae are expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    Radius,
    Tortoise,
}

/// Two-sided band `lower <= f / reference <= upper` observed on a window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lower: f64,
    pub upper: f64,
    pub window: (f64, f64),
}

impl Band {
    pub fn ratio(&self) -> f64 {
        self.upper / self.lower
    }

    pub(crate) fn over(grid: &[f64], ratio: &[f64], window: (f64, f64)) -> Result<Self> {
        let mut lower = f64::INFINITY;
        let mut upper = f64::NEG_INFINITY;
        for (&x, &q) in grid.iter().zip(ratio) {
            if x < window.0 || x > window.1 {
                continue;
            }
            if !(q.is_finite() && q > 0.0) {
                return Err(Error::Certificate(format!("test function ratio {q} at abscissa {x} is not positive")));
            }
            lower = lower.min(q);
            upper = upper.max(q);
        }
        if !lower.is_finite() {
            return Err(Error::Certificate(format!("no samples inside window [{}, {}]", window.0, window.1)));
        }
        Ok(Self { lower, upper, window })
    }
}

/// A tabulated test function together with the constants certifying its
/// asymptotic bounds.
///
/// When `log_scaled` is set, `values` and `dvalues` hold the function and its
/// derivative multiplied by `e^{-lambda s}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub kind: TestFunctionKind,
    pub abscissa: Abscissa,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub dvalues: Vec<f64>,
    pub lambda: Option<f64>,
    pub log_scaled: bool,
    /// Areal radius at each node, recorded for tortoise-gridded `psi_lambda`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub radius: Vec<f64>,
    /// Band of the normalised profile (`w` for `phi_lambda`, `psi_lambda r^{(n-1)/2} e^{-lambda s}`
    /// for `psi_lambda`, `psi_0` itself for `psi_0`).
    pub band: Option<Band>,
    /// Recorded constant of the derivative bound (see the constructor docs).
    pub derivative_constant: Option<f64>,
}

impl TestFunction {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Cubic Hermite interpolation of `(value, derivative)` at `x`.
    ///
    /// Only meaningful when `dvalues` is the derivative with respect to the
    /// grid variable, i.e. for `psi_0` and `phi_lambda`.
    pub fn interpolate(&self, x: f64) -> Result<(f64, f64)> {
        if self.kind == TestFunctionKind::PsiLambda {
            return Err(Error::invalid("psi_lambda stores d/dr on a tortoise grid; interpolate phi_lambda instead"));
        }
        let n = self.grid.len();
        if n < 2 || x < self.grid[0] || x > self.grid[n - 1] {
            return Err(Error::domain(format!("abscissa {x} outside the tabulated range")));
        }
        let i = match self.grid.partition_point(|&g| g <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (x0, x1) = (self.grid[i], self.grid[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.dvalues[i] * h, self.dvalues[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let value = (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * d1;
        let deriv = ((6.0 * t2 - 6.0 * t) * y0 + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (-6.0 * t2 + 6.0 * t) * y1 + (3.0 * t2 - 2.0 * t) * d1) / h;
        Ok((value, deriv))
    }

    /// `phi_lambda(s)` recovered from the normalised table.
    pub fn phi_value(&self, s: f64) -> Result<f64> {
        let (w, _) = self.interpolate(s)?;
        let lambda = self.lambda.unwrap_or(0.0);
        Ok(if self.log_scaled { w * (lambda * s).exp() } else { w })
    }

    /// Writes `abscissa,value,dvalue,normalized` rows.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let head = match self.abscissa {
            Abscissa::Radius => "r",
            Abscissa::Tortoise => "s",
        };
        writeln!(out, "{head},value,dvalue,normalized")?;
        for i in 0..self.grid.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{}",
                self.grid[i], self.values[i], self.dvalues[i], self.log_scaled as u8
            )?;
        }
        Ok(())
    }
}

pub(crate) fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    let h = (hi - lo) / n as f64;
    (0..=n).map(|i| if i == n { hi } else { lo + h * i as f64 }).collect()
}
