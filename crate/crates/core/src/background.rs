//! Coefficient fields of the reduced 1+1 dimensional problem.

use crate::geometry::{profiles_unchecked, rw_potential_at, GeometryParams, RadialPoint};

/// Pointwise data of the reduced operator `-d_s^2 + Q + lambda D F` at one `s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients {
    pub r: f64,
    pub lapse: f64,
    pub potential: f64,
    /// Damping times lapse, `D F`.
    pub damping: f64,
}

/// A background on which the test functions and the solver are built.
pub trait Background: Sync {
    fn dim(&self) -> u32;

    fn coefficients(&self, s: f64) -> Coefficients;

    fn half_dim(&self) -> f64 {
        (self.dim() as f64 - 1.0) / 2.0
    }

    fn potential_vanishes(&self) -> bool;
}

/// Exterior Schwarzschild region in tortoise coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schwarzschild {
    pub params: GeometryParams,
}

impl Schwarzschild {
    pub fn new(params: GeometryParams) -> Self {
        Self { params }
    }
}

impl Background for Schwarzschild {
    fn dim(&self) -> u32 {
        self.params.dim
    }

    fn coefficients(&self, s: f64) -> Coefficients {
        match RadialPoint::from_s(&self.params, s) {
            Ok(point) => {
                let (d, _) = profiles_unchecked(&self.params, point.r);
                Coefficients {
                    r: point.r,
                    lapse: point.lapse,
                    potential: rw_potential_at(&self.params, &point),
                    damping: d * point.lapse,
                }
            }
            Err(_) => Coefficients {
                r: f64::NAN,
                lapse: f64::NAN,
                potential: f64::NAN,
                damping: f64::NAN,
            },
        }
    }

    fn potential_vanishes(&self) -> bool {
        self.params.potential_vanishes()
    }
}

/// Flat stand-in with `Q = 0`, `D = 0`, `F = 1` and `r = s`.
///
/// Every construction reduces to closed forms on it; the identification
/// `r = s` only makes sense for `s > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlatStub {
    pub dim: u32,
}

impl Background for FlatStub {
    fn dim(&self) -> u32 {
        self.dim
    }

    fn coefficients(&self, s: f64) -> Coefficients {
        Coefficients {
            r: s,
            lapse: 1.0,
            potential: 0.0,
            damping: 0.0,
        }
    }

    fn potential_vanishes(&self) -> bool {
        true
    }
}
