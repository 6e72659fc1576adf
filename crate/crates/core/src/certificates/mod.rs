//! Cutoff functions and the integral functionals of the test-function method,
//! evaluated on initial data and on computed solutions.

mod cutoffs;
mod functionals;
mod initial;
mod suite;

pub use cutoffs::{alpha, chi, eta, make_cutoffs, smooth_step, Cutoffs, Jet};
pub use functionals::{glassey_ode_monitor, solution_functional, SpatialWeights, ZReport};
pub use initial::{initial_functionals, lambda0_bound, sphere_area, InitialOptions};
pub use suite::{certificate_suite, Check, SuiteOptions, SuiteReport};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FunctionalName {
    C1,
    C2,
    C3,
    L,
    #[serde(rename = "L_inf")]
    LInf,
    #[serde(rename = "L_2M")]
    L2M,
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub name: FunctionalName,
    pub value: f64,
    /// Horizon `T` for cutoff-dependent functionals.
    pub horizon: Option<f64>,
    /// Relative change of the value under the coarser quadrature.
    pub quadrature_change: f64,
}
