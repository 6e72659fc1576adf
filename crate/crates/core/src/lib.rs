//! Semilinear wave equations `box_g u + D u_t + V u = |u|^p` or `|u_t|^p`
//! on the exterior of an n-dimensional Schwarzschild black hole: background
//! geometry, positive test functions, a blow-up solver, proof functionals and
//! lifespan sweeps.

pub mod background;
pub mod certificates;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod ode;
pub mod quadrature;
pub mod solver;
pub mod testfuncs;

pub use background::{Background, Schwarzschild};
pub use certificates::{Cutoffs, FunctionalName, FunctionalReport, SuiteReport, ZReport};
pub use error::{Error, Result};
pub use experiments::{FitResult, LawKind, SweepConfig, SweepRecord, Verdict};
pub use geometry::{CriticalExponents, GeometryParams, LifespanLaw, Nonlinearity, RadialPoint};
pub use solver::{Grid1D, InitialData, RunOptions, RunResult, SolutionHistory};
pub use testfuncs::{BaTable, TestFunction};
