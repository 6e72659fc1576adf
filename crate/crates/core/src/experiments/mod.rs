//! Amplitude sweeps, lifespan-law fits and comparison with the proved upper bounds.

mod fit;
mod sweep;

pub use fit::{compare_theorem, fit_lifespan, ols, FitResult, LawKind, LineFit, MarginPoint, Verdict};
pub use sweep::{calibrate, eps_ladder, run_sweep, sweep_c3, SweepConfig, SweepRecord};
