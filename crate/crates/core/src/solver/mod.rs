//! Explicit finite-difference evolution of the reduced radial equation
//! `v_tt - v_ss + Q v + F D v_t = F J^{p-1} N` with `N = |v|^p` or `|v_t|^p`.

mod evolve;
mod grid;

pub use evolve::{
    energy, rhs_nonlinearity, run, run_refined, run_with_tables, support_extent, ConeCheck, ConeViolation, DiagnosticRow,
    Refinement, RunOptions, RunResult, SnapshotOptions, SolutionHistory,
};
pub use grid::{bump, make_initial_data, schwarzschild_tables, Grid1D, InitialData, Tables};
