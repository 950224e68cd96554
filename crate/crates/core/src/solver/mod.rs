//! Fischer-Burmeister reformulation of the mixed complementarity system and
//! a globalized semismooth Newton method for it.

mod diagnostics;
mod fb;
mod jacobian;
mod mcp;
mod multistart;
mod newton;

pub use diagnostics::{stationarity_check, StationarityReport};
pub use fb::{fb_residual, fb_scalar, FbResidual};
pub use jacobian::{generalized_jacobian, GenJacobianElement, KinkSelection};
pub use mcp::FbLinearMcpSolver;
pub use multistart::{
    certify_reform_point, default_starts, solve, LcpSolution, RunSummary, SolveOptions, SolveStatus,
};
pub use newton::{
    newton_iterate, newton_solve, IterationRecord, IterationTrace, MesocSystem, NewtonConfig,
    NewtonRun, NewtonStatus, SemismoothSystem,
};
