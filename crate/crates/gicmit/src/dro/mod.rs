//! Two-stage distributionally robust planning over storm scenarios.
//!
//! The first stage commits units, switches branches, and posts cost
//! setpoints; the second stage re-dispatches once the storm field is
//! revealed. The ambiguity set pins the field's mean and confines it to a
//! polygonal half-disc, which turns the worst-case expectation into a
//! finite maximum over the polygon's vertices. The loop implemented here
//! alternates a growing scenario master with an exact worst-vertex search
//! until the two bounds meet.

mod ccg;
mod master;
mod subproblem;

pub use ccg::{
    ccg_solve, full_enumeration, run_case, CaseMode, CaseReport, DroSolution, SolveOutcome,
};
pub use master::{
    ccg_master, deterministic_milp, solve_deterministic, CcgMaster, DeterministicSolution,
    MasterVars, YFix,
};
pub use subproblem::{
    recourse_value, subproblem_dual_mip, subproblem_enumerate, DualMipOutcome, SubproblemResult,
};

use std::time::Duration;

use thiserror::Error;

use crate::relax::RelaxError;
use crate::solverapi::{SolveStatus, SolverError};
use crate::uncertainty::UncertaintyError;

#[derive(Debug, Error)]
pub enum DroError {
    #[error(
        "the mean field lies outside the scenario hull, so the plan value is \
         unbounded below; refine the angular spacing"
    )]
    MeanOutsideSupport,
    #[error("the scenario support has no vertices")]
    EmptySupport,
    #[error("master problem ended with status {status:?}")]
    MasterFailed { status: SolveStatus },
    #[error("recourse subproblem ended with status {status:?}")]
    SubproblemFailed { status: SolveStatus },
    #[error(transparent)]
    Relax(#[from] RelaxError),
    #[error(transparent)]
    Uncertainty(#[from] UncertaintyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Knobs of the scenario-generation loop.
#[derive(Debug, Clone)]
pub struct CcgConfig {
    /// Relative bound-gap tolerance for convergence.
    pub eps: f64,
    /// Iteration allowance beyond the number of support vertices.
    pub extra_iters: usize,
    /// Relative MIP gap for master solves.
    pub master_gap: f64,
    /// Box half-width on the mean-price vector; binding values are flagged
    /// on the returned solution.
    pub lambda_box: f64,
    /// Box half-width on the worst-case value variable.
    pub eta_box: f64,
    /// Box half-width on coupling-row duals in the dual-side subproblem.
    pub pi_box: f64,
    /// Threads handed to each master solve; vertex enumeration already
    /// parallelizes across scenarios.
    pub threads: u32,
    /// Wall-clock budget for the whole loop.
    pub time_limit: Option<Duration>,
}

impl Default for CcgConfig {
    fn default() -> Self {
        CcgConfig {
            eps: 1e-4,
            extra_iters: 5,
            master_gap: 1e-6,
            lambda_box: 1e7,
            eta_box: 1e12,
            pi_box: 1e4,
            threads: 1,
            time_limit: None,
        }
    }
}
