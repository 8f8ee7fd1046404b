//! Solver-facing model intermediate representation and backend dispatch.
//!
//! Optimization models are assembled as a [`ModelIR`]: named variables with
//! bounds and integrality, tagged linear rows, and a linear objective. The
//! IR solves through a pluggable MILP/LP backend; HiGHS is the built-in one.
//! Backend selection reads the `GICMIT_SOLVER` environment variable so runs
//! can be pointed at other engines once bindings exist.

mod highs_backend;
mod ir;
mod text;

pub use ir::{ModelIR, ObjSense, RowDef, RowId, RowSense, SolveLimits, VarDef, VarId, VarKind};
pub use text::emit_model_text;

use std::time::Duration;

use thiserror::Error;

/// Environment variable naming the backend to use.
pub const BACKEND_ENV: &str = "GICMIT_SOLVER";

const KNOWN_BACKENDS: &[&str] = &["highs"];

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("unknown solver backend \"{requested}\"; known backends: {}", KNOWN_BACKENDS.join(", "))]
    UnknownBackend { requested: String },
    #[error("{context}: {message}")]
    Contract { context: &'static str, message: String },
    #[error("solver backend failure: {0}")]
    Backend(String),
}

/// Outcome classification of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    TimeLimit,
}

/// A solve outcome. `objective` includes any constant offset; `primal` is in
/// variable order; `duals` are per-row shadow prices, present only for LP
/// solves; `rel_gap` is the relative optimality gap (0 for exact optima).
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    pub duals: Option<Vec<f64>>,
    pub rel_gap: f64,
    pub wall: Duration,
}

impl SolveResult {
    pub fn value(&self, v: VarId) -> f64 {
        self.primal[v.0]
    }
}

/// Resolve a backend by explicit name; `None` means the default.
pub(crate) fn resolve_backend(name: Option<&str>) -> Result<&'static str, SolverError> {
    match name {
        None => Ok(KNOWN_BACKENDS[0]),
        Some(n) => KNOWN_BACKENDS
            .iter()
            .find(|k| **k == n)
            .copied()
            .ok_or_else(|| SolverError::UnknownBackend { requested: n.to_string() }),
    }
}

fn backend_from_env() -> Result<&'static str, SolverError> {
    match std::env::var(BACKEND_ENV) {
        Ok(name) => resolve_backend(Some(&name)),
        Err(_) => resolve_backend(None),
    }
}

/// Solve a model that may contain integer variables.
pub fn solve_milp(model: &ModelIR, limits: &SolveLimits) -> Result<SolveResult, SolverError> {
    model.validate().map_err(|m| SolverError::Contract { context: "model validation", message: m })?;
    let _backend = backend_from_env()?;
    highs_backend::solve(model, limits, false)
}

/// Solve a continuous model and return row duals. Refuses models with
/// integer variables: relax or fix them first.
pub fn solve_lp_with_duals(model: &ModelIR) -> Result<SolveResult, SolverError> {
    model.validate().map_err(|m| SolverError::Contract { context: "model validation", message: m })?;
    if model.is_mip() {
        return Err(SolverError::Contract {
            context: "LP solve",
            message: "model contains integer variables; duals are only defined for LPs"
                .to_string(),
        });
    }
    let _backend = backend_from_env()?;
    highs_backend::solve(model, &SolveLimits::default(), true)
}
