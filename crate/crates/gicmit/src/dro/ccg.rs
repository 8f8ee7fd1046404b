//! The scenario-generation loop, its one-shot oracle, and whole-case
//! drivers for the four planning variants.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::relax::StandardFormModel;
use crate::solverapi::{solve_milp, SolveLimits, SolveStatus};
use crate::uncertainty::{mean_in_hull, support_vertices, GmdSpec, SupportPolytope};

use super::master::{ccg_master, solve_deterministic, DeterministicSolution, YFix};
use super::subproblem::subproblem_enumerate;
use super::{CcgConfig, DroError};

/// Planning variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaseMode {
    /// Plan against the mean field only.
    C0,
    /// Full robust plan.
    C1,
    /// Robust evaluation of the mean-field plan: commitment, switching,
    /// and setpoints inherited from [`CaseMode::C0`].
    C2,
    /// Robust plan with switching disabled: every branch stays in.
    C3,
}

impl CaseMode {
    pub const ALL: [CaseMode; 4] = [CaseMode::C0, CaseMode::C1, CaseMode::C2, CaseMode::C3];

    pub fn as_str(&self) -> &'static str {
        match self {
            CaseMode::C0 => "c0",
            CaseMode::C1 => "c1",
            CaseMode::C2 => "c2",
            CaseMode::C3 => "c3",
        }
    }
}

impl fmt::Display for CaseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CaseMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "c0" => Ok(CaseMode::C0),
            "c1" => Ok(CaseMode::C1),
            "c2" => Ok(CaseMode::C2),
            "c3" => Ok(CaseMode::C3),
            other => Err(format!("unknown case mode '{other}' (expected c0, c1, c2, or c3)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveOutcome {
    Converged,
    IterationLimit,
    TimeLimit,
}

/// Result of a robust solve.
#[derive(Debug, Clone)]
pub struct DroSolution {
    /// Certified plan value: the best upper bound found.
    pub objective: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// Relative bound gap at termination.
    pub gap: f64,
    pub y: Vec<f64>,
    pub lambda: (f64, f64),
    pub eta: f64,
    /// Field vertices enrolled in the master, in enrollment order.
    pub scenario_set: Vec<(f64, f64)>,
    pub lb_trace: Vec<f64>,
    pub ub_trace: Vec<f64>,
    pub iterations: usize,
    /// Vertex attaining the worst priced recourse under the reported plan.
    pub worst_vertex: usize,
    /// Priced recourse value per support vertex under the reported plan.
    pub vertex_values: Vec<f64>,
    /// True when the reported plan's mean-price vector rests on its box;
    /// the optimality certificate is then suspect and the box should be
    /// widened.
    pub lambda_box_binding: bool,
    pub outcome: SolveOutcome,
    pub wall: Duration,
}

fn remaining(deadline: Option<Instant>) -> Option<Duration> {
    deadline.map(|d| d.saturating_duration_since(Instant::now()))
}

/// Alternate master and worst-vertex search until the bounds close.
///
/// The first iteration pins the mean price and the value variable at zero,
/// which reduces the master to pure commitment and sidesteps the
/// unboundedness that an empty scenario set would otherwise cause. Each
/// later iteration enrolls a new vertex (the current worst, or the next
/// strongest when the worst is already enforced), so the scenario set grows
/// every round until the bound gap closes; with every vertex enrolled the
/// master equals the full enumeration and the gap check terminates the
/// loop.
pub fn ccg_solve(
    sf: &StandardFormModel,
    support: &SupportPolytope,
    mu: (f64, f64),
    fix: &YFix,
    cfg: &CcgConfig,
) -> Result<DroSolution, DroError> {
    if support.vertices.is_empty() {
        return Err(DroError::EmptySupport);
    }
    if !mean_in_hull(mu, support) {
        return Err(DroError::MeanOutsideSupport);
    }
    let t0 = Instant::now();
    let deadline = cfg.time_limit.map(|d| t0 + d);
    let mut scen: Vec<(f64, f64)> = Vec::new();
    let mut scen_idx: Vec<usize> = Vec::new();
    let mut lb = f64::NEG_INFINITY;
    let mut ub = f64::INFINITY;
    let mut lb_trace = Vec::new();
    let mut ub_trace = Vec::new();
    let mut best: Option<(Vec<f64>, (f64, f64), f64, usize, Vec<f64>)> = None;
    let mut lambda_box_binding = false;
    let mut outcome = SolveOutcome::IterationLimit;
    let mut iterations = 0;
    let max_iter = support.vertices.len() + cfg.extra_iters;
    for it in 0..max_iter {
        iterations = it + 1;
        let pin = scen.is_empty();
        let cm = ccg_master(sf, &scen, mu, fix, cfg.lambda_box, cfg.eta_box, pin);
        let limits = SolveLimits {
            time_limit: remaining(deadline),
            mip_gap: cfg.master_gap,
            threads: cfg.threads,
        };
        let r = solve_milp(&cm.ir, &limits)?;
        match r.status {
            SolveStatus::Optimal => {}
            SolveStatus::TimeLimit => {
                outcome = SolveOutcome::TimeLimit;
                break;
            }
            status => return Err(DroError::MasterFailed { status }),
        }
        let yhat: Vec<f64> = cm.vars.y.iter().map(|&v| r.value(v)).collect();
        let (le, ln) = cm.vars.lambda.expect("ccg master always carries prices");
        let lam = (r.value(le), r.value(ln));
        let eta_hat = r.value(cm.vars.eta.expect("ccg master always carries the value variable"));
        // Sparse masters legitimately push the price vector to its box (the
        // price is unbounded until enough vertices are enrolled), so the
        // box is only reported when the incumbent plan rests on it.
        let binding =
            lam.0.abs() >= 0.999 * cfg.lambda_box || lam.1.abs() >= 0.999 * cfg.lambda_box;
        lb = lb.max(r.objective);
        lb_trace.push(lb);
        let sub_limits = SolveLimits {
            time_limit: remaining(deadline),
            mip_gap: cfg.master_gap,
            threads: 1,
        };
        // a budget expiring mid-search truncates the loop with the bounds
        // gathered so far instead of surfacing an error
        let sub = match subproblem_enumerate(sf, &yhat, lam, &support.vertices, &sub_limits) {
            Ok(s) => s,
            Err(DroError::SubproblemFailed { status: SolveStatus::TimeLimit }) => {
                outcome = SolveOutcome::TimeLimit;
                break;
            }
            Err(e) => return Err(e),
        };
        let cand = r.objective - eta_hat + sub.worst_value;
        if cand < ub {
            ub = cand;
            lambda_box_binding = binding;
            best = Some((yhat, lam, eta_hat, sub.worst, sub.values.clone()));
        }
        ub_trace.push(ub);
        let gap = (ub - lb) / lb.abs().max(1e-12);
        if gap <= cfg.eps {
            outcome = SolveOutcome::Converged;
            break;
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            outcome = SolveOutcome::TimeLimit;
            break;
        }
        // With the gap still open, a repeated worst vertex means the
        // sparse master priced this round against a stale price vector
        // (typically slammed to its box); enrolling the strongest vertex
        // not yet enforced keeps the bounds moving. Once every vertex is
        // enrolled the master is the full enumeration and the gap check
        // above closes the loop.
        let next = if scen_idx.contains(&sub.worst) {
            (0..support.vertices.len())
                .filter(|j| !scen_idx.contains(j))
                .max_by(|&a, &b| sub.values[a].total_cmp(&sub.values[b]))
        } else {
            Some(sub.worst)
        };
        let Some(j) = next else { continue };
        scen.push(support.vertices[j]);
        scen_idx.push(j);
    }
    let (y, lambda, eta, worst_vertex, vertex_values) =
        best.ok_or(DroError::MasterFailed { status: SolveStatus::TimeLimit })?;
    let gap = (ub - lb) / lb.abs().max(1e-12);
    Ok(DroSolution {
        objective: ub,
        lower_bound: lb,
        upper_bound: ub,
        gap,
        y,
        lambda,
        eta,
        scenario_set: scen,
        lb_trace,
        ub_trace,
        iterations,
        worst_vertex,
        vertex_values,
        lambda_box_binding,
        outcome,
        wall: t0.elapsed(),
    })
}

/// One-shot oracle: the master with every support vertex enrolled from the
/// start. Exact up to the master gap; exponentially sized in principle but
/// fine for the vertex counts used here.
pub fn full_enumeration(
    sf: &StandardFormModel,
    support: &SupportPolytope,
    mu: (f64, f64),
    fix: &YFix,
    cfg: &CcgConfig,
) -> Result<DroSolution, DroError> {
    if support.vertices.is_empty() {
        return Err(DroError::EmptySupport);
    }
    if !mean_in_hull(mu, support) {
        return Err(DroError::MeanOutsideSupport);
    }
    let t0 = Instant::now();
    let cm = ccg_master(sf, &support.vertices, mu, fix, cfg.lambda_box, cfg.eta_box, false);
    let limits = SolveLimits {
        time_limit: cfg.time_limit,
        mip_gap: cfg.master_gap,
        threads: cfg.threads,
    };
    let r = solve_milp(&cm.ir, &limits)?;
    if r.status != SolveStatus::Optimal {
        return Err(DroError::MasterFailed { status: r.status });
    }
    let y: Vec<f64> = cm.vars.y.iter().map(|&v| r.value(v)).collect();
    let (le, ln) = cm.vars.lambda.expect("oracle master carries prices");
    let lambda = (r.value(le), r.value(ln));
    let eta = r.value(cm.vars.eta.expect("oracle master carries the value variable"));
    let lambda_box_binding =
        lambda.0.abs() >= 0.999 * cfg.lambda_box || lambda.1.abs() >= 0.999 * cfg.lambda_box;
    let sub = subproblem_enumerate(sf, &y, lambda, &support.vertices, &limits)?;
    Ok(DroSolution {
        objective: r.objective,
        lower_bound: r.objective,
        upper_bound: r.objective,
        gap: 0.0,
        y,
        lambda,
        eta,
        scenario_set: support.vertices.clone(),
        lb_trace: vec![r.objective],
        ub_trace: vec![r.objective],
        iterations: 1,
        worst_vertex: sub.worst,
        vertex_values: sub.values,
        lambda_box_binding,
        outcome: SolveOutcome::Converged,
        wall: t0.elapsed(),
    })
}

/// Result of one planning variant on one case.
#[derive(Debug, Clone)]
pub struct CaseReport {
    pub mode: CaseMode,
    pub objective: f64,
    pub y: Vec<f64>,
    pub lambda: (f64, f64),
    /// The mean-field baseline, present for [`CaseMode::C0`] and as the
    /// inherited plan of [`CaseMode::C2`].
    pub base: Option<DeterministicSolution>,
    /// The robust solve, absent for [`CaseMode::C0`].
    pub dro: Option<DroSolution>,
    pub wall: Duration,
}

/// Solve one planning variant against a storm parameter set.
pub fn run_case(
    sf: &StandardFormModel,
    spec: &GmdSpec,
    delta_deg: f64,
    mode: CaseMode,
    cfg: &CcgConfig,
) -> Result<CaseReport, DroError> {
    let t0 = Instant::now();
    let support = support_vertices(spec.nu_max, delta_deg)?;
    let det_limits = SolveLimits {
        time_limit: cfg.time_limit,
        mip_gap: cfg.master_gap,
        threads: cfg.threads,
    };
    match mode {
        CaseMode::C0 => {
            let det = solve_deterministic(sf, spec.mu, &YFix::new(), &det_limits)?;
            Ok(CaseReport {
                mode,
                objective: det.objective,
                y: det.y.clone(),
                lambda: (0.0, 0.0),
                base: Some(det),
                dro: None,
                wall: t0.elapsed(),
            })
        }
        CaseMode::C1 => {
            let sol = ccg_solve(sf, &support, spec.mu, &YFix::new(), cfg)?;
            Ok(CaseReport {
                mode,
                objective: sol.objective,
                y: sol.y.clone(),
                lambda: sol.lambda,
                base: None,
                dro: Some(sol),
                wall: t0.elapsed(),
            })
        }
        CaseMode::C2 => {
            let det = solve_deterministic(sf, spec.mu, &YFix::new(), &det_limits)?;
            let mut fix = YFix::new();
            for &j in sf.meta.y_gen_on.values().chain(sf.meta.y_branch_on.values()) {
                fix.insert(j, det.y[j].round());
            }
            for &j in sf.meta.y_setpoint.values() {
                fix.insert(j, det.y[j]);
            }
            let sol = ccg_solve(sf, &support, spec.mu, &fix, cfg)?;
            Ok(CaseReport {
                mode,
                objective: sol.objective,
                y: sol.y.clone(),
                lambda: sol.lambda,
                base: Some(det),
                dro: Some(sol),
                wall: t0.elapsed(),
            })
        }
        CaseMode::C3 => {
            let mut fix = YFix::new();
            for &j in sf.meta.y_branch_on.values() {
                fix.insert(j, 1.0);
            }
            let sol = ccg_solve(sf, &support, spec.mu, &fix, cfg)?;
            Ok(CaseReport {
                mode,
                objective: sol.objective,
                y: sol.y.clone(),
                lambda: sol.lambda,
                base: None,
                dro: Some(sol),
                wall: t0.elapsed(),
            })
        }
    }
}
