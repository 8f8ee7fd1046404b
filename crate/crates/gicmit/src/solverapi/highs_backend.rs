//! Translation of [`ModelIR`] onto the HiGHS solver.

use std::collections::BTreeMap;
use std::time::Instant;

use highs::{HighsModelStatus, RowProblem, Sense};

use super::{ModelIR, ObjSense, RowSense, SolveLimits, SolveResult, SolveStatus, SolverError, VarKind};

pub(crate) fn solve(
    model: &ModelIR,
    limits: &SolveLimits,
    want_duals: bool,
) -> Result<SolveResult, SolverError> {
    let t0 = Instant::now();
    let mut pb = RowProblem::default();
    let mut cols = Vec::with_capacity(model.num_vars());
    for (i, v) in model.vars().iter().enumerate() {
        let obj = model.objective()[i];
        let col = match v.kind {
            VarKind::Continuous => pb.add_column(obj, v.lb..=v.ub),
            VarKind::Binary => pb.add_integer_column(obj, v.lb..=v.ub),
        };
        cols.push(col);
    }
    for r in model.rows() {
        // merge duplicate variable references; HiGHS wants one factor per column
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (v, c) in &r.terms {
            *acc.entry(v.0).or_insert(0.0) += c;
        }
        let factors: Vec<(highs::Col, f64)> =
            acc.into_iter().map(|(i, c)| (cols[i], c)).collect();
        match r.sense {
            RowSense::Ge => pb.add_row(r.rhs.., factors),
            RowSense::Le => pb.add_row(..=r.rhs, factors),
            RowSense::Eq => pb.add_row(r.rhs..=r.rhs, factors),
        };
    }

    let sense = match model.sense {
        ObjSense::Minimize => Sense::Minimise,
        ObjSense::Maximize => Sense::Maximise,
    };
    let mut m = pb.optimise(sense);
    m.make_quiet();
    m.set_option("threads", limits.threads as i32);
    if model.is_mip() {
        m.set_option("mip_rel_gap", limits.mip_gap);
    }
    if let Some(t) = limits.time_limit {
        m.set_option("time_limit", t.as_secs_f64());
    }

    let solved = m
        .try_solve()
        .map_err(|s| SolverError::Backend(format!("solve call failed with status {s:?}")))?;
    let wall = t0.elapsed();
    let status = match solved.status() {
        HighsModelStatus::Optimal => SolveStatus::Optimal,
        HighsModelStatus::Infeasible => SolveStatus::Infeasible,
        HighsModelStatus::Unbounded | HighsModelStatus::UnboundedOrInfeasible => {
            SolveStatus::Unbounded
        }
        HighsModelStatus::ReachedTimeLimit => SolveStatus::TimeLimit,
        other => {
            return Err(SolverError::Backend(format!(
                "unexpected solver status {other:?}"
            )))
        }
    };

    match status {
        SolveStatus::Infeasible | SolveStatus::Unbounded => Ok(SolveResult {
            status,
            objective: f64::NAN,
            primal: Vec::new(),
            duals: None,
            rel_gap: f64::INFINITY,
            wall,
        }),
        _ => {
            let solution = solved.get_solution();
            let rel_gap = if model.is_mip() {
                let g = solved.mip_gap();
                if g.is_finite() {
                    g
                } else if status == SolveStatus::Optimal {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                0.0
            };
            let duals = if want_duals && !model.is_mip() {
                Some(solution.dual_rows().to_vec())
            } else {
                None
            };
            Ok(SolveResult {
                status,
                objective: solved.objective_value() + model.obj_offset(),
                primal: solution.columns().to_vec(),
                duals,
                rel_gap,
                wall,
            })
        }
    }
}
