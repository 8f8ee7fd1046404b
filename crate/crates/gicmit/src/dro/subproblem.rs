//! Worst-vertex search at a fixed first stage: direct enumeration of the
//! recourse value across support vertices, and a single dual-side MIP that
//! picks the vertex and its prices in one shot.

use rayon::prelude::*;

use crate::relax::{coupling_dot, Relation, StandardFormModel};
use crate::solverapi::{
    solve_milp, ModelIR, ObjSense, RowSense, SolveLimits, SolveStatus, VarId, VarKind,
};

use super::DroError;

/// Recourse cost at one field vector; `+inf` when no feasible operation
/// exists under the given first stage.
pub fn recourse_value(
    sf: &StandardFormModel,
    y: &[f64],
    omega: (f64, f64),
    limits: &SolveLimits,
) -> Result<f64, DroError> {
    let lp = sf.recourse_lp(y, omega);
    let r = solve_milp(&lp, limits)?;
    match r.status {
        SolveStatus::Optimal => Ok(r.objective),
        SolveStatus::Infeasible => Ok(f64::INFINITY),
        status => Err(DroError::SubproblemFailed { status }),
    }
}

#[derive(Debug, Clone)]
pub struct SubproblemResult {
    /// Priced recourse value `H(y, ω) − λ·ω` per vertex; `+inf` marks an
    /// impossible operation.
    pub values: Vec<f64>,
    /// Index of the maximizing vertex; ties break to the lowest index.
    pub worst: usize,
    pub worst_value: f64,
}

/// Exact worst-vertex search: one recourse solve per support vertex, run
/// in parallel.
pub fn subproblem_enumerate(
    sf: &StandardFormModel,
    y: &[f64],
    lambda: (f64, f64),
    vertices: &[(f64, f64)],
    limits: &SolveLimits,
) -> Result<SubproblemResult, DroError> {
    if vertices.is_empty() {
        return Err(DroError::EmptySupport);
    }
    let values: Vec<f64> = vertices
        .par_iter()
        .map(|&w| {
            recourse_value(sf, y, w, limits).map(|h| h - lambda.0 * w.0 - lambda.1 * w.1)
        })
        .collect::<Result<_, _>>()?;
    let mut worst = 0;
    for (j, &v) in values.iter().enumerate() {
        if v > values[worst] {
            worst = j;
        }
    }
    let worst_value = values[worst];
    Ok(SubproblemResult { values, worst, worst_value })
}

#[derive(Debug, Clone)]
pub struct DualMipOutcome {
    pub worst: usize,
    pub value: f64,
    /// True when a coupling dual sat on its box, meaning the reported value
    /// may undershoot and the box should be widened.
    pub pi_box_binding: bool,
}

/// Dual-side search in one solve. The recourse dual is maximized jointly
/// with a one-hot vertex selector; products of coupling duals with the
/// selector are linearized exactly through box envelopes, which are tight
/// because the selector is binary. Requires feasible recourse at every
/// vertex; an impossible operation makes the dual side unbounded.
///
/// Degenerate optima may park a coupling dual on its box without changing
/// the value (a zero-cost dual ray touches whatever bound it is given).
/// A touched box therefore triggers one retry with the box widened; a
/// value that holds still under widening cannot be box-limited, so the
/// flag stays clear, while a value that moves is reported from the wider
/// solve with the flag set.
pub fn subproblem_dual_mip(
    sf: &StandardFormModel,
    y: &[f64],
    lambda: (f64, f64),
    vertices: &[(f64, f64)],
    pi_box: f64,
    limits: &SolveLimits,
) -> Result<DualMipOutcome, DroError> {
    let first = dual_mip_at(sf, y, lambda, vertices, pi_box, limits)?;
    if !first.pi_box_binding {
        return Ok(first);
    }
    let wide = dual_mip_at(sf, y, lambda, vertices, 8.0 * pi_box, limits)?;
    if (wide.value - first.value).abs() <= 1e-6 * first.value.abs().max(1.0) {
        return Ok(DualMipOutcome { pi_box_binding: false, ..first });
    }
    Ok(DualMipOutcome { pi_box_binding: true, ..wide })
}

fn dual_mip_at(
    sf: &StandardFormModel,
    y: &[f64],
    lambda: (f64, f64),
    vertices: &[(f64, f64)],
    pi_box: f64,
    limits: &SolveLimits,
) -> Result<DualMipOutcome, DroError> {
    if vertices.is_empty() {
        return Err(DroError::EmptySupport);
    }
    let nt = sf.coupling.len();
    let nv = vertices.len();
    let mut m = ModelIR::new(ObjSense::Maximize);
    let gammas: Vec<VarId> = sf
        .recourse
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let lb = match row.rel {
                Relation::Ge => 0.0,
                Relation::Eq => f64::NEG_INFINITY,
            };
            m.add_var(format!("gamma:{r}"), lb, f64::INFINITY, VarKind::Continuous)
        })
        .collect();
    let pis: Vec<VarId> = (0..nt)
        .map(|t| m.add_var(format!("pi:{t}"), -pi_box, pi_box, VarKind::Continuous))
        .collect();
    let betas: Vec<VarId> = (0..nv)
        .map(|j| m.add_var(format!("beta:{j}"), 0.0, 1.0, VarKind::Binary))
        .collect();
    let zetas: Vec<Vec<VarId>> = (0..nv)
        .map(|j| {
            (0..nt)
                .map(|t| {
                    m.add_var(format!("zeta:{j}:{t}"), -pi_box, pi_box, VarKind::Continuous)
                })
                .collect()
        })
        .collect();

    // objective: γ·(h − G ŷ) + Σ ζ_jt · τ_t(ŷ, ω_j) − Σ β_j · λ·ω_j
    for (r, row) in sf.recourse.iter().enumerate() {
        let shift: f64 = row.y.iter().map(|&(j, c)| c * y[j]).sum();
        let hbar = row.rhs - shift;
        if hbar != 0.0 {
            m.add_obj(gammas[r], hbar);
        }
    }
    for (j, &wj) in vertices.iter().enumerate() {
        for (t, row) in sf.coupling.iter().enumerate() {
            let tau = coupling_dot(row, y, wj);
            if tau != 0.0 {
                m.add_obj(zetas[j][t], tau);
            }
        }
        let price = lambda.0 * wj.0 + lambda.1 * wj.1;
        if price != 0.0 {
            m.add_obj(betas[j], -price);
        }
    }

    // dual feasibility: one equality per operating column, since columns
    // are free in the recourse problem
    let mut col_terms: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); sf.n_x()];
    for (r, row) in sf.recourse.iter().enumerate() {
        for &(k, c) in &row.x {
            col_terms[k].push((gammas[r], c));
        }
    }
    for (t, row) in sf.coupling.iter().enumerate() {
        for &(k, c) in &row.w {
            col_terms[k].push((pis[t], c));
        }
    }
    for (k, terms) in col_terms.into_iter().enumerate() {
        m.add_row(format!("dual-feas:{}", sf.x_names[k]), terms, RowSense::Eq, sf.x_cost[k]);
    }
    let one_hot = betas.iter().map(|&bv| (bv, 1.0)).collect();
    m.add_row("pick-one", one_hot, RowSense::Eq, 1.0);
    for j in 0..nv {
        for t in 0..nt {
            let z = zetas[j][t];
            let p = pis[t];
            let bv = betas[j];
            m.add_row(format!("z-lo:{j}:{t}"), vec![(z, 1.0), (bv, pi_box)], RowSense::Ge, 0.0);
            m.add_row(format!("z-hi:{j}:{t}"), vec![(bv, pi_box), (z, -1.0)], RowSense::Ge, 0.0);
            m.add_row(
                format!("z-follow-lo:{j}:{t}"),
                vec![(z, 1.0), (p, -1.0), (bv, -pi_box)],
                RowSense::Ge,
                -pi_box,
            );
            m.add_row(
                format!("z-follow-hi:{j}:{t}"),
                vec![(p, 1.0), (z, -1.0), (bv, -pi_box)],
                RowSense::Ge,
                -pi_box,
            );
        }
    }

    let r = solve_milp(&m, limits)?;
    if r.status != SolveStatus::Optimal {
        return Err(DroError::SubproblemFailed { status: r.status });
    }
    let mut worst = 0;
    for (j, &bv) in betas.iter().enumerate() {
        if r.value(bv) > r.value(betas[worst]) {
            worst = j;
        }
    }
    let pi_box_binding = pis.iter().any(|&p| r.value(p).abs() >= 0.999 * pi_box);
    Ok(DualMipOutcome { worst, value: r.objective, pi_box_binding })
}
