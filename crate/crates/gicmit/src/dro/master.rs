//! Mixed-integer masters: the single-scenario plan-and-operate model and
//! the growing scenario master of the generation loop.

use std::collections::BTreeMap;

use crate::relax::StandardFormModel;
use crate::solverapi::{
    solve_milp, ModelIR, ObjSense, RowSense, SolveLimits, SolveStatus, VarId, VarKind,
};

use super::DroError;

/// First-stage fixings: `y` column index → frozen value. Binary columns
/// are rounded before fixing.
pub type YFix = BTreeMap<usize, f64>;

/// Variable handles of an assembled master.
#[derive(Debug, Clone)]
pub struct MasterVars {
    pub y: Vec<VarId>,
    pub lambda: Option<(VarId, VarId)>,
    pub eta: Option<VarId>,
    /// One operating copy per enrolled scenario.
    pub x: Vec<Vec<VarId>>,
}

fn add_first_stage(m: &mut ModelIR, sf: &StandardFormModel, fix: &YFix) -> Vec<VarId> {
    let ys: Vec<VarId> = sf
        .y_defs
        .iter()
        .enumerate()
        .map(|(j, d)| {
            let kind = if d.binary { VarKind::Binary } else { VarKind::Continuous };
            match fix.get(&j) {
                Some(&v) => {
                    let v = if d.binary { v.round() } else { v };
                    m.add_var(d.name.clone(), v, v, kind)
                }
                None => m.add_var(d.name.clone(), d.lb, d.ub, kind),
            }
        })
        .collect();
    for (j, &c) in sf.y_cost.iter().enumerate() {
        if c != 0.0 {
            m.add_obj(ys[j], c);
        }
    }
    for r in &sf.first_stage {
        let terms = r.y.iter().map(|&(j, c)| (ys[j], c)).collect();
        m.add_row(r.tag.clone(), terms, r.rel.to_row_sense(), r.rhs);
    }
    ys
}

fn add_scenario_block(
    m: &mut ModelIR,
    sf: &StandardFormModel,
    ys: &[VarId],
    omega: (f64, f64),
    label: &str,
) -> Vec<VarId> {
    let xs: Vec<VarId> = sf
        .x_names
        .iter()
        .map(|n| {
            m.add_var(
                format!("{n}@{label}"),
                f64::NEG_INFINITY,
                f64::INFINITY,
                VarKind::Continuous,
            )
        })
        .collect();
    for r in &sf.recourse {
        let mut terms: Vec<(VarId, f64)> = r.y.iter().map(|&(j, c)| (ys[j], c)).collect();
        terms.extend(r.x.iter().map(|&(k, c)| (xs[k], c)));
        m.add_row(format!("{}@{label}", r.tag), terms, r.rel.to_row_sense(), r.rhs);
    }
    for r in &sf.coupling {
        let mut terms: Vec<(VarId, f64)> = Vec::new();
        for &(j, c) in &r.t_east {
            terms.push((ys[j], omega.0 * c));
        }
        for &(j, c) in &r.t_north {
            terms.push((ys[j], omega.1 * c));
        }
        for &(k, c) in &r.w {
            terms.push((xs[k], -c));
        }
        m.add_row(format!("{}@{label}", r.tag), terms, RowSense::Eq, 0.0);
    }
    xs
}

/// Commit, switch, and dispatch against one fixed field vector, minimizing
/// first-stage plus recourse cost together.
pub fn deterministic_milp(
    sf: &StandardFormModel,
    omega: (f64, f64),
    fix: &YFix,
) -> (ModelIR, MasterVars) {
    let mut m = ModelIR::new(ObjSense::Minimize);
    let ys = add_first_stage(&mut m, sf, fix);
    let xs = add_scenario_block(&mut m, sf, &ys, omega, "det");
    for (k, &c) in sf.x_cost.iter().enumerate() {
        if c != 0.0 {
            m.add_obj(xs[k], c);
        }
    }
    let vars = MasterVars { y: ys, lambda: None, eta: None, x: vec![xs] };
    (m, vars)
}

#[derive(Debug, Clone)]
pub struct DeterministicSolution {
    pub objective: f64,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub rel_gap: f64,
}

pub fn solve_deterministic(
    sf: &StandardFormModel,
    omega: (f64, f64),
    fix: &YFix,
    limits: &SolveLimits,
) -> Result<DeterministicSolution, DroError> {
    let (m, vars) = deterministic_milp(sf, omega, fix);
    let r = solve_milp(&m, limits)?;
    if r.status != SolveStatus::Optimal {
        return Err(DroError::MasterFailed { status: r.status });
    }
    Ok(DeterministicSolution {
        objective: r.objective,
        y: vars.y.iter().map(|&v| r.value(v)).collect(),
        x: vars.x[0].iter().map(|&v| r.value(v)).collect(),
        rel_gap: r.rel_gap,
    })
}

/// Scenario master: the first stage plus one operating copy per enrolled
/// field vertex, with the worst-case value variable cut from below by the
/// priced cost of every copy.
pub struct CcgMaster {
    pub ir: ModelIR,
    pub vars: MasterVars,
}

/// `pin_price_to_zero` freezes the mean-price vector and the value
/// variable at zero; with no scenarios enrolled this leaves the pure
/// commitment problem, whose optimum is a valid global lower bound because
/// recourse costs are nonnegative and the mean sits inside the hull.
pub fn ccg_master(
    sf: &StandardFormModel,
    scenarios: &[(f64, f64)],
    mu: (f64, f64),
    fix: &YFix,
    lambda_box: f64,
    eta_box: f64,
    pin_price_to_zero: bool,
) -> CcgMaster {
    let mut m = ModelIR::new(ObjSense::Minimize);
    let ys = add_first_stage(&mut m, sf, fix);
    let (lam_lo, lam_hi, eta_lo, eta_hi) = if pin_price_to_zero {
        (0.0, 0.0, 0.0, 0.0)
    } else {
        (-lambda_box, lambda_box, -eta_box, eta_box)
    };
    let le = m.add_var("lambda_e", lam_lo, lam_hi, VarKind::Continuous);
    let ln = m.add_var("lambda_n", lam_lo, lam_hi, VarKind::Continuous);
    let eta = m.add_var("eta", eta_lo, eta_hi, VarKind::Continuous);
    m.add_obj(le, mu.0);
    m.add_obj(ln, mu.1);
    m.add_obj(eta, 1.0);
    let mut all_x = Vec::new();
    for (l, &omega) in scenarios.iter().enumerate() {
        let label = format!("s{l}");
        let xs = add_scenario_block(&mut m, sf, &ys, omega, &label);
        let mut terms: Vec<(VarId, f64)> = vec![(eta, 1.0), (le, omega.0), (ln, omega.1)];
        for (k, &c) in sf.x_cost.iter().enumerate() {
            if c != 0.0 {
                terms.push((xs[k], -c));
            }
        }
        m.add_row(format!("value-cut@{label}"), terms, RowSense::Ge, 0.0);
        all_x.push(xs);
    }
    CcgMaster {
        ir: m,
        vars: MasterVars { y: ys, lambda: Some((le, ln)), eta: Some(eta), x: all_x },
    }
}
