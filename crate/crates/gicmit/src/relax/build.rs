//! Assembly of the full two-stage model in standard form.
//!
//! First-stage rows constrain only the commitment/switching vector `y`;
//! recourse rows couple `y` with the operating vector `x`; coupling rows
//! are the storm-current Ohm equalities whose `y` coefficients scale with
//! the realized field vector. Everything downstream (deterministic
//! solves, scenario masters, recourse duals) is assembled from these
//! blocks, so every operating-variable bound lives here as an explicit
//! row and the `x` columns themselves are free.

use std::collections::{BTreeMap, BTreeSet};

use super::{
    gic_bilinear_relax, lin_points, mccormick, perspective_oa, thermal_oa, trig_product_relax,
    RelaxConfig, RelaxError,
};
use crate::netmodel::{DcEdgeKind, PowerCase, S_BASE_MVA};
use crate::solverapi::{ModelIR, ObjSense, RowSense, VarKind};

/// Row relation; inequalities are always written as `lhs ≥ rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Ge,
    Eq,
}

impl Relation {
    pub fn to_row_sense(self) -> RowSense {
        match self {
            Relation::Ge => RowSense::Ge,
            Relation::Eq => RowSense::Eq,
        }
    }
}

/// A commitment/switching variable.
#[derive(Debug, Clone)]
pub struct YVarDef {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub binary: bool,
}

/// First-stage row `Σ aᵤ·yᵤ {≥,=} rhs`.
#[derive(Debug, Clone)]
pub struct FirstStageRow {
    pub tag: String,
    pub y: Vec<(usize, f64)>,
    pub rel: Relation,
    pub rhs: f64,
}

/// Recourse row `Σ gᵤ·yᵤ + Σ eₖ·xₖ {≥,=} rhs`.
#[derive(Debug, Clone)]
pub struct RecourseRow {
    pub tag: String,
    pub y: Vec<(usize, f64)>,
    pub x: Vec<(usize, f64)>,
    pub rel: Relation,
    pub rhs: f64,
}

/// Storm-coupling equality `(ω_E·t_east + ω_N·t_north)·y = Σ wₖ·xₖ`.
#[derive(Debug, Clone)]
pub struct CouplingRow {
    pub tag: String,
    pub t_east: Vec<(usize, f64)>,
    pub t_north: Vec<(usize, f64)>,
    pub w: Vec<(usize, f64)>,
}

/// Index registry: entity id → column position, one map per block.
#[derive(Debug, Clone, Default)]
pub struct ModelMeta {
    pub y_gen_on: BTreeMap<usize, usize>,
    pub y_branch_on: BTreeMap<usize, usize>,
    pub y_setpoint: BTreeMap<usize, usize>,
    pub y_setpoint_sq: BTreeMap<usize, usize>,
    pub x_gen_p: BTreeMap<usize, usize>,
    pub x_gen_q: BTreeMap<usize, usize>,
    pub x_deviation: BTreeMap<usize, usize>,
    pub x_deviation_sq: BTreeMap<usize, usize>,
    pub x_flow_p_fwd: BTreeMap<usize, usize>,
    pub x_flow_p_rev: BTreeMap<usize, usize>,
    pub x_flow_q_fwd: BTreeMap<usize, usize>,
    pub x_flow_q_rev: BTreeMap<usize, usize>,
    pub x_volt: BTreeMap<usize, usize>,
    pub x_volt_sq: BTreeMap<usize, usize>,
    pub x_volt_sq_fwd: BTreeMap<usize, usize>,
    pub x_volt_sq_rev: BTreeMap<usize, usize>,
    pub x_cos_prod: BTreeMap<usize, usize>,
    pub x_sin_prod: BTreeMap<usize, usize>,
    pub x_shed_p_pos: BTreeMap<usize, usize>,
    pub x_shed_p_neg: BTreeMap<usize, usize>,
    pub x_shed_q_pos: BTreeMap<usize, usize>,
    pub x_shed_q_neg: BTreeMap<usize, usize>,
    pub x_dc_potential: BTreeMap<usize, usize>,
    pub x_dc_current: BTreeMap<usize, usize>,
    pub x_gate_drop: BTreeMap<usize, usize>,
    pub x_eff_gic: BTreeMap<usize, usize>,
    pub x_gic_heat: BTreeMap<usize, usize>,
    pub x_qloss: BTreeMap<usize, usize>,
    /// Box half-width used for DC potential differences, volts.
    pub drop_bound: f64,
}

impl ModelMeta {
    /// Every operating-variable block, labelled; the union of the maps
    /// covers the `x` columns exactly once.
    pub fn x_blocks(&self) -> Vec<(&'static str, &BTreeMap<usize, usize>)> {
        vec![
            ("gen_p", &self.x_gen_p),
            ("gen_q", &self.x_gen_q),
            ("deviation", &self.x_deviation),
            ("deviation_sq", &self.x_deviation_sq),
            ("flow_p_fwd", &self.x_flow_p_fwd),
            ("flow_p_rev", &self.x_flow_p_rev),
            ("flow_q_fwd", &self.x_flow_q_fwd),
            ("flow_q_rev", &self.x_flow_q_rev),
            ("volt", &self.x_volt),
            ("volt_sq", &self.x_volt_sq),
            ("volt_sq_fwd", &self.x_volt_sq_fwd),
            ("volt_sq_rev", &self.x_volt_sq_rev),
            ("cos_prod", &self.x_cos_prod),
            ("sin_prod", &self.x_sin_prod),
            ("shed_p_pos", &self.x_shed_p_pos),
            ("shed_p_neg", &self.x_shed_p_neg),
            ("shed_q_pos", &self.x_shed_q_pos),
            ("shed_q_neg", &self.x_shed_q_neg),
            ("dc_potential", &self.x_dc_potential),
            ("dc_current", &self.x_dc_current),
            ("gate_drop", &self.x_gate_drop),
            ("eff_gic", &self.x_eff_gic),
            ("gic_heat", &self.x_gic_heat),
            ("qloss", &self.x_qloss),
        ]
    }

    pub fn y_blocks(&self) -> Vec<(&'static str, &BTreeMap<usize, usize>)> {
        vec![
            ("gen_on", &self.y_gen_on),
            ("branch_on", &self.y_branch_on),
            ("setpoint", &self.y_setpoint),
            ("setpoint_sq", &self.y_setpoint_sq),
        ]
    }
}

/// The assembled two-stage model.
#[derive(Debug, Clone)]
pub struct StandardFormModel {
    pub y_defs: Vec<YVarDef>,
    pub x_names: Vec<String>,
    /// First-stage objective over `y`.
    pub y_cost: Vec<f64>,
    /// Recourse objective over `x`.
    pub x_cost: Vec<f64>,
    pub first_stage: Vec<FirstStageRow>,
    pub recourse: Vec<RecourseRow>,
    pub coupling: Vec<CouplingRow>,
    pub meta: ModelMeta,
}

impl StandardFormModel {
    pub fn n_y(&self) -> usize {
        self.y_defs.len()
    }

    pub fn n_x(&self) -> usize {
        self.x_names.len()
    }

    /// Dimensional consistency of every stored block.
    pub fn validate(&self) -> Result<(), RelaxError> {
        let ny = self.n_y();
        let nx = self.n_x();
        if self.y_cost.len() != ny || self.x_cost.len() != nx {
            return Err(RelaxError::BadCase("cost vector length mismatch".into()));
        }
        let check_y = |terms: &[(usize, f64)], tag: &str| -> Result<(), RelaxError> {
            for &(j, c) in terms {
                if j >= ny || !c.is_finite() {
                    return Err(RelaxError::BadCase(format!("row {tag}: bad y term ({j}, {c})")));
                }
            }
            Ok(())
        };
        let check_x = |terms: &[(usize, f64)], tag: &str| -> Result<(), RelaxError> {
            for &(k, c) in terms {
                if k >= nx || !c.is_finite() {
                    return Err(RelaxError::BadCase(format!("row {tag}: bad x term ({k}, {c})")));
                }
            }
            Ok(())
        };
        for r in &self.first_stage {
            check_y(&r.y, &r.tag)?;
        }
        for r in &self.recourse {
            check_y(&r.y, &r.tag)?;
            check_x(&r.x, &r.tag)?;
        }
        for r in &self.coupling {
            check_y(&r.t_east, &r.tag)?;
            check_y(&r.t_north, &r.tag)?;
            check_x(&r.w, &r.tag)?;
            if r.w.is_empty() {
                return Err(RelaxError::BadCase(format!("coupling row {} has no x side", r.tag)));
            }
        }
        // the registry must cover the x columns exactly once
        let mut seen = vec![false; nx];
        for (block, map) in self.meta.x_blocks() {
            for (&id, &k) in map {
                if k >= nx || seen[k] {
                    return Err(RelaxError::BadCase(format!(
                        "registry block {block} id {id} maps to bad column {k}"
                    )));
                }
                seen[k] = true;
            }
        }
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(RelaxError::BadCase(format!(
                "column {k} ({}) missing from the registry",
                self.x_names[k]
            )));
        }
        Ok(())
    }

    /// CSV dump of every row: index, block, tag, variables touched.
    pub fn registry_csv(&self) -> String {
        let mut out = String::from("row,block,tag,vars\n");
        let mut idx = 0usize;
        let ynames = |terms: &[(usize, f64)]| -> Vec<String> {
            terms.iter().map(|&(j, _)| self.y_defs[j].name.clone()).collect()
        };
        let xnames = |terms: &[(usize, f64)]| -> Vec<String> {
            terms.iter().map(|&(k, _)| self.x_names[k].clone()).collect()
        };
        for r in &self.first_stage {
            out.push_str(&format!("{idx},first-stage,{},{}\n", r.tag, ynames(&r.y).join(";")));
            idx += 1;
        }
        for r in &self.recourse {
            let mut vars = ynames(&r.y);
            vars.extend(xnames(&r.x));
            out.push_str(&format!("{idx},recourse,{},{}\n", r.tag, vars.join(";")));
            idx += 1;
        }
        for r in &self.coupling {
            let mut vars = ynames(&r.t_east);
            vars.extend(ynames(&r.t_north));
            vars.extend(xnames(&r.w));
            vars.dedup();
            out.push_str(&format!("{idx},coupling,{},{}\n", r.tag, vars.join(";")));
            idx += 1;
        }
        out
    }

    /// The recourse problem for a fixed first stage and realized field, as
    /// a ready-to-solve LP over the free `x` columns. Rows appear in block
    /// order, all recourse rows first and then the coupling equalities, so
    /// a dual vector splits at `self.recourse.len()`.
    pub fn recourse_lp(&self, y: &[f64], omega: (f64, f64)) -> ModelIR {
        assert_eq!(y.len(), self.n_y(), "first-stage vector has the wrong length");
        let mut m = ModelIR::new(ObjSense::Minimize);
        let xs: Vec<_> = self
            .x_names
            .iter()
            .map(|n| m.add_var(n.clone(), f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous))
            .collect();
        for (k, &c) in self.x_cost.iter().enumerate() {
            if c != 0.0 {
                m.add_obj(xs[k], c);
            }
        }
        for r in &self.recourse {
            let shift: f64 = r.y.iter().map(|&(j, c)| c * y[j]).sum();
            let terms = r.x.iter().map(|&(k, c)| (xs[k], c)).collect();
            m.add_row(r.tag.clone(), terms, r.rel.to_row_sense(), r.rhs - shift);
        }
        for r in &self.coupling {
            let rhs = coupling_dot(r, y, omega);
            let terms = r.w.iter().map(|&(k, c)| (xs[k], c)).collect();
            m.add_row(r.tag.clone(), terms, RowSense::Eq, rhs);
        }
        m
    }

    /// Worst constraint violation of a candidate point across all three
    /// blocks; zero (up to float noise) means the point is feasible.
    pub fn point_violation(&self, y: &[f64], x: &[f64], omega: (f64, f64)) -> f64 {
        let dot_y = |terms: &[(usize, f64)]| -> f64 {
            terms.iter().map(|&(j, c)| c * y[j]).sum()
        };
        let dot_x = |terms: &[(usize, f64)]| -> f64 {
            terms.iter().map(|&(k, c)| c * x[k]).sum()
        };
        let mut worst = 0.0f64;
        let mut push = |lhs: f64, rel: Relation, rhs: f64| {
            let v = match rel {
                Relation::Ge => (rhs - lhs).max(0.0),
                Relation::Eq => (lhs - rhs).abs(),
            };
            worst = worst.max(v);
        };
        for r in &self.first_stage {
            push(dot_y(&r.y), r.rel, r.rhs);
        }
        for r in &self.recourse {
            push(dot_y(&r.y) + dot_x(&r.x), r.rel, r.rhs);
        }
        for r in &self.coupling {
            push(dot_x(&r.w), Relation::Eq, coupling_dot(r, y, omega));
        }
        worst
    }
}

/// Value of the storm-scaled side `(ω_E·t_east + ω_N·t_north)·y`.
pub(crate) fn coupling_dot(row: &CouplingRow, y: &[f64], omega: (f64, f64)) -> f64 {
    let e: f64 = row.t_east.iter().map(|&(j, c)| c * y[j]).sum();
    let n: f64 = row.t_north.iter().map(|&(j, c)| c * y[j]).sum();
    omega.0 * e + omega.1 * n
}

struct Builder {
    y_defs: Vec<YVarDef>,
    x_names: Vec<String>,
    y_cost: Vec<f64>,
    x_cost: Vec<f64>,
    first_stage: Vec<FirstStageRow>,
    recourse: Vec<RecourseRow>,
    coupling: Vec<CouplingRow>,
    meta: ModelMeta,
}

impl Builder {
    fn y_var(&mut self, name: String, lb: f64, ub: f64, binary: bool, cost: f64) -> usize {
        let j = self.y_defs.len();
        self.y_defs.push(YVarDef { name, lb, ub, binary });
        self.y_cost.push(cost);
        j
    }

    fn x_var(&mut self, name: String, cost: f64) -> usize {
        let k = self.x_names.len();
        self.x_names.push(name);
        self.x_cost.push(cost);
        k
    }

    fn fs(&mut self, tag: String, y: Vec<(usize, f64)>, rel: Relation, rhs: f64) {
        self.first_stage.push(FirstStageRow { tag, y: drop_zero(y), rel, rhs });
    }

    fn rc(&mut self, tag: String, y: Vec<(usize, f64)>, x: Vec<(usize, f64)>, rel: Relation, rhs: f64) {
        self.recourse.push(RecourseRow { tag, y: drop_zero(y), x: drop_zero(x), rel, rhs });
    }
}

fn drop_zero(terms: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    terms.into_iter().filter(|&(_, c)| c != 0.0).collect()
}

/// Build the complete two-stage standard form for a case.
pub fn build_standard_form(
    case: &PowerCase,
    cfg: &RelaxConfig,
) -> Result<StandardFormModel, RelaxError> {
    cfg.validate()?;
    case.validate().map_err(|e| RelaxError::BadCase(e.to_string()))?;
    let mut b = Builder {
        y_defs: Vec::new(),
        x_names: Vec::new(),
        y_cost: Vec::new(),
        x_cost: Vec::new(),
        first_stage: Vec::new(),
        recourse: Vec::new(),
        coupling: Vec::new(),
        meta: ModelMeta::default(),
    };
    let s = S_BASE_MVA;

    // ---- first-stage variables ----
    for g in &case.generators {
        if !(g.gp_max > 0.0) {
            return Err(RelaxError::BadCase(format!(
                "generator {} has no positive capacity to relax over",
                g.id
            )));
        }
        let j = b.y_var(format!("zg:G{}", g.id), 0.0, 1.0, true, g.c0);
        b.meta.y_gen_on.insert(g.id, j);
    }
    for br in &case.branches {
        let j = b.y_var(format!("za:E{}", br.id), 0.0, 1.0, true, 0.0);
        b.meta.y_branch_on.insert(br.id, j);
    }
    for g in &case.generators {
        let j = b.y_var(format!("rho:G{}", g.id), 0.0, g.gp_max, false, g.c1);
        b.meta.y_setpoint.insert(g.id, j);
    }
    for g in &case.generators {
        let j = b.y_var(format!("rho_sq:G{}", g.id), 0.0, g.gp_max * g.gp_max, false, g.c2);
        b.meta.y_setpoint_sq.insert(g.id, j);
    }

    // ---- first-stage rows: gated setpoint window and cost epigraph ----
    for g in &case.generators {
        let zg = b.meta.y_gen_on[&g.id];
        let rho = b.meta.y_setpoint[&g.id];
        let rho_sq = b.meta.y_setpoint_sq[&g.id];
        b.fs(
            format!("setpoint-min:G{}", g.id),
            vec![(rho, 1.0), (zg, -g.gp_min)],
            Relation::Ge,
            0.0,
        );
        b.fs(
            format!("setpoint-max:G{}", g.id),
            vec![(zg, g.gp_max), (rho, -1.0)],
            Relation::Ge,
            0.0,
        );
        let pts = lin_points(0.0, g.gp_max, cfg.n_points_quadratic)?;
        for (k, cut) in perspective_oa(&pts).iter().enumerate() {
            b.fs(
                format!("setpoint-sq-cut:G{}:{k}", g.id),
                vec![(rho_sq, 1.0), (rho, -cut.slope), (zg, cut.gate)],
                Relation::Ge,
                0.0,
            );
        }
    }

    // ---- operating variables ----
    for g in &case.generators {
        let k = b.x_var(format!("gen_p:G{}", g.id), 0.0);
        b.meta.x_gen_p.insert(g.id, k);
    }
    for g in &case.generators {
        let k = b.x_var(format!("gen_q:G{}", g.id), 0.0);
        b.meta.x_gen_q.insert(g.id, k);
    }
    for g in &case.generators {
        let k = b.x_var(format!("dev:G{}", g.id), g.cr1);
        b.meta.x_deviation.insert(g.id, k);
    }
    for g in &case.generators {
        let k = b.x_var(format!("dev_sq:G{}", g.id), g.cr2);
        b.meta.x_deviation_sq.insert(g.id, k);
    }
    for br in &case.branches {
        let k = b.x_var(format!("flow_p_f:E{}", br.id), 0.0);
        b.meta.x_flow_p_fwd.insert(br.id, k);
        let k = b.x_var(format!("flow_p_r:E{}", br.id), 0.0);
        b.meta.x_flow_p_rev.insert(br.id, k);
        let k = b.x_var(format!("flow_q_f:E{}", br.id), 0.0);
        b.meta.x_flow_q_fwd.insert(br.id, k);
        let k = b.x_var(format!("flow_q_r:E{}", br.id), 0.0);
        b.meta.x_flow_q_rev.insert(br.id, k);
    }
    for bus in &case.buses {
        let k = b.x_var(format!("volt:B{}", bus.id), 0.0);
        b.meta.x_volt.insert(bus.id, k);
        let k = b.x_var(format!("volt_sq:B{}", bus.id), 0.0);
        b.meta.x_volt_sq.insert(bus.id, k);
    }
    for bus in &case.buses {
        let k = b.x_var(format!("shed_p_pos:B{}", bus.id), case.kappa);
        b.meta.x_shed_p_pos.insert(bus.id, k);
        let k = b.x_var(format!("shed_p_neg:B{}", bus.id), case.kappa);
        b.meta.x_shed_p_neg.insert(bus.id, k);
        let k = b.x_var(format!("shed_q_pos:B{}", bus.id), case.kappa);
        b.meta.x_shed_q_pos.insert(bus.id, k);
        let k = b.x_var(format!("shed_q_neg:B{}", bus.id), case.kappa);
        b.meta.x_shed_q_neg.insert(bus.id, k);
    }
    for br in &case.branches {
        let k = b.x_var(format!("volt_sq_f:E{}", br.id), 0.0);
        b.meta.x_volt_sq_fwd.insert(br.id, k);
        let k = b.x_var(format!("volt_sq_r:E{}", br.id), 0.0);
        b.meta.x_volt_sq_rev.insert(br.id, k);
        let k = b.x_var(format!("cos_w:E{}", br.id), 0.0);
        b.meta.x_cos_prod.insert(br.id, k);
        let k = b.x_var(format!("sin_w:E{}", br.id), 0.0);
        b.meta.x_sin_prod.insert(br.id, k);
    }
    let net = &case.dc_network;
    for n in &net.nodes {
        let k = b.x_var(format!("dc_pot:N{}", n.id), 0.0);
        b.meta.x_dc_potential.insert(n.id, k);
    }
    for e in &net.edges {
        let k = b.x_var(format!("dc_cur:D{}", e.id), 0.0);
        b.meta.x_dc_current.insert(e.id, k);
        let k = b.x_var(format!("gate_drop:D{}", e.id), 0.0);
        b.meta.x_gate_drop.insert(e.id, k);
    }
    for t in &net.transformers {
        let k = b.x_var(format!("eff_gic:T{}", t.ac_edge_id), 0.0);
        b.meta.x_eff_gic.insert(t.ac_edge_id, k);
        let k = b.x_var(format!("gic_heat:T{}", t.ac_edge_id), 0.0);
        b.meta.x_gic_heat.insert(t.ac_edge_id, k);
    }
    let qloss_buses: BTreeSet<usize> = net.transformers.iter().map(|t| t.qloss_bus).collect();
    for &bus in &qloss_buses {
        let k = b.x_var(format!("qloss:B{bus}"), 0.0);
        b.meta.x_qloss.insert(bus, k);
    }

    // ---- generator recourse rows ----
    for g in &case.generators {
        let zg = b.meta.y_gen_on[&g.id];
        let rho = b.meta.y_setpoint[&g.id];
        let gp = b.meta.x_gen_p[&g.id];
        let gq = b.meta.x_gen_q[&g.id];
        let dev = b.meta.x_deviation[&g.id];
        let dev_sq = b.meta.x_deviation_sq[&g.id];
        b.rc(
            format!("gen-p-min:G{}", g.id),
            vec![(zg, -g.gp_min)],
            vec![(gp, 1.0)],
            Relation::Ge,
            0.0,
        );
        b.rc(
            format!("gen-p-max:G{}", g.id),
            vec![(zg, g.gp_max)],
            vec![(gp, -1.0)],
            Relation::Ge,
            0.0,
        );
        b.rc(
            format!("gen-q-min:G{}", g.id),
            vec![(zg, -g.gq_min)],
            vec![(gq, 1.0)],
            Relation::Ge,
            0.0,
        );
        b.rc(
            format!("gen-q-max:G{}", g.id),
            vec![(zg, g.gq_max)],
            vec![(gq, -1.0)],
            Relation::Ge,
            0.0,
        );
        let reach = g.ramp_frac * g.gp_max;
        b.rc(
            format!("ramp-up:G{}", g.id),
            vec![(zg, reach), (rho, 1.0)],
            vec![(gp, -1.0)],
            Relation::Ge,
            0.0,
        );
        b.rc(
            format!("ramp-down:G{}", g.id),
            vec![(zg, reach), (rho, -1.0)],
            vec![(gp, 1.0)],
            Relation::Ge,
            0.0,
        );
        b.rc(format!("dev-pos:G{}", g.id), vec![], vec![(dev, 1.0)], Relation::Ge, 0.0);
        b.rc(
            format!("dev-def:G{}", g.id),
            vec![(rho, 1.0)],
            vec![(dev, 1.0), (gp, -1.0)],
            Relation::Ge,
            0.0,
        );
        b.rc(format!("dev-sq-pos:G{}", g.id), vec![], vec![(dev_sq, 1.0)], Relation::Ge, 0.0);
        if reach > 1e-9 {
            let pts = lin_points(0.0, reach, cfg.n_points_quadratic)?;
            for (k, cut) in perspective_oa(&pts).iter().enumerate() {
                b.rc(
                    format!("dev-sq-cut:G{}:{k}", g.id),
                    vec![(zg, cut.gate)],
                    vec![(dev_sq, 1.0), (dev, -cut.slope)],
                    Relation::Ge,
                    0.0,
                );
            }
        }
    }

    // ---- voltage band, square envelope, slack signs ----
    for bus in &case.buses {
        let v = b.meta.x_volt[&bus.id];
        let w = b.meta.x_volt_sq[&bus.id];
        b.rc(format!("volt-min:B{}", bus.id), vec![], vec![(v, 1.0)], Relation::Ge, bus.v_min);
        b.rc(format!("volt-max:B{}", bus.id), vec![], vec![(v, -1.0)], Relation::Ge, -bus.v_max);
        let env = super::voltage_square_relax(bus.v_min, bus.v_max, cfg.n_points_quadratic)?;
        b.rc(
            format!("volt-secant:B{}", bus.id),
            vec![],
            vec![(v, env.secant.slope), (w, -1.0)],
            Relation::Ge,
            env.secant.offset,
        );
        for (k, t) in env.tangents.iter().enumerate() {
            b.rc(
                format!("volt-tangent:B{}:{k}", bus.id),
                vec![],
                vec![(w, 1.0), (v, -t.slope)],
                Relation::Ge,
                -t.offset,
            );
        }
        for (label, map) in [
            ("pp", &b.meta.x_shed_p_pos),
            ("pn", &b.meta.x_shed_p_neg),
            ("qp", &b.meta.x_shed_q_pos),
            ("qn", &b.meta.x_shed_q_neg),
        ] {
            let k = map[&bus.id];
            b.recourse.push(RecourseRow {
                tag: format!("shed-pos:B{}:{label}", bus.id),
                y: vec![],
                x: vec![(k, 1.0)],
                rel: Relation::Ge,
                rhs: 0.0,
            });
        }
    }

    // ---- power balances ----
    for bus in &case.buses {
        let w = b.meta.x_volt_sq[&bus.id];
        let mut xp: Vec<(usize, f64)> = Vec::new();
        let mut xq: Vec<(usize, f64)> = Vec::new();
        for br in &case.branches {
            if br.from_bus == bus.id {
                xp.push((b.meta.x_flow_p_fwd[&br.id], 1.0));
                xq.push((b.meta.x_flow_q_fwd[&br.id], 1.0));
            }
            if br.to_bus == bus.id {
                xp.push((b.meta.x_flow_p_rev[&br.id], 1.0));
                xq.push((b.meta.x_flow_q_rev[&br.id], 1.0));
            }
        }
        for g in case.generators_at_bus(bus.id) {
            xp.push((b.meta.x_gen_p[&g.id], -1.0));
            xq.push((b.meta.x_gen_q[&g.id], -1.0));
        }
        xp.push((b.meta.x_shed_p_pos[&bus.id], -1.0));
        xp.push((b.meta.x_shed_p_neg[&bus.id], 1.0));
        xp.push((w, s * bus.shunt_g));
        xq.push((b.meta.x_shed_q_pos[&bus.id], -1.0));
        xq.push((b.meta.x_shed_q_neg[&bus.id], 1.0));
        xq.push((w, -s * bus.shunt_b));
        if let Some(&ql) = b.meta.x_qloss.get(&bus.id) {
            xq.push((ql, 1.0));
        }
        b.rc(format!("p-balance:B{}", bus.id), vec![], xp, Relation::Eq, -bus.load_p);
        b.rc(format!("q-balance:B{}", bus.id), vec![], xq, Relation::Eq, -bus.load_q);
    }

    // ---- branch flow definitions, gated envelopes, thermal limits ----
    let theta_max = case.theta_max_deg.to_radians();
    for br in &case.branches {
        let za = b.meta.y_branch_on[&br.id];
        let (g_e, b_e) = (br.g, br.b);
        let bc = br.b_charge;
        let al = br.tap;
        let pf = b.meta.x_flow_p_fwd[&br.id];
        let pr = b.meta.x_flow_p_rev[&br.id];
        let qf = b.meta.x_flow_q_fwd[&br.id];
        let qr = b.meta.x_flow_q_rev[&br.id];
        let wzf = b.meta.x_volt_sq_fwd[&br.id];
        let wzr = b.meta.x_volt_sq_rev[&br.id];
        let wc = b.meta.x_cos_prod[&br.id];
        let ws = b.meta.x_sin_prod[&br.id];
        let from = case.bus(br.from_bus).expect("validated");
        let to = case.bus(br.to_bus).expect("validated");

        b.rc(
            format!("flow-def-pf:E{}", br.id),
            vec![],
            vec![
                (pf, 1.0),
                (wzf, -s * g_e / (al * al)),
                (wc, s * g_e / al),
                (ws, s * b_e / al),
            ],
            Relation::Eq,
            0.0,
        );
        b.rc(
            format!("flow-def-qf:E{}", br.id),
            vec![],
            vec![
                (qf, 1.0),
                (wzf, s * (b_e + bc / 2.0) / (al * al)),
                (wc, -s * b_e / al),
                (ws, s * g_e / al),
            ],
            Relation::Eq,
            0.0,
        );
        b.rc(
            format!("flow-def-pr:E{}", br.id),
            vec![],
            vec![(pr, 1.0), (wzr, -s * g_e), (wc, s * g_e / al), (ws, -s * b_e / al)],
            Relation::Eq,
            0.0,
        );
        b.rc(
            format!("flow-def-qr:E{}", br.id),
            vec![],
            vec![(qr, 1.0), (wzr, s * (b_e + bc / 2.0)), (wc, -s * b_e / al), (ws, -s * g_e / al)],
            Relation::Eq,
            0.0,
        );

        // gated squared voltages at both terminals
        for (side, wz, bus) in [("f", wzf, from), ("r", wzr, to)] {
            let w = b.meta.x_volt_sq[&bus.id];
            let env = mccormick((0.0, 1.0), (bus.v_min * bus.v_min, bus.v_max * bus.v_max))?;
            for (k, row) in env.rows.iter().enumerate() {
                b.rc(
                    format!("sq-gate:E{}:{side}{k}", br.id),
                    vec![(za, row.c_x)],
                    vec![(wz, row.c_prod), (w, row.c_y)],
                    Relation::Ge,
                    row.rhs,
                );
            }
        }

        // gated trigonometric product envelope
        let trig = trig_product_relax(
            (from.v_min, from.v_max),
            (to.v_min, to.v_max),
            theta_max,
            cfg.n_points_rsoc,
            cfg.n_points_rsoc,
        )?;
        b.rc(
            format!("cos-gate-lo:E{}", br.id),
            vec![(za, -trig.cos_box.0)],
            vec![(wc, 1.0)],
            Relation::Ge,
            0.0,
        );
        b.rc(
            format!("cos-gate-hi:E{}", br.id),
            vec![(za, trig.cos_box.1)],
            vec![(wc, -1.0)],
            Relation::Ge,
            0.0,
        );
        b.rc(
            format!("sin-gate-lo:E{}", br.id),
            vec![(za, trig.sin_mag)],
            vec![(ws, 1.0)],
            Relation::Ge,
            0.0,
        );
        b.rc(
            format!("sin-gate-hi:E{}", br.id),
            vec![(za, trig.sin_mag)],
            vec![(ws, -1.0)],
            Relation::Ge,
            0.0,
        );
        b.rc(
            format!("angle-link-hi:E{}", br.id),
            vec![],
            vec![(wc, trig.tan_limit), (ws, -1.0)],
            Relation::Ge,
            0.0,
        );
        b.rc(
            format!("angle-link-lo:E{}", br.id),
            vec![],
            vec![(wc, trig.tan_limit), (ws, 1.0)],
            Relation::Ge,
            0.0,
        );
        for (k, cut) in trig.cone_cuts.iter().enumerate() {
            b.rc(
                format!("cone-cut:E{}:{k}", br.id),
                vec![],
                vec![
                    (wzf, cut.c_sq_from),
                    (wzr, cut.c_sq_to),
                    (wc, -cut.c_cos),
                    (ws, -cut.c_sin),
                ],
                Relation::Ge,
                0.0,
            );
        }

        // thermal circle, both orientations, plus gated flow boxes
        let s_pu = br.s_rating / s;
        let cuts = thermal_oa(s_pu, cfg.n_points_thermal)?;
        for (side, p, q) in [("f", pf, qf), ("r", pr, qr)] {
            for (k, c) in cuts.iter().enumerate() {
                b.rc(
                    format!("thermal-{side}:E{}:{k}", br.id),
                    vec![(za, c.c_gate)],
                    vec![(p, -c.c_p / s), (q, -c.c_q / s)],
                    Relation::Ge,
                    0.0,
                );
            }
            for (sign, lbl) in [(1.0, "lo"), (-1.0, "hi")] {
                b.rc(
                    format!("flow-box-p-{lbl}-{side}:E{}", br.id),
                    vec![(za, br.s_rating)],
                    vec![(p, sign)],
                    Relation::Ge,
                    0.0,
                );
                b.rc(
                    format!("flow-box-q-{lbl}-{side}:E{}", br.id),
                    vec![(za, br.s_rating)],
                    vec![(q, sign)],
                    Relation::Ge,
                    0.0,
                );
            }
        }
    }

    // ---- DC circuit: balances, potential boxes, gated drops, Ohm rows ----
    let line_span: f64 = net
        .edges
        .iter()
        .filter(|e| e.kind == DcEdgeKind::Line)
        .map(|e| e.length_n_km.hypot(e.length_e_km))
        .sum();
    let drop_bound = (cfg.field_bound * line_span).max(1.0);
    b.meta.drop_bound = drop_bound;
    for n in &net.nodes {
        let pot = b.meta.x_dc_potential[&n.id];
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for e in &net.edges {
            if e.to_node == n.id {
                terms.push((b.meta.x_dc_current[&e.id], 1.0));
            }
            if e.from_node == n.id {
                terms.push((b.meta.x_dc_current[&e.id], -1.0));
            }
        }
        terms.push((pot, -n.ground_admittance));
        b.rc(format!("dc-balance:N{}", n.id), vec![], terms, Relation::Eq, 0.0);
        b.rc(
            format!("potential-box-lo:N{}", n.id),
            vec![],
            vec![(pot, 1.0)],
            Relation::Ge,
            -2.0 * drop_bound,
        );
        b.rc(
            format!("potential-box-hi:N{}", n.id),
            vec![],
            vec![(pot, -1.0)],
            Relation::Ge,
            -2.0 * drop_bound,
        );
    }
    let envs = gic_bilinear_relax((0.0, 1.0), case.gic_cap, drop_bound)?;
    for e in &net.edges {
        let za = b.meta.y_branch_on[&e.ac_edge_id];
        let cur = b.meta.x_dc_current[&e.id];
        let drop = b.meta.x_gate_drop[&e.id];
        let pm = b.meta.x_dc_potential[&e.from_node];
        let pn = b.meta.x_dc_potential[&e.to_node];
        for (k, row) in envs.gate_drop.rows.iter().enumerate() {
            b.rc(
                format!("gate-drop:D{}:{k}", e.id),
                vec![(za, row.c_x)],
                vec![(drop, row.c_prod), (pm, row.c_y), (pn, -row.c_y)],
                Relation::Ge,
                row.rhs,
            );
        }
        b.coupling.push(CouplingRow {
            tag: format!("dc-ohm:D{}", e.id),
            t_east: drop_zero(vec![(za, e.admittance * e.length_e_km)]),
            t_north: drop_zero(vec![(za, e.admittance * e.length_n_km)]),
            w: vec![(cur, 1.0), (drop, -e.admittance)],
        });
    }

    // ---- effective transformer currents, heating, reactive losses ----
    for t in &net.transformers {
        let eff = b.meta.x_eff_gic[&t.ac_edge_id];
        let heat = b.meta.x_gic_heat[&t.ac_edge_id];
        let windings: Vec<(usize, f64)> = net
            .edges
            .iter()
            .filter(|e| e.kind.is_winding() && e.ac_edge_id == t.ac_edge_id)
            .map(|e| (b.meta.x_dc_current[&e.id], e.theta_coeff))
            .collect();
        let mut pos = vec![(eff, 1.0)];
        let mut neg = vec![(eff, 1.0)];
        for &(cur, th) in &windings {
            pos.push((cur, -th));
            neg.push((cur, th));
        }
        b.rc(format!("eff-gic-pos:T{}", t.ac_edge_id), vec![], pos, Relation::Ge, 0.0);
        b.rc(format!("eff-gic-neg:T{}", t.ac_edge_id), vec![], neg, Relation::Ge, 0.0);
        b.rc(
            format!("eff-gic-cap:T{}", t.ac_edge_id),
            vec![],
            vec![(eff, -1.0)],
            Relation::Ge,
            -case.gic_cap,
        );
        let bus = case.bus(t.qloss_bus).expect("validated");
        let volt = b.meta.x_volt[&t.qloss_bus];
        let env = mccormick((bus.v_min, bus.v_max), (0.0, case.gic_cap))?;
        for (k, row) in env.rows.iter().enumerate() {
            b.rc(
                format!("gic-heat:T{}:{k}", t.ac_edge_id),
                vec![],
                vec![(heat, row.c_prod), (volt, row.c_x), (eff, row.c_y)],
                Relation::Ge,
                row.rhs,
            );
        }
    }
    for &bus in &qloss_buses {
        let ql = b.meta.x_qloss[&bus];
        let mut terms = vec![(ql, 1.0)];
        for t in net.transformers.iter().filter(|t| t.qloss_bus == bus) {
            terms.push((b.meta.x_gic_heat[&t.ac_edge_id], -t.loss_factor));
        }
        b.rc(format!("qloss-def:B{bus}"), vec![], terms, Relation::Eq, 0.0);
    }

    let model = StandardFormModel {
        y_defs: b.y_defs,
        x_names: b.x_names,
        y_cost: b.y_cost,
        x_cost: b.x_cost,
        first_stage: b.first_stage,
        recourse: b.recourse,
        coupling: b.coupling,
        meta: b.meta,
    };
    model.validate()?;
    Ok(model)
}
