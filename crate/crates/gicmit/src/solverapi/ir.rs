//! The model intermediate representation: variables, tagged rows, and a
//! linear objective, independent of any backend.

use std::time::Duration;

/// Handle to a variable in its [`ModelIR`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Handle to a row in its [`ModelIR`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjSense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone)]
pub struct VarDef {
    pub name: String,
    pub lb: f64,
    pub ub: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone)]
pub struct RowDef {
    /// Human-readable provenance tag, e.g. `"p-balance:B4"`.
    pub tag: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// Per-solve resource limits and tolerances.
#[derive(Debug, Clone)]
pub struct SolveLimits {
    pub time_limit: Option<Duration>,
    /// Relative MIP optimality gap.
    pub mip_gap: f64,
    /// Solver threads; one keeps runs deterministic.
    pub threads: u32,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits { time_limit: None, mip_gap: 1e-6, threads: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct ModelIR {
    pub sense: ObjSense,
    vars: Vec<VarDef>,
    rows: Vec<RowDef>,
    obj: Vec<f64>,
    obj_offset: f64,
}

impl ModelIR {
    pub fn new(sense: ObjSense) -> Self {
        ModelIR { sense, vars: Vec::new(), rows: Vec::new(), obj: Vec::new(), obj_offset: 0.0 }
    }

    /// Add a variable. Binary variables are clamped into [0, 1].
    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lb: f64,
        ub: f64,
        kind: VarKind,
    ) -> VarId {
        let name = name.into();
        let (lb, ub) = match kind {
            VarKind::Binary => (lb.max(0.0), ub.min(1.0)),
            VarKind::Continuous => (lb, ub),
        };
        debug_assert!(lb <= ub, "variable {name} has crossed bounds");
        let id = VarId(self.vars.len());
        self.vars.push(VarDef { name, lb, ub, kind });
        self.obj.push(0.0);
        id
    }

    pub fn add_row(
        &mut self,
        tag: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> RowId {
        let id = RowId(self.rows.len());
        self.rows.push(RowDef { tag: tag.into(), terms, sense, rhs });
        id
    }

    /// Accumulate an objective coefficient.
    pub fn add_obj(&mut self, var: VarId, coeff: f64) {
        self.obj[var.0] += coeff;
    }

    /// Accumulate a constant objective offset.
    pub fn add_obj_offset(&mut self, offset: f64) {
        self.obj_offset += offset;
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn vars(&self) -> &[VarDef] {
        &self.vars
    }

    pub fn rows(&self) -> &[RowDef] {
        &self.rows
    }

    pub fn objective(&self) -> &[f64] {
        &self.obj
    }

    pub fn obj_offset(&self) -> f64 {
        self.obj_offset
    }

    pub fn var(&self, id: VarId) -> &VarDef {
        &self.vars[id.0]
    }

    /// Overwrite a variable's bounds, e.g. to fix first-stage decisions.
    pub fn set_bounds(&mut self, id: VarId, lb: f64, ub: f64) {
        self.vars[id.0].lb = lb;
        self.vars[id.0].ub = ub;
    }

    pub fn is_mip(&self) -> bool {
        self.vars.iter().any(|v| v.kind == VarKind::Binary)
    }

    /// Structural sanity: ordered finite-or-infinite bounds, finite
    /// coefficients and right-hand sides, in-range variable references.
    pub fn validate(&self) -> Result<(), String> {
        for (i, v) in self.vars.iter().enumerate() {
            if v.lb.is_nan() || v.ub.is_nan() || v.lb > v.ub {
                return Err(format!("variable {} ({}) has invalid bounds [{}, {}]", i, v.name, v.lb, v.ub));
            }
        }
        for c in &self.obj {
            if !c.is_finite() {
                return Err("objective has a non-finite coefficient".to_string());
            }
        }
        if !self.obj_offset.is_finite() {
            return Err("objective offset is not finite".to_string());
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() {
                return Err(format!("row {} ({}) has non-finite rhs", i, r.tag));
            }
            for (v, c) in &r.terms {
                if v.0 >= self.vars.len() {
                    return Err(format!("row {} ({}) references missing variable {}", i, r.tag, v.0));
                }
                if !c.is_finite() {
                    return Err(format!("row {} ({}) has a non-finite coefficient", i, r.tag));
                }
            }
        }
        Ok(())
    }
}
