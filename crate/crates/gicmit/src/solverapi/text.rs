//! Deterministic textual emission of a model for inspection and diffing.

use std::fmt::Write as _;

use super::{ModelIR, ObjSense, RowSense, VarKind};

/// Format a number with 17 significant digits so the text round-trips the
/// exact double value.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn term(first: bool, coeff: f64, name: &str) -> String {
    let sign = if coeff < 0.0 {
        "- "
    } else if first {
        ""
    } else {
        "+ "
    };
    format!("{sign}{} {name}", num(coeff.abs()))
}

/// Emit the model as stable, human-readable text: objective, rows with
/// their tags, bounds, and the integer section. Output depends only on the
/// model contents.
pub fn emit_model_text(m: &ModelIR) -> String {
    let mut out = String::new();
    match m.sense {
        ObjSense::Minimize => out.push_str("minimize\n"),
        ObjSense::Maximize => out.push_str("maximize\n"),
    }
    out.push_str("  obj:");
    let mut first = true;
    for (i, &c) in m.objective().iter().enumerate() {
        if c != 0.0 {
            let t = term(first, c, &m.vars()[i].name);
            let _ = write!(out, " {t}");
            first = false;
        }
    }
    if m.obj_offset() != 0.0 {
        let t = term(first, m.obj_offset(), "1");
        let _ = write!(out, " {t}");
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
    out.push_str("\nsubject to\n");
    for (ri, r) in m.rows().iter().enumerate() {
        let _ = write!(out, "  r{ri} {{{}}}:", r.tag);
        let mut first = true;
        // deterministic term order: by variable id, duplicates merged
        let mut acc: Vec<(usize, f64)> = Vec::new();
        for (v, c) in &r.terms {
            match acc.iter_mut().find(|(i, _)| *i == v.0) {
                Some((_, slot)) => *slot += c,
                None => acc.push((v.0, *c)),
            }
        }
        acc.sort_by_key(|(i, _)| *i);
        for (i, c) in acc {
            if c != 0.0 {
                let t = term(first, c, &m.vars()[i].name);
                let _ = write!(out, " {t}");
                first = false;
            }
        }
        if first {
            out.push_str(" 0");
        }
        let op = match r.sense {
            RowSense::Ge => ">=",
            RowSense::Le => "<=",
            RowSense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", num(r.rhs));
    }
    out.push_str("bounds\n");
    for v in m.vars() {
        if v.lb == f64::NEG_INFINITY && v.ub == f64::INFINITY {
            let _ = writeln!(out, "  {} free", v.name);
        } else if v.ub == f64::INFINITY {
            let _ = writeln!(out, "  {} >= {}", v.name, num(v.lb));
        } else if v.lb == f64::NEG_INFINITY {
            let _ = writeln!(out, "  {} <= {}", v.name, num(v.ub));
        } else {
            let _ = writeln!(out, "  {} <= {} <= {}", num(v.lb), v.name, num(v.ub));
        }
    }
    let binaries: Vec<&str> = m
        .vars()
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("binary\n");
        for b in binaries {
            let _ = writeln!(out, "  {b}");
        }
    }
    out.push_str("end\n");
    out
}
