//! Structured-text case schema: parsing, overlay merging, and round-trip
//! serialization.
//!
//! The on-disk form is a versioned JSON document. An overlay document with
//! the same schema merges field-by-field: scalars replace, objects merge
//! recursively, and arrays of keyed records merge element-wise by `id`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    dc_from_ac, gic_cap_from, series_admittance, validate_parts, Branch, Bus, CaseError,
    Generator, PowerCase, Substation, TransformerType,
};

const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct CaseDoc {
    version: u32,
    params: ParamsDoc,
    substations: Vec<SubstationDoc>,
    buses: Vec<BusDoc>,
    branches: Vec<BranchDoc>,
    #[serde(default)]
    generators: Vec<GeneratorDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ParamsDoc {
    kappa: f64,
    theta_max_deg: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct SubstationDoc {
    id: usize,
    latitude: f64,
    longitude: f64,
    #[serde(default)]
    ground_resistance: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct BusDoc {
    id: usize,
    substation: usize,
    base_kv: f64,
    #[serde(default)]
    load_p: f64,
    #[serde(default)]
    load_q: f64,
    #[serde(default)]
    shunt_g: f64,
    #[serde(default)]
    shunt_b: f64,
    #[serde(default = "default_v_min")]
    v_min: f64,
    #[serde(default = "default_v_max")]
    v_max: f64,
}

fn default_v_min() -> f64 {
    0.9
}

fn default_v_max() -> f64 {
    1.1
}

fn default_tap() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
struct BranchDoc {
    id: usize,
    from: usize,
    to: usize,
    r: f64,
    x: f64,
    #[serde(default)]
    b_charge: f64,
    #[serde(default = "default_tap")]
    tap: f64,
    s_rating: f64,
    #[serde(default)]
    length_km: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transformer: Option<TransformerDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TransformerDoc {
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hv_bus: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r_hv_ohm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r_lv_ohm: Option<f64>,
    #[serde(default)]
    k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    turns_ratio: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct GeneratorDoc {
    id: usize,
    bus: usize,
    gp_min: f64,
    gp_max: f64,
    gq_min: f64,
    gq_max: f64,
    c0: f64,
    c1: f64,
    c2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cr1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cr2: Option<f64>,
    #[serde(default)]
    ramp_frac: f64,
}

fn transformer_type_from_str(s: &str) -> Result<TransformerType, CaseError> {
    // accept both role-explicit names and the winding-table shorthand
    Ok(match s {
        "gwye_delta_gsu" | "wye_delta" | "gsu" => TransformerType::GwyeDeltaGsu,
        "delta_gwye_gsu" | "delta_wye" => TransformerType::DeltaGwyeGsu,
        "gwye_gwye_auto" | "auto" => TransformerType::GwyeGwyeAuto,
        "gwye_gwye" => TransformerType::GwyeGwye,
        "three_winding_ungrounded" => TransformerType::ThreeWindingUngrounded,
        other => return Err(CaseError::UnknownTransformerType(other.to_string())),
    })
}

fn transformer_type_to_str(t: TransformerType) -> &'static str {
    match t {
        TransformerType::GwyeDeltaGsu => "gwye_delta_gsu",
        TransformerType::DeltaGwyeGsu => "delta_gwye_gsu",
        TransformerType::GwyeGwyeAuto => "gwye_gwye_auto",
        TransformerType::GwyeGwye => "gwye_gwye",
        TransformerType::ThreeWindingUngrounded => "three_winding_ungrounded",
        TransformerType::None => "none",
    }
}

/// Parse, validate, and finish a case from its document text.
pub fn load_case(source: &str) -> Result<PowerCase, CaseError> {
    let doc: CaseDoc =
        serde_json::from_str(source).map_err(|e| CaseError::Parse(e.to_string()))?;
    if doc.version != SCHEMA_VERSION {
        return Err(CaseError::Parse(format!(
            "unsupported schema version {} (expected {})",
            doc.version, SCHEMA_VERSION
        )));
    }

    let substations: Vec<Substation> = doc
        .substations
        .iter()
        .map(|s| Substation {
            id: s.id,
            latitude: s.latitude,
            longitude: s.longitude,
            ground_resistance: s.ground_resistance,
        })
        .collect();
    let buses: Vec<Bus> = doc
        .buses
        .iter()
        .map(|b| Bus {
            id: b.id,
            substation_id: b.substation,
            base_kv: b.base_kv,
            load_p: b.load_p,
            load_q: b.load_q,
            shunt_g: b.shunt_g,
            shunt_b: b.shunt_b,
            v_min: b.v_min,
            v_max: b.v_max,
        })
        .collect();
    let mut branches = Vec::with_capacity(doc.branches.len());
    for b in &doc.branches {
        let (g, bb) = series_admittance(b.r, b.x);
        let (is_transformer, ttype, hv_bus, r_hv, r_lv, k, turns) = match &b.transformer {
            Some(t) => (
                true,
                transformer_type_from_str(&t.kind)?,
                t.hv_bus,
                t.r_hv_ohm,
                t.r_lv_ohm,
                t.k,
                t.turns_ratio,
            ),
            None => (false, TransformerType::None, None, None, None, 0.0, None),
        };
        branches.push(Branch {
            id: b.id,
            from_bus: b.from,
            to_bus: b.to,
            r: b.r,
            x: b.x,
            g,
            b: bb,
            b_charge: b.b_charge,
            tap: b.tap,
            s_rating: b.s_rating,
            length_km: b.length_km,
            is_transformer,
            transformer_type: ttype,
            loss_factor: k,
            hv_bus,
            r_hv_ohm: r_hv,
            r_lv_ohm: r_lv,
            turns_ratio: turns,
        });
    }
    let generators: Vec<Generator> = doc
        .generators
        .iter()
        .map(|g| Generator {
            id: g.id,
            bus: g.bus,
            gp_min: g.gp_min,
            gp_max: g.gp_max,
            gq_min: g.gq_min,
            gq_max: g.gq_max,
            c0: g.c0,
            c1: g.c1,
            c2: g.c2,
            cr1: g.cr1.unwrap_or(1.2 * g.c1),
            cr2: g.cr2.unwrap_or(1.2 * g.c2),
            ramp_frac: g.ramp_frac,
        })
        .collect();

    validate_parts(&buses, &branches, &generators, &substations)?;
    let dc_network = dc_from_ac(&buses, &branches, &substations)?;
    let gic_cap = gic_cap_from(&buses, &branches);
    let case = PowerCase {
        buses,
        branches,
        generators,
        substations,
        dc_network,
        kappa: doc.params.kappa,
        theta_max_deg: doc.params.theta_max_deg,
        gic_cap,
    };
    case.validate()?;
    Ok(case)
}

/// Load a case document from a file path.
pub fn load_case_file(path: &Path) -> Result<PowerCase, CaseError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CaseError::Parse(format!("{}: {e}", path.display())))?;
    load_case(&text)
}

/// Serialize a case back into document text. `load_case` of the result
/// reproduces the case structurally.
pub fn to_document(case: &PowerCase) -> String {
    let doc = CaseDoc {
        version: SCHEMA_VERSION,
        params: ParamsDoc { kappa: case.kappa, theta_max_deg: case.theta_max_deg },
        substations: case
            .substations
            .iter()
            .map(|s| SubstationDoc {
                id: s.id,
                latitude: s.latitude,
                longitude: s.longitude,
                ground_resistance: s.ground_resistance,
            })
            .collect(),
        buses: case
            .buses
            .iter()
            .map(|b| BusDoc {
                id: b.id,
                substation: b.substation_id,
                base_kv: b.base_kv,
                load_p: b.load_p,
                load_q: b.load_q,
                shunt_g: b.shunt_g,
                shunt_b: b.shunt_b,
                v_min: b.v_min,
                v_max: b.v_max,
            })
            .collect(),
        branches: case
            .branches
            .iter()
            .map(|b| BranchDoc {
                id: b.id,
                from: b.from_bus,
                to: b.to_bus,
                r: b.r,
                x: b.x,
                b_charge: b.b_charge,
                tap: b.tap,
                s_rating: b.s_rating,
                length_km: b.length_km,
                transformer: if b.is_transformer {
                    Some(TransformerDoc {
                        kind: transformer_type_to_str(b.transformer_type).to_string(),
                        hv_bus: b.hv_bus,
                        r_hv_ohm: b.r_hv_ohm,
                        r_lv_ohm: b.r_lv_ohm,
                        k: b.loss_factor,
                        turns_ratio: b.turns_ratio,
                    })
                } else {
                    None
                },
            })
            .collect(),
        generators: case
            .generators
            .iter()
            .map(|g| GeneratorDoc {
                id: g.id,
                bus: g.bus,
                gp_min: g.gp_min,
                gp_max: g.gp_max,
                gq_min: g.gq_min,
                gq_max: g.gq_max,
                c0: g.c0,
                c1: g.c1,
                c2: g.c2,
                cr1: Some(g.cr1),
                cr2: Some(g.cr2),
                ramp_frac: g.ramp_frac,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("document serialization cannot fail")
}

/// Merge an overlay document into a base document, returning the merged
/// text. Scalars replace, objects merge recursively, and arrays of records
/// carrying an `id` merge element-wise by id (unmatched overlay records are
/// appended).
pub fn apply_overlay(base: &str, overlay: &str) -> Result<String, CaseError> {
    let mut b: Value =
        serde_json::from_str(base).map_err(|e| CaseError::Parse(format!("base: {e}")))?;
    let o: Value =
        serde_json::from_str(overlay).map_err(|e| CaseError::Parse(format!("overlay: {e}")))?;
    merge_value(&mut b, o);
    Ok(serde_json::to_string_pretty(&b).expect("merged document serializes"))
}

fn merge_value(base: &mut Value, overlay: Value) {
    match (base, overlay) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge_value(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (Value::Array(b), Value::Array(o)) if is_keyed_array(b) && is_keyed_array(&o) => {
            for item in o {
                let id = item.get("id").cloned();
                match b.iter_mut().find(|e| e.get("id") == id.as_ref()) {
                    Some(slot) => merge_value(slot, item),
                    None => b.push(item),
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn is_keyed_array(a: &[Value]) -> bool {
    !a.is_empty() && a.iter().all(|e| e.get("id").is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::build_epri21;

    #[test]
    fn round_trip_preserves_structure() {
        let case = build_epri21();
        let doc = to_document(&case);
        let again = load_case(&doc).unwrap();
        assert_eq!(case, again);
    }

    #[test]
    fn winding_table_shorthand_is_accepted() {
        assert_eq!(
            transformer_type_from_str("wye_delta").unwrap(),
            TransformerType::GwyeDeltaGsu
        );
        assert_eq!(transformer_type_from_str("auto").unwrap(), TransformerType::GwyeGwyeAuto);
        assert!(matches!(
            transformer_type_from_str("zigzag"),
            Err(CaseError::UnknownTransformerType(_))
        ));
    }

    #[test]
    fn parse_error_reports_position() {
        let err = load_case("{ not json").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("parse error"), "got: {msg}");
    }

    #[test]
    fn overlay_replaces_scalar_fields_by_id() {
        let base = to_document(&build_epri21());
        let overlay = r#"{ "buses": [ { "id": 4, "load_p": 123.0 } ] }"#;
        let merged = apply_overlay(&base, overlay).unwrap();
        let case = load_case(&merged).unwrap();
        assert_eq!(case.bus(4).unwrap().load_p, 123.0);
        // untouched fields survive
        let orig = build_epri21();
        assert_eq!(case.bus(4).unwrap().load_q, orig.bus(4).unwrap().load_q);
        assert_eq!(case.bus(5).unwrap().load_p, orig.bus(5).unwrap().load_p);
    }

    #[test]
    fn overlay_can_change_params_and_append_records() {
        let base = to_document(&build_epri21());
        let overlay = r#"{
            "params": { "kappa": 2000.0 },
            "generators": [ { "id": 99, "bus": 11, "gp_min": 0.0, "gp_max": 50.0,
                              "gq_min": -20.0, "gq_max": 20.0,
                              "c0": 10.0, "c1": 4.0, "c2": 0.2 } ]
        }"#;
        let case = load_case(&apply_overlay(&base, overlay).unwrap()).unwrap();
        assert_eq!(case.kappa, 2000.0);
        assert_eq!(case.theta_max_deg, 30.0);
        let g = case.generator(99).unwrap();
        assert_eq!(g.gp_max, 50.0);
        assert_eq!(g.cr1, 1.2 * 4.0);
    }
}
