//! Derivation of the DC (storm-current) circuit from the AC case.
//!
//! Bus nodes carry the potential of AC buses that touch any conducting DC
//! path; neutral nodes sit behind each grounded substation that hosts a
//! winding. Lines become series edges with geographic displacement
//! components; grounded windings become series edges into their neutral.
//! Ungrounded (delta or three-winding) paths are simply absent.

use std::collections::BTreeSet;

use super::{
    Branch, Bus, CaseError, DcEdge, DcEdgeKind, DcNetwork, DcNode, DcNodeKind, DcTransformer,
    Substation, TransformerType, S_BASE_MVA,
};
use crate::geomag::{line_components, GeoPoint};

/// Phase count tying a per-phase resistance to an edge admittance.
const PHASES: f64 = 3.0;

/// Build the DC network for a validated AC part. Winding roles, grounding
/// and turns ratios are all taken from the branch transformer data.
pub fn dc_from_ac(
    buses: &[Bus],
    branches: &[Branch],
    substations: &[Substation],
) -> Result<DcNetwork, CaseError> {
    let bus = |id: usize| buses.iter().find(|b| b.id == id);
    let sub_of_bus = |id: usize| -> Option<&Substation> {
        let sub_id = bus(id)?.substation_id;
        substations.iter().find(|s| s.id == sub_id)
    };

    // collect participating buses and neutral substations first so node ids
    // are stable: bus nodes in ascending bus id, then neutrals in ascending
    // substation id
    let mut dc_buses: BTreeSet<usize> = BTreeSet::new();
    let mut neutral_subs: BTreeSet<usize> = BTreeSet::new();
    for br in branches {
        if !br.is_transformer {
            dc_buses.insert(br.from_bus);
            dc_buses.insert(br.to_bus);
            continue;
        }
        match br.transformer_type {
            TransformerType::GwyeDeltaGsu | TransformerType::DeltaGwyeGsu => {
                let hv = br.hv_bus.expect("validated");
                dc_buses.insert(hv);
                neutral_subs.insert(sub_of_bus(hv).expect("validated").id);
            }
            TransformerType::GwyeGwyeAuto => {
                let hv = br.hv_bus.expect("validated");
                let lv = br.other_bus(hv);
                dc_buses.insert(hv);
                dc_buses.insert(lv);
                neutral_subs.insert(sub_of_bus(lv).expect("validated").id);
            }
            TransformerType::GwyeGwye => {
                let hv = br.hv_bus.expect("validated");
                let lv = br.other_bus(hv);
                dc_buses.insert(hv);
                dc_buses.insert(lv);
                neutral_subs.insert(sub_of_bus(hv).expect("validated").id);
                neutral_subs.insert(sub_of_bus(lv).expect("validated").id);
            }
            TransformerType::ThreeWindingUngrounded | TransformerType::None => {}
        }
    }

    let mut net = DcNetwork::default();
    for &b in &dc_buses {
        net.nodes.push(DcNode {
            id: net.nodes.len(),
            kind: DcNodeKind::BusNode { bus: b },
            ground_admittance: 0.0,
        });
    }
    for &s in &neutral_subs {
        let sub = substations.iter().find(|x| x.id == s).expect("validated");
        net.nodes.push(DcNode {
            id: net.nodes.len(),
            kind: DcNodeKind::NeutralNode { substation: s },
            ground_admittance: 1.0 / sub.ground_resistance,
        });
    }

    let node_of_bus = |net: &DcNetwork, b: usize| net.node_of_bus(b).expect("inserted above");
    let node_of_neutral =
        |net: &DcNetwork, s: usize| net.node_of_neutral(s).expect("inserted above");

    let push_edge = |net: &mut DcNetwork, edge: DcEdge| {
        let id = net.edges.len();
        net.edges.push(DcEdge { id, ..edge });
    };

    // line edges first, in branch order
    for br in branches.iter().filter(|b| !b.is_transformer) {
        let sf = sub_of_bus(br.from_bus).expect("validated");
        let st = sub_of_bus(br.to_bus).expect("validated");
        let (raw_n, raw_e) = line_components(
            GeoPoint::new(sf.latitude, sf.longitude),
            GeoPoint::new(st.latitude, st.longitude),
        )
        .map_err(|e| CaseError::Data(format!("branch {}: {e}", br.id)))?;
        let raw_len = raw_n.hypot(raw_e);
        let (l_n, l_e) = if raw_len < 1e-9 {
            if br.length_km > 1e-9 {
                return Err(CaseError::ZeroSpan { id: br.id, length_km: br.length_km });
            }
            (0.0, 0.0)
        } else {
            // rescale the straight-line span onto the routed length
            let s = br.length_km / raw_len;
            (raw_n * s, raw_e * s)
        };
        let base_kv = bus(br.from_bus).expect("validated").base_kv;
        let r_ohm = br.r * base_kv * base_kv / S_BASE_MVA;
        let (from_node, to_node) = (node_of_bus(&net, br.from_bus), node_of_bus(&net, br.to_bus));
        push_edge(
            &mut net,
            DcEdge {
                id: 0,
                from_node,
                to_node,
                admittance: PHASES / r_ohm,
                kind: DcEdgeKind::Line,
                ac_edge_id: br.id,
                length_n_km: l_n,
                length_e_km: l_e,
                theta_coeff: 0.0,
            },
        );
    }

    // winding edges, in branch order
    for br in branches.iter().filter(|b| b.is_transformer) {
        if br.transformer_type == TransformerType::ThreeWindingUngrounded {
            continue;
        }
        let hv = br.hv_bus.expect("validated");
        let lv = br.other_bus(hv);
        let alpha = {
            if let Some(a) = br.turns_ratio {
                a
            } else {
                let kh = bus(hv).expect("validated").base_kv;
                let kl = bus(lv).expect("validated").base_kv;
                kh.max(kl) / kh.min(kl).max(f64::MIN_POSITIVE)
            }
        };
        let r_hv = br.r_hv_ohm.expect("validated");
        match br.transformer_type {
            TransformerType::GwyeDeltaGsu | TransformerType::DeltaGwyeGsu => {
                let sub = sub_of_bus(hv).expect("validated").id;
                let (from_node, to_node) = (node_of_bus(&net, hv), node_of_neutral(&net, sub));
                push_edge(
                    &mut net,
                    DcEdge {
                        id: 0,
                        from_node,
                        to_node,
                        admittance: PHASES / r_hv,
                        kind: DcEdgeKind::HighWinding,
                        ac_edge_id: br.id,
                        length_n_km: 0.0,
                        length_e_km: 0.0,
                        theta_coeff: 1.0,
                    },
                );
            }
            TransformerType::GwyeGwyeAuto => {
                let r_lv = br.r_lv_ohm.expect("validated");
                let sub = sub_of_bus(lv).expect("validated").id;
                let (hv_node, lv_node) = (node_of_bus(&net, hv), node_of_bus(&net, lv));
                let neutral = node_of_neutral(&net, sub);
                push_edge(
                    &mut net,
                    DcEdge {
                        id: 0,
                        from_node: hv_node,
                        to_node: lv_node,
                        admittance: PHASES / r_hv,
                        kind: DcEdgeKind::SeriesWinding,
                        ac_edge_id: br.id,
                        length_n_km: 0.0,
                        length_e_km: 0.0,
                        theta_coeff: (alpha - 1.0) / alpha,
                    },
                );
                push_edge(
                    &mut net,
                    DcEdge {
                        id: 0,
                        from_node: lv_node,
                        to_node: neutral,
                        admittance: PHASES / r_lv,
                        kind: DcEdgeKind::CommonWinding,
                        ac_edge_id: br.id,
                        length_n_km: 0.0,
                        length_e_km: 0.0,
                        theta_coeff: 1.0 / alpha,
                    },
                );
            }
            TransformerType::GwyeGwye => {
                let r_lv = br.r_lv_ohm.expect("validated");
                let sub_hv = sub_of_bus(hv).expect("validated").id;
                let sub_lv = sub_of_bus(lv).expect("validated").id;
                let (hv_node, lv_node) = (node_of_bus(&net, hv), node_of_bus(&net, lv));
                let (hv_neutral, lv_neutral) =
                    (node_of_neutral(&net, sub_hv), node_of_neutral(&net, sub_lv));
                push_edge(
                    &mut net,
                    DcEdge {
                        id: 0,
                        from_node: hv_node,
                        to_node: hv_neutral,
                        admittance: PHASES / r_hv,
                        kind: DcEdgeKind::HighWinding,
                        ac_edge_id: br.id,
                        length_n_km: 0.0,
                        length_e_km: 0.0,
                        theta_coeff: 1.0,
                    },
                );
                push_edge(
                    &mut net,
                    DcEdge {
                        id: 0,
                        from_node: lv_node,
                        to_node: lv_neutral,
                        admittance: PHASES / r_lv,
                        kind: DcEdgeKind::LowWinding,
                        ac_edge_id: br.id,
                        length_n_km: 0.0,
                        length_e_km: 0.0,
                        theta_coeff: 1.0 / alpha,
                    },
                );
            }
            _ => unreachable!("filtered above"),
        }
        net.transformers.push(DcTransformer {
            ac_edge_id: br.id,
            kind: br.transformer_type,
            alpha,
            qloss_bus: hv,
            loss_factor: br.loss_factor,
        });
    }
    // three-winding units still report a (zero) effective GIC
    for br in branches
        .iter()
        .filter(|b| b.transformer_type == TransformerType::ThreeWindingUngrounded)
    {
        net.transformers.push(DcTransformer {
            ac_edge_id: br.id,
            kind: br.transformer_type,
            alpha: 1.0,
            qloss_bus: br.hv_bus.unwrap_or(br.from_bus),
            loss_factor: br.loss_factor,
        });
    }

    Ok(net)
}
