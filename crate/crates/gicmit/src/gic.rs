//! DC storm-current physics: induced EMFs, the grounded nodal solve,
//! per-transformer effective currents, and saturation reactive losses.
//!
//! This module is deliberately independent of the optimization layer; it is
//! the oracle the relaxation and the solver results are checked against.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::netmodel::{DcEdgeKind, DcNetwork, TransformerType};

/// A uniform storm electric field, volts per km, in eastward/northward
/// components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldVector {
    pub nu_e: f64,
    pub nu_n: f64,
}

impl FieldVector {
    pub const ZERO: FieldVector = FieldVector { nu_e: 0.0, nu_n: 0.0 };

    pub fn new(nu_e: f64, nu_n: f64) -> Self {
        FieldVector { nu_e, nu_n }
    }

    pub fn norm(self) -> f64 {
        self.nu_e.hypot(self.nu_n)
    }
}

/// Solved DC state. Voltages are per node (V), currents per edge (A, in the
/// edge's from-to orientation), effective currents per transformer branch
/// id, and saturation losses per bus in MVar at a flat 1.0 p.u. AC voltage.
#[derive(Debug, Clone)]
pub struct GicState {
    pub node_voltage: Vec<f64>,
    pub edge_current: Vec<f64>,
    pub effective_gic: BTreeMap<usize, f64>,
    pub qloss: BTreeMap<usize, f64>,
}

#[derive(Debug, Error)]
pub enum GicError {
    #[error("source vector has {got} entries for {expected} edges")]
    SourceLengthMismatch { expected: usize, got: usize },
    #[error("energized component with no ground path: nodes {0:?}")]
    FloatingComponent(Vec<usize>),
    #[error("transformer of type {0:?} is missing a {1:?} current")]
    MissingWinding(TransformerType, DcEdgeKind),
    #[error("effective current is undefined for {0:?}")]
    InvalidTransformer(TransformerType),
}

/// Per-edge induced EMF (volts) for a uniform field: the dot product of the
/// field with the edge's displacement components. Windings have no
/// geographic extent and receive zero.
pub fn induced_voltages(field: FieldVector, net: &DcNetwork) -> Vec<f64> {
    net.edges
        .iter()
        .map(|e| field.nu_n * e.length_n_km + field.nu_e * e.length_e_km)
        .collect()
}

/// Solve the grounded DC network for node voltages and edge currents.
///
/// `is_on` gives the in-service state per *AC* branch id; every DC edge of a
/// switched-off branch is removed. `sources` is the per-edge EMF vector in
/// `net.edges` order, normally from [`induced_voltages`].
pub fn solve_gic(
    net: &DcNetwork,
    is_on: &dyn Fn(usize) -> bool,
    sources: &[f64],
) -> Result<GicState, GicError> {
    let n = net.nodes.len();
    if sources.len() != net.edges.len() {
        return Err(GicError::SourceLengthMismatch {
            expected: net.edges.len(),
            got: sources.len(),
        });
    }

    let on = |idx: usize| is_on(net.edges[idx].ac_edge_id);

    // floating-component check: union-find over in-service edges
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for (idx, e) in net.edges.iter().enumerate() {
        if on(idx) {
            let (a, b) = (find(&mut parent, e.from_node), find(&mut parent, e.to_node));
            if a != b {
                parent[a] = b;
            }
        }
    }
    let mut ground_of_root: BTreeMap<usize, f64> = BTreeMap::new();
    let mut size_of_root: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        *ground_of_root.entry(r).or_insert(0.0) += net.nodes[i].ground_admittance;
        *size_of_root.entry(r).or_insert(0) += 1;
    }
    for (&r, &g) in &ground_of_root {
        if size_of_root[&r] > 1 && g <= 0.0 {
            let nodes: Vec<usize> =
                (0..n).filter(|&i| find(&mut parent, i) == r).collect();
            return Err(GicError::FloatingComponent(nodes));
        }
    }

    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut j = DVector::<f64>::zeros(n);
    for (idx, e) in net.edges.iter().enumerate() {
        if !on(idx) {
            continue;
        }
        let (f, t) = (e.from_node, e.to_node);
        a[(f, f)] += e.admittance;
        a[(t, t)] += e.admittance;
        a[(f, t)] -= e.admittance;
        a[(t, f)] -= e.admittance;
        j[f] -= e.admittance * sources[idx];
        j[t] += e.admittance * sources[idx];
    }
    for node in &net.nodes {
        a[(node.id, node.id)] += node.ground_admittance;
    }
    // isolated ungrounded nodes have an all-zero row; pin them to 0 V
    for i in 0..n {
        if a[(i, i)] == 0.0 {
            a[(i, i)] = 1.0;
            j[i] = 0.0;
        }
    }

    let v = a
        .lu()
        .solve(&j)
        .expect("grounded components are positive definite after the floating check");

    let edge_current: Vec<f64> = net
        .edges
        .iter()
        .enumerate()
        .map(|(idx, e)| {
            if on(idx) {
                e.admittance * (v[e.from_node] - v[e.to_node] + sources[idx])
            } else {
                0.0
            }
        })
        .collect();

    let mut effective = BTreeMap::new();
    for t in &net.transformers {
        let sum: f64 = net
            .edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.kind.is_winding() && e.ac_edge_id == t.ac_edge_id)
            .map(|(idx, e)| e.theta_coeff * edge_current[idx])
            .sum();
        effective.insert(t.ac_edge_id, sum.abs());
    }

    let mut qloss = BTreeMap::new();
    for t in &net.transformers {
        *qloss.entry(t.qloss_bus).or_insert(0.0) +=
            t.loss_factor * 1.0 * effective[&t.ac_edge_id];
    }

    Ok(GicState { node_voltage: v.iter().copied().collect(), edge_current, effective_gic: effective, qloss })
}

/// Effective GIC of one transformer from its winding currents, amps.
///
/// The effective value is the ampere-turn-weighted magnitude referred to the
/// high side: `|I_h|` for a step-up unit, `|((a-1) I_series + I_common)/a|`
/// for an autotransformer, and `|(a I_h + I_l)/a|` for a grounded-wye pair,
/// with `a` the turns ratio. Ungrounded three-winding units carry none.
pub fn effective_gic(
    kind: TransformerType,
    alpha: f64,
    windings: &[(DcEdgeKind, f64)],
) -> Result<f64, GicError> {
    let get = |k: DcEdgeKind| -> Result<f64, GicError> {
        windings
            .iter()
            .find(|(kk, _)| *kk == k)
            .map(|(_, i)| *i)
            .ok_or(GicError::MissingWinding(kind, k))
    };
    match kind {
        TransformerType::GwyeDeltaGsu | TransformerType::DeltaGwyeGsu => {
            Ok(get(DcEdgeKind::HighWinding)?.abs())
        }
        TransformerType::GwyeGwyeAuto => {
            let is = get(DcEdgeKind::SeriesWinding)?;
            let ic = get(DcEdgeKind::CommonWinding)?;
            Ok((((alpha - 1.0) * is + ic) / alpha).abs())
        }
        TransformerType::GwyeGwye => {
            let ih = get(DcEdgeKind::HighWinding)?;
            let il = get(DcEdgeKind::LowWinding)?;
            Ok(((alpha * ih + il) / alpha).abs())
        }
        TransformerType::ThreeWindingUngrounded => Ok(0.0),
        TransformerType::None => Err(GicError::InvalidTransformer(kind)),
    }
}

/// Saturation reactive demand at a bus, MVar: the sum over transformers
/// whose loss lands there of `k * v * I_eff`, with `v` the bus voltage
/// magnitude in p.u. and currents in amps.
pub fn qloss_at_bus(
    net: &DcNetwork,
    bus: usize,
    v: f64,
    effective: &BTreeMap<usize, f64>,
) -> f64 {
    net.transformers
        .iter()
        .filter(|t| t.qloss_bus == bus)
        .map(|t| t.loss_factor * v * effective.get(&t.ac_edge_id).copied().unwrap_or(0.0))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{build_epri21, DcEdge, DcNode, DcNodeKind};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_on(_: usize) -> bool {
        true
    }

    fn two_node_net() -> DcNetwork {
        DcNetwork {
            nodes: vec![
                DcNode { id: 0, kind: DcNodeKind::BusNode { bus: 1 }, ground_admittance: 1.0 },
                DcNode { id: 1, kind: DcNodeKind::BusNode { bus: 2 }, ground_admittance: 1.0 },
            ],
            edges: vec![DcEdge {
                id: 0,
                from_node: 0,
                to_node: 1,
                admittance: 1.0,
                kind: DcEdgeKind::Line,
                ac_edge_id: 1,
                length_n_km: 0.0,
                length_e_km: 1000.0,
                theta_coeff: 0.0,
            }],
            transformers: vec![],
        }
    }

    #[test]
    fn two_node_circuit_by_hand() {
        // 1 volt EMF, unit admittances everywhere: a third of the EMF drives
        // the loop, voltages split symmetrically
        let net = two_node_net();
        let state = solve_gic(&net, &all_on, &[1.0]).unwrap();
        assert_relative_eq!(state.node_voltage[0], -1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(state.node_voltage[1], 1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(state.edge_current[0], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_field_means_zero_state() {
        let case = build_epri21();
        let net = &case.dc_network;
        let sources = induced_voltages(FieldVector::ZERO, net);
        let state = solve_gic(net, &all_on, &sources).unwrap();
        assert!(state.node_voltage.iter().all(|v| v.abs() < 1e-12));
        assert!(state.edge_current.iter().all(|i| i.abs() < 1e-12));
        assert!(state.effective_gic.values().all(|i| *i < 1e-12));
        assert!(state.qloss.values().all(|q| *q < 1e-12));
    }

    #[test]
    fn response_is_linear_in_the_field() {
        let case = build_epri21();
        let net = &case.dc_network;
        let s1 = induced_voltages(FieldVector::new(2.0, -1.0), net);
        let s3: Vec<f64> = s1.iter().map(|v| 3.0 * v).collect();
        let a = solve_gic(net, &all_on, &s1).unwrap();
        let b = solve_gic(net, &all_on, &s3).unwrap();
        for (x, y) in a.node_voltage.iter().zip(&b.node_voltage) {
            assert_relative_eq!(3.0 * x, *y, epsilon = 1e-9, max_relative = 1e-9);
        }
        for (x, y) in a.edge_current.iter().zip(&b.edge_current) {
            assert_relative_eq!(3.0 * x, *y, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn switched_off_branch_carries_nothing_and_matches_reduced_network() {
        let case = build_epri21();
        let net = &case.dc_network;
        let sources = induced_voltages(FieldVector::new(4.0, 7.0), net);
        let off_branch = 4usize;
        let is_on = |id: usize| id != off_branch;
        let a = solve_gic(net, &is_on, &sources).unwrap();
        let off_idx = net
            .edges
            .iter()
            .position(|e| e.ac_edge_id == off_branch)
            .unwrap();
        assert_eq!(a.edge_current[off_idx], 0.0);

        // physically delete the edge instead and compare voltages
        let mut reduced = net.clone();
        reduced.edges.retain(|e| e.ac_edge_id != off_branch);
        let reduced_sources = induced_voltages(FieldVector::new(4.0, 7.0), &reduced);
        let b = solve_gic(&reduced, &all_on, &reduced_sources).unwrap();
        for (x, y) in a.node_voltage.iter().zip(&b.node_voltage) {
            assert_relative_eq!(x, y, epsilon = 1e-9, max_relative = 1e-9);
        }
    }

    #[test]
    fn ground_currents_sum_to_zero() {
        let case = build_epri21();
        let net = &case.dc_network;
        let sources = induced_voltages(FieldVector::new(8.4, 3.4), net);
        let state = solve_gic(net, &all_on, &sources).unwrap();
        let total: f64 = net
            .nodes
            .iter()
            .map(|n| n.ground_admittance * state.node_voltage[n.id])
            .sum();
        let scale: f64 = net
            .nodes
            .iter()
            .map(|n| (n.ground_admittance * state.node_voltage[n.id]).abs())
            .sum();
        assert!(total.abs() <= 1e-9 * scale.max(1.0));
    }

    #[test]
    fn nodal_balance_holds() {
        let case = build_epri21();
        let net = &case.dc_network;
        let sources = induced_voltages(FieldVector::new(-3.0, 9.5), net);
        let state = solve_gic(net, &all_on, &sources).unwrap();
        for node in &net.nodes {
            let mut net_in = 0.0;
            for (idx, e) in net.edges.iter().enumerate() {
                if e.to_node == node.id {
                    net_in += state.edge_current[idx];
                }
                if e.from_node == node.id {
                    net_in -= state.edge_current[idx];
                }
            }
            let ground = node.ground_admittance * state.node_voltage[node.id];
            assert!(
                (net_in - ground).abs() < 1e-9 * (1.0 + ground.abs()),
                "node {} imbalance {}",
                node.id,
                net_in - ground
            );
        }
    }

    #[test]
    fn floating_component_is_an_error() {
        let mut net = two_node_net();
        net.nodes[0].ground_admittance = 0.0;
        net.nodes[1].ground_admittance = 0.0;
        let err = solve_gic(&net, &all_on, &[1.0]).unwrap_err();
        assert!(matches!(err, GicError::FloatingComponent(nodes) if nodes == vec![0, 1]));
    }

    #[test]
    fn effective_current_formulas() {
        use DcEdgeKind::*;
        use TransformerType::*;
        let cases: [(TransformerType, f64, &[(DcEdgeKind, f64)], f64); 12] = [
            (GwyeDeltaGsu, 1.0, &[(HighWinding, -5.0)], 5.0),
            (GwyeDeltaGsu, 1.0, &[(HighWinding, 3.5)], 3.5),
            (GwyeGwyeAuto, 2.0, &[(SeriesWinding, 3.0), (CommonWinding, 1.0)], 2.0),
            (GwyeGwyeAuto, 2.0, &[(SeriesWinding, -3.0), (CommonWinding, -1.0)], 2.0),
            (GwyeGwyeAuto, 4.0, &[(SeriesWinding, 2.0), (CommonWinding, 6.0)], 3.0),
            (GwyeGwyeAuto, 1.5, &[(SeriesWinding, 4.0), (CommonWinding, -1.0)], 2.0 / 3.0),
            (GwyeGwye, 2.0, &[(HighWinding, 1.0), (LowWinding, 2.0)], 2.0),
            (GwyeGwye, 2.0, &[(HighWinding, -1.0), (LowWinding, -2.0)], 2.0),
            (GwyeGwye, 3.0, &[(HighWinding, 2.0), (LowWinding, -3.0)], 1.0),
            (GwyeGwye, 2.5, &[(HighWinding, 0.0), (LowWinding, 5.0)], 2.0),
            (ThreeWindingUngrounded, 1.0, &[], 0.0),
            (ThreeWindingUngrounded, 2.0, &[(HighWinding, 9.0)], 0.0),
        ];
        for (kind, alpha, windings, want) in cases {
            let got = effective_gic(kind, alpha, windings).unwrap();
            assert_relative_eq!(got, want, epsilon = 1e-12, max_relative = 1e-12);
        }
        // a missing winding is an error, not a zero
        assert!(matches!(
            effective_gic(GwyeGwye, 2.0, &[(HighWinding, 1.0)]),
            Err(GicError::MissingWinding(GwyeGwye, LowWinding))
        ));
    }

    #[test]
    fn solver_effective_matches_formula_on_the_benchmark() {
        let case = build_epri21();
        let net = &case.dc_network;
        let sources = induced_voltages(FieldVector::new(4.31, 10.66), net);
        let state = solve_gic(net, &all_on, &sources).unwrap();
        for t in &net.transformers {
            let windings: Vec<(DcEdgeKind, f64)> = net
                .edges
                .iter()
                .enumerate()
                .filter(|(_, e)| e.kind.is_winding() && e.ac_edge_id == t.ac_edge_id)
                .map(|(idx, e)| (e.kind, state.edge_current[idx]))
                .collect();
            let want = effective_gic(t.kind, t.alpha, &windings).unwrap();
            assert_relative_eq!(
                state.effective_gic[&t.ac_edge_id],
                want,
                epsilon = 1e-9,
                max_relative = 1e-9
            );
        }
        // a storm of this size must actually bite
        assert!(state.effective_gic.values().any(|i| *i > 10.0));
    }

    #[test]
    fn qloss_arithmetic() {
        let case = build_epri21();
        let net = &case.dc_network;
        let mut eff = BTreeMap::new();
        for t in &net.transformers {
            eff.insert(t.ac_edge_id, 10.0);
        }
        // bus 2 hosts exactly the unit with k = 1.2
        assert_relative_eq!(qloss_at_bus(net, 2, 1.0, &eff), 12.0, epsilon = 1e-12);
        // k scales with voltage
        assert_relative_eq!(qloss_at_bus(net, 2, 0.9, &eff), 10.8, epsilon = 1e-12);
        // bus 3 hosts four units, all k = 1.6
        assert_relative_eq!(qloss_at_bus(net, 3, 1.0, &eff), 64.0, epsilon = 1e-12);
        // a bus without transformers sees none
        assert_relative_eq!(qloss_at_bus(net, 5, 1.0, &eff), 0.0, epsilon = 1e-12);
    }

    /// Independent check: assemble the full (voltage, current) linear system
    /// with both unknown classes explicit and compare against the nodal
    /// elimination the solver uses.
    #[test]
    fn random_networks_match_full_system_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..100 {
            let n = rng.gen_range(2..=6);
            let mut nodes = Vec::new();
            for i in 0..n {
                nodes.push(DcNode {
                    id: i,
                    kind: DcNodeKind::BusNode { bus: i + 1 },
                    ground_admittance: if rng.gen_bool(0.7) {
                        rng.gen_range(0.5..10.0)
                    } else {
                        0.0
                    },
                });
            }
            // spanning chain keeps it connected, then random extras
            let mut edges = Vec::new();
            for i in 1..n {
                edges.push((i - 1, i));
            }
            for _ in 0..rng.gen_range(0..4) {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a != b {
                    edges.push((a, b));
                }
            }
            let edges: Vec<DcEdge> = edges
                .into_iter()
                .enumerate()
                .map(|(idx, (f, t))| DcEdge {
                    id: idx,
                    from_node: f,
                    to_node: t,
                    admittance: rng.gen_range(0.2..30.0),
                    kind: DcEdgeKind::Line,
                    ac_edge_id: idx + 1,
                    length_n_km: 0.0,
                    length_e_km: 0.0,
                    theta_coeff: 0.0,
                })
                .collect();
            let net = DcNetwork { nodes, edges, transformers: vec![] };
            if net.nodes.iter().all(|x| x.ground_admittance == 0.0) {
                continue; // would rightly error as floating
            }
            let sources: Vec<f64> =
                (0..net.edges.len()).map(|_| rng.gen_range(-500.0..500.0)).collect();

            let state = match solve_gic(&net, &all_on, &sources) {
                Ok(s) => s,
                Err(GicError::FloatingComponent(_)) => continue,
                Err(e) => panic!("trial {trial}: {e}"),
            };

            // unknowns: n voltages then m currents
            let m = net.edges.len();
            let dim = n + m;
            let mut big = DMatrix::<f64>::zeros(dim, dim);
            let mut rhs = DVector::<f64>::zeros(dim);
            for (idx, e) in net.edges.iter().enumerate() {
                // I - a v_f + a v_t = a emf
                big[(idx, n + idx)] = 1.0;
                big[(idx, e.from_node)] = -e.admittance;
                big[(idx, e.to_node)] = e.admittance;
                rhs[idx] = e.admittance * sources[idx];
            }
            for node in &net.nodes {
                let row = m + node.id;
                for (idx, e) in net.edges.iter().enumerate() {
                    if e.to_node == node.id {
                        big[(row, n + idx)] += 1.0;
                    }
                    if e.from_node == node.id {
                        big[(row, n + idx)] -= 1.0;
                    }
                }
                big[(row, node.id)] -= node.ground_admittance;
                if node.ground_admittance == 0.0
                    && net
                        .edges
                        .iter()
                        .all(|e| e.from_node != node.id && e.to_node != node.id)
                {
                    big[(row, node.id)] = 1.0; // isolated: pin to zero
                }
            }
            let full = big.lu().solve(&rhs);
            let full = match full {
                Some(f) => f,
                None => continue, // degenerate random instance
            };
            for i in 0..n {
                assert_relative_eq!(
                    state.node_voltage[i],
                    full[i],
                    epsilon = 1e-7,
                    max_relative = 1e-7
                );
            }
            for idx in 0..m {
                assert_relative_eq!(
                    state.edge_current[idx],
                    full[n + idx],
                    epsilon = 1e-7,
                    max_relative = 1e-7
                );
            }
        }
    }
}
