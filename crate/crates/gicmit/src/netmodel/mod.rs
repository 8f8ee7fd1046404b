//! Power-system data model: AC case ingestion and validation, plus
//! construction of the DC circuit that carries storm-induced currents.

mod dc;
mod epri21;
pub mod samples;
mod schema;

pub use dc::dc_from_ac;
pub use epri21::{build_epri21, EPRI21_JSON};
pub use schema::{apply_overlay, load_case, load_case_file, to_document};

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

/// System base power for per-unit conversions, MVA.
pub const S_BASE_MVA: f64 = 100.0;

/// AC bus. Loads are in MW/MVar; shunts in per-unit admittance.
#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    pub substation_id: usize,
    pub base_kv: f64,
    pub load_p: f64,
    pub load_q: f64,
    pub shunt_g: f64,
    pub shunt_b: f64,
    pub v_min: f64,
    pub v_max: f64,
}

/// Winding arrangement of a transformer, as seen by the DC circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformerType {
    /// Generator step-up: grounded wye on the network side, delta on the
    /// generator side.
    GwyeDeltaGsu,
    /// Step-up with the delta facing the network; the grounded wye still
    /// sits at `hv_bus`.
    DeltaGwyeGsu,
    /// Autotransformer: series winding between the terminals, grounded
    /// common winding on the low side.
    GwyeGwyeAuto,
    /// Two separately grounded wye windings.
    GwyeGwye,
    /// Three-winding unit with no grounded terminal: invisible to DC.
    ThreeWindingUngrounded,
    /// Not a transformer.
    None,
}

/// AC branch: a transmission line, or a transformer when `is_transformer`.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub id: usize,
    pub from_bus: usize,
    pub to_bus: usize,
    /// Series resistance, per-unit.
    pub r: f64,
    /// Series reactance, per-unit.
    pub x: f64,
    /// Series conductance r/(r^2+x^2), derived.
    pub g: f64,
    /// Series susceptance -x/(r^2+x^2), derived.
    pub b: f64,
    /// Total line-charging susceptance, per-unit.
    pub b_charge: f64,
    pub tap: f64,
    /// Thermal rating, MVA.
    pub s_rating: f64,
    /// Route length, km; zero for transformers.
    pub length_km: f64,
    pub is_transformer: bool,
    pub transformer_type: TransformerType,
    /// Reactive-loss factor k tying effective GIC to extra MVar draw.
    pub loss_factor: f64,
    /// Terminal holding the grounded wye (step-up units) or the
    /// higher-voltage winding; also where the saturation loss attaches.
    pub hv_bus: Option<usize>,
    /// Per-phase resistance of the winding at `hv_bus`, ohm.
    pub r_hv_ohm: Option<f64>,
    /// Per-phase resistance of the winding at the other terminal, ohm.
    pub r_lv_ohm: Option<f64>,
    /// Turns-ratio override; derived from terminal base kV when absent.
    pub turns_ratio: Option<f64>,
}

impl Branch {
    /// The terminal opposite `bus`.
    pub fn other_bus(&self, bus: usize) -> usize {
        if bus == self.from_bus {
            self.to_bus
        } else {
            self.from_bus
        }
    }
}

/// Derive the series admittance pair (g, b) from (r, x).
pub fn series_admittance(r: f64, x: f64) -> (f64, f64) {
    let d = r * r + x * x;
    (r / d, -x / d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: usize,
    pub bus: usize,
    pub gp_min: f64,
    pub gp_max: f64,
    pub gq_min: f64,
    pub gq_max: f64,
    /// Commitment, linear, and quadratic setpoint cost coefficients.
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// Linear and quadratic redispatch cost coefficients.
    pub cr1: f64,
    pub cr2: f64,
    /// Allowed redispatch around the setpoint as a fraction of capacity.
    pub ramp_frac: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Substation {
    pub id: usize,
    pub latitude: f64,
    pub longitude: f64,
    /// Grounding-grid resistance, ohm; 0 means ungrounded.
    pub ground_resistance: f64,
}

impl Substation {
    pub fn is_grounded(&self) -> bool {
        self.ground_resistance > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcNodeKind {
    /// Shares the potential of an AC bus.
    BusNode { bus: usize },
    /// Transformer neutral inside a substation.
    NeutralNode { substation: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcNode {
    pub id: usize,
    pub kind: DcNodeKind,
    /// Grounding admittance 1/R_ground, siemens; 0 for ungrounded nodes.
    pub ground_admittance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcEdgeKind {
    Line,
    SeriesWinding,
    CommonWinding,
    HighWinding,
    LowWinding,
    GroundLead,
}

impl DcEdgeKind {
    pub fn is_winding(self) -> bool {
        !matches!(self, DcEdgeKind::Line | DcEdgeKind::GroundLead)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcEdge {
    pub id: usize,
    pub from_node: usize,
    pub to_node: usize,
    /// Three phases in parallel: 3 / R_phase, siemens.
    pub admittance: f64,
    pub kind: DcEdgeKind,
    /// The AC branch this edge belongs to.
    pub ac_edge_id: usize,
    /// Northward displacement, km; zero for windings.
    pub length_n_km: f64,
    /// Eastward displacement, km; zero for windings.
    pub length_e_km: f64,
    /// Weight of this winding's current in the parent transformer's
    /// effective GIC; zero for lines.
    pub theta_coeff: f64,
}

/// Per-transformer DC summary: everything the GIC side needs beyond the
/// winding edges themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct DcTransformer {
    pub ac_edge_id: usize,
    pub kind: TransformerType,
    /// Turns ratio, high over low.
    pub alpha: f64,
    /// Bus receiving the saturation reactive loss.
    pub qloss_bus: usize,
    pub loss_factor: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DcNetwork {
    pub nodes: Vec<DcNode>,
    pub edges: Vec<DcEdge>,
    pub transformers: Vec<DcTransformer>,
}

impl DcNetwork {
    /// Node index for an AC bus, if the bus participates in the DC circuit.
    pub fn node_of_bus(&self, bus: usize) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| n.kind == DcNodeKind::BusNode { bus })
    }

    /// Node index of a substation neutral.
    pub fn node_of_neutral(&self, substation: usize) -> Option<usize> {
        self.nodes
            .iter()
            .position(|n| n.kind == DcNodeKind::NeutralNode { substation })
    }

    /// Winding edges belonging to one AC transformer branch.
    pub fn winding_edges_of(&self, ac_edge_id: usize) -> Vec<&DcEdge> {
        self.edges
            .iter()
            .filter(|e| e.kind.is_winding() && e.ac_edge_id == ac_edge_id)
            .collect()
    }

    pub fn transformer(&self, ac_edge_id: usize) -> Option<&DcTransformer> {
        self.transformers.iter().find(|t| t.ac_edge_id == ac_edge_id)
    }
}

/// A fully validated case: AC data, derived DC circuit, and system-wide
/// parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerCase {
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    pub substations: Vec<Substation>,
    pub dc_network: DcNetwork,
    /// Shedding / over-generation penalty, $ per MW and per MVar.
    pub kappa: f64,
    /// Angle-difference limit across in-service branches, degrees.
    pub theta_max_deg: f64,
    /// Cap on any effective GIC variable, amps: twice the largest line
    /// current bound s_e / min(v_min at the terminals).
    pub gic_cap: f64,
}

impl PowerCase {
    pub fn bus(&self, id: usize) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn branch(&self, id: usize) -> Option<&Branch> {
        self.branches.iter().find(|b| b.id == id)
    }

    pub fn generator(&self, id: usize) -> Option<&Generator> {
        self.generators.iter().find(|g| g.id == id)
    }

    pub fn substation(&self, id: usize) -> Option<&Substation> {
        self.substations.iter().find(|s| s.id == id)
    }

    /// Generators attached to a bus.
    pub fn generators_at_bus(&self, bus: usize) -> Vec<&Generator> {
        self.generators.iter().filter(|g| g.bus == bus).collect()
    }

    /// Transformer branches whose saturation loss lands on `bus`.
    pub fn transformers_at_bus(&self, bus: usize) -> Vec<&Branch> {
        self.branches
            .iter()
            .filter(|b| b.is_transformer && b.hv_bus == Some(bus))
            .collect()
    }

    /// Turns ratio of a transformer branch: explicit override, else the
    /// ratio of terminal base voltages, high over low.
    pub fn alpha(&self, branch: &Branch) -> f64 {
        if let Some(a) = branch.turns_ratio {
            return a;
        }
        let kf = self.bus(branch.from_bus).map(|b| b.base_kv).unwrap_or(1.0);
        let kt = self.bus(branch.to_bus).map(|b| b.base_kv).unwrap_or(1.0);
        let (hi, lo) = (kf.max(kt), kf.min(kt));
        if lo <= 0.0 {
            1.0
        } else {
            hi / lo
        }
    }

    /// Run all structural checks; `Ok` means the case is usable.
    pub fn validate(&self) -> Result<(), CaseError> {
        validate_parts(
            &self.buses,
            &self.branches,
            &self.generators,
            &self.substations,
        )?;
        if !(self.kappa > 0.0) {
            return Err(CaseError::Data(format!(
                "shedding penalty must be positive, got {}",
                self.kappa
            )));
        }
        if !(self.theta_max_deg > 0.0 && self.theta_max_deg < 90.0) {
            return Err(CaseError::Data(format!(
                "angle limit must lie in (0, 90) degrees, got {}",
                self.theta_max_deg
            )));
        }
        Ok(())
    }
}

/// Cap on effective GIC, amps: twice the largest line current bound.
pub fn gic_cap_from(buses: &[Bus], branches: &[Branch]) -> f64 {
    let vmin = |id: usize| {
        buses
            .iter()
            .find(|b| b.id == id)
            .map(|b| b.v_min)
            .unwrap_or(1.0)
    };
    let mut cap: f64 = 0.0;
    for br in branches.iter().filter(|b| !b.is_transformer) {
        let v = vmin(br.from_bus).min(vmin(br.to_bus));
        if v > 0.0 {
            cap = cap.max(2.0 * br.s_rating / v);
        }
    }
    if cap == 0.0 {
        // No lines means no field drive and zero storm current; any
        // positive cap is then valid, so fall back to transformer ratings
        // to keep the saturation envelopes well-formed.
        for br in branches.iter().filter(|b| b.is_transformer) {
            let v = vmin(br.from_bus).min(vmin(br.to_bus));
            if v > 0.0 {
                cap = cap.max(2.0 * br.s_rating / v);
            }
        }
    }
    cap
}

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("case parse error: {0}")]
    Parse(String),
    #[error("case has no branches")]
    EmptyBranches,
    #[error("case has no buses")]
    EmptyBuses,
    #[error("case has no substations")]
    EmptySubstations,
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: usize },
    #[error("{kind} {id} references missing {field} {target}")]
    Dangling {
        kind: &'static str,
        id: usize,
        field: &'static str,
        target: usize,
    },
    #[error("branch {id}: non-positive resistance {value}")]
    NonPositiveResistance { id: usize, value: f64 },
    #[error("transformer {id}: winding at bus {bus} has non-positive resistance {value} ohm")]
    NonPositiveWindingResistance { id: usize, bus: usize, value: f64 },
    #[error("transformer {id} is grounded at substation {substation}, which has no ground path")]
    UngroundedTransformer { id: usize, substation: usize },
    #[error("transformer {id}: hv_bus {bus} is not one of its terminals")]
    HvBusNotTerminal { id: usize, bus: usize },
    #[error("unknown transformer type \"{0}\"")]
    UnknownTransformerType(String),
    #[error("AC network is disconnected: bus {bus} unreachable from bus {root}")]
    Disconnected { bus: usize, root: usize },
    #[error("branch {id}: cannot orient a {length_km} km line between coincident substations")]
    ZeroSpan { id: usize, length_km: f64 },
    #[error("invalid case data: {0}")]
    Data(String),
}

/// Structural validation over raw parts, used both by `load_case` and by
/// `PowerCase::validate`.
pub(crate) fn validate_parts(
    buses: &[Bus],
    branches: &[Branch],
    generators: &[Generator],
    substations: &[Substation],
) -> Result<(), CaseError> {
    if buses.is_empty() {
        return Err(CaseError::EmptyBuses);
    }
    if branches.is_empty() {
        return Err(CaseError::EmptyBranches);
    }
    if substations.is_empty() {
        return Err(CaseError::EmptySubstations);
    }

    let mut bus_ids = BTreeSet::new();
    for b in buses {
        if !bus_ids.insert(b.id) {
            return Err(CaseError::DuplicateId { kind: "bus", id: b.id });
        }
    }
    let mut sub_ids = BTreeSet::new();
    for s in substations {
        if !sub_ids.insert(s.id) {
            return Err(CaseError::DuplicateId { kind: "substation", id: s.id });
        }
        if !(-90.0..=90.0).contains(&s.latitude) {
            return Err(CaseError::Data(format!(
                "substation {} latitude {} outside [-90, 90]",
                s.id, s.latitude
            )));
        }
        if !(-180.0..=180.0).contains(&s.longitude) {
            return Err(CaseError::Data(format!(
                "substation {} longitude {} outside [-180, 180]",
                s.id, s.longitude
            )));
        }
        if s.ground_resistance < 0.0 {
            return Err(CaseError::Data(format!(
                "substation {} ground resistance {} is negative",
                s.id, s.ground_resistance
            )));
        }
    }
    let mut branch_ids = BTreeSet::new();
    for br in branches {
        if !branch_ids.insert(br.id) {
            return Err(CaseError::DuplicateId { kind: "branch", id: br.id });
        }
    }
    let mut gen_ids = BTreeSet::new();
    for g in generators {
        if !gen_ids.insert(g.id) {
            return Err(CaseError::DuplicateId { kind: "generator", id: g.id });
        }
    }

    let sub_of = |bus: usize| -> Option<&Substation> {
        let b = buses.iter().find(|b| b.id == bus)?;
        substations.iter().find(|s| s.id == b.substation_id)
    };

    for b in buses {
        if !sub_ids.contains(&b.substation_id) {
            return Err(CaseError::Dangling {
                kind: "bus",
                id: b.id,
                field: "substation",
                target: b.substation_id,
            });
        }
        if !(b.base_kv > 0.0) {
            return Err(CaseError::Data(format!(
                "bus {} base voltage {} must be positive",
                b.id, b.base_kv
            )));
        }
        if !(b.v_min > 0.0 && b.v_min <= b.v_max) {
            return Err(CaseError::Data(format!(
                "bus {} voltage bounds [{}, {}] are not ordered and positive",
                b.id, b.v_min, b.v_max
            )));
        }
        for v in [b.load_p, b.load_q, b.shunt_g, b.shunt_b] {
            if !v.is_finite() {
                return Err(CaseError::Data(format!("bus {} has a non-finite value", b.id)));
            }
        }
    }

    for g in generators {
        if !bus_ids.contains(&g.bus) {
            return Err(CaseError::Dangling {
                kind: "generator",
                id: g.id,
                field: "bus",
                target: g.bus,
            });
        }
        if !(g.gp_min <= g.gp_max && g.gq_min <= g.gq_max) {
            return Err(CaseError::Data(format!(
                "generator {} has unordered capability bounds",
                g.id
            )));
        }
        if !(0.0..=1.0).contains(&g.ramp_frac) {
            return Err(CaseError::Data(format!(
                "generator {} ramp fraction {} outside [0, 1]",
                g.id, g.ramp_frac
            )));
        }
        if g.gp_min < 0.0 {
            return Err(CaseError::Data(format!(
                "generator {} minimum output {} is negative",
                g.id, g.gp_min
            )));
        }
    }

    for br in branches {
        for (field, target) in [("from_bus", br.from_bus), ("to_bus", br.to_bus)] {
            if !bus_ids.contains(&target) {
                return Err(CaseError::Dangling { kind: "branch", id: br.id, field, target });
            }
        }
        if br.from_bus == br.to_bus {
            return Err(CaseError::Data(format!("branch {} is a self-loop", br.id)));
        }
        if !(br.r > 0.0) {
            return Err(CaseError::NonPositiveResistance { id: br.id, value: br.r });
        }
        if !(br.s_rating > 0.0) {
            return Err(CaseError::Data(format!(
                "branch {} rating {} must be positive",
                br.id, br.s_rating
            )));
        }
        if !(br.tap > 0.0) {
            return Err(CaseError::Data(format!(
                "branch {} tap {} must be positive",
                br.id, br.tap
            )));
        }
        if br.loss_factor < 0.0 {
            return Err(CaseError::Data(format!(
                "branch {} loss factor {} is negative",
                br.id, br.loss_factor
            )));
        }
        if br.length_km < 0.0 {
            return Err(CaseError::Data(format!(
                "branch {} length {} is negative",
                br.id, br.length_km
            )));
        }
        if br.is_transformer {
            if br.transformer_type == TransformerType::None {
                return Err(CaseError::Data(format!(
                    "branch {} is flagged as a transformer but has no type",
                    br.id
                )));
            }
            let needs_windings =
                br.transformer_type != TransformerType::ThreeWindingUngrounded;
            if needs_windings {
                let hv = br.hv_bus.ok_or_else(|| {
                    CaseError::Data(format!("transformer {} is missing hv_bus", br.id))
                })?;
                if hv != br.from_bus && hv != br.to_bus {
                    return Err(CaseError::HvBusNotTerminal { id: br.id, bus: hv });
                }
                let r_hv = br.r_hv_ohm.ok_or_else(|| {
                    CaseError::Data(format!("transformer {} is missing r_hv_ohm", br.id))
                })?;
                if !(r_hv > 0.0) {
                    return Err(CaseError::NonPositiveWindingResistance {
                        id: br.id,
                        bus: hv,
                        value: r_hv,
                    });
                }
                let two_sided = matches!(
                    br.transformer_type,
                    TransformerType::GwyeGwye | TransformerType::GwyeGwyeAuto
                );
                if two_sided {
                    let r_lv = br.r_lv_ohm.ok_or_else(|| {
                        CaseError::Data(format!("transformer {} is missing r_lv_ohm", br.id))
                    })?;
                    if !(r_lv > 0.0) {
                        return Err(CaseError::NonPositiveWindingResistance {
                            id: br.id,
                            bus: br.other_bus(hv),
                            value: r_lv,
                        });
                    }
                }
                // every grounded winding needs a ground path at its substation
                let grounded_buses: Vec<usize> = match br.transformer_type {
                    TransformerType::GwyeDeltaGsu | TransformerType::DeltaGwyeGsu => vec![hv],
                    TransformerType::GwyeGwyeAuto => vec![br.other_bus(hv)],
                    TransformerType::GwyeGwye => vec![hv, br.other_bus(hv)],
                    _ => vec![],
                };
                for bus in grounded_buses {
                    let sub = sub_of(bus).expect("bus references were checked above");
                    if !sub.is_grounded() {
                        return Err(CaseError::UngroundedTransformer {
                            id: br.id,
                            substation: sub.id,
                        });
                    }
                }
            }
        } else if br.transformer_type != TransformerType::None {
            return Err(CaseError::Data(format!(
                "branch {} has a transformer type but is not flagged as one",
                br.id
            )));
        } else {
            // plain lines must connect buses at one voltage level
            let kv = |id: usize| buses.iter().find(|b| b.id == id).map(|b| b.base_kv);
            let (kf, kt) = (kv(br.from_bus).unwrap(), kv(br.to_bus).unwrap());
            if (kf - kt).abs() > 1e-9 * kf.max(kt) {
                return Err(CaseError::Data(format!(
                    "line {} connects different voltage levels {} and {} kV",
                    br.id, kf, kt
                )));
            }
        }
    }

    // connectivity of the all-in-service AC graph
    let idx: BTreeMap<usize, usize> =
        buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
    let mut adj = vec![Vec::new(); buses.len()];
    for br in branches {
        let (f, t) = (idx[&br.from_bus], idx[&br.to_bus]);
        adj[f].push(t);
        adj[t].push(f);
    }
    let mut seen = vec![false; buses.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(CaseError::Disconnected { bus: buses[i].id, root: buses[0].id });
    }

    Ok(())
}
