//! The shipped benchmark case: a 19-bus, 8-substation system with fifteen
//! transmission lines and fifteen transformers across 500/345/22 kV levels,
//! sited in eastern Canada so every substation falls in the 55-60 degree
//! magnetic-latitude band.
//!
//! Winding arrangements, winding resistances, substation coordinates,
//! grounding resistances, line lengths, and generator capability/cost data
//! are fixed benchmark inputs; the remaining electrical parameters are
//! representative EHV values consistent with the route lengths.

use super::{load_case, PowerCase};

/// Raw JSON text of the embedded benchmark; the base document for overlays.
pub const EPRI21_JSON: &str = include_str!("epri21.json");

/// Build the benchmark case. The embedded document is validated on every
/// call; failure is a programming error.
pub fn build_epri21() -> PowerCase {
    load_case(EPRI21_JSON).expect("embedded benchmark case must validate")
}
