//! Small hand-built reference cases used by tests, examples, and docs.
//!
//! All of them pass [`validate`](super::PowerCase::validate) and carry a
//! derived DC circuit, so they exercise every code path a real case does
//! while staying small enough to reason about by hand.

use super::{
    dc_from_ac, gic_cap_from, series_admittance, Branch, Bus, Generator, PowerCase, Substation,
    TransformerType,
};

fn line(id: usize, from: usize, to: usize, r: f64, x: f64, bc: f64, s: f64, km: f64) -> Branch {
    let (g, b) = series_admittance(r, x);
    Branch {
        id,
        from_bus: from,
        to_bus: to,
        r,
        x,
        g,
        b,
        b_charge: bc,
        tap: 1.0,
        s_rating: s,
        length_km: km,
        is_transformer: false,
        transformer_type: TransformerType::None,
        loss_factor: 0.0,
        hv_bus: None,
        r_hv_ohm: None,
        r_lv_ohm: None,
        turns_ratio: None,
    }
}

#[allow(clippy::too_many_arguments)]
fn gsu(id: usize, from: usize, to: usize, hv: usize, r_hv: f64, k: f64, r: f64, x: f64, s: f64) -> Branch {
    let (g, b) = series_admittance(r, x);
    Branch {
        id,
        from_bus: from,
        to_bus: to,
        r,
        x,
        g,
        b,
        b_charge: 0.0,
        tap: 1.0,
        s_rating: s,
        length_km: 0.0,
        is_transformer: true,
        transformer_type: TransformerType::GwyeDeltaGsu,
        loss_factor: k,
        hv_bus: Some(hv),
        r_hv_ohm: Some(r_hv),
        r_lv_ohm: None,
        turns_ratio: None,
    }
}

fn bus(id: usize, sub: usize, kv: f64, load_p: f64, load_q: f64) -> Bus {
    Bus {
        id,
        substation_id: sub,
        base_kv: kv,
        load_p,
        load_q,
        shunt_g: 0.0,
        shunt_b: 0.0,
        v_min: 0.9,
        v_max: 1.1,
    }
}

#[allow(clippy::too_many_arguments)]
fn gen(id: usize, at: usize, p_lo: f64, p_hi: f64, q_mag: f64, c0: f64, c1: f64, c2: f64) -> Generator {
    Generator {
        id,
        bus: at,
        gp_min: p_lo,
        gp_max: p_hi,
        gq_min: -q_mag,
        gq_max: q_mag,
        c0,
        c1,
        c2,
        cr1: 1.2 * c1,
        cr2: 1.2 * c2,
        ramp_frac: 0.25,
    }
}

fn assemble(
    buses: Vec<Bus>,
    branches: Vec<Branch>,
    generators: Vec<Generator>,
    substations: Vec<Substation>,
) -> PowerCase {
    let dc_network =
        dc_from_ac(&buses, &branches, &substations).expect("sample case must derive a DC circuit");
    let gic_cap = gic_cap_from(&buses, &branches);
    let case = PowerCase {
        buses,
        branches,
        generators,
        substations,
        dc_network,
        kappa: 1000.0,
        theta_max_deg: 30.0,
        gic_cap,
    };
    case.validate().expect("sample case must validate");
    case
}

/// One generator behind a step-up transformer feeding one load bus.
/// The DC circuit has a winding and a neutral but no line, so no storm
/// current can circulate.
pub fn two_bus() -> PowerCase {
    assemble(
        vec![bus(1, 1, 18.0, 0.0, 0.0), bus(2, 1, 345.0, 150.0, 40.0)],
        vec![gsu(0, 1, 2, 2, 0.2, 1.0, 0.003, 0.08, 300.0)],
        vec![gen(0, 1, 10.0, 250.0, 120.0, 120.0, 20.0, 0.02)],
        vec![Substation { id: 1, latitude: 44.0, longitude: -70.0, ground_resistance: 0.1 }],
    )
}

/// [`two_bus`] with the load removed; useful for checking that an idle
/// system costs nothing.
pub fn two_bus_unloaded() -> PowerCase {
    let mut case = two_bus();
    for b in &mut case.buses {
        b.load_p = 0.0;
        b.load_q = 0.0;
    }
    case
}

/// Two generator pockets joined by one east-west 500 kV line, with grounded
/// step-up units at both ends. A storm field drives current around the
/// loop line → winding → ground → earth → ground → winding, so every
/// storm-coupling path in the model is exercised. With a uniform eastward
/// field of 1 V/km the loop sees a 118 V EMF across a 11/3 ohm loop, i.e.
/// 354/11 ≈ 32.18 A through both windings.
pub fn four_bus_loop() -> PowerCase {
    assemble(
        vec![
            bus(1, 1, 18.0, 0.0, 0.0),
            bus(2, 1, 500.0, 80.0, 25.0),
            bus(3, 2, 500.0, 120.0, 35.0),
            bus(4, 2, 18.0, 0.0, 0.0),
        ],
        vec![
            gsu(0, 1, 2, 2, 0.1, 1.2, 0.002, 0.05, 400.0),
            line(1, 2, 3, 0.004, 0.04, 0.02, 400.0, 118.0),
            gsu(2, 4, 3, 3, 0.15, 0.8, 0.002, 0.05, 400.0),
        ],
        vec![
            gen(0, 1, 20.0, 250.0, 120.0, 200.0, 18.0, 0.015),
            gen(1, 4, 15.0, 200.0, 100.0, 150.0, 25.0, 0.02),
        ],
        vec![
            Substation { id: 1, latitude: 45.0, longitude: -75.0, ground_resistance: 0.1 },
            Substation { id: 2, latitude: 45.0, longitude: -73.5, ground_resistance: 0.15 },
        ],
    )
}
