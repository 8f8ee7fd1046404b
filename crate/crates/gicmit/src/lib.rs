//! Transmission-switching and dispatch planning under geomagnetic storm
//! uncertainty.
//!
//! A geomagnetic disturbance drives quasi-DC currents through transmission
//! lines and grounded transformer windings. Saturated transformers then draw
//! extra reactive power, which can force load shedding unless the operator
//! reconfigures the network. This crate models that coupling and plans
//! against it:
//!
//! * [`netmodel`] holds the AC case data and builds the DC circuit the storm
//!   currents flow through.
//! * [`geomag`] maps geographic coordinates into dipole magnetic coordinates
//!   and computes per-line displacement components.
//! * [`gic`] solves the DC circuit for a given storm field: an independent
//!   physics oracle for everything the optimizer claims.
//! * [`uncertainty`] describes storm severity per magnetic-latitude band and
//!   the polygonal support used by the robust model.
//! * [`relax`] builds the mixed-integer linear relaxation of the coupled
//!   AC/DC operating problem in a two-stage standard form.
//! * [`dro`] solves the distributionally robust two-stage problem by
//!   column-and-constraint generation.
//! * [`solverapi`] is the thin model-IR and MILP/LP backend layer.
//! * [`cli`] wires the above into the `gicmit` command-line tool.

pub mod cli;
pub mod dro;
pub mod geomag;
pub mod gic;
pub mod netmodel;
pub mod relax;
pub mod solverapi;
pub mod uncertainty;
