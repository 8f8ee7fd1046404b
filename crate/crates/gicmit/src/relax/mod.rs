//! Polyhedral relaxation of the joint switching / storm-current model.
//!
//! Every nonlinearity in the operating model (squared voltages, gated
//! trigonometric products, thermal circles, and the bilinear storm-current
//! terms) is replaced by linear envelopes: tangent outer approximations,
//! secants, McCormick boxes, and projected cone cuts. The builders here are
//! pure coefficient generators; [`build_standard_form`] assembles them into
//! a two-stage standard form over first-stage switching variables and
//! second-stage operating variables.

mod build;

pub use build::{
    build_standard_form, CouplingRow, FirstStageRow, ModelMeta, RecourseRow, Relation,
    StandardFormModel, YVarDef,
};
pub(crate) use build::coupling_dot;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RelaxError {
    #[error("interval [{lo}, {hi}] is empty or not finite")]
    BadInterval { lo: f64, hi: f64 },
    #[error("{n} interpolation points requested; at least 2 are needed")]
    TooFewPoints { n: usize },
    #[error("cannot build an envelope over the unbounded factor {what}")]
    UnboundedFactor { what: String },
    #[error("case cannot be relaxed: {0}")]
    BadCase(String),
}

/// Uniformly spaced interpolation points spanning a closed interval.
#[derive(Debug, Clone, PartialEq)]
pub struct LinPointSet {
    pub lower: f64,
    pub upper: f64,
    pub points: Vec<f64>,
}

/// `n` equally spaced points on `[lb, ub]`, endpoints included.
pub fn lin_points(lb: f64, ub: f64, n: usize) -> Result<LinPointSet, RelaxError> {
    if !(lb.is_finite() && ub.is_finite() && lb < ub) {
        return Err(RelaxError::BadInterval { lo: lb, hi: ub });
    }
    if n < 2 {
        return Err(RelaxError::TooFewPoints { n });
    }
    let step = (ub - lb) / (n - 1) as f64;
    let mut points: Vec<f64> = (0..n).map(|i| lb + step * i as f64).collect();
    // exact endpoints regardless of rounding
    points[0] = lb;
    points[n - 1] = ub;
    Ok(LinPointSet { lower: lb, upper: ub, points })
}

/// How many cuts a count-per-axis setting produces and where they sit.
#[derive(Debug, Clone)]
pub struct RelaxConfig {
    /// Points for one-dimensional quadratic envelopes (setpoint cost,
    /// deviation cost, squared voltage).
    pub n_points_quadratic: usize,
    /// Points per axis for the four-dimensional cone-cut grid.
    pub n_points_rsoc: usize,
    /// Points per axis for the thermal-circle tangent grid.
    pub n_points_thermal: usize,
    /// Tolerance used when checking a point against emitted rows.
    pub feas_tol: f64,
    /// Largest storm-field magnitude (V/km) the model must stay valid for;
    /// sizes the potential-difference boxes of the DC circuit.
    pub field_bound: f64,
}

impl Default for RelaxConfig {
    fn default() -> Self {
        RelaxConfig {
            n_points_quadratic: 8,
            n_points_rsoc: 3,
            n_points_thermal: 8,
            feas_tol: 1e-8,
            field_bound: 20.0,
        }
    }
}

impl RelaxConfig {
    /// Coarser grids for quick solves and tests.
    pub fn lean() -> Self {
        RelaxConfig { n_points_quadratic: 3, n_points_rsoc: 2, n_points_thermal: 4, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), RelaxError> {
        for n in [self.n_points_quadratic, self.n_points_rsoc, self.n_points_thermal] {
            if n < 2 {
                return Err(RelaxError::TooFewPoints { n });
            }
        }
        if !(self.field_bound.is_finite() && self.field_bound > 0.0) {
            return Err(RelaxError::BadInterval { lo: 0.0, hi: self.field_bound });
        }
        Ok(())
    }
}

/// One gated tangent of a quadratic: `sq ≥ slope·x − gate·z`.
///
/// With the indicator at one and `x` at the tangent point the cut is tight;
/// with the indicator at zero it degenerates to `sq ≥ slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerspectiveCut {
    pub slope: f64,
    pub gate: f64,
}

/// Gated tangents of `x²` at each interpolation point.
pub fn perspective_oa(points: &LinPointSet) -> Vec<PerspectiveCut> {
    points
        .points
        .iter()
        .map(|&l| PerspectiveCut { slope: 2.0 * l, gate: l * l })
        .collect()
}

impl PerspectiveCut {
    pub fn satisfied(&self, sq: f64, x: f64, z: f64, tol: f64) -> bool {
        sq >= self.slope * x - self.gate * z - tol
    }
}

/// Ungated tangent of a square: `w ≥ slope·v − offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareCut {
    pub slope: f64,
    pub offset: f64,
}

/// Chord over a square: `w ≤ slope·v − offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecantCut {
    pub slope: f64,
    pub offset: f64,
}

/// Envelope of `w = v²` over a voltage band: one secant above, tangents below.
#[derive(Debug, Clone)]
pub struct VoltageEnvelope {
    pub secant: SecantCut,
    pub tangents: Vec<SquareCut>,
}

pub fn voltage_square_relax(v_lo: f64, v_hi: f64, n: usize) -> Result<VoltageEnvelope, RelaxError> {
    let pts = lin_points(v_lo, v_hi, n)?;
    let tangents = pts
        .points
        .iter()
        .map(|&l| SquareCut { slope: 2.0 * l, offset: l * l })
        .collect();
    Ok(VoltageEnvelope {
        secant: SecantCut { slope: v_lo + v_hi, offset: v_lo * v_hi },
        tangents,
    })
}

impl VoltageEnvelope {
    pub fn contains(&self, w: f64, v: f64, tol: f64) -> bool {
        if w > self.secant.slope * v - self.secant.offset + tol {
            return false;
        }
        self.tangents.iter().all(|t| w >= t.slope * v - t.offset - tol)
    }
}

/// One face of a product envelope, written `c_prod·u + c_x·x + c_y·y ≥ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McRow {
    pub c_prod: f64,
    pub c_x: f64,
    pub c_y: f64,
    pub rhs: f64,
}

/// The four-face box envelope of a product `u = x·y` over bounded factors.
#[derive(Debug, Clone, Copy)]
pub struct McEnvelope {
    pub rows: [McRow; 4],
}

/// Box envelope of `x·y`; exact at the box corners and, when one factor is
/// binary, exact at both of its values.
pub fn mccormick(x_bounds: (f64, f64), y_bounds: (f64, f64)) -> Result<McEnvelope, RelaxError> {
    let (xl, xu) = x_bounds;
    let (yl, yu) = y_bounds;
    if !(xl.is_finite() && xu.is_finite()) {
        return Err(RelaxError::UnboundedFactor { what: format!("x in [{xl}, {xu}]") });
    }
    if !(yl.is_finite() && yu.is_finite()) {
        return Err(RelaxError::UnboundedFactor { what: format!("y in [{yl}, {yu}]") });
    }
    if xl > xu {
        return Err(RelaxError::BadInterval { lo: xl, hi: xu });
    }
    if yl > yu {
        return Err(RelaxError::BadInterval { lo: yl, hi: yu });
    }
    Ok(McEnvelope {
        rows: [
            // u ≥ xl·y + yl·x − xl·yl
            McRow { c_prod: 1.0, c_x: -yl, c_y: -xl, rhs: -xl * yl },
            // u ≥ xu·y + yu·x − xu·yu
            McRow { c_prod: 1.0, c_x: -yu, c_y: -xu, rhs: -xu * yu },
            // u ≤ xl·y + yu·x − xl·yu
            McRow { c_prod: -1.0, c_x: yu, c_y: xl, rhs: xl * yu },
            // u ≤ xu·y + yl·x − xu·yl
            McRow { c_prod: -1.0, c_x: yl, c_y: xu, rhs: xu * yl },
        ],
    })
}

impl McEnvelope {
    pub fn contains(&self, u: f64, x: f64, y: f64, tol: f64) -> bool {
        self.rows
            .iter()
            .all(|r| r.c_prod * u + r.c_x * x + r.c_y * y >= r.rhs - tol)
    }

    /// The interval of product values the envelope admits at fixed factors.
    pub fn value_range(&self, x: f64, y: f64) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for r in &self.rows {
            // c_prod is ±1 by construction
            let bound = r.rhs - r.c_x * x - r.c_y * y;
            if r.c_prod > 0.0 {
                lo = lo.max(bound);
            } else {
                hi = hi.min(-bound);
            }
        }
        (lo, hi)
    }
}

/// One projected tangent of the cone `(w^c)² + (w^s)² ≤ w^z_f·w^z_t`,
/// written `c_sq_from·w^z_f + c_sq_to·w^z_t − c_cos·w^c − c_sin·w^s ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeCut {
    pub c_cos: f64,
    pub c_sin: f64,
    pub c_sq_from: f64,
    pub c_sq_to: f64,
}

impl ConeCut {
    pub fn satisfied(&self, wc: f64, ws: f64, sq_from: f64, sq_to: f64, tol: f64) -> bool {
        self.c_sq_from * sq_from + self.c_sq_to * sq_to - self.c_cos * wc - self.c_sin * ws
            >= -tol
    }
}

/// Cuts tying the gated cosine/sine products to the gated squared voltages.
#[derive(Debug, Clone)]
pub struct TrigRelax {
    /// Bounds for the cosine product when the branch is on.
    pub cos_box: (f64, f64),
    /// Symmetric magnitude bound for the sine product when on.
    pub sin_mag: f64,
    /// `tan` of the angle-difference limit, for the link rows.
    pub tan_limit: f64,
    pub cone_cuts: Vec<ConeCut>,
}

/// Envelope for the pair `(w^c, w^s) = (v_i·v_j·cos Δθ, v_i·v_j·sin Δθ)`
/// against the per-side squared voltages. Tangent directions are sampled on
/// a grid and projected onto the cone surface so every emitted cut is valid
/// for the exact products.
pub fn trig_product_relax(
    v_from: (f64, f64),
    v_to: (f64, f64),
    theta_max_rad: f64,
    n_dir: usize,
    n_sq: usize,
) -> Result<TrigRelax, RelaxError> {
    if !(theta_max_rad > 0.0 && theta_max_rad < std::f64::consts::FRAC_PI_2) {
        return Err(RelaxError::BadInterval { lo: 0.0, hi: theta_max_rad });
    }
    for (lo, hi) in [v_from, v_to] {
        if !(lo > 0.0 && hi > lo) {
            return Err(RelaxError::BadInterval { lo, hi });
        }
    }
    let cos_lo = v_from.0 * v_to.0 * theta_max_rad.cos();
    let cos_hi = v_from.1 * v_to.1;
    let sin_mag = v_from.1 * v_to.1 * theta_max_rad.sin();
    let dirs_c = lin_points(cos_lo, cos_hi, n_dir)?;
    let dirs_s = lin_points(-sin_mag, sin_mag, n_dir)?;
    let sq_f = lin_points(v_from.0 * v_from.0, v_from.1 * v_from.1, n_sq)?;
    let sq_t = lin_points(v_to.0 * v_to.0, v_to.1 * v_to.1, n_sq)?;
    let mut cone_cuts = Vec::with_capacity(n_dir * n_dir * n_sq * n_sq);
    for &lc in &dirs_c.points {
        for &ls in &dirs_s.points {
            let norm_sq = lc * lc + ls * ls;
            if norm_sq < 1e-30 {
                continue;
            }
            for &lf in &sq_f.points {
                for &lt in &sq_t.points {
                    // scale the direction onto the cone surface at (lf, lt)
                    let r = (lf * lt / norm_sq).sqrt();
                    cone_cuts.push(ConeCut {
                        c_cos: 2.0 * r * lc,
                        c_sin: 2.0 * r * ls,
                        c_sq_from: lt,
                        c_sq_to: lf,
                    });
                }
            }
        }
    }
    Ok(TrigRelax { cos_box: (cos_lo, cos_hi), sin_mag, tan_limit: theta_max_rad.tan(), cone_cuts })
}

/// One tangent of the thermal circle, `c_p·p + c_q·q ≤ c_gate·z`, in
/// per-unit flow coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalCut {
    pub c_p: f64,
    pub c_q: f64,
    pub c_gate: f64,
}

impl ThermalCut {
    pub fn satisfied(&self, p: f64, q: f64, z: f64, tol: f64) -> bool {
        self.c_p * p + self.c_q * q <= self.c_gate * z + tol
    }
}

/// Tangent cuts of `p² + q² ≤ z·s²` over a square grid of tangent points.
/// The grid includes the corners, which pin the flow to zero when the gate
/// is open.
pub fn thermal_oa(s_pu: f64, n: usize) -> Result<Vec<ThermalCut>, RelaxError> {
    if !(s_pu.is_finite() && s_pu > 0.0) {
        return Err(RelaxError::BadInterval { lo: -s_pu, hi: s_pu });
    }
    let pts = lin_points(-s_pu, s_pu, n)?;
    let mut cuts = Vec::with_capacity(n * n);
    for &lp in &pts.points {
        for &lq in &pts.points {
            cuts.push(ThermalCut {
                c_p: 2.0 * lp,
                c_q: 2.0 * lq,
                c_gate: s_pu * s_pu + lp * lp + lq * lq,
            });
        }
    }
    Ok(cuts)
}

/// Product envelopes for the storm-current couplings: transformer heating
/// `u = v·Ĩ` and the gated potential drop `u = z·(v_m − v_n)`.
#[derive(Debug, Clone, Copy)]
pub struct GicEnvelopes {
    pub heat: McEnvelope,
    pub gate_drop: McEnvelope,
}

pub fn gic_bilinear_relax(
    v_bounds: (f64, f64),
    gic_cap: f64,
    drop_bound: f64,
) -> Result<GicEnvelopes, RelaxError> {
    if !(gic_cap.is_finite() && gic_cap > 0.0) {
        return Err(RelaxError::UnboundedFactor { what: format!("effective current cap {gic_cap}") });
    }
    if !(drop_bound.is_finite() && drop_bound > 0.0) {
        return Err(RelaxError::UnboundedFactor { what: format!("potential drop bound {drop_bound}") });
    }
    Ok(GicEnvelopes {
        heat: mccormick(v_bounds, (0.0, gic_cap))?,
        gate_drop: mccormick((0.0, 1.0), (-drop_bound, drop_bound))?,
    })
}
