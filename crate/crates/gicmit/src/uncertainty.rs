//! Storm uncertainty model.
//!
//! A geomagnetic storm induces a quasi-static geo-electric field, described
//! here by its eastward/northward components (V/km). The field magnitude is
//! bounded by a severity-dependent peak amplitude, so the support of the
//! random field vector is a half-disc (northward component nonnegative).
//! This module carries the severity/latitude parameter table, builds the
//! polygonal inner approximation of the half-disc used by the robust solver
//! (vertices on the bounding circle at a uniform angular spacing), and tests
//! whether a mean vector lies in the convex hull of those vertices.
//!
//! Tuple order is `(east, north)` everywhere in this API.

use std::fmt;
use std::str::FromStr;

/// Storm severity class, in increasing order of ground-level disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StormLevel {
    Strong,
    Severe,
    Extreme,
}

impl StormLevel {
    /// All severity classes, weakest first.
    pub const ALL: [StormLevel; 3] = [StormLevel::Strong, StormLevel::Severe, StormLevel::Extreme];

    /// Lowercase name, as used in CLI arguments and report files.
    pub fn as_str(&self) -> &'static str {
        match self {
            StormLevel::Strong => "strong",
            StormLevel::Severe => "severe",
            StormLevel::Extreme => "extreme",
        }
    }
}

impl fmt::Display for StormLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StormLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "strong" => Ok(StormLevel::Strong),
            "severe" => Ok(StormLevel::Severe),
            "extreme" => Ok(StormLevel::Extreme),
            other => Err(format!(
                "unknown storm level '{other}' (expected strong, severe, or extreme)"
            )),
        }
    }
}

/// Geomagnetic-latitude band of the studied system, in 5 degree steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MlatBand {
    Deg40To45,
    Deg45To50,
    Deg50To55,
    Deg55To60,
    Deg60To65,
    Deg65To70,
    Deg70To75,
}

impl MlatBand {
    /// All bands, southernmost first.
    pub const ALL: [MlatBand; 7] = [
        MlatBand::Deg40To45,
        MlatBand::Deg45To50,
        MlatBand::Deg50To55,
        MlatBand::Deg55To60,
        MlatBand::Deg60To65,
        MlatBand::Deg65To70,
        MlatBand::Deg70To75,
    ];

    /// Lower and upper edge of the band in degrees of geomagnetic latitude.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            MlatBand::Deg40To45 => (40.0, 45.0),
            MlatBand::Deg45To50 => (45.0, 50.0),
            MlatBand::Deg50To55 => (50.0, 55.0),
            MlatBand::Deg55To60 => (55.0, 60.0),
            MlatBand::Deg60To65 => (60.0, 65.0),
            MlatBand::Deg65To70 => (65.0, 70.0),
            MlatBand::Deg70To75 => (70.0, 75.0),
        }
    }

    /// Band containing a geomagnetic latitude, if any. Bands are half-open
    /// `[lo, hi)` except the northernmost, which includes its upper edge.
    pub fn from_latitude(mlat_deg: f64) -> Option<MlatBand> {
        for band in MlatBand::ALL {
            let (lo, hi) = band.bounds();
            let last = hi == 75.0;
            if mlat_deg >= lo && (mlat_deg < hi || (last && mlat_deg <= hi)) {
                return Some(band);
            }
        }
        None
    }

    /// Compact name such as `55-60`, as used in CLI arguments and reports.
    pub fn as_str(&self) -> &'static str {
        match self {
            MlatBand::Deg40To45 => "40-45",
            MlatBand::Deg45To50 => "45-50",
            MlatBand::Deg50To55 => "50-55",
            MlatBand::Deg55To60 => "55-60",
            MlatBand::Deg60To65 => "60-65",
            MlatBand::Deg65To70 => "65-70",
            MlatBand::Deg70To75 => "70-75",
        }
    }
}

impl fmt::Display for MlatBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MlatBand {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        for band in MlatBand::ALL {
            if s == band.as_str() {
                return Ok(band);
            }
        }
        Err(format!(
            "unknown latitude band '{s}' (expected one of 40-45, 45-50, 50-55, 55-60, 60-65, 65-70, 70-75)"
        ))
    }
}

/// Storm-field parameters for one severity class and latitude band: the peak
/// field amplitude and the mean field vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmdSpec {
    pub storm_level: StormLevel,
    pub mlat_band: MlatBand,
    /// Peak geo-electric field amplitude (V/km); radius of the support disc.
    pub nu_max: f64,
    /// Mean geo-electric field `(east, north)` in V/km.
    pub mu: (f64, f64),
}

/// Severity/latitude parameter table. Row layout: peak amplitude, mean
/// northward component, mean eastward component (V/km).
const STORM_TABLE: [(StormLevel, MlatBand, f64, f64, f64); 21] = [
    (StormLevel::Strong, MlatBand::Deg40To45, 1.6, 0.9, 0.8),
    (StormLevel::Severe, MlatBand::Deg40To45, 2.0, 0.9, 0.8),
    (StormLevel::Extreme, MlatBand::Deg40To45, 3.5, 1.1, 0.9),
    (StormLevel::Strong, MlatBand::Deg45To50, 1.2, 0.7, 0.7),
    (StormLevel::Severe, MlatBand::Deg45To50, 1.6, 0.8, 0.7),
    (StormLevel::Extreme, MlatBand::Deg45To50, 3.5, 1.5, 1.3),
    (StormLevel::Strong, MlatBand::Deg50To55, 3.5, 2.1, 1.8),
    (StormLevel::Severe, MlatBand::Deg50To55, 5.0, 2.5, 2.1),
    (StormLevel::Extreme, MlatBand::Deg50To55, 6.0, 3.1, 2.7),
    (StormLevel::Strong, MlatBand::Deg55To60, 11.5, 6.6, 5.6),
    (StormLevel::Severe, MlatBand::Deg55To60, 6.6, 3.7, 3.1),
    (StormLevel::Extreme, MlatBand::Deg55To60, 9.1, 4.2, 3.6),
    (StormLevel::Strong, MlatBand::Deg60To65, 6.6, 5.0, 4.3),
    (StormLevel::Severe, MlatBand::Deg60To65, 6.6, 4.3, 3.6),
    (StormLevel::Extreme, MlatBand::Deg60To65, 12.7, 5.9, 5.1),
    (StormLevel::Strong, MlatBand::Deg65To70, 8.8, 6.1, 5.2),
    (StormLevel::Severe, MlatBand::Deg65To70, 8.8, 5.3, 4.5),
    (StormLevel::Extreme, MlatBand::Deg65To70, 10.6, 5.8, 4.9),
    (StormLevel::Strong, MlatBand::Deg70To75, 7.7, 5.1, 4.3),
    (StormLevel::Severe, MlatBand::Deg70To75, 6.3, 3.9, 3.3),
    (StormLevel::Extreme, MlatBand::Deg70To75, 16.1, 6.8, 5.8),
];

/// Looks up the storm-field parameters for a severity class and latitude
/// band. The returned mean vector is in `(east, north)` order.
pub fn gmd_params(level: StormLevel, band: MlatBand) -> GmdSpec {
    for &(l, b, nu_max, mu_north, mu_east) in &STORM_TABLE {
        if l == level && b == band {
            return GmdSpec {
                storm_level: level,
                mlat_band: band,
                nu_max,
                mu: (mu_east, mu_north),
            };
        }
    }
    unreachable!("storm table covers every (level, band) pair")
}

/// Errors from support-set construction.
#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintyError {
    /// The angular spacing does not evenly divide the 180 degree half-circle.
    NonDivisorSpacing { delta_deg: f64 },
    /// The peak amplitude must be positive.
    NonPositiveAmplitude { nu_max: f64 },
}

impl fmt::Display for UncertaintyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UncertaintyError::NonDivisorSpacing { delta_deg } => {
                write!(f, "angular spacing {delta_deg} deg does not divide 180 deg")
            }
            UncertaintyError::NonPositiveAmplitude { nu_max } => {
                write!(f, "peak field amplitude must be positive, got {nu_max}")
            }
        }
    }
}

impl std::error::Error for UncertaintyError {}

/// Polygonal inner approximation of the half-disc support set: vertices on
/// the bounding circle at uniform angular spacing, counterclockwise from
/// just above due east through due west.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportPolytope {
    /// Radius of the bounding circle (V/km).
    pub nu_max: f64,
    /// Angular spacing between consecutive vertices (degrees).
    pub delta_deg: f64,
    /// Vertices `(east, north)` in counterclockwise order.
    pub vertices: Vec<(f64, f64)>,
}

/// Builds the vertex set of the polygonal support approximation. Vertices
/// sit at angles `j * delta_deg` for `j = 1 ..= 180 / delta_deg`, measured
/// counterclockwise from due east; the grid excludes due east (0 deg) and
/// includes due west (180 deg). Spacings of 60, 20, and 2 degrees give 3, 9,
/// and 90 vertices.
pub fn support_vertices(nu_max: f64, delta_deg: f64) -> Result<SupportPolytope, UncertaintyError> {
    support_vertices_with_options(nu_max, delta_deg, false)
}

/// As [`support_vertices`], optionally including the due-east (0 deg) point
/// as an extra leading vertex.
pub fn support_vertices_with_options(
    nu_max: f64,
    delta_deg: f64,
    include_due_east: bool,
) -> Result<SupportPolytope, UncertaintyError> {
    if !(nu_max > 0.0) {
        return Err(UncertaintyError::NonPositiveAmplitude { nu_max });
    }
    if !(delta_deg > 0.0) || !delta_deg.is_finite() {
        return Err(UncertaintyError::NonDivisorSpacing { delta_deg });
    }
    let count = (180.0 / delta_deg).round();
    if count < 1.0 || (count * delta_deg - 180.0).abs() > 1e-9 {
        return Err(UncertaintyError::NonDivisorSpacing { delta_deg });
    }
    let count = count as usize;
    let mut vertices = Vec::with_capacity(count + usize::from(include_due_east));
    if include_due_east {
        vertices.push((nu_max, 0.0));
    }
    for j in 1..=count {
        let theta = (j as f64 * delta_deg).to_radians();
        vertices.push((nu_max * theta.cos(), nu_max * theta.sin()));
    }
    Ok(SupportPolytope {
        nu_max,
        delta_deg,
        vertices,
    })
}

/// Tests whether a point lies in the convex hull of the polytope vertices,
/// within a small tolerance scaled by the circle radius. Handles degenerate
/// hulls (a single vertex or a segment) exactly.
pub fn mean_in_hull(mu: (f64, f64), polytope: &SupportPolytope) -> bool {
    let tol = 1e-9 * polytope.nu_max.max(1.0);
    let v = &polytope.vertices;
    match v.len() {
        0 => false,
        1 => {
            let dx = mu.0 - v[0].0;
            let dy = mu.1 - v[0].1;
            (dx * dx + dy * dy).sqrt() <= tol
        }
        2 => point_on_segment(mu, v[0], v[1], tol),
        _ => {
            // Vertices are in counterclockwise order on a circle, so the hull
            // is the polygon they trace, closed by the chord back to the
            // first vertex. The point is inside iff it is on the left of (or
            // on) every directed edge.
            for i in 0..v.len() {
                let a = v[i];
                let b = v[(i + 1) % v.len()];
                let cross = (b.0 - a.0) * (mu.1 - a.1) - (b.1 - a.1) * (mu.0 - a.0);
                if cross < -tol * polytope.nu_max.max(1.0) {
                    return false;
                }
            }
            true
        }
    }
}

fn point_on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64), tol: f64) -> bool {
    let ab = (b.0 - a.0, b.1 - a.1);
    let ap = (p.0 - a.0, p.1 - a.1);
    let len = (ab.0 * ab.0 + ab.1 * ab.1).sqrt();
    let cross = ab.0 * ap.1 - ab.1 * ap.0;
    if cross.abs() > tol * len.max(1.0) {
        return false;
    }
    let dot = ap.0 * ab.0 + ap.1 * ab.1;
    dot >= -tol * len.max(1.0) && dot <= len * len + tol * len.max(1.0)
}
