//! Dipole geomagnetic coordinates and line displacement components.
//!
//! Storm severity statistics are binned by *magnetic* latitude, so the
//! planner needs to place each substation in the dipole frame implied by the
//! first three spherical-harmonic coefficients of the reference field. The
//! same module computes the northward/eastward displacement of a line route,
//! which turns a uniform storm field into a per-line induced EMF.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Kilometres per degree of latitude (and of longitude at the equator).
pub const KM_PER_DEGREE: f64 = 111.2;

/// First-degree spherical-harmonic coefficients of the reference field for
/// one epoch, nanotesla.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleCoefficients {
    pub epoch: u32,
    pub g10: f64,
    pub g11: f64,
    pub h11: f64,
}

/// Reference-field dipole coefficients, 1965 through 2015 in five-year steps.
pub const DIPOLE_TABLE: [DipoleCoefficients; 11] = [
    DipoleCoefficients { epoch: 1965, g10: -30334.0, g11: -2119.0, h11: 5776.0 },
    DipoleCoefficients { epoch: 1970, g10: -30220.0, g11: -2068.0, h11: 5737.0 },
    DipoleCoefficients { epoch: 1975, g10: -30100.0, g11: -2013.0, h11: 5675.0 },
    DipoleCoefficients { epoch: 1980, g10: -29992.0, g11: -1956.0, h11: 5604.0 },
    DipoleCoefficients { epoch: 1985, g10: -29873.0, g11: -1905.0, h11: 5500.0 },
    DipoleCoefficients { epoch: 1990, g10: -29775.0, g11: -1848.0, h11: 5406.0 },
    DipoleCoefficients { epoch: 1995, g10: -29692.0, g11: -1784.0, h11: 5306.0 },
    DipoleCoefficients { epoch: 2000, g10: -29619.0, g11: -1728.0, h11: 5186.0 },
    DipoleCoefficients { epoch: 2005, g10: -29554.0, g11: -1669.0, h11: 5077.0 },
    DipoleCoefficients { epoch: 2010, g10: -29496.0, g11: -1586.0, h11: 4944.0 },
    DipoleCoefficients { epoch: 2015, g10: -29442.0, g11: -1501.0, h11: 4797.0 },
];

/// Coefficients for a tabulated epoch.
pub fn coefficients_for_epoch(epoch: u32) -> Option<DipoleCoefficients> {
    DIPOLE_TABLE.iter().copied().find(|c| c.epoch == epoch)
}

/// A point on the unit sphere given by geographic or magnetic coordinates,
/// degrees; `radial` is in earth radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub latitude: f64,
    pub longitude: f64,
    pub radial: f64,
}

impl GeoPoint {
    pub fn new(latitude: f64, longitude: f64) -> Self {
        GeoPoint { latitude, longitude, radial: 1.0 }
    }

    fn to_cartesian(self) -> Vector3<f64> {
        let lat = self.latitude.to_radians();
        let lon = self.longitude.to_radians();
        Vector3::new(
            self.radial * lat.cos() * lon.cos(),
            self.radial * lat.cos() * lon.sin(),
            self.radial * lat.sin(),
        )
    }

    fn from_cartesian(q: Vector3<f64>) -> Self {
        let r = q.norm();
        let lat = (q.z / r).asin().to_degrees();
        let lon = q.y.atan2(q.x).to_degrees();
        GeoPoint { latitude: lat, longitude: lon, radial: r }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GeomagError {
    #[error("no dipole coefficients tabulated for epoch {0}")]
    UnknownEpoch(u32),
    #[error("longitude span {0} degrees exceeds 180; route crosses the antimeridian")]
    AntimeridianSpan(f64),
}

/// Rotation taking geographic cartesian coordinates into the dipole frame:
/// a rotation about Z to the pole meridian, then about Y onto the pole.
pub fn rotation_matrix(c: &DipoleCoefficients) -> Matrix3<f64> {
    let theta = (c.h11 / c.g11).atan();
    let phi_rad = std::f64::consts::FRAC_PI_2
        - ((c.g11 * theta.cos() + c.h11 * theta.sin()) / c.g10).asin();
    let beta = phi_rad - std::f64::consts::FRAC_PI_2;
    let rot_z = Matrix3::new(
        theta.cos(),
        theta.sin(),
        0.0,
        -theta.sin(),
        theta.cos(),
        0.0,
        0.0,
        0.0,
        1.0,
    );
    let rot_y = Matrix3::new(
        beta.cos(),
        0.0,
        beta.sin(),
        0.0,
        1.0,
        0.0,
        -beta.sin(),
        0.0,
        beta.cos(),
    );
    rot_y * rot_z
}

/// Geographic north pole of the dipole frame, i.e. the point whose magnetic
/// latitude is 90 degrees.
pub fn dipole_pole(c: &DipoleCoefficients) -> GeoPoint {
    let theta = (c.h11 / c.g11).atan();
    let phi = 90.0
        - ((c.g11 * theta.cos() + c.h11 * theta.sin()) / c.g10)
            .asin()
            .to_degrees();
    GeoPoint::new(phi, theta.to_degrees())
}

/// Convert a geographic point into dipole magnetic coordinates.
pub fn geo_to_mag(p: GeoPoint, c: &DipoleCoefficients) -> GeoPoint {
    GeoPoint::from_cartesian(rotation_matrix(c) * p.to_cartesian())
}

/// Inverse of [`geo_to_mag`]; the rotation is orthogonal so its transpose
/// undoes it.
pub fn mag_to_geo(p: GeoPoint, c: &DipoleCoefficients) -> GeoPoint {
    GeoPoint::from_cartesian(rotation_matrix(c).transpose() * p.to_cartesian())
}

/// Northward and eastward displacement (km) of a straight route from `from`
/// to `to`, on the small-displacement flat-earth approximation with the
/// east-west span scaled by the cosine of the mean latitude.
pub fn line_components(from: GeoPoint, to: GeoPoint) -> Result<(f64, f64), GeomagError> {
    let dlon = to.longitude - from.longitude;
    if dlon.abs() > 180.0 {
        return Err(GeomagError::AntimeridianSpan(dlon.abs()));
    }
    let l_n = KM_PER_DEGREE * (to.latitude - from.latitude);
    let mean_lat = 0.5 * (to.latitude + from.latitude);
    let l_e = KM_PER_DEGREE * dlon * mean_lat.to_radians().cos();
    Ok((l_n, l_e))
}
