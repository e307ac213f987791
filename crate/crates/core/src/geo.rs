//! Geographic locations and great-circle distances.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius in kilometers (IUGG).
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("InvalidLocation: latitude {0} outside [-90, 90]")]
    LatitudeOutOfRange(f64),
    #[error("InvalidLocation: longitude {0} outside [-180, 180]")]
    LongitudeOutOfRange(f64),
    #[error("InvalidLocation: coordinate is not finite")]
    NonFinite,
}

/// A geographic point; altitude is carried along when a source provides it
/// but never enters distance computations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub lat: f64,
    pub lon: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub alt: Option<f64>,
}

impl Location {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        Self::with_alt(lat, lon, None)
    }

    pub fn with_alt(lat: f64, lon: f64, alt: Option<f64>) -> Result<Self, GeoError> {
        if !lat.is_finite() || !lon.is_finite() || alt.is_some_and(|a| !a.is_finite()) {
            return Err(GeoError::NonFinite);
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::LatitudeOutOfRange(lat));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::LongitudeOutOfRange(lon));
        }
        Ok(Location { lat, lon, alt })
    }

    /// Great-circle distance to `other` in kilometers.
    pub fn haversine_km(&self, other: &Location) -> f64 {
        let phi1 = self.lat.to_radians();
        let phi2 = other.lat.to_radians();
        let dphi = (other.lat - self.lat).to_radians();
        let dlambda = (other.lon - self.lon).to_radians();
        let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
        2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range() {
        assert!(Location::new(91.0, 0.0).is_err());
        assert!(Location::new(0.0, 181.0).is_err());
        assert!(Location::new(f64::NAN, 0.0).is_err());
        assert!(Location::new(-8.0, -35.0).is_ok());
    }

    #[test]
    fn haversine_zero_at_same_point() {
        let p = Location::new(-8.05, -34.9).unwrap();
        assert_eq!(p.haversine_km(&p), 0.0);
    }

    #[test]
    fn haversine_one_degree_longitude_at_equator() {
        let a = Location::new(0.0, 0.0).unwrap();
        let b = Location::new(0.0, 1.0).unwrap();
        let d = a.haversine_km(&b);
        // one degree of arc on the mean sphere
        let expected = EARTH_RADIUS_KM * 1f64.to_radians();
        assert!((d - expected).abs() < 1e-9, "got {d}, want {expected}");
    }

    #[test]
    fn haversine_depends_only_on_longitude_difference() {
        let a = Location::new(12.0, 10.0).unwrap();
        let b = Location::new(15.0, 14.0).unwrap();
        let a2 = Location::new(12.0, 110.0).unwrap();
        let b2 = Location::new(15.0, 114.0).unwrap();
        assert!((a.haversine_km(&b) - a2.haversine_km(&b2)).abs() < 1e-9);
    }
}
