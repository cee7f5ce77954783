//! Great-circle distance and travel-time arithmetic.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Mean Earth radius used for every distance in the crate.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Whole seconds since the instance day's midnight (or a duration in seconds).
pub type Seconds = i64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    Latitude(f64),
    #[error("longitude {0} outside [-180, 180]")]
    Longitude(f64),
}

/// A latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = GeoError;

    fn try_from(p: RawPoint) -> Result<Self, GeoError> {
        GeoPoint::new(p.lat, p.lon)
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::Latitude(lat));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(GeoError::Longitude(lon));
        }
        Ok(Self { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lat, self.lon)
    }
}

/// Haversine great-circle distance in kilometres.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let half_dphi = (phi2 - phi1) / 2.0;
    let half_dlambda = (b.lon - a.lon).to_radians() / 2.0;
    let h = half_dphi.sin().powi(2) + phi1.cos() * phi2.cos() * half_dlambda.sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Courier vehicle; each kind travels at a fixed average speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleKind {
    Walking,
    Bicycle,
    Car,
    Motorcycle,
}

impl VehicleKind {
    pub const ALL: [VehicleKind; 4] = [
        VehicleKind::Walking,
        VehicleKind::Bicycle,
        VehicleKind::Car,
        VehicleKind::Motorcycle,
    ];

    pub fn speed_kmh(self) -> f64 {
        match self {
            VehicleKind::Walking => 5.0,
            VehicleKind::Bicycle => 12.0,
            VehicleKind::Car => 15.0,
            VehicleKind::Motorcycle => 20.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VehicleKind::Walking => "walking",
            VehicleKind::Bicycle => "bicycle",
            VehicleKind::Car => "car",
            VehicleKind::Motorcycle => "motorcycle",
        }
    }

    /// Dense index in `0..4`, handy for per-vehicle lookup tables.
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for VehicleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown vehicle kind `{0}` (expected walking, bicycle, car or motorcycle)")]
pub struct UnknownVehicle(pub String);

impl FromStr for VehicleKind {
    type Err = UnknownVehicle;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VehicleKind::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| UnknownVehicle(s.to_string()))
    }
}

/// Seconds needed to cover `km` at the vehicle's speed, rounded up.
pub fn travel_time_for_km(km: f64, vehicle: VehicleKind) -> Seconds {
    (km * 3600.0 / vehicle.speed_kmh()).ceil() as Seconds
}

pub fn travel_time_s(a: GeoPoint, b: GeoPoint, vehicle: VehicleKind) -> Seconds {
    travel_time_for_km(haversine_km(a, b), vehicle)
}
