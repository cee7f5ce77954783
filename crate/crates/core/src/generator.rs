//! Reproducible synthetic instances with lunch and dinner demand peaks.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{GeoPoint, Seconds, VehicleKind};
use crate::model::{Courier, Instance, ModelError, Order, Restaurant, HORIZON_S};

const KM_PER_DEG_LAT: f64 = 111.195;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    /// Square of `side_km` centred on a point.
    pub fn around(center: (f64, f64), side_km: f64) -> Self {
        let half_lat = side_km / 2.0 / KM_PER_DEG_LAT;
        let half_lon = side_km / 2.0 / (KM_PER_DEG_LAT * center.0.to_radians().cos());
        Self {
            lat_min: center.0 - half_lat,
            lat_max: center.0 + half_lat,
            lon_min: center.1 - half_lon,
            lon_max: center.1 + half_lon,
        }
    }
}

/// A Gaussian bump of order placements.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DemandPeak {
    pub center_s: Seconds,
    pub spread_s: Seconds,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub n_orders: usize,
    pub n_couriers: usize,
    pub n_restaurants: usize,
    pub bbox: BoundingBox,
    /// Placement times are clamped into this window.
    pub horizon: (Seconds, Seconds),
    pub demand_peaks: Vec<DemandPeak>,
    /// Fractions of couriers per vehicle kind.
    pub vehicle_mix: Vec<(VehicleKind, f64)>,
    pub shift_length: (Seconds, Seconds),
    pub prep_time: (Seconds, Seconds),
    /// Deadline minus ready time.
    pub window_length: (Seconds, Seconds),
    pub pickup_service: (Seconds, Seconds),
    pub dropoff_service: (Seconds, Seconds),
    /// Customers are drawn within this distance of their restaurant.
    pub delivery_radius_km: f64,
    pub seed: u64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            n_orders: 500,
            n_couriers: 150,
            n_restaurants: 40,
            bbox: BoundingBox::around((4.65, -74.08), 10.0),
            horizon: (6 * 3600, 23 * 3600),
            demand_peaks: vec![
                DemandPeak {
                    center_s: 12 * 3600 + 1800,
                    spread_s: 3000,
                    weight: 0.45,
                },
                DemandPeak {
                    center_s: 19 * 3600 + 1800,
                    spread_s: 4200,
                    weight: 0.55,
                },
            ],
            vehicle_mix: vec![
                (VehicleKind::Walking, 0.05),
                (VehicleKind::Bicycle, 0.25),
                (VehicleKind::Car, 0.10),
                (VehicleKind::Motorcycle, 0.60),
            ],
            shift_length: (3 * 3600, 7 * 3600),
            prep_time: (600, 1500),
            window_length: (1500, 3000),
            pickup_service: (60, 180),
            dropoff_service: (60, 180),
            delivery_radius_km: 3.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeneratorError {
    #[error("vehicle mix fractions must be non-negative and sum to 1, got {0}")]
    VehicleMix(f64),
    #[error("demand peak weights must be non-negative with a positive sum")]
    PeakWeights,
    #[error("range `{0}` must be non-negative and ordered")]
    Range(&'static str),
    #[error("orders need at least one restaurant")]
    NoRestaurants,
    #[error("bounding box is empty or outside valid coordinates")]
    BoundingBox,
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl GeneratorParams {
    pub fn validate(&self) -> Result<(), GeneratorError> {
        let total: f64 = self.vehicle_mix.iter().map(|(_, f)| f).sum();
        if (total - 1.0).abs() > 1e-9 || self.vehicle_mix.iter().any(|(_, f)| *f < 0.0) {
            return Err(GeneratorError::VehicleMix(total));
        }
        let weights: f64 = self.demand_peaks.iter().map(|p| p.weight).sum();
        if self.demand_peaks.iter().any(|p| p.weight < 0.0 || p.spread_s < 0) || weights <= 0.0 {
            return Err(GeneratorError::PeakWeights);
        }
        for (name, (lo, hi)) in [
            ("horizon", self.horizon),
            ("shift_length", self.shift_length),
            ("prep_time", self.prep_time),
            ("window_length", self.window_length),
            ("pickup_service", self.pickup_service),
            ("dropoff_service", self.dropoff_service),
        ] {
            if lo < 0 || hi < lo {
                return Err(GeneratorError::Range(name));
            }
        }
        if self.horizon.1 >= HORIZON_S
            || self.shift_length.0 == 0
            || self.shift_length.1 >= HORIZON_S
            || self.prep_time.1 + self.window_length.1 >= HORIZON_S
        {
            return Err(GeneratorError::Range("horizon"));
        }
        if self.n_orders > 0 && self.n_restaurants == 0 {
            return Err(GeneratorError::NoRestaurants);
        }
        let b = &self.bbox;
        if !(b.lat_min < b.lat_max && b.lon_min < b.lon_max)
            || GeoPoint::new(b.lat_min, b.lon_min).is_err()
            || GeoPoint::new(b.lat_max, b.lon_max).is_err()
            || self.delivery_radius_km < 0.0
        {
            return Err(GeneratorError::BoundingBox);
        }
        Ok(())
    }
}

fn id(prefix: &str, i: usize, n: usize) -> String {
    let width = n.max(1).to_string().len();
    format!("{prefix}{:0width$}", i + 1)
}

fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

fn uniform_point(rng: &mut impl Rng, b: &BoundingBox) -> GeoPoint {
    let lat = round6(rng.random_range(b.lat_min..=b.lat_max));
    let lon = round6(rng.random_range(b.lon_min..=b.lon_max));
    GeoPoint::new(lat, lon).expect("inside a validated box")
}

fn near(rng: &mut impl Rng, center: GeoPoint, radius_km: f64, b: &BoundingBox) -> GeoPoint {
    let r = radius_km * rng.random::<f64>().sqrt();
    let theta = rng.random::<f64>() * std::f64::consts::TAU;
    let dlat = r * theta.cos() / KM_PER_DEG_LAT;
    let dlon = r * theta.sin() / (KM_PER_DEG_LAT * center.lat().to_radians().cos());
    let lat = round6((center.lat() + dlat).clamp(b.lat_min, b.lat_max));
    let lon = round6((center.lon() + dlon).clamp(b.lon_min, b.lon_max));
    GeoPoint::new(lat, lon).expect("clamped into a validated box")
}

fn pick_weighted<T: Copy>(rng: &mut impl Rng, items: &[(T, f64)]) -> T {
    let total: f64 = items.iter().map(|(_, w)| w).sum();
    let mut x = rng.random::<f64>() * total;
    for &(item, w) in items {
        if x < w {
            return item;
        }
        x -= w;
    }
    items.iter().rev().find(|(_, w)| *w > 0.0).expect("positive weight").0
}

fn span(rng: &mut impl Rng, (lo, hi): (Seconds, Seconds)) -> Seconds {
    rng.random_range(lo..=hi)
}

/// Builds an instance; identical params (seed included) give identical instances.
pub fn generate_instance(params: &GeneratorParams) -> Result<Instance, GeneratorError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let b = &params.bbox;
    let peaks: Vec<(DemandPeak, f64)> = params.demand_peaks.iter().map(|p| (*p, p.weight)).collect();

    let restaurants: Vec<Restaurant> = (0..params.n_restaurants)
        .map(|i| Restaurant {
            id: id("s", i, params.n_restaurants),
            location: uniform_point(&mut rng, b),
        })
        .collect();

    let couriers = (0..params.n_couriers)
        .map(|i| {
            let vehicle = pick_weighted(&mut rng, &params.vehicle_mix);
            let start_location = uniform_point(&mut rng, b);
            let shift = span(&mut rng, params.shift_length);
            let peak = pick_weighted(&mut rng, &peaks);
            let lead = (shift as f64 * rng.random_range(0.25..0.75)) as Seconds;
            let on_time = (peak.center_s - lead).clamp(0, HORIZON_S - 1 - shift);
            Courier {
                id: id("c", i, params.n_couriers),
                vehicle,
                start_location,
                on_time,
                off_time: on_time + shift,
            }
        })
        .collect();

    let latest_placement = params
        .horizon
        .1
        .min(HORIZON_S - 1 - params.prep_time.1 - params.window_length.1);
    let orders = (0..params.n_orders)
        .map(|i| {
            let restaurant = &restaurants[rng.random_range(0..restaurants.len())];
            let dropoff = near(&mut rng, restaurant.location, params.delivery_radius_km, b);
            let peak = pick_weighted(&mut rng, &peaks);
            let normal = Normal::new(peak.center_s as f64, peak.spread_s as f64).expect("finite spread");
            let placement = (normal.sample(&mut rng).round() as Seconds)
                .clamp(params.horizon.0, latest_placement.max(params.horizon.0));
            let ready = placement + span(&mut rng, params.prep_time);
            let deadline = ready + span(&mut rng, params.window_length);
            Order {
                id: id("o", i, params.n_orders),
                restaurant_id: restaurant.id.clone(),
                dropoff,
                placement_time: placement,
                prep_start_time: placement,
                ready_time: ready,
                pickup_service: span(&mut rng, params.pickup_service),
                dropoff_service: span(&mut rng, params.dropoff_service),
                deadline,
            }
        })
        .collect();

    Ok(Instance::new(restaurants, couriers, orders)?)
}
