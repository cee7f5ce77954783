#![allow(dead_code)]

pub mod oracle;

use mdrp_core::generator::{generate_instance, BoundingBox, DemandPeak, GeneratorParams};
use mdrp_core::{Courier, GeoPoint, Instance, Order, Restaurant, Seconds, VehicleKind};

pub fn pt(lat: f64, lon: f64) -> GeoPoint {
    GeoPoint::new(lat, lon).unwrap()
}

pub fn restaurant(id: &str, at: GeoPoint) -> Restaurant {
    Restaurant {
        id: id.into(),
        location: at,
    }
}

pub fn courier(id: &str, vehicle: VehicleKind, at: GeoPoint, on: Seconds, off: Seconds) -> Courier {
    Courier {
        id: id.into(),
        vehicle,
        start_location: at,
        on_time: on,
        off_time: off,
    }
}

pub fn order(id: &str, restaurant: &str, to: GeoPoint, ready: Seconds, deadline: Seconds) -> Order {
    Order {
        id: id.into(),
        restaurant_id: restaurant.into(),
        dropoff: to,
        placement_time: 0,
        prep_start_time: 0,
        ready_time: ready,
        pickup_service: 0,
        dropoff_service: 0,
        deadline,
    }
}

/// End of the placement window used by [`lunch_rush`].
pub const LUNCH_DISPATCH: Seconds = 43_500;

/// Orders placed in a five-minute burst around 12:00 in a compact town.
pub fn lunch_rush(n_orders: usize, n_couriers: usize, n_restaurants: usize, seed: u64) -> Instance {
    generate_instance(&GeneratorParams {
        n_orders,
        n_couriers,
        n_restaurants,
        bbox: BoundingBox::around((4.65, -74.08), 5.0),
        horizon: (43_200, LUNCH_DISPATCH),
        demand_peaks: vec![DemandPeak {
            center_s: 43_350,
            spread_s: 100,
            weight: 1.0,
        }],
        shift_length: (8 * 3600, 10 * 3600),
        delivery_radius_km: 2.0,
        seed,
        ..GeneratorParams::default()
    })
    .unwrap()
}
