//! Restaurants, couriers, orders and the validated [`Instance`] tying them together.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::{travel_time_s, GeoPoint, Seconds, VehicleKind};

/// Length of an instance day; every timestamp lies in `[0, HORIZON_S)`.
pub const HORIZON_S: Seconds = 86_400;

macro_rules! index_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub struct $name(pub u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl From<usize> for $name {
            fn from(i: usize) -> Self {
                Self(u32::try_from(i).expect("index overflows u32"))
            }
        }
    };
}

index_type!(
    /// Position of a restaurant in [`Instance::restaurants`].
    RestaurantIdx
);
index_type!(
    /// Position of a courier in [`Instance::couriers`].
    CourierIdx
);
index_type!(
    /// Position of an order in [`Instance::orders`].
    OrderIdx
);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Restaurant {
    pub id: String,
    pub location: GeoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Courier {
    pub id: String,
    pub vehicle: VehicleKind,
    pub start_location: GeoPoint,
    pub on_time: Seconds,
    pub off_time: Seconds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Order {
    pub id: String,
    pub restaurant_id: String,
    pub dropoff: GeoPoint,
    pub placement_time: Seconds,
    pub prep_start_time: Seconds,
    pub ready_time: Seconds,
    pub pickup_service: Seconds,
    pub dropoff_service: Seconds,
    /// Latest instant the drop-off service may complete.
    pub deadline: Seconds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityKind {
    Restaurant,
    Courier,
    Order,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityKind::Restaurant => "restaurant",
            EntityKind::Courier => "courier",
            EntityKind::Order => "order",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: EntityKind, id: String },
    #[error("order `{order}` references unknown restaurant `{restaurant}`")]
    DanglingRestaurant { order: String, restaurant: String },
    #[error("order `{order}`: {detail}")]
    InvertedTimes { order: String, detail: String },
    #[error("courier `{courier}`: off_time {off_time} is not after on_time {on_time}")]
    InvertedShift {
        courier: String,
        on_time: Seconds,
        off_time: Seconds,
    },
    #[error("{kind} `{id}`: {field} = {value} outside [0, {HORIZON_S})")]
    OutsideHorizon {
        kind: EntityKind,
        id: String,
        field: &'static str,
        value: Seconds,
    },
    #[error("order `{order}`: negative {field}")]
    NegativeService { order: String, field: &'static str },
}

/// One day of restaurants, couriers and orders with all cross references resolved.
///
/// Entities are kept sorted by id, so index order is id order; ties anywhere in
/// the solver are broken by index.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    restaurants: Vec<Restaurant>,
    couriers: Vec<Courier>,
    orders: Vec<Order>,
    order_restaurant: Vec<RestaurantIdx>,
    // restaurant -> drop-off travel time, per vehicle kind
    delivery_leg: Vec<[Seconds; 4]>,
}

fn check_horizon(kind: EntityKind, id: &str, field: &'static str, value: Seconds) -> Result<(), ModelError> {
    if (0..HORIZON_S).contains(&value) {
        Ok(())
    } else {
        Err(ModelError::OutsideHorizon {
            kind,
            id: id.to_string(),
            field,
            value,
        })
    }
}

fn check_unique<'a>(kind: EntityKind, ids: impl Iterator<Item = &'a str>) -> Result<(), ModelError> {
    let mut prev: Option<&str> = None;
    for id in ids {
        if prev == Some(id) {
            return Err(ModelError::DuplicateId {
                kind,
                id: id.to_string(),
            });
        }
        prev = Some(id);
    }
    Ok(())
}

impl Order {
    fn validate(&self) -> Result<(), ModelError> {
        for (field, value) in [
            ("placement_time", self.placement_time),
            ("prep_start_time", self.prep_start_time),
            ("ready_time", self.ready_time),
            ("deadline", self.deadline),
        ] {
            check_horizon(EntityKind::Order, &self.id, field, value)?;
        }
        let chain = [
            ("placement_time", self.placement_time),
            ("prep_start_time", self.prep_start_time),
            ("ready_time", self.ready_time),
            ("deadline", self.deadline),
        ];
        for w in chain.windows(2) {
            if w[0].1 > w[1].1 {
                return Err(ModelError::InvertedTimes {
                    order: self.id.clone(),
                    detail: format!("{} {} is after {} {}", w[0].0, w[0].1, w[1].0, w[1].1),
                });
            }
        }
        if self.pickup_service < 0 {
            return Err(ModelError::NegativeService {
                order: self.id.clone(),
                field: "pickup_service",
            });
        }
        if self.dropoff_service < 0 {
            return Err(ModelError::NegativeService {
                order: self.id.clone(),
                field: "dropoff_service",
            });
        }
        Ok(())
    }
}

impl Courier {
    fn validate(&self) -> Result<(), ModelError> {
        check_horizon(EntityKind::Courier, &self.id, "on_time", self.on_time)?;
        check_horizon(EntityKind::Courier, &self.id, "off_time", self.off_time)?;
        if self.off_time <= self.on_time {
            return Err(ModelError::InvertedShift {
                courier: self.id.clone(),
                on_time: self.on_time,
                off_time: self.off_time,
            });
        }
        Ok(())
    }
}

impl Instance {
    pub fn new(
        mut restaurants: Vec<Restaurant>,
        mut couriers: Vec<Courier>,
        mut orders: Vec<Order>,
    ) -> Result<Self, ModelError> {
        restaurants.sort_by(|a, b| a.id.cmp(&b.id));
        couriers.sort_by(|a, b| a.id.cmp(&b.id));
        orders.sort_by(|a, b| a.id.cmp(&b.id));
        check_unique(EntityKind::Restaurant, restaurants.iter().map(|r| r.id.as_str()))?;
        check_unique(EntityKind::Courier, couriers.iter().map(|c| c.id.as_str()))?;
        check_unique(EntityKind::Order, orders.iter().map(|o| o.id.as_str()))?;

        for c in &couriers {
            c.validate()?;
        }
        let by_id: HashMap<&str, RestaurantIdx> = restaurants
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.as_str(), RestaurantIdx::from(i)))
            .collect();
        let mut order_restaurant = Vec::with_capacity(orders.len());
        let mut delivery_leg = Vec::with_capacity(orders.len());
        for o in &orders {
            let r = *by_id
                .get(o.restaurant_id.as_str())
                .ok_or_else(|| ModelError::DanglingRestaurant {
                    order: o.id.clone(),
                    restaurant: o.restaurant_id.clone(),
                })?;
            o.validate()?;
            let pickup = restaurants[r.index()].location;
            order_restaurant.push(r);
            delivery_leg.push(VehicleKind::ALL.map(|v| travel_time_s(pickup, o.dropoff, v)));
        }
        Ok(Self {
            restaurants,
            couriers,
            orders,
            order_restaurant,
            delivery_leg,
        })
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Vec::new(), Vec::new()).expect("empty instance is valid")
    }

    pub fn restaurants(&self) -> &[Restaurant] {
        &self.restaurants
    }

    pub fn couriers(&self) -> &[Courier] {
        &self.couriers
    }

    pub fn orders(&self) -> &[Order] {
        &self.orders
    }

    pub fn restaurant(&self, r: RestaurantIdx) -> &Restaurant {
        &self.restaurants[r.index()]
    }

    pub fn courier(&self, c: CourierIdx) -> &Courier {
        &self.couriers[c.index()]
    }

    pub fn order(&self, o: OrderIdx) -> &Order {
        &self.orders[o.index()]
    }

    pub fn restaurant_of(&self, o: OrderIdx) -> RestaurantIdx {
        self.order_restaurant[o.index()]
    }

    pub fn pickup_location(&self, o: OrderIdx) -> GeoPoint {
        self.restaurants[self.order_restaurant[o.index()].index()].location
    }

    /// Travel time from the order's restaurant to its drop-off point.
    pub fn delivery_leg_s(&self, o: OrderIdx, vehicle: VehicleKind) -> Seconds {
        self.delivery_leg[o.index()][vehicle.index()]
    }

    pub fn courier_indices(&self) -> impl Iterator<Item = CourierIdx> + '_ {
        (0..self.couriers.len()).map(CourierIdx::from)
    }

    pub fn order_indices(&self) -> impl Iterator<Item = OrderIdx> + '_ {
        (0..self.orders.len()).map(OrderIdx::from)
    }

    pub fn find_order(&self, id: &str) -> Option<OrderIdx> {
        self.orders
            .binary_search_by(|o| o.id.as_str().cmp(id))
            .ok()
            .map(OrderIdx::from)
    }

    pub fn find_courier(&self, id: &str) -> Option<CourierIdx> {
        self.couriers
            .binary_search_by(|c| c.id.as_str().cmp(id))
            .ok()
            .map(CourierIdx::from)
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty() && self.couriers.is_empty() && self.restaurants.is_empty()
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    #[test]
    fn entities_are_sorted_by_id() {
        let inst = Instance::new(
            vec![restaurant("r2", 4.6, -74.1), restaurant("r1", 4.61, -74.1)],
            vec![],
            vec![
                order("b", "r2", pt(4.62, -74.1), 10, 100),
                order("a", "r1", pt(4.62, -74.1), 10, 100),
            ],
        )
        .unwrap();
        assert_eq!(inst.restaurants()[0].id, "r1");
        assert_eq!(inst.orders()[0].id, "a");
        assert_eq!(inst.restaurant_of(OrderIdx(0)), RestaurantIdx(0));
        assert_eq!(inst.restaurant_of(OrderIdx(1)), RestaurantIdx(1));
        assert_eq!(inst.find_order("b"), Some(OrderIdx(1)));
        assert_eq!(inst.find_order("zz"), None);
    }

    #[test]
    fn dangling_restaurant_is_rejected() {
        let err = Instance::new(
            vec![restaurant("r1", 4.6, -74.1)],
            vec![],
            vec![order("o1", "r9", pt(4.6, -74.1), 10, 100)],
        )
        .unwrap_err();
        assert_eq!(
            err,
            ModelError::DanglingRestaurant {
                order: "o1".into(),
                restaurant: "r9".into()
            }
        );
    }

    #[test]
    fn time_chain_must_be_ordered() {
        let mut o = order("o1", "r1", pt(4.6, -74.1), 500, 400);
        let err = Instance::new(vec![restaurant("r1", 4.6, -74.1)], vec![], vec![o.clone()]).unwrap_err();
        assert!(matches!(err, ModelError::InvertedTimes { .. }), "{err}");
        o.deadline = 600;
        o.placement_time = 50;
        o.prep_start_time = 40;
        let err = Instance::new(vec![restaurant("r1", 4.6, -74.1)], vec![], vec![o]).unwrap_err();
        assert!(err
            .to_string()
            .contains("placement_time 50 is after prep_start_time 40"));
    }

    #[test]
    fn shifts_and_horizon_checked() {
        let c = courier("c1", VehicleKind::Car, pt(4.6, -74.1), 100, 100);
        assert!(matches!(
            Instance::new(vec![], vec![c], vec![]),
            Err(ModelError::InvertedShift { .. })
        ));
        let c = courier("c1", VehicleKind::Car, pt(4.6, -74.1), 100, HORIZON_S);
        assert!(matches!(
            Instance::new(vec![], vec![c], vec![]),
            Err(ModelError::OutsideHorizon { field: "off_time", .. })
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let r = restaurant("r1", 4.6, -74.1);
        assert!(matches!(
            Instance::new(vec![r.clone(), r], vec![], vec![]),
            Err(ModelError::DuplicateId {
                kind: EntityKind::Restaurant,
                ..
            })
        ));
    }
}
