//! Instance files: `stores.csv`, `couriers.csv` and `orders.csv`.
//!
//! Headers are mandatory and must match exactly; timestamps are integer
//! seconds. Every parse error names the file, the 1-based line and the column.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geo::{GeoPoint, Seconds, VehicleKind};
use crate::model::{Courier, EntityKind, Instance, ModelError, Order, Restaurant};

pub const STORES_HEADER: [&str; 3] = ["store_id", "lat", "lon"];
pub const COURIERS_HEADER: [&str; 6] = ["courier_id", "vehicle", "lat", "lon", "on_time", "off_time"];
pub const ORDERS_HEADER: [&str; 10] = [
    "order_id",
    "store_id",
    "lat",
    "lon",
    "placement_time",
    "prep_start_time",
    "ready_time",
    "pickup_service",
    "dropoff_service",
    "deadline",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstancePaths {
    pub stores: PathBuf,
    pub couriers: PathBuf,
    pub orders: PathBuf,
}

impl InstancePaths {
    /// The three standard file names inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            stores: dir.join("stores.csv"),
            couriers: dir.join("couriers.csv"),
            orders: dir.join("orders.csv"),
        }
    }
}

/// Where in which file something went wrong.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Location {
    pub file: String,
    pub line: u64,
    /// Column name, when the problem is a single field.
    pub column: Option<&'static str>,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)?;
        if let Some(c) = self.column {
            write!(f, " column `{c}`")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{file}: {source}")]
    Io { file: String, source: io::Error },
    #[error("{at}: malformed row: {detail}")]
    Malformed { at: Location, detail: String },
    #[error("{at}: unknown vehicle kind `{value}`")]
    UnknownVehicle { at: Location, value: String },
    #[error("{at}: order references unknown store `{id}`")]
    DanglingReference { at: Location, id: String },
    #[error("{at}: inverted times: {detail}")]
    InvertedTimes { at: Location, detail: String },
    #[error("{at}: {source}")]
    Invalid { at: Location, source: ModelError },
}

struct Sheet<'h> {
    file: String,
    header: &'h [&'static str],
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Sheet<'_> {
    fn at(&self, line: u64, column: Option<&'static str>) -> Location {
        Location {
            file: self.file.clone(),
            line,
            column,
        }
    }
}

fn read_sheet<'h, R: Read>(file: &str, input: R, header: &'h [&'static str]) -> Result<Sheet<'h>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let malformed = |line: u64, column, detail: String| IoError::Malformed {
        at: Location {
            file: file.to_string(),
            line,
            column,
        },
        detail,
    };
    let mut rows = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut seen_header = false;
    loop {
        let more = reader.read_record(&mut record).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            match e.into_kind() {
                csv::ErrorKind::Io(source) => IoError::Io {
                    file: file.to_string(),
                    source,
                },
                other => malformed(line, None, format!("{other:?}")),
            }
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if !seen_header {
            seen_header = true;
            for (i, &want) in header.iter().enumerate() {
                let got = record.get(i).map(|s| s.trim_start_matches('\u{feff}'));
                if got != Some(want) {
                    return Err(malformed(
                        line,
                        Some(want),
                        format!("header expected `{want}`, found {got:?}"),
                    ));
                }
            }
            if record.len() != header.len() {
                return Err(malformed(
                    line,
                    None,
                    format!("header has {} columns, expected {}", record.len(), header.len()),
                ));
            }
            continue;
        }
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != header.len() {
            return Err(malformed(
                line,
                None,
                format!("{} fields, expected {}", record.len(), header.len()),
            ));
        }
        rows.push((line, record.clone()));
    }
    if !seen_header {
        return Err(malformed(1, None, "missing header row".into()));
    }
    Ok(Sheet {
        file: file.to_string(),
        header,
        rows,
    })
}

struct Row<'s, 'h> {
    sheet: &'s Sheet<'h>,
    line: u64,
    record: &'s csv::StringRecord,
}

impl Row<'_, '_> {
    fn at(&self, column: &'static str) -> Location {
        self.sheet.at(self.line, Some(column))
    }

    fn text(&self, column: &'static str) -> Result<&str, IoError> {
        let i = self
            .sheet
            .header
            .iter()
            .position(|&h| h == column)
            .expect("known column");
        let value = self.record[i].trim();
        if value.is_empty() {
            return Err(IoError::Malformed {
                at: self.at(column),
                detail: "empty field".into(),
            });
        }
        Ok(value)
    }

    fn seconds(&self, column: &'static str) -> Result<Seconds, IoError> {
        let raw = self.text(column)?;
        raw.parse().map_err(|_| IoError::Malformed {
            at: self.at(column),
            detail: format!("`{raw}` is not an integer number of seconds"),
        })
    }

    fn degrees(&self, column: &'static str) -> Result<f64, IoError> {
        let raw = self.text(column)?;
        raw.parse().map_err(|_| IoError::Malformed {
            at: self.at(column),
            detail: format!("`{raw}` is not a number"),
        })
    }

    fn point(&self) -> Result<GeoPoint, IoError> {
        let (lat, lon) = (self.degrees("lat")?, self.degrees("lon")?);
        GeoPoint::new(lat, lon).map_err(|e| IoError::Malformed {
            at: self.at(if matches!(e, crate::geo::GeoError::Latitude(_)) {
                "lat"
            } else {
                "lon"
            }),
            detail: e.to_string(),
        })
    }
}

fn rows<'s, 'h>(sheet: &'s Sheet<'h>) -> impl Iterator<Item = Row<'s, 'h>> {
    sheet.rows.iter().map(move |(line, record)| Row {
        sheet,
        line: *line,
        record,
    })
}

/// Parses the three files; `names` label them in error messages.
pub fn parse_instance_from<S: Read, C: Read, O: Read>(
    stores: (&str, S),
    couriers: (&str, C),
    orders: (&str, O),
) -> Result<Instance, IoError> {
    let store_sheet = read_sheet(stores.0, stores.1, &STORES_HEADER)?;
    let courier_sheet = read_sheet(couriers.0, couriers.1, &COURIERS_HEADER)?;
    let order_sheet = read_sheet(orders.0, orders.1, &ORDERS_HEADER)?;
    let mut lines: HashMap<(&'static str, String), Location> = HashMap::new();

    let mut restaurants = Vec::with_capacity(store_sheet.rows.len());
    for row in rows(&store_sheet) {
        let id = row.text("store_id")?.to_string();
        lines.insert(("restaurant", id.clone()), row.at("store_id"));
        restaurants.push(Restaurant {
            id,
            location: row.point()?,
        });
    }

    let mut courier_list = Vec::with_capacity(courier_sheet.rows.len());
    for row in rows(&courier_sheet) {
        let id = row.text("courier_id")?.to_string();
        let raw = row.text("vehicle")?;
        let vehicle: VehicleKind = raw.parse().map_err(|_| IoError::UnknownVehicle {
            at: row.at("vehicle"),
            value: raw.to_string(),
        })?;
        let (on_time, off_time) = (row.seconds("on_time")?, row.seconds("off_time")?);
        if off_time <= on_time {
            return Err(IoError::InvertedTimes {
                at: row.at("off_time"),
                detail: format!("off_time {off_time} is not after on_time {on_time}"),
            });
        }
        lines.insert(("courier", id.clone()), row.at("courier_id"));
        courier_list.push(Courier {
            id,
            vehicle,
            start_location: row.point()?,
            on_time,
            off_time,
        });
    }

    let store_ids: std::collections::HashSet<&str> = restaurants.iter().map(|r| r.id.as_str()).collect();
    let mut order_list = Vec::with_capacity(order_sheet.rows.len());
    for row in rows(&order_sheet) {
        let id = row.text("order_id")?.to_string();
        let store = row.text("store_id")?;
        if !store_ids.contains(store) {
            return Err(IoError::DanglingReference {
                at: row.at("store_id"),
                id: store.to_string(),
            });
        }
        let chain = [
            ("placement_time", row.seconds("placement_time")?),
            ("prep_start_time", row.seconds("prep_start_time")?),
            ("ready_time", row.seconds("ready_time")?),
            ("deadline", row.seconds("deadline")?),
        ];
        for w in chain.windows(2) {
            if w[0].1 > w[1].1 {
                return Err(IoError::InvertedTimes {
                    at: row.at(w[1].0),
                    detail: format!("{} {} is before {} {}", w[1].0, w[1].1, w[0].0, w[0].1),
                });
            }
        }
        lines.insert(("order", id.clone()), row.at("order_id"));
        order_list.push(Order {
            id,
            restaurant_id: store.to_string(),
            dropoff: row.point()?,
            placement_time: chain[0].1,
            prep_start_time: chain[1].1,
            ready_time: chain[2].1,
            pickup_service: row.seconds("pickup_service")?,
            dropoff_service: row.seconds("dropoff_service")?,
            deadline: chain[3].1,
        });
    }

    Instance::new(restaurants, courier_list, order_list).map_err(|source| {
        let (kind, id) = match &source {
            ModelError::DuplicateId { kind, id } | ModelError::OutsideHorizon { kind, id, .. } => (*kind, id.clone()),
            ModelError::DanglingRestaurant { order, .. }
            | ModelError::InvertedTimes { order, .. }
            | ModelError::NegativeService { order, .. } => (EntityKind::Order, order.clone()),
            ModelError::InvertedShift { courier, .. } => (EntityKind::Courier, courier.clone()),
        };
        let key = match kind {
            EntityKind::Restaurant => "restaurant",
            EntityKind::Courier => "courier",
            EntityKind::Order => "order",
        };
        let file = match kind {
            EntityKind::Restaurant => stores.0,
            EntityKind::Courier => couriers.0,
            EntityKind::Order => orders.0,
        };
        let mut at = lines.get(&(key, id)).cloned().unwrap_or(Location {
            file: file.to_string(),
            line: 0,
            column: None,
        });
        at.column = match &source {
            ModelError::OutsideHorizon { field, .. } => Some(field),
            ModelError::NegativeService { field, .. } => Some(field),
            _ => at.column,
        };
        IoError::Invalid { at, source }
    })
}

fn open(path: &Path) -> Result<File, IoError> {
    File::open(path).map_err(|source| IoError::Io {
        file: path.display().to_string(),
        source,
    })
}

pub fn parse_instance(paths: &InstancePaths) -> Result<Instance, IoError> {
    let names = [&paths.stores, &paths.couriers, &paths.orders].map(|p| p.display().to_string());
    parse_instance_from(
        (&names[0], open(&paths.stores)?),
        (&names[1], open(&paths.couriers)?),
        (&names[2], open(&paths.orders)?),
    )
}

fn write_sheet<W: Write>(out: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

/// Writes the three files in id order; coordinates use the shortest
/// representation that reads back to the same value.
pub fn serialize_instance_to<S: Write, C: Write, O: Write>(
    instance: &Instance,
    stores: S,
    couriers: C,
    orders: O,
) -> io::Result<()> {
    write_sheet(
        stores,
        &STORES_HEADER,
        instance
            .restaurants()
            .iter()
            .map(|r| vec![r.id.clone(), r.location.lat().to_string(), r.location.lon().to_string()]),
    )?;
    write_sheet(
        couriers,
        &COURIERS_HEADER,
        instance.couriers().iter().map(|c| {
            vec![
                c.id.clone(),
                c.vehicle.to_string(),
                c.start_location.lat().to_string(),
                c.start_location.lon().to_string(),
                c.on_time.to_string(),
                c.off_time.to_string(),
            ]
        }),
    )?;
    write_sheet(
        orders,
        &ORDERS_HEADER,
        instance.orders().iter().map(|o| {
            vec![
                o.id.clone(),
                o.restaurant_id.clone(),
                o.dropoff.lat().to_string(),
                o.dropoff.lon().to_string(),
                o.placement_time.to_string(),
                o.prep_start_time.to_string(),
                o.ready_time.to_string(),
                o.pickup_service.to_string(),
                o.dropoff_service.to_string(),
                o.deadline.to_string(),
            ]
        }),
    )
}

pub fn serialize_instance(instance: &Instance, paths: &InstancePaths) -> Result<(), IoError> {
    let create = |p: &Path| {
        File::create(p).map(io::BufWriter::new).map_err(|source| IoError::Io {
            file: p.display().to_string(),
            source,
        })
    };
    let (s, c, o) = (create(&paths.stores)?, create(&paths.couriers)?, create(&paths.orders)?);
    serialize_instance_to(instance, s, c, o).map_err(|source| IoError::Io {
        file: paths.orders.parent().unwrap_or(Path::new(".")).display().to_string(),
        source,
    })
}
