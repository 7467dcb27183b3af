//! The nine thematic map layers and the generic record container they share.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{GeoBBox, GeoPoint};

/// Layer roster in toggle-key order. The discriminant is both the layer id
/// and its number key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerId {
    Crime = 1,
    TaxiTrips = 2,
    Weather = 3,
    PublicTransport = 4,
    Favelas = 5,
    Socioeconomic = 6,
    Graph = 7,
    Hotspots = 8,
    Prediction = 9,
}

impl LayerId {
    pub const ALL: [LayerId; 9] = [
        LayerId::Crime,
        LayerId::TaxiTrips,
        LayerId::Weather,
        LayerId::PublicTransport,
        LayerId::Favelas,
        LayerId::Socioeconomic,
        LayerId::Graph,
        LayerId::Hotspots,
        LayerId::Prediction,
    ];

    pub fn number(self) -> u8 {
        self as u8
    }

    pub fn from_number(n: u8) -> Option<LayerId> {
        LayerId::ALL.get(usize::from(n).checked_sub(1)?).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            LayerId::Crime => "Crime",
            LayerId::TaxiTrips => "Taxi Trips",
            LayerId::Weather => "Weather",
            LayerId::PublicTransport => "Public Transportation",
            LayerId::Favelas => "Favelas",
            LayerId::Socioeconomic => "Socioeconomic",
            LayerId::Graph => "Graph",
            LayerId::Hotspots => "Hotspots",
            LayerId::Prediction => "Prediction",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            LayerId::Crime => "crime",
            LayerId::TaxiTrips => "taxi_trips",
            LayerId::Weather => "weather",
            LayerId::PublicTransport => "public_transport",
            LayerId::Favelas => "favelas",
            LayerId::Socioeconomic => "socioeconomic",
            LayerId::Graph => "graph",
            LayerId::Hotspots => "hotspots",
            LayerId::Prediction => "prediction",
        }
    }

    pub fn icon(self) -> &'static str {
        match self {
            LayerId::Crime => "siren",
            LayerId::TaxiTrips => "taxi",
            LayerId::Weather => "cloud-rain",
            LayerId::PublicTransport => "bus",
            LayerId::Favelas => "house",
            LayerId::Socioeconomic => "coins",
            LayerId::Graph => "network",
            LayerId::Hotspots => "flame",
            LayerId::Prediction => "grid",
        }
    }

    /// Declared geometry of each layer.
    pub fn geometry_kind(self) -> GeometryKind {
        match self {
            LayerId::TaxiTrips => GeometryKind::Arc,
            LayerId::Favelas | LayerId::Socioeconomic | LayerId::Prediction => GeometryKind::Polygon,
            _ => GeometryKind::Point,
        }
    }
}

impl fmt::Display for LayerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for LayerId {
    type Err = Error;

    /// Accepts the number ("1".."9") or the slug.
    fn from_str(s: &str) -> Result<Self> {
        if let Ok(n) = s.parse::<u8>() {
            return LayerId::from_number(n).ok_or_else(|| Error::InvalidArgument(format!("unknown layer `{s}`")));
        }
        LayerId::ALL
            .into_iter()
            .find(|l| l.slug() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown layer `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Point,
    Arc,
    Polygon,
}

/// One polygon as rings of coordinates; the first ring is the exterior, the
/// rest are holes. Rings are open (no repeated closing vertex).
pub type PolygonRings = Vec<Vec<GeoPoint>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Geometry {
    Point { at: GeoPoint },
    Arc { origin: GeoPoint, destination: GeoPoint },
    /// A polygon or multipolygon: one entry per part.
    Polygon { parts: Vec<PolygonRings> },
}

impl Geometry {
    pub fn kind(&self) -> GeometryKind {
        match self {
            Geometry::Point { .. } => GeometryKind::Point,
            Geometry::Arc { .. } => GeometryKind::Arc,
            Geometry::Polygon { .. } => GeometryKind::Polygon,
        }
    }

    pub fn bbox(&self) -> Option<GeoBBox> {
        match self {
            Geometry::Point { at } => GeoBBox::of([at]),
            Geometry::Arc { origin, destination } => GeoBBox::of([origin, destination]),
            Geometry::Polygon { parts } => GeoBBox::of(parts.iter().flat_map(|p| p.first()).flatten()),
        }
    }

    /// Representative point used for indexing (arcs index by origin).
    pub fn anchor(&self) -> Option<GeoPoint> {
        match self {
            Geometry::Point { at } => Some(*at),
            Geometry::Arc { origin, .. } => Some(*origin),
            Geometry::Polygon { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Num(f64),
    Text(String),
}

impl AttrValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            AttrValue::Num(v) => Some(*v),
            AttrValue::Text(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            AttrValue::Text(s) => Some(s),
            AttrValue::Num(_) => None,
        }
    }
}

impl From<f64> for AttrValue {
    fn from(v: f64) -> Self {
        AttrValue::Num(v)
    }
}

impl From<&str> for AttrValue {
    fn from(v: &str) -> Self {
        AttrValue::Text(v.to_owned())
    }
}

impl From<String> for AttrValue {
    fn from(v: String) -> Self {
        AttrValue::Text(v)
    }
}

/// Calendar position of a record. Fields are optional because some sources
/// only carry part of it (trips have month and weekday but no hour).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TimeKey {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i32>,
    /// 1..=12
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub month: Option<u8>,
    /// 0 = Monday .. 6 = Sunday
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weekday: Option<u8>,
    /// 0..=23
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hour: Option<u8>,
}

impl From<NaiveDateTime> for TimeKey {
    fn from(t: NaiveDateTime) -> Self {
        TimeKey {
            year: Some(t.year()),
            month: Some(t.month() as u8),
            weekday: Some(t.weekday().num_days_from_monday() as u8),
            hour: Some(t.hour() as u8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub geometry: Geometry,
    #[serde(default)]
    pub attributes: BTreeMap<String, AttrValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeKey>,
}

impl Record {
    pub fn attr_f64(&self, key: &str) -> Option<f64> {
        self.attributes.get(key).and_then(AttrValue::as_f64)
    }

    pub fn attr_str(&self, key: &str) -> Option<&str> {
        self.attributes.get(key).and_then(AttrValue::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDataset {
    pub id: LayerId,
    pub name: String,
    pub kind: GeometryKind,
    pub records: Vec<Record>,
    pub bbox: Option<GeoBBox>,
}

impl LayerDataset {
    /// Builds a dataset, checking every record against the layer's declared
    /// geometry kind.
    pub fn new(id: LayerId, records: Vec<Record>) -> Result<Self> {
        let kind = id.geometry_kind();
        if let Some(i) = records.iter().position(|r| r.geometry.kind() != kind) {
            return Err(Error::InvalidArgument(format!(
                "record {i} of layer `{id}` is {:?}, layer expects {kind:?}",
                records[i].geometry.kind()
            )));
        }
        let bbox = records
            .iter()
            .filter_map(|r| r.geometry.bbox())
            .reduce(|a, b| a.union(&b));
        Ok(LayerDataset {
            id,
            name: id.name().to_owned(),
            kind,
            records,
            bbox,
        })
    }

    pub fn empty(id: LayerId) -> Self {
        LayerDataset::new(id, Vec::new()).expect("empty layer is always valid")
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn has_time(&self) -> bool {
        !self.records.is_empty() && self.records.iter().all(|r| r.time.is_some())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_and_keys_are_bijective() {
        for (i, l) in LayerId::ALL.iter().enumerate() {
            assert_eq!(l.number() as usize, i + 1);
            assert_eq!(LayerId::from_number(l.number()), Some(*l));
            assert_eq!(l.slug().parse::<LayerId>().unwrap(), *l);
            assert_eq!(l.number().to_string().parse::<LayerId>().unwrap(), *l);
        }
        assert!(LayerId::from_number(0).is_none());
        assert!(LayerId::from_number(10).is_none());
        assert!("rain".parse::<LayerId>().is_err());
    }

    #[test]
    fn geometry_kind_is_enforced() {
        let rec = Record {
            geometry: Geometry::Point {
                at: GeoPoint { lat: 0.0, lon: 0.0 },
            },
            attributes: BTreeMap::new(),
            time: None,
        };
        assert!(LayerDataset::new(LayerId::Crime, vec![rec.clone()]).is_ok());
        assert!(LayerDataset::new(LayerId::Favelas, vec![rec]).is_err());
    }
}
