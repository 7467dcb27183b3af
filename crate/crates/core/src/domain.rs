//! Typed views of the raw input layers, and conversions to and from the
//! generic [`LayerDataset`] container.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, PlanarPolygon, Projection};
use crate::layers::{AttrValue, Geometry, LayerDataset, LayerId, PolygonRings, Record, TimeKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrimeType {
    VehicleTheft,
    PhoneTheft,
}

impl CrimeType {
    pub fn as_str(self) -> &'static str {
        match self {
            CrimeType::VehicleTheft => "vehicle_theft",
            CrimeType::PhoneTheft => "phone_theft",
        }
    }
}

impl FromStr for CrimeType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vehicle_theft" => Ok(CrimeType::VehicleTheft),
            "phone_theft" => Ok(CrimeType::PhoneTheft),
            _ => Err(Error::InvalidArgument(format!(
                "unknown crime type `{s}` (expected vehicle_theft or phone_theft)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrimeEvent {
    pub at: GeoPoint,
    pub time: TimeKey,
    pub kind: CrimeType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FacilityCategory {
    BusStop,
    Terminal,
    Subway,
    Train,
}

impl FacilityCategory {
    pub const ALL: [FacilityCategory; 4] = [
        FacilityCategory::BusStop,
        FacilityCategory::Terminal,
        FacilityCategory::Subway,
        FacilityCategory::Train,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FacilityCategory::BusStop => "bus_stop",
            FacilityCategory::Terminal => "terminal",
            FacilityCategory::Subway => "subway",
            FacilityCategory::Train => "train",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for FacilityCategory {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FacilityCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown facility category `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Facility {
    pub at: GeoPoint,
    pub category: FacilityCategory,
}

/// Census-tract indicator names, in feature order.
pub const INDICATOR_NAMES: [&str; 7] = [
    "income",
    "householder_income",
    "unemployment",
    "literacy_7_15",
    "pct_under_18",
    "pct_18_65",
    "pct_over_65",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tract {
    pub parts: Vec<PolygonRings>,
    pub population: f64,
    pub indicators: [f64; 7],
}

/// Calendar month of a weather observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl From<YearMonth> for String {
    fn from(m: YearMonth) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for YearMonth {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for YearMonth {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("expected YYYY-MM, got `{s}`"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        if y.len() != 4 || m.len() != 2 || !(1..=12).contains(&month) {
            return Err(bad());
        }
        Ok(YearMonth { year, month })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Climate {
    pub tmax_c: f64,
    pub tmin_c: f64,
    pub precip_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherStation {
    pub id: String,
    pub name: String,
    pub at: GeoPoint,
    pub series: BTreeMap<YearMonth, Climate>,
}

fn point_record(at: GeoPoint, attributes: BTreeMap<String, AttrValue>, time: Option<TimeKey>) -> Record {
    Record {
        geometry: Geometry::Point { at },
        attributes,
        time,
    }
}

fn attrs<const N: usize>(pairs: [(&str, AttrValue); N]) -> BTreeMap<String, AttrValue> {
    pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

fn expect_layer(layer: &LayerDataset, id: LayerId) -> Result<()> {
    if layer.id != id {
        return Err(Error::InvalidArgument(format!("expected layer `{id}`, got `{}`", layer.id)));
    }
    Ok(())
}

fn point_of(r: &Record, layer: LayerId, i: usize) -> Result<GeoPoint> {
    match r.geometry {
        Geometry::Point { at } => Ok(at),
        _ => Err(Error::data(layer.slug(), format!("record {i}"), "expected point geometry")),
    }
}

pub fn crimes_to_layer(crimes: &[CrimeEvent]) -> LayerDataset {
    let records = crimes
        .iter()
        .map(|c| point_record(c.at, attrs([("crime_type", c.kind.as_str().into())]), Some(c.time)))
        .collect();
    LayerDataset::new(LayerId::Crime, records).expect("crime records are points")
}

pub fn crimes_from_layer(layer: &LayerDataset) -> Result<Vec<CrimeEvent>> {
    expect_layer(layer, LayerId::Crime)?;
    layer
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let loc = || format!("record {i}");
            let kind = r
                .attr_str("crime_type")
                .ok_or_else(|| Error::data("crime", loc(), "missing crime_type"))?
                .parse()?;
            let time = r.time.ok_or_else(|| Error::data("crime", loc(), "missing timestamp"))?;
            Ok(CrimeEvent {
                at: point_of(r, LayerId::Crime, i)?,
                time,
                kind,
            })
        })
        .collect()
}

pub fn facilities_to_layer(facilities: &[Facility]) -> LayerDataset {
    let records = facilities
        .iter()
        .map(|f| point_record(f.at, attrs([("category", f.category.as_str().into())]), None))
        .collect();
    LayerDataset::new(LayerId::PublicTransport, records).expect("facility records are points")
}

pub fn facilities_from_layer(layer: &LayerDataset) -> Result<Vec<Facility>> {
    expect_layer(layer, LayerId::PublicTransport)?;
    layer
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let category = r
                .attr_str("category")
                .ok_or_else(|| Error::data("public_transport", format!("record {i}"), "missing category"))?
                .parse()?;
            Ok(Facility {
                at: point_of(r, LayerId::PublicTransport, i)?,
                category,
            })
        })
        .collect()
}

/// Station points only; the monthly series travel separately.
pub fn stations_to_layer(stations: &[WeatherStation]) -> LayerDataset {
    let records = stations
        .iter()
        .map(|s| {
            point_record(
                s.at,
                attrs([("station_id", s.id.clone().into()), ("name", s.name.clone().into())]),
                None,
            )
        })
        .collect();
    LayerDataset::new(LayerId::Weather, records).expect("station records are points")
}

pub fn polygons_to_layer(id: LayerId, polygons: impl IntoIterator<Item = (Vec<PolygonRings>, BTreeMap<String, AttrValue>)>) -> LayerDataset {
    let records = polygons
        .into_iter()
        .map(|(parts, attributes)| Record {
            geometry: Geometry::Polygon { parts },
            attributes,
            time: None,
        })
        .collect();
    LayerDataset::new(id, records).expect("polygon records")
}

pub fn favelas_from_layer(layer: &LayerDataset) -> Result<Vec<Vec<PolygonRings>>> {
    expect_layer(layer, LayerId::Favelas)?;
    Ok(layer
        .records
        .iter()
        .filter_map(|r| match &r.geometry {
            Geometry::Polygon { parts } => Some(parts.clone()),
            _ => None,
        })
        .collect())
}

pub fn tracts_to_layer(tracts: &[Tract]) -> LayerDataset {
    polygons_to_layer(
        LayerId::Socioeconomic,
        tracts.iter().map(|t| {
            let mut a: BTreeMap<String, AttrValue> = INDICATOR_NAMES
                .iter()
                .zip(t.indicators)
                .map(|(k, v)| ((*k).to_owned(), AttrValue::Num(v)))
                .collect();
            a.insert("population".into(), AttrValue::Num(t.population));
            (t.parts.clone(), a)
        }),
    )
}

pub fn tracts_from_layer(layer: &LayerDataset) -> Result<Vec<Tract>> {
    expect_layer(layer, LayerId::Socioeconomic)?;
    layer
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let Geometry::Polygon { parts } = &r.geometry else {
                return Err(Error::data("socioeconomic", format!("record {i}"), "expected polygon"));
            };
            let get = |k: &str| {
                r.attr_f64(k)
                    .ok_or_else(|| Error::data("socioeconomic", format!("record {i}"), format!("missing property `{k}`")))
            };
            let mut indicators = [0.0; 7];
            for (slot, name) in indicators.iter_mut().zip(INDICATOR_NAMES) {
                *slot = get(name)?;
            }
            Ok(Tract {
                parts: parts.clone(),
                population: get("population")?,
                indicators,
            })
        })
        .collect()
}

/// Projects every part of a (multi)polygon.
pub fn planar_parts(parts: &[PolygonRings], projection: &Projection) -> Vec<PlanarPolygon> {
    parts
        .iter()
        .filter(|rings| !rings.is_empty())
        .map(|rings| PlanarPolygon {
            exterior: rings[0].iter().map(|p| projection.project(*p)).collect(),
            holes: rings[1..]
                .iter()
                .map(|h| h.iter().map(|p| projection.project(*p)).collect())
                .collect(),
        })
        .collect()
}
