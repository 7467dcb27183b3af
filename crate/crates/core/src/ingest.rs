//! Loaders for the canonical CSV and GeoJSON input files.
//!
//! Every loader reports problems with a location (1-based line number for
//! CSV, 0-based feature index for GeoJSON). CSV loaders skip invalid rows
//! with a warning while they stay at or below 1 % of the file, and abort
//! above that.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDateTime;
use serde_json::Value;

use crate::crime_sim::{DayOfWeek, Period, TripLabel, TripRecord};
use crate::domain::{Climate, CrimeType, FacilityCategory, WeatherStation, YearMonth, INDICATOR_NAMES};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;
use crate::layers::{AttrValue, Geometry, LayerDataset, LayerId, PolygonRings, Record, TimeKey};
use crate::street_graph::{Polyline, StreetGraph};

/// Largest tolerated share of invalid rows.
pub const BAD_ROW_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded<T> {
    pub value: T,
    pub warnings: Vec<String>,
}

fn file_label(path: &Path) -> String {
    path.display().to_string()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

struct Columns {
    index: BTreeMap<String, usize>,
}

impl Columns {
    fn get<'r>(&self, row: &'r csv::StringRecord, name: &str) -> &'r str {
        row.get(self.index[name]).unwrap_or("").trim()
    }
}

/// Reads `reader` as CSV with a header that must include `required`, and
/// parses each row with `parse`. Rows failing to parse are skipped unless
/// they exceed [`BAD_ROW_LIMIT`].
fn read_rows<R: Read, T>(
    reader: R,
    file: &str,
    required: &[&str],
    mut parse: impl FnMut(&Columns, &csv::StringRecord) -> std::result::Result<T, String>,
) -> Result<Loaded<Vec<T>>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::data(file, "line 1", format!("unreadable header: {e}")))?
        .clone();
    let index: BTreeMap<String, usize> = headers.iter().enumerate().map(|(i, h)| (h.trim().to_owned(), i)).collect();
    for col in required {
        if !index.contains_key(*col) {
            return Err(Error::data(file, "line 1", format!("missing column `{col}`")));
        }
    }
    let cols = Columns { index };
    let mut out = Vec::new();
    let mut bad: Vec<String> = Vec::new();
    let mut total = 0usize;
    for (i, row) in rdr.records().enumerate() {
        total += 1;
        let line = i + 2;
        let parsed = row
            .map_err(|e| e.to_string())
            .and_then(|r| if r.len() < headers.len() { Err(format!("expected {} fields, got {}", headers.len(), r.len())) } else { Ok(r) })
            .and_then(|r| parse(&cols, &r));
        match parsed {
            Ok(v) => out.push(v),
            Err(msg) => bad.push(format!("line {line}: {msg}")),
        }
    }
    let mut warnings = Vec::new();
    if total == 0 {
        warnings.push(format!("{file}: no data rows"));
    }
    if !bad.is_empty() {
        if bad.len() as f64 > BAD_ROW_LIMIT * total as f64 {
            return Err(Error::TooManyBadRows {
                file: file.to_owned(),
                bad: bad.len(),
                total,
                first: bad.iter().take(5).cloned().collect::<Vec<_>>().join("; "),
            });
        }
        warnings.extend(bad.into_iter().map(|b| format!("{file}: skipped {b}")));
    }
    Ok(Loaded { value: out, warnings })
}

fn parse_f64(s: &str, col: &str) -> std::result::Result<f64, String> {
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("`{col}` is not a number: `{s}`"))
}

fn parse_point(lat: &str, lon: &str) -> std::result::Result<GeoPoint, String> {
    let (lat, lon) = (parse_f64(lat, "lat")?, parse_f64(lon, "lon")?);
    GeoPoint::new(lat, lon).map_err(|_| format!("coordinate out of range: lat={lat}, lon={lon}"))
}

const TIMESTAMP_FORMATS: [&str; 4] = ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M"];

/// Parses `YYYY-MM-DD HH:MM[:SS]` (space or `T` separator).
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    TIMESTAMP_FORMATS.iter().find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// Column layout of a point CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSchema {
    pub layer: LayerId,
    pub lat: &'static str,
    pub lon: &'static str,
    pub timestamp: Option<&'static str>,
    /// Categorical column and its allowed values.
    pub category: Option<(&'static str, Vec<&'static str>)>,
}

impl PointSchema {
    /// `lat,lon,timestamp,crime_type`
    pub fn crime() -> Self {
        PointSchema {
            layer: LayerId::Crime,
            lat: "lat",
            lon: "lon",
            timestamp: Some("timestamp"),
            category: Some(("crime_type", vec![CrimeType::VehicleTheft.as_str(), CrimeType::PhoneTheft.as_str()])),
        }
    }

    /// `lat,lon,category`
    pub fn transport() -> Self {
        PointSchema {
            layer: LayerId::PublicTransport,
            lat: "lat",
            lon: "lon",
            timestamp: None,
            category: Some(("category", FacilityCategory::ALL.iter().map(|c| c.as_str()).collect())),
        }
    }
}

pub fn load_points_csv(path: &Path, schema: &PointSchema) -> Result<Loaded<LayerDataset>> {
    load_points_from(open(path)?, &file_label(path), schema)
}

pub fn load_points_from<R: Read>(reader: R, file: &str, schema: &PointSchema) -> Result<Loaded<LayerDataset>> {
    let mut required = vec![schema.lat, schema.lon];
    required.extend(schema.timestamp);
    required.extend(schema.category.as_ref().map(|c| c.0));
    let rows = read_rows(reader, file, &required, |c, r| {
        let at = parse_point(c.get(r, schema.lat), c.get(r, schema.lon))?;
        let time = match schema.timestamp {
            Some(col) => {
                let raw = c.get(r, col);
                Some(TimeKey::from(parse_timestamp(raw).ok_or_else(|| format!("unparseable timestamp `{raw}`"))?))
            }
            None => None,
        };
        let mut attributes = BTreeMap::new();
        if let Some((col, allowed)) = &schema.category {
            let v = c.get(r, col);
            if !allowed.contains(&v) {
                return Err(format!("`{col}` must be one of {}, got `{v}`", allowed.join(", ")));
            }
            attributes.insert((*col).to_owned(), AttrValue::from(v));
        }
        Ok(Record {
            geometry: Geometry::Point { at },
            attributes,
            time,
        })
    })?;
    Ok(Loaded {
        value: LayerDataset::new(schema.layer, rows.value)?,
        warnings: rows.warnings,
    })
}

/// `stations.csv` (`station_id,name,lat,lon`) joined with `weather.csv`
/// (`station_id,date,tmax_c,tmin_c,precip_mm`, date as `YYYY-MM`).
pub fn load_weather(stations: &Path, series: &Path) -> Result<Loaded<Vec<WeatherStation>>> {
    let st = read_rows(open(stations)?, &file_label(stations), &["station_id", "name", "lat", "lon"], |c, r| {
        let id = c.get(r, "station_id");
        if id.is_empty() {
            return Err("empty station_id".into());
        }
        Ok(WeatherStation {
            id: id.to_owned(),
            name: c.get(r, "name").to_owned(),
            at: parse_point(c.get(r, "lat"), c.get(r, "lon"))?,
            series: BTreeMap::new(),
        })
    })?;
    let mut warnings = st.warnings;
    let mut by_id: BTreeMap<String, WeatherStation> = BTreeMap::new();
    for s in st.value {
        if by_id.contains_key(&s.id) {
            return Err(Error::data(file_label(stations), format!("station `{}`", s.id), "duplicate station_id"));
        }
        by_id.insert(s.id.clone(), s);
    }
    let known: Vec<String> = by_id.keys().cloned().collect();
    let rows = read_rows(
        open(series)?,
        &file_label(series),
        &["station_id", "date", "tmax_c", "tmin_c", "precip_mm"],
        |c, r| {
            let id = c.get(r, "station_id");
            if known.binary_search_by(|k| k.as_str().cmp(id)).is_err() {
                return Err(format!("unknown station_id `{id}`"));
            }
            let month: YearMonth = c.get(r, "date").parse().map_err(|e: Error| e.to_string())?;
            let climate = Climate {
                tmax_c: parse_f64(c.get(r, "tmax_c"), "tmax_c")?,
                tmin_c: parse_f64(c.get(r, "tmin_c"), "tmin_c")?,
                precip_mm: parse_f64(c.get(r, "precip_mm"), "precip_mm")?,
            };
            Ok((id.to_owned(), month, climate))
        },
    )?;
    warnings.extend(rows.warnings);
    for (id, month, climate) in rows.value {
        by_id.get_mut(&id).expect("checked above").series.insert(month, climate);
    }
    Ok(Loaded {
        value: by_id.into_values().collect(),
        warnings,
    })
}

/// A trip with geographic endpoints, as stored in `trips.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripRow {
    pub origin: GeoPoint,
    pub destination: GeoPoint,
    pub period: Period,
    pub weekday: DayOfWeek,
    pub month: u8,
    pub label: TripLabel,
}

pub const TRIP_COLUMNS: [&str; 8] = ["origin_lat", "origin_lon", "dest_lat", "dest_lon", "period", "weekday", "month", "label"];

pub fn read_trips_csv(path: &Path) -> Result<Loaded<Vec<TripRow>>> {
    read_trips_from(open(path)?, &file_label(path))
}

pub fn read_trips_from<R: Read>(reader: R, file: &str) -> Result<Loaded<Vec<TripRow>>> {
    read_rows(reader, file, &TRIP_COLUMNS, |c, r| {
        let month: u8 = c
            .get(r, "month")
            .parse()
            .ok()
            .filter(|m| (1..=12).contains(m))
            .ok_or_else(|| format!("month must be 1..12, got `{}`", c.get(r, "month")))?;
        let e = |e: Error| e.to_string();
        Ok(TripRow {
            origin: parse_point(c.get(r, "origin_lat"), c.get(r, "origin_lon"))?,
            destination: parse_point(c.get(r, "dest_lat"), c.get(r, "dest_lon"))?,
            period: c.get(r, "period").parse().map_err(e)?,
            weekday: c.get(r, "weekday").parse().map_err(e)?,
            month,
            label: c.get(r, "label").parse().map_err(e)?,
        })
    })
}

/// Snaps trip endpoints to their nearest street corners.
pub fn trips_to_records(rows: &[TripRow], g: &StreetGraph) -> Vec<TripRecord> {
    rows.iter()
        .map(|t| TripRecord {
            origin: g.nearest_corner(t.origin),
            destination: g.nearest_corner(t.destination),
            period: t.period,
            weekday: t.weekday,
            month: t.month,
            label: t.label,
        })
        .collect()
}

pub fn write_trips_csv(path: &Path, trips: &[TripRecord], g: &StreetGraph) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(TRIP_COLUMNS).map_err(|e| csv_error(path, e))?;
    for t in trips {
        let (o, d) = (g.node(t.origin), g.node(t.destination));
        w.write_record([
            o.lat.to_string(),
            o.lon.to_string(),
            d.lat.to_string(),
            d.lon.to_string(),
            t.period.as_str().to_owned(),
            t.weekday.as_str().to_owned(),
            t.month.to_string(),
            t.label.as_str().to_owned(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::data(file_label(path), "write", e.to_string())
}

/// Taxi-trip arcs for display; the time key carries month and weekday.
pub fn trips_to_layer(trips: &[TripRecord], g: &StreetGraph) -> LayerDataset {
    let records = trips
        .iter()
        .map(|t| Record {
            geometry: Geometry::Arc {
                origin: g.node(t.origin),
                destination: g.node(t.destination),
            },
            attributes: [
                ("label", t.label.as_str()),
                ("period", t.period.as_str()),
                ("weekday", t.weekday.as_str()),
            ]
            .into_iter()
            .map(|(k, v)| (k.to_owned(), AttrValue::from(v)))
            .collect(),
            time: Some(TimeKey {
                year: None,
                month: Some(t.month),
                weekday: Some(t.weekday.index()),
                hour: None,
            }),
        })
        .collect();
    LayerDataset::new(LayerId::TaxiTrips, records).expect("trip records are arcs")
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::data(file_label(path), format!("line {}", e.line()), e.to_string()))
}

fn features<'v>(doc: &'v Value, file: &str) -> Result<&'v Vec<Value>> {
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(Error::data(file, "root", "expected a FeatureCollection"));
    }
    doc.get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| Error::data(file, "root", "missing `features` array"))
}

fn position(v: &Value) -> std::result::Result<GeoPoint, String> {
    let a = v.as_array().filter(|a| a.len() >= 2).ok_or("position must be [lon, lat]")?;
    let (lon, lat) = (a[0].as_f64().ok_or("non-numeric longitude")?, a[1].as_f64().ok_or("non-numeric latitude")?);
    GeoPoint::new(lat, lon).map_err(|_| format!("coordinate out of range: lat={lat}, lon={lon}"))
}

fn positions(v: &Value) -> std::result::Result<Vec<GeoPoint>, String> {
    v.as_array().ok_or("expected an array of positions")?.iter().map(position).collect()
}

/// Validates a closed ring and returns it open.
fn ring(v: &Value) -> std::result::Result<Vec<GeoPoint>, String> {
    let mut pts = positions(v)?;
    if pts.len() < 4 || pts.first() != pts.last() {
        return Err("ring is not closed (first and last positions differ or fewer than 4 positions)".into());
    }
    pts.pop();
    let mut distinct = pts.clone();
    distinct.sort_by(|a, b| a.lat.total_cmp(&b.lat).then(a.lon.total_cmp(&b.lon)));
    distinct.dedup();
    if distinct.len() < 3 {
        return Err("ring has fewer than 3 distinct vertices".into());
    }
    Ok(pts)
}

fn polygon(v: &Value) -> std::result::Result<PolygonRings, String> {
    let rings = v.as_array().ok_or("polygon must be an array of rings")?;
    if rings.is_empty() {
        return Err("polygon has no rings".into());
    }
    rings.iter().map(ring).collect()
}

/// Polygon and MultiPolygon features. For the socioeconomic layer every
/// feature must carry `population` and the seven indicator properties.
pub fn load_polygons_geojson(path: &Path, layer: LayerId) -> Result<Loaded<LayerDataset>> {
    let file = file_label(path);
    let doc = read_json(path)?;
    polygons_from_value(&doc, &file, layer)
}

pub fn polygons_from_value(doc: &Value, file: &str, layer: LayerId) -> Result<Loaded<LayerDataset>> {
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for (i, f) in features(doc, file)?.iter().enumerate() {
        let loc = || format!("feature {i}");
        let geom = f.get("geometry").ok_or_else(|| Error::data(file, loc(), "missing geometry"))?;
        let coords = geom.get("coordinates").unwrap_or(&Value::Null);
        let parts = match geom.get("type").and_then(Value::as_str) {
            Some("Polygon") => vec![polygon(coords).map_err(|m| Error::data(file, loc(), m))?],
            Some("MultiPolygon") => coords
                .as_array()
                .ok_or_else(|| Error::data(file, loc(), "multipolygon must be an array of polygons"))?
                .iter()
                .map(polygon)
                .collect::<std::result::Result<_, _>>()
                .map_err(|m| Error::data(file, loc(), m))?,
            other => return Err(Error::data(file, loc(), format!("expected Polygon or MultiPolygon, got {other:?}"))),
        };
        let props = f.get("properties").and_then(Value::as_object);
        let mut attributes = BTreeMap::new();
        if let Some(props) = props {
            for (k, v) in props {
                match v {
                    Value::Number(n) => {
                        attributes.insert(k.clone(), AttrValue::Num(n.as_f64().unwrap_or(f64::NAN)));
                    }
                    Value::String(s) => {
                        attributes.insert(k.clone(), AttrValue::Text(s.clone()));
                    }
                    _ => {}
                }
            }
        }
        if layer == LayerId::Socioeconomic {
            for name in std::iter::once("population").chain(INDICATOR_NAMES) {
                match attributes.get(name).and_then(AttrValue::as_f64) {
                    Some(v) if v.is_finite() => {}
                    _ => return Err(Error::data(file, loc(), format!("missing or non-numeric property `{name}`"))),
                }
            }
        }
        records.push(Record {
            geometry: Geometry::Polygon { parts },
            attributes,
            time: None,
        });
    }
    if records.is_empty() {
        warnings.push(format!("{file}: no polygon features"));
    }
    Ok(Loaded {
        value: LayerDataset::new(layer, records)?,
        warnings,
    })
}

/// LineString and MultiLineString features as polylines. Lines with fewer
/// than two distinct vertices are dropped with a warning.
pub fn load_streets_geojson(path: &Path) -> Result<Loaded<Vec<Polyline>>> {
    let file = file_label(path);
    let doc = read_json(path)?;
    streets_from_value(&doc, &file)
}

pub fn streets_from_value(doc: &Value, file: &str) -> Result<Loaded<Vec<Polyline>>> {
    let mut lines = Vec::new();
    let mut warnings = Vec::new();
    for (i, f) in features(doc, file)?.iter().enumerate() {
        let loc = || format!("feature {i}");
        let geom = f.get("geometry").ok_or_else(|| Error::data(file, loc(), "missing geometry"))?;
        let coords = geom.get("coordinates").unwrap_or(&Value::Null);
        let parts: Vec<Polyline> = match geom.get("type").and_then(Value::as_str) {
            Some("LineString") => vec![positions(coords).map_err(|m| Error::data(file, loc(), m))?],
            Some("MultiLineString") => coords
                .as_array()
                .ok_or_else(|| Error::data(file, loc(), "multilinestring must be an array of lines"))?
                .iter()
                .map(positions)
                .collect::<std::result::Result<_, _>>()
                .map_err(|m| Error::data(file, loc(), m))?,
            other => {
                warnings.push(format!("{file}: feature {i}: skipped non-line geometry {other:?}"));
                continue;
            }
        };
        for mut line in parts {
            line.dedup();
            if line.len() < 2 {
                warnings.push(format!("{file}: feature {i}: dropped degenerate line"));
            } else {
                lines.push(line);
            }
        }
    }
    if lines.is_empty() {
        return Err(Error::data(file, "root", "no linestrings"));
    }
    Ok(Loaded { value: lines, warnings })
}
