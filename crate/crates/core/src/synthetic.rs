//! Seeded synthetic city for demos and tests: a rectangular street grid
//! with dead-end stubs, square census tracts, a few crime hotspots that are
//! active every month, background crime, transport facilities, weather
//! stations and favela polygons. [`SyntheticCity::write_inputs`] writes the
//! canonical input files.

use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::domain::{Climate, CrimeEvent, CrimeType, Facility, FacilityCategory, Tract, WeatherStation, YearMonth, INDICATOR_NAMES};
use crate::error::{Error, Result};
use crate::geo::{GeoPoint, ProjectedPoint, Projection};
use crate::layers::{PolygonRings, TimeKey};
use crate::street_graph::Polyline;

#[derive(Debug, Clone, PartialEq)]
pub struct CityParams {
    pub seed: u64,
    pub center: GeoPoint,
    /// Corners per side of the street grid.
    pub grid_side: usize,
    pub block_m: f64,
    /// Blocks per tract side.
    pub tract_blocks: usize,
    pub dead_end_stubs: usize,
    /// Tract cells `(col, row)` whose central corner hosts a hotspot.
    pub hotspot_tracts: Vec<(usize, usize)>,
    pub hotspot_crimes_per_month: usize,
    pub background_crimes: usize,
    pub year: i32,
    pub facilities: [usize; 4],
    pub stations: usize,
    pub favelas: usize,
}

impl Default for CityParams {
    fn default() -> Self {
        CityParams {
            seed: 2020,
            center: GeoPoint { lat: -22.9068, lon: -43.1729 },
            grid_side: 43,
            block_m: 100.0,
            tract_blocks: 6,
            dead_end_stubs: 80,
            hotspot_tracts: vec![(1, 1), (4, 2), (5, 5)],
            hotspot_crimes_per_month: 3,
            background_crimes: 600,
            year: 2019,
            facilities: [300, 12, 15, 8],
            stations: 5,
            favelas: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCity {
    pub streets: Vec<Polyline>,
    pub crimes: Vec<CrimeEvent>,
    /// Full timestamp of each crime, parallel to `crimes`.
    pub crime_timestamps: Vec<NaiveDateTime>,
    pub facilities: Vec<Facility>,
    pub stations: Vec<WeatherStation>,
    pub favelas: Vec<PolygonRings>,
    pub tracts: Vec<Tract>,
    /// Corners where hotspot crime was planted.
    pub hotspot_corners: Vec<GeoPoint>,
}

fn random_time(rng: &mut ChaCha8Rng, year: i32, month: u32) -> NaiveDateTime {
    let days = if month == 12 {
        31
    } else {
        let next = NaiveDate::from_ymd_opt(year, month + 1, 1).expect("valid date");
        next.pred_opt().expect("has predecessor").day()
    };
    let date = NaiveDate::from_ymd_opt(year, month, rng.gen_range(1..=days)).expect("valid date");
    date.and_hms_opt(rng.gen_range(0..24), rng.gen_range(0..60), 0).expect("valid time")
}

fn square(projection: &Projection, x0: f64, y0: f64, size: f64) -> PolygonRings {
    let ring = [(x0, y0), (x0 + size, y0), (x0 + size, y0 + size), (x0, y0 + size)]
        .map(|(x, y)| projection.unproject(ProjectedPoint::new(x, y)))
        .to_vec();
    vec![ring]
}

pub fn generate(p: &CityParams) -> SyntheticCity {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let projection = Projection::new(p.center);
    let extent = (p.grid_side - 1) as f64 * p.block_m;
    let (x0, y0) = (-extent / 2.0, -extent / 2.0);
    let corner = |i: usize, j: usize| projection.unproject(ProjectedPoint::new(x0 + i as f64 * p.block_m, y0 + j as f64 * p.block_m));
    let at = |x: f64, y: f64| projection.unproject(ProjectedPoint::new(x, y));

    let mut streets: Vec<Polyline> = Vec::new();
    for j in 0..p.grid_side {
        streets.push((0..p.grid_side).map(|i| corner(i, j)).collect());
    }
    for i in 0..p.grid_side {
        streets.push((0..p.grid_side).map(|j| corner(i, j)).collect());
    }
    // Stubs poke 40 m into a block from a corner and stop.
    for _ in 0..p.dead_end_stubs {
        let (i, j) = (rng.gen_range(0..p.grid_side - 1), rng.gen_range(0..p.grid_side - 1));
        let (x, y) = (x0 + i as f64 * p.block_m, y0 + j as f64 * p.block_m);
        let d = 0.4 * p.block_m;
        streets.push(vec![at(x, y), at(x + d * 0.7, y + d * 0.7)]);
    }

    let tract_m = p.tract_blocks as f64 * p.block_m;
    let tracts_per_side = (p.grid_side - 1) / p.tract_blocks;
    let mut tracts = Vec::new();
    for tj in 0..tracts_per_side {
        for ti in 0..tracts_per_side {
            let population = rng.gen_range(2_000.0..20_000.0f64).round();
            let young = rng.gen_range(0.15..0.35);
            let old = rng.gen_range(0.05..0.20);
            let indicators = [
                rng.gen_range(800.0..9_000.0f64).round(),
                rng.gen_range(1_000.0..12_000.0f64).round(),
                rng.gen_range(0.03..0.20),
                rng.gen_range(0.85..0.99),
                young,
                1.0 - young - old,
                old,
            ];
            tracts.push(Tract {
                parts: vec![square(&projection, x0 + ti as f64 * tract_m, y0 + tj as f64 * tract_m, tract_m)],
                population,
                indicators,
            });
        }
    }

    let mut crimes = Vec::new();
    let mut crime_timestamps = Vec::new();
    let mut push_crime = |at: GeoPoint, t: NaiveDateTime, kind: CrimeType| {
        crimes.push(CrimeEvent {
            at,
            time: TimeKey::from(t),
            kind,
        });
        crime_timestamps.push(t);
    };
    let mut hotspot_corners = Vec::new();
    let half = p.tract_blocks / 2;
    for &(ti, tj) in &p.hotspot_tracts {
        let (i, j) = (ti * p.tract_blocks + half, tj * p.tract_blocks + half);
        let c = corner(i, j);
        hotspot_corners.push(c);
        let base = projection.project(c);
        for month in 1..=12 {
            for _ in 0..p.hotspot_crimes_per_month {
                let jitter = ProjectedPoint::new(base.x + rng.gen_range(-15.0..15.0), base.y + rng.gen_range(-15.0..15.0));
                let t = random_time(&mut rng, p.year, month);
                let kind = if rng.gen_bool(0.6) { CrimeType::PhoneTheft } else { CrimeType::VehicleTheft };
                push_crime(projection.unproject(jitter), t, kind);
            }
        }
    }
    for _ in 0..p.background_crimes {
        let month = rng.gen_range(1..=12);
        let pos = at(x0 + rng.gen_range(0.0..extent), y0 + rng.gen_range(0.0..extent));
        let t = random_time(&mut rng, p.year, month);
        let kind = if rng.gen_bool(0.5) { CrimeType::PhoneTheft } else { CrimeType::VehicleTheft };
        push_crime(pos, t, kind);
    }

    let mut facilities = Vec::new();
    for (cat, &n) in FacilityCategory::ALL.iter().zip(&p.facilities) {
        for _ in 0..n {
            facilities.push(Facility {
                at: at(x0 + rng.gen_range(0.0..extent), y0 + rng.gen_range(0.0..extent)),
                category: *cat,
            });
        }
    }

    let mut stations = Vec::new();
    for s in 0..p.stations {
        let warm = rng.gen_range(-1.5..1.5);
        let series = (1..=12u32)
            .map(|m| {
                let season = (f64::from(m) - 1.0) / 12.0 * std::f64::consts::TAU;
                let tmax = 30.0 + 4.0 * season.cos() + warm + rng.gen_range(-0.5..0.5);
                (
                    YearMonth { year: p.year, month: m },
                    Climate {
                        tmax_c: tmax,
                        tmin_c: tmax - rng.gen_range(6.0..9.0),
                        precip_mm: (120.0 + 80.0 * season.cos() + rng.gen_range(-20.0..20.0)).max(0.0),
                    },
                )
            })
            .collect();
        stations.push(WeatherStation {
            id: format!("S{:02}", s + 1),
            name: format!("Station {}", s + 1),
            at: at(x0 + rng.gen_range(0.0..extent), y0 + rng.gen_range(0.0..extent)),
            series,
        });
    }

    let favelas = (0..p.favelas)
        .map(|_| {
            let size = rng.gen_range(150.0..300.0);
            let (fx, fy) = (x0 + rng.gen_range(0.0..extent - size), y0 + rng.gen_range(0.0..extent - size));
            square(&projection, fx, fy, size)
        })
        .collect();

    SyntheticCity {
        streets,
        crimes,
        crime_timestamps,
        facilities,
        stations,
        favelas,
        tracts,
        hotspot_corners,
    }
}

fn lonlat(p: &GeoPoint) -> Value {
    json!([p.lon, p.lat])
}

fn closed_ring(r: &[GeoPoint]) -> Value {
    Value::Array(r.iter().chain(r.first()).map(lonlat).collect())
}

fn polygon_feature(rings: &PolygonRings, properties: Value) -> Value {
    json!({
        "type": "Feature",
        "properties": properties,
        "geometry": {"type": "Polygon", "coordinates": rings.iter().map(|r| closed_ring(r)).collect::<Vec<_>>()},
    })
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(v)?).map_err(|e| Error::io(path, e))
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| crate::ingest::csv_error(path, e))?;
    w.write_record(header).map_err(|e| crate::ingest::csv_error(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| crate::ingest::csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

impl SyntheticCity {
    /// Writes `crimes.csv`, `transport.csv`, `stations.csv`, `weather.csv`,
    /// `streets.geojson`, `favelas.geojson` and `tracts.geojson` into `dir`.
    pub fn write_inputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_csv(
            &dir.join("crimes.csv"),
            &["lat", "lon", "timestamp", "crime_type"],
            self.crimes.iter().zip(&self.crime_timestamps).map(|(c, t)| {
                vec![
                    c.at.lat.to_string(),
                    c.at.lon.to_string(),
                    t.format("%Y-%m-%d %H:%M:%S").to_string(),
                    c.kind.as_str().to_owned(),
                ]
            }),
        )?;
        write_csv(
            &dir.join("transport.csv"),
            &["lat", "lon", "category"],
            self.facilities
                .iter()
                .map(|f| vec![f.at.lat.to_string(), f.at.lon.to_string(), f.category.as_str().to_owned()]),
        )?;
        write_csv(
            &dir.join("stations.csv"),
            &["station_id", "name", "lat", "lon"],
            self.stations
                .iter()
                .map(|s| vec![s.id.clone(), s.name.clone(), s.at.lat.to_string(), s.at.lon.to_string()]),
        )?;
        write_csv(
            &dir.join("weather.csv"),
            &["station_id", "date", "tmax_c", "tmin_c", "precip_mm"],
            self.stations.iter().flat_map(|s| {
                s.series.iter().map(|(m, c)| {
                    vec![s.id.clone(), m.to_string(), c.tmax_c.to_string(), c.tmin_c.to_string(), c.precip_mm.to_string()]
                })
            }),
        )?;
        let streets: Vec<Value> = self
            .streets
            .iter()
            .map(|l| json!({"type": "Feature", "properties": {}, "geometry": {"type": "LineString", "coordinates": l.iter().map(lonlat).collect::<Vec<_>>()}}))
            .collect();
        write_json(&dir.join("streets.geojson"), &json!({"type": "FeatureCollection", "features": streets}))?;
        let favelas: Vec<Value> = self
            .favelas
            .iter()
            .enumerate()
            .map(|(i, f)| polygon_feature(f, json!({"name": format!("favela {}", i + 1)})))
            .collect();
        write_json(&dir.join("favelas.geojson"), &json!({"type": "FeatureCollection", "features": favelas}))?;
        let tracts: Vec<Value> = self
            .tracts
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut props = serde_json::Map::new();
                props.insert("tract_id".into(), json!(format!("T{:03}", i + 1)));
                props.insert("population".into(), json!(t.population));
                for (k, v) in INDICATOR_NAMES.iter().zip(t.indicators) {
                    props.insert((*k).into(), json!(v));
                }
                polygon_feature(&t.parts[0], Value::Object(props))
            })
            .collect();
        write_json(&dir.join("tracts.geojson"), &json!({"type": "FeatureCollection", "features": tracts}))
    }
}
