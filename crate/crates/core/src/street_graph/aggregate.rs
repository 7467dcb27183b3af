//! Attribution of every thematic layer to graph nodes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{NodeClass, NodeFeatures, StreetGraph};
use crate::crime_sim::{HotspotResult, TripRecord};
use crate::domain::{planar_parts, Climate, CrimeEvent, CrimeType, Facility, FacilityCategory, Tract, WeatherStation, YearMonth};
use crate::error::{Error, Result};
use crate::geo::{PlanarPolygon, ProjectedPoint, Projection};
use crate::layers::PolygonRings;
use crate::spatial_index::{QuadTree, QuadTreeConfig};

/// Distance rules used during aggregation, in meters. All are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AggregationRadii {
    pub transport_m: f64,
    pub favela_m: f64,
    pub tract_boundary_eps_m: f64,
    /// Below this distance a node takes a station's values verbatim.
    pub station_snap_m: f64,
}

impl Default for AggregationRadii {
    fn default() -> Self {
        AggregationRadii {
            transport_m: 200.0,
            favela_m: 500.0,
            tract_boundary_eps_m: 1.0,
            station_snap_m: 1.0,
        }
    }
}

/// Transport facilities indexed for radius counting.
#[derive(Debug, Clone)]
pub struct FacilityIndex {
    tree: QuadTree,
    categories: Vec<FacilityCategory>,
}

impl FacilityIndex {
    pub fn new(facilities: &[(ProjectedPoint, FacilityCategory)]) -> Self {
        FacilityIndex {
            tree: QuadTree::build(facilities.iter().map(|f| f.0).zip(0..), QuadTreeConfig::default()),
            categories: facilities.iter().map(|f| f.1).collect(),
        }
    }

    pub fn from_facilities(facilities: &[Facility], projection: &Projection) -> Self {
        let projected: Vec<_> = facilities.iter().map(|f| (projection.project(f.at), f.category)).collect();
        FacilityIndex::new(&projected)
    }
}

/// Facilities at distance `<= radius_m` from `p`, counted per category in
/// [`FacilityCategory::ALL`] order.
pub fn radius_count(facilities: &FacilityIndex, p: &ProjectedPoint, radius_m: f64) -> [usize; 4] {
    let mut counts = [0; 4];
    for id in facilities.tree.within_radius(p, radius_m) {
        counts[facilities.categories[id].index()] += 1;
    }
    counts
}

/// True when `p` lies within `radius_m` of any polygon (inside counts as 0).
pub fn favela_flag(p: &ProjectedPoint, polygons: &[PlanarPolygon], radius_m: f64) -> bool {
    polygons.iter().any(|poly| poly.distance(p) <= radius_m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarTract {
    pub parts: Vec<PlanarPolygon>,
    pub indicators: [f64; 7],
}

impl PlanarTract {
    pub fn from_tract(t: &Tract, projection: &Projection) -> Self {
        PlanarTract {
            parts: planar_parts(&t.parts, projection),
            indicators: t.indicators,
        }
    }

    pub fn distance(&self, p: &ProjectedPoint) -> f64 {
        self.parts.iter().map(|poly| poly.distance(p)).fold(f64::INFINITY, f64::min)
    }
}

/// Socioeconomic indicators for a node: the containing tract's values; the
/// mean over all tracts within `eps_m` when the node sits on a shared
/// boundary; the nearest tract's values when it is outside every tract.
/// `None` only when there are no tracts at all.
pub fn census_assign(p: &ProjectedPoint, tracts: &[PlanarTract], eps_m: f64) -> Option<[f64; 7]> {
    let dists: Vec<f64> = tracts.iter().map(|t| t.distance(p)).collect();
    let close: Vec<usize> = (0..tracts.len()).filter(|&i| dists[i] <= eps_m).collect();
    if close.is_empty() {
        let nearest = (0..tracts.len()).min_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(a.cmp(&b)))?;
        return Some(tracts[nearest].indicators);
    }
    let mut out = [0.0; 7];
    for &i in &close {
        for (o, v) in out.iter_mut().zip(tracts[i].indicators) {
            *o += v;
        }
    }
    let n = close.len() as f64;
    Some(out.map(|v| v / n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationSite {
    pub id: String,
    pub position: ProjectedPoint,
    pub series: BTreeMap<YearMonth, Climate>,
}

impl StationSite {
    pub fn from_station(s: &WeatherStation, projection: &Projection) -> Self {
        StationSite {
            id: s.id.clone(),
            position: projection.project(s.at),
            series: s.series.clone(),
        }
    }
}

/// Inverse-distance-weighted climate at `p` for `month`. A node closer than
/// `snap_m` to a station takes that station's values exactly.
pub fn idw_weather(p: &ProjectedPoint, stations: &[StationSite], month: YearMonth, snap_m: f64) -> Result<Climate> {
    if stations.is_empty() {
        return Err(Error::MissingLayer("weather".into()));
    }
    let mut values = Vec::with_capacity(stations.len());
    for s in stations {
        let v = s.series.get(&month).ok_or_else(|| Error::MissingMonth {
            station: s.id.clone(),
            month: month.month,
        })?;
        values.push((p.dist(&s.position), *v));
    }
    if let Some((_, v)) = values
        .iter()
        .filter(|(d, _)| *d < snap_m)
        .min_by(|a, b| a.0.total_cmp(&b.0))
    {
        return Ok(*v);
    }
    let (mut wsum, mut tmax, mut tmin, mut precip) = (0.0, 0.0, 0.0, 0.0);
    for (d, v) in &values {
        let w = 1.0 / d;
        wsum += w;
        tmax += w * v.tmax_c;
        tmin += w * v.tmin_c;
        precip += w * v.precip_mm;
    }
    Ok(Climate {
        tmax_c: tmax / wsum,
        tmin_c: tmin / wsum,
        precip_mm: precip / wsum,
    })
}

/// Mean of the monthly interpolations over every month any station reports.
pub fn idw_period_mean(p: &ProjectedPoint, stations: &[StationSite], snap_m: f64) -> Result<Climate> {
    let months: std::collections::BTreeSet<YearMonth> = stations.iter().flat_map(|s| s.series.keys().copied()).collect();
    if months.is_empty() {
        return Err(Error::MissingLayer("weather series".into()));
    }
    let mut acc = Climate {
        tmax_c: 0.0,
        tmin_c: 0.0,
        precip_mm: 0.0,
    };
    for &m in &months {
        let c = idw_weather(p, stations, m, snap_m)?;
        acc.tmax_c += c.tmax_c;
        acc.tmin_c += c.tmin_c;
        acc.precip_mm += c.precip_mm;
    }
    let n = months.len() as f64;
    Ok(Climate {
        tmax_c: acc.tmax_c / n,
        tmin_c: acc.tmin_c / n,
        precip_mm: acc.precip_mm / n,
    })
}

/// Everything [`aggregate_all`] reads. A `None` layer is an error; an empty
/// slice is a loaded layer with no records.
#[derive(Debug, Clone, Copy)]
pub struct AggregationInputs<'a> {
    pub graph: &'a StreetGraph,
    pub classes: &'a [NodeClass],
    pub crimes: Option<&'a [CrimeEvent]>,
    pub trips: Option<&'a [TripRecord]>,
    pub stations: Option<&'a [WeatherStation]>,
    pub facilities: Option<&'a [Facility]>,
    pub favelas: Option<&'a [Vec<PolygonRings>]>,
    pub tracts: Option<&'a [Tract]>,
    pub hotspots: Option<&'a [HotspotResult]>,
    pub radii: AggregationRadii,
}

fn require<'a, T: ?Sized>(layer: Option<&'a T>, name: &str) -> Result<&'a T> {
    layer.ok_or_else(|| Error::MissingLayer(name.to_owned()))
}

/// Builds the complete feature vector of every node.
pub fn aggregate_all(inputs: &AggregationInputs<'_>) -> Result<Vec<NodeFeatures>> {
    let g = inputs.graph;
    let n = g.node_count();
    let projection = g.projection();
    let radii = inputs.radii;
    let crimes = require(inputs.crimes, "crime")?;
    let trips = require(inputs.trips, "taxi_trips")?;
    let stations = require(inputs.stations, "weather")?;
    let facilities = require(inputs.facilities, "public_transport")?;
    let favelas = require(inputs.favelas, "favelas")?;
    let tracts = require(inputs.tracts, "socioeconomic")?;
    let hotspots = require(inputs.hotspots, "hotspots")?;
    if inputs.classes.len() != n {
        return Err(Error::MissingLayer("graph classification".into()));
    }
    if tracts.is_empty() {
        return Err(Error::MissingLayer("socioeconomic (no tracts)".into()));
    }

    let mut features = vec![NodeFeatures::default(); n];

    for c in crimes {
        let f = &mut features[g.nearest_corner(c.at)];
        match c.kind {
            CrimeType::VehicleTheft => f.vehicle_theft_count += 1.0,
            CrimeType::PhoneTheft => f.phone_theft_count += 1.0,
        }
    }
    for t in trips {
        if t.origin >= n || t.destination >= n {
            return Err(Error::InvalidArgument(format!(
                "trip references node {} outside the graph",
                t.origin.max(t.destination)
            )));
        }
        features[t.origin].pickup_count += 1.0;
        features[t.destination].dropoff_count += 1.0;
    }

    let sites: Vec<StationSite> = stations.iter().map(|s| StationSite::from_station(s, projection)).collect();
    let facility_index = FacilityIndex::from_facilities(facilities, projection);
    let favela_polys: Vec<PlanarPolygon> = favelas.iter().flat_map(|parts| planar_parts(parts, projection)).collect();
    let planar_tracts: Vec<PlanarTract> = tracts.iter().map(|t| PlanarTract::from_tract(t, projection)).collect();

    let mut hot: Vec<Option<&HotspotResult>> = vec![None; n];
    for h in hotspots {
        if h.node < n {
            hot[h.node] = Some(h);
        }
    }

    for (v, f) in features.iter_mut().enumerate() {
        let p = g.position(v);
        let climate = idw_period_mean(&p, &sites, radii.station_snap_m)?;
        f.tmax_c = climate.tmax_c;
        f.tmin_c = climate.tmin_c;
        f.precip_mm = climate.precip_mm;

        let counts = radius_count(&facility_index, &p, radii.transport_m);
        f.bus_stop_count = counts[0] as f64;
        f.terminal_count = counts[1] as f64;
        f.subway_count = counts[2] as f64;
        f.train_count = counts[3] as f64;

        f.favela_flag = f64::from(u8::from(favela_flag(&p, &favela_polys, radii.favela_m)));
        f.socioeconomic = census_assign(&p, &planar_tracts, radii.tract_boundary_eps_m).expect("tracts checked non-empty");
        f.class_one_hot = inputs.classes[v].one_hot();
        f.node_degree = g.degree(v) as f64;
        if let Some(h) = hot[v] {
            f.hotspot_stationary_prob = h.stationary_active;
            f.hotspot_count = h.total as f64;
            f.hotspot_flag = f64::from(u8::from(h.is_hotspot));
        }
    }
    Ok(features)
}
