//! Coordinates, the local planar projection and the small amount of planar
//! geometry the aggregation rules need (point-in-polygon, point-to-segment).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius used by the equirectangular projection, in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// WGS-84 coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Validating constructor.
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = GeoPoint { lat, lon };
        if p.is_valid() {
            Ok(p)
        } else {
            Err(Error::InvalidCoordinate { lat, lon })
        }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

/// Planar point in meters east/north of a projection origin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProjectedPoint {
    pub x: f64,
    pub y: f64,
}

impl ProjectedPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        ProjectedPoint { x, y }
    }

    #[inline]
    pub fn dist2(&self, other: &ProjectedPoint) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }

    #[inline]
    pub fn dist(&self, other: &ProjectedPoint) -> f64 {
        self.dist2(other).sqrt()
    }
}

/// Equirectangular projection of `p` about `origin`.
pub fn project(p: GeoPoint, origin: GeoPoint) -> ProjectedPoint {
    let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    ProjectedPoint {
        x: k * (p.lon - origin.lon) * origin.lat.to_radians().cos(),
        y: k * (p.lat - origin.lat),
    }
}

/// Inverse of [`project`].
pub fn unproject(p: ProjectedPoint, origin: GeoPoint) -> GeoPoint {
    let k = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
    GeoPoint {
        lat: origin.lat + p.y / k,
        lon: origin.lon + p.x / (k * origin.lat.to_radians().cos()),
    }
}

/// A projection fixed to one origin; every metric rule in the crate goes
/// through one of these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub origin: GeoPoint,
}

impl Projection {
    pub fn new(origin: GeoPoint) -> Self {
        Projection { origin }
    }

    /// Projection about the arithmetic mean of `points`.
    pub fn centered_on<'a>(points: impl IntoIterator<Item = &'a GeoPoint>) -> Option<Self> {
        let (mut lat, mut lon, mut n) = (0.0, 0.0, 0usize);
        for p in points {
            lat += p.lat;
            lon += p.lon;
            n += 1;
        }
        (n > 0).then(|| Projection::new(GeoPoint {
            lat: lat / n as f64,
            lon: lon / n as f64,
        }))
    }

    #[inline]
    pub fn project(&self, p: GeoPoint) -> ProjectedPoint {
        project(p, self.origin)
    }

    #[inline]
    pub fn unproject(&self, p: ProjectedPoint) -> GeoPoint {
        unproject(p, self.origin)
    }
}

/// Axis-aligned box in degrees: `min_lon, min_lat, max_lon, max_lat`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoBBox {
    pub min_lon: f64,
    pub min_lat: f64,
    pub max_lon: f64,
    pub max_lat: f64,
}

impl GeoBBox {
    /// Normalizes corner order so callers can pass either diagonal.
    pub fn from_corners(lon1: f64, lat1: f64, lon2: f64, lat2: f64) -> Self {
        GeoBBox {
            min_lon: lon1.min(lon2),
            min_lat: lat1.min(lat2),
            max_lon: lon1.max(lon2),
            max_lat: lat1.max(lat2),
        }
    }

    pub fn of<'a>(points: impl IntoIterator<Item = &'a GeoPoint>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut b = GeoBBox::from_corners(first.lon, first.lat, first.lon, first.lat);
        for p in it {
            b.extend(p);
        }
        Some(b)
    }

    pub fn extend(&mut self, p: &GeoPoint) {
        self.min_lon = self.min_lon.min(p.lon);
        self.min_lat = self.min_lat.min(p.lat);
        self.max_lon = self.max_lon.max(p.lon);
        self.max_lat = self.max_lat.max(p.lat);
    }

    pub fn union(&self, other: &GeoBBox) -> GeoBBox {
        GeoBBox {
            min_lon: self.min_lon.min(other.min_lon),
            min_lat: self.min_lat.min(other.min_lat),
            max_lon: self.max_lon.max(other.max_lon),
            max_lat: self.max_lat.max(other.max_lat),
        }
    }

    pub fn contains(&self, p: &GeoPoint) -> bool {
        p.lon >= self.min_lon && p.lon <= self.max_lon && p.lat >= self.min_lat && p.lat <= self.max_lat
    }

    pub fn intersects(&self, other: &GeoBBox) -> bool {
        self.min_lon <= other.max_lon
            && other.min_lon <= self.max_lon
            && self.min_lat <= other.max_lat
            && other.min_lat <= self.max_lat
    }
}

/// A simple polygon in projected space. Rings are stored open (no repeated
/// closing vertex).
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPolygon {
    pub exterior: Vec<ProjectedPoint>,
    pub holes: Vec<Vec<ProjectedPoint>>,
}

impl PlanarPolygon {
    /// Distance from `p` to the polygon; 0 for points inside (or on the
    /// boundary).
    pub fn distance(&self, p: &ProjectedPoint) -> f64 {
        if self.contains(p) {
            0.0
        } else {
            self.boundary_distance(p)
        }
    }

    /// Distance from `p` to the nearest ring edge, regardless of inside/outside.
    pub fn boundary_distance(&self, p: &ProjectedPoint) -> f64 {
        std::iter::once(&self.exterior)
            .chain(self.holes.iter())
            .map(|ring| ring_distance(ring, p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: &ProjectedPoint) -> bool {
        ring_contains(&self.exterior, p) && !self.holes.iter().any(|h| ring_contains(h, p))
    }

    pub fn area(&self) -> f64 {
        ring_area(&self.exterior).abs() - self.holes.iter().map(|h| ring_area(h).abs()).sum::<f64>()
    }

    pub fn centroid(&self) -> ProjectedPoint {
        ring_centroid(&self.exterior)
    }
}

/// Even-odd ray casting.
pub fn ring_contains(ring: &[ProjectedPoint], p: &ProjectedPoint) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if p.x < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub fn segment_distance(p: &ProjectedPoint, a: &ProjectedPoint, b: &ProjectedPoint) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0);
    p.dist(&ProjectedPoint::new(a.x + t * dx, a.y + t * dy))
}

pub fn ring_distance(ring: &[ProjectedPoint], p: &ProjectedPoint) -> f64 {
    let n = ring.len();
    (0..n)
        .map(|i| segment_distance(p, &ring[i], &ring[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

/// Signed shoelace area.
pub fn ring_area(ring: &[ProjectedPoint]) -> f64 {
    let n = ring.len();
    let mut s = 0.0;
    for i in 0..n {
        let (a, b) = (ring[i], ring[(i + 1) % n]);
        s += a.x * b.y - b.x * a.y;
    }
    s / 2.0
}

pub fn ring_centroid(ring: &[ProjectedPoint]) -> ProjectedPoint {
    let a = ring_area(ring);
    let n = ring.len();
    if a.abs() < 1e-12 {
        let (sx, sy) = ring.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
        return ProjectedPoint::new(sx / n.max(1) as f64, sy / n.max(1) as f64);
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let (p, q) = (ring[i], ring[(i + 1) % n]);
        let cross = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    ProjectedPoint::new(cx / (6.0 * a), cy / (6.0 * a))
}
