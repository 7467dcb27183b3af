use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{planar_parts, Tract};
use crate::error::{Error, Result};
use crate::geo::ProjectedPoint;
use crate::spatial_index::{QuadTree, QuadTreeConfig};
use crate::street_graph::StreetGraph;

/// Time of day: morning 6-12, afternoon 12-18, night 18-24, dawn 0-6.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Period {
    Morning,
    Afternoon,
    Night,
    Dawn,
}

impl Period {
    pub const ALL: [Period; 4] = [Period::Morning, Period::Afternoon, Period::Night, Period::Dawn];

    pub fn as_str(self) -> &'static str {
        match self {
            Period::Morning => "morning",
            Period::Afternoon => "afternoon",
            Period::Night => "night",
            Period::Dawn => "dawn",
        }
    }
}

impl FromStr for Period {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Period::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown period `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayOfWeek {
    Mon,
    Tue,
    Wed,
    Thu,
    Fri,
    Sat,
    Sun,
}

impl DayOfWeek {
    pub const ALL: [DayOfWeek; 7] = [
        DayOfWeek::Mon,
        DayOfWeek::Tue,
        DayOfWeek::Wed,
        DayOfWeek::Thu,
        DayOfWeek::Fri,
        DayOfWeek::Sat,
        DayOfWeek::Sun,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DayOfWeek::Mon => "mon",
            DayOfWeek::Tue => "tue",
            DayOfWeek::Wed => "wed",
            DayOfWeek::Thu => "thu",
            DayOfWeek::Fri => "fri",
            DayOfWeek::Sat => "sat",
            DayOfWeek::Sun => "sun",
        }
    }

    /// 0 = Monday.
    pub fn index(self) -> u8 {
        self as u8
    }
}

impl FromStr for DayOfWeek {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DayOfWeek::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown weekday `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripLabel {
    Regular,
    Occurrence,
}

impl TripLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            TripLabel::Regular => "regular",
            TripLabel::Occurrence => "occurrence",
        }
    }

    pub fn is_occurrence(self) -> bool {
        self == TripLabel::Occurrence
    }
}

impl FromStr for TripLabel {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regular" => Ok(TripLabel::Regular),
            "occurrence" => Ok(TripLabel::Occurrence),
            _ => Err(Error::InvalidArgument(format!("unknown label `{s}`"))),
        }
    }
}

impl fmt::Display for TripLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TripRecord {
    pub origin: usize,
    pub destination: usize,
    pub period: Period,
    pub weekday: DayOfWeek,
    /// 1..=12
    pub month: u8,
    pub label: TripLabel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TripSynthesisParams {
    pub count: usize,
    pub seed: u64,
    /// Endpoints this close to a hotspot corner may be labeled occurrence.
    pub hotspot_radius_m: f64,
    /// Target regular trips per occurrence (1:ratio).
    pub regular_per_occurrence: f64,
    /// Morning, afternoon, night, dawn.
    pub period_weights: [f64; 4],
    /// Monday..Sunday.
    pub weekday_weights: [f64; 7],
}

impl Default for TripSynthesisParams {
    fn default() -> Self {
        TripSynthesisParams {
            count: 87_000,
            seed: 2020,
            hotspot_radius_m: 500.0,
            regular_per_occurrence: 90.0,
            period_weights: [0.30, 0.35, 0.25, 0.10],
            weekday_weights: [0.155, 0.155, 0.155, 0.155, 0.155, 0.1125, 0.1125],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripSynthesis {
    pub trips: Vec<TripRecord>,
    /// Probability that a trip with a near-hotspot endpoint is an occurrence.
    pub occurrence_probability: f64,
    /// Expected share of trips with a near-hotspot endpoint.
    pub near_hotspot_share: f64,
    /// Normalized tract sampling weights.
    pub tract_weights: Vec<f64>,
    /// Endpoint corner of each tract.
    pub tract_nodes: Vec<usize>,
    pub warnings: Vec<String>,
}

impl TripSynthesis {
    pub fn occurrence_count(&self) -> usize {
        self.trips.iter().filter(|t| t.label.is_occurrence()).count()
    }
}

/// Samples `params.count` trips between census tracts, origin and
/// destination independently and proportional to population density.
/// Trips with an endpoint near a hotspot corner become occurrences with a
/// probability chosen so that the expected occurrence share is
/// `1 / (1 + regular_per_occurrence)`.
pub fn synth_trips(
    g: &StreetGraph,
    tracts: &[Tract],
    hotspot_nodes: &[usize],
    params: &TripSynthesisParams,
) -> Result<TripSynthesis> {
    if tracts.is_empty() {
        return Err(Error::MissingLayer("socioeconomic (no tracts)".into()));
    }
    let projection = g.projection();
    let mut density = Vec::with_capacity(tracts.len());
    let mut tract_nodes = Vec::with_capacity(tracts.len());
    for (i, t) in tracts.iter().enumerate() {
        let parts = planar_parts(&t.parts, projection);
        let area: f64 = parts.iter().map(|p| p.area()).sum();
        if !(area > 0.0) || !t.population.is_finite() || t.population < 0.0 {
            return Err(Error::InvalidArgument(format!("tract {i} has zero area or invalid population")));
        }
        density.push(t.population / area);
        let largest = parts
            .iter()
            .max_by(|a, b| a.area().total_cmp(&b.area()))
            .expect("area > 0 implies a part");
        tract_nodes.push(g.nearest_corner_projected(&largest.centroid()));
    }
    let total: f64 = density.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("total tract population is zero".into()));
    }
    let weights: Vec<f64> = density.iter().map(|d| d / total).collect();

    let mut warnings = Vec::new();
    let hot_index = QuadTree::build(
        hotspot_nodes.iter().map(|&n| (g.position(n), n)),
        QuadTreeConfig::default(),
    );
    let near_hotspot = |p: &ProjectedPoint| -> bool {
        !hot_index.is_empty() && hot_index.knn(p, 1).radius <= params.hotspot_radius_m
    };
    let tract_near: Vec<bool> = tract_nodes.iter().map(|&n| near_hotspot(&g.position(n))).collect();
    let q: f64 = weights.iter().zip(&tract_near).filter(|(_, &near)| near).map(|(w, _)| w).sum();
    let near_share = 1.0 - (1.0 - q) * (1.0 - q);
    let target_share = 1.0 / (1.0 + params.regular_per_occurrence);
    let occurrence_probability = if near_share > 0.0 {
        (target_share / near_share).min(1.0)
    } else {
        0.0
    };
    if hotspot_nodes.is_empty() {
        warnings.push("no hotspot nodes: every trip is labeled regular".to_owned());
    } else if near_share == 0.0 {
        warnings.push("no tract endpoint lies near a hotspot: every trip is labeled regular".to_owned());
    } else if occurrence_probability >= 1.0 {
        warnings.push(format!(
            "near-hotspot share {near_share:.5} is below the target occurrence share {target_share:.5}"
        ));
    }

    let tract_dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidArgument(format!("tract weights: {e}")))?;
    let period_dist =
        WeightedIndex::new(params.period_weights).map_err(|e| Error::InvalidArgument(format!("period weights: {e}")))?;
    let weekday_dist =
        WeightedIndex::new(params.weekday_weights).map_err(|e| Error::InvalidArgument(format!("weekday weights: {e}")))?;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut trips = Vec::with_capacity(params.count);
    for _ in 0..params.count {
        let o = tract_dist.sample(&mut rng);
        let d = tract_dist.sample(&mut rng);
        let period = Period::ALL[period_dist.sample(&mut rng)];
        let weekday = DayOfWeek::ALL[weekday_dist.sample(&mut rng)];
        let month = rng.gen_range(1..=12u8);
        let u: f64 = rng.gen();
        let near = tract_near[o] || tract_near[d];
        let label = if near && u < occurrence_probability {
            TripLabel::Occurrence
        } else {
            TripLabel::Regular
        };
        trips.push(TripRecord {
            origin: tract_nodes[o],
            destination: tract_nodes[d],
            period,
            weekday,
            month,
            label,
        });
    }
    Ok(TripSynthesis {
        trips,
        occurrence_probability,
        near_hotspot_share: near_share,
        tract_weights: weights,
        tract_nodes,
        warnings,
    })
}
