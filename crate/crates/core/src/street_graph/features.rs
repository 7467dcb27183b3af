use serde::{Deserialize, Serialize};

pub const NODE_FEATURE_COUNT: usize = 26;

/// Per-node feature names, in vector order.
pub const FEATURE_NAMES: [&str; NODE_FEATURE_COUNT] = [
    "vehicle_theft_count",
    "phone_theft_count",
    "pickup_count",
    "dropoff_count",
    "tmax_c",
    "tmin_c",
    "precip_mm",
    "bus_stop_count",
    "terminal_count",
    "subway_count",
    "train_count",
    "favela_flag",
    "income",
    "householder_income",
    "unemployment",
    "literacy_7_15",
    "pct_under_18",
    "pct_18_65",
    "pct_over_65",
    "class_dead_end",
    "class_near_dead_end",
    "class_regular",
    "node_degree",
    "hotspot_stationary_prob",
    "hotspot_count",
    "hotspot_flag",
];

/// The eight thematic groups used by the legend analytics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThematicLayer {
    Crime,
    Trips,
    Weather,
    Transport,
    Favelas,
    Socioeconomic,
    Graph,
    Hotspots,
}

impl ThematicLayer {
    pub const ALL: [ThematicLayer; 8] = [
        ThematicLayer::Crime,
        ThematicLayer::Trips,
        ThematicLayer::Weather,
        ThematicLayer::Transport,
        ThematicLayer::Favelas,
        ThematicLayer::Socioeconomic,
        ThematicLayer::Graph,
        ThematicLayer::Hotspots,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ThematicLayer::Crime => "crime",
            ThematicLayer::Trips => "trips",
            ThematicLayer::Weather => "weather",
            ThematicLayer::Transport => "transport",
            ThematicLayer::Favelas => "favelas",
            ThematicLayer::Socioeconomic => "socioeconomic",
            ThematicLayer::Graph => "graph",
            ThematicLayer::Hotspots => "hotspots",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Group of the node feature at position `i` (0..26).
    pub fn of_node_feature(i: usize) -> ThematicLayer {
        match i {
            0..=1 => ThematicLayer::Crime,
            2..=3 => ThematicLayer::Trips,
            4..=6 => ThematicLayer::Weather,
            7..=10 => ThematicLayer::Transport,
            11 => ThematicLayer::Favelas,
            12..=18 => ThematicLayer::Socioeconomic,
            19..=22 => ThematicLayer::Graph,
            23..=25 => ThematicLayer::Hotspots,
            _ => panic!("node feature index {i} out of range"),
        }
    }
}

/// Everything known about one street corner.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NodeFeatures {
    pub vehicle_theft_count: f64,
    pub phone_theft_count: f64,
    pub pickup_count: f64,
    pub dropoff_count: f64,
    pub tmax_c: f64,
    pub tmin_c: f64,
    pub precip_mm: f64,
    pub bus_stop_count: f64,
    pub terminal_count: f64,
    pub subway_count: f64,
    pub train_count: f64,
    pub favela_flag: f64,
    pub socioeconomic: [f64; 7],
    pub class_one_hot: [f64; 3],
    pub node_degree: f64,
    pub hotspot_stationary_prob: f64,
    pub hotspot_count: f64,
    pub hotspot_flag: f64,
}

impl NodeFeatures {
    pub fn to_array(&self) -> [f64; NODE_FEATURE_COUNT] {
        let s = &self.socioeconomic;
        let c = &self.class_one_hot;
        [
            self.vehicle_theft_count,
            self.phone_theft_count,
            self.pickup_count,
            self.dropoff_count,
            self.tmax_c,
            self.tmin_c,
            self.precip_mm,
            self.bus_stop_count,
            self.terminal_count,
            self.subway_count,
            self.train_count,
            self.favela_flag,
            s[0],
            s[1],
            s[2],
            s[3],
            s[4],
            s[5],
            s[6],
            c[0],
            c[1],
            c[2],
            self.node_degree,
            self.hotspot_stationary_prob,
            self.hotspot_count,
            self.hotspot_flag,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}
