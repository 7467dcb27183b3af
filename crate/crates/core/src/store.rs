//! The workspace: every pipeline product in one versioned file.
//!
//! File layout:
//!
//! | offset | size | content                        |
//! |--------|------|--------------------------------|
//! | 0      | 4    | magic `ULWS`                   |
//! | 4      | 1    | format version                 |
//! | 5      | 8    | body length, little endian u64 |
//! | 13     | 32   | SHA-256 of the body            |
//! | 45     | n    | body, UTF-8 JSON               |

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analytics::{CorrelationReport, ShapleyReport};
use crate::config::Config;
use crate::crime_sim::{HotspotResult, TripSynthesis};
use crate::domain::WeatherStation;
use crate::error::{Error, Result};
use crate::geo::Projection;
use crate::layers::{LayerDataset, LayerId};
use crate::prediction::{Confusion, GbtModel, PredictionGrid};
use crate::street_graph::{NodeClass, NodeFeatures, Polyline, StreetGraph};

pub const WORKSPACE_MAGIC: [u8; 4] = *b"ULWS";
pub const WORKSPACE_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 8 + 32;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphStage {
    pub graph: StreetGraph,
    pub classes: Vec<NodeClass>,
    pub hotspots: Vec<HotspotResult>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripStage {
    pub synthesis: TripSynthesis,
    pub node_features: Vec<NodeFeatures>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub confusion: Confusion,
    pub g_mean: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    /// Rows after undersampling.
    pub train_rows: usize,
    pub test_rows: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelStage {
    pub model: GbtModel,
    pub evaluation: Evaluation,
    /// Built from the held-out trips.
    pub grid: PredictionGrid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalyticsStage {
    pub correlation: CorrelationReport,
    pub shapley: ShapleyReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Workspace {
    pub config: Config,
    pub projection: Projection,
    /// Layer datasets present so far, in roster order.
    pub layers: Vec<LayerDataset>,
    pub stations: Vec<WeatherStation>,
    pub streets: Vec<Polyline>,
    pub warnings: Vec<String>,
    pub graph: Option<GraphStage>,
    pub trips: Option<TripStage>,
    pub model: Option<ModelStage>,
    pub analytics: Option<AnalyticsStage>,
}

impl Workspace {
    pub fn layer(&self, id: LayerId) -> Option<&LayerDataset> {
        self.layers.iter().find(|l| l.id == id)
    }

    /// Inserts or replaces a layer, keeping roster order.
    pub fn set_layer(&mut self, layer: LayerDataset) {
        self.layers.retain(|l| l.id != layer.id);
        self.layers.push(layer);
        self.layers.sort_by_key(|l| l.id);
    }

    pub fn remove_layer(&mut self, id: LayerId) {
        self.layers.retain(|l| l.id != id);
    }

    pub fn graph_stage(&self) -> Result<&GraphStage> {
        self.graph.as_ref().ok_or(Error::StageMissing {
            stage: "graph",
            command: "build",
        })
    }

    pub fn trip_stage(&self) -> Result<&TripStage> {
        self.trips.as_ref().ok_or(Error::StageMissing {
            stage: "trips",
            command: "synth-trips",
        })
    }

    pub fn model_stage(&self) -> Result<&ModelStage> {
        self.model.as_ref().ok_or(Error::StageMissing {
            stage: "model",
            command: "train",
        })
    }

    pub fn analytics_stage(&self) -> Result<&AnalyticsStage> {
        self.analytics.as_ref().ok_or(Error::StageMissing {
            stage: "analytics",
            command: "analyze",
        })
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let body = serde_json::to_vec(self)?;
        let mut out = Vec::with_capacity(HEADER_LEN + body.len());
        out.extend_from_slice(&WORKSPACE_MAGIC);
        out.push(WORKSPACE_VERSION);
        out.extend_from_slice(&(body.len() as u64).to_le_bytes());
        out.extend_from_slice(&Sha256::digest(&body));
        out.extend_from_slice(&body);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 5 || bytes[..4] != WORKSPACE_MAGIC {
            return Err(Error::Corrupt("not a workspace file (bad magic)".into()));
        }
        if bytes[4] != WORKSPACE_VERSION {
            return Err(Error::VersionMismatch {
                found: bytes[4],
                expected: WORKSPACE_VERSION,
            });
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::Corrupt("truncated header".into()));
        }
        let len = u64::from_le_bytes(bytes[5..13].try_into().expect("8 bytes"));
        let body = &bytes[HEADER_LEN..];
        if body.len() as u64 != len {
            return Err(Error::Corrupt(format!("body is {} bytes, header says {len}", body.len())));
        }
        if Sha256::digest(body).as_slice() != &bytes[13..HEADER_LEN] {
            return Err(Error::Corrupt("checksum mismatch".into()));
        }
        Ok(serde_json::from_slice(body)?)
    }
}

/// Writes atomically: a sibling temp file renamed over `path`.
pub fn save_workspace(w: &Workspace, path: &Path) -> Result<()> {
    let bytes = w.to_bytes()?;
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn load_workspace(path: &Path) -> Result<Workspace> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Workspace::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GeoPoint;

    fn tiny() -> Workspace {
        Workspace {
            config: Config::default(),
            projection: Projection::new(GeoPoint { lat: -22.9, lon: -43.2 }),
            layers: vec![LayerDataset::empty(LayerId::Favelas), LayerDataset::empty(LayerId::Crime)],
            stations: vec![],
            streets: vec![vec![GeoPoint { lat: -22.9, lon: -43.2 }, GeoPoint { lat: -22.9001, lon: -43.2 }]],
            warnings: vec![],
            graph: None,
            trips: None,
            model: None,
            analytics: None,
        }
    }

    #[test]
    fn bytes_round_trip() {
        let w = tiny();
        let b = w.to_bytes().unwrap();
        assert_eq!(&b[..4], b"ULWS");
        let back = Workspace::from_bytes(&b).unwrap();
        assert_eq!(back.to_bytes().unwrap(), b);
    }

    #[test]
    fn corruption_is_detected() {
        let b = tiny().to_bytes().unwrap();
        assert!(matches!(Workspace::from_bytes(&b[..b.len() - 3]), Err(Error::Corrupt(_))));
        assert!(matches!(Workspace::from_bytes(&b[..20]), Err(Error::Corrupt(_))));
        let mut flipped = b.clone();
        *flipped.last_mut().unwrap() ^= 1;
        assert!(matches!(Workspace::from_bytes(&flipped), Err(Error::Corrupt(_))));
        let mut v = b.clone();
        v[4] = 9;
        assert!(matches!(Workspace::from_bytes(&v), Err(Error::VersionMismatch { found: 9, expected: 1 })));
        assert!(matches!(Workspace::from_bytes(b"nope"), Err(Error::Corrupt(_))));
    }

    #[test]
    fn layers_stay_in_roster_order() {
        let mut w = tiny();
        w.set_layer(LayerDataset::empty(LayerId::Weather));
        w.set_layer(LayerDataset::empty(LayerId::Crime));
        let ids: Vec<u8> = w.layers.iter().map(|l| l.id.number()).collect();
        assert_eq!(ids, vec![1, 3, 5]);
    }
}
