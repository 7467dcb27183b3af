//! Pipeline configuration, read from TOML. Every field has a default so a
//! config file only needs to name what it changes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analytics::ShapleyMethod;
use crate::crime_sim::{HotspotParams, TripSynthesisParams};
use crate::error::{Error, Result};
use crate::prediction::GbtParams;
use crate::spatial_index::QuadTreeConfig;
use crate::street_graph::AggregationRadii;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub paths: PathsConfig,
    pub projection: ProjectionConfig,
    pub index: QuadTreeConfig,
    pub graph: GraphConfig,
    pub aggregation: AggregationRadii,
    pub hotspots: HotspotConfig,
    pub trips: TripSynthesisParams,
    pub training: TrainingConfig,
    pub grid: GridConfig,
    pub analytics: AnalyticsConfig,
    pub server: ServerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    /// Directory holding the input files; relative paths resolve against
    /// the config file's directory.
    pub data_dir: PathBuf,
    pub workspace: PathBuf,
    pub export_dir: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            data_dir: "data".into(),
            workspace: "workspace.ulw".into(),
            export_dir: "export".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectionConfig {
    /// Overrides the dataset-centroid origin when both are set.
    pub origin_lat: Option<f64>,
    pub origin_lon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphConfig {
    pub near_dead_end_m: f64,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig { near_dead_end_m: 100.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HotspotConfig {
    /// Year whose 12 months form the activity series; `None` pools years.
    pub year: Option<i32>,
    pub threshold: f64,
    pub min_count: usize,
    pub pseudo_count: f64,
}

impl Default for HotspotConfig {
    fn default() -> Self {
        let p = HotspotParams::default();
        HotspotConfig {
            year: None,
            threshold: p.threshold,
            min_count: p.min_count,
            pseudo_count: p.pseudo_count,
        }
    }
}

impl HotspotConfig {
    pub fn params(&self) -> HotspotParams {
        HotspotParams {
            threshold: self.threshold,
            min_count: self.min_count,
            pseudo_count: self.pseudo_count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub gbt: GbtParams,
    /// Held-out share of each class for evaluation and the grid.
    pub test_fraction: f64,
    pub split_seed: u64,
    pub undersample_seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            gbt: GbtParams::default(),
            test_fraction: 0.2,
            split_seed: 7,
            undersample_seed: 11,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub cell_size_m: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { cell_size_m: 500.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyticsConfig {
    /// Trips in the Shapley evaluation sample.
    pub shapley_sample: usize,
    pub shapley_method: ShapleyMethod,
    pub seed: u64,
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        AnalyticsConfig {
            shapley_sample: 1000,
            shapley_method: ShapleyMethod::MonteCarlo { permutations: 64 },
            seed: 17,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServerConfig {
    pub bind: String,
    pub port: u16,
    /// Value of `Access-Control-Allow-Origin`.
    pub cors_origin: String,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: "127.0.0.1".into(),
            port: 8080,
            cors_origin: "*".into(),
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `path` and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut c = Config::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut c.paths.data_dir, &mut c.paths.workspace, &mut c.paths.export_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_owned()));
        if self.projection.origin_lat.is_some() != self.projection.origin_lon.is_some() {
            return bad("projection: set both origin_lat and origin_lon or neither");
        }
        if self.index.leaf_capacity == 0 {
            return bad("index.leaf_capacity must be positive");
        }
        let r = &self.aggregation;
        if [r.transport_m, r.favela_m, r.tract_boundary_eps_m, r.station_snap_m, self.graph.near_dead_end_m]
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return bad("radii must be finite and non-negative");
        }
        if !(0.0..=1.0).contains(&self.hotspots.threshold) || !(self.hotspots.pseudo_count >= 0.0) {
            return bad("hotspots.threshold must be in [0, 1] and pseudo_count >= 0");
        }
        if !(self.training.test_fraction > 0.0 && self.training.test_fraction < 1.0) {
            return bad("training.test_fraction must be in (0, 1)");
        }
        if !(self.grid.cell_size_m > 0.0) {
            return bad("grid.cell_size_m must be positive");
        }
        if self.analytics.shapley_sample == 0 {
            return bad("analytics.shapley_sample must be positive");
        }
        Ok(())
    }
}
