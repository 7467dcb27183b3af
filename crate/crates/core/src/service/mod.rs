//! HTTP/JSON API over an immutable workspace.
//!
//! [`Api::handle`] is a pure function from request to response bytes; the
//! axum server in [`serve`] only adapts it to HTTP. That keeps the API
//! stateless and lets tests compare responses byte for byte.

mod http;

pub use http::{router, serve};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Error;
use crate::geo::{GeoBBox, GeoPoint, Projection};
use crate::layers::{GeometryKind, LayerDataset, LayerId};
use crate::spatial_index::GeoIndex;
use crate::store::Workspace;
use crate::temporal_lens::{initial_window, make_histogram, resolve_target, step, Granularity, TargetSpec, TemporalHistogram, TemporalWindow};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    pub param: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApiResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

impl ApiResponse {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.body).expect("responses are JSON")
    }
}

struct Failure {
    status: u16,
    error: ApiError,
}

type Reply = Result<Value, Failure>;

fn fail(status: u16, code: &str, message: impl Into<String>, param: Option<&str>) -> Failure {
    Failure {
        status,
        error: ApiError {
            code: code.to_owned(),
            message: message.into(),
            param: param.map(str::to_owned),
        },
    }
}

fn bad_param(param: &str, message: impl Into<String>) -> Failure {
    fail(400, "invalid_parameter", message, Some(param))
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::StageMissing { .. } => fail(409, "stage_missing", msg, None),
            Error::UnsupportedLayer(_) => fail(422, "unsupported_layer", msg, Some("layer")),
            Error::Untimestamped(_) => fail(422, "untimestamped", msg, Some("layer")),
            Error::InvalidArgument(_) | Error::InvalidCoordinate { .. } => fail(400, "invalid_parameter", msg, None),
            _ => fail(500, "internal", msg, None),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDescriptor {
    pub id: u8,
    /// Toggle key, the digit "1".."9".
    pub key: String,
    pub slug: String,
    pub name: String,
    pub kind: GeometryKind,
    pub count: usize,
    pub icon: String,
    pub available: bool,
    pub timestamped: bool,
}

#[derive(Debug, Clone, Deserialize)]
struct WindowRequest {
    layer: String,
    granularity: Granularity,
    #[serde(flatten)]
    target: TargetSpec,
    current: Option<TemporalWindow>,
}

/// The CLI command that produces each layer.
fn producing_command(id: LayerId) -> (&'static str, &'static str) {
    match id {
        LayerId::Graph | LayerId::Hotspots => ("graph", "build"),
        LayerId::TaxiTrips => ("trips", "synth-trips"),
        LayerId::Prediction => ("model", "train"),
        _ => ("ingest", "ingest"),
    }
}

pub struct Api {
    ws: Workspace,
    indexes: BTreeMap<LayerId, GeoIndex>,
}

impl Api {
    /// Indexes every point and arc layer (arcs by origin).
    pub fn new(ws: Workspace) -> Self {
        let origin = ws.projection.origin;
        let indexes = ws
            .layers
            .iter()
            .filter(|l| l.kind != GeometryKind::Polygon)
            .map(|l| {
                let pts = l.records.iter().enumerate().filter_map(|(i, r)| r.geometry.anchor().map(|p| (p, i)));
                (l.id, GeoIndex::build(pts, origin, ws.config.index))
            })
            .collect();
        Api { ws, indexes }
    }

    pub fn workspace(&self) -> &Workspace {
        &self.ws
    }

    pub fn projection(&self) -> &Projection {
        &self.ws.projection
    }

    /// Serves one request. `target` is the path with optional query.
    pub fn handle(&self, method: &str, target: &str, body: &[u8]) -> ApiResponse {
        let (path, query) = target.split_once('?').unwrap_or((target, ""));
        let params: BTreeMap<String, String> = url::form_urlencoded::parse(query.as_bytes()).into_owned().collect();
        let segments: Vec<&str> = path.trim_end_matches('/').split('/').skip(1).collect();
        let reply = match (method, segments.as_slice()) {
            ("GET", ["api", "health"]) => Ok(json!({"status": "ok", "version": VERSION})),
            ("GET", ["api", "layers"]) => Ok(serde_json::to_value(self.layers()).expect("serializable")),
            ("GET", ["api", "layers", id, "features"]) => self.features(id, &params),
            ("GET", ["api", "lens", "spatial"]) => self.spatial_lens(&params),
            ("GET", ["api", "temporal", layer, "histogram"]) => self.histogram_reply(layer, &params),
            ("POST", ["api", "temporal", "window"]) => self.window(body),
            ("GET", ["api", "prediction", "grid"]) => self.grid(),
            ("GET", ["api", "analytics", "correlation"]) => self.ws.analytics_stage().map_err(Failure::from).map(|a| to_value(&a.correlation)),
            ("GET", ["api", "analytics", "shapley"]) => self.ws.analytics_stage().map_err(Failure::from).map(|a| to_value(&a.shapley)),
            ("GET", ["api", "graph", "nodes"]) => self.graph_nodes(&params),
            (_, ["api", ..]) if self.route_exists(&segments) => Err(fail(405, "method_not_allowed", format!("{method} not allowed on {path}"), None)),
            _ => Err(fail(404, "not_found", format!("no route for {path}"), None)),
        };
        match reply {
            Ok(v) => ApiResponse {
                status: 200,
                body: serde_json::to_vec(&v).expect("serializable"),
            },
            Err(f) => ApiResponse {
                status: f.status,
                body: serde_json::to_vec(&json!({"error": f.error})).expect("serializable"),
            },
        }
    }

    fn route_exists(&self, segments: &[&str]) -> bool {
        matches!(
            segments,
            ["api", "health"]
                | ["api", "layers"]
                | ["api", "layers", _, "features"]
                | ["api", "lens", "spatial"]
                | ["api", "temporal", _, "histogram"]
                | ["api", "temporal", "window"]
                | ["api", "prediction", "grid"]
                | ["api", "analytics", _]
                | ["api", "graph", "nodes"]
        )
    }

    pub fn layers(&self) -> Vec<LayerDescriptor> {
        LayerId::ALL
            .iter()
            .map(|&id| {
                let l = self.ws.layer(id);
                LayerDescriptor {
                    id: id.number(),
                    key: id.number().to_string(),
                    slug: id.slug().to_owned(),
                    name: id.name().to_owned(),
                    kind: id.geometry_kind(),
                    count: l.map_or(0, LayerDataset::len),
                    icon: id.icon().to_owned(),
                    available: l.is_some(),
                    timestamped: l.is_some_and(|l| !l.is_empty() && l.has_time()),
                }
            })
            .collect()
    }

    fn layer(&self, raw: &str, param: &str) -> Result<&LayerDataset, Failure> {
        let id: LayerId = raw
            .parse()
            .map_err(|_| fail(404, "not_found", format!("unknown layer `{raw}` (expected 1-9 or a layer slug)"), Some(param)))?;
        self.ws.layer(id).ok_or_else(|| {
            let (stage, command) = producing_command(id);
            Failure::from(Error::StageMissing { stage, command })
        })
    }

    fn features(&self, id: &str, params: &BTreeMap<String, String>) -> Reply {
        let layer = self.layer(id, "id")?;
        let bbox = bbox_param(params)?;
        let features: Vec<Value> = layer
            .records
            .iter()
            .enumerate()
            .filter(|(_, r)| bbox.is_none_or(|b| r.geometry.bbox().is_some_and(|rb| b.intersects(&rb))))
            .map(|(i, r)| {
                let mut v = json!({"id": i, "geometry": r.geometry, "attributes": r.attributes});
                if let Some(t) = r.time {
                    v["time"] = to_value(&t);
                }
                v
            })
            .collect();
        Ok(json!({
            "layer": layer.id.number(),
            "kind": layer.kind,
            "count": features.len(),
            "features": features,
        }))
    }

    fn spatial_lens(&self, params: &BTreeMap<String, String>) -> Reply {
        let raw = params.get("layer").ok_or_else(|| bad_param("layer", "missing `layer`"))?;
        let layer = self.layer(raw, "layer")?;
        let lon = num_param(params, "lon")?;
        let lat = num_param(params, "lat")?;
        let k: usize = params
            .get("k")
            .map_or(Ok(100), |s| s.parse().map_err(|_| bad_param("k", format!("`k` must be a non-negative integer, got `{s}`"))))?;
        let cursor = GeoPoint::new(lat, lon).map_err(|e| bad_param("lat", e.to_string()))?;
        let index = self
            .indexes
            .get(&layer.id)
            .ok_or_else(|| Failure::from(Error::UnsupportedLayer(layer.id.slug().to_owned())))?;
        let r = index.lens(cursor, k);
        Ok(json!({
            "layer": layer.id.number(),
            "k": k,
            "radius_m": r.radius,
            "members": r.members,
        }))
    }

    /// Histogram of a timestamped layer.
    pub fn histogram(&self, layer: &str, granularity: Granularity) -> Result<(LayerId, TemporalHistogram), ApiError> {
        self.histogram_inner(layer, granularity).map_err(|f| f.error)
    }

    fn histogram_inner(&self, raw: &str, granularity: Granularity) -> Result<(LayerId, TemporalHistogram), Failure> {
        let layer = self.layer(raw, "layer")?;
        if layer.is_empty() || !layer.has_time() {
            return Err(Error::Untimestamped(layer.id.slug().to_owned()).into());
        }
        let times = layer.records.iter().filter_map(|r| r.time.as_ref());
        let h = make_histogram(times, granularity).map_err(|e| bad_param("granularity", e.to_string()))?;
        Ok((layer.id, h))
    }

    fn histogram_reply(&self, layer: &str, params: &BTreeMap<String, String>) -> Reply {
        let g: Granularity = params
            .get("granularity")
            .map_or(Ok(Granularity::Month), |s| s.parse().map_err(|e: Error| bad_param("granularity", e.to_string())))?;
        let (id, h) = self.histogram_inner(layer, g)?;
        Ok(json!({
            "layer": id.number(),
            "granularity": g,
            "total": h.total(),
            "edges": h.edges,
            "counts": h.counts,
            "cumulative": h.cumulative,
        }))
    }

    fn window(&self, body: &[u8]) -> Reply {
        let req: WindowRequest = serde_json::from_slice(body).map_err(|e| bad_param("body", format!("invalid window request: {e}")))?;
        let (_, h) = self.histogram_inner(&req.layer, req.granularity)?;
        let target = resolve_target(&h, req.target).map_err(|e| bad_param("value", e.to_string()))?;
        let w = match req.current {
            Some(cur) if cur.target == target => step(&h, &cur).map_err(|e| bad_param("current", e.to_string()))?,
            _ => initial_window(&h, target),
        };
        let mut v = to_value(&w);
        v["count"] = json!(h.window_count(w.lo, w.hi));
        Ok(v)
    }

    fn grid(&self) -> Reply {
        let m = self.ws.model_stage()?;
        let g = &m.grid;
        Ok(json!({
            "cell_size_m": g.cell_size_m,
            "cols": g.cols,
            "rows": g.rows,
            "evaluated_trips": g.evaluated_trips,
            "evaluation": m.evaluation,
            "cells": g.cells(),
        }))
    }

    fn graph_nodes(&self, params: &BTreeMap<String, String>) -> Reply {
        let stage = self.ws.graph_stage()?;
        let bbox = bbox_param(params)?;
        let features = self.ws.trips.as_ref().map(|t| &t.node_features);
        let nodes: Vec<Value> = stage
            .graph
            .nodes()
            .iter()
            .enumerate()
            .filter(|(_, p)| bbox.is_none_or(|b| b.contains(p)))
            .map(|(i, p)| {
                let mut v = json!({
                    "id": i,
                    "lat": p.lat,
                    "lon": p.lon,
                    "class": stage.classes[i].as_str(),
                    "degree": stage.graph.degree(i),
                });
                if let Some(f) = features {
                    v["features"] = to_value(&f[i]);
                }
                v
            })
            .collect();
        Ok(json!({"count": nodes.len(), "nodes": nodes}))
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn num_param(params: &BTreeMap<String, String>, name: &str) -> Result<f64, Failure> {
    let raw = params.get(name).ok_or_else(|| bad_param(name, format!("missing `{name}`")))?;
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| bad_param(name, format!("`{name}` must be a number, got `{raw}`")))
}

/// `lon1,lat1,lon2,lat2` in any corner order.
pub fn parse_bbox(s: &str) -> crate::error::Result<GeoBBox> {
    let bad = || Error::InvalidArgument(format!("bbox must be lon1,lat1,lon2,lat2, got `{s}`"));
    let v: Vec<f64> = s.split(',').map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    if v.len() != 4 || v.iter().any(|x| !x.is_finite()) || v[1].abs() > 90.0 || v[3].abs() > 90.0 {
        return Err(bad());
    }
    Ok(GeoBBox::from_corners(v[0], v[1], v[2], v[3]))
}

fn bbox_param(params: &BTreeMap<String, String>) -> Result<Option<GeoBBox>, Failure> {
    params
        .get("bbox")
        .map(|b| parse_bbox(b).map_err(|e| bad_param("bbox", e.to_string())))
        .transpose()
}
