//! Street graph: corners as nodes, street segments as undirected edges with
//! metric length. Every thematic layer is attributed to these nodes.

mod aggregate;
mod features;

pub use aggregate::{
    aggregate_all, census_assign, favela_flag, idw_weather, radius_count, AggregationInputs, AggregationRadii, FacilityIndex,
    PlanarTract, StationSite,
};
pub use features::{NodeFeatures, ThematicLayer, FEATURE_NAMES, NODE_FEATURE_COUNT};

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, ProjectedPoint, Projection};
use crate::spatial_index::{QuadTree, QuadTreeConfig};

/// Ordered coordinate list of one street.
pub type Polyline = Vec<GeoPoint>;

/// Vertices closer than this collapse into one corner.
pub const SNAP_TOLERANCE_M: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeClass {
    DeadEnd,
    NearDeadEnd,
    Regular,
}

impl NodeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeClass::DeadEnd => "dead_end",
            NodeClass::NearDeadEnd => "near_dead_end",
            NodeClass::Regular => "regular",
        }
    }

    pub fn one_hot(self) -> [f64; 3] {
        match self {
            NodeClass::DeadEnd => [1.0, 0.0, 0.0],
            NodeClass::NearDeadEnd => [0.0, 1.0, 0.0],
            NodeClass::Regular => [0.0, 0.0, 1.0],
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GraphData {
    projection: Projection,
    nodes: Vec<GeoPoint>,
    edges: Vec<Edge>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "GraphData", into = "GraphData")]
pub struct StreetGraph {
    projection: Projection,
    nodes: Vec<GeoPoint>,
    positions: Vec<ProjectedPoint>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
    index: QuadTree,
}

impl From<StreetGraph> for GraphData {
    fn from(g: StreetGraph) -> Self {
        GraphData {
            projection: g.projection,
            nodes: g.nodes,
            edges: g.edges,
        }
    }
}

impl TryFrom<GraphData> for StreetGraph {
    type Error = Error;
    fn try_from(d: GraphData) -> Result<Self> {
        StreetGraph::from_parts(d.projection, d.nodes, d.edges)
    }
}

impl StreetGraph {
    /// Assembles a graph from explicit nodes and edges. Edge lengths are
    /// recomputed from the node positions.
    pub fn from_parts(projection: Projection, nodes: Vec<GeoPoint>, edges: Vec<Edge>) -> Result<Self> {
        let positions: Vec<_> = nodes.iter().map(|p| projection.project(*p)).collect();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        let mut clean = Vec::with_capacity(edges.len());
        for e in edges {
            if e.a >= nodes.len() || e.b >= nodes.len() {
                return Err(Error::InvalidArgument(format!("edge ({}, {}) references a missing node", e.a, e.b)));
            }
            if e.a == e.b {
                return Err(Error::InvalidArgument(format!("self-loop at node {}", e.a)));
            }
            let length = positions[e.a].dist(&positions[e.b]);
            adjacency[e.a].push((e.b, length));
            adjacency[e.b].push((e.a, length));
            clean.push(Edge { a: e.a, b: e.b, length });
        }
        let index = QuadTree::build(positions.iter().copied().zip(0..), QuadTreeConfig::default());
        Ok(StreetGraph {
            projection,
            nodes,
            positions,
            edges: clean,
            adjacency,
            index,
        })
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[GeoPoint] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> GeoPoint {
        self.nodes[id]
    }

    pub fn position(&self, id: usize) -> ProjectedPoint {
        self.positions[id]
    }

    pub fn positions(&self) -> &[ProjectedPoint] {
        &self.positions
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, id: usize) -> &[(usize, f64)] {
        &self.adjacency[id]
    }

    pub fn degree(&self, id: usize) -> usize {
        self.adjacency[id].len()
    }

    /// Quadtree over node positions (item id = node id).
    pub fn node_index(&self) -> &QuadTree {
        &self.index
    }

    /// Node closest to `p`; ties resolve to the lowest node id.
    pub fn nearest_corner(&self, p: GeoPoint) -> usize {
        self.nearest_corner_projected(&self.projection.project(p))
    }

    pub fn nearest_corner_projected(&self, p: &ProjectedPoint) -> usize {
        self.index.knn(p, 1).members[0]
    }
}

/// Builds the graph from street polylines. Every vertex becomes a corner
/// (vertices within [`SNAP_TOLERANCE_M`] merge) and every segment an edge.
/// Repeated segments and segments collapsing to a point are dropped.
pub fn build_graph(streets: &[Polyline], projection: Option<Projection>) -> Result<StreetGraph> {
    let vertex_count: usize = streets.iter().map(Vec::len).sum();
    if streets.iter().all(|s| s.len() < 2) {
        return Err(Error::EmptyStreetNetwork);
    }
    let projection = match projection {
        Some(p) => p,
        None => Projection::centered_on(streets.iter().flatten()).ok_or(Error::EmptyStreetNetwork)?,
    };

    let mut nodes: Vec<GeoPoint> = Vec::with_capacity(vertex_count);
    let mut positions: Vec<ProjectedPoint> = Vec::with_capacity(vertex_count);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let cell = |p: &ProjectedPoint| ((p.x / SNAP_TOLERANCE_M).floor() as i64, (p.y / SNAP_TOLERANCE_M).floor() as i64);

    let mut snap = |g: GeoPoint| -> usize {
        let p = projection.project(g);
        let (cx, cy) = cell(&p);
        let mut best: Option<(f64, usize)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for &id in grid.get(&(cx + dx, cy + dy)).into_iter().flatten() {
                    let d = positions[id].dist(&p);
                    if d <= SNAP_TOLERANCE_M && best.is_none_or(|(bd, bid)| (d, id) < (bd, bid)) {
                        best = Some((d, id));
                    }
                }
            }
        }
        if let Some((_, id)) = best {
            return id;
        }
        let id = nodes.len();
        nodes.push(g);
        positions.push(p);
        grid.entry((cx, cy)).or_default().push(id);
        id
    };

    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for line in streets.iter().filter(|l| l.len() >= 2) {
        let ids: Vec<usize> = line.iter().map(|&g| snap(g)).collect();
        for w in ids.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a != b && seen.insert((a.min(b), a.max(b))) {
                edges.push(Edge { a, b, length: 0.0 });
            }
        }
    }
    StreetGraph::from_parts(projection, nodes, edges)
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Reach {
    dist: f64,
    node: usize,
}

impl Eq for Reach {}
impl PartialOrd for Reach {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Reach {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then(other.node.cmp(&self.node))
    }
}

/// Multi-source Dijkstra: shortest path length from any source to each node.
pub fn distance_to_nearest(g: &StreetGraph, sources: impl IntoIterator<Item = usize>) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.node_count()];
    let mut heap = BinaryHeap::new();
    for s in sources {
        dist[s] = 0.0;
        heap.push(Reach { dist: 0.0, node: s });
    }
    while let Some(Reach { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, len) in g.neighbors(node) {
            let nd = d + len;
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(Reach { dist: nd, node: next });
            }
        }
    }
    dist
}

/// Dead end: degree-1 corner or a neighbor of one. Near dead end: within
/// `near_radius_m` of a dead end along the street network (inclusive).
pub fn classify_nodes(g: &StreetGraph, near_radius_m: f64) -> Vec<NodeClass> {
    let n = g.node_count();
    let mut dead = vec![false; n];
    for v in (0..n).filter(|&v| g.degree(v) == 1) {
        dead[v] = true;
        for &(u, _) in g.neighbors(v) {
            dead[u] = true;
        }
    }
    let dist = distance_to_nearest(g, (0..n).filter(|&v| dead[v]));
    (0..n)
        .map(|v| {
            if dead[v] {
                NodeClass::DeadEnd
            } else if dist[v] <= near_radius_m {
                NodeClass::NearDeadEnd
            } else {
                NodeClass::Regular
            }
        })
        .collect()
}
