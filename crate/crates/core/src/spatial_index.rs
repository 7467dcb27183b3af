//! Point quadtree with exact k-nearest-neighbor search, and the
//! density-adaptive spatial lens built on top of it.
//!
//! The lens keeps the number of highlighted points fixed and lets the
//! brush radius float: it is the distance from the cursor to the k-th
//! nearest point, so it shrinks over dense areas and grows over sparse ones.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::geo::{GeoPoint, ProjectedPoint, Projection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadTreeConfig {
    /// Maximum items in a leaf before it splits.
    pub leaf_capacity: usize,
    /// Leaves at this depth never split, whatever their size.
    pub max_depth: usize,
}

impl Default for QuadTreeConfig {
    fn default() -> Self {
        QuadTreeConfig {
            leaf_capacity: 16,
            max_depth: 24,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Rect {
    min: ProjectedPoint,
    max: ProjectedPoint,
}

impl Rect {
    fn contains(&self, p: &ProjectedPoint) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    /// Squared distance from `p` to the closest point of the rectangle.
    fn min_dist2(&self, p: &ProjectedPoint) -> f64 {
        let dx = (self.min.x - p.x).max(0.0).max(p.x - self.max.x);
        let dy = (self.min.y - p.y).max(0.0).max(p.y - self.max.y);
        dx * dx + dy * dy
    }

    fn center(&self) -> ProjectedPoint {
        ProjectedPoint::new((self.min.x + self.max.x) / 2.0, (self.min.y + self.max.y) / 2.0)
    }

    /// Quadrant order: SW, SE, NW, NE.
    fn quadrant(&self, i: usize) -> Rect {
        let c = self.center();
        let (min_x, max_x) = if i & 1 == 0 { (self.min.x, c.x) } else { (c.x, self.max.x) };
        let (min_y, max_y) = if i & 2 == 0 { (self.min.y, c.y) } else { (c.y, self.max.y) };
        Rect {
            min: ProjectedPoint::new(min_x, min_y),
            max: ProjectedPoint::new(max_x, max_y),
        }
    }

    fn quadrant_of(&self, p: &ProjectedPoint) -> usize {
        let c = self.center();
        usize::from(p.x >= c.x) | (usize::from(p.y >= c.y) << 1)
    }
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf(Vec<u32>),
    Internal([u32; 4]),
}

#[derive(Debug, Clone)]
struct Node {
    rect: Rect,
    depth: usize,
    kind: NodeKind,
}

/// Immutable point quadtree over `(ProjectedPoint, item id)` pairs.
#[derive(Debug, Clone)]
pub struct QuadTree {
    nodes: Vec<Node>,
    points: Vec<ProjectedPoint>,
    ids: Vec<usize>,
    config: QuadTreeConfig,
}

/// Answer of a k-nearest query: member ids by ascending distance (ties by
/// ascending id) and the distance to the last member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LensResult {
    pub members: Vec<usize>,
    pub radius: f64,
}

impl LensResult {
    pub fn empty() -> Self {
        LensResult {
            members: Vec::new(),
            radius: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    dist2: f64,
    id: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist2.total_cmp(&other.dist2).then(self.id.cmp(&other.id))
    }
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    dist2: f64,
    node: u32,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    // reversed: BinaryHeap pops the closest node first
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist2.total_cmp(&self.dist2).then(other.node.cmp(&self.node))
    }
}

impl QuadTree {
    pub fn build(items: impl IntoIterator<Item = (ProjectedPoint, usize)>, config: QuadTreeConfig) -> Self {
        let config = QuadTreeConfig {
            leaf_capacity: config.leaf_capacity.max(1),
            ..config
        };
        let (points, ids): (Vec<_>, Vec<_>) = items.into_iter().unzip();
        let rect = bounding_square(&points);
        let mut tree = QuadTree {
            nodes: vec![Node {
                rect,
                depth: 0,
                kind: NodeKind::Leaf(Vec::new()),
            }],
            points,
            ids,
            config,
        };
        for i in 0..tree.points.len() {
            tree.insert(i as u32);
        }
        tree
    }

    fn insert(&mut self, item: u32) {
        let p = self.points[item as usize];
        let mut at = 0usize;
        loop {
            let rect = self.nodes[at].rect;
            match &mut self.nodes[at].kind {
                NodeKind::Internal(children) => {
                    at = children[rect.quadrant_of(&p)] as usize;
                }
                NodeKind::Leaf(items) => {
                    items.push(item);
                    if items.len() > self.config.leaf_capacity && self.nodes[at].depth < self.config.max_depth {
                        self.split(at);
                    }
                    return;
                }
            }
        }
    }

    fn split(&mut self, at: usize) {
        let NodeKind::Leaf(items) = std::mem::replace(&mut self.nodes[at].kind, NodeKind::Internal([0; 4])) else {
            unreachable!("split called on an internal node");
        };
        let rect = self.nodes[at].rect;
        let depth = self.nodes[at].depth + 1;
        let base = self.nodes.len() as u32;
        for q in 0..4 {
            self.nodes.push(Node {
                rect: rect.quadrant(q),
                depth,
                kind: NodeKind::Leaf(Vec::new()),
            });
        }
        self.nodes[at].kind = NodeKind::Internal([base, base + 1, base + 2, base + 3]);
        for item in items {
            let q = rect.quadrant_of(&self.points[item as usize]);
            if let NodeKind::Leaf(v) = &mut self.nodes[base as usize + q].kind {
                v.push(item);
            }
        }
        // a child may itself overflow when points cluster in one quadrant
        for child in base as usize..base as usize + 4 {
            let overflow = matches!(&self.nodes[child].kind, NodeKind::Leaf(v) if v.len() > self.config.leaf_capacity);
            if overflow && depth < self.config.max_depth {
                self.split(child);
            }
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn config(&self) -> QuadTreeConfig {
        self.config
    }

    /// Exact k nearest neighbors of `q`.
    pub fn knn(&self, q: &ProjectedPoint, k: usize) -> LensResult {
        if k == 0 || self.is_empty() {
            return LensResult::empty();
        }
        let k = k.min(self.len());
        let mut best: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        let mut frontier = BinaryHeap::new();
        frontier.push(Pending {
            dist2: self.nodes[0].rect.min_dist2(q),
            node: 0,
        });
        while let Some(Pending { dist2, node }) = frontier.pop() {
            if best.len() == k && dist2 > best.peek().map_or(f64::INFINITY, |c| c.dist2) {
                break;
            }
            match &self.nodes[node as usize].kind {
                NodeKind::Internal(children) => {
                    for &c in children {
                        let d = self.nodes[c as usize].rect.min_dist2(q);
                        frontier.push(Pending { dist2: d, node: c });
                    }
                }
                NodeKind::Leaf(items) => {
                    for &i in items {
                        let cand = Candidate {
                            dist2: self.points[i as usize].dist2(q),
                            id: self.ids[i as usize],
                        };
                        if best.len() < k {
                            best.push(cand);
                        } else if cand < *best.peek().expect("heap is full") {
                            best.pop();
                            best.push(cand);
                        }
                    }
                }
            }
        }
        let sorted = best.into_sorted_vec();
        let radius = sorted.last().map_or(0.0, |c| c.dist2.sqrt());
        LensResult {
            members: sorted.into_iter().map(|c| c.id).collect(),
            radius,
        }
    }

    /// Ids of all items with distance to `q` at most `radius` (inclusive),
    /// sorted by id.
    pub fn within_radius(&self, q: &ProjectedPoint, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let mut out = Vec::new();
        if self.is_empty() {
            return out;
        }
        let mut stack = vec![0u32];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n as usize];
            if node.rect.min_dist2(q) > r2 {
                continue;
            }
            match &node.kind {
                NodeKind::Internal(children) => stack.extend_from_slice(children),
                NodeKind::Leaf(items) => out.extend(
                    items
                        .iter()
                        .filter(|&&i| self.points[i as usize].dist2(q) <= r2)
                        .map(|&i| self.ids[i as usize]),
                ),
            }
        }
        out.sort_unstable();
        out
    }

    /// Item counts of every leaf.
    pub fn leaf_sizes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes.iter().filter_map(|n| match &n.kind {
            NodeKind::Leaf(items) => Some((items.len(), n.depth)),
            NodeKind::Internal(_) => None,
        })
    }

    /// Checks the structural invariants: each item inside its leaf's box,
    /// internal nodes with four children, leaves within capacity unless at
    /// max depth, and every item stored exactly once.
    pub fn check_invariants(&self) -> bool {
        let mut seen = vec![false; self.points.len()];
        for node in &self.nodes {
            if let NodeKind::Leaf(items) = &node.kind {
                if items.len() > self.config.leaf_capacity && node.depth < self.config.max_depth {
                    return false;
                }
                for &i in items {
                    if !node.rect.contains(&self.points[i as usize]) || std::mem::replace(&mut seen[i as usize], true) {
                        return false;
                    }
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

fn bounding_square(points: &[ProjectedPoint]) -> Rect {
    if points.is_empty() {
        return Rect {
            min: ProjectedPoint::new(-1.0, -1.0),
            max: ProjectedPoint::new(1.0, 1.0),
        };
    }
    let (mut min_x, mut min_y, mut max_x, mut max_y) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        min_x = min_x.min(p.x);
        min_y = min_y.min(p.y);
        max_x = max_x.max(p.x);
        max_y = max_y.max(p.y);
    }
    let half = ((max_x - min_x).max(max_y - min_y) / 2.0).max(1.0) * (1.0 + 1e-9) + 1e-9;
    let (cx, cy) = ((min_x + max_x) / 2.0, (min_y + max_y) / 2.0);
    Rect {
        min: ProjectedPoint::new(cx - half, cy - half),
        max: ProjectedPoint::new(cx + half, cy + half),
    }
}

/// Quadtree over geolocated points with the projection it was built in.
#[derive(Debug, Clone)]
pub struct GeoIndex {
    projection: Projection,
    tree: QuadTree,
}

impl GeoIndex {
    pub fn build(points: impl IntoIterator<Item = (GeoPoint, usize)>, origin: GeoPoint, config: QuadTreeConfig) -> Self {
        let projection = Projection::new(origin);
        let tree = QuadTree::build(points.into_iter().map(|(p, id)| (projection.project(p), id)), config);
        GeoIndex { projection, tree }
    }

    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    pub fn tree(&self) -> &QuadTree {
        &self.tree
    }

    pub fn len(&self) -> usize {
        self.tree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tree.is_empty()
    }

    pub fn knn(&self, q: &ProjectedPoint, k: usize) -> LensResult {
        self.tree.knn(q, k)
    }

    /// Brush query at a map cursor; `radius` is the brush radius in meters.
    pub fn lens(&self, cursor: GeoPoint, k: usize) -> LensResult {
        self.tree.knn(&self.projection.project(cursor), k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(points: &[ProjectedPoint], q: &ProjectedPoint, k: usize) -> LensResult {
        let mut all: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| (p.dist2(q), i)).collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        all.truncate(k);
        LensResult {
            radius: all.last().map_or(0.0, |c| c.0.sqrt()),
            members: all.into_iter().map(|c| c.1).collect(),
        }
    }

    #[test]
    fn empty_index_answers_empty() {
        let t = QuadTree::build(std::iter::empty(), QuadTreeConfig::default());
        assert_eq!(t.knn(&ProjectedPoint::new(3.0, 4.0), 5), LensResult::empty());
        assert!(t.within_radius(&ProjectedPoint::default(), 1e9).is_empty());
    }

    #[test]
    fn single_point_always_found() {
        let t = QuadTree::build([(ProjectedPoint::new(10.0, -5.0), 42)], QuadTreeConfig::default());
        for q in [ProjectedPoint::new(0.0, 0.0), ProjectedPoint::new(1e6, -1e6)] {
            let r = t.knn(&q, 1);
            assert_eq!(r.members, vec![42]);
        }
        let at = t.knn(&ProjectedPoint::new(10.0, -5.0), 1);
        assert_eq!(at.radius, 0.0);
    }

    #[test]
    fn k_zero_and_k_larger_than_n() {
        let pts: Vec<_> = (0..5).map(|i| ProjectedPoint::new(i as f64, 0.0)).collect();
        let t = QuadTree::build(pts.iter().copied().zip(0..), QuadTreeConfig::default());
        assert_eq!(t.knn(&ProjectedPoint::default(), 0), LensResult::empty());
        let all = t.knn(&ProjectedPoint::default(), 99);
        assert_eq!(all.members, vec![0, 1, 2, 3, 4]);
        assert_eq!(all.radius, 4.0);
    }

    #[test]
    fn ties_break_by_ascending_id() {
        // four points at distance 1, inserted in scrambled id order
        let items = [
            (ProjectedPoint::new(0.0, 1.0), 9),
            (ProjectedPoint::new(1.0, 0.0), 2),
            (ProjectedPoint::new(0.0, -1.0), 5),
            (ProjectedPoint::new(-1.0, 0.0), 7),
        ];
        let t = QuadTree::build(items, QuadTreeConfig { leaf_capacity: 1, max_depth: 24 });
        let r = t.knn(&ProjectedPoint::default(), 3);
        assert_eq!(r.members, vec![2, 5, 7]);
        assert_eq!(r.radius, 1.0);
    }

    #[test]
    fn duplicate_points_stop_at_max_depth() {
        let items = (0..100).map(|i| (ProjectedPoint::new(1.0, 1.0), i));
        let t = QuadTree::build(items, QuadTreeConfig { leaf_capacity: 4, max_depth: 6 });
        assert!(t.check_invariants());
        assert_eq!(t.knn(&ProjectedPoint::default(), 10).members, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn matches_brute_force_with_small_leaves() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<_> = (0..500)
            .map(|_| ProjectedPoint::new(rng.gen_range(0.0..1000.0), rng.gen_range(0.0..1000.0)))
            .collect();
        let t = QuadTree::build(pts.iter().copied().zip(0..), QuadTreeConfig { leaf_capacity: 2, max_depth: 24 });
        assert!(t.check_invariants());
        for _ in 0..50 {
            let q = ProjectedPoint::new(rng.gen_range(-100.0..1100.0), rng.gen_range(-100.0..1100.0));
            for k in [1, 7, 64] {
                assert_eq!(t.knn(&q, k), brute(&pts, &q, k));
            }
            let r = rng.gen_range(0.0..200.0);
            let mut expect: Vec<usize> = (0..pts.len()).filter(|&i| pts[i].dist2(&q) <= r * r).collect();
            expect.sort_unstable();
            assert_eq!(t.within_radius(&q, r), expect);
        }
    }
}
