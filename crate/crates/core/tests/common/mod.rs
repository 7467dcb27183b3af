#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urbanlens::config::Config;
use urbanlens::geo::ProjectedPoint;
use urbanlens::pipeline;
use urbanlens::spatial_index::LensResult;
use urbanlens::store::Workspace;
use urbanlens::synthetic::{generate, CityParams};

pub fn uniform_points(n: usize, seed: u64, half_extent: f64) -> Vec<ProjectedPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| ProjectedPoint::new(rng.gen_range(-half_extent..half_extent), rng.gen_range(-half_extent..half_extent)))
        .collect()
}

/// Full sort by (squared distance, id).
pub fn brute_knn(points: &[ProjectedPoint], q: &ProjectedPoint, k: usize) -> LensResult {
    let mut all: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, p)| (p.dist2(q), i)).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.truncate(k);
    LensResult {
        radius: all.last().map_or(0.0, |c| c.0.sqrt()),
        members: all.into_iter().map(|c| c.1).collect(),
    }
}

/// Config for the synthetic city with inputs written under `dir`.
pub fn city_config(dir: &std::path::Path, trips: usize) -> Config {
    generate(&CityParams::default()).write_inputs(&dir.join("data")).unwrap();
    let mut c = Config::default();
    c.paths.data_dir = dir.join("data");
    c.paths.workspace = dir.join("workspace.ulw");
    c.paths.export_dir = dir.join("export");
    c.trips.count = trips;
    c.analytics.shapley_sample = 40;
    c.analytics.shapley_method = urbanlens::analytics::ShapleyMethod::MonteCarlo { permutations: 16 };
    c
}

/// Every stage run on a fresh synthetic city.
pub fn full_workspace(trips: usize) -> (tempfile::TempDir, Workspace) {
    let dir = tempfile::tempdir().unwrap();
    let config = city_config(dir.path(), trips);
    let ws = pipeline::run_all(&config).unwrap();
    (dir, ws)
}

/// Ingested and built synthetic city (graph, classes, hotspots).
pub fn built_workspace(trips: usize) -> (tempfile::TempDir, Workspace) {
    let dir = tempfile::tempdir().unwrap();
    let config = city_config(dir.path(), trips);
    let mut ws = pipeline::ingest(&config).unwrap();
    pipeline::build(&mut ws).unwrap();
    (dir, ws)
}

/// Index of the nearest point, ties to the lowest index.
pub fn brute_nearest(points: &[ProjectedPoint], q: &ProjectedPoint) -> usize {
    (0..points.len())
        .min_by(|&a, &b| points[a].dist2(q).total_cmp(&points[b].dist2(q)).then(a.cmp(&b)))
        .unwrap()
}

/// Axis-aligned bounds of every vertex in projected space.
pub fn rect_of(rings: &[Vec<urbanlens::geo::GeoPoint>], proj: &urbanlens::geo::Projection) -> [f64; 4] {
    let mut r = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for p in rings.iter().flatten().map(|g| proj.project(*g)) {
        r = [r[0].min(p.x), r[1].min(p.y), r[2].max(p.x), r[3].max(p.y)];
    }
    r
}

/// Distance from `p` to a filled rectangle.
pub fn rect_distance(r: &[f64; 4], p: &ProjectedPoint) -> f64 {
    let dx = (r[0] - p.x).max(0.0).max(p.x - r[2]);
    let dy = (r[1] - p.y).max(0.0).max(p.y - r[3]);
    dx.hypot(dy)
}
