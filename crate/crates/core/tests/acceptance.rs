//! Acceptance gate: one line per criterion, non-zero exit if any fails.

#![allow(clippy::needless_range_loop)]

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{brute_knn, brute_nearest, uniform_points};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use urbanlens::analytics::{pearson_matrix, reduce_by_layer, shapley, ShapleyMethod};
use urbanlens::crime_sim::{synth_trips, TripLabel, TripRecord, TripSynthesisParams};
use urbanlens::domain::{tracts_from_layer, Climate, FacilityCategory, YearMonth};
use urbanlens::geo::{GeoPoint, PlanarPolygon, ProjectedPoint, Projection};
use urbanlens::layers::LayerId;
use urbanlens::pipeline::fit_and_evaluate;
use urbanlens::prediction::{train, Dataset, FnScorer, GbtParams, Scorer};
use urbanlens::service::Api;
use urbanlens::spatial_index::{GeoIndex, QuadTree, QuadTreeConfig};
use urbanlens::store::{load_workspace, save_workspace};
use urbanlens::street_graph::{build_graph, census_assign, favela_flag, idw_weather, radius_count, FacilityIndex, PlanarTract, StationSite};
use urbanlens::temporal_lens::{initial_window, step, Direction, TemporalHistogram};

fn knn_oracle() -> String {
    let mut worst = Duration::ZERO;
    for (n, seed) in [(1_000, 31), (10_000, 32)] {
        let pts = uniform_points(n, seed, 10_000.0);
        let tree = QuadTree::build(pts.iter().copied().zip(0..), QuadTreeConfig::default());
        let queries = uniform_points(200, seed + 1, 11_000.0);
        for q in &queries {
            for k in [1, 10, 100] {
                assert_eq!(tree.knn(q, k), brute_knn(&pts, q, k), "n = {n}, k = {k}");
            }
        }
        if n == 10_000 {
            for k in [1, 10, 100] {
                let start = Instant::now();
                for q in &queries {
                    std::hint::black_box(tree.knn(q, k));
                }
                worst = worst.max(start.elapsed() / queries.len() as u32);
            }
        }
    }
    assert!(worst < Duration::from_millis(1), "slowest mean query {worst:?}");
    format!("exact on 1k/10k points, k in {{1, 10, 100}}; mean query at 10k <= {worst:?}")
}

fn lens_adaptivity() -> String {
    let origin = GeoPoint { lat: -22.9, lon: -43.2 };
    let proj = Projection::new(origin);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pts: Vec<GeoPoint> = (0..1_000)
        .map(|_| proj.unproject(ProjectedPoint::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0))))
        .collect();
    pts.extend((0..1_000).map(|_| proj.unproject(ProjectedPoint::new(rng.gen_range(1_000.0..5_000.0), rng.gen_range(-2_000.0..2_000.0)))));
    let index = GeoIndex::build(pts.iter().copied().zip(0..), origin, QuadTreeConfig::default());
    let dense = index.lens(origin, 100).radius;
    let sparse = index.lens(proj.unproject(ProjectedPoint::new(3_000.0, 0.0)), 100).radius;
    assert!(dense < sparse, "dense {dense} vs sparse {sparse}");
    format!("k = 100 radius {dense:.1} m in the cluster, {sparse:.1} m in the sparse field")
}

fn temporal_trace() -> String {
    let h = TemporalHistogram::from_raw_counts(vec![5, 3, 2, 4]).unwrap();
    let mut w = initial_window(&h, 6);
    let mut frames = vec![w];
    for _ in 0..5 {
        w = step(&h, &w).unwrap();
        frames.push(w);
    }
    let spans: Vec<(usize, usize)> = frames.iter().map(|w| (w.lo, w.hi)).collect();
    assert_eq!(&spans[..3], &[(0, 1), (0, 2), (2, 3)]);
    assert_eq!(frames[2].direction, Direction::Forward);
    assert_eq!(frames[3].direction, Direction::Backward, "reversal after the last bin");
    assert!(frames.iter().all(|w| h.window_count(w.lo, w.hi) >= 6));
    format!("{spans:?}, reversal at frame 3, every frame >= 6")
}

fn square(x0: f64, y0: f64, side: f64) -> PlanarPolygon {
    PlanarPolygon {
        exterior: vec![
            ProjectedPoint::new(x0, y0),
            ProjectedPoint::new(x0 + side, y0),
            ProjectedPoint::new(x0 + side, y0 + side),
            ProjectedPoint::new(x0, y0 + side),
        ],
        holes: vec![],
    }
}

fn square_distance(x0: f64, y0: f64, side: f64, p: &ProjectedPoint) -> f64 {
    let dx = (x0 - p.x).max(0.0).max(p.x - (x0 + side));
    let dy = (y0 - p.y).max(0.0).max(p.y - (y0 + side));
    dx.hypot(dy)
}

fn aggregation_oracles() -> String {
    let origin = GeoPoint { lat: -22.9, lon: -43.2 };
    let proj = Projection::new(origin);
    let mut rng = ChaCha8Rng::seed_from_u64(44);

    // 30 x 30 street grid, 50 m blocks: 900 corners
    let at = |x: f64, y: f64| proj.unproject(ProjectedPoint::new(x, y));
    let mut streets = Vec::new();
    for i in 0..30 {
        let c = i as f64 * 50.0;
        streets.push((0..30).map(|j| at(c, j as f64 * 50.0)).collect());
        streets.push((0..30).map(|j| at(j as f64 * 50.0, c)).collect());
    }
    let g = build_graph(&streets, Some(proj)).unwrap();
    assert_eq!(g.node_count(), 900);
    let queries: Vec<ProjectedPoint> = (0..1_000).map(|_| ProjectedPoint::new(rng.gen_range(-100.0..1_550.0), rng.gen_range(-100.0..1_550.0))).collect();
    for q in &queries {
        assert_eq!(g.nearest_corner_projected(q), brute_nearest(g.positions(), q));
    }

    let facilities: Vec<(ProjectedPoint, FacilityCategory)> = (0..1_000)
        .map(|_| (ProjectedPoint::new(rng.gen_range(0.0..1_450.0), rng.gen_range(0.0..1_450.0)), FacilityCategory::ALL[rng.gen_range(0..4)]))
        .collect();
    let fi = FacilityIndex::new(&facilities);
    for v in 0..g.node_count() {
        let p = g.position(v);
        let mut want = [0usize; 4];
        for (f, c) in &facilities {
            if ((f.x - p.x).powi(2) + (f.y - p.y).powi(2)).sqrt() <= 200.0 {
                want[c.index()] += 1;
            }
        }
        assert_eq!(radius_count(&fi, &p, 200.0), want);
    }

    let favelas: Vec<(f64, f64, f64)> = (0..8).map(|_| (rng.gen_range(-500.0..1_500.0), rng.gen_range(-500.0..1_500.0), rng.gen_range(20.0..200.0))).collect();
    let polys: Vec<PlanarPolygon> = favelas.iter().map(|&(x, y, s)| square(x, y, s)).collect();
    for q in &queries {
        let want = favelas.iter().any(|&(x, y, s)| square_distance(x, y, s, q) <= 500.0);
        assert_eq!(favela_flag(q, &polys, 500.0), want);
    }

    // 4 x 4 tracts of 400 m; probe interiors, shared edges, corners and the outside
    let mut tracts = Vec::new();
    for r in 0..4 {
        for c in 0..4 {
            let mut ind = [0.0; 7];
            for (k, v) in ind.iter_mut().enumerate() {
                *v = rng.gen_range(0.0..1_000.0) + k as f64;
            }
            tracts.push((c as f64 * 400.0, r as f64 * 400.0, ind));
        }
    }
    let planar: Vec<PlanarTract> = tracts.iter().map(|&(x, y, ind)| PlanarTract { parts: vec![square(x, y, 400.0)], indicators: ind }).collect();
    let mut probes: Vec<ProjectedPoint> = queries.iter().take(500).copied().collect();
    probes.extend((0..=16).flat_map(|i| (0..=16).map(move |j| ProjectedPoint::new(i as f64 * 100.0, j as f64 * 100.0))));
    for p in &probes {
        let d: Vec<f64> = tracts.iter().map(|&(x, y, _)| square_distance(x, y, 400.0, p)).collect();
        let close: Vec<usize> = (0..16).filter(|&i| d[i] <= 1.0).collect();
        let chosen = if close.is_empty() { vec![(0..16).min_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap()] } else { close };
        let got = census_assign(p, &planar, 1.0).unwrap();
        for k in 0..7 {
            let want = chosen.iter().map(|&i| tracts[i].2[k]).sum::<f64>() / chosen.len() as f64;
            assert!((got[k] - want).abs() < 1e-9, "census at {p:?}");
        }
    }

    let month = YearMonth { year: 2019, month: 6 };
    let stations: Vec<StationSite> = (0..8)
        .map(|i| StationSite {
            id: format!("S{i}"),
            position: ProjectedPoint::new(rng.gen_range(-500.0..2_000.0), rng.gen_range(-500.0..2_000.0)),
            series: [(month, Climate { tmax_c: rng.gen_range(20.0..35.0), tmin_c: rng.gen_range(10.0..20.0), precip_mm: rng.gen_range(0.0..250.0) })].into(),
        })
        .collect();
    let mut worst: f64 = 0.0;
    for v in 0..g.node_count() {
        let p = g.position(v);
        let got = idw_weather(&p, &stations, month, 1.0).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for s in &stations {
            let d = ((s.position.x - p.x).powi(2) + (s.position.y - p.y).powi(2)).sqrt();
            num += s.series[&month].tmax_c / d;
            den += 1.0 / d;
        }
        worst = worst.max((got.tmax_c - num / den).abs());
    }
    assert!(worst < 1e-9, "IDW residual {worst}");
    format!("900 corners, 1000 facilities, 8 favelas, 16 tracts, 8 stations; IDW residual {worst:.1e}")
}

fn trip_synthesis() -> String {
    let (_dir, ws) = common::built_workspace(100);
    let stage = ws.graph_stage().unwrap();
    let g = &stage.graph;
    let tracts = tracts_from_layer(ws.layer(LayerId::Socioeconomic).unwrap()).unwrap();
    let hot: Vec<usize> = stage.hotspots.iter().filter(|h| h.is_hotspot).map(|h| h.node).collect();
    let params = TripSynthesisParams { count: 87_000, ..Default::default() };
    let start = Instant::now();
    let out = synth_trips(g, &tracts, &hot, &params).unwrap();
    let took = start.elapsed();
    assert!(took < Duration::from_secs(60), "took {took:?}");
    assert_eq!(out.trips.len(), 87_000);
    let share = out.occurrence_count() as f64 / 87_000.0;
    assert!((share * 91.0 - 1.0).abs() <= 0.3, "occurrence share {share}");
    let near = |v: usize| hot.iter().any(|&h| g.position(h).dist(&g.position(v)) <= 500.0);
    let unsound = out.trips.iter().filter(|t| t.label.is_occurrence() && !near(t.origin) && !near(t.destination)).count();
    assert_eq!(unsound, 0);
    format!("87000 trips in {took:.2?}; occurrence share 1:{:.1}; 0 unsound labels", 1.0 / share - 1.0)
}

fn pipeline_g_mean() -> String {
    let (_dir, ws) = common::full_workspace(20_000);
    let g = &ws.graph_stage().unwrap().graph;
    let eval = &ws.model_stage().unwrap().evaluation;
    assert!((1_500..=2_500).contains(&g.node_count()), "{} nodes", g.node_count());
    assert!(eval.g_mean >= 0.8, "held-out G-mean {}", eval.g_mean);

    let trips = ws.trip_stage().unwrap();
    let mut labels: Vec<TripLabel> = trips.synthesis.trips.iter().map(|t| t.label).collect();
    labels.shuffle(&mut ChaCha8Rng::seed_from_u64(1));
    let shuffled: Vec<TripRecord> = trips.synthesis.trips.iter().zip(labels).map(|(t, label)| TripRecord { label, ..*t }).collect();
    let control = fit_and_evaluate(&shuffled, &trips.node_features, g, &ws.config.training, ws.config.grid.cell_size_m).unwrap();
    assert!(control.evaluation.g_mean < 0.6, "shuffled control {}", control.evaluation.g_mean);
    format!(
        "{} nodes, 20000 trips: held-out G-mean {:.3}; shuffled control {:.3}",
        g.node_count(),
        eval.g_mean,
        control.evaluation.g_mean
    )
}

fn grid_conservation() -> String {
    let (_dir, ws) = common::full_workspace(5_000);
    let grid = &ws.model_stage().unwrap().grid;
    assert_eq!(grid.total(), 2 * grid.evaluated_trips as u64);

    // hand fixture: corners at x = 0, 400, 900 give cells 0, 0, 1
    let proj = Projection::new(GeoPoint { lat: -22.9, lon: -43.2 });
    let at = |x: f64| proj.unproject(ProjectedPoint::new(x, 0.0));
    let g = build_graph(&[vec![at(0.0), at(400.0), at(900.0)]], Some(proj)).unwrap();
    let [a, b, c] = [0.0, 400.0, 900.0].map(|x| g.nearest_corner(at(x)));
    let trip = |origin, destination, label| TripRecord {
        origin,
        destination,
        period: urbanlens::crime_sim::Period::Night,
        weekday: urbanlens::crime_sim::DayOfWeek::ALL[0],
        month: 1,
        label,
    };
    // an always-positive scorer: only the occurrence is a success
    let trips = [trip(a, c, TripLabel::Occurrence), trip(b, b, TripLabel::Regular), trip(c, b, TripLabel::Regular)];
    let nodes = vec![urbanlens::street_graph::NodeFeatures::default(); 3];
    let always_yes = FnScorer::new(52, |_: &[f64]| 1.0);
    let fixture = urbanlens::prediction::prediction_grid(&always_yes, &trips, &nodes, &g, 500.0).unwrap();
    assert_eq!((fixture.cols, fixture.rows), (2, 1));
    assert_eq!(fixture.success, vec![1, 1]);
    assert_eq!(fixture.failure, vec![3, 1]);
    assert_eq!(fixture.total(), 6);
    format!("pipeline grid {} = 2 x {}; hand fixture tallies match", 2 * grid.evaluated_trips, grid.evaluated_trips)
}

fn shapley_checks() -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for n in [3, 6, 10] {
        let rows: Vec<Vec<f64>> = (0..300).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let labels = rows.iter().map(|r| r[0] + r[1] * r[n - 1] > 0.0).collect();
        let model = train(&Dataset::new(rows.clone(), labels).unwrap(), &GbtParams { rounds: 20, max_depth: 3, ..Default::default() }).unwrap();
        let bg = vec![0.0; n];
        for x in rows.iter().take(10) {
            let phi = shapley(&model, x, &bg, ShapleyMethod::Exact, 0).unwrap();
            worst = worst.max((phi.iter().sum::<f64>() - (model.score(x) - model.score(&bg))).abs());
        }
        if n == 3 {
            for x in rows.iter().take(5) {
                let exact = shapley(&model, x, &bg, ShapleyMethod::Exact, 0).unwrap();
                let mc = shapley(&model, x, &bg, ShapleyMethod::MonteCarlo { permutations: 2_000 }, 4).unwrap();
                assert!(exact.iter().zip(&mc).all(|(e, m)| (e - m).abs() < 0.05), "{exact:?} vs {mc:?}");
            }
        }
    }
    assert!(worst < 1e-9, "efficiency residual {worst}");
    let w = [0.5, -2.0, 3.25, 0.0, 1.5];
    let linear = FnScorer::new(5, move |x: &[f64]| 0.75 + x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>());
    let (x, bg) = ([1.0, 2.0, -1.0, 7.0, 0.5], [0.2, -0.4, 0.1, 0.0, 0.5]);
    let phi = shapley(&linear, &x, &bg, ShapleyMethod::Exact, 0).unwrap();
    for i in 0..5 {
        assert!((phi[i] - w[i] * (x[i] - bg[i])).abs() < 1e-12, "feature {i}");
    }
    format!("efficiency residual {worst:.1e}; MC(2000) within 0.05; linear closed form")
}

fn correlation_checks() -> String {
    let (_dir, ws) = common::full_workspace(3_000);
    let report = &ws.analytics_stage().unwrap().correlation;
    let m = &report.full;
    assert_eq!(m.len(), 52);
    for i in 0..52 {
        assert_eq!(m[i][i], 1.0);
        for j in 0..52 {
            assert!((-1.0..=1.0).contains(&m[i][j]) && m[i][j] == m[j][i]);
        }
    }
    assert_eq!(report.reduced.len(), 8);
    assert!(report.reduced.iter().all(|r| r.len() == 8));

    // 4 features in 2 layers, textbook Pearson then block means by hand
    let rows = vec![vec![1.0, 2.0, 0.0, 5.0], vec![2.0, 1.0, 1.0, 3.0], vec![3.0, 4.0, 0.0, 4.0], vec![4.0, 3.0, 2.0, 0.0], vec![5.0, 6.0, 1.0, 1.0]];
    let col = |j: usize| rows.iter().map(|r| r[j]).collect::<Vec<f64>>();
    let r = |a: usize, b: usize| {
        let (x, y) = (col(a), col(b));
        let (mx, my) = (x.iter().sum::<f64>() / 5.0, y.iter().sum::<f64>() / 5.0);
        let cov: f64 = x.iter().zip(&y).map(|(p, q)| (p - mx) * (q - my)).sum();
        cov / (x.iter().map(|p| (p - mx).powi(2)).sum::<f64>() * y.iter().map(|q| (q - my).powi(2)).sum::<f64>()).sqrt()
    };
    let full = pearson_matrix(&rows).unwrap().values;
    let reduced = reduce_by_layer(&full, &[0, 0, 1, 1], 2).unwrap().values;
    let want = [[r(0, 1), (r(0, 2) + r(0, 3) + r(1, 2) + r(1, 3)) / 4.0], [0.0, r(2, 3)]];
    for (a, b) in [(0, 0), (0, 1), (1, 1)] {
        assert!((reduced[a][b] - want[a][b]).abs() < 1e-12, "block ({a}, {b})");
    }
    assert_eq!(reduced[1][0], reduced[0][1]);
    "52 x 52 bounded, symmetric, unit diagonal; 8 x 8 reduced; block-mean fixture matches".to_owned()
}

fn round_trip() -> String {
    let (dir, ws) = common::full_workspace(3_000);
    let c = ws.projection.origin;
    let window = json!({"layer": "crime", "granularity": "month", "mode": "density", "value": 0.3, "current": null}).to_string();
    let requests: Vec<(&str, String, String)> = vec![
        ("GET", "/api/health".into(), String::new()),
        ("GET", "/api/layers".into(), String::new()),
        ("GET", "/api/layers/1/features".into(), String::new()),
        ("GET", format!("/api/layers/taxi_trips/features?bbox={},{},{},{}", c.lon - 0.01, c.lat - 0.01, c.lon + 0.01, c.lat + 0.01), String::new()),
        ("GET", "/api/layers/socioeconomic/features".into(), String::new()),
        ("GET", format!("/api/lens/spatial?layer=1&lat={}&lon={}&k=50", c.lat, c.lon), String::new()),
        ("GET", format!("/api/lens/spatial?layer=graph&lat={}&lon={}", c.lat + 0.003, c.lon), String::new()),
        ("GET", "/api/temporal/crime/histogram".into(), String::new()),
        ("GET", "/api/temporal/taxi_trips/histogram?granularity=weekday".into(), String::new()),
        ("POST", "/api/temporal/window".into(), window),
        ("GET", "/api/prediction/grid".into(), String::new()),
        ("GET", "/api/analytics/correlation".into(), String::new()),
        ("GET", "/api/analytics/shapley".into(), String::new()),
        ("GET", "/api/graph/nodes".into(), String::new()),
        ("GET", "/api/layers/77/features".into(), String::new()),
    ];
    let path = dir.path().join("rt.ulw");
    save_workspace(&ws, &path).unwrap();
    let before = Api::new(ws);
    let after = Api::new(load_workspace(&path).unwrap());
    for (method, target, body) in &requests {
        let (a, b) = (before.handle(method, target, body.as_bytes()), after.handle(method, target, body.as_bytes()));
        assert_eq!(a.status, b.status, "{target}");
        assert!(a.body == b.body, "{target} differs after reload");
    }
    format!("{} responses byte-identical after save/load", requests.len())
}

type Criterion = (&'static str, fn() -> String);

fn main() {
    let criteria: [Criterion; 10] = [
        ("knn oracle", knn_oracle),
        ("lens adaptivity", lens_adaptivity),
        ("temporal window trace", temporal_trace),
        ("aggregation oracles", aggregation_oracles),
        ("trip synthesis", trip_synthesis),
        ("pipeline g-mean", pipeline_g_mean),
        ("grid conservation", grid_conservation),
        ("shapley", shapley_checks),
        ("correlation", correlation_checks),
        ("round-trip", round_trip),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        match catch_unwind(AssertUnwindSafe(check)) {
            Ok(detail) => println!("PASS  {:>2} {name}: {detail} [{:.1?}]", i + 1, start.elapsed()),
            Err(e) => {
                failed += 1;
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                println!("FAIL  {:>2} {name}: {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
