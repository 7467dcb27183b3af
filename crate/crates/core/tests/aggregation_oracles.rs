mod common;

use std::collections::BTreeSet;

use common::{brute_nearest, built_workspace, rect_distance, rect_of, uniform_points};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use urbanlens::domain::{crimes_from_layer, facilities_from_layer, favelas_from_layer, tracts_from_layer, CrimeType, FacilityCategory, YearMonth};
use urbanlens::geo::ProjectedPoint;
use urbanlens::layers::LayerId;
use urbanlens::pipeline;
use urbanlens::street_graph::{
    build_graph, classify_nodes, idw_weather, radius_count, FacilityIndex, NodeClass, StationSite, StreetGraph,
};

/// Multi-source shortest distances by repeated edge relaxation.
fn relax_distances(g: &StreetGraph, sources: &[usize]) -> Vec<f64> {
    let mut d = vec![f64::INFINITY; g.node_count()];
    for &s in sources {
        d[s] = 0.0;
    }
    loop {
        let mut changed = false;
        for e in g.edges() {
            for (u, v) in [(e.a, e.b), (e.b, e.a)] {
                if d[u] + e.length < d[v] {
                    d[v] = d[u] + e.length;
                    changed = true;
                }
            }
        }
        if !changed {
            return d;
        }
    }
}

fn brute_classes(g: &StreetGraph, near_m: f64) -> Vec<NodeClass> {
    let n = g.node_count();
    let mut degree = vec![0usize; n];
    for e in g.edges() {
        degree[e.a] += 1;
        degree[e.b] += 1;
    }
    let mut dead = BTreeSet::new();
    for e in g.edges() {
        if degree[e.a] == 1 || degree[e.b] == 1 {
            dead.insert(e.a);
            dead.insert(e.b);
        }
    }
    let d = relax_distances(g, &dead.iter().copied().collect::<Vec<_>>());
    (0..n)
        .map(|v| {
            if dead.contains(&v) {
                NodeClass::DeadEnd
            } else if d[v] <= near_m {
                NodeClass::NearDeadEnd
            } else {
                NodeClass::Regular
            }
        })
        .collect()
}

#[test]
fn nearest_corner_matches_brute_force() {
    let (_dir, ws) = built_workspace(100);
    let g = &ws.graph_stage().unwrap().graph;
    for q in uniform_points(2_000, 5, 2_500.0) {
        assert_eq!(g.nearest_corner_projected(&q), brute_nearest(g.positions(), &q));
    }
}

#[test]
fn classification_partitions_and_matches_relaxation() {
    let (_dir, ws) = built_workspace(100);
    let stage = ws.graph_stage().unwrap();
    let g = &stage.graph;
    assert_eq!(stage.classes.len(), g.node_count());
    assert_eq!(stage.classes, brute_classes(g, ws.config.graph.near_dead_end_m));
    for c in [NodeClass::DeadEnd, NodeClass::NearDeadEnd, NodeClass::Regular] {
        assert!(stage.classes.contains(&c), "{c:?} missing");
    }
    for class in &stage.classes {
        assert_eq!(class.one_hot().iter().sum::<f64>(), 1.0);
    }
    for r in [0.0, 50.0, 150.0, 400.0] {
        assert_eq!(classify_nodes(g, r), brute_classes(g, r), "radius {r}");
    }
}

#[test]
fn random_graph_classification() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let origin = urbanlens::geo::GeoPoint { lat: -22.9, lon: -43.2 };
    let proj = urbanlens::geo::Projection::new(origin);
    for _ in 0..20 {
        let pts: Vec<ProjectedPoint> = (0..30).map(|_| ProjectedPoint::new(rng.gen_range(0.0..1_000.0), rng.gen_range(0.0..1_000.0))).collect();
        let streets: Vec<_> = (0..25)
            .map(|_| {
                let a = pts[rng.gen_range(0..pts.len())];
                let b = pts[rng.gen_range(0..pts.len())];
                vec![proj.unproject(a), proj.unproject(b)]
            })
            .collect();
        let Ok(g) = build_graph(&streets, Some(proj)) else { continue };
        assert_eq!(classify_nodes(&g, 300.0), brute_classes(&g, 300.0));
    }
}

#[test]
fn radius_count_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let facilities: Vec<(ProjectedPoint, FacilityCategory)> = uniform_points(3_000, 4, 2_000.0)
        .into_iter()
        .map(|p| (p, FacilityCategory::ALL[rng.gen_range(0..4)]))
        .collect();
    let index = FacilityIndex::new(&facilities);
    for q in uniform_points(300, 6, 2_000.0) {
        for r in [0.0, 50.0, 200.0, 750.0] {
            let mut want = [0usize; 4];
            for (p, c) in &facilities {
                if p.dist(&q) <= r {
                    want[c.index()] += 1;
                }
            }
            assert_eq!(radius_count(&index, &q, r), want);
        }
    }
}

#[test]
fn idw_matches_hand_formula_and_is_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let month = YearMonth { year: 2019, month: 3 };
    let stations: Vec<StationSite> = (0..6)
        .map(|i| {
            let mut series = std::collections::BTreeMap::new();
            series.insert(
                month,
                urbanlens::domain::Climate {
                    tmax_c: rng.gen_range(25.0..35.0),
                    tmin_c: rng.gen_range(15.0..22.0),
                    precip_mm: rng.gen_range(0.0..300.0),
                },
            );
            StationSite { id: format!("s{i}"), position: ProjectedPoint::new(rng.gen_range(-3e3..3e3), rng.gen_range(-3e3..3e3)), series }
        })
        .collect();
    let values: Vec<f64> = stations.iter().map(|s| s.series[&month].precip_mm).collect();
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    for q in uniform_points(500, 13, 3_500.0) {
        let got = idw_weather(&q, &stations, month, 1.0).unwrap().precip_mm;
        let ds: Vec<f64> = stations.iter().map(|s| ((s.position.x - q.x).powi(2) + (s.position.y - q.y).powi(2)).sqrt()).collect();
        let want = ds.iter().zip(&values).map(|(d, v)| v / d).sum::<f64>() / ds.iter().map(|d| 1.0 / d).sum::<f64>();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        assert!(got >= lo - 1e-9 && got <= hi + 1e-9);
    }
    for (s, v) in stations.iter().zip(&values) {
        assert_eq!(idw_weather(&s.position, &stations, month, 1.0).unwrap().precip_mm, *v);
    }
}

#[test]
fn aggregate_all_matches_independent_oracles() {
    let (_dir, mut ws) = built_workspace(3_000);
    pipeline::synth_trips(&mut ws).unwrap();
    let graph_stage = ws.graph_stage().unwrap();
    let g = &graph_stage.graph;
    let proj = *g.projection();
    let trips = ws.trip_stage().unwrap();
    let features = &trips.node_features;
    let radii = ws.config.aggregation;
    assert_eq!(features.len(), g.node_count());
    assert!(features.iter().all(|f| f.is_finite()));

    let crimes = crimes_from_layer(ws.layer(LayerId::Crime).unwrap()).unwrap();
    let facilities = facilities_from_layer(ws.layer(LayerId::PublicTransport).unwrap()).unwrap();
    let favelas: Vec<[f64; 4]> = favelas_from_layer(ws.layer(LayerId::Favelas).unwrap())
        .unwrap()
        .iter()
        .flat_map(|parts| parts.iter().map(|rings| rect_of(rings, &proj)))
        .collect();
    let tracts = tracts_from_layer(ws.layer(LayerId::Socioeconomic).unwrap()).unwrap();
    let tract_rects: Vec<[f64; 4]> = tracts.iter().map(|t| rect_of(&t.parts[0], &proj)).collect();

    let n = g.node_count();
    let (mut vehicle, mut phone, mut pickups, mut dropoffs) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for c in &crimes {
        let v = brute_nearest(g.positions(), &proj.project(c.at));
        match c.kind {
            CrimeType::VehicleTheft => vehicle[v] += 1.0,
            CrimeType::PhoneTheft => phone[v] += 1.0,
        }
    }
    for t in &trips.synthesis.trips {
        pickups[t.origin] += 1.0;
        dropoffs[t.destination] += 1.0;
    }
    let months: BTreeSet<YearMonth> = ws.stations.iter().flat_map(|s| s.series.keys().copied()).collect();

    for v in 0..n {
        let p = g.position(v);
        let f = &features[v];
        assert_eq!((f.vehicle_theft_count, f.phone_theft_count), (vehicle[v], phone[v]), "crimes at {v}");
        assert_eq!((f.pickup_count, f.dropoff_count), (pickups[v], dropoffs[v]));

        let mut transport = [0.0; 4];
        for fac in &facilities {
            if proj.project(fac.at).dist(&p) <= radii.transport_m {
                transport[fac.category.index()] += 1.0;
            }
        }
        assert_eq!([f.bus_stop_count, f.terminal_count, f.subway_count, f.train_count], transport, "transport at {v}");

        let near_favela = favelas.iter().any(|r| rect_distance(r, &p) <= radii.favela_m);
        assert_eq!(f.favela_flag, if near_favela { 1.0 } else { 0.0 }, "favela at {v}");

        let d: Vec<f64> = tract_rects.iter().map(|r| rect_distance(r, &p)).collect();
        let close: Vec<usize> = (0..d.len()).filter(|&i| d[i] <= radii.tract_boundary_eps_m).collect();
        let chosen = if close.is_empty() { vec![(0..d.len()).min_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap()] } else { close };
        for k in 0..7 {
            let want = chosen.iter().map(|&i| tracts[i].indicators[k]).sum::<f64>() / chosen.len() as f64;
            assert!((f.socioeconomic[k] - want).abs() < 1e-9, "indicator {k} at {v}");
        }

        let mut tmax = 0.0;
        for m in &months {
            let (mut num, mut den, mut snapped) = (0.0, 0.0, None);
            for s in &ws.stations {
                let d = proj.project(s.at).dist(&p);
                let val = s.series[m].tmax_c;
                if d < radii.station_snap_m {
                    snapped = Some(val);
                }
                num += val / d;
                den += 1.0 / d;
            }
            tmax += snapped.unwrap_or(num / den);
        }
        assert!((f.tmax_c - tmax / months.len() as f64).abs() < 1e-9);

        assert_eq!(f.class_one_hot, graph_stage.classes[v].one_hot());
        assert_eq!(f.node_degree, g.neighbors(v).len() as f64);
        let h = &graph_stage.hotspots[v];
        assert_eq!(f.hotspot_count, h.total as f64);
        assert_eq!(f.hotspot_flag, if h.is_hotspot { 1.0 } else { 0.0 });
    }

    // same inputs, same features
    let mut again = ws.clone();
    pipeline::synth_trips(&mut again).unwrap();
    assert_eq!(&again.trip_stage().unwrap().node_features, features);
}
