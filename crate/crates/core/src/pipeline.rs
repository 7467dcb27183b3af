//! The pipeline stages behind the CLI. Each stage reads its prerequisites
//! from the workspace, writes its products back and clears every later
//! stage so the workspace never mixes products of different runs.

use std::collections::BTreeMap;

use log::info;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::analytics::{background_means, correlation_report, layer_labels, shapley_report, trip_feature_layers, trip_feature_names};
use crate::config::{Config, TrainingConfig};
use crate::crime_sim::{activity_series, detect_hotspots, HotspotResult, TripRecord};
use crate::domain::{crimes_from_layer, facilities_from_layer, favelas_from_layer, stations_to_layer, tracts_from_layer};
use crate::error::{Error, Result};
use crate::geo::{GeoPoint, Projection};
use crate::ingest::{load_points_csv, load_polygons_geojson, load_streets_geojson, load_weather, trips_to_layer, Loaded, PointSchema};
use crate::layers::{AttrValue, Geometry, LayerDataset, LayerId, Record};
use crate::prediction::{prediction_grid, stratified_split, train as train_gbt, undersample_indices, Confusion, Dataset, GbtModel, PredictionGrid};
use crate::store::{AnalyticsStage, Evaluation, GraphStage, ModelStage, TripStage, Workspace};
use crate::street_graph::{aggregate_all, build_graph, classify_nodes, AggregationInputs, NodeClass, NodeFeatures, StreetGraph};

pub const CRIMES_FILE: &str = "crimes.csv";
pub const TRANSPORT_FILE: &str = "transport.csv";
pub const STATIONS_FILE: &str = "stations.csv";
pub const WEATHER_FILE: &str = "weather.csv";
pub const STREETS_FILE: &str = "streets.geojson";
pub const FAVELAS_FILE: &str = "favelas.geojson";
pub const TRACTS_FILE: &str = "tracts.geojson";

fn take<T>(loaded: Loaded<T>, warnings: &mut Vec<String>) -> T {
    for w in &loaded.warnings {
        log::warn!("{w}");
    }
    warnings.extend(loaded.warnings);
    loaded.value
}

/// Loads every input file from `config.paths.data_dir`.
pub fn ingest(config: &Config) -> Result<Workspace> {
    let dir = &config.paths.data_dir;
    let mut warnings = Vec::new();
    let crimes = take(load_points_csv(&dir.join(CRIMES_FILE), &PointSchema::crime())?, &mut warnings);
    let transport = take(load_points_csv(&dir.join(TRANSPORT_FILE), &PointSchema::transport())?, &mut warnings);
    let stations = take(load_weather(&dir.join(STATIONS_FILE), &dir.join(WEATHER_FILE))?, &mut warnings);
    let favelas = take(load_polygons_geojson(&dir.join(FAVELAS_FILE), LayerId::Favelas)?, &mut warnings);
    let tracts = take(load_polygons_geojson(&dir.join(TRACTS_FILE), LayerId::Socioeconomic)?, &mut warnings);
    let streets = take(load_streets_geojson(&dir.join(STREETS_FILE))?, &mut warnings);

    let projection = match (config.projection.origin_lat, config.projection.origin_lon) {
        (Some(lat), Some(lon)) => Projection::new(GeoPoint::new(lat, lon)?),
        _ => Projection::centered_on(streets.iter().flatten()).ok_or(Error::EmptyStreetNetwork)?,
    };
    info!(
        "ingested {} crimes, {} facilities, {} stations, {} favelas, {} tracts, {} streets",
        crimes.len(),
        transport.len(),
        stations.len(),
        favelas.len(),
        tracts.len(),
        streets.len()
    );
    let mut ws = Workspace {
        config: config.clone(),
        projection,
        layers: Vec::new(),
        stations,
        streets,
        warnings,
        graph: None,
        trips: None,
        model: None,
        analytics: None,
    };
    for layer in [crimes, stations_to_layer(&ws.stations), transport, favelas, tracts] {
        ws.set_layer(layer);
    }
    Ok(ws)
}

fn graph_layer(g: &StreetGraph, classes: &[NodeClass]) -> LayerDataset {
    let records = (0..g.node_count())
        .map(|i| Record {
            geometry: Geometry::Point { at: g.node(i) },
            attributes: BTreeMap::from([
                ("node".to_owned(), AttrValue::Num(i as f64)),
                ("class".to_owned(), AttrValue::from(classes[i].as_str())),
                ("degree".to_owned(), AttrValue::Num(g.degree(i) as f64)),
            ]),
            time: None,
        })
        .collect();
    LayerDataset::new(LayerId::Graph, records).expect("points")
}

fn hotspot_layer(g: &StreetGraph, hotspots: &[HotspotResult]) -> LayerDataset {
    let records = hotspots
        .iter()
        .filter(|h| h.is_hotspot)
        .map(|h| Record {
            geometry: Geometry::Point { at: g.node(h.node) },
            attributes: BTreeMap::from([
                ("node".to_owned(), AttrValue::Num(h.node as f64)),
                ("stationary_active".to_owned(), AttrValue::Num(h.stationary_active)),
                ("total".to_owned(), AttrValue::Num(h.total as f64)),
            ]),
            time: None,
        })
        .collect();
    LayerDataset::new(LayerId::Hotspots, records).expect("points")
}

fn grid_layer(grid: &PredictionGrid) -> LayerDataset {
    let records = grid
        .cells()
        .into_iter()
        .map(|c| {
            let b = c.bounds;
            let ring = vec![
                GeoPoint { lat: b.min_lat, lon: b.min_lon },
                GeoPoint { lat: b.min_lat, lon: b.max_lon },
                GeoPoint { lat: b.max_lat, lon: b.max_lon },
                GeoPoint { lat: b.max_lat, lon: b.min_lon },
            ];
            Record {
                geometry: Geometry::Polygon { parts: vec![vec![ring]] },
                attributes: BTreeMap::from([
                    ("col".to_owned(), AttrValue::Num(c.col as f64)),
                    ("row".to_owned(), AttrValue::Num(c.row as f64)),
                    ("success".to_owned(), AttrValue::Num(c.success as f64)),
                    ("failure".to_owned(), AttrValue::Num(c.failure as f64)),
                ]),
                time: None,
            }
        })
        .collect();
    LayerDataset::new(LayerId::Prediction, records).expect("polygons")
}

fn required_layer(ws: &Workspace, id: LayerId) -> Result<&LayerDataset> {
    ws.layer(id).ok_or(Error::StageMissing {
        stage: "ingest",
        command: "ingest",
    })
}

/// Street graph, node classes, crime assignment and hotspots.
pub fn build(ws: &mut Workspace) -> Result<()> {
    let cfg = &ws.config;
    let graph = build_graph(&ws.streets, Some(ws.projection))?;
    let classes = classify_nodes(&graph, cfg.graph.near_dead_end_m);
    let crimes = crimes_from_layer(required_layer(ws, LayerId::Crime)?)?;
    let series = activity_series(&graph, &crimes, cfg.hotspots.year);
    let hotspots = detect_hotspots(&series, &cfg.hotspots.params());
    info!(
        "graph: {} nodes, {} edges; {} hotspots",
        graph.node_count(),
        graph.edge_count(),
        hotspots.iter().filter(|h| h.is_hotspot).count()
    );
    ws.set_layer(graph_layer(&graph, &classes));
    ws.set_layer(hotspot_layer(&graph, &hotspots));
    ws.graph = Some(GraphStage { graph, classes, hotspots });
    clear_after_graph(ws);
    Ok(())
}

fn clear_after_graph(ws: &mut Workspace) {
    ws.trips = None;
    ws.remove_layer(LayerId::TaxiTrips);
    clear_after_trips(ws);
}

fn clear_after_trips(ws: &mut Workspace) {
    ws.model = None;
    ws.remove_layer(LayerId::Prediction);
    ws.analytics = None;
}

/// Trip synthesis followed by node-feature aggregation (pickup and dropoff
/// counts need the trips).
pub fn synth_trips(ws: &mut Workspace) -> Result<()> {
    let stage = ws.graph_stage()?;
    let g = &stage.graph;
    let tracts = tracts_from_layer(required_layer(ws, LayerId::Socioeconomic)?)?;
    let hot_nodes: Vec<usize> = stage.hotspots.iter().filter(|h| h.is_hotspot).map(|h| h.node).collect();
    let synthesis = crate::crime_sim::synth_trips(g, &tracts, &hot_nodes, &ws.config.trips)?;
    for w in &synthesis.warnings {
        log::warn!("{w}");
    }
    let crimes = crimes_from_layer(required_layer(ws, LayerId::Crime)?)?;
    let facilities = facilities_from_layer(required_layer(ws, LayerId::PublicTransport)?)?;
    let favelas = favelas_from_layer(required_layer(ws, LayerId::Favelas)?)?;
    let node_features = aggregate_all(&AggregationInputs {
        graph: g,
        classes: &stage.classes,
        crimes: Some(&crimes),
        trips: Some(&synthesis.trips),
        stations: Some(&ws.stations),
        facilities: Some(&facilities),
        favelas: Some(&favelas),
        tracts: Some(&tracts),
        hotspots: Some(&stage.hotspots),
        radii: ws.config.aggregation,
    })?;
    info!(
        "synthesized {} trips ({} occurrences, p = {:.4})",
        synthesis.trips.len(),
        synthesis.occurrence_count(),
        synthesis.occurrence_probability
    );
    let layer = trips_to_layer(&synthesis.trips, g);
    ws.warnings.extend(synthesis.warnings.iter().cloned());
    ws.trips = Some(TripStage { synthesis, node_features });
    ws.set_layer(layer);
    clear_after_trips(ws);
    Ok(())
}

/// Stratified hold-out split, undersampled training set, boosted model,
/// G-mean on the held-out trips and the outcome grid over them.
pub fn fit_and_evaluate(
    trips: &[TripRecord],
    nodes: &[NodeFeatures],
    g: &StreetGraph,
    cfg: &TrainingConfig,
    cell_size_m: f64,
) -> Result<ModelStage> {
    let data = Dataset::from_trips(trips, nodes);
    let (train_idx, test_idx) = stratified_split(&data.labels, cfg.test_fraction, cfg.split_seed);
    let train_all = data.subset(&train_idx);
    let balanced = train_all.subset(&undersample_indices(&train_all.labels, cfg.undersample_seed)?);
    let model = train_gbt(&balanced, &cfg.gbt)?;
    let test = data.subset(&test_idx);
    let preds: Vec<bool> = test.rows.iter().map(|r| model.predict(r)).collect();
    let confusion = Confusion::from_predictions(&preds, &test.labels);
    let test_trips: Vec<TripRecord> = test_idx.iter().map(|&i| trips[i]).collect();
    let grid = prediction_grid(&model, &test_trips, nodes, g, cell_size_m)?;
    Ok(ModelStage {
        evaluation: Evaluation {
            confusion,
            g_mean: confusion.g_mean(),
            sensitivity: confusion.sensitivity(),
            specificity: confusion.specificity(),
            train_rows: balanced.len(),
            test_rows: test.len(),
        },
        model,
        grid,
    })
}

pub fn train(ws: &mut Workspace) -> Result<()> {
    let trips = ws.trip_stage()?;
    let g = &ws.graph_stage()?.graph;
    let stage = fit_and_evaluate(
        &trips.synthesis.trips,
        &trips.node_features,
        g,
        &ws.config.training,
        ws.config.grid.cell_size_m,
    )?;
    info!(
        "held-out G-mean {:.3} (sensitivity {:.3}, specificity {:.3}) on {} trips",
        stage.evaluation.g_mean, stage.evaluation.sensitivity, stage.evaluation.specificity, stage.evaluation.test_rows
    );
    ws.set_layer(grid_layer(&stage.grid));
    ws.model = Some(stage);
    ws.analytics = None;
    Ok(())
}

/// Correlation over every trip vector; Shapley over a seeded sample with
/// the all-trip column means as background.
pub fn analyze_trips(model: &GbtModel, data: &Dataset, cfg: &crate::config::AnalyticsConfig) -> Result<AnalyticsStage> {
    let names = trip_feature_names();
    let assignment = trip_feature_layers();
    let labels = layer_labels();
    let correlation = correlation_report(&data.rows, &names, &assignment, &labels)?;
    let background = background_means(&data.rows)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut pick = index::sample(&mut rng, data.len(), cfg.shapley_sample.min(data.len())).into_vec();
    pick.sort_unstable();
    let sample: Vec<Vec<f64>> = pick.iter().map(|&i| data.rows[i].clone()).collect();
    let shapley = shapley_report(model, &sample, &background, &names, &assignment, &labels, cfg.shapley_method, cfg.seed)?;
    Ok(AnalyticsStage { correlation, shapley })
}

pub fn analyze(ws: &mut Workspace) -> Result<()> {
    let trips = ws.trip_stage()?;
    let model = &ws.model_stage()?.model;
    let data = Dataset::from_trips(&trips.synthesis.trips, &trips.node_features);
    let stage = analyze_trips(model, &data, &ws.config.analytics)?;
    info!("analytics over {} trips, Shapley sample {}", data.len(), stage.shapley.sample_size);
    ws.analytics = Some(stage);
    Ok(())
}

/// Every stage in order.
pub fn run_all(config: &Config) -> Result<Workspace> {
    let mut ws = ingest(config)?;
    build(&mut ws)?;
    synth_trips(&mut ws)?;
    train(&mut ws)?;
    analyze(&mut ws)?;
    Ok(ws)
}
