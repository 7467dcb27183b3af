//! CSV exports of the prediction grid and the analytics reports.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::ingest::{csv_error, write_trips_csv};
use crate::store::Workspace;

pub const GRID_FILE: &str = "grid.csv";
pub const CORRELATION_FILE: &str = "correlation.csv";
pub const CORRELATION_LAYERS_FILE: &str = "correlation_layers.csv";
pub const SHAPLEY_FILE: &str = "shapley.csv";
pub const SHAPLEY_LAYERS_FILE: &str = "shapley_layers.csv";
pub const TRIPS_FILE: &str = "trips.csv";

fn write(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| (*s).to_owned()).collect()
}

fn matrix_rows<'a>(labels: &'a [String], m: &'a [Vec<f64>]) -> impl Iterator<Item = Vec<String>> + 'a {
    labels
        .iter()
        .zip(m)
        .map(|(l, row)| std::iter::once(l.clone()).chain(row.iter().map(f64::to_string)).collect())
}

/// Writes every export file into `dir` and returns their paths.
pub fn export_all(ws: &Workspace, dir: &Path) -> Result<Vec<PathBuf>> {
    let model = ws.model_stage()?;
    let analytics = ws.analytics_stage()?;
    let trips = ws.trip_stage()?;
    let graph = &ws.graph_stage()?.graph;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();

    let p = dir.join(GRID_FILE);
    write(
        &p,
        &strings(&["col", "row", "min_lon", "min_lat", "max_lon", "max_lat", "success", "failure"]),
        model.grid.cells().into_iter().map(|c| {
            vec![
                c.col.to_string(),
                c.row.to_string(),
                c.bounds.min_lon.to_string(),
                c.bounds.min_lat.to_string(),
                c.bounds.max_lon.to_string(),
                c.bounds.max_lat.to_string(),
                c.success.to_string(),
                c.failure.to_string(),
            ]
        }),
    )?;
    out.push(p);

    let corr = &analytics.correlation;
    let p = dir.join(CORRELATION_FILE);
    let header: Vec<String> = std::iter::once("feature".to_owned()).chain(corr.features.iter().cloned()).collect();
    write(&p, &header, matrix_rows(&corr.features, &corr.full))?;
    out.push(p);

    let p = dir.join(CORRELATION_LAYERS_FILE);
    let header: Vec<String> = std::iter::once("layer".to_owned()).chain(corr.layer_labels.iter().cloned()).collect();
    write(&p, &header, matrix_rows(&corr.layer_labels, &corr.reduced))?;
    out.push(p);

    let sh = &analytics.shapley;
    let p = dir.join(SHAPLEY_FILE);
    write(
        &p,
        &strings(&["feature", "layer", "mean_abs_shapley", "percent"]),
        (0..sh.features.len()).map(|i| {
            vec![
                sh.features[i].clone(),
                corr.assignment[i].clone(),
                sh.mean_abs[i].to_string(),
                sh.percent[i].to_string(),
            ]
        }),
    )?;
    out.push(p);

    let p = dir.join(SHAPLEY_LAYERS_FILE);
    write(
        &p,
        &strings(&["layer", "sum_mean_abs_shapley", "percent"]),
        (0..sh.layer_labels.len()).map(|i| vec![sh.layer_labels[i].clone(), sh.layer_sums[i].to_string(), sh.layer_percent[i].to_string()]),
    )?;
    out.push(p);

    let p = dir.join(TRIPS_FILE);
    write_trips_csv(&p, &trips.synthesis.trips, graph)?;
    out.push(p);
    Ok(out)
}
