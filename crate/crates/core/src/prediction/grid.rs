use serde::{Deserialize, Serialize};

use super::{trip_feature_vector, trip_label, Scorer};
use crate::crime_sim::TripRecord;
use crate::error::{Error, Result};
use crate::geo::{GeoBBox, ProjectedPoint, Projection};
use crate::street_graph::{NodeFeatures, StreetGraph};

/// Regular grid over the graph's bounding box counting correct (success)
/// and incorrect (failure) trip predictions. Each trip is counted in the
/// cell of its origin corner and in the cell of its destination corner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionGrid {
    pub cell_size_m: f64,
    pub projection: Projection,
    /// South-west corner of cell (0, 0) in projected meters.
    pub min_x: f64,
    pub min_y: f64,
    pub cols: usize,
    pub rows: usize,
    /// Row-major, `rows * cols`.
    pub success: Vec<u64>,
    pub failure: Vec<u64>,
    pub evaluated_trips: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub col: usize,
    pub row: usize,
    pub bounds: GeoBBox,
    pub success: u64,
    pub failure: u64,
}

impl PredictionGrid {
    /// Empty grid covering every node of `g`.
    pub fn covering(g: &StreetGraph, cell_size_m: f64) -> Result<Self> {
        if !(cell_size_m > 0.0) {
            return Err(Error::InvalidArgument(format!("cell size {cell_size_m} must be positive")));
        }
        let (mut min_x, mut min_y, mut max_x, mut max_y) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in g.positions() {
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
        if g.node_count() == 0 {
            (min_x, min_y, max_x, max_y) = (0.0, 0.0, 0.0, 0.0);
        }
        let cols = ((max_x - min_x) / cell_size_m).floor() as usize + 1;
        let rows = ((max_y - min_y) / cell_size_m).floor() as usize + 1;
        Ok(PredictionGrid {
            cell_size_m,
            projection: *g.projection(),
            min_x,
            min_y,
            cols,
            rows,
            success: vec![0; cols * rows],
            failure: vec![0; cols * rows],
            evaluated_trips: 0,
        })
    }

    pub fn cell_of(&self, p: &ProjectedPoint) -> usize {
        let col = (((p.x - self.min_x) / self.cell_size_m).floor().max(0.0) as usize).min(self.cols - 1);
        let row = (((p.y - self.min_y) / self.cell_size_m).floor().max(0.0) as usize).min(self.rows - 1);
        row * self.cols + col
    }

    /// Records one evaluated trip between two projected endpoints.
    pub fn record(&mut self, origin: &ProjectedPoint, destination: &ProjectedPoint, correct: bool) {
        let (o, d) = (self.cell_of(origin), self.cell_of(destination));
        let counts = if correct { &mut self.success } else { &mut self.failure };
        counts[o] += 1;
        counts[d] += 1;
        self.evaluated_trips += 1;
    }

    pub fn total(&self) -> u64 {
        self.success.iter().sum::<u64>() + self.failure.iter().sum::<u64>()
    }

    pub fn cell_count(&self) -> usize {
        self.cols * self.rows
    }

    pub fn cells(&self) -> Vec<GridCell> {
        (0..self.cell_count())
            .map(|i| {
                let (row, col) = (i / self.cols, i % self.cols);
                let sw = self.projection.unproject(ProjectedPoint::new(
                    self.min_x + col as f64 * self.cell_size_m,
                    self.min_y + row as f64 * self.cell_size_m,
                ));
                let ne = self.projection.unproject(ProjectedPoint::new(
                    self.min_x + (col + 1) as f64 * self.cell_size_m,
                    self.min_y + (row + 1) as f64 * self.cell_size_m,
                ));
                GridCell {
                    col,
                    row,
                    bounds: GeoBBox::from_corners(sw.lon, sw.lat, ne.lon, ne.lat),
                    success: self.success[i],
                    failure: self.failure[i],
                }
            })
            .collect()
    }
}

/// Scores every trip at threshold 0.5 and accumulates the outcome grid.
pub fn prediction_grid(
    model: &impl Scorer,
    trips: &[TripRecord],
    nodes: &[NodeFeatures],
    g: &StreetGraph,
    cell_size_m: f64,
) -> Result<PredictionGrid> {
    let mut grid = PredictionGrid::covering(g, cell_size_m)?;
    for t in trips {
        let predicted = model.score(&trip_feature_vector(t, nodes)) >= 0.5;
        grid.record(&g.position(t.origin), &g.position(t.destination), predicted == trip_label(t));
    }
    Ok(grid)
}
