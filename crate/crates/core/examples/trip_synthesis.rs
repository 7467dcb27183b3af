//! Synthesizes 87 000 trips labeled by hotspot proximity.

use std::time::Instant;

use urbanlens::crime_sim::{activity_series, detect_hotspots, synth_trips, HotspotParams, TripSynthesisParams};
use urbanlens::geo::Projection;
use urbanlens::street_graph::build_graph;
use urbanlens::synthetic::{generate, CityParams};

fn main() -> urbanlens::Result<()> {
    let params = CityParams::default();
    let city = generate(&params);
    let g = build_graph(&city.streets, Some(Projection::new(params.center)))?;
    let hot: Vec<usize> = detect_hotspots(&activity_series(&g, &city.crimes, Some(params.year)), &HotspotParams::default())
        .into_iter()
        .filter(|h| h.is_hotspot)
        .map(|h| h.node)
        .collect();
    let start = Instant::now();
    let s = synth_trips(&g, &city.tracts, &hot, &TripSynthesisParams::default())?;
    let occ = s.occurrence_count();
    println!(
        "{} trips in {:.2?}: {occ} occurrences (1:{:.1}), p = {:.4}, near-hotspot share {:.4}",
        s.trips.len(),
        start.elapsed(),
        (s.trips.len() - occ) as f64 / occ.max(1) as f64,
        s.occurrence_probability,
        s.near_hotspot_share
    );
    Ok(())
}
