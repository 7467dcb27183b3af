//! Builds the street graph of the synthetic city, classifies corners and
//! aggregates every layer onto them.

use std::collections::BTreeMap;

use urbanlens::crime_sim::{activity_series, detect_hotspots, HotspotParams};
use urbanlens::geo::Projection;
use urbanlens::street_graph::{aggregate_all, build_graph, classify_nodes, AggregationInputs, AggregationRadii};
use urbanlens::synthetic::{generate, CityParams};

fn main() -> urbanlens::Result<()> {
    let params = CityParams::default();
    let city = generate(&params);
    let g = build_graph(&city.streets, Some(Projection::new(params.center)))?;
    let classes = classify_nodes(&g, 100.0);
    let mut tally = BTreeMap::new();
    for c in &classes {
        *tally.entry(c.as_str()).or_insert(0) += 1;
    }
    println!("{} corners, {} street segments, classes {tally:?}", g.node_count(), g.edge_count());

    let hotspots = detect_hotspots(&activity_series(&g, &city.crimes, Some(params.year)), &HotspotParams::default());
    let features = aggregate_all(&AggregationInputs {
        graph: &g,
        classes: &classes,
        crimes: Some(&city.crimes),
        trips: Some(&[]),
        stations: Some(&city.stations),
        facilities: Some(&city.facilities),
        favelas: Some(&city.favelas.iter().map(|f| vec![f.clone()]).collect::<Vec<_>>()),
        tracts: Some(&city.tracts),
        hotspots: Some(&hotspots),
        radii: AggregationRadii::default(),
    })?;
    let near_favela = features.iter().filter(|f| f.favela_flag == 1.0).count();
    let corner = g.nearest_corner(city.hotspot_corners[0]);
    println!("{near_favela} corners within 500 m of a favela");
    println!("features of hotspot corner {corner}: {:?}", features[corner].to_array());
    Ok(())
}
