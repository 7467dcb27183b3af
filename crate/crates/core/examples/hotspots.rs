//! Two-state Markov hotspot detection on monthly crime activity.

use urbanlens::crime_sim::{activity_series, detect_hotspots, HotspotParams};
use urbanlens::geo::Projection;
use urbanlens::street_graph::build_graph;
use urbanlens::synthetic::{generate, CityParams};

fn main() -> urbanlens::Result<()> {
    let params = CityParams::default();
    let city = generate(&params);
    let g = build_graph(&city.streets, Some(Projection::new(params.center)))?;
    let series = activity_series(&g, &city.crimes, Some(params.year));
    let results = detect_hotspots(&series, &HotspotParams::default());
    let mut ranked: Vec<_> = results.iter().filter(|r| r.total > 0).collect();
    ranked.sort_by(|a, b| b.stationary_active.total_cmp(&a.stationary_active).then(a.node.cmp(&b.node)));
    println!("node  total  P(stay)  P(become)  pi      hotspot");
    for r in ranked.iter().take(8) {
        println!(
            "{:>4}  {:>5}  {:.3}    {:.3}      {:.3}   {}",
            r.node, r.total, r.stay_active, r.become_active, r.stationary_active, r.is_hotspot
        );
    }
    Ok(())
}
