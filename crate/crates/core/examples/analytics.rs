//! Layer-reduced correlation matrix and Shapley attributions.

use urbanlens::analytics::{shapley, ShapleyMethod};
use urbanlens::config::Config;
use urbanlens::pipeline;
use urbanlens::prediction::FnScorer;
use urbanlens::synthetic::{generate, CityParams};

fn main() -> urbanlens::Result<()> {
    let f = FnScorer::new(2, |x: &[f64]| 2.0 * x[0] + 3.0 * x[1]);
    println!("linear model phi = {:?}", shapley(&f, &[1.0, 1.0], &[0.0, 0.0], ShapleyMethod::Exact, 0)?);

    let dir = tempfile::tempdir().map_err(|e| urbanlens::Error::io("tempdir", e))?;
    generate(&CityParams::default()).write_inputs(dir.path())?;
    let mut config = Config::default();
    config.paths.data_dir = dir.path().to_path_buf();
    config.trips.count = 20_000;
    config.analytics.shapley_sample = 200;
    let ws = pipeline::run_all(&config)?;
    let a = ws.analytics_stage()?;
    let c = &a.correlation;
    print!("{:>14}", "");
    for l in &c.layer_labels {
        print!("{l:>14}");
    }
    println!();
    for (l, row) in c.layer_labels.iter().zip(&c.reduced) {
        print!("{l:>14}");
        for v in row {
            print!("{v:>14.3}");
        }
        println!();
    }
    println!("\nShapley share by layer:");
    for (l, p) in a.shapley.layer_labels.iter().zip(&a.shapley.layer_percent) {
        println!("{l:>14} {p:6.2} %");
    }
    Ok(())
}
