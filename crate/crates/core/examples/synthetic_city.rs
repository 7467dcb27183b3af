//! Writes the synthetic city's input files.
//!
//! ```text
//! cargo run --release --example synthetic_city -- sample/data
//! ```

use std::path::PathBuf;

use urbanlens::synthetic::{generate, CityParams};

fn main() -> urbanlens::Result<()> {
    let dir: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "sample/data".into()).into();
    let city = generate(&CityParams::default());
    city.write_inputs(&dir)?;
    println!(
        "wrote {} streets, {} crimes, {} facilities, {} stations, {} favelas, {} tracts to {}",
        city.streets.len(),
        city.crimes.len(),
        city.facilities.len(),
        city.stations.len(),
        city.favelas.len(),
        city.tracts.len(),
        dir.display()
    );
    Ok(())
}
