//! Builds a workspace, saves and reloads it, and queries the API in
//! process without a socket.

use urbanlens::config::Config;
use urbanlens::pipeline;
use urbanlens::service::Api;
use urbanlens::store::{load_workspace, save_workspace};
use urbanlens::synthetic::{generate, CityParams};

fn main() -> urbanlens::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| urbanlens::Error::io("tempdir", e))?;
    generate(&CityParams::default()).write_inputs(dir.path())?;
    let mut config = Config::default();
    config.paths.data_dir = dir.path().to_path_buf();
    config.trips.count = 5_000;
    config.analytics.shapley_sample = 50;
    let ws = pipeline::run_all(&config)?;
    let path = dir.path().join("workspace.ulw");
    save_workspace(&ws, &path)?;
    let api = Api::new(load_workspace(&path)?);
    let c = api.projection().origin;
    for target in [
        "/api/health".to_owned(),
        "/api/layers".to_owned(),
        format!("/api/lens/spatial?layer=crime&lon={}&lat={}&k=100", c.lon, c.lat),
        "/api/temporal/crime/histogram?granularity=month".to_owned(),
    ] {
        let r = api.handle("GET", &target, b"");
        let text = String::from_utf8_lossy(&r.body);
        println!("GET {target} -> {}\n  {}", r.status, &text[..text.len().min(300)]);
    }
    let r = api.handle("POST", "/api/temporal/window", br#"{"layer":"crime","granularity":"month","mode":"density","value":0.25,"current":null}"#);
    println!("POST /api/temporal/window -> {} {}", r.status, String::from_utf8_lossy(&r.body));
    Ok(())
}
