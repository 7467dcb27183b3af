use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use urbanlens::config::Config;
use urbanlens::error::{Error, Result};
use urbanlens::service::{serve, Api};
use urbanlens::store::{load_workspace, save_workspace, Workspace};
use urbanlens::{export, pipeline};

#[derive(Parser)]
#[command(name = "urbanlens", version, about = "Urban layer exploration pipeline and API server")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(short, long, global = true, default_value = "urbanlens.toml")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load the input files into a new workspace.
    Ingest,
    /// Build the street graph and detect hotspots.
    Build,
    /// Synthesize trips and aggregate node features.
    SynthTrips,
    /// Train the classifier and fill the prediction grid.
    Train,
    /// Compute the correlation and Shapley reports.
    Analyze,
    /// Serve the HTTP API over the workspace.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        bind: Option<String>,
    },
    /// Write grid, analytics and trip CSVs.
    Export {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn open(path: &Path) -> Result<Workspace> {
    if !path.exists() {
        return Err(Error::StageMissing {
            stage: "ingest",
            command: "ingest",
        });
    }
    load_workspace(path)
}

fn stage(config: &Config, f: fn(&mut Workspace) -> Result<()>) -> Result<()> {
    let path = &config.paths.workspace;
    let mut ws = open(path)?;
    f(&mut ws)?;
    save_workspace(&ws, path)
}

fn run(cli: Cli) -> Result<()> {
    let config = Config::load(&cli.config)?;
    match cli.command {
        Command::Ingest => save_workspace(&pipeline::ingest(&config)?, &config.paths.workspace),
        Command::Build => stage(&config, pipeline::build),
        Command::SynthTrips => stage(&config, pipeline::synth_trips),
        Command::Train => stage(&config, pipeline::train),
        Command::Analyze => stage(&config, pipeline::analyze),
        Command::Serve { port, bind } => {
            let ws = open(&config.paths.workspace)?;
            let bind = bind.unwrap_or(config.server.bind.clone());
            let addr: SocketAddr = format!("{bind}:{}", port.unwrap_or(config.server.port))
                .parse()
                .map_err(|e| Error::Config(format!("bad bind address: {e}")))?;
            let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io("tokio runtime", e))?;
            rt.block_on(serve(Arc::new(Api::new(ws)), addr, &config.server.cors_origin))
        }
        Command::Export { out } => {
            let ws = open(&config.paths.workspace)?;
            for p in export::export_all(&ws, &out.unwrap_or(config.paths.export_dir.clone()))? {
                println!("{}", p.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
