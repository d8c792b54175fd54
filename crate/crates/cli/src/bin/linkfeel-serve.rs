use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;

use clap::Parser;
use linkfeel_cli::args::parse_grid;
use linkfeel_cli::server::{serve, ServeConfig};

/// Runs the simulation engine behind a websocket at /ws.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    bind: IpAddr,
    /// Simulation rate; the step is 1/tick-hz seconds.
    #[arg(long, default_value_t = 100.0)]
    tick_hz: f64,
    /// Atlas resolution.
    #[arg(long, default_value = "400x400", value_parser = parse_grid)]
    grid: (usize, usize),
    /// Serve only the protocol, no UI files.
    #[arg(long)]
    headless: bool,
    /// UI bundle served at /.
    #[arg(long, default_value = "ui/dist")]
    ui_dir: PathBuf,
    /// Keep each dragged end-effector inside its starting aspect.
    #[arg(long)]
    confine_to_aspect: bool,
}

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .init();
    let args = Args::parse();
    let ui = (!args.headless).then_some(args.ui_dir);
    let mut config = ServeConfig::new(args.tick_hz, args.grid, ui);
    config.engine.confine_to_aspect = args.confine_to_aspect;
    if let Err(e) = serve(SocketAddr::new(args.bind, args.port), config).await {
        eprintln!("linkfeel-serve: {e}");
        std::process::exit(1);
    }
}
