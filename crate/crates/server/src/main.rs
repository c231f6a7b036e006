use std::net::SocketAddr;
use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;
use tracing::Level;

use ecoecho_server::config::ServerConfig;
use ecoecho_server::{router, AppState};

/// Serve the EcoEcho game over HTTP.
#[derive(Debug, Parser)]
#[command(version)]
struct Args {
    /// TOML configuration file. Environment variables override it.
    #[arg(long, env = "ECOECHO_CONFIG")]
    config: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    let level = std::env::var("ECOECHO_LOG").ok().and_then(|v| v.parse().ok()).unwrap_or(Level::INFO);
    tracing_subscriber::fmt().with_max_level(level).init();
    let args = Args::parse();
    let mut config = ServerConfig::load(args.config.as_deref()).context("loading configuration")?;
    config.apply_env(|k| std::env::var(k).ok()).context("reading environment")?;
    // The live provider owns a blocking HTTP client, which must be built
    // outside the async runtime.
    let state = AppState::from_config(&config).context("initialising server state")?;
    let bind: SocketAddr = config.bind;
    let app = router(state, &config.cors_origin);
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting runtime")?
        .block_on(async move {
            let listener = tokio::net::TcpListener::bind(bind).await.with_context(|| format!("binding {bind}"))?;
            tracing::info!(%bind, "listening");
            axum::serve(listener, app)
                .with_graceful_shutdown(async {
                    let _ = tokio::signal::ctrl_c().await;
                })
                .await
                .context("serving")
        })
}
