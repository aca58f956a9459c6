//! Command-line driver and HTTP study service for `semauto-core`.

pub mod commands;
pub mod manifest;
pub mod serve;

use std::sync::Arc;

use anyhow::{Context, Result};
use semauto_core::study::{SessionStore, Study};

use crate::manifest::RunManifest;

/// Serves the study protocol on `bind` until ctrl-c or SIGTERM, then
/// flushes the event log. Prints `listening on ADDR` once bound.
pub async fn run_server(m: &RunManifest, bind: &str) -> Result<()> {
    let engine = tokio::task::block_in_place(|| commands::study_engine(m))?;
    let store = SessionStore::open(m.output_dir.join(commands::EVENTS_FILE))?;
    if !store.is_empty() {
        tracing::info!(sessions = store.len(), "resumed sessions from the event log");
    }
    m.write_provenance()?;
    let study = Arc::new(Study::new(engine, store));
    let listener = tokio::net::TcpListener::bind(bind).await.with_context(|| format!("binding {bind}"))?;
    let addr = listener.local_addr()?;
    println!("listening on {addr}");
    use std::io::Write as _;
    std::io::stdout().flush()?;
    tracing::info!(%addr, catalog = study.engine().catalog().len(), "study service up");
    axum::serve(listener, serve::router(serve::AppState::new(Arc::clone(&study))))
        .with_graceful_shutdown(shutdown_signal())
        .await?;
    study.store().flush()?;
    tracing::info!(sessions = study.store().len(), "event log flushed; shutting down");
    Ok(())
}

async fn shutdown_signal() {
    let ctrl_c = async {
        tokio::signal::ctrl_c().await.expect("installing ctrl-c handler");
    };
    #[cfg(unix)]
    let term = async {
        tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate())
            .expect("installing SIGTERM handler")
            .recv()
            .await;
    };
    #[cfg(not(unix))]
    let term = std::future::pending::<()>();
    tokio::select! {
        _ = ctrl_c => {}
        _ = term => {}
    }
}
