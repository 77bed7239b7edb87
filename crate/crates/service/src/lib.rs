//! Live-match service and command-line pipeline around `chasepi-core`.
//!
//! The HTTP API keeps one session per chase. Overs are entered as they
//! finish and every reply carries the current PI, the prediction for the
//! next over and the zone recommendation. Appends to one session are
//! serialised by a per-session lock; reads of the model set never block.

pub mod api;
pub mod cli;
pub mod engine;
pub mod journal;
pub mod session;

pub use api::{router, ApiError, AppState, ErrorCode, SharedState};
pub use engine::{Engine, EngineConfig};
pub use session::{CreateSession, LiveSession, OverEntry, OverResponse, SessionView};

use std::net::SocketAddr;

/// Binds `addr` and serves until Ctrl-C.
pub async fn serve(state: SharedState, addr: SocketAddr) -> anyhow::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
