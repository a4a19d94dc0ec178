//! PlanGlow HTTP service: REST API over the core engine, versioned plan
//! storage, and the interaction-event log.

pub mod api;
pub mod config;
pub mod error;
pub mod events;
pub mod store;

use std::net::SocketAddr;

use thiserror::Error;

pub use api::{router, AppState};
pub use config::{Config, Engine, Mode};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Store(#[from] store::StoreError),
    #[error(transparent)]
    Events(#[from] events::EventError),
    #[error(transparent)]
    Config(#[from] config::ConfigError),
}

/// Serves the API on `addr` until Ctrl-C.
pub async fn serve(state: AppState, addr: SocketAddr) -> Result<(), ServiceError> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
