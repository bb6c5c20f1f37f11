//! HTTP service that runs preference-guided reduction sessions: upload a
//! mesh, fetch four variants per iteration, rate them, repeat until the
//! rater is satisfied or the iteration cap is reached.
//!
//! State lives in an append-only event log under the data directory; on
//! startup the log is replayed and interrupted iterations are recomputed.

pub mod api;
pub mod config;
pub mod events;
pub mod store;

use std::net::SocketAddr;
use std::sync::Arc;

use tokio::net::TcpListener;

pub use api::{router, IterationView, SessionView, API_SCHEMA_VERSION};
pub use config::ServiceConfig;
pub use store::{Store, StoreError};

/// Replays the log in `config.data_dir`, resumes pending work and returns the
/// router.
pub async fn build(config: ServiceConfig) -> Result<(axum::Router, Arc<Store>), StoreError> {
    let store = Store::open(config)?;
    store.resume_pending().await;
    Ok((router(store.clone()), store))
}

/// Binds and serves until `shutdown` resolves.
pub async fn serve(
    config: ServiceConfig,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> Result<(), Box<dyn std::error::Error + Send + Sync>> {
    let listener = TcpListener::bind(SocketAddr::new(config.bind, config.port)).await?;
    let (app, _) = build(config).await?;
    println!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await?;
    Ok(())
}
