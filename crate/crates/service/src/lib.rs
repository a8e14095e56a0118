//! Read-only HTTP consultation of a parcel store.
//!
//! The store is loaded once at startup and every request is answered from
//! that snapshot. Geometries are returned in the layer CRS; each GeoJSON body
//! carries a `crs_note` describing it.

mod api;

pub use api::{DEFAULT_LIMIT, MAX_LIMIT};

use axum::routing::{get, post};
use axum::Router;
use parcel_forge::store::{self, Catalog, StoreError};
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;
use thiserror::Error;
use tokio::net::TcpListener;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cannot listen on {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("server error: {0}")]
    Serve(#[source] std::io::Error),
}

#[derive(Clone)]
pub(crate) struct AppState {
    pub catalog: Arc<Catalog>,
}

pub fn router(catalog: Arc<Catalog>) -> Router {
    Router::new()
        .route("/health", get(api::health))
        .route("/layers", get(api::layers))
        .route("/parcels", get(api::parcels))
        .route("/query", post(api::query))
        .fallback(api::unknown_route)
        .method_not_allowed_fallback(api::method_not_allowed)
        .with_state(AppState { catalog })
}

/// Serves `catalog` on an already bound listener until ctrl-c.
pub async fn serve_on(listener: TcpListener, catalog: Arc<Catalog>) -> Result<(), ServiceError> {
    axum::serve(listener, router(catalog))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServiceError::Serve)
}

pub async fn bind(listen: &str) -> Result<(TcpListener, SocketAddr), ServiceError> {
    let bind_err = |source| ServiceError::Bind { addr: listen.to_string(), source };
    let listener = TcpListener::bind(listen).await.map_err(bind_err)?;
    let addr = listener.local_addr().map_err(bind_err)?;
    Ok((listener, addr))
}

/// Loads the store at `store_path` and serves it on `listen` (`host:port`).
pub async fn serve(store_path: &Path, listen: &str) -> Result<(), ServiceError> {
    let catalog = Arc::new(store::load(store_path)?);
    let (listener, _) = bind(listen).await?;
    serve_on(listener, catalog).await
}
