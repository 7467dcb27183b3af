use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::http::{header, HeaderValue, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::Router;

use super::Api;
use crate::error::{Error, Result};

#[derive(Clone)]
struct AppState {
    api: Arc<Api>,
    cors_origin: HeaderValue,
}

async fn dispatch(state: axum::extract::State<AppState>, method: Method, uri: Uri, body: Bytes) -> Response {
    let mut resp = if method == Method::OPTIONS {
        StatusCode::NO_CONTENT.into_response()
    } else {
        let target = uri.path_and_query().map_or(uri.path(), |pq| pq.as_str()).to_owned();
        let api = state.api.clone();
        let out = tokio::task::spawn_blocking(move || api.handle(method.as_str(), &target, &body))
            .await
            .expect("handler does not panic");
        let status = StatusCode::from_u16(out.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, [(header::CONTENT_TYPE, "application/json")], out.body).into_response()
    };
    let h = resp.headers_mut();
    h.insert(header::ACCESS_CONTROL_ALLOW_ORIGIN, state.cors_origin.clone());
    h.insert(header::ACCESS_CONTROL_ALLOW_METHODS, HeaderValue::from_static("GET, POST, OPTIONS"));
    h.insert(header::ACCESS_CONTROL_ALLOW_HEADERS, HeaderValue::from_static("content-type"));
    resp
}

/// Every request goes to [`Api::handle`], with CORS headers added.
pub fn router(api: Arc<Api>, cors_origin: &str) -> Result<Router> {
    let cors_origin = HeaderValue::from_str(cors_origin).map_err(|_| Error::Config(format!("invalid cors_origin `{cors_origin}`")))?;
    Ok(Router::new().fallback(dispatch).with_state(AppState { api, cors_origin }))
}

pub async fn serve(api: Arc<Api>, addr: SocketAddr, cors_origin: &str) -> Result<()> {
    let app = router(api, cors_origin)?;
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| Error::io(addr.to_string(), e))?;
    log::info!("listening on http://{}", listener.local_addr().map_err(|e| Error::io(addr.to_string(), e))?);
    axum::serve(listener, app).await.map_err(|e| Error::io(addr.to_string(), e))
}
