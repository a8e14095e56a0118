use crate::AppState;
use axum::body::Bytes;
use axum::extract::rejection::QueryRejection;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::Json;
use parcel_forge::geometry::Envelope;
use parcel_forge::geoprocessing::{select, SpatialPredicate};
use parcel_forge::store::{feature_to_geojson, Layer};
use parcel_forge::{from_wkt, parse_title};
use serde::Deserialize;
use serde_json::{json, Value};
use std::collections::HashMap;

pub const DEFAULT_LIMIT: usize = 1000;
pub const MAX_LIMIT: usize = 10_000;

#[derive(Debug)]
pub(crate) struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: Option<String>,
}

impl ApiError {
    fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, code, message: Some(message.into()) }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.code });
        if let Some(m) = self.message {
            body["message"] = Value::String(m);
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn geojson(body: Value) -> Response {
    ([(header::CONTENT_TYPE, "application/geo+json")], body.to_string()).into_response()
}

fn crs_note(layer: &Layer) -> String {
    format!("coordinates in the layer CRS as stored: {}", layer.crs().describe())
}

fn layer<'a>(state: &'a AppState, params: &HashMap<String, String>) -> Result<&'a Layer, ApiError> {
    let name = params.get("layer").ok_or_else(|| ApiError::bad_request("missing_parameter", "layer is required"))?;
    state.catalog.layer(name).map_err(|e| ApiError::bad_request("unknown_layer", e.to_string()))
}

fn collection(layer: &Layer, ids: &[&str], matched: usize, page: Option<(usize, usize)>) -> Response {
    let features: Vec<Value> =
        ids.iter().map(|id| feature_to_geojson(layer, id, layer.get(id).expect("queried id is stored"))).collect();
    let mut body = json!({
        "type": "FeatureCollection",
        "crs_note": crs_note(layer),
        "number_matched": matched,
        "number_returned": features.len(),
        "features": features,
    });
    if let Some((limit, offset)) = page {
        body["limit"] = json!(limit);
        body["offset"] = json!(offset);
    }
    geojson(body)
}

pub(crate) async fn health(State(state): State<AppState>) -> Json<Value> {
    Json(json!({ "status": "ok", "version": state.catalog.version() }))
}

pub(crate) async fn layers(State(state): State<AppState>) -> Json<Value> {
    let entries: Vec<Value> = state
        .catalog
        .layers()
        .map(|l| json!({ "name": l.name(), "crs": l.crs().kind_name(), "feature_count": l.len() }))
        .collect();
    Json(Value::Array(entries))
}

fn parse_bbox(text: &str) -> Result<Envelope, ApiError> {
    let bad = |m: &str| ApiError::bad_request("bad_bbox", format!("bbox {text:?}: {m}"));
    let nums: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect::<Option<_>>()
        .ok_or_else(|| bad("expected four finite numbers"))?;
    match nums[..] {
        [a, b, c, d] => Envelope::try_new(a, b, c, d).map_err(|_| bad("min must not exceed max")),
        _ => Err(bad("expected minx,miny,maxx,maxy")),
    }
}

fn parse_count(params: &HashMap<String, String>, name: &str, default: usize) -> Result<usize, ApiError> {
    match params.get(name) {
        None => Ok(default),
        Some(s) => s
            .parse()
            .map_err(|_| ApiError::bad_request("bad_pagination", format!("{name} must be a non-negative integer"))),
    }
}

pub(crate) async fn parcels(
    State(state): State<AppState>,
    params: Result<Query<HashMap<String, String>>, QueryRejection>,
) -> ApiResult {
    let Query(params) = params.map_err(|e| ApiError::bad_request("bad_request", e.body_text()))?;
    let layer = layer(&state, &params)?;
    match (params.get("title"), params.get("bbox")) {
        (Some(title), None) => {
            let (key, _) = parse_title(title).map_err(|e| ApiError::bad_request("bad_title", e.to_string()))?;
            let id = *layer
                .find_title(&key)
                .first()
                .ok_or(ApiError { status: StatusCode::NOT_FOUND, code: "not_found", message: None })?;
            let mut feature = feature_to_geojson(layer, id, layer.get(id).expect("found id is stored"));
            feature["crs_note"] = Value::String(crs_note(layer));
            Ok(geojson(feature))
        }
        (None, Some(bbox)) => {
            let env = parse_bbox(bbox)?;
            let limit = parse_count(&params, "limit", DEFAULT_LIMIT)?;
            let offset = parse_count(&params, "offset", 0)?;
            if limit > MAX_LIMIT {
                return Err(ApiError::bad_request("bad_pagination", format!("limit may not exceed {MAX_LIMIT}")));
            }
            let ids = layer.bbox_query(&env);
            let page: Vec<&str> = ids.iter().skip(offset).take(limit).copied().collect();
            Ok(collection(layer, &page, ids.len(), Some((limit, offset))))
        }
        _ => Err(ApiError::bad_request("missing_parameter", "exactly one of title or bbox is required")),
    }
}

#[derive(Deserialize)]
pub(crate) struct QueryRequest {
    layer: String,
    predicate: String,
    wkt: String,
}

pub(crate) async fn query(State(state): State<AppState>, body: Bytes) -> ApiResult {
    let req: QueryRequest =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request("bad_request", e.to_string()))?;
    let layer = state.catalog.layer(&req.layer).map_err(|e| ApiError::bad_request("unknown_layer", e.to_string()))?;
    let predicate: SpatialPredicate = req
        .predicate
        .parse()
        .map_err(|_| ApiError::bad_request("unknown_predicate", format!("{:?} is not intersects, contains or within", req.predicate)))?;
    let geom = from_wkt(&req.wkt).map_err(|e| ApiError::bad_request("wkt_syntax", e.to_string()))?;
    let ids = select(layer, None, Some((predicate, &geom))).map_err(|e| ApiError::bad_request("bad_query", e.to_string()))?;
    let ids: Vec<&str> = ids.iter().map(String::as_str).collect();
    Ok(collection(layer, &ids, ids.len(), None))
}

pub(crate) async fn unknown_route() -> ApiError {
    ApiError { status: StatusCode::NOT_FOUND, code: "not_found", message: Some("no such endpoint".into()) }
}

pub(crate) async fn method_not_allowed() -> ApiError {
    ApiError { status: StatusCode::METHOD_NOT_ALLOWED, code: "method_not_allowed", message: None }
}
