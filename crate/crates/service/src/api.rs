//! HTTP API.
//!
//! | Method | Path | |
//! |---|---|---|
//! | GET | `/v1/detect?lat&lon[&scan]` | panels of the building at a point |
//! | POST | `/v1/scans` | start a scan of `{"bbox": {..}}` or `{"place": ".."}` |
//! | GET | `/v1/scans/{id}` | job state |
//! | GET | `/v1/scans/{id}/panels.geojson[?status]` | scan inventory |
//! | POST | `/v1/curation` | `{"scan", "operator", "decisions": [{"panel_id", "decision"}]}` |
//! | GET | `/v1/curation?scan` | decision log |
//! | GET | `/v1/profile?lat&lon\|place&area_m2\|scan[&tilt&azimuth]` | hourly CSV |
//! | GET | `/healthz` | liveness |
//!
//! Errors are `{"error": <message>, "stage": <stage>}`. The stage is the
//! pipeline stage that failed; problems with the request itself report
//! `queued`.

use std::collections::HashMap;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pvscan_core::detection::DetectionError;
use pvscan_core::geodata::GeodataError;
use pvscan_core::imagery::ImageryError;
use pvscan_core::inventory::{CurationDecision, InventoryError, StatusFilter};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

use crate::jobs::{run_job, JobError};
use crate::pipeline::{ErrorKind, PipelineError, ScanArea, Stage, DEFAULT_DETECT_SCAN};
use crate::profile::{get_profile, PanelArea, ProfileRequest, Site};
use crate::tmy::TmyFetchError;
use crate::App;

pub const GEOJSON: &str = "application/geo+json";

#[derive(Debug, Serialize)]
pub struct ApiError {
    #[serde(skip)]
    pub status: StatusCode,
    pub error: String,
    pub stage: Stage,
}

impl ApiError {
    fn request(status: StatusCode, error: impl Into<String>) -> Self {
        Self {
            status,
            error: error.into(),
            stage: Stage::Queued,
        }
    }

    fn bad_request(error: impl Into<String>) -> Self {
        Self::request(StatusCode::BAD_REQUEST, error)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(&self)).into_response()
    }
}

fn inventory_status(e: &InventoryError) -> StatusCode {
    match e {
        InventoryError::UnknownScan(_) => StatusCode::NOT_FOUND,
        InventoryError::ScanName(_) | InventoryError::Operator(_) | InventoryError::LogLine { .. } => StatusCode::BAD_REQUEST,
        InventoryError::Io { .. } | InventoryError::Malformed(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> Self {
        let status = match &e.kind {
            ErrorKind::NoBuilding { .. } => StatusCode::NOT_FOUND,
            ErrorKind::Geodata(GeodataError::NoMatch(_) | GeodataError::OversizeArea { .. } | GeodataError::Geometry(_)) => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorKind::Geodata(GeodataError::Service(_) | GeodataError::Malformed(_)) => StatusCode::BAD_GATEWAY,
            ErrorKind::Imagery(ImageryError::TileFetch { .. } | ImageryError::TileDecode { .. }) => StatusCode::BAD_GATEWAY,
            ErrorKind::Imagery(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorKind::Detection(DetectionError::Backend(_) | DetectionError::Schema { .. } | DetectionError::DimensionMismatch { .. }) => StatusCode::BAD_GATEWAY,
            ErrorKind::Detection(DetectionError::Script { .. }) => StatusCode::INTERNAL_SERVER_ERROR,
            ErrorKind::Georef(_) => StatusCode::BAD_GATEWAY,
            ErrorKind::Inventory(ie) => inventory_status(ie),
            ErrorKind::Tmy(TmyFetchError::Unavailable(_)) => StatusCode::SERVICE_UNAVAILABLE,
            ErrorKind::Tmy(TmyFetchError::Invalid(_)) => StatusCode::BAD_GATEWAY,
            ErrorKind::Model(_) | ErrorKind::Invalid(_) => StatusCode::BAD_REQUEST,
            ErrorKind::EmptyInventory(_) => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self {
            status,
            error: e.kind.to_string(),
            stage: e.stage,
        }
    }
}

impl From<InventoryError> for ApiError {
    fn from(e: InventoryError) -> Self {
        Self::request(inventory_status(&e), e.to_string())
    }
}

impl From<JobError> for ApiError {
    fn from(e: JobError) -> Self {
        let status = match e {
            JobError::UnknownJob(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::request(status, e.to_string())
    }
}

/// Runs blocking pipeline work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::request(StatusCode::INTERNAL_SERVER_ERROR, format!("worker panicked: {e}")))?
}

type Params = Query<HashMap<String, String>>;

fn num(params: &HashMap<String, String>, key: &str) -> Result<Option<f64>, ApiError> {
    params
        .get(key)
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| ApiError::bad_request(format!("query parameter {key}={v:?} is not a number")))
        })
        .transpose()
}

fn required(params: &HashMap<String, String>, key: &str) -> Result<f64, ApiError> {
    num(params, key)?.ok_or_else(|| ApiError::bad_request(format!("missing query parameter {key}")))
}

fn status_filter(params: &HashMap<String, String>) -> Result<StatusFilter, ApiError> {
    match params.get("status") {
        None => Ok(StatusFilter::All),
        Some(s) => s.parse().map_err(|e: String| ApiError::bad_request(e)),
    }
}

pub fn router(app: App) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/v1/detect", get(detect))
        .route("/v1/scans", post(start_scan))
        .route("/v1/scans/{id}", get(scan_status))
        .route("/v1/scans/{id}/panels.geojson", get(scan_panels))
        .route("/v1/curation", post(curate).get(curation_log))
        .route("/v1/profile", get(profile))
        .layer(CorsLayer::permissive())
        .with_state(app)
}

async fn detect(State(app): State<App>, Query(q): Params) -> Result<Response, ApiError> {
    let lat = required(&q, "lat")?;
    let lon = required(&q, "lon")?;
    let point = pvscan_core::GeoPoint::new(lat, lon).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let scan = q.get("scan").cloned().unwrap_or_else(|| DEFAULT_DETECT_SCAN.to_string());
    let body = blocking(move || Ok(app.pipeline.detect_building(point, &scan)?.to_geojson())).await?;
    Ok(([(header::CONTENT_TYPE, GEOJSON)], body).into_response())
}

#[derive(Debug, Deserialize)]
struct ScanRequest {
    #[serde(flatten)]
    area: ScanArea,
    scan: Option<String>,
}

async fn start_scan(State(app): State<App>, body: Bytes) -> Result<Response, ApiError> {
    let req: ScanRequest = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request(format!("expected {{\"bbox\": {{south, west, north, east}}}} or {{\"place\": name}}: {e}")))?;
    let job = blocking(move || {
        if let Some(s) = &req.scan {
            app.pipeline.inventory.panels_path(s)?;
        }
        let bbox = app.pipeline.resolve_area(&req.area)?;
        let job = app.jobs.create(req.area, bbox, req.scan, app.pipeline.clock.now())?;
        let id = job.id.clone();
        std::thread::spawn(move || {
            if let Err(e) = run_job(&app.pipeline, &app.jobs, &id) {
                log::error!("job {id}: {e}");
            }
        });
        Ok(job)
    })
    .await?;
    let location = format!("/v1/scans/{}", job.id);
    Ok((StatusCode::ACCEPTED, [(header::LOCATION, location)], Json(job)).into_response())
}

async fn scan_status(State(app): State<App>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let job = app.jobs.get(&id).ok_or_else(|| ApiError::request(StatusCode::NOT_FOUND, format!("job {id:?} not found")))?;
    Ok(Json(job).into_response())
}

/// `id` is a job id or, failing that, a scan name.
async fn scan_panels(State(app): State<App>, Path(id): Path<String>, Query(q): Params) -> Result<Response, ApiError> {
    let filter = status_filter(&q)?;
    let scan = match app.jobs.get(&id) {
        Some(job) => job.scan,
        None if app.pipeline.inventory.exists(&id) => id,
        None => return Err(ApiError::request(StatusCode::NOT_FOUND, format!("no job or scan named {id:?}"))),
    };
    let body = blocking(move || Ok(app.pipeline.inventory.load(&scan)?.to_geojson(filter))).await?;
    Ok(([(header::CONTENT_TYPE, GEOJSON)], body).into_response())
}

#[derive(Debug, Deserialize)]
struct CurationRequest {
    scan: String,
    #[serde(default = "default_operator")]
    operator: String,
    decisions: Vec<CurationDecision>,
}

fn default_operator() -> String {
    "anonymous".into()
}

async fn curate(State(app): State<App>, body: Bytes) -> Result<Response, ApiError> {
    let req: CurationRequest = serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("invalid curation request: {e}")))?;
    let report = blocking(move || Ok(app.pipeline.curate(&req.scan, &req.decisions, &req.operator)?)).await?;
    Ok(Json(report).into_response())
}

async fn curation_log(State(app): State<App>, Query(q): Params) -> Result<Response, ApiError> {
    let scan = q.get("scan").cloned().ok_or_else(|| ApiError::bad_request("missing query parameter scan"))?;
    let entries = blocking(move || {
        if !app.pipeline.inventory.exists(&scan) {
            return Err(InventoryError::UnknownScan(scan).into());
        }
        Ok(app.pipeline.inventory.read_log(&scan)?)
    })
    .await?;
    Ok(Json(entries).into_response())
}

pub fn profile_request(q: &HashMap<String, String>) -> Result<ProfileRequest, ApiError> {
    let site = match (num(q, "lat")?, num(q, "lon")?, q.get("place")) {
        (Some(lat), Some(lon), None) => Some(Site::Point { lat, lon }),
        (None, None, Some(place)) => Some(Site::Place(place.clone())),
        (None, None, None) => None,
        (Some(_), None, None) | (None, Some(_), None) => return Err(ApiError::bad_request("lat and lon must be given together")),
        _ => return Err(ApiError::bad_request("give either lat/lon or place, not both")),
    };
    let area = match (num(q, "area_m2")?, q.get("scan")) {
        (Some(a), None) => PanelArea::SquareMeters(a),
        (None, Some(s)) => PanelArea::FromScan(s.clone()),
        (None, None) => return Err(ApiError::bad_request("one of area_m2 or scan is required")),
        (Some(_), Some(_)) => return Err(ApiError::bad_request("give either area_m2 or scan, not both")),
    };
    Ok(ProfileRequest {
        site,
        area,
        tilt_deg: num(q, "tilt")?,
        azimuth_deg: num(q, "azimuth")?,
    })
}

async fn profile(State(app): State<App>, Query(q): Params) -> Result<Response, ApiError> {
    let req = profile_request(&q)?;
    let csv = blocking(move || Ok(get_profile(&app, &req)?.profile.to_csv())).await?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}
