//! HTTP service over one loaded tree (and optionally its data set) for the
//! browser explorer.
//!
//! | route | answer |
//! |---|---|
//! | `GET /api/tree` | tree document |
//! | `GET /api/points?stride=s` | every `s`-th point with its density |
//! | `GET /api/node/{id}/members?level=λ` or `?mass=m` | node members at that level |
//! | `POST /api/cluster` | labeling document for a [`ClusterRequest`] |
//! | `GET /api/modefunction?grid=g` | live node counts on a `g`-point mass grid |
//!
//! Errors come back as `{"error": {"code", "message"}}` with status 404 for
//! unknown nodes and 422 for invalid parameters or unachievable K.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use levelset::pipeline::DatasetMetric;
use levelset::stability::{mass_grid, mode_function, DEFAULT_GRID_POINTS};
use levelset::{ClusterRequest, Dataset64, Error, LevelSetTree64};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};
use tower_http::services::ServeDir;

/// Member lists longer than this are sent as index ranges.
pub const RLE_THRESHOLD: usize = 100_000;

/// Immutable tree and data plus the labeling cache.
pub struct Session {
    tree: LevelSetTree64,
    data: Option<Dataset64>,
    cutoff: f64,
    tree_json: Arc<str>,
    labelings: RwLock<HashMap<String, Arc<str>>>,
}

impl Session {
    /// `data`, when given, must hold the items the tree was built on.
    pub fn new(tree: LevelSetTree64, data: Option<Dataset64>, cutoff: f64) -> Result<Self, Error> {
        if let Some(d) = &data {
            if d.len() != tree.n() {
                return Err(Error::InvalidInput(format!(
                    "the tree covers {} items but the data set has {}",
                    tree.n(),
                    d.len()
                )));
            }
        }
        let tree_json = tree.to_json().into();
        Ok(Self {
            tree,
            data,
            cutoff,
            tree_json,
            labelings: RwLock::new(HashMap::new()),
        })
    }

    pub fn tree(&self) -> &LevelSetTree64 {
        &self.tree
    }

    /// Labeling JSON for `request`, computed at most once per distinct request
    /// (modulo races, which settle on the first stored value).
    pub fn labeling(&self, request: &ClusterRequest) -> Result<Arc<str>, Error> {
        let key = serde_json::to_string(request).expect("requests serialize");
        if let Some(hit) = self.labelings.read().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let metric = self.data.as_ref().map(|data| DatasetMetric {
            data,
            cutoff: self.cutoff,
        });
        let text: Arc<str> = request.run(&self.tree, metric.as_ref())?.to_json().into();
        let mut cache = self.labelings.write().expect("cache lock");
        Ok(cache.entry(key).or_insert(text).clone())
    }
}

struct ApiError(StatusCode, &'static str, String);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::NotFound(_) => StatusCode::NOT_FOUND,
            Error::InvalidInput(_) | Error::UnachievableK { .. } | Error::Parse { .. } | Error::Unsupported(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            Error::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": { "code": self.1, "message": self.2 } });
        (self.0, Json(body)).into_response()
    }
}

fn invalid(message: impl Into<String>) -> ApiError {
    Error::InvalidInput(message.into()).into()
}

fn json_text(body: Arc<str>) -> Response {
    (
        [(header::CONTENT_TYPE, HeaderValue::from_static("application/json"))],
        body.to_string(),
    )
        .into_response()
}

type Shared = State<Arc<Session>>;

async fn tree(State(s): Shared) -> Response {
    json_text(s.tree_json.clone())
}

#[derive(Deserialize)]
struct PointsQuery {
    stride: Option<usize>,
}

#[derive(Serialize)]
struct PointsBody<'a> {
    kind: &'static str,
    n: usize,
    stride: usize,
    dim: usize,
    indices: Vec<usize>,
    /// Point coordinates, or the two endpoints of each fiber.
    coords: Vec<&'a [f64]>,
    density: Vec<f64>,
}

async fn points(State(s): Shared, Query(q): Query<PointsQuery>) -> Result<Response, ApiError> {
    let stride = q.stride.unwrap_or(1);
    if stride == 0 {
        return Err(invalid("stride must be at least 1"));
    }
    let data = s
        .data
        .as_ref()
        .ok_or_else(|| invalid("the server was started without a data set"))?;
    let indices: Vec<usize> = (0..data.len()).step_by(stride).collect();
    let density = indices.iter().map(|&i| s.tree.density_values()[i]).collect();
    let endpoints;
    let (kind, dim, coords): (_, _, Vec<&[f64]>) = match data {
        Dataset64::Points(p) => ("points", p.dim(), indices.iter().map(|&i| p.point(i)).collect()),
        Dataset64::Fibers(f) => {
            endpoints = f.endpoints();
            let e = &endpoints;
            ("fibers", 6, indices.iter().map(|&i| &e.as_flat()[6 * i..6 * i + 6]).collect())
        }
    };
    let body = PointsBody {
        kind,
        n: data.len(),
        stride,
        dim,
        indices,
        coords,
        density,
    };
    Ok(Json(body).into_response())
}

#[derive(Deserialize)]
struct MembersQuery {
    level: Option<f64>,
    mass: Option<f64>,
}

/// Half-open `[start, end)` runs covering `sorted`.
pub fn index_ranges(sorted: &[usize]) -> Vec<[usize; 2]> {
    let mut out: Vec<[usize; 2]> = Vec::new();
    for &i in sorted {
        match out.last_mut() {
            Some(r) if r[1] == i => r[1] += 1,
            _ => out.push([i, i + 1]),
        }
    }
    out
}

async fn members(
    State(s): Shared,
    Path(id): Path<usize>,
    Query(q): Query<MembersQuery>,
) -> Result<Response, ApiError> {
    let node = s.tree.query_node(id)?;
    let level = match (q.level, q.mass) {
        (Some(_), Some(_)) => return Err(invalid("give level or mass, not both")),
        (Some(level), None) => level,
        (None, Some(mass)) => {
            if !(0.0..=1.0).contains(&mass) {
                return Err(invalid(format!("mass must lie in [0, 1], got {mass}")));
            }
            s.tree
                .level_of_mass(mass)
                .ok_or_else(|| invalid(format!("no item lies above mass {mass}")))?
        }
        (None, None) => node.start_level,
    };
    let members = s.tree.members_at(id, level)?;
    let body = if members.len() > RLE_THRESHOLD {
        json!({ "id": id, "level": level, "count": members.len(), "ranges": index_ranges(&members) })
    } else {
        json!({ "id": id, "level": level, "count": members.len(), "members": members })
    };
    Ok(Json(body).into_response())
}

async fn cluster(State(s): Shared, body: String) -> Result<Response, ApiError> {
    let request: ClusterRequest = serde_json::from_str(&body).map_err(Error::from)?;
    let text = tokio::task::spawn_blocking(move || s.labeling(&request))
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(json_text(text))
}

#[derive(Deserialize)]
struct GridQuery {
    grid: Option<usize>,
}

async fn modefunction(State(s): Shared, Query(q): Query<GridQuery>) -> Result<Response, ApiError> {
    let points = q.grid.unwrap_or(DEFAULT_GRID_POINTS);
    if points == 0 || points > 1_000_000 {
        return Err(invalid("grid must be between 1 and 1000000"));
    }
    let grid = mass_grid(points);
    let count = mode_function(&s.tree, &grid);
    Ok(Json(json!({ "mass": grid, "count": count })).into_response())
}

fn local_origin(origin: &HeaderValue) -> bool {
    let Ok(o) = origin.to_str() else { return false };
    ["http://localhost", "http://127.0.0.1", "http://[::1]"]
        .iter()
        .any(|p| o == *p || o.strip_prefix(p).is_some_and(|rest| rest.starts_with(':')))
}

/// All API routes; static assets under `static_dir` answer every other path.
pub fn router(session: Arc<Session>, static_dir: Option<PathBuf>) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(AllowOrigin::predicate(|origin, _| local_origin(origin)))
        .allow_methods(Any)
        .allow_headers(Any);
    let api = Router::new()
        .route("/api/tree", get(tree))
        .route("/api/points", get(points))
        .route("/api/node/{id}/members", get(members))
        .route("/api/cluster", post(cluster))
        .route("/api/modefunction", get(modefunction))
        .with_state(session);
    let app = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.layer(cors)
}

/// Binds `addr` and serves until the process ends.
pub async fn serve(session: Session, addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(address = %listener.local_addr()?, "explorer listening");
    axum::serve(listener, router(Arc::new(session), static_dir)).await
}
