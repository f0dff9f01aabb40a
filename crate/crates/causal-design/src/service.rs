//! HTTP/JSON facade: datasets, discovery, graph editing, identification and
//! what-if estimation.

use std::fmt::Display;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use causal_design_core::baseline::{fit_baseline, naive_whatif, BoostParams};
use causal_design_core::dataset::{building_columns, default_schema, generate_dataset, ColumnSummary};
use causal_design_core::discovery::{ges_discover, GesConfig, OperatorRecord};
use causal_design_core::estimation::{
    estimate_effect, fit_scm, EffectEstimate, EstimationError, Expansion, FittedScm, NodeFitSummary, Scenario,
};
use causal_design_core::graph::{apply_knowledge, ExportFormat, GraphJson};
use causal_design_core::identify::{identify_estimand, Estimand, IdentifyError};
use causal_design_core::oracle::OracleConstants;
use causal_design_core::validation::{oracle_effect, relative_error, Summary};
use causal_design_core::{CausalGraph, ColumnDesc, GraphError, KnowledgeConstraints};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use crate::io;
use crate::store::{DatasetEntry, GraphEntry, Origin, Provenance, SessionStore};

/// Error body: `{"error": message, "field": name-or-null}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub message: String,
    pub field: Option<String>,
}

impl ApiError {
    fn not_found(kind: &str, id: &str) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            message: format!("unknown {kind} id {id}"),
            field: None,
        }
    }

    fn invalid(field: &str, err: impl Display) -> Self {
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            message: err.to_string(),
            field: Some(field.into()),
        }
    }

    fn conflict(field: &str, err: impl Display) -> Self {
        ApiError {
            status: StatusCode::CONFLICT,
            message: err.to_string(),
            field: Some(field.into()),
        }
    }

    fn internal(err: impl Display) -> Self {
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            message: err.to_string(),
            field: None,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message, "field": self.field }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Body parser that reports the offending field. An empty body reads as `{}`.
fn parse_body<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    let text: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { body };
    let mut de = serde_json::Deserializer::from_slice(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let msg = e.inner().to_string();
        // a missing field is reported against its parent: "missing field `n`"
        let missing = msg
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next());
        let field = match (path.as_str(), missing) {
            (".", Some(f)) => f.to_string(),
            (_, Some(f)) => format!("{path}.{f}"),
            (".", None) => "body".to_string(),
            _ => path,
        };
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            message: msg,
            field: Some(field),
        }
    })
}

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> ApiResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)?
}

fn graph_error(field: &str, e: GraphError) -> ApiError {
    match e {
        GraphError::Contradiction(_) | GraphError::Cycle(_) => ApiError::conflict(field, e),
        other => ApiError::invalid(field, other),
    }
}

fn identify_error(e: IdentifyError) -> ApiError {
    match &e {
        IdentifyError::Graph(GraphError::NotOriented) => ApiError::invalid("graph", e),
        IdentifyError::SameNode(_) => ApiError::invalid("outcome", e),
        _ => ApiError::invalid("treatment", e),
    }
}

fn estimation_error(e: EstimationError) -> ApiError {
    let field = match &e {
        EstimationError::PostTreatment { .. }
        | EstimationError::ConditionOnEndpoint { .. }
        | EstimationError::MissingConditions(_)
        | EstimationError::UnexpectedConditions => "scenario.conditions",
        EstimationError::OutOfBounds { .. } | EstimationError::PinnedTwice(_) => "scenario",
        EstimationError::NoSamples => "scenario.n_samples",
        EstimationError::Graph(_) => "graph",
        _ => "scenario",
    };
    ApiError::invalid(field, e)
}

fn dataset_entry(store: &SessionStore, id: &str) -> ApiResult<Arc<DatasetEntry>> {
    store.dataset(id).ok_or_else(|| ApiError::not_found("dataset", id))
}

fn graph_entry(store: &SessionStore, id: &str) -> ApiResult<Arc<GraphEntry>> {
    store.graph(id).ok_or_else(|| ApiError::not_found("graph", id))
}

// --- datasets ------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenerateSpec {
    n: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_noise")]
    noise: f64,
}

fn default_noise() -> f64 {
    0.005
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetRequest {
    generate: GenerateSpec,
}

#[derive(Debug, Serialize)]
pub struct DatasetResponse {
    pub dataset_id: String,
    pub origin: Origin,
    pub n: usize,
    pub schema: Vec<ColumnDesc>,
    pub summary: Vec<ColumnSummary>,
}

fn describe(id: String, e: &DatasetEntry) -> DatasetResponse {
    DatasetResponse {
        dataset_id: id,
        origin: e.origin.clone(),
        n: e.dataset.n(),
        schema: e.dataset.columns().to_vec(),
        summary: e.dataset.summary(),
    }
}

/// JSON `{generate: {n, seed, noise}}`, or a CSV upload with
/// `Content-Type: text/csv`.
async fn create_dataset(
    State(store): State<Arc<SessionStore>>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<DatasetResponse>)> {
    let is_csv = headers
        .get(header::CONTENT_TYPE)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.starts_with("text/csv"));
    let schema = default_schema();
    let entry = if is_csv {
        let ds = io::read_csv(&body[..], &schema).map_err(|e| ApiError::invalid("csv", e))?;
        DatasetEntry {
            dataset: ds,
            schema,
            origin: Origin::Uploaded,
        }
    } else {
        let req: DatasetRequest = parse_body(&body)?;
        let g = req.generate;
        let ds = blocking(move || {
            generate_dataset(&default_schema(), g.n, g.seed, g.noise).map_err(|e| ApiError::invalid("generate", e))
        })
        .await?;
        DatasetEntry {
            dataset: ds,
            schema,
            origin: Origin::Generated {
                n: g.n,
                seed: g.seed,
                noise: g.noise,
            },
        }
    };
    let resp = describe(String::new(), &entry);
    let id = store.insert_dataset(entry);
    Ok((StatusCode::CREATED, Json(DatasetResponse { dataset_id: id, ..resp })))
}

async fn get_dataset(State(store): State<Arc<SessionStore>>, Path(id): Path<String>) -> ApiResult<Json<DatasetResponse>> {
    let e = dataset_entry(&store, &id)?;
    Ok(Json(describe(id, &e)))
}

// --- discovery -----------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DiscoverRequest {
    penalty: Option<f64>,
    max_parents: Option<usize>,
    standardize: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct DiscoverResponse {
    pub graph_id: String,
    pub dataset_id: String,
    pub cpdag: CausalGraph,
    pub operator_log: Vec<OperatorRecord>,
    pub final_score: f64,
    pub config: GesConfig,
}

async fn discover(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<DiscoverResponse>)> {
    let entry = dataset_entry(&store, &id)?;
    let req: DiscoverRequest = parse_body(&body)?;
    let mut cfg = GesConfig::default();
    if let Some(p) = req.penalty {
        cfg.penalty_multiplier = p;
    }
    if let Some(m) = req.max_parents {
        cfg.max_parents = m;
    }
    if let Some(s) = req.standardize {
        cfg.standardize = s;
    }
    let report = blocking(move || ges_discover(&entry.dataset, &cfg).map_err(|e| ApiError::invalid("penalty", e))).await?;
    let resp = DiscoverResponse {
        graph_id: String::new(),
        dataset_id: id.clone(),
        cpdag: report.graph.clone(),
        operator_log: report.operators.clone(),
        final_score: report.final_score,
        config: report.config.clone(),
    };
    let graph_id = store.insert_graph(GraphEntry {
        dataset_id: id,
        graph: report.graph.clone(),
        provenance: Provenance::Discovered { report: Box::new(report) },
    });
    Ok((StatusCode::CREATED, Json(DiscoverResponse { graph_id, ..resp })))
}

// --- graphs --------------------------------------------------------------

#[derive(Debug, Serialize)]
pub struct GraphResponse {
    pub graph_id: String,
    pub dataset_id: String,
    pub parent_id: Option<String>,
    pub graph: CausalGraph,
}

async fn constrain(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<GraphResponse>)> {
    let entry = graph_entry(&store, &id)?;
    let k: KnowledgeConstraints = parse_body(&body)?;
    let graph = apply_knowledge(&entry.graph, &k).map_err(|e| graph_error("constraints", e))?;
    let graph_id = store.insert_graph(GraphEntry {
        dataset_id: entry.dataset_id.clone(),
        graph: graph.clone(),
        provenance: Provenance::Constrained {
            parent: id.clone(),
            constraints: k,
        },
    });
    Ok((
        StatusCode::CREATED,
        Json(GraphResponse {
            graph_id,
            dataset_id: entry.dataset_id.clone(),
            parent_id: Some(id),
            graph,
        }),
    ))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct UploadRequest {
    dataset_id: String,
    graph: CausalGraph,
}

/// Registers a hand-authored graph over a stored dataset's columns.
async fn upload_graph(State(store): State<Arc<SessionStore>>, body: Bytes) -> ApiResult<(StatusCode, Json<GraphResponse>)> {
    let req: UploadRequest = parse_body(&body)?;
    let d = dataset_entry(&store, &req.dataset_id)?;
    if let Some(missing) = req.graph.names().iter().find(|n| d.dataset.column_index(n).is_err()) {
        return Err(ApiError::invalid("graph", format!("node {missing} is not a dataset column")));
    }
    let graph_id = store.insert_graph(GraphEntry {
        dataset_id: req.dataset_id.clone(),
        graph: req.graph.clone(),
        provenance: Provenance::Uploaded,
    });
    Ok((
        StatusCode::CREATED,
        Json(GraphResponse {
            graph_id,
            dataset_id: req.dataset_id,
            parent_id: None,
            graph: req.graph,
        }),
    ))
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    let entry = graph_entry(&store, &id)?;
    match q.format.as_deref().unwrap_or("json") {
        "json" => Ok(Json(GraphJson::from(&entry.graph)).into_response()),
        "dot" => Ok((
            [(header::CONTENT_TYPE, "text/vnd.graphviz; charset=utf-8")],
            entry.graph.export(ExportFormat::Dot),
        )
            .into_response()),
        other => Err(ApiError::invalid("format", format!("unknown format {other} (dot | json)"))),
    }
}

#[derive(Debug, Serialize)]
struct VersionInfo {
    graph_id: String,
    dataset_id: String,
    parent_id: Option<String>,
    edges: usize,
    fully_directed: bool,
}

async fn list_graphs(State(store): State<Arc<SessionStore>>) -> Json<Vec<VersionInfo>> {
    Json(
        store
            .graphs()
            .into_iter()
            .map(|(id, g)| VersionInfo {
                graph_id: id,
                dataset_id: g.dataset_id.clone(),
                parent_id: g.parent().map(str::to_string),
                edges: g.graph.edge_count(),
                fully_directed: g.graph.is_fully_directed(),
            })
            .collect(),
    )
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IdentifyRequest {
    treatment: String,
    outcome: String,
}

async fn identify(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Estimand>> {
    let entry = graph_entry(&store, &id)?;
    let req: IdentifyRequest = parse_body(&body)?;
    let est = identify_estimand(&entry.graph, &req.treatment, &req.outcome).map_err(identify_error)?;
    Ok(Json(est))
}

// --- estimation ----------------------------------------------------------

fn default_oracle_samples() -> usize {
    200
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EstimateRequest {
    scenario: Scenario,
    #[serde(default)]
    expansion: Expansion,
    /// Also answer with the boosted-tree what-if.
    #[serde(default)]
    baseline: bool,
    /// Compare with paired oracle runs; generated datasets only.
    #[serde(default)]
    validate: bool,
    #[serde(default = "default_oracle_samples")]
    oracle_samples: usize,
    #[serde(default)]
    oracle_seed: u64,
}

#[derive(Debug, Serialize)]
pub struct EstimateResponse {
    pub graph_id: String,
    pub dataset_id: String,
    pub expansion: Expansion,
    pub estimand: Estimand,
    pub estimate: EffectEstimate,
    pub fit: Vec<NodeFitSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub baseline: Option<EffectEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<Summary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub causal_relative_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub naive_relative_error: Option<f64>,
}

fn fitted(store: &SessionStore, graph_id: &str, g: &GraphEntry, d: &DatasetEntry, x: Expansion) -> ApiResult<Arc<FittedScm>> {
    if let Some(m) = store.cached_scm(graph_id, x) {
        return Ok(m);
    }
    let scm = Arc::new(fit_scm(&d.dataset, &g.graph, x).map_err(estimation_error)?);
    store.cache_scm(graph_id, x, scm.clone());
    Ok(scm)
}

async fn estimate(
    State(store): State<Arc<SessionStore>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<EstimateResponse>> {
    let g = graph_entry(&store, &id)?;
    let req: EstimateRequest = parse_body(&body)?;
    let d = dataset_entry(&store, &g.dataset_id)?;
    if req.validate && !matches!(d.origin, Origin::Generated { .. }) {
        return Err(ApiError::invalid("validate", "oracle validation needs a generated dataset"));
    }
    let sc = req.scenario;
    let estimand = identify_estimand(&g.graph, &sc.treatment, &sc.outcome).map_err(identify_error)?;
    blocking(move || {
        let scm = fitted(&store, &id, &g, &d, req.expansion)?;
        let est = estimate_effect(&scm, &sc).map_err(estimation_error)?;
        let baseline = if req.baseline || req.validate {
            let key = format!("{}/{}", g.dataset_id, sc.outcome);
            let model = match store.cached_baseline(&key) {
                Some(m) => m,
                None => {
                    let m = fit_baseline(&d.dataset, &sc.outcome, &BoostParams::default())
                        .map_err(|e| ApiError::invalid("scenario.outcome", e))?;
                    let m = Arc::new(m);
                    store.cache_baseline(&key, m.clone());
                    m
                }
            };
            Some(naive_whatif(&model, &sc).map_err(|e| ApiError::invalid("scenario", e))?)
        } else {
            None
        };
        let oracle = if req.validate {
            let (s, _) = oracle_effect(&d.schema, &sc, req.oracle_samples, req.oracle_seed, &OracleConstants::default())
                .map_err(|e| ApiError::invalid("scenario", e))?;
            Some(s)
        } else {
            None
        };
        Ok(EstimateResponse {
            graph_id: id,
            dataset_id: g.dataset_id.clone(),
            expansion: req.expansion,
            causal_relative_error: oracle.as_ref().map(|o| relative_error(est.tau, o.mean)),
            naive_relative_error: match (&oracle, &baseline) {
                (Some(o), Some(b)) => Some(relative_error(b.tau, o.mean)),
                _ => None,
            },
            fit: scm.fit_summary(),
            estimand,
            estimate: est,
            baseline,
            oracle,
        })
    })
    .await
    .map(Json)
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

async fn schema() -> Json<Vec<ColumnDesc>> {
    Json(building_columns(&default_schema()))
}

/// The service routes. `cors_origin` limits cross-origin access to one
/// origin; `None` allows any.
pub fn router(store: Arc<SessionStore>, cors_origin: Option<HeaderValue>) -> Router {
    let cors = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    let cors = match cors_origin {
        Some(o) => cors.allow_origin(AllowOrigin::exact(o)),
        None => cors.allow_origin(Any),
    };
    Router::new()
        .route("/health", get(health))
        .route("/schema", get(schema))
        .route("/datasets", post(create_dataset))
        .route("/datasets/{id}", get(get_dataset))
        .route("/datasets/{id}/discover", post(discover))
        .route("/graphs", get(list_graphs).post(upload_graph))
        .route("/graphs/{id}", get(export))
        .route("/graphs/{id}/constraints", post(constrain))
        .route("/graphs/{id}/identify", post(identify))
        .route("/graphs/{id}/estimate", post(estimate))
        .layer(cors)
        .with_state(store)
}

pub async fn serve(addr: SocketAddr, store: Arc<SessionStore>, cors_origin: Option<HeaderValue>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(store, cors_origin))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
