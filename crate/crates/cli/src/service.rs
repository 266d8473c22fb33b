//! HTTP facade: execute, infer, edit, deform, and browse stored assets.
//!
//! The library lives behind an `Arc` snapshot that handlers clone on entry;
//! replacing it swaps the pointer, so in-flight requests keep the version
//! they started with.

use std::convert::Infallible;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::Stream;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::{mpsc, Semaphore};
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use shapekit::deform::{deform_by_programs, load_obj, save_obj, DeformError};
use shapekit::interpreter::{execute_program, ExecLimits};
use shapekit::llm::{diff_summary, stage_edit, LlmError, Provider, ProviderError, ProviderSpec};
use shapekit::search::{infer_program, Progress, SamplerSet, SearchBudget, TargetObservation};
use shapekit::shapescript::{parse_program, print_function, print_library, Library};
use shapekit::validation::LabelVoter;
use shapekit::PipelineConfig;

use crate::cli::ServeArgs;
use crate::commands::Ctx;
use crate::error::{CliError, CliResult};
use crate::inputs::{load_library, load_sampler_set, load_voter};
use crate::views::layout_view;

/// Everything derived from one library load.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub library: Library,
    pub samplers: Option<SamplerSet>,
    pub voter: Option<LabelVoter>,
}

pub struct AppState {
    snapshot: RwLock<Arc<Snapshot>>,
    provider: Option<Arc<dyn Provider>>,
    data_dir: PathBuf,
    config: PipelineConfig,
    jobs: Arc<Semaphore>,
}

impl AppState {
    pub fn new(
        snapshot: Snapshot,
        provider: Option<Arc<dyn Provider>>,
        data_dir: PathBuf,
        config: PipelineConfig,
        max_jobs: usize,
    ) -> Self {
        AppState {
            snapshot: RwLock::new(Arc::new(snapshot)),
            provider,
            data_dir,
            config,
            jobs: Arc::new(Semaphore::new(max_jobs.max(1))),
        }
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.snapshot
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .clone()
    }

    /// Replace the library; requests already running keep the old one.
    pub fn swap(&self, next: Snapshot) -> Arc<Snapshot> {
        let mut guard = self.snapshot.write().unwrap_or_else(|e| e.into_inner());
        std::mem::replace(&mut *guard, Arc::new(next))
    }
}

/// An error with its HTTP status.
#[derive(Debug)]
pub struct ApiError(pub StatusCode, pub CliError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1.to_json())).into_response()
    }
}

impl<E: Into<CliError>> From<E> for ApiError {
    fn from(e: E) -> Self {
        ApiError(StatusCode::BAD_REQUEST, e.into())
    }
}

fn status(code: StatusCode, e: impl Into<CliError>) -> ApiError {
    ApiError(code, e.into())
}

fn not_found(what: &str, name: &str) -> ApiError {
    ApiError(
        StatusCode::NOT_FOUND,
        CliError::new("NotFound", format!("no {what} named `{name}`"), 1),
    )
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: Arc<AppState>, cors_origin: Option<&str>) -> Router {
    let origin = match cors_origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(o) => AllowOrigin::exact(o),
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods(Any)
        .allow_headers(Any);
    Router::new()
        .route("/library", get(get_library))
        .route("/execute", post(execute))
        .route("/infer", post(infer))
        .route("/edit", post(edit))
        .route("/deform", post(deform))
        .route("/shapes", get(list_shapes))
        .route("/shapes/{name}", get(get_shape))
        .route("/programs", get(list_programs))
        .route("/programs/{name}", get(get_program).put(put_program))
        .route("/meshes", get(list_meshes))
        .route("/meshes/{name}", get(get_mesh))
        .layer(cors)
        .with_state(state)
}

async fn get_library(State(st): State<Arc<AppState>>) -> Json<Value> {
    let snap = st.snapshot();
    let functions: Vec<Value> = snap
        .library
        .functions
        .values()
        .map(|f| {
            json!({
                "name": f.name,
                "signature": print_function(&f.signature_only()).trim_end(),
                "doc": f.doc,
            })
        })
        .collect();
    Json(json!({
        "functions": functions,
        "interface": print_library(&snap.library.interface()),
        "source": print_library(&snap.library),
        "samplers": snap.samplers.as_ref().map(|s| s.samplers.len()).unwrap_or(0),
    }))
}

#[derive(Debug, Deserialize)]
pub struct ProgramBody {
    pub program: String,
}

async fn execute(
    State(st): State<Arc<AppState>>,
    Json(body): Json<ProgramBody>,
) -> ApiResult<Value> {
    let snap = st.snapshot();
    let prog = parse_program(&body.program, &snap.library)?;
    let ex = execute_program(&snap.library, &prog, &ExecLimits::default())?;
    Ok(Json(
        serde_json::to_value(layout_view(&ex, snap.voter.as_ref())).expect("serializable"),
    ))
}

#[derive(Debug, Deserialize)]
pub struct InferBody {
    #[serde(flatten)]
    pub target: TargetObservation,
    #[serde(default)]
    pub budget: Option<SearchBudget>,
}

#[derive(Debug, Default, Deserialize)]
pub struct InferQuery {
    #[serde(default)]
    pub stream: bool,
}

#[derive(Debug, Serialize)]
struct InferReply {
    program: String,
    score: f64,
    scores: shapekit::search::ReconstructionMetrics,
    samples: usize,
    merges: usize,
    seed: u64,
    timed_out: bool,
}

async fn infer(
    State(st): State<Arc<AppState>>,
    Query(q): Query<InferQuery>,
    Json(body): Json<InferBody>,
) -> Result<Response, ApiError> {
    let snap = st.snapshot();
    let Some(samplers) = snap.samplers.clone() else {
        return Err(ApiError(
            StatusCode::SERVICE_UNAVAILABLE,
            CliError::new("NoSamplers", "the service was started without samplers", 1),
        ));
    };
    let budget = body
        .budget
        .unwrap_or_else(|| SearchBudget::from_config(&st.config, 0));
    let cfg = st.config.clone();
    let permit = st
        .jobs
        .clone()
        .acquire_owned()
        .await
        .expect("semaphore never closes");
    let (tx, rx) = mpsc::unbounded_channel::<Event>();
    let job = tokio::task::spawn_blocking(move || {
        let _permit = permit;
        let report = |p: &Progress| {
            let _ = tx.send(
                Event::default()
                    .event("progress")
                    .json_data(p)
                    .expect("serializable"),
            );
        };
        let out = infer_program(
            &body.target,
            &samplers,
            &snap.library,
            &budget,
            &cfg,
            Some(&report),
        );
        let reply = out.map(|r| InferReply {
            program: r.program,
            score: r.score,
            scores: r.metrics,
            samples: r.samples,
            merges: r.merges,
            seed: r.seed,
            timed_out: r.timed_out,
        });
        let last = match &reply {
            Ok(r) => Event::default().event("result").json_data(r),
            Err(e) => Event::default()
                .event("error")
                .json_data(CliError::from(e.clone()).to_json()),
        };
        let _ = tx.send(last.expect("serializable"));
        reply
    });
    if q.stream {
        return Ok(Sse::new(event_stream(rx))
            .keep_alive(KeepAlive::default())
            .into_response());
    }
    drop(rx);
    let reply = job.await.map_err(|e| {
        status(
            StatusCode::INTERNAL_SERVER_ERROR,
            CliError::new("Internal", e.to_string(), 1),
        )
    })?;
    Ok(Json(reply?).into_response())
}

fn event_stream(
    rx: mpsc::UnboundedReceiver<Event>,
) -> impl Stream<Item = Result<Event, Infallible>> {
    futures::stream::unfold(
        rx,
        |mut rx| async move { rx.recv().await.map(|e| (Ok(e), rx)) },
    )
}

#[derive(Debug, Deserialize)]
pub struct EditBody {
    pub program: String,
    pub request: String,
}

fn provider_status(e: &LlmError) -> StatusCode {
    match e {
        LlmError::Provider(ProviderError::Unreachable(_)) => StatusCode::SERVICE_UNAVAILABLE,
        LlmError::Provider(_) => StatusCode::BAD_GATEWAY,
        LlmError::EmptyRequest => StatusCode::BAD_REQUEST,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    }
}

async fn edit(State(st): State<Arc<AppState>>, Json(body): Json<EditBody>) -> ApiResult<Value> {
    let snap = st.snapshot();
    let Some(provider) = st.provider.clone() else {
        return Err(ApiError(
            StatusCode::SERVICE_UNAVAILABLE,
            CliError::new(
                "ProviderUnavailable",
                "the service was started without a provider",
                1,
            ),
        ));
    };
    let prog = parse_program(&body.program, &snap.library)?;
    let edited = tokio::task::spawn_blocking(move || {
        stage_edit(&prog, &body.request, &snap.library, provider.as_ref()).map(|e| (prog, e))
    })
    .await
    .map_err(|e| {
        status(
            StatusCode::INTERNAL_SERVER_ERROR,
            CliError::new("Internal", e.to_string(), 1),
        )
    })?;
    match edited {
        Ok((before, after)) => Ok(Json(json!({
            "program": shapekit::shapescript::print_program(&after),
            "diff": diff_summary(&before, &after),
        }))),
        Err(f) => Err(ApiError(provider_status(&f.error), f.error.into())),
    }
}

/// Asset names are plain file stems.
fn asset_name(name: &str) -> Result<&str, ApiError> {
    let ok = !name.is_empty()
        && name.len() <= 128
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c))
        && !name.starts_with('.');
    if ok {
        Ok(name)
    } else {
        Err(ApiError(
            StatusCode::BAD_REQUEST,
            CliError::new("InvalidName", format!("bad asset name `{name}`"), 1),
        ))
    }
}

#[derive(Debug, Deserialize)]
pub struct DeformBody {
    pub mesh: String,
    pub program_a: String,
    pub program_b: String,
    #[serde(default)]
    pub save_as: Option<String>,
}

async fn deform(State(st): State<Arc<AppState>>, Json(body): Json<DeformBody>) -> ApiResult<Value> {
    let snap = st.snapshot();
    let name = asset_name(&body.mesh)?.to_string();
    let out_name = match &body.save_as {
        Some(n) => asset_name(n)?.to_string(),
        None => format!("{name}.deformed"),
    };
    let a = parse_program(&body.program_a, &snap.library)?;
    let b = parse_program(&body.program_b, &snap.library)?;
    let meshes = st.data_dir.join("meshes");
    let src = meshes.join(format!("{name}.obj"));
    if !src.is_file() {
        return Err(not_found("mesh", &name));
    }
    let dst = meshes.join(format!("{out_name}.obj"));
    let result = tokio::task::spawn_blocking(move || -> Result<_, DeformError> {
        let mesh = load_obj(&src)?;
        let moved = deform_by_programs(&mesh, &snap.library, &a, &b, &ExecLimits::default())?;
        save_obj(&moved, &dst)?;
        let max = mesh
            .vertices
            .iter()
            .zip(&moved.vertices)
            .map(|(p, q)| p.distance(*q))
            .fold(0.0, f64::max);
        Ok((moved.vertices.len(), moved.faces.len(), max))
    })
    .await
    .map_err(|e| {
        status(
            StatusCode::INTERNAL_SERVER_ERROR,
            CliError::new("Internal", e.to_string(), 1),
        )
    })?;
    match result {
        Ok((v, f, max)) => Ok(Json(json!({
            "mesh": out_name, "vertices": v, "faces": f, "max_displacement": max,
        }))),
        Err(e @ (DeformError::LayoutMismatch { .. } | DeformError::StructureChanged { .. })) => {
            Err(status(StatusCode::CONFLICT, e))
        }
        Err(e @ DeformError::Io(_)) => Err(status(StatusCode::INTERNAL_SERVER_ERROR, e)),
        Err(e) => Err(status(StatusCode::BAD_REQUEST, e)),
    }
}

fn list_dir(dir: &Path, ext: &str) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .map(|rd| {
            rd.filter_map(|e| e.ok())
                .filter_map(|e| {
                    let p = e.path();
                    (p.extension().and_then(|x| x.to_str()) == Some(ext))
                        .then(|| p.file_stem()?.to_str().map(String::from))
                        .flatten()
                })
                .collect()
        })
        .unwrap_or_default();
    names.sort();
    names
}

fn read_asset(st: &AppState, kind: &str, ext: &str, name: &str) -> Result<String, ApiError> {
    let name = asset_name(name)?;
    let path = st.data_dir.join(kind).join(format!("{name}.{ext}"));
    std::fs::read_to_string(&path).map_err(|_| not_found(kind.trim_end_matches('s'), name))
}

async fn list_shapes(State(st): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({ "shapes": list_dir(&st.data_dir.join("shapes"), "json") }))
}

async fn get_shape(
    State(st): State<Arc<AppState>>,
    UrlPath(name): UrlPath<String>,
) -> ApiResult<Value> {
    let text = read_asset(&st, "shapes", "json", &name)?;
    Ok(Json(serde_json::from_str(&text)?))
}

async fn list_programs(State(st): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({ "programs": list_dir(&st.data_dir.join("programs"), "ss") }))
}

async fn get_program(
    State(st): State<Arc<AppState>>,
    UrlPath(name): UrlPath<String>,
) -> ApiResult<Value> {
    let text = read_asset(&st, "programs", "ss", &name)?;
    Ok(Json(json!({ "name": name, "program": text })))
}

/// Explicit save; the program must check against the current library.
async fn put_program(
    State(st): State<Arc<AppState>>,
    UrlPath(name): UrlPath<String>,
    Json(body): Json<ProgramBody>,
) -> ApiResult<Value> {
    let name = asset_name(&name)?.to_string();
    let snap = st.snapshot();
    let prog = parse_program(&body.program, &snap.library)?;
    let dir = st.data_dir.join("programs");
    let text = shapekit::shapescript::print_program(&prog);
    std::fs::create_dir_all(&dir)
        .and_then(|_| std::fs::write(dir.join(format!("{name}.ss")), &text))
        .map_err(|e| status(StatusCode::INTERNAL_SERVER_ERROR, CliError::io(&dir, e)))?;
    Ok(Json(json!({ "name": name, "program": text })))
}

async fn list_meshes(State(st): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({ "meshes": list_dir(&st.data_dir.join("meshes"), "obj") }))
}

async fn get_mesh(
    State(st): State<Arc<AppState>>,
    UrlPath(name): UrlPath<String>,
) -> Result<Response, ApiError> {
    let text = read_asset(&st, "meshes", "obj", &name)?;
    Ok(([(axum::http::header::CONTENT_TYPE, "text/plain")], text).into_response())
}

/// Build the state a `serve` invocation describes.
pub fn state_from_args(ctx: &Ctx, a: &ServeArgs) -> CliResult<AppState> {
    let library = load_library(&a.lib)?;
    let samplers = a
        .samplers
        .as_deref()
        .map(|p| load_sampler_set(p, &library, a.frame.as_deref()))
        .transpose()?;
    let voter = a.voter.as_deref().map(load_voter).transpose()?;
    let provider: Option<Arc<dyn Provider>> = match &a.provider {
        Some(spec) => {
            let spec: ProviderSpec = spec.parse()?;
            let record = a.data_dir.join("transcripts").join("service.jsonl");
            if matches!(spec, ProviderSpec::Live(_)) {
                std::fs::create_dir_all(record.parent().expect("has parent"))
                    .map_err(|e| CliError::io(&record, e))?;
            }
            Some(Arc::from(spec.build(Some(&record))?))
        }
        None => None,
    };
    Ok(AppState::new(
        Snapshot {
            library,
            samplers,
            voter,
        },
        provider,
        a.data_dir.clone(),
        ctx.config.clone(),
        a.max_jobs,
    ))
}

pub fn serve_blocking(ctx: &Ctx, a: &ServeArgs) -> CliResult<()> {
    let state = Arc::new(state_from_args(ctx, a)?);
    let app = router(state, a.cors_origin.as_deref());
    let addr = format!("{}:{}", a.bind, a.port);
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::io(Path::new("<runtime>"), e))?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::io(Path::new(&addr), e))?;
        log::info!("listening on http://{addr}");
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .map_err(|e| CliError::io(Path::new(&addr), e))
    })
}
