use std::io;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use archivesafe_core::solver::{self, CancelToken, SolverConfig};
use archivesafe_core::wrap::{self, Difficulty, PublicWrap};
use archivesafe_core::Error as CoreError;
use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::sync::{oneshot, Semaphore};

use crate::api::{ErrorBody, ErrorDetail, Health, SolveRequest, SolveResponse};

pub const CAP_ENV: &str = "ARCHIVESAFE_SOLVER_CAP";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServiceConfig {
    pub bind: SocketAddr,
    /// Largest difficulty the service will search.
    pub cap: u32,
    /// Solver threads shared by all in-flight requests.
    pub workers: usize,
    pub max_concurrent: usize,
    pub deadline: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: SocketAddr::from(([127, 0, 0, 1], 8787)),
            cap: 32,
            workers: solver::default_workers(),
            max_concurrent: 4,
            deadline: Duration::from_secs(300),
        }
    }
}

impl ServiceConfig {
    /// Replaces `cap` with `ARCHIVESAFE_SOLVER_CAP` when it is set.
    pub fn with_env_cap(mut self) -> io::Result<Self> {
        if let Ok(v) = std::env::var(CAP_ENV) {
            self.cap = v.trim().parse().map_err(|_| {
                io::Error::new(
                    io::ErrorKind::InvalidInput,
                    format!("{CAP_ENV}={v:?} is not an integer"),
                )
            })?;
        }
        Ok(self)
    }

    fn validate(&self) -> io::Result<()> {
        let invalid = |m: String| Err(io::Error::new(io::ErrorKind::InvalidInput, m));
        if self.cap > Difficulty::DEFAULT_MAX {
            return invalid(format!(
                "cap {} exceeds {}",
                self.cap,
                Difficulty::DEFAULT_MAX
            ));
        }
        if self.workers == 0 || self.max_concurrent == 0 {
            return invalid("workers and max_concurrent must be positive".into());
        }
        Ok(())
    }
}

/// Counters exposed for instrumentation.
#[derive(Debug, Default)]
pub struct Stats {
    pub requests: AtomicU64,
    pub rejected: AtomicU64,
    /// Requests that were handed to the solver.
    pub solver_invocations: AtomicU64,
}

struct AppState {
    cfg: ServiceConfig,
    limit: Arc<Semaphore>,
    active: Arc<AtomicUsize>,
    stats: Arc<Stats>,
}

pub fn router(cfg: ServiceConfig, stats: Arc<Stats>) -> Router {
    let state = AppState {
        limit: Arc::new(Semaphore::new(cfg.max_concurrent)),
        active: Arc::new(AtomicUsize::new(0)),
        cfg,
        stats,
    };
    Router::new()
        .route("/v1/solve", post(solve))
        .route("/v1/health", get(health))
        .with_state(Arc::new(state))
}

#[derive(Debug)]
struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn malformed(message: impl Into<String>) -> Self {
        Self {
            status: StatusCode::BAD_REQUEST,
            code: "MalformedRequest",
            message: message.into(),
        }
    }

    fn timeout(deadline: Duration) -> Self {
        Self {
            status: StatusCode::GATEWAY_TIMEOUT,
            code: "SolveTimeout",
            message: format!("no result within {deadline:?}"),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: ErrorDetail {
                code: self.code.into(),
                message: self.message,
            },
        };
        (self.status, Json(body)).into_response()
    }
}

async fn health(State(st): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        cap: st.cfg.cap,
        workers: st.cfg.workers,
    })
}

async fn solve(
    State(st): State<Arc<AppState>>,
    body: Result<Json<SolveRequest>, JsonRejection>,
) -> Result<Json<SolveResponse>, ApiError> {
    st.stats.requests.fetch_add(1, Ordering::Relaxed);
    let checked = body
        .map_err(|e| ApiError::malformed(e.body_text()))
        .and_then(|Json(req)| admit(&req, st.cfg.cap));
    let (public, cap) = match checked {
        Ok(v) => v,
        Err(e) => {
            st.stats.rejected.fetch_add(1, Ordering::Relaxed);
            return Err(e);
        }
    };

    let cancel = CancelToken::new();
    let deadline = st.cfg.deadline;
    let job = run(st.clone(), public, cap, cancel.clone());
    match tokio::time::timeout(deadline, job).await {
        Ok(result) => result,
        Err(_) => {
            cancel.cancel();
            Err(ApiError::timeout(deadline))
        }
    }
}

/// Schema and cap checks. Nothing that fails here reaches the solver.
fn admit(req: &SolveRequest, server_cap: u32) -> Result<(PublicWrap, u32), ApiError> {
    let public = req.to_public().map_err(ApiError::malformed)?;
    let cap = server_cap.min(req.max_difficulty);
    let d = public.difficulty();
    if d > cap {
        return Err(ApiError {
            status: StatusCode::FORBIDDEN,
            code: "DifficultyTooHigh",
            message: format!("difficulty {d} exceeds cap {cap}"),
        });
    }
    Ok((public, cap))
}

struct ActiveGuard(Arc<AtomicUsize>);

impl Drop for ActiveGuard {
    fn drop(&mut self) {
        self.0.fetch_sub(1, Ordering::SeqCst);
    }
}

async fn run(
    st: Arc<AppState>,
    public: PublicWrap,
    cap: u32,
    cancel: CancelToken,
) -> Result<Json<SolveResponse>, ApiError> {
    let permit = st
        .limit
        .clone()
        .acquire_owned()
        .await
        .expect("semaphore never closed");
    let active = st.active.fetch_add(1, Ordering::SeqCst) + 1;
    let guard = ActiveGuard(st.active.clone());
    let cfg = SolverConfig {
        workers: (st.cfg.workers / active).max(1),
        chunk: None,
        max_difficulty: cap,
    };
    st.stats.solver_invocations.fetch_add(1, Ordering::Relaxed);

    let started = Instant::now();
    // The permit and guard live until the search thread returns, even if the
    // request future is dropped on timeout.
    let task = tokio::task::spawn_blocking(move || {
        let r = wrap::recover_seed_cancellable(&public, &cfg, &cancel);
        drop((permit, guard));
        r
    });
    let outcome = task.await.map_err(|e| ApiError {
        status: StatusCode::INTERNAL_SERVER_ERROR,
        code: "Internal",
        message: e.to_string(),
    })?;

    match outcome {
        Ok(report) => Ok(Json(SolveResponse {
            seed: report.seed.to_hex(),
            candidates_tried: report.candidates_tried,
            elapsed_ms: u64::try_from(started.elapsed().as_millis()).unwrap_or(u64::MAX),
        })),
        Err(CoreError::ExhaustedNoSolution { candidates_tried }) => Err(ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: "NoSolution",
            message: format!("no seed matches after {candidates_tried} candidates"),
        }),
        Err(CoreError::Cancelled { .. }) => Err(ApiError::timeout(st.cfg.deadline)),
        Err(e) => Err(ApiError::malformed(e.to_string())),
    }
}

fn build_runtime() -> io::Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_io()
        .enable_time()
        .build()
}

/// Serves on the current thread until Ctrl-C.
pub fn serve(cfg: ServiceConfig, on_ready: impl FnOnce(SocketAddr)) -> io::Result<()> {
    cfg.validate()?;
    let rt = build_runtime()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(cfg.bind).await?;
        on_ready(listener.local_addr()?);
        let app = router(cfg, Arc::default());
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })
}

/// A server running on a background thread. Dropping it shuts the server down.
pub struct ServerHandle {
    addr: SocketAddr,
    stats: Arc<Stats>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<io::Result<()>>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn endpoint(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    pub fn shutdown(mut self) -> io::Result<()> {
        self.stop()
    }

    fn stop(&mut self) -> io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t
                .join()
                .unwrap_or_else(|_| Err(io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop();
    }
}

/// Binds `cfg.bind` (port 0 picks a free port) and serves in the background.
pub fn spawn(cfg: ServiceConfig) -> io::Result<ServerHandle> {
    cfg.validate()?;
    let rt = build_runtime()?;
    let listener = rt.block_on(tokio::net::TcpListener::bind(cfg.bind))?;
    let addr = listener.local_addr()?;
    let stats = Arc::new(Stats::default());
    let app = router(cfg, stats.clone());
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new()
        .name("archivesafe-service".into())
        .spawn(move || {
            rt.block_on(async move {
                axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await
            })
        })?;
    Ok(ServerHandle {
        addr,
        stats,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}
