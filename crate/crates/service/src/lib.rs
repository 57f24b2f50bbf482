//! HTTP and websocket API over timed teaching sessions.
//!
//! Every participant action is serialized per session, appended to the
//! session store before the response is sent, and broadcast to any
//! websocket subscribers.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::ws::{Message as WsMessage, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use adapt_core::harness::{human_conditions, FunctionStudent};
use adapt_core::llm::{system_clock, ChatTransport, LlmError};
use adapt_core::session::{
    Message, Session, SessionContext, SessionError, SessionPolicy, SessionSpec, SessionStatus,
    SessionStore, SessionView, WugGuess,
};

pub type Clock = Arc<dyn Fn() -> u64 + Send + Sync>;

struct Slot {
    session: Mutex<Session>,
    updates: broadcast::Sender<Update>,
}

/// Shared server state.
#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    ctx: SessionContext,
    store: Mutex<SessionStore>,
    sessions: Mutex<HashMap<String, Arc<Slot>>>,
    transport: Option<Arc<dyn ChatTransport>>,
    clock: Clock,
    next_id: AtomicU64,
}

/// Pushed to websocket subscribers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Update {
    /// New teacher turns.
    Teacher {
        messages: Vec<Message>,
        question: Option<i32>,
        remaining_ms: u64,
    },
    Tick {
        remaining_ms: u64,
    },
    Status {
        status: SessionStatus,
    },
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("no session {id}"))
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::UnknownCondition(_)
            | SessionError::UnparseablePrediction(_)
            | SessionError::EmptyGuess => StatusCode::UNPROCESSABLE_ENTITY,
            SessionError::Expired
            | SessionError::NotActive(_)
            | SessionError::NoQuestion
            | SessionError::NotFinished => StatusCode::CONFLICT,
            SessionError::ModelUnavailable => StatusCode::SERVICE_UNAVAILABLE,
            SessionError::Llm(LlmError::Transport(_)) => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

impl AppState {
    /// Opens the store and reloads every session it holds.
    pub fn new(
        ctx: SessionContext,
        store: SessionStore,
        transport: Option<Arc<dyn ChatTransport>>,
        clock: Clock,
    ) -> Result<Self, SessionError> {
        let mut sessions = HashMap::new();
        for entry in store.index()? {
            let events = store.load(&entry.id)?;
            let s = Session::replay(&ctx, &events)?;
            sessions.insert(entry.id, Arc::new(Slot::new(s)));
        }
        let next_id = sessions.len() as u64;
        Ok(Self {
            inner: Arc::new(Inner {
                ctx,
                store: Mutex::new(store),
                sessions: Mutex::new(sessions),
                transport,
                clock,
                next_id: AtomicU64::new(next_id),
            }),
        })
    }

    pub fn with_system_clock(
        ctx: SessionContext,
        store: SessionStore,
        transport: Option<Arc<dyn ChatTransport>>,
    ) -> Result<Self, SessionError> {
        Self::new(ctx, store, transport, Arc::new(system_clock))
    }

    fn now(&self) -> u64 {
        (self.inner.clock)()
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        self.inner
            .sessions
            .lock()
            .expect("sessions lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    fn persist(&self, id: &str, session: &Session, from: usize) -> Result<(), ApiError> {
        let events = &session.events()[from..];
        if events.is_empty() {
            return Ok(());
        }
        self.inner
            .store
            .lock()
            .expect("store lock")
            .append(id, events)
            .map_err(ApiError::from)
    }

    /// Runs `f` on the locked session off the async runtime, persists any
    /// new events and broadcasts what changed.
    async fn with_session<T, F>(&self, id: &str, f: F) -> Result<T, ApiError>
    where
        T: Send + 'static,
        F: FnOnce(&mut Session, u64, Option<&dyn ChatTransport>) -> Result<T, SessionError> + Send + 'static,
    {
        let slot = self.slot(id)?;
        let state = self.clone();
        let id = id.to_string();
        tokio::task::spawn_blocking(move || {
            let mut s = slot.session.lock().expect("session lock");
            let (events, messages, status) = (s.events().len(), s.messages().len(), s.status());
            let now = state.now();
            let r = f(&mut s, now, state.inner.transport.as_deref());
            // Expiry found while handling the request is logged even when
            // the request itself fails.
            state.persist(&id, &s, events)?;
            slot.publish(&s, messages, status, now);
            r.map_err(ApiError::from)
        })
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
    }

    /// Expires overdue sessions. Returns how many ended.
    pub fn sweep(&self) -> usize {
        let now = self.now();
        let slots: Vec<(String, Arc<Slot>)> = self
            .inner
            .sessions
            .lock()
            .expect("sessions lock")
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let mut ended = 0;
        for (id, slot) in slots {
            let mut s = slot.session.lock().expect("session lock");
            let before = s.events().len();
            if s.sweep(now) {
                ended += 1;
                if let Err(e) = self.persist(&id, &s, before) {
                    eprintln!("persisting expiry of {id}: {}", e.message);
                }
                let _ = slot.updates.send(Update::Status { status: s.status() });
            }
        }
        ended
    }

    /// Sweeps every `period` until the runtime shuts down.
    pub fn spawn_sweeper(&self, period: Duration) -> tokio::task::JoinHandle<()> {
        let state = self.clone();
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(period);
            loop {
                tick.tick().await;
                let s = state.clone();
                let _ = tokio::task::spawn_blocking(move || s.sweep()).await;
            }
        })
    }
}

impl Slot {
    fn new(session: Session) -> Self {
        Self {
            session: Mutex::new(session),
            updates: broadcast::channel(64).0,
        }
    }

    fn publish(&self, s: &Session, messages_before: usize, status_before: SessionStatus, now: u64) {
        let teacher: Vec<Message> = s.messages()[messages_before..]
            .iter()
            .filter(|m| m.from == adapt_core::session::Speaker::Teacher)
            .cloned()
            .collect();
        if !teacher.is_empty() {
            let _ = self.updates.send(Update::Teacher {
                messages: teacher,
                question: s.question(),
                remaining_ms: s.remaining_ms(now),
            });
        }
        if s.status() != status_before {
            let _ = self.updates.send(Update::Status { status: s.status() });
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    /// Policy name such as `atom` or `llm-combined`; `atom` by default.
    pub policy: Option<String>,
    pub seed: Option<u64>,
    /// Concept id such as `greater_2,1,7`; drawn at random when omitted.
    pub concept: Option<String>,
    pub student: Option<FunctionStudent>,
    /// Caller-chosen id; generated when omitted.
    pub id: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct PredictionRequest {
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PredictionResponse {
    /// Teacher replies to this prediction.
    pub messages: Vec<Message>,
    pub state: SessionView,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateResponse {
    pub id: String,
    pub state: SessionView,
}

fn resolve_spec(req: &CreateRequest, seed: u64) -> Result<SessionSpec, ApiError> {
    let policy: SessionPolicy = req
        .policy
        .as_deref()
        .unwrap_or("atom")
        .parse()
        .map_err(|e: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e))?;
    let mut spec = SessionSpec::sample(policy, seed);
    if let Some(id) = &req.concept {
        spec.row = human_conditions()
            .into_iter()
            .find(|r| &r.id() == id)
            .ok_or_else(|| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, format!("unknown concept {id}")))?;
    }
    if let Some(student) = req.student {
        spec.student = student;
    }
    Ok(spec)
}

async fn create(State(state): State<AppState>, body: Option<Json<CreateRequest>>) -> ApiResult<CreateResponse> {
    let req = body.map(|Json(r)| r).unwrap_or_default();
    let n = state.inner.next_id.fetch_add(1, Ordering::Relaxed);
    let now = state.now();
    let seed = req.seed.unwrap_or(now ^ n.rotate_left(32));
    let spec = resolve_spec(&req, seed)?;
    let id = req.id.clone().unwrap_or_else(|| format!("s{now}-{n}"));
    if state.inner.sessions.lock().expect("sessions lock").contains_key(&id) {
        return Err(ApiError::new(StatusCode::CONFLICT, format!("session {id} exists")));
    }
    let st = state.clone();
    let sid = id.clone();
    let session = tokio::task::spawn_blocking(move || -> Result<Session, ApiError> {
        let s = Session::create(&st.inner.ctx, sid.clone(), spec, now, st.inner.transport.as_deref())?;
        st.persist(&sid, &s, 0)?;
        Ok(s)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    let view = session.view(now);
    state
        .inner
        .sessions
        .lock()
        .expect("sessions lock")
        .insert(id.clone(), Arc::new(Slot::new(session)));
    Ok(Json(CreateResponse { id, state: view }))
}

async fn predict(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<PredictionRequest>,
) -> ApiResult<PredictionResponse> {
    let r = state
        .with_session(&id, move |s, now, t| {
            let messages = s.predict(&req.text, now, t)?;
            Ok(PredictionResponse {
                messages,
                state: s.view(now),
            })
        })
        .await?;
    Ok(Json(r))
}

async fn guess(State(state): State<AppState>, Path(id): Path<String>, Json(g): Json<WugGuess>) -> ApiResult<SessionView> {
    let v = state
        .with_session(&id, move |s, now, _| {
            s.submit_guess(g, now)?;
            Ok(s.view(now))
        })
        .await?;
    Ok(Json(v))
}

async fn finish(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionView> {
    let v = state
        .with_session(&id, |s, now, _| {
            s.finish(now)?;
            Ok(s.view(now))
        })
        .await?;
    Ok(Json(v))
}

async fn view(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<SessionView> {
    let v = state
        .with_session(&id, |s, now, _| {
            s.sweep(now);
            Ok(s.view(now))
        })
        .await?;
    Ok(Json(v))
}

async fn report(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let r = state
        .with_session(&id, |s, now, _| {
            s.sweep(now);
            s.report()
        })
        .await?;
    Ok(Json(r).into_response())
}

/// Client messages accepted over the websocket.
#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum ClientMessage {
    Prediction { text: String },
    Guess { guess: WugGuess },
}

async fn ws(State(state): State<AppState>, Path(id): Path<String>, upgrade: WebSocketUpgrade) -> Result<Response, ApiError> {
    let slot = state.slot(&id)?;
    Ok(upgrade.on_upgrade(move |socket| serve_socket(state, id, slot, socket)))
}

async fn send_json<T: Serialize>(socket: &mut WebSocket, value: &T) -> bool {
    match serde_json::to_string(value) {
        Ok(text) => socket.send(WsMessage::Text(text.into())).await.is_ok(),
        Err(_) => false,
    }
}

async fn serve_socket(state: AppState, id: String, slot: Arc<Slot>, mut socket: WebSocket) {
    let mut updates = slot.updates.subscribe();
    let initial = {
        let s = slot.session.lock().expect("session lock");
        s.view(state.now())
    };
    if !send_json(&mut socket, &initial).await {
        return;
    }
    let mut tick = tokio::time::interval(Duration::from_secs(1));
    loop {
        tokio::select! {
            u = updates.recv() => match u {
                Ok(u) => {
                    let done = matches!(u, Update::Status { status } if status != SessionStatus::Active);
                    if !send_json(&mut socket, &u).await || done {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(_)) => {}
                Err(broadcast::error::RecvError::Closed) => break,
            },
            _ = tick.tick() => {
                let remaining_ms = slot.session.lock().expect("session lock").remaining_ms(state.now());
                if !send_json(&mut socket, &Update::Tick { remaining_ms }).await {
                    break;
                }
            }
            m = socket.recv() => match m {
                Some(Ok(WsMessage::Text(text))) => {
                    let r = match serde_json::from_str::<ClientMessage>(&text) {
                        Ok(ClientMessage::Prediction { text }) => state
                            .with_session(&id, move |s, now, t| s.predict(&text, now, t).map(|_| ()))
                            .await,
                        Ok(ClientMessage::Guess { guess }) => state
                            .with_session(&id, move |s, now, _| s.submit_guess(guess, now))
                            .await,
                        Err(e) => Err(ApiError::new(StatusCode::BAD_REQUEST, e.to_string())),
                    };
                    if let Err(e) = r {
                        let msg = serde_json::json!({ "type": "error", "error": e.message });
                        if !send_json(&mut socket, &msg).await {
                            break;
                        }
                    }
                }
                Some(Ok(WsMessage::Close(_))) | None | Some(Err(_)) => break,
                Some(Ok(_)) => {}
            },
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/prediction", post(predict))
        .route("/sessions/{id}/guess", post(guess))
        .route("/sessions/{id}/finish", post(finish))
        .route("/sessions/{id}/state", get(view))
        .route("/sessions/{id}/report", get(report))
        .route("/sessions/{id}/ws", get(ws))
        .with_state(state)
}
