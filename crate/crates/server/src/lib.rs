//! WebSocket bridge for live play against the robot partner, solo, or
//! against a second connected human.
//!
//! `GET /session/{id}` upgrades to a WebSocket speaking [`protocol`];
//! `GET /healthz` reports the version and the number of live sessions.

pub mod protocol;
pub mod session;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use dyad_core::harness::rng::{split, SCRIPT_LABEL};
use dyad_core::harness::{Condition, ExperimentConfig};
use dyad_core::generate_script;
use futures_util::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::mpsc;

use protocol::{decode, encode, SessionMessage, PROTO_VERSION};
use session::{human_slots, run_session, Ingress, Outbound, ServeOptions, SessionOutcome, SessionSpec};

const EGRESS_CAPACITY: usize = 256;

struct Entry {
    condition: Condition,
    taken: [bool; 2],
    ingress: std::sync::mpsc::Sender<Ingress>,
}

struct Inner {
    cfg: ExperimentConfig,
    opts: ServeOptions,
    sessions: Mutex<HashMap<String, Entry>>,
    started: AtomicU64,
    outcomes: Option<mpsc::UnboundedSender<SessionOutcome>>,
}

/// Shared server state; cheap to clone.
#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(cfg: ExperimentConfig, opts: ServeOptions) -> Self {
        Self::build(cfg, opts, None)
    }

    /// Like [`AppState::new`], also handing back every finished session.
    pub fn with_outcomes(
        cfg: ExperimentConfig,
        opts: ServeOptions,
    ) -> (Self, mpsc::UnboundedReceiver<SessionOutcome>) {
        let (tx, rx) = mpsc::unbounded_channel();
        (Self::build(cfg, opts, Some(tx)), rx)
    }

    fn build(
        cfg: ExperimentConfig,
        opts: ServeOptions,
        outcomes: Option<mpsc::UnboundedSender<SessionOutcome>>,
    ) -> Self {
        Self(Arc::new(Inner {
            cfg,
            opts,
            sessions: Mutex::new(HashMap::new()),
            started: AtomicU64::new(0),
            outcomes,
        }))
    }

    pub fn active_sessions(&self) -> usize {
        self.sessions().len()
    }

    fn sessions(&self) -> std::sync::MutexGuard<'_, HashMap<String, Entry>> {
        self.0.sessions.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Claims a handle in session `id`, starting the session if needed.
    fn join(
        &self,
        id: &str,
        role: Condition,
        egress: mpsc::Sender<Outbound>,
    ) -> Result<(usize, std::sync::mpsc::Sender<Ingress>), String> {
        let humans = human_slots(role).map_err(|e| e.to_string())?;
        let mut sessions = self.sessions();
        let slot = match sessions.get_mut(id) {
            Some(entry) => {
                if entry.condition != role {
                    return Err(format!(
                        "session {id} runs {}, not {role}",
                        entry.condition
                    ));
                }
                let free = (0..humans)
                    .find(|&s| !entry.taken[s])
                    .ok_or_else(|| format!("session {id} is full"))?;
                entry.taken[free] = true;
                free
            }
            None => {
                let ingress = self.spawn(id, role).map_err(|e| e.to_string())?;
                sessions.insert(
                    id.to_string(),
                    Entry {
                        condition: role,
                        taken: [true, false],
                        ingress,
                    },
                );
                0
            }
        };
        let ingress = sessions[id].ingress.clone();
        ingress
            .send(Ingress::Join { slot, egress })
            .map_err(|_| format!("session {id} has ended"))?;
        Ok((slot, ingress))
    }

    fn spawn(
        &self,
        id: &str,
        condition: Condition,
    ) -> dyad_core::Result<std::sync::mpsc::Sender<Ingress>> {
        let cfg = &self.0.cfg;
        let n = self.0.started.fetch_add(1, Ordering::Relaxed);
        let seed = split(cfg.seed, &[n]);
        let spec = SessionSpec {
            id: id.to_string(),
            condition,
            seed,
            script: generate_script(split(seed, &[SCRIPT_LABEL]), &cfg.script)?,
            cfgs: cfg.trial_config(),
        };
        let (tx, rx) = std::sync::mpsc::channel();
        let state = self.clone();
        std::thread::Builder::new()
            .name(format!("session-{id}"))
            .spawn(move || {
                let opts = state.0.opts;
                let out_dir = state.0.cfg.output.dir.clone();
                let result = run_session(&spec, &opts, out_dir.as_deref(), rx);
                state.sessions().remove(&spec.id);
                match result {
                    Ok(outcome) => {
                        tracing::info!(session = %spec.id, "session finished");
                        if let Some(tx) = &state.0.outcomes {
                            let _ = tx.send(outcome);
                        }
                    }
                    Err(e) => tracing::warn!(session = %spec.id, "session ended: {e}"),
                }
            })
            .map_err(|e| dyad_core::Error::InvalidArgument(format!("cannot start session: {e}")))?;
        Ok(tx)
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/session/{id}", get(session_ws))
        .with_state(state)
}

async fn healthz(State(state): State<AppState>) -> impl IntoResponse {
    Json(serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "proto_version": PROTO_VERSION,
        "active_sessions": state.active_sessions(),
    }))
}

async fn session_ws(
    Path(id): Path<String>,
    State(state): State<AppState>,
    ws: WebSocketUpgrade,
) -> Response {
    ws.on_upgrade(move |socket| client(socket, id, state))
}

fn error_text(message: impl Into<String>) -> Outbound {
    encode(&SessionMessage::Error {
        message: message.into(),
    })
    .into()
}

async fn client(socket: WebSocket, id: String, state: AppState) {
    let (mut sink, mut stream) = socket.split();
    let (etx, mut erx) = mpsc::channel::<Outbound>(EGRESS_CAPACITY);
    let writer = tokio::spawn(async move {
        while let Some(text) = erx.recv().await {
            if sink.send(Message::Text(text.as_ref().into())).await.is_err() {
                return;
            }
        }
        let _ = sink.close().await;
    });

    let limit = state.0.opts.max_decode_errors;
    let mut errors = 0usize;
    let mut joined: Option<(usize, std::sync::mpsc::Sender<Ingress>)> = None;
    let mut last_seq: Option<u64> = None;

    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t,
            Message::Close(_) => break,
            Message::Binary(_) => {
                errors += 1;
                let _ = etx.send(error_text("binary frames are not part of the protocol")).await;
                if errors >= limit {
                    break;
                }
                continue;
            }
            _ => continue,
        };
        let fault = match (decode(text.as_str()), &joined) {
            (Err(e), _) => Some(e.to_string()),
            (Ok(SessionMessage::Hello { role, session }), None) => {
                if session != id {
                    let _ = etx
                        .send(error_text(format!("hello names session {session}, socket is {id}")))
                        .await;
                    break;
                }
                match state.join(&id, role, etx.clone()) {
                    Ok(j) => {
                        joined = Some(j);
                        None
                    }
                    Err(e) => {
                        let _ = etx.send(error_text(e)).await;
                        break;
                    }
                }
            }
            (Ok(SessionMessage::Input { seq, handle_x_mm, .. }), Some((slot, ingress))) => {
                if last_seq.is_some_and(|last| seq <= last) {
                    Some(format!("input seq {seq} is not increasing"))
                } else if !handle_x_mm.is_finite() {
                    Some("handle_x_mm must be finite".into())
                } else {
                    last_seq = Some(seq);
                    if ingress
                        .send(Ingress::Input { slot: *slot, x_mm: handle_x_mm })
                        .is_err()
                    {
                        break;
                    }
                    None
                }
            }
            (Ok(SessionMessage::Hello { .. }), Some(_)) => Some("duplicate hello".into()),
            (Ok(SessionMessage::Input { .. }), None) => Some("input before hello".into()),
            (Ok(_), _) => Some("server-to-client message sent by client".into()),
        };
        if let Some(f) = fault {
            errors += 1;
            let _ = etx.send(error_text(f)).await;
            if errors >= limit {
                break;
            }
        }
    }

    if let Some((slot, ingress)) = joined {
        let _ = ingress.send(Ingress::Leave { slot });
    }
    drop(etx);
    let _ = writer.await;
}

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        source: std::io::Error,
    },
    #[error("server failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Binds `addr` and serves until the process is stopped.
pub async fn serve(
    cfg: ExperimentConfig,
    opts: ServeOptions,
    addr: SocketAddr,
) -> Result<(), ServeError> {
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|source| ServeError::Bind { addr, source })?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(AppState::new(cfg, opts))).await?;
    Ok(())
}
