//! HTTP endpoints and the `/session` WebSocket channel.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::Response;
use axum::routing::get;
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::sync::mpsc;

use glovespot_core::domain::SensorFrame;
use glovespot_core::mlp::Network;
use glovespot_core::robot::SimConfig;
use glovespot_core::spotter::CascadeModel;
use glovespot_core::synth::GestureTemplate;

use crate::protocol::{ClientMessage, ServerMessage};
use crate::session::Session;

pub const DEFAULT_BIND: &str = "127.0.0.1:8080";

/// Shared, read-only service state.
#[derive(Clone)]
pub struct AppState {
    pub model: Arc<CascadeModel>,
    pub templates: Arc<Vec<GestureTemplate>>,
    pub sim: SimConfig,
    next_session: Arc<AtomicU64>,
}

impl AppState {
    pub fn new(model: CascadeModel, templates: Vec<GestureTemplate>, sim: SimConfig) -> Self {
        Self {
            model: Arc::new(model),
            templates: Arc::new(templates),
            sim,
            next_session: Arc::new(AtomicU64::new(1)),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/model", get(model))
        .route("/templates", get(templates))
        .route("/session", get(session))
        .with_state(state)
}

/// Serves until the listener fails or the process gets SIGINT or SIGTERM.
pub async fn serve(listener: TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown_signal())
        .await
}

async fn shutdown_signal() {
    let interrupt = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = interrupt => {}
        _ = terminate => {}
    }
    tracing::info!("shutting down");
}

/// Binds `addr` and returns the listener plus the actual local address.
pub async fn bind(addr: &str) -> std::io::Result<(TcpListener, SocketAddr)> {
    let listener = TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    Ok((listener, local))
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

fn network_meta(net: &Network) -> Value {
    let meta = net.meta();
    json!({
        "layer_sizes": net.layer_sizes(),
        "parameters": net.parameter_count(),
        "trained_epochs": meta.epochs,
        "alpha": meta.alpha,
        "beta": meta.beta,
        "seed": net.seed(),
    })
}

async fn model(State(app): State<AppState>) -> Json<Value> {
    let m = &app.model;
    Json(json!({
        "lag": m.lag,
        "threshold": m.threshold,
        "debounce": m.debounce,
        "emission": m.emission,
        "library_size": m.library_size(),
        "non_gesture_classes": m.non_gesture_classes(),
        "comm": network_meta(&m.comm),
        "non": m.non.as_ref().map(network_meta),
        "frame_dt": app.sim.frame_dt,
    }))
}

async fn templates(State(app): State<AppState>) -> Json<Vec<GestureTemplate>> {
    Json(app.templates.as_ref().clone())
}

async fn session(ws: WebSocketUpgrade, State(app): State<AppState>) -> Response {
    ws.on_upgrade(move |socket| run_session(socket, app))
}

/// Decodes one client text message and runs it through the session.
pub fn handle_text(session: &mut Session, text: &str, queue_depth: usize) -> ServerMessage {
    let msg = match serde_json::from_str::<ClientMessage>(text) {
        Ok(m) => m,
        Err(e) => {
            return ServerMessage::Error {
                message: format!("malformed message: {e}"),
            }
        }
    };
    match msg {
        ClientMessage::Reset => {
            session.reset();
            ServerMessage::Reset
        }
        ClientMessage::Frame { t, sensors, button } => {
            match SensorFrame::from_slice(t, &sensors, button).and_then(|f| session.process(f)) {
                Ok(reply) => ServerMessage::Spot { reply, queue_depth },
                Err(e) => ServerMessage::Error {
                    message: e.to_string(),
                },
            }
        }
    }
}

/// A reader task queues every incoming message without dropping any; this
/// task processes them in order and reports how many are still waiting.
async fn run_session(socket: WebSocket, app: AppState) {
    let id = app.next_session.fetch_add(1, Ordering::Relaxed);
    tracing::info!(session = id, "session opened");
    let (mut sink, mut stream) = socket.split();
    let (tx, mut rx) = mpsc::unbounded_channel::<String>();
    let depth = Arc::new(AtomicUsize::new(0));

    let reader_depth = depth.clone();
    let reader = tokio::spawn(async move {
        while let Some(Ok(msg)) = stream.next().await {
            let text = match msg {
                Message::Text(t) => t.as_str().to_owned(),
                Message::Binary(_) => "<binary>".to_owned(),
                Message::Close(_) => break,
                _ => continue,
            };
            reader_depth.fetch_add(1, Ordering::SeqCst);
            if tx.send(text).is_err() {
                break;
            }
        }
    });

    let mut session = Session::new(id, app.model.clone(), app.sim);
    while let Some(text) = rx.recv().await {
        let waiting = depth.fetch_sub(1, Ordering::SeqCst) - 1;
        let reply = handle_text(&mut session, &text, waiting);
        if sink
            .send(Message::Text(reply.to_json().into()))
            .await
            .is_err()
        {
            break;
        }
    }
    reader.abort();
    tracing::info!(session = id, frames = session.frames(), "session closed");
}
