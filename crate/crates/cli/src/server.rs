//! Websocket service around the engine.
//!
//! One task owns the [`Engine`] and ticks it at a fixed rate. Client frames
//! reach it through a bounded queue and are applied between ticks in arrival
//! order. Atlas requests run on the blocking pool and come back over a
//! channel. Snapshots go out on a broadcast channel every few ticks.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures_util::{SinkExt, StreamExt};
use linkfeel_core::engine::{AtlasResult, ServerMessage};
use linkfeel_core::{Engine, EngineConfig};
use tokio::sync::{broadcast, mpsc};
use tower_http::services::ServeDir;

/// Inbound frames waiting for the engine; senders get an `overloaded`
/// error once it is full.
pub const INBOX_CAPACITY: usize = 1024;
const REPLY_CAPACITY: usize = 256;
const BROADCAST_CAPACITY: usize = 64;
/// Snapshots are coalesced to at least this rate towards clients.
const MIN_SNAPSHOT_HZ: f64 = 30.0;

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub tick_hz: f64,
    pub engine: EngineConfig,
    /// Directory with the UI bundle served at `/`; `None` runs headless.
    pub ui_dir: Option<PathBuf>,
}

impl ServeConfig {
    pub fn new(tick_hz: f64, grid: (usize, usize), ui_dir: Option<PathBuf>) -> Self {
        ServeConfig {
            tick_hz,
            engine: EngineConfig {
                dt: 1.0 / tick_hz,
                grid,
                ..EngineConfig::default()
            },
            ui_dir,
        }
    }

    /// Ticks between broadcast snapshots.
    pub fn snapshot_every(&self) -> u64 {
        ((self.tick_hz / MIN_SNAPSHOT_HZ).floor() as u64).max(1)
    }
}

enum Inbound {
    /// A new client: send it the cached atlases and the current snapshot.
    Hello {
        reply: mpsc::Sender<String>,
    },
    Frame {
        text: String,
        reply: mpsc::Sender<String>,
    },
}

#[derive(Clone)]
pub struct EngineHandle {
    inbox: mpsc::Sender<Inbound>,
    outbound: broadcast::Sender<Arc<str>>,
}

/// Starts the engine task on the current runtime.
pub fn spawn_engine(config: &ServeConfig) -> Result<EngineHandle, String> {
    let engine = Engine::new(config.engine).map_err(|e| e.to_string())?;
    if !(config.tick_hz > 0.0 && config.tick_hz.is_finite()) {
        return Err(format!("tick rate {} must be positive", config.tick_hz));
    }
    let (inbox, rx) = mpsc::channel(INBOX_CAPACITY);
    let (outbound, _) = broadcast::channel(BROADCAST_CAPACITY);
    let period = Duration::from_secs_f64(1.0 / config.tick_hz);
    tokio::spawn(run_engine(
        engine,
        rx,
        outbound.clone(),
        period,
        config.snapshot_every(),
    ));
    Ok(EngineHandle { inbox, outbound })
}

fn send_reply(reply: &mpsc::Sender<String>, msg: &ServerMessage) {
    // a slow client loses replies rather than stalling the tick loop
    let _ = reply.try_send(msg.to_json());
}

async fn run_engine(
    mut engine: Engine,
    mut inbox: mpsc::Receiver<Inbound>,
    outbound: broadcast::Sender<Arc<str>>,
    period: Duration,
    snapshot_every: u64,
) {
    let (atlas_tx, mut atlas_rx) = mpsc::unbounded_channel::<AtlasResult>();
    let mut interval = tokio::time::interval(period);
    interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        interval.tick().await;
        loop {
            match inbox.try_recv() {
                Ok(Inbound::Hello { reply }) => {
                    for m in engine.atlas_messages() {
                        send_reply(&reply, &m);
                    }
                    send_reply(&reply, &ServerMessage::Snapshot(engine.snapshot()));
                }
                Ok(Inbound::Frame { text, reply }) => {
                    for m in engine.apply_text(&text) {
                        send_reply(&reply, &m);
                    }
                }
                Err(mpsc::error::TryRecvError::Empty) => break,
                Err(mpsc::error::TryRecvError::Disconnected) => return,
            }
        }
        while let Ok(result) = atlas_rx.try_recv() {
            if let Some(m) = engine.install_atlas(result) {
                let _ = outbound.send(m.to_json().into());
            }
        }
        for request in engine.take_atlas_requests() {
            let tx = atlas_tx.clone();
            tokio::task::spawn_blocking(move || {
                let _ = tx.send(request.compute());
            });
        }
        let snapshot = engine.tick();
        if snapshot.tick.is_multiple_of(snapshot_every) {
            let _ = outbound.send(ServerMessage::Snapshot(snapshot).to_json().into());
        }
    }
}

pub fn router(handle: EngineHandle, ui_dir: Option<PathBuf>) -> Router {
    let app = Router::new().route("/ws", get(ws_upgrade)).with_state(handle);
    match ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(|| async { "headless: connect a client to /ws\n" })),
    }
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(handle): State<EngineHandle>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, handle))
}

async fn client(socket: WebSocket, handle: EngineHandle) {
    let (mut sink, mut stream) = socket.split();
    let (reply, mut replies) = mpsc::channel::<String>(REPLY_CAPACITY);
    let mut snapshots = handle.outbound.subscribe();
    if handle
        .inbox
        .send(Inbound::Hello { reply: reply.clone() })
        .await
        .is_err()
    {
        return;
    }
    let writer = tokio::spawn(async move {
        loop {
            let text: String = tokio::select! {
                Some(m) = replies.recv() => m,
                m = snapshots.recv() => match m {
                    Ok(m) => m.to_string(),
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        tracing::debug!(skipped = n, "client lagging behind snapshots");
                        continue;
                    }
                    Err(broadcast::error::RecvError::Closed) => break,
                },
                else => break,
            };
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
    });
    while let Some(Ok(frame)) = stream.next().await {
        let text = match frame {
            Message::Text(t) => t.to_string(),
            Message::Close(_) => break,
            _ => continue,
        };
        let inbound = Inbound::Frame {
            text,
            reply: reply.clone(),
        };
        if let Err(mpsc::error::TrySendError::Full(_)) = handle.inbox.try_send(inbound) {
            let busy = ServerMessage::Error {
                code: "overloaded".into(),
                detail: "engine queue is full; message dropped".into(),
            };
            send_reply(&reply, &busy);
        }
    }
    writer.abort();
}

/// Binds and serves until the process is stopped.
pub async fn serve(addr: SocketAddr, config: ServeConfig) -> std::io::Result<()> {
    let handle = spawn_engine(&config).map_err(std::io::Error::other)?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(addr = %listener.local_addr()?, headless = config.ui_dir.is_none(), "serving");
    axum::serve(listener, router(handle, config.ui_dir)).await
}
