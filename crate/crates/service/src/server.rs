use crate::protocol::{encode_frame, ControlMessage, ErrorReply, FrameMetadata};
use crate::session::{apply_control, ControlError, DatasetCatalog, SessionState};
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use std::future::Future;
use std::path::PathBuf;
use std::sync::Arc;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot};
use tower_http::services::ServeDir;

/// How the image inside a binary frame message is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrameEncoding {
    #[default]
    Png,
    /// Uncompressed RGBA8 rows, top row first. Size follows from the
    /// metadata's width and height.
    Rgba,
}

impl std::str::FromStr for FrameEncoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "png" => Ok(FrameEncoding::Png),
            "rgba" => Ok(FrameEncoding::Rgba),
            other => Err(format!("unknown frame encoding {other:?} (expected png or rgba)")),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    /// Directory served for every path that is not `/ws` or `/healthz`.
    pub static_dir: Option<PathBuf>,
    pub encoding: FrameEncoding,
}

/// A rendered frame as it goes on the wire.
#[derive(Debug)]
pub struct FramePacket {
    pub binary: Vec<u8>,
    pub metadata: String,
}

enum Command {
    /// A viewer attached and needs a picture of the current state.
    Connected,
    Control(ControlMessage, oneshot::Sender<Result<(), String>>),
}

/// Handle to a running session actor. Cheap to clone.
#[derive(Clone)]
pub struct Service {
    commands: mpsc::Sender<Command>,
    frames: broadcast::Sender<Arc<FramePacket>>,
    config: Arc<ServiceConfig>,
    catalog: Arc<DatasetCatalog>,
}

impl Service {
    /// Spawns the session owner on the current tokio runtime.
    pub fn start(
        catalog: DatasetCatalog,
        initial: SessionState,
        config: ServiceConfig,
    ) -> Result<Self, ControlError> {
        initial.validate(&catalog)?;
        let catalog = Arc::new(catalog);
        let (commands, rx) = mpsc::channel(64);
        let (frames, _) = broadcast::channel(8);
        tokio::spawn(run_session(
            initial,
            catalog.clone(),
            config.encoding,
            rx,
            frames.clone(),
        ));
        Ok(Service {
            commands,
            frames,
            config: Arc::new(config),
            catalog,
        })
    }

    pub fn router(&self) -> Router {
        let router = Router::new()
            .route("/ws", get(ws_upgrade))
            .route("/healthz", get(healthz))
            .with_state(self.clone());
        match &self.config.static_dir {
            Some(dir) => router.fallback_service(ServeDir::new(dir)),
            None => router,
        }
    }
}

/// Serves `service` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    service: Service,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, service.router())
        .with_graceful_shutdown(shutdown)
        .await
}

#[derive(serde::Serialize)]
struct Health {
    status: &'static str,
    name: &'static str,
    version: &'static str,
    parallel: bool,
    threads: usize,
    datasets: Vec<String>,
}

async fn healthz(State(service): State<Service>) -> impl IntoResponse {
    Json(Health {
        status: "ok",
        name: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        parallel: volcast_core::PARALLEL,
        threads: volcast_core::worker_threads(),
        datasets: service.catalog.ids().map(str::to_owned).collect(),
    })
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(service): State<Service>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| viewer_connection(socket, service))
}

async fn viewer_connection(socket: WebSocket, service: Service) {
    let (mut sink, mut stream) = socket.split();
    // Subscribe before announcing ourselves so the initial frame is not missed.
    let mut frames = service.frames.subscribe();
    let (replies_tx, mut replies) = mpsc::channel::<String>(16);
    if service.commands.send(Command::Connected).await.is_err() {
        return;
    }

    let writer = tokio::spawn(async move {
        loop {
            let out = tokio::select! {
                frame = frames.recv() => match frame {
                    Ok(f) => vec![
                        Message::Binary(f.binary.clone().into()),
                        Message::Text(f.metadata.clone().into()),
                    ],
                    // A slow viewer simply misses intermediate frames.
                    Err(broadcast::error::RecvError::Lagged(_)) => continue,
                    Err(broadcast::error::RecvError::Closed) => break,
                },
                reply = replies.recv() => match reply {
                    Some(text) => vec![Message::Text(text.into())],
                    None => break,
                },
            };
            for msg in out {
                if sink.send(msg).await.is_err() {
                    return;
                }
            }
        }
    });

    while let Some(Ok(msg)) = stream.next().await {
        let text = match msg {
            Message::Text(t) => t,
            Message::Close(_) => break,
            Message::Binary(_) => {
                let _ = replies_tx.send(error_json("binary client messages are not supported")).await;
                continue;
            }
            _ => continue,
        };
        let control = match ControlMessage::parse(&text) {
            Ok(c) => c,
            Err(e) => {
                let _ = replies_tx.send(error_json(&format!("malformed control message: {e}"))).await;
                continue;
            }
        };
        let (tx, rx) = oneshot::channel();
        if service.commands.send(Command::Control(control, tx)).await.is_err() {
            break;
        }
        if let Ok(Err(e)) = rx.await {
            let _ = replies_tx.send(error_json(&e)).await;
        }
    }
    drop(replies_tx);
    writer.abort();
}

fn error_json(message: &str) -> String {
    serde_json::to_string(&ErrorReply {
        error: message.to_owned(),
    })
    .expect("error replies serialize")
}

/// The single owner of the session state. Commands are handled strictly in
/// arrival order and each render sees one state snapshot.
async fn run_session(
    mut state: SessionState,
    catalog: Arc<DatasetCatalog>,
    encoding: FrameEncoding,
    mut commands: mpsc::Receiver<Command>,
    frames: broadcast::Sender<Arc<FramePacket>>,
) {
    while let Some(cmd) = commands.recv().await {
        let reply = match cmd {
            Command::Connected => None,
            Command::Control(msg, reply) => match apply_control(&state, &msg, &catalog) {
                Ok(next) => {
                    state = next;
                    Some(reply)
                }
                Err(e) => {
                    let _ = reply.send(Err(e.to_string()));
                    continue;
                }
            },
        };
        let snapshot = state.clone();
        let cat = catalog.clone();
        let rendered = tokio::task::spawn_blocking(move || {
            let mut s = snapshot;
            s.render(&cat).map(|(id, fb)| (s, id, fb))
        })
        .await;
        let result = match rendered {
            Ok(Ok((rendered_state, id, fb))) => {
                state.frame_counter = rendered_state.frame_counter;
                state.last_render_ms = rendered_state.last_render_ms;
                let render_ms = fb.elapsed.as_secs_f64() * 1e3;
                let payload = match encoding {
                    FrameEncoding::Png => fb.encode_png(),
                    FrameEncoding::Rgba => fb.rgba_bytes(),
                };
                let metadata = FrameMetadata {
                    frame_id: id,
                    render_ms,
                    fps: 1e3 / render_ms.max(1e-3),
                    operator: state.settings.operator.name().to_owned(),
                    width: fb.width,
                    height: fb.height,
                };
                let packet = FramePacket {
                    binary: encode_frame(id, &payload),
                    metadata: serde_json::to_string(&metadata).expect("metadata serializes"),
                };
                // No receivers just means every viewer left meanwhile.
                let _ = frames.send(Arc::new(packet));
                Ok(())
            }
            Ok(Err(e)) => Err(format!("render failed: {e}")),
            Err(e) => Err(format!("render task failed: {e}")),
        };
        if let Err(e) = &result {
            tracing::error!("{e}");
        }
        if let Some(reply) = reply {
            let _ = reply.send(result);
        }
    }
}
