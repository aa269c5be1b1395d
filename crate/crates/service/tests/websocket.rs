use axum::body::Body;
use axum::http::{Request, StatusCode};
use futures_util::{SinkExt, StreamExt};
use http_body_util::BodyExt;
use std::time::Duration;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};
use tower::ServiceExt;
use volcast_core::{make_phantom, Phantom};
use volcast_service::{
    decode_frame, ControlMessage, DatasetCatalog, FrameMetadata, Service, ServiceConfig,
    SessionState,
};

type Client = WebSocketStream<MaybeTlsStream<TcpStream>>;

fn catalog() -> DatasetCatalog {
    let mut c = DatasetCatalog::new();
    c.insert("sphere", make_phantom(Phantom::default_sphere(32), [32; 3]).unwrap());
    c.insert("empty", make_phantom(Phantom::Empty, [16; 3]).unwrap());
    c
}

fn service(config: ServiceConfig) -> Service {
    let c = catalog();
    let mut state = SessionState::initial(&c, "sphere").unwrap();
    state.settings.width = 64;
    state.settings.height = 48;
    Service::start(c, state, config).unwrap()
}

async fn connect() -> Client {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let svc = service(ServiceConfig::default());
    tokio::spawn(volcast_service::serve(listener, svc, std::future::pending()));
    let (ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    ws
}

async fn next(ws: &mut Client) -> Message {
    tokio::time::timeout(Duration::from_secs(30), ws.next())
        .await
        .expect("server went quiet")
        .expect("stream ended")
        .unwrap()
}

struct Frame {
    id: u64,
    rgba: Vec<u8>,
    meta: FrameMetadata,
}

fn decode_png(bytes: &[u8]) -> (u32, u32, Vec<u8>) {
    let mut reader = png::Decoder::new(std::io::Cursor::new(bytes)).read_info().unwrap();
    let mut buf = vec![0; reader.output_buffer_size().unwrap()];
    let info = reader.next_frame(&mut buf).unwrap();
    buf.truncate(info.buffer_size());
    (info.width, info.height, buf)
}

async fn frame(ws: &mut Client) -> Frame {
    let bin = match next(ws).await {
        Message::Binary(b) => b,
        other => panic!("expected a binary frame, got {other:?}"),
    };
    let (id, payload) = decode_frame(&bin).unwrap();
    let (w, h, rgba) = decode_png(payload);
    let meta: FrameMetadata = match next(ws).await {
        Message::Text(t) => serde_json::from_str(&t).unwrap(),
        other => panic!("expected metadata, got {other:?}"),
    };
    assert_eq!(meta.frame_id, id);
    assert_eq!((meta.width, meta.height), (w as usize, h as usize));
    assert!(meta.render_ms >= 0.0 && meta.fps > 0.0);
    Frame { id, rgba, meta }
}

async fn error(ws: &mut Client) -> String {
    match next(ws).await {
        Message::Text(t) => {
            let v: serde_json::Value = serde_json::from_str(&t).unwrap();
            v["error"].as_str().expect("error reply").to_owned()
        }
        other => panic!("expected an error reply, got {other:?}"),
    }
}

async fn send(ws: &mut Client, msg: ControlMessage) {
    ws.send(Message::Text(msg.to_json().into())).await.unwrap();
}

#[tokio::test]
async fn connecting_yields_a_frame_of_the_default_scene() {
    let mut ws = connect().await;
    let f = frame(&mut ws).await;
    assert_eq!((f.meta.width, f.meta.height), (64, 48));
    assert_eq!(f.meta.operator, "central");
    assert!(f.rgba.chunks(4).any(|p| p != [0, 0, 0, 255]), "sphere not visible");
}

#[tokio::test]
async fn operator_change_is_echoed_in_metadata() {
    let mut ws = connect().await;
    let first = frame(&mut ws).await;
    send(&mut ws, ControlMessage::SetOperator { name: "zucker-hummel".into() }).await;
    let changed = frame(&mut ws).await;
    send(&mut ws, ControlMessage::RequestFrame).await;
    let requested = frame(&mut ws).await;
    assert_eq!(changed.meta.operator, "zucker-hummel");
    assert_eq!(requested.meta.operator, "zucker-hummel");
    assert!(first.id < changed.id && changed.id < requested.id);
    assert_eq!(changed.rgba, requested.rgba);
}

#[tokio::test]
async fn opposite_lights_give_different_frames() {
    let mut ws = connect().await;
    frame(&mut ws).await;
    send(&mut ws, ControlMessage::SetLight { x: 1000.0, y: 1000.0, z: 1000.0 }).await;
    let a = frame(&mut ws).await;
    send(&mut ws, ControlMessage::SetLight { x: -1000.0, y: -1000.0, z: -1000.0 }).await;
    let b = frame(&mut ws).await;
    assert_ne!(a.rgba, b.rgba);
}

#[tokio::test]
async fn malformed_and_invalid_controls_keep_the_session() {
    let mut ws = connect().await;
    let before = frame(&mut ws).await;

    ws.send(Message::Text("{\"type\":\"spin\"}".into())).await.unwrap();
    assert!(error(&mut ws).await.contains("malformed"));
    ws.send(Message::Text("not json".into())).await.unwrap();
    error(&mut ws).await;

    send(&mut ws, ControlMessage::SetThresholds { t_low: 500.0, t_high: 100.0 }).await;
    assert!(error(&mut ws).await.contains("threshold"));
    send(&mut ws, ControlMessage::SetDataset { id: "nope".into() }).await;
    error(&mut ws).await;

    send(&mut ws, ControlMessage::RequestFrame).await;
    let after = frame(&mut ws).await;
    assert!(after.id > before.id);
    assert_eq!(after.rgba, before.rgba, "rejected controls changed the state");
}

#[tokio::test]
async fn resolution_and_dataset_changes_apply_in_order() {
    let mut ws = connect().await;
    frame(&mut ws).await;
    send(&mut ws, ControlMessage::SetResolution { width: 40, height: 30 }).await;
    send(&mut ws, ControlMessage::SetDataset { id: "empty".into() }).await;
    let resized = frame(&mut ws).await;
    let switched = frame(&mut ws).await;
    assert_eq!((resized.meta.width, resized.meta.height), (40, 30));
    assert_eq!((switched.meta.width, switched.meta.height), (40, 30));
    assert!(switched.rgba.chunks(4).all(|p| p == [0, 0, 0, 255]));
}

#[tokio::test]
async fn every_viewer_sees_the_shared_session() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(volcast_service::serve(
        listener,
        service(ServiceConfig::default()),
        std::future::pending(),
    ));
    let url = format!("ws://{addr}/ws");
    let (mut a, _) = tokio_tungstenite::connect_async(&url).await.unwrap();
    frame(&mut a).await;
    let (mut b, _) = tokio_tungstenite::connect_async(&url).await.unwrap();
    frame(&mut b).await;
    // a also receives the frame rendered for b's arrival.
    frame(&mut a).await;
    send(&mut a, ControlMessage::SetZoom { zoom: 1.5 }).await;
    let fa = frame(&mut a).await;
    let fb = frame(&mut b).await;
    assert_eq!(fa.id, fb.id);
    assert_eq!(fa.rgba, fb.rgba);
}

#[tokio::test]
async fn healthz_reports_build_info() {
    let app = service(ServiceConfig::default()).router();
    let resp = app
        .oneshot(Request::get("/healthz").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let body = resp.into_body().collect().await.unwrap().to_bytes();
    let v: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(v["status"], "ok");
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["parallel"], volcast_core::PARALLEL);
    assert_eq!(v["datasets"], serde_json::json!(["empty", "sphere"]));
}

#[tokio::test]
async fn static_assets_are_served_next_to_the_socket() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("index.html"), "<title>viewer</title>").unwrap();
    std::fs::write(dir.path().join("app.js"), "connect();").unwrap();
    let app = service(ServiceConfig {
        static_dir: Some(dir.path().to_owned()),
        ..Default::default()
    })
    .router();
    for (path, body) in [("/", "<title>viewer</title>"), ("/app.js", "connect();")] {
        let resp = app
            .clone()
            .oneshot(Request::get(path).body(Body::empty()).unwrap())
            .await
            .unwrap();
        assert_eq!(resp.status(), StatusCode::OK, "{path}");
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        assert_eq!(bytes, body.as_bytes());
    }
    let missing = app
        .oneshot(Request::get("/nope.css").body(Body::empty()).unwrap())
        .await
        .unwrap();
    assert_eq!(missing.status(), StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn raw_rgba_frames_carry_width_times_height_pixels() {
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    let svc = service(ServiceConfig {
        encoding: volcast_service::FrameEncoding::Rgba,
        ..Default::default()
    });
    tokio::spawn(volcast_service::serve(listener, svc, std::future::pending()));
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/ws")).await.unwrap();
    let bin = match next(&mut ws).await {
        Message::Binary(b) => b,
        other => panic!("expected a binary frame, got {other:?}"),
    };
    let (_, payload) = decode_frame(&bin).unwrap();
    assert_eq!(payload.len(), 64 * 48 * 4);
    assert!(matches!(next(&mut ws).await, Message::Text(_)));
}
