#![allow(dead_code)]

use std::net::SocketAddr;

use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;

use glovespot::server::{self, AppState};
use glovespot_core::domain::SensorFrame;
use glovespot_core::harness::{build_templates, train_cascade, ExperimentConfig};
use glovespot_core::robot::SimConfig;
use glovespot_core::spotter::CascadeModel;
use glovespot_core::synth::GestureTemplate;

/// Short training run; good enough to separate held templates.
pub fn quick_config(base: ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        epochs: 400,
        alpha: 0.5,
        beta: 0.5,
        eval_repetitions: 2,
        ..base
    }
}

pub fn trained(config: &ExperimentConfig) -> (Vec<GestureTemplate>, CascadeModel) {
    let templates = build_templates(config).unwrap();
    let cascade = train_cascade(&templates, config).unwrap().cascade;
    (templates, cascade)
}

pub async fn start_server(model: CascadeModel, templates: Vec<GestureTemplate>) -> SocketAddr {
    let (listener, addr) = server::bind("127.0.0.1:0").await.unwrap();
    let state = AppState::new(model, templates, SimConfig::default());
    tokio::spawn(async move { server::serve(listener, state).await.unwrap() });
    addr
}

/// Minimal HTTP/1.1 GET returning status code and body.
pub async fn http_get(addr: SocketAddr, path: &str) -> (u16, String) {
    let mut s = TcpStream::connect(addr).await.unwrap();
    let req = format!("GET {path} HTTP/1.1\r\nHost: {addr}\r\nConnection: close\r\n\r\n");
    s.write_all(req.as_bytes()).await.unwrap();
    let mut raw = String::new();
    s.read_to_string(&mut raw).await.unwrap();
    let status = raw[9..12].parse().unwrap();
    let body = raw
        .split_once("\r\n\r\n")
        .map(|(_, b)| b.to_string())
        .unwrap();
    (status, body)
}

pub fn frame_message(f: &SensorFrame) -> String {
    json!({"type": "frame", "t": f.t, "sensors": f.sensors.to_vec(), "button": f.button})
        .to_string()
}

/// Sends every message first, then reads one reply per message.
pub async fn exchange(addr: SocketAddr, messages: &[String]) -> Vec<Value> {
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/session"))
        .await
        .unwrap();
    for m in messages {
        ws.send(Message::text(m.clone())).await.unwrap();
    }
    let mut replies = Vec::with_capacity(messages.len());
    while replies.len() < messages.len() {
        match ws.next().await.unwrap().unwrap() {
            Message::Text(t) => replies.push(serde_json::from_str(t.as_str()).unwrap()),
            _ => continue,
        }
    }
    ws.close(None).await.ok();
    replies
}
