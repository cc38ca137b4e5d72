mod common;

use common::*;
use glovespot_core::harness::ExperimentConfig;
use glovespot_core::synth::{generate_stream, ScenarioScript, ScriptStep};
use serde_json::Value;

fn hold_stream(
    templates: &[glovespot_core::synth::GestureTemplate],
    labels: &[u16],
    hold: usize,
    transition: (usize, usize),
) -> glovespot_core::synth::AnnotatedStream {
    let mut script = ScenarioScript::sequence(labels, 1, 0.0, 0);
    script.steps = labels
        .iter()
        .map(|&label| ScriptStep { label, hold })
        .collect();
    script.transition = transition;
    generate_stream(&script, templates).unwrap()
}

#[tokio::test]
async fn http_endpoints() {
    let (templates, model) = trained(&quick_config(ExperimentConfig::test1()));
    let addr = start_server(model, templates).await;

    let (status, body) = http_get(addr, "/health").await;
    assert_eq!(status, 200);
    assert_eq!(
        serde_json::from_str::<Value>(&body).unwrap(),
        serde_json::json!({"status": "ok"})
    );

    let (status, body) = http_get(addr, "/model").await;
    assert_eq!(status, 200);
    let meta: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(meta["comm"]["layer_sizes"], serde_json::json!([44, 44, 10]));
    assert_eq!(meta["lag"], 1);
    assert_eq!(meta["non"], Value::Null);

    let (status, body) = http_get(addr, "/templates").await;
    assert_eq!(status, 200);
    let t: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(t.as_array().unwrap().len(), 10);
    assert_eq!(t[1]["name"], "G2");
    assert_eq!(t[1]["pose"].as_array().unwrap().len(), 22);

    assert_eq!(http_get(addr, "/nope").await.0, 404);
}

#[tokio::test]
async fn held_gesture_jogs_the_robot() {
    let (templates, model) = trained(&quick_config(ExperimentConfig::test1()));
    let debounce = model.debounce;
    let addr = start_server(model, templates.clone()).await;
    let stream = hold_stream(&templates, &[2], 40, (10, 10));
    let msgs: Vec<String> = stream.frames.iter().map(frame_message).collect();
    let replies = exchange(addr, &msgs).await;

    for (i, r) in replies.iter().enumerate() {
        assert_eq!(r["type"], "spot");
        assert_eq!(r["t"], i as u64);
        assert_eq!(r["decision"], "G2");
        if i + 1 < debounce {
            assert_eq!(r["command"], Value::Null, "frame {i}");
        } else {
            assert_eq!(r["label"], "G2");
            assert_eq!(r["command"], "X+");
        }
    }
    let xs: Vec<f64> = replies
        .iter()
        .map(|r| r["robot"]["position"][0].as_f64().unwrap())
        .collect();
    assert!(xs[debounce - 1] > 0.0);
    assert!(xs.windows(2).skip(debounce).all(|w| w[1] > w[0]));
    assert_eq!(replies.last().unwrap()["robot"]["active_command"], "X+");
}

#[tokio::test]
async fn cascade_silences_the_confusable_transition() {
    let (templates, model) = trained(&quick_config(ExperimentConfig::test3()));
    let addr = start_server(model, templates.clone()).await;
    let stream = hold_stream(&templates, &[5, 6], 30, (30, 30));
    let msgs: Vec<String> = stream.frames.iter().map(frame_message).collect();
    let replies = exchange(addr, &msgs).await;

    let mut silent_frames = 0;
    for (r, truth) in replies.iter().zip(&stream.truth) {
        if !matches!(truth, glovespot_core::domain::Truth::Transition { .. }) {
            continue;
        }
        // only the endpoints' commands (Y- and Z+) may appear
        assert!(
            [Value::Null, "Y-".into(), "Z+".into()].contains(&r["command"]),
            "{r}"
        );
        if r["decision"] == "NonCommunicative" {
            assert_eq!(r["command"], Value::Null);
            assert_eq!(r["confidence"], Value::Null);
            silent_frames += 1;
        }
    }
    assert!(silent_frames > 0);
}

#[tokio::test]
async fn malformed_messages_and_reset_keep_the_session_alive() {
    let (templates, model) = trained(&quick_config(ExperimentConfig::test1()));
    let addr = start_server(model, templates.clone()).await;
    let stream = hold_stream(&templates, &[2], 12, (10, 10));
    let mut msgs: Vec<String> = stream.frames.iter().map(frame_message).collect();
    msgs.insert(3, "not json".into());
    msgs.insert(
        5,
        r#"{"type":"frame","t":99,"sensors":[2.0],"button":true}"#.into(),
    );
    msgs.push(r#"{"type":"reset"}"#.into());
    msgs.push(frame_message(&stream.frames[0]));
    let replies = exchange(addr, &msgs).await;

    assert_eq!(replies[3]["type"], "error");
    assert_eq!(replies[5]["type"], "error");
    let spots: Vec<&Value> = replies.iter().filter(|r| r["type"] == "spot").collect();
    assert_eq!(spots.len(), 13);
    let n = replies.len();
    assert_eq!(replies[n - 2]["type"], "reset");
    assert_eq!(replies[n - 1]["t"], 0);
    assert_eq!(
        replies[n - 1]["robot"]["position"],
        serde_json::json!([0.0, 0.0, 0.0])
    );
}

#[tokio::test]
async fn bursts_are_queued_in_order_without_loss() {
    let (templates, model) = trained(&quick_config(ExperimentConfig::test1()));
    let addr = start_server(model, templates.clone()).await;
    let stream = hold_stream(&templates, &[3, 4, 9], 100, (20, 20));
    let msgs: Vec<String> = stream.frames.iter().map(frame_message).collect();
    let replies = exchange(addr, &msgs).await;
    assert_eq!(replies.len(), stream.len());
    for (i, r) in replies.iter().enumerate() {
        assert_eq!(r["t"], i as u64);
        let depth = r["queue_depth"].as_u64().unwrap() as usize;
        assert!(depth < stream.len() - i);
    }
}

#[tokio::test]
async fn sessions_are_isolated() {
    let (templates, model) = trained(&quick_config(ExperimentConfig::test1()));
    let addr = start_server(model, templates.clone()).await;
    let a = hold_stream(&templates, &[2], 30, (10, 10));
    let b = hold_stream(&templates, &[4], 30, (10, 10));
    let ma: Vec<String> = a.frames.iter().map(frame_message).collect();
    let mb: Vec<String> = b.frames.iter().map(frame_message).collect();
    let (ra, rb) = tokio::join!(exchange(addr, &ma), exchange(addr, &mb));
    assert_eq!(ra.last().unwrap()["robot"]["active_command"], "X+");
    assert_eq!(rb.last().unwrap()["robot"]["active_command"], "Y+");
    assert_eq!(ra.last().unwrap()["robot"]["position"][1], 0.0);
    assert_eq!(rb.last().unwrap()["robot"]["position"][0], 0.0);
}
