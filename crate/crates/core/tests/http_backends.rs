use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use ndv_core::backend::{BackendError, BackendSpec, RetryPolicy};
use ndv_core::corpus::Article;
use ndv_core::embed::{embed_batch, EmbedError, HttpEmbedBackend};
use ndv_core::nermask::{annotate, HttpNerBackend};
use ndv_core::pipeline::{Pipeline, PipelineConfig, PipelineError, Stage};
use serde_json::{json, Value};

/// Scripted HTTP server: answers the n-th request with the n-th reply (the
/// last reply repeats) and records request bodies.
struct Mock {
    url: String,
    hits: Arc<AtomicUsize>,
    bodies: Arc<Mutex<Vec<Value>>>,
}

fn mock(replies: Vec<(u16, String)>) -> Mock {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let bodies = Arc::new(Mutex::new(Vec::new()));
    let (h, b) = (hits.clone(), bodies.clone());
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                let lower = line.to_ascii_lowercase();
                if let Some(v) = lower.strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
                if line == "\r\n" {
                    break;
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            b.lock().unwrap().push(serde_json::from_slice(&body).unwrap_or(Value::Null));
            let n = h.fetch_add(1, Ordering::SeqCst);
            let (status, text) = &replies[n.min(replies.len() - 1)];
            let resp = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                text.len()
            );
            let _ = stream.write_all(resp.as_bytes());
        }
    });
    Mock { url, hits, bodies }
}

fn fast() -> RetryPolicy {
    RetryPolicy {
        retries: 2,
        backoff_ms: 1,
        timeout_ms: 5_000,
    }
}

fn ok(body: Value) -> (u16, String) {
    (200, body.to_string())
}

#[test]
fn remote_ner_reply_is_used_for_masking() {
    let m = mock(vec![ok(json!({"annotations": [[
        {"token": "Alice", "start": 0, "end": 5, "tag": "B-PER"},
        {"token": "went", "start": 6, "end": 10, "tag": "O"},
        {"token": "home", "start": 11, "end": 15, "tag": "O"}
    ]]}))]);
    let cfg = PipelineConfig {
        ner_backend: BackendSpec::Url(m.url.clone()),
        retry: fast(),
        ..Default::default()
    };
    let pipe = Pipeline::from_config(cfg).unwrap();
    let article = Article {
        id: "a1".into(),
        source: "s".into(),
        date: "1900-01-01".into(),
        text: "Alice went home".into(),
        headline: None,
    };
    let masked = pipe.mask_articles(&[article]).unwrap();
    assert_eq!(masked[0].masked_text, "[MASK] went home");
    assert_eq!(m.bodies.lock().unwrap()[0], json!({"texts": ["Alice went home"]}));
}

#[test]
fn offsets_past_text_end_are_protocol_errors() {
    let m = mock(vec![ok(json!({"annotations": [[
        {"token": "Alice", "start": 0, "end": 50, "tag": "B-PER"}
    ]]}))]);
    let be = HttpNerBackend::new(&m.url, fast());
    let err = annotate(&be, &["Alice".into()]).unwrap_err();
    assert!(matches!(err, BackendError::Protocol(_)), "{err}");

    let cfg = PipelineConfig {
        ner_backend: BackendSpec::Url(m.url.clone()),
        retry: fast(),
        ..Default::default()
    };
    let pipe = Pipeline::from_config(cfg).unwrap();
    let err = pipe.annotate_texts(&["x1"], &["Alice".into()]).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Ner));
    assert!(!err.is_unavailable());
    assert!(matches!(err, PipelineError::Stage { ref article_id, .. } if article_id == "x1"));
}

#[test]
fn wrong_annotation_count_is_a_protocol_error() {
    let m = mock(vec![ok(json!({"annotations": []}))]);
    let be = HttpNerBackend::new(&m.url, fast());
    assert!(matches!(annotate(&be, &["a".into()]), Err(BackendError::Protocol(_))));
}

#[test]
fn remote_embeddings_are_normalized() {
    let m = mock(vec![ok(json!({"dim": 2, "vectors": [[3.0, 4.0], [0.0, 2.0]]}))]);
    let be = HttpEmbedBackend::new(&m.url, fast()).with_model("m1");
    let v = embed_batch(&be, &["a".into(), "b".into()]).unwrap();
    assert_eq!(v[0].as_slice(), [0.6, 0.8]);
    assert_eq!(v[1].as_slice(), [0.0, 1.0]);
    assert_eq!(m.bodies.lock().unwrap()[0], json!({"texts": ["a", "b"], "model": "m1"}));
}

#[test]
fn pinned_dim_mismatch_is_rejected() {
    let m = mock(vec![ok(json!({"dim": 2, "vectors": [[3.0, 4.0]]}))]);
    let be = HttpEmbedBackend::new(&m.url, fast()).with_dim(3);
    assert!(matches!(
        embed_batch(&be, &["a".into()]),
        Err(EmbedError::Backend(BackendError::Protocol(_)))
    ));
}

#[test]
fn inconsistent_reply_dim_is_a_protocol_error() {
    let m = mock(vec![ok(json!({"dim": 3, "vectors": [[3.0, 4.0]]}))]);
    let be = HttpEmbedBackend::new(&m.url, fast());
    assert!(matches!(
        embed_batch(&be, &["a".into()]),
        Err(EmbedError::Backend(BackendError::Protocol(_)))
    ));
}

#[test]
fn server_errors_are_retried() {
    let m = mock(vec![
        (503, "{}".into()),
        ok(json!({"dim": 1, "vectors": [[2.0]]})),
    ]);
    let be = HttpEmbedBackend::new(&m.url, fast());
    assert_eq!(embed_batch(&be, &["a".into()]).unwrap()[0].as_slice(), [1.0]);
    assert_eq!(m.hits.load(Ordering::SeqCst), 2);
}

#[test]
fn persistent_server_errors_mean_unavailable() {
    let m = mock(vec![(500, "{}".into())]);
    let cfg = PipelineConfig {
        embed_backend: BackendSpec::Url(m.url.clone()),
        retry: fast(),
        ..Default::default()
    };
    let pipe = Pipeline::from_config(cfg).unwrap();
    let err = pipe.embed_texts(&["q"], &["text".into()]).unwrap_err();
    assert_eq!(err.stage(), Some(Stage::Embed));
    assert!(err.is_unavailable());
    assert_eq!(m.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn client_errors_and_garbage_are_not_retried() {
    let m = mock(vec![(422, "{}".into())]);
    let be = HttpEmbedBackend::new(&m.url, fast());
    assert!(matches!(
        embed_batch(&be, &["a".into()]),
        Err(EmbedError::Backend(BackendError::Protocol(_)))
    ));
    assert_eq!(m.hits.load(Ordering::SeqCst), 1);

    let m = mock(vec![(200, "not json".into())]);
    let be = HttpNerBackend::new(&m.url, fast());
    assert!(matches!(annotate(&be, &["a".into()]), Err(BackendError::Protocol(_))));
    assert_eq!(m.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn refused_connection_means_unavailable() {
    let port = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let be = HttpNerBackend::new(format!("http://127.0.0.1:{port}/ner"), fast());
    assert!(matches!(annotate(&be, &["a".into()]), Err(BackendError::Unavailable { .. })));
}
