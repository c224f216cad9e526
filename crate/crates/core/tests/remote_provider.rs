use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use gendisc::embed::{CachedEmbedder, EmbeddingCache, EmbeddingProvider, ProviderConfig, RemoteProvider};
use gendisc::Error;
use serde_json::{json, Value};

#[derive(Default)]
struct Log {
    calls: AtomicUsize,
    auth: Mutex<Vec<String>>,
}

type Responder = dyn Fn(usize, &Value) -> (u16, Value) + Send + Sync;

fn handle(stream: TcpStream, log: Arc<Log>, respond: Arc<Responder>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut out = stream;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).unwrap_or(0) == 0 {
            return;
        }
        let mut len = 0;
        loop {
            let mut h = String::new();
            reader.read_line(&mut h).unwrap();
            let h = h.trim_end();
            if h.is_empty() {
                break;
            }
            let (name, value) = h.split_once(':').unwrap();
            match name.to_ascii_lowercase().as_str() {
                "content-length" => len = value.trim().parse().unwrap(),
                "authorization" => log.auth.lock().unwrap().push(value.trim().to_string()),
                _ => {}
            }
        }
        let mut body = vec![0; len];
        reader.read_exact(&mut body).unwrap();
        let request: Value = serde_json::from_slice(&body).unwrap();
        let n = log.calls.fetch_add(1, Ordering::SeqCst);
        let (status, reply) = respond(n, &request);
        let reply = reply.to_string();
        write!(
            out,
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{reply}",
            reply.len()
        )
        .unwrap();
        out.flush().unwrap();
    }
}

/// Starts a one-off HTTP server and returns its base URL.
fn serve(respond: impl Fn(usize, &Value) -> (u16, Value) + Send + Sync + 'static) -> (String, Arc<Log>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let log = Arc::new(Log::default());
    let respond: Arc<Responder> = Arc::new(respond);
    let server_log = log.clone();
    thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let (log, respond) = (server_log.clone(), respond.clone());
            thread::spawn(move || handle(stream, log, respond));
        }
    });
    (url, log)
}

fn vector_for(text: &str) -> Vec<f64> {
    vec![text.len() as f64, text.bytes().map(f64::from).sum::<f64>(), 1.0]
}

/// Embeds every input, listing the entries in reverse order.
fn embeddings(request: &Value) -> Value {
    let inputs = request["input"].as_array().unwrap();
    let data: Vec<Value> = inputs
        .iter()
        .enumerate()
        .rev()
        .map(|(i, t)| json!({"index": i, "embedding": vector_for(t.as_str().unwrap())}))
        .collect();
    json!({ "data": data })
}

fn config(batch_size: usize, max_retries: u32) -> ProviderConfig {
    ProviderConfig { batch_size, max_retries, backoff_base_ms: 1, max_parallel_requests: 3, ..Default::default() }
}

fn texts(words: &[&str]) -> Vec<String> {
    words.iter().map(|s| s.to_string()).collect()
}

#[test]
fn rate_limited_requests_are_retried() {
    let (url, log) = serve(|n, req| if n < 2 { (429, json!({"error": "slow down"})) } else { (200, embeddings(req)) });
    let p = RemoteProvider::new(&url, "m", "secret".into(), &config(64, 5));
    let out = p.embed_batch(&texts(&["a", "bb"])).unwrap();
    assert_eq!(out[0].values, vector_for("a"));
    assert_eq!(out[1].values, vector_for("bb"));
    assert_eq!(p.requests(), 3);
    assert_eq!(p.retries(), 2);
    assert_eq!(log.calls.load(Ordering::SeqCst), 3);
    assert!(log.auth.lock().unwrap().iter().all(|a| a == "Bearer secret"));
}

#[test]
fn client_errors_are_not_retried() {
    let (url, _log) = serve(|_, _| (400, json!({"error": "bad input"})));
    let p = RemoteProvider::new(&url, "m", "k".into(), &config(64, 5));
    match p.embed_batch(&texts(&["x"])) {
        Err(Error::Provider { status, message, .. }) => {
            assert_eq!(status, Some(400));
            assert!(message.contains("bad input"));
        }
        other => panic!("expected provider error, got {other:?}"),
    }
    assert_eq!(p.requests(), 1);
}

#[test]
fn retries_are_bounded() {
    let (url, _log) = serve(|_, _| (503, json!({})));
    let p = RemoteProvider::new(&url, "m", "k".into(), &config(64, 2));
    assert!(matches!(p.embed_batch(&texts(&["x"])), Err(Error::Provider { status: Some(503), .. })));
    assert_eq!(p.requests(), 3);
}

#[test]
fn chunked_parallel_requests_preserve_input_order() {
    let (url, log) = serve(|_, req| (200, embeddings(req)));
    let p = RemoteProvider::new(&url, "m", "k".into(), &config(2, 0));
    let input = texts(&["one", "two", "three", "four", "five", "six", "seven"]);
    let out = p.embed_batch(&input).unwrap();
    assert_eq!(log.calls.load(Ordering::SeqCst), 4);
    for (t, v) in input.iter().zip(&out) {
        assert_eq!(v.values, vector_for(t));
        assert_eq!(v.model_id, "m");
    }
    assert_eq!(p.provider_id(), format!("{url}/embeddings"));
}

#[test]
fn missing_index_in_response_is_an_integrity_error() {
    let (url, _log) = serve(|_, _| (200, json!({"data": [{"index": 0, "embedding": [1.0, 0.0]}]})));
    let p = RemoteProvider::new(&url, "m", "k".into(), &config(64, 0));
    assert!(matches!(p.embed_batch(&texts(&["a", "b"])), Err(Error::Integrity(_))));
}

#[test]
fn warm_cache_skips_the_endpoint() {
    let (url, log) = serve(|_, req| (200, embeddings(req)));
    let dir = tempfile::tempdir().unwrap();
    let input = texts(&["alpha", "beta", "alpha"]);
    let cold = {
        let p = RemoteProvider::new(&url, "m", "k".into(), &config(64, 0));
        let e = CachedEmbedder::new(Box::new(p), Some(EmbeddingCache::open(dir.path()).unwrap()));
        e.embed(&input, 0).unwrap()
    };
    assert_eq!(log.calls.load(Ordering::SeqCst), 1);
    let p = RemoteProvider::new(&url, "m", "k".into(), &config(64, 0));
    let e = CachedEmbedder::new(Box::new(p), Some(EmbeddingCache::open(dir.path()).unwrap()));
    let warm = e.embed(&input, 0).unwrap();
    assert_eq!(warm, cold);
    assert_eq!(e.stats().provider_requests, 0);
    assert_eq!(log.calls.load(Ordering::SeqCst), 1);
}

#[test]
fn missing_api_key_is_a_config_error() {
    let cfg = ProviderConfig {
        kind: gendisc::embed::ProviderKind::Remote,
        base_url: Some("http://127.0.0.1:9".into()),
        model_id: "m".into(),
        api_key_env: Some("GENDISC_TEST_KEY_THAT_IS_NOT_SET".into()),
        ..Default::default()
    };
    assert!(matches!(cfg.build(), Err(Error::Config(_))));
}
