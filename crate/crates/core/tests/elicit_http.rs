#![cfg(feature = "http")]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crowdwise::crowdsim::generate_corpus;
use crowdwise::elicit::{elicit_all, AdapterSpec, ElicitationConfig, HttpEndpoint};

/// Minimal chat-completion server: answers every POST with "4" and counts
/// requests. Bodies are checked for the zero temperature.
fn spawn_mock() -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let counter = counter.clone();
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                loop {
                    let mut length = 0usize;
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        return;
                    }
                    loop {
                        let mut h = String::new();
                        reader.read_line(&mut h).unwrap();
                        if h == "\r\n" || h.is_empty() {
                            break;
                        }
                        if let Some(v) = h.to_ascii_lowercase().strip_prefix("content-length:") {
                            length = v.trim().parse().unwrap();
                        }
                    }
                    let mut body = vec![0; length];
                    reader.read_exact(&mut body).unwrap();
                    let json: serde_json::Value = serde_json::from_slice(&body).unwrap();
                    assert_eq!(json["temperature"], 0.0);
                    assert_eq!(json["model"], "mock-model");
                    counter.fetch_add(1, Ordering::SeqCst);
                    let reply = r#"{"choices":[{"message":{"role":"assistant","content":"4"}}]}"#;
                    let resp = format!(
                        "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{}",
                        reply.len(),
                        reply
                    );
                    if stream.write_all(resp.as_bytes()).is_err() {
                        return;
                    }
                }
            });
        }
    });
    (format!("http://{addr}/v1/chat/completions"), hits)
}

#[test]
fn http_round_trip_and_cache() {
    let (url, hits) = spawn_mock();
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_corpus(1, 0).unwrap();
    let config = ElicitationConfig {
        endpoint_url: url.clone(),
        model_name: "mock-model".into(),
        cache_path: dir.path().join("cache.jsonl"),
        retry_backoff_ms: 0,
        ..Default::default()
    };
    let endpoint = HttpEndpoint::new(AdapterSpec::openai_compatible(url)).unwrap();
    let variants = vec!["true".to_string()];
    let out = elicit_all(&config, &endpoint, &corpus, &variants).unwrap();
    assert_eq!(out.requests, corpus.len());
    assert_eq!(hits.load(Ordering::SeqCst), corpus.len());
    assert!(out.matrices["true"].row("mock-model").unwrap().iter().all(|p| *p == Some(0.75)));

    let again = elicit_all(&config, &endpoint, &corpus, &variants).unwrap();
    assert_eq!(again.requests, 0);
    assert_eq!(hits.load(Ordering::SeqCst), corpus.len());
}
