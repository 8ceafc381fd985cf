use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use edsynth_core::gateway::{Backend, RetryPolicy};
use edsynth_core::{Error, GenerationConfig, HttpBackend, LlmRequest};

/// Serves the given (status, body) pairs in order, one per connection.
fn stub_server(replies: Vec<(u16, &'static str)>) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for (status, body) in replies {
            let Ok((stream, _)) = listener.accept() else { return };
            counter.fetch_add(1, Ordering::SeqCst);
            let mut reader = BufReader::new(stream);
            let mut len = 0usize;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
            }
            let mut buf = vec![0; len];
            let _ = reader.read_exact(&mut buf);
            let mut stream = reader.into_inner();
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
        }
    });
    (format!("http://{addr}/v1"), hits)
}

const OK: &str = r#"{"choices":[{"message":{"role":"assistant","content":"raid"}}]}"#;

fn fast() -> RetryPolicy {
    RetryPolicy {
        base_delay: Duration::from_millis(5),
        max_delay: Duration::from_millis(20),
    }
}

fn request() -> LlmRequest {
    LlmRequest::new("t", "sys", "find triggers", &GenerationConfig::default())
}

#[test]
fn retries_rate_limits_then_succeeds() {
    let (base, hits) = stub_server(vec![(429, "{}"), (429, "{}"), (200, OK)]);
    let backend = HttpBackend::new(&base, Some("k".into())).with_retry_policy(fast());
    let req = request();
    let out = backend.complete(&req, &req.digest()).unwrap();
    assert_eq!(out.text, "raid");
    assert_eq!(out.attempts, 3);
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn gives_up_after_max_retries() {
    let (base, hits) = stub_server(vec![(503, "{}"); 4]);
    let backend = HttpBackend::new(&base, None).with_retry_policy(fast());
    let req = request();
    let err = backend.complete(&req, &req.digest()).unwrap_err();
    assert!(matches!(err, Error::BackendUnavailable { attempts: 4, .. }), "{err:?}");
    assert_eq!(hits.load(Ordering::SeqCst), 4);
}

#[test]
fn client_errors_are_not_retried() {
    let (base, hits) = stub_server(vec![(400, "{}"), (200, OK)]);
    let backend = HttpBackend::new(&base, None).with_retry_policy(fast());
    let req = request();
    assert!(backend.complete(&req, &req.digest()).is_err());
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn backoff_is_seeded_and_capped() {
    let p = RetryPolicy::default();
    assert_eq!(p.delay(2, 7, "d"), p.delay(2, 7, "d"));
    assert!(p.delay(1, 7, "d") >= Duration::from_millis(500));
    assert!(p.delay(1, 7, "d") <= Duration::from_millis(750));
    assert!(p.delay(20, 7, "d") <= Duration::from_secs(45));
}
