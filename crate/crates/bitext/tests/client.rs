use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

use bitext::client::{ClientConfig, EmbedClient};
use bitext::error::BitextError;
use bitext::fake::FakeEncoder;
use serde_json::{json, Value};

/// Reads one HTTP request and returns its JSON body.
fn read_request(stream: &mut TcpStream) -> Value {
    let mut r = BufReader::new(stream);
    let mut len = None;
    let mut chunked = false;
    loop {
        let mut line = String::new();
        r.read_line(&mut line).unwrap();
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        let lower = line.to_ascii_lowercase();
        if let Some(v) = lower.strip_prefix("content-length:") {
            len = Some(v.trim().parse::<usize>().unwrap());
        }
        if lower.starts_with("transfer-encoding:") && lower.contains("chunked") {
            chunked = true;
        }
    }
    let mut body = Vec::new();
    if chunked {
        loop {
            let mut size = String::new();
            r.read_line(&mut size).unwrap();
            let n = usize::from_str_radix(size.trim(), 16).unwrap();
            let mut chunk = vec![0; n + 2];
            r.read_exact(&mut chunk).unwrap();
            if n == 0 {
                break;
            }
            body.extend_from_slice(&chunk[..n]);
        }
    } else {
        body.resize(len.unwrap_or(0), 0);
        r.read_exact(&mut body).unwrap();
    }
    serde_json::from_slice(&body).unwrap()
}

fn respond(stream: &mut TcpStream, status: u16, body: &str) {
    let reason = if status == 200 { "OK" } else { "Error" };
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    stream.flush().unwrap();
}

/// Serves requests with `handler(request_number, texts)` until the test ends.
fn serve(handler: impl Fn(usize, Vec<String>) -> (u16, String) + Send + 'static) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let count = Arc::new(AtomicUsize::new(0));
    let seen = count.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let mut s = stream.unwrap();
            let req = read_request(&mut s);
            let texts: Vec<String> = serde_json::from_value(req["texts"].clone()).unwrap();
            let n = seen.fetch_add(1, Ordering::SeqCst);
            let (status, body) = handler(n, texts);
            respond(&mut s, status, &body);
        }
    });
    (format!("http://{addr}"), count)
}

fn fake_body(texts: &[String]) -> String {
    let enc = FakeEncoder::new(8, 1);
    json!({ "dim": 8, "vectors": enc.embed_all(texts) }).to_string()
}

fn client(endpoint: String, batch_size: usize, max_attempts: u32) -> EmbedClient {
    EmbedClient::new(ClientConfig {
        endpoint,
        batch_size,
        max_attempts,
        initial_backoff_ms: 1,
        max_backoff_ms: 5,
        timeout_secs: 10,
        concurrency: 1,
    })
    .unwrap()
}

fn texts(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("sentence {i}")).collect()
}

#[test]
fn vectors_come_back_in_request_order_across_batches() {
    let (url, count) = serve(|_, t| (200, fake_body(&t)));
    let c = client(url, 2, 3);
    let input = texts(5);
    let (dim, vectors) = c.embed_texts(&input).unwrap();
    assert_eq!(dim, 8);
    assert_eq!(vectors, FakeEncoder::new(8, 1).embed_all(&input));
    assert_eq!(count.load(Ordering::SeqCst), 3);
}

#[test]
fn short_response_is_a_partial_response_error() {
    let (url, _) = serve(|_, t| (200, fake_body(&t[..t.len() - 1])));
    let err = client(url, 16, 3).embed_texts(&texts(3)).unwrap_err();
    assert!(matches!(err, BitextError::PartialResponse { expected: 3, got: 2 }), "{err:?}");
}

#[test]
fn transient_failures_are_retried() {
    let (url, count) = serve(|n, t| if n < 2 { (503, "{}".into()) } else { (200, fake_body(&t)) });
    let (_, v) = client(url, 16, 5).embed_texts(&texts(3)).unwrap();
    assert_eq!(v.len(), 3);
    assert_eq!(count.load(Ordering::SeqCst), 3);
}

#[test]
fn exhausted_retries_report_provider_unavailable() {
    let (url, count) = serve(|_, _| (500, "{}".into()));
    let err = client(url, 16, 3).embed_texts(&texts(2)).unwrap_err();
    assert!(matches!(err, BitextError::ProviderUnavailable { attempts: 3, .. }), "{err:?}");
    assert_eq!(count.load(Ordering::SeqCst), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, count) = serve(|_, _| (400, "{}".into()));
    let err = client(url, 16, 5).embed_texts(&texts(2)).unwrap_err();
    assert!(matches!(err, BitextError::Protocol(_)), "{err:?}");
    assert_eq!(count.load(Ordering::SeqCst), 1);
}

#[test]
fn unreachable_provider_is_unavailable() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = client(format!("http://127.0.0.1:{port}"), 16, 2).embed_texts(&texts(1)).unwrap_err();
    assert!(matches!(err, BitextError::ProviderUnavailable { attempts: 2, .. }), "{err:?}");
}

#[test]
fn empty_input_makes_no_request() {
    let (url, count) = serve(|_, t| (200, fake_body(&t)));
    let (_, v) = client(url, 16, 1).embed_texts(&[]).unwrap();
    assert!(v.is_empty());
    assert_eq!(count.load(Ordering::SeqCst), 0);
}

#[test]
fn concurrent_batches_keep_order() {
    let (url, _) = serve(|_, t| (200, fake_body(&t)));
    let c = EmbedClient::new(ClientConfig {
        endpoint: url,
        batch_size: 3,
        concurrency: 4,
        ..ClientConfig::default()
    })
    .unwrap();
    let input = texts(20);
    let (_, v) = c.embed_texts(&input).unwrap();
    assert_eq!(v, FakeEncoder::new(8, 1).embed_all(&input));
}
