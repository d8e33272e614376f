use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use graphctx::gateway::{CompletionClient, CompletionRequest, GatewayError, HttpClient, HttpConfig};

/// Serves the canned `(status, body)` replies in order, recording request bodies.
fn serve(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<(String, String)>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        for (status, body) in replies {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                head.push_str(&line);
            }
            let mut buf = vec![0; length];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push((head, String::from_utf8(buf).unwrap()));
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

fn ok_body(text: &str) -> String {
    serde_json::json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string()
}

fn config(url: &str) -> HttpConfig {
    let mut cfg = HttpConfig::new(url);
    cfg.timeout = Duration::from_secs(5);
    cfg.backoff_base = Duration::from_millis(5);
    cfg.backoff_max = Duration::from_millis(20);
    cfg.max_retries = 2;
    cfg
}

#[test]
fn sends_chat_request_and_reads_reply() {
    let (url, seen) = serve(vec![(200, ok_body("Yes."))]);
    std::env::set_var("GRAPHCTX_HTTP_TEST_KEY", "sekrit");
    let mut cfg = config(&url);
    cfg.api_key_env = Some("GRAPHCTX_HTTP_TEST_KEY".into());
    let client = HttpClient::new(cfg);
    let resp = client.complete(&CompletionRequest::new("m1", "Is it?")).unwrap();
    assert_eq!(resp.text, "Yes.");
    assert!(!resp.from_cache);
    assert_eq!(client.call_count(), 1);
    let seen = seen.lock().unwrap();
    let (head, body) = &seen[0];
    assert!(head.starts_with("POST /v1/chat/completions"));
    assert!(head.to_ascii_lowercase().contains("authorization: bearer sekrit"));
    let body: serde_json::Value = serde_json::from_str(body).unwrap();
    assert_eq!(body["model"], "m1");
    assert_eq!(body["messages"][0]["content"], "Is it?");
    assert_eq!(body["temperature"], 0.001);
    assert_eq!(body["top_p"], 0.95);
    assert_eq!(body["max_tokens"], 512);
}

#[test]
fn retries_rate_limits_then_succeeds() {
    let (url, _) = serve(vec![(429, "{}".into()), (503, "{}".into()), (200, ok_body("No."))]);
    let client = HttpClient::new(config(&url));
    let resp = client.complete(&CompletionRequest::new("m", "p")).unwrap();
    assert_eq!(resp.text, "No.");
    assert_eq!(client.call_count(), 3);
}

#[test]
fn rate_limit_budget_exhausts() {
    let (url, _) = serve(vec![(429, "{}".into()); 3]);
    let client = HttpClient::new(config(&url));
    let err = client.complete(&CompletionRequest::new("m", "p")).unwrap_err();
    assert!(matches!(err, GatewayError::RateLimited { attempts: 3 }), "{err:?}");
    assert_eq!(client.call_count(), 3);
}

#[test]
fn auth_failure_is_not_retried() {
    let (url, _) = serve(vec![(401, r#"{"error":"bad key"}"#.into())]);
    let client = HttpClient::new(config(&url));
    let err = client.complete(&CompletionRequest::new("m", "p")).unwrap_err();
    assert!(matches!(err, GatewayError::Auth(_)), "{err:?}");
    assert_eq!(client.call_count(), 1);
}

#[test]
fn malformed_reply_is_reported() {
    let (url, _) = serve(vec![(200, r#"{"choices":[]}"#.into())]);
    let client = HttpClient::new(config(&url));
    let err = client.complete(&CompletionRequest::new("m", "p")).unwrap_err();
    assert!(matches!(err, GatewayError::MalformedProviderReply(_)), "{err:?}");
}
