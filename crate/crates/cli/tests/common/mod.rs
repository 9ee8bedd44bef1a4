#![allow(dead_code)]

use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::Value;
use signalscope::config::PipelineConfig;

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// Config for the bundled 600-document corpus writing into `out`.
pub fn fixture_config(out: &Path) -> PipelineConfig {
    PipelineConfig {
        corpus: Some(fixture("synth600.jsonl")),
        out: out.to_path_buf(),
        ..PipelineConfig::default()
    }
}

/// The six report surfaces of a completed run.
pub fn report_surfaces(out: &Path) -> Vec<PathBuf> {
    let mut v = vec![
        out.join("topics.csv"),
        out.join("similarity.csv"),
        out.join("signals.csv"),
        out.join("manifest.json"),
    ];
    v.extend(glob(out, "tem_"));
    v.extend(glob(&out.join("trends"), ""));
    v
}

fn glob(dir: &Path, prefix: &str) -> Vec<PathBuf> {
    let Ok(rd) = std::fs::read_dir(dir) else { return Vec::new() };
    let mut v: Vec<PathBuf> = rd
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with(prefix) && p.extension().is_some_and(|e| e == "json"))
        .collect();
    v.sort();
    v
}

/// Every file under `out` except the manifest, with its bytes.
pub fn snapshot(out: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![out.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in std::fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "manifest.json" {
                files.push((p.strip_prefix(out).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    files.sort();
    files
}

/// What the mock service answers: status and body for a parsed request and
/// its zero-based arrival index.
pub type Responder = dyn Fn(&Value, usize) -> (u16, String) + Send + Sync;

/// Minimal `POST /label` server recording every request body.
pub struct MockServer {
    pub url: String,
    pub requests: Arc<Mutex<Vec<Value>>>,
    server: Arc<tiny_http::Server>,
    worker: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(respond: Box<Responder>) -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
        let port = server.server_addr().to_ip().unwrap().port();
        let requests = Arc::new(Mutex::new(Vec::new()));
        let (srv, log) = (server.clone(), requests.clone());
        let worker = std::thread::spawn(move || {
            for mut req in srv.incoming_requests() {
                let mut body = String::new();
                req.as_reader().read_to_string(&mut body).unwrap();
                let ok_route = req.url() == "/label" && *req.method() == tiny_http::Method::Post;
                let parsed: Value = serde_json::from_str(&body).unwrap_or(Value::Null);
                let (status, text) = if ok_route {
                    let mut log = log.lock().unwrap();
                    log.push(parsed.clone());
                    respond(&parsed, log.len() - 1)
                } else {
                    (404, String::new())
                };
                let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
                let _ = req.respond(tiny_http::Response::from_string(text).with_status_code(status).with_header(header));
            }
        });
        MockServer {
            url: format!("http://127.0.0.1:{port}"),
            requests,
            server,
            worker: Some(worker),
        }
    }

    /// Answers every request with `{"label": label}`.
    pub fn echo(label: &str) -> Self {
        let body = serde_json::json!({ "label": label }).to_string();
        Self::start(Box::new(move |_, _| (200, body.clone())))
    }

    pub fn requests(&self) -> Vec<Value> {
        self.requests.lock().unwrap().clone()
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

/// A local URL nothing listens on.
pub fn dead_endpoint() -> String {
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    let port = l.local_addr().unwrap().port();
    drop(l);
    format!("http://127.0.0.1:{port}")
}

pub fn whitespace_tokens(request: &Value) -> usize {
    request["documents"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d.as_str().unwrap().split_whitespace().count())
        .sum()
}
