//! Bundled deterministic target web server.
//!
//! Serves each configured path with a fixed artificial latency and a
//! fixed-size body, and exposes `/metrics` with per-object request counts.
//! Latency is constant per object, so end-to-end expectations stay
//! calculable (an M/D/1-like SUT).

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use crate::{Error, Result};

/// One servable object: a name for metrics, a path, and its latency.
#[derive(Debug, Clone)]
pub struct TargetObject {
    pub name: String,
    pub path: String,
    pub latency_ms: u64,
}

/// Handle to the running server; dropping it leaves the server running
/// until `shutdown` is called or the process exits.
pub struct TargetServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    counts: Arc<Mutex<BTreeMap<String, u64>>>,
    accept_thread: Option<JoinHandle<()>>,
}

/// Start the target server on `port` (0 picks an ephemeral port).
pub fn serve_target(objects: Vec<TargetObject>, port: u16) -> Result<TargetServer> {
    serve_target_with_body(objects, port, 1024)
}

/// Same as `serve_target` with a configurable response body size.
pub fn serve_target_with_body(
    objects: Vec<TargetObject>,
    port: u16,
    body_bytes: usize,
) -> Result<TargetServer> {
    if objects.is_empty() {
        return Err(Error::InvalidParameter("no objects to serve".into()));
    }
    let listener = TcpListener::bind(("127.0.0.1", port))
        .map_err(|e| Error::io(e, format!("127.0.0.1:{port}")))?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;

    let routes: Arc<BTreeMap<String, (String, u64)>> = Arc::new(
        objects
            .into_iter()
            .map(|o| (o.path, (o.name, o.latency_ms)))
            .collect(),
    );
    let counts = Arc::new(Mutex::new(BTreeMap::new()));
    let stop = Arc::new(AtomicBool::new(false));
    let body = Arc::new(vec![b'x'; body_bytes]);

    let accept_thread = {
        let routes = Arc::clone(&routes);
        let counts = Arc::clone(&counts);
        let stop = Arc::clone(&stop);
        std::thread::spawn(move || {
            while !stop.load(Ordering::Relaxed) {
                match listener.accept() {
                    Ok((stream, _)) => {
                        let routes = Arc::clone(&routes);
                        let counts = Arc::clone(&counts);
                        let stop = Arc::clone(&stop);
                        let body = Arc::clone(&body);
                        std::thread::spawn(move || serve_connection(stream, &routes, &counts, &stop, &body));
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        std::thread::sleep(Duration::from_millis(2));
                    }
                    Err(_) => break,
                }
            }
        })
    };

    Ok(TargetServer {
        addr,
        stop,
        counts,
        accept_thread: Some(accept_thread),
    })
}

fn serve_connection(
    stream: TcpStream,
    routes: &BTreeMap<String, (String, u64)>,
    counts: &Mutex<BTreeMap<String, u64>>,
    stop: &AtomicBool,
    body: &[u8],
) {
    stream.set_read_timeout(Some(Duration::from_secs(30))).ok();
    let mut writer = match stream.try_clone() {
        Ok(s) => s,
        Err(_) => return,
    };
    let mut reader = BufReader::new(stream);
    loop {
        if stop.load(Ordering::Relaxed) {
            return;
        }
        let mut request_line = String::new();
        match reader.read_line(&mut request_line) {
            Ok(0) | Err(_) => return,
            Ok(_) => {}
        }
        let path = match request_line.split_whitespace().nth(1) {
            Some(p) => p.to_string(),
            None => return,
        };
        let mut keep_alive = true;
        loop {
            let mut header = String::new();
            match reader.read_line(&mut header) {
                Ok(0) | Err(_) => return,
                Ok(_) => {}
            }
            let h = header.trim();
            if h.is_empty() {
                break;
            }
            if h.eq_ignore_ascii_case("connection: close") {
                keep_alive = false;
            }
        }

        let response = if path == "/metrics" {
            let lines: String = counts
                .lock()
                .unwrap()
                .iter()
                .map(|(name, n)| format!("{name} {n}\n"))
                .collect();
            http_response(200, lines.as_bytes(), keep_alive)
        } else {
            match routes.get(&path) {
                Some((name, latency_ms)) => {
                    *counts.lock().unwrap().entry(name.clone()).or_insert(0) += 1;
                    if *latency_ms > 0 {
                        std::thread::sleep(Duration::from_millis(*latency_ms));
                    }
                    http_response(200, body, keep_alive)
                }
                None => http_response(404, b"not found\n", keep_alive),
            }
        };
        if writer.write_all(&response).is_err() || writer.flush().is_err() {
            return;
        }
        if !keep_alive {
            return;
        }
    }
}

fn http_response(status: u16, body: &[u8], keep_alive: bool) -> Vec<u8> {
    let reason = match status {
        200 => "OK",
        404 => "Not Found",
        _ => "Error",
    };
    let mut out = format!(
        "HTTP/1.1 {status} {reason}\r\nContent-Type: text/plain\r\nContent-Length: {}\r\nConnection: {}\r\n\r\n",
        body.len(),
        if keep_alive { "keep-alive" } else { "close" },
    )
    .into_bytes();
    out.extend_from_slice(body);
    out
}

impl TargetServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Per-object request counts so far.
    pub fn metrics(&self) -> BTreeMap<String, u64> {
        self.counts.lock().unwrap().clone()
    }

    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.accept_thread.take() {
            let _ = h.join();
        }
    }
}

impl Drop for TargetServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        if let Some(h) = self.accept_thread.take() {
            let _ = h.join();
        }
    }
}

/// Build the target objects matching an object mix at one flat latency,
/// with optional per-object overrides.
pub fn targets_from_mix(
    mix: &crate::loadgen::ObjectMix,
    default_latency_ms: u64,
    overrides: &BTreeMap<String, u64>,
) -> Vec<TargetObject> {
    mix.entries
        .iter()
        .map(|e| TargetObject {
            name: e.object_name.clone(),
            path: e.path.clone(),
            latency_ms: *overrides.get(&e.object_name).unwrap_or(&default_latency_ms),
        })
        .collect()
}
