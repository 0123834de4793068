//! Instrumented local HTTP server for exercising the link validator.
//! Test support only; not part of the public API surface.
#![doc(hidden)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

#[derive(Clone)]
enum Behavior {
    Status(u16),
    Sleepy(Duration),
    HeadRefusing(String),
    ConcurrencyProbe(Duration),
}

pub struct TestServer {
    addr: SocketAddr,
    hits: Arc<AtomicUsize>,
    max_concurrent: Arc<AtomicUsize>,
    stop: Arc<AtomicBool>,
}

impl TestServer {
    /// Always answer with the given status.
    pub fn respond_status(status: u16) -> Self {
        Self::start(Behavior::Status(status))
    }

    /// Sleep past any sane client timeout before answering.
    pub fn sleepy(delay: Duration) -> Self {
        Self::start(Behavior::Sleepy(delay))
    }

    /// 405 on HEAD, 200 with the given body on GET.
    pub fn head_refusing(body: &str) -> Self {
        Self::start(Behavior::HeadRefusing(body.to_string()))
    }

    /// 200 after a small delay, tracking the concurrency high-water mark.
    pub fn concurrency_probe(delay: Duration) -> Self {
        Self::start(Behavior::ConcurrencyProbe(delay))
    }

    fn start(behavior: Behavior) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind test server");
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let current = Arc::new(AtomicUsize::new(0));
        let max_concurrent = Arc::new(AtomicUsize::new(0));
        let stop = Arc::new(AtomicBool::new(false));

        let server = Self {
            addr,
            hits: Arc::clone(&hits),
            max_concurrent: Arc::clone(&max_concurrent),
            stop: Arc::clone(&stop),
        };

        std::thread::spawn(move || {
            for conn in listener.incoming() {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = conn else { continue };
                let behavior = behavior.clone();
                let hits = Arc::clone(&hits);
                let current = Arc::clone(&current);
                let max_concurrent = Arc::clone(&max_concurrent);
                std::thread::spawn(move || {
                    handle(stream, behavior, hits, current, max_concurrent);
                });
            }
        });
        server
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{}", self.addr, path)
    }

    /// Requests that reached the server.
    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }

    /// High-water mark of simultaneous in-flight requests.
    pub fn max_concurrent(&self) -> usize {
        self.max_concurrent.load(Ordering::SeqCst)
    }
}

impl Drop for TestServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr); // unblock the accept loop
    }
}

fn handle(
    mut stream: TcpStream,
    behavior: Behavior,
    hits: Arc<AtomicUsize>,
    current: Arc<AtomicUsize>,
    max_concurrent: Arc<AtomicUsize>,
) {
    let _ = stream.set_read_timeout(Some(Duration::from_secs(5)));
    let mut reader = BufReader::new(match stream.try_clone() {
        Ok(s) => s,
        Err(_) => return,
    });
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).is_err() || request_line.is_empty() {
        return;
    }
    // drain headers
    loop {
        let mut line = String::new();
        match reader.read_line(&mut line) {
            Ok(0) => break,
            Ok(_) if line == "\r\n" || line == "\n" => break,
            Ok(_) => {}
            Err(_) => return,
        }
    }
    hits.fetch_add(1, Ordering::SeqCst);
    let method = request_line.split_whitespace().next().unwrap_or("");

    let in_flight = current.fetch_add(1, Ordering::SeqCst) + 1;
    max_concurrent.fetch_max(in_flight, Ordering::SeqCst);

    match behavior {
        Behavior::Status(code) => {
            let _ = write_response(&mut stream, code, "");
        }
        Behavior::Sleepy(delay) => {
            std::thread::sleep(delay);
            let _ = write_response(&mut stream, 200, "late");
        }
        Behavior::HeadRefusing(body) => {
            if method == "HEAD" {
                let _ = write_response(&mut stream, 405, "");
            } else {
                let _ = write_response(&mut stream, 200, &body);
            }
        }
        Behavior::ConcurrencyProbe(delay) => {
            std::thread::sleep(delay);
            let _ = write_response(&mut stream, 200, "ok");
        }
    }
    current.fetch_sub(1, Ordering::SeqCst);
}

fn write_response(stream: &mut TcpStream, status: u16, body: &str) -> std::io::Result<()> {
    let reason = match status {
        200 => "OK",
        404 => "Not Found",
        405 => "Method Not Allowed",
        410 => "Gone",
        500 => "Internal Server Error",
        _ => "Response",
    };
    let resp = format!(
        "HTTP/1.1 {status} {reason}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    stream.write_all(resp.as_bytes())?;
    stream.flush()?;
    // let the client finish reading before the socket drops
    let mut sink = [0u8; 64];
    let _ = stream.set_read_timeout(Some(Duration::from_millis(50)));
    let _ = stream.read(&mut sink);
    Ok(())
}
