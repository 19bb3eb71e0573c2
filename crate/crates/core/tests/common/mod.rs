//! Shared test support: a minimal single-threaded HTTP mock server.

use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

/// Serves canned JSON bodies on a loopback port. Every connection gets the
/// response chosen by `pick` (given the request head) and the hit counter
/// increments.
pub struct MockHttpServer {
    pub url: String,
    pub hits: Arc<AtomicUsize>,
    shutdown: Arc<AtomicUsize>,
    handle: Option<JoinHandle<()>>,
}

impl MockHttpServer {
    pub fn start<F>(pick: F) -> Self
    where
        F: Fn(&str) -> String + Send + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind loopback");
        listener.set_nonblocking(true).expect("nonblocking");
        let port = listener.local_addr().unwrap().port();
        let hits = Arc::new(AtomicUsize::new(0));
        let shutdown = Arc::new(AtomicUsize::new(0));
        let hits_clone = hits.clone();
        let shutdown_clone = shutdown.clone();
        let handle = std::thread::spawn(move || {
            while shutdown_clone.load(Ordering::SeqCst) == 0 {
                match listener.accept() {
                    Ok((mut conn, _)) => {
                        hits_clone.fetch_add(1, Ordering::SeqCst);
                        let mut buf = vec![0u8; 65536];
                        let mut head = String::new();
                        // Read until the headers end; bodies we care about are
                        // small enough to arrive with them.
                        conn.set_read_timeout(Some(std::time::Duration::from_millis(500)))
                            .ok();
                        loop {
                            match conn.read(&mut buf) {
                                Ok(0) => break,
                                Ok(n) => {
                                    head.push_str(&String::from_utf8_lossy(&buf[..n]));
                                    if head.contains("\r\n\r\n") {
                                        let need = content_length(&head);
                                        let have =
                                            head.split("\r\n\r\n").nth(1).unwrap_or("").len();
                                        if have >= need {
                                            break;
                                        }
                                    }
                                }
                                Err(_) => break,
                            }
                        }
                        let body = pick(&head);
                        let response = format!(
                            "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                            body.len(),
                            body
                        );
                        let _ = conn.write_all(response.as_bytes());
                    }
                    Err(ref e) if e.kind() == std::io::ErrorKind::WouldBlock => {
                        std::thread::sleep(std::time::Duration::from_millis(5));
                    }
                    Err(_) => break,
                }
            }
        });
        MockHttpServer {
            url: format!("http://127.0.0.1:{port}"),
            hits,
            shutdown,
            handle: Some(handle),
        }
    }

    pub fn hit_count(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

fn content_length(head: &str) -> usize {
    head.lines()
        .find_map(|l| {
            let (k, v) = l.split_once(':')?;
            k.eq_ignore_ascii_case("content-length")
                .then(|| v.trim().parse().ok())?
        })
        .unwrap_or(0)
}

impl Drop for MockHttpServer {
    fn drop(&mut self) {
        self.shutdown.store(1, Ordering::SeqCst);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}
