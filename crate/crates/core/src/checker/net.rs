//! TCP transport for the checker protocol.

use std::io::{self, BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::path::PathBuf;
use std::sync::{Arc, Mutex};
use std::thread;

use super::protocol::{handle_line, Request, Response};
use super::{Checker, CheckerError, FeedbackSignal, InMemoryChecker};

/// Serves the line protocol over TCP, one thread per connection. All
/// connections share one store behind a mutex, so interleaved SET/CHECK
/// sequences are linearizable.
pub struct CheckerServer {
    listener: TcpListener,
    store: Arc<Mutex<InMemoryChecker>>,
    snapshot: Option<PathBuf>,
}

impl CheckerServer {
    pub fn bind(addr: impl ToSocketAddrs) -> io::Result<Self> {
        Ok(Self {
            listener: TcpListener::bind(addr)?,
            store: Arc::new(Mutex::new(InMemoryChecker::new())),
            snapshot: None,
        })
    }

    /// Loads existing records from `path` if present and persists the store
    /// there after every mutating request.
    pub fn with_snapshot(mut self, path: impl Into<PathBuf>) -> io::Result<Self> {
        let path = path.into();
        if path.exists() {
            *self.store.lock().unwrap() = InMemoryChecker::snapshot_load(&path)?;
        }
        self.snapshot = Some(path);
        Ok(self)
    }

    pub fn local_addr(&self) -> io::Result<std::net::SocketAddr> {
        self.listener.local_addr()
    }

    pub fn store(&self) -> Arc<Mutex<InMemoryChecker>> {
        Arc::clone(&self.store)
    }

    /// Accept loop; runs until the listener fails.
    pub fn run(self) -> io::Result<()> {
        for stream in self.listener.incoming() {
            let stream = stream?;
            let store = Arc::clone(&self.store);
            let snapshot = self.snapshot.clone();
            thread::spawn(move || {
                let _ = serve_connection(stream, store, snapshot);
            });
        }
        Ok(())
    }
}

fn serve_connection(
    stream: TcpStream,
    store: Arc<Mutex<InMemoryChecker>>,
    snapshot: Option<PathBuf>,
) -> io::Result<()> {
    let mut writer = stream.try_clone()?;
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        let line = line?;
        let response = {
            let mut store = store.lock().unwrap();
            let response = handle_line(&mut store, &line);
            if let Some(path) = &snapshot {
                let mutating = line.starts_with("SET ") || line.starts_with("DEL ");
                if mutating && !response.starts_with("ERR") {
                    store.snapshot_save(path)?;
                }
            }
            response
        };
        writer.write_all(response.as_bytes())?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Client side: a blocking request/response channel to a remote checker.
pub struct TcpChecker {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl TcpChecker {
    pub fn connect(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        let writer = stream.try_clone()?;
        Ok(Self { reader: BufReader::new(stream), writer })
    }

    fn round_trip(&mut self, request: &Request) -> Result<Response, CheckerError> {
        self.writer.write_all(request.to_string().as_bytes())?;
        self.writer.write_all(b"\n")?;
        let mut line = String::new();
        if self.reader.read_line(&mut line)? == 0 {
            return Err(CheckerError::Protocol("connection closed".to_string()));
        }
        let line = line.trim_end_matches('\n');
        if let Some(reason) = line.strip_prefix("ERR ") {
            return Err(CheckerError::Remote(reason.to_string()));
        }
        match line {
            "OK" => Ok(Response::Ok),
            other => Ok(Response::Feedback(other.parse()?)),
        }
    }

    fn expect_ok(&mut self, request: &Request) -> Result<(), CheckerError> {
        match self.round_trip(request)? {
            Response::Ok => Ok(()),
            other => Err(CheckerError::Protocol(format!("expected OK, got {other}"))),
        }
    }
}

impl Checker for TcpChecker {
    fn set(&mut self, username: &str, first: char) -> Result<(), CheckerError> {
        self.expect_ok(&Request::Set { username: username.to_string(), first })
    }

    fn check(&mut self, username: &str, first: char) -> Result<FeedbackSignal, CheckerError> {
        match self.round_trip(&Request::Check { username: username.to_string(), first })? {
            Response::Feedback(signal) => Ok(signal),
            other => Err(CheckerError::Protocol(format!("expected feedback, got {other}"))),
        }
    }

    fn del(&mut self, username: &str) -> Result<(), CheckerError> {
        self.expect_ok(&Request::Del { username: username.to_string() })
    }
}
