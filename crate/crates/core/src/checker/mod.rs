//! The split-trust checker: one character per user, nothing else.
//!
//! The checker's whole state is a `username -> first character` map. It
//! never sees passwords, chains, or full random strings, so compromising it
//! alone reveals at most one character per account. It answers over a
//! line protocol (`SET` / `CHECK` / `DEL`) served on a byte stream, and an
//! in-process implementation backs deterministic tests and the federation
//! harness.

mod net;
mod protocol;

pub use net::{CheckerServer, TcpChecker};
pub use protocol::{handle_line, parse_request, Request, Response};

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::hcl::alphabet_index;

/// Verdict returned for a `CHECK`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackSignal {
    /// Submitted character matches the stored one.
    Pos,
    /// Username known, character differs: a decoy submission.
    Neg,
    /// No record for this username.
    Unknown,
}

impl fmt::Display for FeedbackSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeedbackSignal::Pos => "POS",
            FeedbackSignal::Neg => "NEG",
            FeedbackSignal::Unknown => "UNKNOWN",
        })
    }
}

impl FromStr for FeedbackSignal {
    type Err = CheckerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "POS" => Ok(FeedbackSignal::Pos),
            "NEG" => Ok(FeedbackSignal::Neg),
            "UNKNOWN" => Ok(FeedbackSignal::Unknown),
            other => Err(CheckerError::Protocol(format!("unexpected response {other:?}"))),
        }
    }
}

#[derive(Debug, Error)]
pub enum CheckerError {
    #[error("checker i/o: {0}")]
    Io(#[from] io::Error),
    #[error("checker rejected request: {0}")]
    Remote(String),
    #[error("checker protocol violation: {0}")]
    Protocol(String),
    #[error("character {0:?} is outside the a-z0-9 alphabet")]
    InvalidChar(char),
}

/// Anything the vault can talk to as a checker. `&mut self` throughout:
/// network-backed implementations drive a stream, the in-memory one
/// mutates its map.
pub trait Checker {
    fn set(&mut self, username: &str, first: char) -> Result<(), CheckerError>;
    fn check(&mut self, username: &str, first: char) -> Result<FeedbackSignal, CheckerError>;
    fn del(&mut self, username: &str) -> Result<(), CheckerError>;
}

/// A checker that can hand first characters back during a ring rotation.
/// The wire protocol has no verb for this, so only co-located checkers
/// qualify.
pub trait RekeyChecker: Checker {
    fn first_char_of(&self, username: &str) -> Result<Option<char>, CheckerError>;
}

impl RekeyChecker for InMemoryChecker {
    fn first_char_of(&self, username: &str) -> Result<Option<char>, CheckerError> {
        Ok(self.first_char(username))
    }
}

/// In-process checker store. Also the state behind [`CheckerServer`].
#[derive(Debug, Clone, Default)]
pub struct InMemoryChecker {
    records: BTreeMap<String, char>,
}

impl InMemoryChecker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stored first character for `username`, read directly. Used by the
    /// rekey path, which re-derives each random string from this character;
    /// the wire protocol deliberately has no equivalent verb.
    pub fn first_char(&self, username: &str) -> Option<char> {
        self.records.get(username).copied()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn usernames(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    /// Writes the snapshot format: one `SET <username> <char>` line per
    /// record, sorted by username.
    pub fn snapshot_write(&self, mut w: impl Write) -> io::Result<()> {
        for (username, first) in &self.records {
            writeln!(w, "SET {username} {first}")?;
        }
        Ok(())
    }

    /// Rebuilds a store from snapshot lines. Only `SET` lines are valid.
    pub fn snapshot_read(r: impl io::Read) -> io::Result<Self> {
        let mut store = Self::new();
        for line in io::BufReader::new(r).lines() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            match protocol::parse_request(&line) {
                Ok(Request::Set { username, first }) => {
                    store.records.insert(username, first);
                }
                _ => {
                    return Err(io::Error::new(
                        io::ErrorKind::InvalidData,
                        format!("snapshot line is not a SET request: {line:?}"),
                    ));
                }
            }
        }
        Ok(store)
    }

    pub fn snapshot_save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let mut buf = Vec::new();
        self.snapshot_write(&mut buf)?;
        std::fs::write(path, buf)
    }

    pub fn snapshot_load(path: impl AsRef<Path>) -> io::Result<Self> {
        Self::snapshot_read(std::fs::File::open(path)?)
    }
}

fn validate_char(c: char) -> Result<(), CheckerError> {
    if alphabet_index(c).is_some() {
        Ok(())
    } else {
        Err(CheckerError::InvalidChar(c))
    }
}

impl Checker for InMemoryChecker {
    fn set(&mut self, username: &str, first: char) -> Result<(), CheckerError> {
        validate_char(first)?;
        self.records.insert(username.to_string(), first);
        Ok(())
    }

    fn check(&mut self, username: &str, first: char) -> Result<FeedbackSignal, CheckerError> {
        validate_char(first)?;
        Ok(match self.records.get(username) {
            Some(&stored) if stored == first => FeedbackSignal::Pos,
            Some(_) => FeedbackSignal::Neg,
            None => FeedbackSignal::Unknown,
        })
    }

    fn del(&mut self, username: &str) -> Result<(), CheckerError> {
        self.records.remove(username);
        Ok(())
    }
}
