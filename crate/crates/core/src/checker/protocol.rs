//! Line protocol: one UTF-8 request per line, one single-line response.
//!
//! ```text
//! SET <username> <char>    -> OK
//! CHECK <username> <char>  -> POS | NEG | UNKNOWN
//! DEL <username>           -> OK
//! anything else            -> ERR <reason>
//! ```

use std::fmt;

use super::{Checker, CheckerError, FeedbackSignal, InMemoryChecker};
use crate::hcl::alphabet_index;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    Set { username: String, first: char },
    Check { username: String, first: char },
    Del { username: String },
}

impl fmt::Display for Request {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Request::Set { username, first } => write!(f, "SET {username} {first}"),
            Request::Check { username, first } => write!(f, "CHECK {username} {first}"),
            Request::Del { username } => write!(f, "DEL {username}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Response {
    Ok,
    Feedback(FeedbackSignal),
    Err(String),
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Response::Ok => f.write_str("OK"),
            Response::Feedback(signal) => write!(f, "{signal}"),
            Response::Err(reason) => write!(f, "ERR {reason}"),
        }
    }
}

/// Parses one request line. Tokens are separated by single spaces; leading,
/// trailing, or doubled separators are malformed.
pub fn parse_request(line: &str) -> Result<Request, String> {
    if line.is_empty() {
        return Err("empty request".to_string());
    }
    let tokens: Vec<&str> = line.split(' ').collect();
    if tokens.iter().any(|t| t.is_empty()) {
        return Err("malformed spacing".to_string());
    }
    let char_arg = |token: &str| -> Result<char, String> {
        let mut chars = token.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) if alphabet_index(c).is_some() => Ok(c),
            _ => Err("invalid character".to_string()),
        }
    };
    match tokens[0] {
        "SET" => {
            if tokens.len() != 3 {
                return Err("usage: SET <username> <char>".to_string());
            }
            Ok(Request::Set { username: tokens[1].to_string(), first: char_arg(tokens[2])? })
        }
        "CHECK" => {
            if tokens.len() != 3 {
                return Err("usage: CHECK <username> <char>".to_string());
            }
            Ok(Request::Check { username: tokens[1].to_string(), first: char_arg(tokens[2])? })
        }
        "DEL" => {
            if tokens.len() != 2 {
                return Err("usage: DEL <username>".to_string());
            }
            Ok(Request::Del { username: tokens[1].to_string() })
        }
        _ => Err("unknown verb".to_string()),
    }
}

/// Applies a parsed request to the store.
pub fn handle_request(store: &mut InMemoryChecker, request: Request) -> Response {
    let result = match request {
        Request::Set { username, first } => store.set(&username, first).map(|()| Response::Ok),
        Request::Check { username, first } => {
            store.check(&username, first).map(Response::Feedback)
        }
        Request::Del { username } => store.del(&username).map(|()| Response::Ok),
    };
    // Parse-level validation already rejects bad characters, so errors here
    // are unreachable for wire traffic; map them anyway.
    result.unwrap_or_else(|e| match e {
        CheckerError::InvalidChar(_) => Response::Err("invalid character".to_string()),
        other => Response::Err(other.to_string()),
    })
}

/// One request line in, one response line out (without the trailing `\n`).
pub fn handle_line(store: &mut InMemoryChecker, line: &str) -> String {
    match parse_request(line) {
        Ok(request) => handle_request(store, request).to_string(),
        Err(reason) => Response::Err(reason).to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_lines_round_trip() {
        for (line, expected) in [
            ("SET alice a", Request::Set { username: "alice".into(), first: 'a' }),
            ("CHECK bob 9", Request::Check { username: "bob".into(), first: '9' }),
            ("DEL carol", Request::Del { username: "carol".into() }),
        ] {
            let parsed = parse_request(line).unwrap();
            assert_eq!(parsed, expected);
            assert_eq!(parsed.to_string(), line);
        }
    }

    #[test]
    fn malformed_lines_are_rejected() {
        for line in [
            "",
            "SET alice",
            "SET alice ab",
            "SET alice A",
            "SET  alice a",
            "SET alice a ",
            "CHECK alice",
            "DEL",
            "DEL alice a",
            "PING",
            "set alice a",
        ] {
            assert!(parse_request(line).is_err(), "accepted {line:?}");
        }
    }

    #[test]
    fn transcript_through_handle_line() {
        let mut store = InMemoryChecker::new();
        let transcript = [
            ("SET alice a", "OK"),
            ("CHECK alice a", "POS"),
            ("CHECK alice b", "NEG"),
            ("CHECK mallory x", "UNKNOWN"),
            ("SET alice b", "OK"),
            ("CHECK alice b", "POS"),
            ("DEL alice", "OK"),
            ("CHECK alice b", "UNKNOWN"),
            ("SET alice", "ERR usage: SET <username> <char>"),
            ("NOPE alice a", "ERR unknown verb"),
        ];
        for (request, expected) in transcript {
            assert_eq!(handle_line(&mut store, request), expected, "request {request:?}");
        }
    }
}
