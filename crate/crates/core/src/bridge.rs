//! Out-of-process policies over a JSON-lines protocol on stdin/stdout.
//!
//! The server speaks first with a handshake record
//! `{"protocol_version":1,"action_count":4,"is_markov":true}`. The client
//! then sends one request per line, `{"id":7,"state":"<grid>"}` plus
//! `"trajectory":[0,3,...]` when the server declared itself non-Markov,
//! and the server answers each with `{"id":7,"probs":[...]}` or
//! `{"id":7,"error":"..."}`, in order.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::search::{
    Evaluation, Policy, PolicyError, SearchDomain, TrajectoryNode, PROB_SUM_TOLERANCE,
};
use crate::sokoban::SokobanDomain;
use crate::synthetic::RandomGraphDomain;

pub const PROTOCOL_VERSION: u32 = 1;

/// Responses may be off by this much from a unit sum; they are then
/// renormalized.
pub const BRIDGE_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Handshake {
    pub protocol_version: u32,
    pub action_count: usize,
    pub is_markov: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub state: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<u32>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Domains whose states have a text form a policy server understands.
pub trait StateEncoding: SearchDomain {
    fn encode_state(&self, state: &Self::State) -> String;
}

impl StateEncoding for SokobanDomain {
    fn encode_state(&self, state: &Self::State) -> String {
        SokobanDomain::encode_state(self, state)
    }
}

impl StateEncoding for RandomGraphDomain {
    fn encode_state(&self, state: &u32) -> String {
        state.to_string()
    }
}

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("cannot parse server command line {0:?}")]
    BadCommand(String),
    #[error("cannot start policy server: {0}")]
    Spawn(#[source] io::Error),
    #[error("policy server sent no handshake within {0:?}")]
    HandshakeTimeout(Duration),
    #[error("policy server closed its output before the handshake")]
    ClosedBeforeHandshake,
    #[error("malformed handshake {line:?}: {reason}")]
    BadHandshake { line: String, reason: String },
    #[error("unsupported protocol version {0}")]
    Version(u32),
    #[error("server declares {server} actions but the domain has {domain}")]
    ActionCount { server: usize, domain: usize },
    #[error("i/o error talking to policy server: {0}")]
    Io(#[from] io::Error),
}

struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<io::Result<String>>,
    next_id: u64,
    /// Set after the first fatal protocol error; later calls fail fast.
    broken: Option<String>,
}

/// A policy served by another process (or any pair of streams).
pub struct BridgePolicy {
    handshake: Handshake,
    connection: Mutex<Connection>,
    memo: Mutex<HashMap<String, Vec<f64>>>,
    requests: AtomicU64,
    request_timeout: Option<Duration>,
    child: Mutex<Option<Child>>,
}

impl std::fmt::Debug for BridgePolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BridgePolicy")
            .field("handshake", &self.handshake)
            .field("requests", &self.requests())
            .finish()
    }
}

fn spawn_line_reader<R: BufRead + Send + 'static>(reader: R) -> Receiver<io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for line in reader.lines() {
            let failed = line.is_err();
            if tx.send(line).is_err() || failed {
                break;
            }
        }
    });
    rx
}

impl BridgePolicy {
    /// Starts `command` (split shell-style) and waits for its handshake.
    pub fn spawn(command: &str, handshake_timeout: Duration) -> Result<Self, BridgeError> {
        let argv = shlex::split(command)
            .filter(|a| !a.is_empty())
            .ok_or_else(|| BridgeError::BadCommand(command.to_string()))?;
        let mut child = Command::new(&argv[0])
            .args(&argv[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(BridgeError::Spawn)?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let result = BridgePolicy::from_streams(BufReader::new(stdout), stdin, handshake_timeout);
        match result {
            Ok(policy) => {
                *policy.child.lock().unwrap() = Some(child);
                Ok(policy)
            }
            Err(e) => {
                let _ = child.kill();
                let _ = child.wait();
                Err(e)
            }
        }
    }

    /// Talks to a server over existing streams.
    pub fn from_streams<R, W>(reader: R, writer: W, handshake_timeout: Duration) -> Result<Self, BridgeError>
    where
        R: BufRead + Send + 'static,
        W: Write + Send + 'static,
    {
        let lines = spawn_line_reader(reader);
        let line = match lines.recv_timeout(handshake_timeout) {
            Ok(line) => line?,
            Err(RecvTimeoutError::Timeout) => return Err(BridgeError::HandshakeTimeout(handshake_timeout)),
            Err(RecvTimeoutError::Disconnected) => return Err(BridgeError::ClosedBeforeHandshake),
        };
        let handshake: Handshake = serde_json::from_str(&line).map_err(|e| BridgeError::BadHandshake {
            line: line.clone(),
            reason: e.to_string(),
        })?;
        if handshake.protocol_version != PROTOCOL_VERSION {
            return Err(BridgeError::Version(handshake.protocol_version));
        }
        if handshake.action_count == 0 {
            return Err(BridgeError::BadHandshake {
                line,
                reason: "action_count must be positive".into(),
            });
        }
        Ok(BridgePolicy {
            handshake,
            connection: Mutex::new(Connection {
                writer: Box::new(writer),
                lines,
                next_id: 0,
                broken: None,
            }),
            memo: Mutex::new(HashMap::new()),
            requests: AtomicU64::new(0),
            request_timeout: None,
            child: Mutex::new(None),
        })
    }

    /// Gives up on a request after `timeout` instead of waiting forever.
    pub fn with_request_timeout(mut self, timeout: Duration) -> Self {
        self.request_timeout = Some(timeout);
        self
    }

    pub fn handshake(&self) -> &Handshake {
        &self.handshake
    }

    /// Requests sent so far (memo hits are not requests).
    pub fn requests(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    /// Fails fast when the server's action count does not fit `domain`.
    pub fn check_domain<D: SearchDomain + ?Sized>(&self, domain: &D) -> Result<(), BridgeError> {
        if self.handshake.action_count != domain.action_count() {
            return Err(BridgeError::ActionCount {
                server: self.handshake.action_count,
                domain: domain.action_count(),
            });
        }
        Ok(())
    }

    fn query(&self, state: String, trajectory: Option<Vec<u32>>) -> Result<Vec<f64>, PolicyError> {
        let mut conn = self.connection.lock().unwrap();
        if let Some(reason) = &conn.broken {
            return Err(PolicyError::Unavailable(reason.clone()));
        }
        let result = self.round_trip(&mut conn, state, trajectory);
        if let Err(Fatal(reason)) = &result {
            conn.broken = Some(reason.clone());
        }
        result.map_err(|Fatal(reason)| PolicyError::Unavailable(reason))?
    }

    fn round_trip(
        &self,
        conn: &mut Connection,
        state: String,
        trajectory: Option<Vec<u32>>,
    ) -> Result<Result<Vec<f64>, PolicyError>, Fatal> {
        let id = conn.next_id;
        conn.next_id += 1;
        let request = Request { id, state, trajectory };
        let mut line = serde_json::to_string(&request).expect("requests serialize");
        line.push('\n');
        conn.writer
            .write_all(line.as_bytes())
            .and_then(|_| conn.writer.flush())
            .map_err(|e| Fatal(format!("policy server input closed: {e}")))?;
        self.requests.fetch_add(1, Ordering::Relaxed);

        let received = match self.request_timeout {
            Some(t) => conn.lines.recv_timeout(t).map_err(|e| match e {
                RecvTimeoutError::Timeout => Fatal(format!("no response to request {id} within {t:?}")),
                RecvTimeoutError::Disconnected => Fatal("policy server exited".into()),
            })?,
            None => conn.lines.recv().map_err(|_| Fatal("policy server exited".into()))?,
        };
        let text = received.map_err(|e| Fatal(format!("reading policy server output: {e}")))?;
        let response: Response = serde_json::from_str(&text)
            .map_err(|e| Fatal(format!("malformed response {text:?}: {e}")))?;
        if response.id != id {
            return Err(Fatal(format!("response id {} does not match request id {id}", response.id)));
        }
        if let Some(error) = response.error {
            return Ok(Err(PolicyError::Unavailable(format!("server error for request {id}: {error}"))));
        }
        let Some(probs) = response.probs else {
            return Err(Fatal(format!("response {id} has neither probs nor error")));
        };
        Ok(normalize_response(probs, self.handshake.action_count))
    }
}

struct Fatal(String);

/// Validates a served vector and rescales it to a unit sum.
pub fn normalize_response(mut probs: Vec<f64>, action_count: usize) -> Result<Vec<f64>, PolicyError> {
    if probs.len() != action_count {
        return Err(PolicyError::WrongLength {
            expected: action_count,
            got: probs.len(),
        });
    }
    for (action, &value) in probs.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(PolicyError::InvalidProbability { action, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > BRIDGE_SUM_TOLERANCE {
        return Err(PolicyError::BadSum { sum });
    }
    // Vectors an in-process policy would accept pass through untouched, so
    // a served table behaves bit-for-bit like the same table in process.
    if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
        probs.iter_mut().for_each(|p| *p /= sum);
    }
    Ok(probs)
}

impl Drop for BridgePolicy {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.lock().unwrap().take() {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl<D: StateEncoding + ?Sized> Policy<D> for BridgePolicy {
    fn is_markov(&self) -> bool {
        self.handshake.is_markov
    }

    fn evaluate(&self, domain: &D, node: &TrajectoryNode<D::State>) -> Result<Evaluation, PolicyError> {
        if self.handshake.action_count != domain.action_count() {
            return Err(PolicyError::WrongLength {
                expected: domain.action_count(),
                got: self.handshake.action_count,
            });
        }
        let state = domain.encode_state(node.state());
        if !self.handshake.is_markov {
            let trajectory = node.actions().iter().map(|a| a.0).collect();
            return self.query(state, Some(trajectory)).map(Evaluation::new);
        }
        if let Some(hit) = self.memo.lock().unwrap().get(&state) {
            return Ok(Evaluation::new(hit.clone()));
        }
        let probs = self.query(state.clone(), None)?;
        self.memo.lock().unwrap().insert(state, probs.clone());
        Ok(Evaluation::new(probs))
    }
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("line {line}: {reason}")]
    Row { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Deserialize, Serialize)]
struct TableRow {
    state: String,
    probs: Vec<f64>,
}

/// State text to conditionals; states not in the table are uniform.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbTable {
    action_count: usize,
    rows: HashMap<String, Vec<f64>>,
}

impl ProbTable {
    pub fn new(action_count: usize) -> Self {
        ProbTable {
            action_count,
            rows: HashMap::new(),
        }
    }

    /// Parses one `{"state": ..., "probs": [...]}` record per line.
    pub fn parse(text: &str, action_count: usize) -> Result<Self, TableError> {
        let mut table = ProbTable::new(action_count);
        for (index, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |reason: String| TableError::Row {
                line: index + 1,
                reason,
            };
            let row: TableRow = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
            crate::search::validate_conditionals(&row.probs, action_count).map_err(|e| err(e.to_string()))?;
            if row.probs.iter().sum::<f64>() == 0.0 {
                return Err(err("all-zero row".into()));
            }
            table.rows.insert(row.state, row.probs);
        }
        Ok(table)
    }

    pub fn load(path: &std::path::Path, action_count: usize) -> Result<Self, TableError> {
        ProbTable::parse(&std::fs::read_to_string(path)?, action_count)
    }

    pub fn insert(&mut self, state: String, probs: Vec<f64>) -> Result<(), PolicyError> {
        crate::search::validate_conditionals(&probs, self.action_count)?;
        self.rows.insert(state, probs);
        Ok(())
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, state: &str) -> Vec<f64> {
        self.rows
            .get(state)
            .cloned()
            .unwrap_or_else(|| vec![1.0 / self.action_count as f64; self.action_count])
    }

    /// The table in its file form, rows sorted by state for stable output.
    pub fn to_jsonl(&self) -> String {
        let mut states: Vec<&String> = self.rows.keys().collect();
        states.sort();
        states
            .into_iter()
            .map(|s| {
                let row = TableRow {
                    state: s.clone(),
                    probs: self.rows[s].clone(),
                };
                serde_json::to_string(&row).expect("rows serialize") + "\n"
            })
            .collect()
    }
}

/// A Markov policy backed by a [`ProbTable`], evaluated in process.
#[derive(Clone, Debug)]
pub struct TablePolicy {
    pub table: ProbTable,
}

impl<D: StateEncoding + ?Sized> Policy<D> for TablePolicy {
    fn is_markov(&self) -> bool {
        true
    }

    fn evaluate(&self, domain: &D, node: &TrajectoryNode<D::State>) -> Result<Evaluation, PolicyError> {
        if self.table.action_count != domain.action_count() {
            return Err(PolicyError::WrongLength {
                expected: domain.action_count(),
                got: self.table.action_count,
            });
        }
        Ok(Evaluation::new(self.table.get(&domain.encode_state(node.state()))))
    }
}

/// Answers requests from `input` with rows of `table` until end of input.
/// Malformed requests get an error record and the loop continues.
pub fn serve_table<R: BufRead, W: Write>(table: &ProbTable, input: R, mut output: W) -> io::Result<u64> {
    let handshake = Handshake {
        protocol_version: PROTOCOL_VERSION,
        action_count: table.action_count,
        is_markov: true,
    };
    writeln!(output, "{}", serde_json::to_string(&handshake).expect("handshake serializes"))?;
    output.flush()?;
    let mut answered = 0;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<Request>(&line) {
            Ok(request) => Response {
                id: request.id,
                probs: Some(table.get(&request.state)),
                error: None,
            },
            Err(e) => Response {
                id: serde_json::from_str::<serde_json::Value>(&line)
                    .ok()
                    .and_then(|v| v.get("id").and_then(|id| id.as_u64()))
                    .unwrap_or(0),
                probs: None,
                error: Some(e.to_string()),
            },
        };
        writeln!(output, "{}", serde_json::to_string(&response).expect("responses serialize"))?;
        output.flush()?;
        answered += 1;
    }
    Ok(answered)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_format() {
        let r = Request {
            id: 3,
            state: "#@#".into(),
            trajectory: None,
        };
        assert_eq!(serde_json::to_string(&r).unwrap(), r##"{"id":3,"state":"#@#"}"##);
        let r = Response {
            id: 3,
            probs: Some(vec![0.5, 0.5]),
            error: None,
        };
        assert_eq!(serde_json::to_string(&r).unwrap(), r#"{"id":3,"probs":[0.5,0.5]}"#);
    }

    #[test]
    fn normalization() {
        let p = normalize_response(vec![0.5, 0.5 + 5e-7], 2).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let exact = vec![0.1, 0.2, 0.7 - 1e-12];
        assert_eq!(normalize_response(exact.clone(), 3).unwrap(), exact);
        assert!(matches!(normalize_response(vec![0.45, 0.45], 2), Err(PolicyError::BadSum { .. })));
        assert!(normalize_response(vec![1.0], 2).is_err());
        assert!(normalize_response(vec![-0.5, 1.5], 2).is_err());
    }

    #[test]
    fn table_parse_and_default() {
        let t = ProbTable::parse("{\"state\":\"a\",\"probs\":[1,0]}\n\n", 2).unwrap();
        assert_eq!(t.get("a"), vec![1.0, 0.0]);
        assert_eq!(t.get("b"), vec![0.5, 0.5]);
        assert!(ProbTable::parse("{\"state\":\"a\",\"probs\":[0.2,0.2]}", 2).is_err());
        assert!(ProbTable::parse("nope", 2).is_err());
        assert_eq!(ProbTable::parse(&t.to_jsonl(), 2).unwrap(), t);
    }

    #[test]
    fn serve_loop_answers_in_order() {
        let t = ProbTable::parse("{\"state\":\"a\",\"probs\":[1,0]}", 2).unwrap();
        let input = "{\"id\":0,\"state\":\"a\"}\n{\"id\":1,\"state\":\"z\"}\n{\"id\":2,\"bad\":1}\n";
        let mut out = Vec::new();
        assert_eq!(serve_table(&t, input.as_bytes(), &mut out).unwrap(), 3);
        let lines: Vec<&str> = std::str::from_utf8(&out).unwrap().lines().collect();
        assert_eq!(lines[0], r#"{"protocol_version":1,"action_count":2,"is_markov":true}"#);
        assert_eq!(lines[1], r#"{"id":0,"probs":[1.0,0.0]}"#);
        assert_eq!(lines[2], r#"{"id":1,"probs":[0.5,0.5]}"#);
        assert!(lines[3].starts_with(r#"{"id":2,"error":"#));
    }
}
