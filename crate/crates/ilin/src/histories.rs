//! Executions (histories) of processes on objects.
//!
//! An execution is a finite, totally ordered sequence of invocation and
//! response events; "real time" is list order. Well-formedness means each
//! process strictly alternates invocation, response, invocation, ...
//! starting with an invocation. A crash is simply a pending invocation.
//!
//! The on-disk form is one event per line:
//!
//! ```text
//! P0 inv ws.write_snapshot(0)
//! P0 res ws.write_snapshot -> {0,1}
//! ```
//!
//! with `#` comments, and `parse . print` the identity on canonical form.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::value::Value;

/// Dense process index in `[0, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProcessId(pub u32);

impl fmt::Display for ProcessId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    Invocation,
    Response,
}

/// One invocation or response. For invocations the payload is the input
/// argument; for responses it is the returned value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Event {
    pub kind: EventKind,
    pub process: ProcessId,
    pub object: String,
    pub operation: String,
    pub payload: Value,
}

impl Event {
    pub fn inv(process: u32, object: &str, operation: &str, payload: Value) -> Event {
        Event {
            kind: EventKind::Invocation,
            process: ProcessId(process),
            object: object.to_string(),
            operation: operation.to_string(),
            payload,
        }
    }

    pub fn res(process: u32, object: &str, operation: &str, payload: Value) -> Event {
        Event {
            kind: EventKind::Response,
            process: ProcessId(process),
            object: object.to_string(),
            operation: operation.to_string(),
            payload,
        }
    }

    pub fn is_invocation(&self) -> bool {
        self.kind == EventKind::Invocation
    }

    pub fn is_response(&self) -> bool {
        self.kind == EventKind::Response
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            EventKind::Invocation => write!(
                f,
                "{} inv {}.{}({})",
                self.process, self.object, self.operation, self.payload
            ),
            EventKind::Response => write!(
                f,
                "{} res {}.{} -> {}",
                self.process, self.object, self.operation, self.payload
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum HistoryError {
    /// Syntax error in a history document; carries the 1-based line number.
    MalformedEvent { line: usize, reason: String },
    /// Alternation or matching violated; carries the 0-based event index.
    NotWellFormed { index: usize, reason: String },
    /// `extend` was given a response matching no pending invocation.
    NoPendingMatch { event: String },
    /// One-shot mode violated; carries the 0-based event index.
    NotOneShot { index: usize },
}

impl fmt::Display for HistoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HistoryError::MalformedEvent { line, reason } => {
                write!(f, "line {line}: malformed event: {reason}")
            }
            HistoryError::NotWellFormed { index, reason } => {
                write!(f, "event {index}: not well-formed: {reason}")
            }
            HistoryError::NoPendingMatch { event } => {
                write!(f, "no pending invocation matches response {event}")
            }
            HistoryError::NotOneShot { index } => {
                write!(f, "event {index}: second invocation on the same object in one-shot mode")
            }
        }
    }
}

impl std::error::Error for HistoryError {}

/// An invocation paired with its matching response; pending iff the
/// response is absent. Indices point into the owning execution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct OperationCall {
    pub invocation: usize,
    pub response: Option<usize>,
}

impl OperationCall {
    pub fn is_pending(&self) -> bool {
        self.response.is_none()
    }
}

/// Real-time precedence over the completed calls of an execution:
/// `a` precedes `b` iff the response of `a` occurs before the invocation
/// of `b`. Concurrent calls are incomparable. The relation is an interval
/// order by construction.
#[derive(Clone, Debug)]
pub struct PrecedenceOrder {
    pub calls: Vec<OperationCall>,
    pairs: BTreeSet<(usize, usize)>,
}

impl PrecedenceOrder {
    /// Whether call `a` precedes call `b` (indices into `self.calls`).
    pub fn precedes(&self, a: usize, b: usize) -> bool {
        self.pairs.contains(&(a, b))
    }

    pub fn concurrent(&self, a: usize, b: usize) -> bool {
        a != b && !self.precedes(a, b) && !self.precedes(b, a)
    }

    pub fn pairs(&self) -> &BTreeSet<(usize, usize)> {
        &self.pairs
    }
}

/// A well-formed history.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Execution {
    events: Vec<Event>,
}

impl Execution {
    pub fn empty() -> Execution {
        Execution { events: Vec::new() }
    }

    /// Builds an execution, checking well-formedness.
    pub fn from_events(events: Vec<Event>) -> Result<Execution, HistoryError> {
        validate(&events)?;
        Ok(Execution { events })
    }

    /// Parses a history document. Event order is document order.
    pub fn parse(text: &str) -> Result<Execution, HistoryError> {
        let mut events = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(k) => &raw[..k],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            events.push(parse_line(line).map_err(|reason| HistoryError::MalformedEvent {
                line: lineno + 1,
                reason,
            })?);
        }
        Execution::from_events(events)
    }

    /// Canonical document form; `parse(print(e)) == e`.
    pub fn print(&self) -> String {
        let mut out = String::new();
        for ev in &self.events {
            out.push_str(&ev.to_string());
            out.push('\n');
        }
        out
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// All operation calls, in invocation order.
    pub fn calls(&self) -> Vec<OperationCall> {
        let mut calls: Vec<OperationCall> = Vec::new();
        let mut open: BTreeMap<ProcessId, usize> = BTreeMap::new();
        for (i, ev) in self.events.iter().enumerate() {
            match ev.kind {
                EventKind::Invocation => {
                    open.insert(ev.process, calls.len());
                    calls.push(OperationCall {
                        invocation: i,
                        response: None,
                    });
                }
                EventKind::Response => {
                    let k = open.remove(&ev.process).expect("validated");
                    calls[k].response = Some(i);
                }
            }
        }
        calls
    }

    pub fn pending_calls(&self) -> Vec<OperationCall> {
        self.calls().into_iter().filter(|c| c.is_pending()).collect()
    }

    /// comp(e): the events of completed calls, in original order.
    pub fn complete(&self) -> Execution {
        let mut answered: BTreeSet<usize> = BTreeSet::new();
        for c in self.calls() {
            if let Some(r) = c.response {
                answered.insert(c.invocation);
                answered.insert(r);
            }
        }
        let events = self
            .events
            .iter()
            .enumerate()
            .filter(|(i, _)| answered.contains(i))
            .map(|(_, e)| e.clone())
            .collect();
        Execution::from_events(events).expect("completion of well-formed is well-formed")
    }

    /// Appends responses to pending invocations; `self` is a prefix of the
    /// result.
    pub fn extend(&self, responses: &[Event]) -> Result<Execution, HistoryError> {
        let mut events = self.events.clone();
        for r in responses {
            if !r.is_response() {
                return Err(HistoryError::NoPendingMatch {
                    event: r.to_string(),
                });
            }
            let pending = pending_invocation_of(&events, r.process);
            match pending {
                Some(inv) if inv.object == r.object && inv.operation == r.operation => {
                    events.push(r.clone());
                }
                _ => {
                    return Err(HistoryError::NoPendingMatch {
                        event: r.to_string(),
                    })
                }
            }
        }
        Execution::from_events(events)
    }

    /// Real-time precedence over the completed calls.
    pub fn precedence(&self) -> PrecedenceOrder {
        let calls: Vec<OperationCall> = self.calls().into_iter().filter(|c| !c.is_pending()).collect();
        let mut pairs = BTreeSet::new();
        for (a, ca) in calls.iter().enumerate() {
            for (b, cb) in calls.iter().enumerate() {
                if a != b && ca.response.unwrap() < cb.invocation {
                    pairs.insert((a, b));
                }
            }
        }
        PrecedenceOrder { calls, pairs }
    }

    pub fn project_process(&self, p: ProcessId) -> Execution {
        let events = self.events.iter().filter(|e| e.process == p).cloned().collect();
        Execution::from_events(events).expect("projection of well-formed is well-formed")
    }

    pub fn project_object(&self, object: &str) -> Execution {
        let events = self.events.iter().filter(|e| e.object == object).cloned().collect();
        Execution::from_events(events).expect("projection of well-formed is well-formed")
    }

    pub fn objects(&self) -> BTreeSet<String> {
        self.events.iter().map(|e| e.object.clone()).collect()
    }

    pub fn processes(&self) -> BTreeSet<ProcessId> {
        self.events.iter().map(|e| e.process).collect()
    }

    /// All event-count prefixes, from empty to the full execution.
    pub fn prefixes(&self) -> Vec<Execution> {
        (0..=self.events.len())
            .map(|k| Execution::from_events(self.events[..k].to_vec()).expect("prefix is well-formed"))
            .collect()
    }

    /// Whether each process invokes at most once per object.
    pub fn is_one_shot(&self) -> bool {
        self.check_one_shot().is_ok()
    }

    pub fn check_one_shot(&self) -> Result<(), HistoryError> {
        let mut seen: BTreeSet<(ProcessId, &str)> = BTreeSet::new();
        for (i, ev) in self.events.iter().enumerate() {
            if ev.is_invocation() && !seen.insert((ev.process, ev.object.as_str())) {
                return Err(HistoryError::NotOneShot { index: i });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Execution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.print())
    }
}

fn pending_invocation_of(events: &[Event], p: ProcessId) -> Option<&Event> {
    let mut pending: Option<&Event> = None;
    for ev in events {
        if ev.process != p {
            continue;
        }
        match ev.kind {
            EventKind::Invocation => pending = Some(ev),
            EventKind::Response => pending = None,
        }
    }
    pending
}

fn validate(events: &[Event]) -> Result<(), HistoryError> {
    let mut pending: BTreeMap<ProcessId, &Event> = BTreeMap::new();
    for (i, ev) in events.iter().enumerate() {
        match ev.kind {
            EventKind::Invocation => {
                if pending.contains_key(&ev.process) {
                    return Err(HistoryError::NotWellFormed {
                        index: i,
                        reason: format!("{} invokes while its last invocation is pending", ev.process),
                    });
                }
                pending.insert(ev.process, ev);
            }
            EventKind::Response => match pending.remove(&ev.process) {
                None => {
                    return Err(HistoryError::NotWellFormed {
                        index: i,
                        reason: format!("{} responds without a pending invocation", ev.process),
                    })
                }
                Some(inv) => {
                    if inv.object != ev.object || inv.operation != ev.operation {
                        return Err(HistoryError::NotWellFormed {
                            index: i,
                            reason: format!(
                                "response {}.{} does not match pending invocation {}.{}",
                                ev.object, ev.operation, inv.object, inv.operation
                            ),
                        });
                    }
                }
            },
        }
    }
    Ok(())
}

fn ident(text: &str) -> Result<&str, String> {
    let ok = !text.is_empty()
        && text
            .bytes()
            .all(|c| c.is_ascii_alphanumeric() || c == b'_')
        && !text.as_bytes()[0].is_ascii_digit();
    if ok {
        Ok(text)
    } else {
        Err(format!("bad identifier '{text}'"))
    }
}

fn parse_line(line: &str) -> Result<Event, String> {
    let mut parts = line.splitn(3, char::is_whitespace);
    let pid = parts.next().ok_or("missing process id")?;
    let kind = parts.next().ok_or("missing inv/res keyword")?;
    let rest = parts.next().ok_or("missing event body")?.trim();

    let process = pid
        .strip_prefix('P')
        .and_then(|d| d.parse::<u32>().ok())
        .ok_or_else(|| format!("bad process id '{pid}', expected P<i>"))?;

    match kind {
        "inv" => {
            // <object>.<op>(<payload>)
            let open = rest.find('(').ok_or("invocation missing '('")?;
            let close = rest.rfind(')').ok_or("invocation missing ')'")?;
            if close < open {
                return Err("mismatched parentheses".to_string());
            }
            let (object, op) = split_target(&rest[..open])?;
            let payload = Value::parse(&rest[open + 1..close])?;
            Ok(Event::inv(process, object, op, payload))
        }
        "res" => {
            // <object>.<op> -> <payload>
            let arrow = rest.find("->").ok_or("response missing '->'")?;
            let (object, op) = split_target(rest[..arrow].trim())?;
            let payload = Value::parse(rest[arrow + 2..].trim())?;
            Ok(Event::res(process, object, op, payload))
        }
        other => Err(format!("expected 'inv' or 'res', found '{other}'")),
    }
}

fn split_target(text: &str) -> Result<(&str, &str), String> {
    let dot = text.find('.').ok_or("missing '.' between object and operation")?;
    Ok((ident(&text[..dot])?, ident(&text[dot + 1..])?))
}
