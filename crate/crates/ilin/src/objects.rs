//! The built-in objects, each expressed as an [`IntervalSpec`].
//!
//! `validity` and `write_snapshot` follow the same scheme: a state carries
//! the values proposed so far (`vals`) and the processes with pending
//! invocations (`pend`); a transition may answer any non-empty subset of
//! the eligible processes. `validity_abort` adds an `abort` operation that
//! takes effect once `k` aborts are pending together. `ws_sequential` is
//! the non-deterministic *sequential* automaton for write-snapshot whose
//! states are the sets of indices written so far, and `restricted_queue`
//! is the three-process queue (enq(1) | enq(2) | deq) used to separate
//! one-shot objects from tasks.
//!
//! Values default to process indices: the value written by `Pi` is `i`.

use std::collections::BTreeSet;
use std::fmt;

use crate::histories::{Event, ProcessId};
use crate::interval::{
    pid_set, ConcurrencyClass, Flavor, IntervalExecution, IntervalSpec, SpecState,
};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObjectError {
    UnknownObject(String),
    BadParams(String),
}

impl fmt::Display for ObjectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ObjectError::UnknownObject(name) => write!(f, "unknown object '{name}'"),
            ObjectError::BadParams(m) => write!(f, "bad object parameters: {m}"),
        }
    }
}

impl std::error::Error for ObjectError {}

/// Name and parameters of a built-in object, parsed from CLI syntax like
/// `validity_abort:n=3,k=2` or `validity:n=3,U=1|2|3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuiltinObjectId {
    pub name: String,
    pub n: u32,
    pub k: Option<u32>,
    pub universe: Option<Vec<Value>>,
}

impl BuiltinObjectId {
    pub fn new(name: &str, n: u32) -> BuiltinObjectId {
        BuiltinObjectId {
            name: name.to_string(),
            n,
            k: None,
            universe: None,
        }
    }

    pub fn with_k(mut self, k: u32) -> BuiltinObjectId {
        self.k = Some(k);
        self
    }

    pub fn with_universe<I: IntoIterator<Item = Value>>(mut self, u: I) -> BuiltinObjectId {
        self.universe = Some(u.into_iter().collect());
        self
    }

    pub fn parse(text: &str) -> Result<BuiltinObjectId, ObjectError> {
        let (name, params) = match text.split_once(':') {
            Some((n, p)) => (n, p),
            None => (text, ""),
        };
        let mut id = BuiltinObjectId::new(name, 0);
        let mut have_n = false;
        for kv in params.split(',').filter(|s| !s.is_empty()) {
            let (key, val) = kv
                .split_once('=')
                .ok_or_else(|| ObjectError::BadParams(format!("expected key=value, got '{kv}'")))?;
            match key {
                "n" => {
                    id.n = val
                        .parse()
                        .map_err(|_| ObjectError::BadParams(format!("bad n '{val}'")))?;
                    have_n = true;
                }
                "k" => {
                    id.k = Some(
                        val.parse()
                            .map_err(|_| ObjectError::BadParams(format!("bad k '{val}'")))?,
                    );
                }
                "U" => {
                    let mut u = Vec::new();
                    for item in val.split('|') {
                        u.push(
                            Value::parse(item)
                                .map_err(|e| ObjectError::BadParams(format!("bad U item: {e}")))?,
                        );
                    }
                    id.universe = Some(u);
                }
                other => {
                    return Err(ObjectError::BadParams(format!("unknown parameter '{other}'")))
                }
            }
        }
        if !have_n {
            return Err(ObjectError::BadParams(format!(
                "object '{name}' needs n=<processes>"
            )));
        }
        Ok(id)
    }

    fn universe_or_indices(&self) -> Vec<Value> {
        match &self.universe {
            Some(u) => u.clone(),
            None => (0..self.n as i64).map(Value::Int).collect(),
        }
    }
}

/// Builds the spec for a built-in object.
pub fn builtin_spec(id: &BuiltinObjectId) -> Result<IntervalSpec, ObjectError> {
    if id.n < 1 {
        return Err(ObjectError::BadParams("n must be at least 1".into()));
    }
    match id.name.as_str() {
        "validity" => Ok(validity_spec(id.n, id.universe_or_indices())),
        "validity_abort" => {
            let k = id
                .k
                .ok_or_else(|| ObjectError::BadParams("validity_abort needs k".into()))?;
            if k < 1 || k > id.n {
                return Err(ObjectError::BadParams(format!(
                    "k must be in 1..=n, got k={k}, n={}",
                    id.n
                )));
            }
            Ok(validity_abort_spec(id.n, k, id.universe_or_indices()))
        }
        "write_snapshot" => Ok(write_snapshot_spec(id.n)),
        "safe_consensus" => Ok(safe_consensus_spec(id.n, id.universe_or_indices())),
        "ws_sequential" => Ok(ws_sequential_spec(id.n)),
        "restricted_queue" => {
            if id.n != 3 {
                return Err(ObjectError::BadParams(
                    "restricted_queue is defined for n=3".into(),
                ));
            }
            Ok(restricted_queue_spec())
        }
        other => Err(ObjectError::UnknownObject(other.to_string())),
    }
}

fn pids_value_to_set(q: &SpecState, key: &str) -> BTreeSet<ProcessId> {
    q.pid_attr(key)
}

fn payloads(class: &ConcurrencyClass) -> BTreeSet<Value> {
    class.events().iter().map(|e| e.payload.clone()).collect()
}

fn class_object(class: &ConcurrencyClass) -> String {
    class.events().iter().next().expect("non-empty").object.clone()
}

// All non-empty subsets, in deterministic order.
fn non_empty_subsets<T: Clone + Ord>(items: &BTreeSet<T>) -> Vec<BTreeSet<T>> {
    let v: Vec<&T> = items.iter().collect();
    let mut out = Vec::new();
    for mask in 1u32..(1 << v.len()) {
        let mut s = BTreeSet::new();
        for (i, item) in v.iter().enumerate() {
            if mask & (1 << i) != 0 {
                s.insert((*item).clone());
            }
        }
        out.push(s);
    }
    out
}

// Cartesian product of per-responder response options.
fn response_assignments(
    responders: &BTreeSet<ProcessId>,
    options: impl Fn(ProcessId) -> Vec<Event>,
) -> Vec<Vec<Event>> {
    let mut out: Vec<Vec<Event>> = vec![Vec::new()];
    for p in responders {
        let opts = options(*p);
        let mut next = Vec::new();
        for prefix in &out {
            for o in &opts {
                let mut v = prefix.clone();
                v.push(o.clone());
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// The validity object: an operation returns a value that has been
/// proposed in the same or an earlier invoking class.
pub fn validity_spec(n: u32, universe: Vec<Value>) -> IntervalSpec {
    let initial = SpecState::new([("vals", Value::set([])), ("pend", Value::set([]))]);
    IntervalSpec::new(
        "validity",
        n,
        &["validity"],
        Flavor::Interval,
        false,
        vec![initial],
        move |q, input| {
            if input.events().iter().any(|e| e.operation != "validity") {
                return Vec::new();
            }
            let object = class_object(input);
            let vals2: BTreeSet<Value> = q.set_attr("vals").union(&payloads(input)).cloned().collect();
            let pend2: BTreeSet<ProcessId> =
                pids_value_to_set(q, "pend").union(&input.ids()).copied().collect();
            let mut outs = Vec::new();
            for responders in non_empty_subsets(&pend2) {
                for events in response_assignments(&responders, |p| {
                    vals2
                        .iter()
                        .map(|v| Event::res(p.0, &object, "validity", v.clone()))
                        .collect()
                }) {
                    let class = ConcurrencyClass::responding(events).expect("valid class");
                    let next_pend: BTreeSet<ProcessId> =
                        pend2.difference(&responders).copied().collect();
                    let q2 = SpecState::new([
                        ("vals", Value::Set(vals2.clone())),
                        ("pend", pid_set(next_pend)),
                    ]);
                    outs.push((class, q2));
                }
            }
            outs
        },
        |q| pids_value_to_set(q, "pend"),
        move |q| {
            let pend = pids_value_to_set(q, "pend");
            let mut out = Vec::new();
            for p in 0..n {
                if pend.contains(&ProcessId(p)) {
                    continue;
                }
                for v in &universe {
                    out.push(Event::inv(p, "validity", "validity", v.clone()));
                }
            }
            out
        },
    )
}

/// The write-snapshot object: every response returns exactly the set of
/// values proposed up to and including its own invoking class. One-shot.
pub fn write_snapshot_spec(n: u32) -> IntervalSpec {
    let initial = SpecState::new([
        ("vals", Value::set([])),
        ("pend", Value::set([])),
        ("invoked", Value::set([])),
    ]);
    IntervalSpec::new(
        "write_snapshot",
        n,
        &["write_snapshot"],
        Flavor::Interval,
        true,
        vec![initial],
        move |q, input| {
            if input.events().iter().any(|e| e.operation != "write_snapshot") {
                return Vec::new();
            }
            let invoked = pids_value_to_set(q, "invoked");
            if input.ids().iter().any(|p| invoked.contains(p)) {
                return Vec::new(); // one-shot
            }
            let object = class_object(input);
            let vals2: BTreeSet<Value> = q.set_attr("vals").union(&payloads(input)).cloned().collect();
            let pend2: BTreeSet<ProcessId> =
                pids_value_to_set(q, "pend").union(&input.ids()).copied().collect();
            let invoked2: BTreeSet<ProcessId> = invoked.union(&input.ids()).copied().collect();
            let snapshot = Value::Set(vals2.clone());
            let mut outs = Vec::new();
            for responders in non_empty_subsets(&pend2) {
                let events: Vec<Event> = responders
                    .iter()
                    .map(|p| Event::res(p.0, &object, "write_snapshot", snapshot.clone()))
                    .collect();
                let class = ConcurrencyClass::responding(events).expect("valid class");
                let next_pend: BTreeSet<ProcessId> = pend2.difference(&responders).copied().collect();
                let q2 = SpecState::new([
                    ("vals", Value::Set(vals2.clone())),
                    ("pend", pid_set(next_pend)),
                    ("invoked", pid_set(invoked2.clone())),
                ]);
                outs.push((class, q2));
            }
            outs
        },
        |q| pids_value_to_set(q, "pend"),
        move |q| {
            let pend = pids_value_to_set(q, "pend");
            let invoked = pids_value_to_set(q, "invoked");
            (0..n)
                .filter(|p| !pend.contains(&ProcessId(*p)) && !invoked.contains(&ProcessId(*p)))
                .map(|p| Event::inv(p, "write_snapshot", "write_snapshot", Value::Int(p as i64)))
                .collect()
        },
    )
}

/// Validity with a k-abort operation. Once at least `k` aborts are pending
/// together, the object answers `aborted` from then on; a responding class
/// never mixes `aborted` with other responses; `notAborted` may only be
/// returned while `0 < pending aborts < k`.
pub fn validity_abort_spec(n: u32, k: u32, universe: Vec<Value>) -> IntervalSpec {
    let initial = SpecState::new([
        ("vals", Value::set([])),
        ("pend", Value::set([])),
        ("aborts", Value::set([])),
    ]);
    IntervalSpec::new(
        "validity_abort",
        n,
        &["propose", "abort"],
        Flavor::Interval,
        false,
        vec![initial],
        move |q, input| {
            if input
                .events()
                .iter()
                .any(|e| e.operation != "propose" && e.operation != "abort")
            {
                return Vec::new();
            }
            let object = class_object(input);
            let propose_vals: BTreeSet<Value> = input
                .events()
                .iter()
                .filter(|e| e.operation == "propose")
                .map(|e| e.payload.clone())
                .collect();
            let aborts_in: BTreeSet<ProcessId> = input
                .events()
                .iter()
                .filter(|e| e.operation == "abort")
                .map(|e| e.process)
                .collect();
            let vals2: BTreeSet<Value> = q.set_attr("vals").union(&propose_vals).cloned().collect();
            let aborts2: BTreeSet<ProcessId> =
                pids_value_to_set(q, "aborts").union(&aborts_in).copied().collect();
            let pend2: BTreeSet<ProcessId> =
                pids_value_to_set(q, "pend").union(&input.ids()).copied().collect();
            let abort_count = aborts2.len() as u32;

            let mut outs = Vec::new();
            for responders in non_empty_subsets(&pend2) {
                for events in response_assignments(&responders, |p| {
                    let mut opts = Vec::new();
                    if aborts2.contains(&p) {
                        opts.push(Event::res(p.0, &object, "abort", Value::sym("aborted")));
                        opts.push(Event::res(p.0, &object, "abort", Value::sym("notAborted")));
                    } else {
                        for v in &vals2 {
                            opts.push(Event::res(p.0, &object, "propose", v.clone()));
                        }
                        opts.push(Event::res(p.0, &object, "propose", Value::sym("aborted")));
                    }
                    opts
                }) {
                    let has_aborted = events.iter().any(|e| e.payload == Value::sym("aborted"));
                    let has_other = events.iter().any(|e| e.payload != Value::sym("aborted"));
                    if has_aborted && has_other {
                        continue; // aborted never co-occurs with other responses
                    }
                    let has_not_aborted =
                        events.iter().any(|e| e.payload == Value::sym("notAborted"));
                    if has_not_aborted && !(0 < abort_count && abort_count < k) {
                        continue;
                    }
                    if abort_count >= k && !has_aborted {
                        continue;
                    }
                    let not_aborted: BTreeSet<ProcessId> = events
                        .iter()
                        .filter(|e| e.payload == Value::sym("notAborted"))
                        .map(|e| e.process)
                        .collect();
                    let class = ConcurrencyClass::responding(events).expect("valid class");
                    let next_pend: BTreeSet<ProcessId> =
                        pend2.difference(&responders).copied().collect();
                    let next_aborts: BTreeSet<ProcessId> =
                        aborts2.difference(&not_aborted).copied().collect();
                    let q2 = SpecState::new([
                        ("vals", Value::Set(vals2.clone())),
                        ("pend", pid_set(next_pend)),
                        ("aborts", pid_set(next_aborts)),
                    ]);
                    outs.push((class, q2));
                }
            }
            outs
        },
        |q| pids_value_to_set(q, "pend"),
        move |q| {
            let pend = pids_value_to_set(q, "pend");
            let mut out = Vec::new();
            for p in 0..n {
                if pend.contains(&ProcessId(p)) {
                    continue;
                }
                for v in &universe {
                    out.push(Event::inv(p, "validity_abort", "propose", v.clone()));
                }
                out.push(Event::inv(p, "validity_abort", "abort", Value::sym("nil")));
            }
            out
        },
    )
}

/// Safe-consensus: agreement always; if the first invocation runs solo
/// (a singleton first invoking class), its response must carry its own
/// input, otherwise the first responding class picks any value from the
/// universe.
pub fn safe_consensus_spec(n: u32, universe: Vec<Value>) -> IntervalSpec {
    let initial = SpecState::new([("decided", Value::sym("_")), ("pend", Value::set([]))]);
    let inv_universe = universe.clone();
    IntervalSpec::new(
        "safe_consensus",
        n,
        &["scons"],
        Flavor::Interval,
        false,
        vec![initial],
        move |q, input| {
            if input.events().iter().any(|e| e.operation != "scons") {
                return Vec::new();
            }
            let object = class_object(input);
            let pend2: BTreeSet<ProcessId> =
                pids_value_to_set(q, "pend").union(&input.ids()).copied().collect();
            let decided = q.get("decided").clone();
            let virgin = decided == Value::sym("_");

            let candidates: Vec<Value> = if !virgin {
                vec![decided]
            } else if input.len() == 1 && pend2.len() == 1 {
                // solo first invocation: the response precedes every other
                // invocation, so it must return its own input
                vec![input.events().iter().next().unwrap().payload.clone()]
            } else {
                universe.clone()
            };

            let mut outs = Vec::new();
            for responders in non_empty_subsets(&pend2) {
                for d in &candidates {
                    let events: Vec<Event> = responders
                        .iter()
                        .map(|p| Event::res(p.0, &object, "scons", d.clone()))
                        .collect();
                    let class = ConcurrencyClass::responding(events).expect("valid class");
                    let next_pend: BTreeSet<ProcessId> =
                        pend2.difference(&responders).copied().collect();
                    let q2 = SpecState::new([
                        ("decided", d.clone()),
                        ("pend", pid_set(next_pend)),
                    ]);
                    outs.push((class, q2));
                }
            }
            outs
        },
        |q| pids_value_to_set(q, "pend"),
        move |q| {
            let pend = pids_value_to_set(q, "pend");
            let mut out = Vec::new();
            for p in 0..n {
                if pend.contains(&ProcessId(p)) {
                    continue;
                }
                for v in &inv_universe {
                    out.push(Event::inv(p, "safe_consensus", "scons", v.clone()));
                }
            }
            out
        },
    )
}

/// The non-deterministic sequential automaton for write-snapshot. States
/// are sets of written indices; an invocation by `i` moves from `s` to any
/// superset of `s ∪ {i}` and returns the new state. A process index
/// appears at most once along a path.
pub fn ws_sequential_spec(n: u32) -> IntervalSpec {
    let initial = SpecState::new([("written", Value::set([])), ("invoked", Value::set([]))]);
    IntervalSpec::new(
        "ws_sequential",
        n,
        &["write_snapshot"],
        Flavor::Sequential,
        true,
        vec![initial],
        move |q, input| {
            if input.len() != 1 {
                return Vec::new();
            }
            let e = input.events().iter().next().unwrap();
            if e.operation != "write_snapshot" || e.payload != Value::Int(e.process.0 as i64) {
                return Vec::new();
            }
            let invoked = pids_value_to_set(q, "invoked");
            if invoked.contains(&e.process) {
                return Vec::new();
            }
            let written: BTreeSet<i64> = q
                .set_attr("written")
                .iter()
                .map(|v| v.as_int().unwrap())
                .collect();
            let mut base = written.clone();
            base.insert(e.process.0 as i64);
            let others: BTreeSet<i64> = (0..n as i64).filter(|i| !base.contains(i)).collect();
            let mut outs = Vec::new();
            let mut extras = non_empty_subsets(&others);
            extras.insert(0, BTreeSet::new());
            for extra in extras {
                let state: BTreeSet<i64> = base.union(&extra).copied().collect();
                let snapshot = Value::int_set(state.iter().copied());
                let class = ConcurrencyClass::responding([Event::res(
                    e.process.0,
                    &e.object,
                    "write_snapshot",
                    snapshot.clone(),
                )])
                .expect("valid class");
                let mut invoked2 = invoked.clone();
                invoked2.insert(e.process);
                let q2 = SpecState::new([
                    ("written", snapshot),
                    ("invoked", pid_set(invoked2)),
                ]);
                outs.push((class, q2));
            }
            outs
        },
        |_| BTreeSet::new(),
        move |q| {
            let invoked = pids_value_to_set(q, "invoked");
            (0..n)
                .filter(|p| !invoked.contains(&ProcessId(*p)))
                .map(|p| Event::inv(p, "ws_sequential", "write_snapshot", Value::Int(p as i64)))
                .collect()
        },
    )
}

/// The restricted queue of three processes: P0 may enq(1), P1 may enq(2),
/// P2 may deq (getting `bot` when empty). Sequential, one-shot.
pub fn restricted_queue_spec() -> IntervalSpec {
    let initial = SpecState::new([("queue", Value::List(vec![])), ("invoked", Value::set([]))]);
    IntervalSpec::new(
        "restricted_queue",
        3,
        &["enq", "deq"],
        Flavor::Sequential,
        true,
        vec![initial],
        move |q, input| {
            if input.len() != 1 {
                return Vec::new();
            }
            let e = input.events().iter().next().unwrap();
            let invoked = pids_value_to_set(q, "invoked");
            if invoked.contains(&e.process) {
                return Vec::new();
            }
            let queue = match q.get("queue") {
                Value::List(items) => items.clone(),
                _ => unreachable!(),
            };
            let mut invoked2 = invoked.clone();
            invoked2.insert(e.process);
            let legal = matches!(
                (e.process.0, e.operation.as_str(), &e.payload),
                (0, "enq", Value::Int(1)) | (1, "enq", Value::Int(2))
            ) || (e.process.0 == 2 && e.operation == "deq");
            if !legal {
                return Vec::new();
            }
            if e.operation == "enq" {
                let mut queue2 = queue;
                queue2.push(e.payload.clone());
                let class = ConcurrencyClass::responding([Event::res(
                    e.process.0,
                    &e.object,
                    "enq",
                    Value::sym("ok"),
                )])
                .expect("valid class");
                let q2 = SpecState::new([
                    ("queue", Value::List(queue2)),
                    ("invoked", pid_set(invoked2)),
                ]);
                vec![(class, q2)]
            } else {
                let (front, rest) = match queue.split_first() {
                    Some((f, r)) => (f.clone(), r.to_vec()),
                    None => (Value::sym("bot"), Vec::new()),
                };
                let class = ConcurrencyClass::responding([Event::res(
                    e.process.0,
                    &e.object,
                    "deq",
                    front,
                )])
                .expect("valid class");
                let q2 = SpecState::new([
                    ("queue", Value::List(rest)),
                    ("invoked", pid_set(invoked2)),
                ]);
                vec![(class, q2)]
            }
        },
        |_| BTreeSet::new(),
        move |q| {
            let invoked = pids_value_to_set(q, "invoked");
            let mut out = Vec::new();
            if !invoked.contains(&ProcessId(0)) {
                out.push(Event::inv(0, "restricted_queue", "enq", Value::Int(1)));
            }
            if !invoked.contains(&ProcessId(1)) {
                out.push(Event::inv(1, "restricted_queue", "enq", Value::Int(2)));
            }
            if !invoked.contains(&ProcessId(2)) {
                out.push(Event::inv(2, "restricted_queue", "deq", Value::sym("nil")));
            }
            out
        },
    )
}

/// Direct predicate for safe-consensus on an interval execution: all
/// responded values agree, and when the first invocation runs alone and
/// its response precedes every other invocation, the agreed value is its
/// input.
pub fn safe_consensus_check(h: &IntervalExecution, _n: u32) -> bool {
    let mut responded: Vec<&Event> = Vec::new();
    for c in h.classes() {
        for e in c.events() {
            if e.is_response() {
                responded.push(e);
            }
        }
    }
    if responded.is_empty() {
        return true;
    }
    let first_val = &responded[0].payload;
    if !responded.iter().all(|e| &e.payload == first_val) {
        return false;
    }
    // locate the first invoking class
    let Some(first_class) = h.classes().first() else {
        return true;
    };
    if first_class.len() != 1 {
        return true;
    }
    let first = first_class.events().iter().next().unwrap();
    let response_class = h.classes().iter().position(|c| {
        c.kind == crate::interval::ClassKind::Responding && c.contains_process(first.process)
    });
    let Some(resp_at) = response_class else {
        return true; // the first invoker never returns: no constraint
    };
    let earliest_other_invocation = h
        .classes()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == crate::interval::ClassKind::Invoking)
        .flat_map(|(k, c)| {
            c.events()
                .iter()
                .filter(|e| e.process != first.process)
                .map(move |_| k)
        })
        .min();
    match earliest_other_invocation {
        Some(inv_at) if inv_at < resp_at => true, // not solo: any common value
        _ => first_val == &first.payload,         // solo first: must return its input
    }
}
