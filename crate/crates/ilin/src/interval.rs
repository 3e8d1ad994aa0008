//! Interval-sequential objects: concurrency classes, the Mealy-style
//! transition relation, and acceptance of interval-sequential executions.
//!
//! An object consumes an *invoking* concurrency class (a set of invocations,
//! at most one per process) and emits a *responding* class, so an operation
//! may span several transitions. Set-sequential and sequential objects are
//! the special cases where every transition answers exactly the invocations
//! it consumed (and, for sequential, classes are singletons).
//!
//! The transition relation is intensional: a rule function enumerates the
//! `(responding class, next state)` pairs on demand, because interesting
//! objects have state spaces exponential in the number of processes.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use crate::histories::{Event, EventKind, ProcessId};
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum ClassKind {
    Invoking,
    Responding,
}

/// A non-empty set of same-kind events, at most one per process.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct ConcurrencyClass {
    pub kind: ClassKind,
    events: BTreeSet<Event>,
}

impl ConcurrencyClass {
    pub fn new(kind: ClassKind, events: BTreeSet<Event>) -> Result<ConcurrencyClass, SpecError> {
        if events.is_empty() {
            return Err(SpecError::BadClass("empty concurrency class".into()));
        }
        let expected = match kind {
            ClassKind::Invoking => EventKind::Invocation,
            ClassKind::Responding => EventKind::Response,
        };
        let mut seen = BTreeSet::new();
        for e in &events {
            if e.kind != expected {
                return Err(SpecError::BadClass(format!(
                    "event {e} has the wrong kind for a {kind:?} class"
                )));
            }
            if !seen.insert(e.process) {
                return Err(SpecError::BadClass(format!(
                    "two events by {} in one class",
                    e.process
                )));
            }
        }
        Ok(ConcurrencyClass { kind, events })
    }

    pub fn invoking<I: IntoIterator<Item = Event>>(events: I) -> Result<ConcurrencyClass, SpecError> {
        ConcurrencyClass::new(ClassKind::Invoking, events.into_iter().collect())
    }

    pub fn responding<I: IntoIterator<Item = Event>>(events: I) -> Result<ConcurrencyClass, SpecError> {
        ConcurrencyClass::new(ClassKind::Responding, events.into_iter().collect())
    }

    pub fn events(&self) -> &BTreeSet<Event> {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn ids(&self) -> BTreeSet<ProcessId> {
        self.events.iter().map(|e| e.process).collect()
    }

    pub fn contains_process(&self, p: ProcessId) -> bool {
        self.events.iter().any(|e| e.process == p)
    }

    pub fn event_of(&self, p: ProcessId) -> Option<&Event> {
        self.events.iter().find(|e| e.process == p)
    }

    /// The subset of events on `object`, if any.
    pub fn restrict(&self, object: &str) -> Option<ConcurrencyClass> {
        let sub: BTreeSet<Event> = self
            .events
            .iter()
            .filter(|e| e.object == object)
            .cloned()
            .collect();
        if sub.is_empty() {
            None
        } else {
            Some(ConcurrencyClass {
                kind: self.kind,
                events: sub,
            })
        }
    }
}

impl fmt::Display for ConcurrencyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, e) in self.events.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            match e.kind {
                EventKind::Invocation => write!(f, "{}.{}({})", e.process, e.operation, e.payload)?,
                EventKind::Response => write!(f, "{}:{}", e.process, e.payload)?,
            }
        }
        write!(f, "}}")
    }
}

/// An alternating sequence `I0, R0, I1, R1, ..., Im, Rm` of concurrency
/// classes, starting with an invoking class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntervalExecution {
    classes: Vec<ConcurrencyClass>,
}

impl IntervalExecution {
    pub fn empty() -> IntervalExecution {
        IntervalExecution { classes: Vec::new() }
    }

    pub fn new(classes: Vec<ConcurrencyClass>) -> Result<IntervalExecution, SpecError> {
        if !classes.len().is_multiple_of(2) {
            return Err(SpecError::NotAlternating(
                "class list must pair invoking and responding classes".into(),
            ));
        }
        for (k, c) in classes.iter().enumerate() {
            let want = if k % 2 == 0 {
                ClassKind::Invoking
            } else {
                ClassKind::Responding
            };
            if c.kind != want {
                return Err(SpecError::NotAlternating(format!(
                    "class {k} should be {want:?}"
                )));
            }
        }
        let h = IntervalExecution { classes };
        h.check_matching()?;
        Ok(h)
    }

    /// Builds from `(invoking, responding)` pairs.
    pub fn from_pairs(
        pairs: Vec<(ConcurrencyClass, ConcurrencyClass)>,
    ) -> Result<IntervalExecution, SpecError> {
        let mut classes = Vec::with_capacity(pairs.len() * 2);
        for (i, r) in pairs {
            classes.push(i);
            classes.push(r);
        }
        IntervalExecution::new(classes)
    }

    // Each response must match an invocation in an earlier-or-equal class,
    // with no intervening re-invocation; per process, invocations and
    // responses alternate.
    fn check_matching(&self) -> Result<(), SpecError> {
        let mut pending: BTreeMap<ProcessId, &Event> = BTreeMap::new();
        for c in &self.classes {
            for e in c.events() {
                match e.kind {
                    EventKind::Invocation => {
                        if pending.contains_key(&e.process) {
                            return Err(SpecError::NotAlternating(format!(
                                "{} invokes while pending",
                                e.process
                            )));
                        }
                        pending.insert(e.process, e);
                    }
                    EventKind::Response => match pending.remove(&e.process) {
                        Some(inv) if inv.object == e.object && inv.operation == e.operation => {}
                        _ => {
                            return Err(SpecError::NotAlternating(format!(
                                "response by {} matches no pending invocation",
                                e.process
                            )))
                        }
                    },
                }
            }
        }
        Ok(())
    }

    pub fn classes(&self) -> &[ConcurrencyClass] {
        &self.classes
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&ConcurrencyClass, &ConcurrencyClass)> {
        self.classes.chunks(2).map(|c| (&c[0], &c[1]))
    }

    pub fn len_pairs(&self) -> usize {
        self.classes.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Even-length prefixes of the class list (including empty and full).
    pub fn even_prefixes(&self) -> Vec<IntervalExecution> {
        (0..=self.len_pairs())
            .map(|k| IntervalExecution {
                classes: self.classes[..2 * k].to_vec(),
            })
            .collect()
    }

    /// Events flattened in class order, with each class's events in
    /// process order.
    pub fn events_in_order(&self) -> Vec<&Event> {
        self.classes.iter().flat_map(|c| c.events().iter()).collect()
    }

    /// The subsequence of events by `p`, in class order.
    pub fn project_process(&self, p: ProcessId) -> Vec<&Event> {
        self.events_in_order()
            .into_iter()
            .filter(|e| e.process == p)
            .collect()
    }

    pub fn objects(&self) -> BTreeSet<String> {
        self.classes
            .iter()
            .flat_map(|c| c.events().iter().map(|e| e.object.clone()))
            .collect()
    }

    /// For each completed operation, the pair of class indices holding its
    /// invocation and response.
    pub fn call_spans(&self) -> Vec<(ProcessId, usize, usize)> {
        let mut open: BTreeMap<ProcessId, usize> = BTreeMap::new();
        let mut spans = Vec::new();
        for (k, c) in self.classes.iter().enumerate() {
            for e in c.events() {
                match e.kind {
                    EventKind::Invocation => {
                        open.insert(e.process, k);
                    }
                    EventKind::Response => {
                        if let Some(start) = open.remove(&e.process) {
                            spans.push((e.process, start, k));
                        }
                    }
                }
            }
        }
        spans
    }
}

impl fmt::Display for IntervalExecution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (i, r)) in self.pairs().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "I{k}{i} R{k}{r}")?;
        }
        Ok(())
    }
}

/// Projection of an interval-sequential execution at one object: classes
/// restricted to that object's events, empty classes dropped, order kept.
pub fn project_interval(h: &IntervalExecution, object: &str) -> Result<IntervalExecution, SpecError> {
    let classes: Vec<ConcurrencyClass> = h
        .classes()
        .iter()
        .filter_map(|c| c.restrict(object))
        .collect();
    for (k, c) in classes.iter().enumerate() {
        let want = if k % 2 == 0 {
            ClassKind::Invoking
        } else {
            ClassKind::Responding
        };
        if c.kind != want {
            return Err(SpecError::NotAlternating(format!(
                "projection at {object} is not alternating at class {k}"
            )));
        }
    }
    IntervalExecution::new(classes)
}

/// Structured state of an interval-sequential automaton: named attributes
/// over [`Value`], e.g. `vals`, `pend`, `aborts`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SpecState(BTreeMap<&'static str, Value>);

impl SpecState {
    pub fn new<I: IntoIterator<Item = (&'static str, Value)>>(attrs: I) -> SpecState {
        SpecState(attrs.into_iter().collect())
    }

    pub fn get(&self, key: &str) -> &Value {
        self.0
            .iter()
            .find(|(k, _)| **k == key)
            .map(|(_, v)| v)
            .unwrap_or_else(|| panic!("state has no attribute '{key}'"))
    }

    pub fn with(&self, key: &'static str, value: Value) -> SpecState {
        let mut m = self.0.clone();
        m.insert(key, value);
        SpecState(m)
    }

    pub fn set_attr(&self, key: &str) -> &BTreeSet<Value> {
        self.get(key).as_set().expect("attribute is a set")
    }

    /// Process-id set attribute, stored as integers.
    pub fn pid_attr(&self, key: &str) -> BTreeSet<ProcessId> {
        self.set_attr(key)
            .iter()
            .map(|v| ProcessId(v.as_int().expect("pid attribute") as u32))
            .collect()
    }
}

impl fmt::Display for SpecState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, (name, v)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{name}={v}")?;
        }
        write!(f, ")")
    }
}

pub fn pid_set<I: IntoIterator<Item = ProcessId>>(ids: I) -> Value {
    Value::Set(ids.into_iter().map(|p| Value::Int(p.0 as i64)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flavor {
    Interval,
    SetSequential,
    Sequential,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpecError {
    BadClass(String),
    NotAlternating(String),
    /// A class invokes for a process the state already shows as pending.
    IllegalInput(String),
    /// Two transitions with the same responding class reach different states.
    ResponseDeterminism(String),
    /// A transition violates the spec's declared flavor.
    FlavorViolation(String),
    BudgetExceeded { explored: usize, bound: usize },
}

impl fmt::Display for SpecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecError::BadClass(m) => write!(f, "bad concurrency class: {m}"),
            SpecError::NotAlternating(m) => write!(f, "not an interval-sequential execution: {m}"),
            SpecError::IllegalInput(m) => write!(f, "illegal input class: {m}"),
            SpecError::ResponseDeterminism(m) => write!(f, "response-determinism violated: {m}"),
            SpecError::FlavorViolation(m) => write!(f, "flavor violated: {m}"),
            SpecError::BudgetExceeded { explored, bound } => {
                write!(f, "state exploration exceeded budget ({explored} > {bound})")
            }
        }
    }
}

impl std::error::Error for SpecError {}

type DeltaFn = Arc<dyn Fn(&SpecState, &ConcurrencyClass) -> Vec<(ConcurrencyClass, SpecState)> + Send + Sync>;
type PendingFn = Arc<dyn Fn(&SpecState) -> BTreeSet<ProcessId> + Send + Sync>;
type InvocationsFn = Arc<dyn Fn(&SpecState) -> Vec<Event> + Send + Sync>;

/// An interval-sequential object: a (not necessarily finite) Mealy machine
/// whose transitions consume an invoking class and emit a responding class.
#[derive(Clone)]
pub struct IntervalSpec {
    pub name: String,
    pub processes: u32,
    pub operations: BTreeSet<String>,
    pub flavor: Flavor,
    pub one_shot: bool,
    pub initial_states: Vec<SpecState>,
    delta: DeltaFn,
    pending_of: PendingFn,
    invocations_of: InvocationsFn,
}

impl fmt::Debug for IntervalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IntervalSpec")
            .field("name", &self.name)
            .field("processes", &self.processes)
            .field("flavor", &self.flavor)
            .finish()
    }
}

impl IntervalSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        processes: u32,
        operations: &[&str],
        flavor: Flavor,
        one_shot: bool,
        initial_states: Vec<SpecState>,
        delta: impl Fn(&SpecState, &ConcurrencyClass) -> Vec<(ConcurrencyClass, SpecState)>
            + Send
            + Sync
            + 'static,
        pending_of: impl Fn(&SpecState) -> BTreeSet<ProcessId> + Send + Sync + 'static,
        invocations_of: impl Fn(&SpecState) -> Vec<Event> + Send + Sync + 'static,
    ) -> IntervalSpec {
        assert!(!initial_states.is_empty(), "need at least one initial state");
        IntervalSpec {
            name: name.to_string(),
            processes,
            operations: operations.iter().map(|s| s.to_string()).collect(),
            flavor,
            one_shot,
            initial_states,
            delta: Arc::new(delta),
            pending_of: Arc::new(pending_of),
            invocations_of: Arc::new(invocations_of),
        }
    }

    pub fn pending(&self, q: &SpecState) -> BTreeSet<ProcessId> {
        (self.pending_of)(q)
    }

    /// Candidate single invocations legal at `q`, used for reachability
    /// and totality checks.
    pub fn invocations(&self, q: &SpecState) -> Vec<Event> {
        (self.invocations_of)(q)
    }

    /// δ(q, I): every way the object may answer, with the successor state.
    ///
    /// Outputs are deduplicated and sorted for deterministic iteration.
    /// Responses only go to pending-or-now-invoking processes, and the same
    /// responding class never leads to two different states.
    pub fn step(
        &self,
        q: &SpecState,
        input: &ConcurrencyClass,
    ) -> Result<Vec<(ConcurrencyClass, SpecState)>, SpecError> {
        if input.kind != ClassKind::Invoking {
            return Err(SpecError::BadClass("step needs an invoking class".into()));
        }
        let pending = self.pending(q);
        for e in input.events() {
            if pending.contains(&e.process) {
                return Err(SpecError::IllegalInput(format!(
                    "{} invokes but the state shows it pending",
                    e.process
                )));
            }
        }
        let mut outs = (self.delta)(q, input);
        outs.sort();
        outs.dedup();

        let eligible: BTreeSet<ProcessId> = pending.union(&input.ids()).copied().collect();
        let mut by_class: BTreeMap<&ConcurrencyClass, &SpecState> = BTreeMap::new();
        for (r, q2) in &outs {
            if r.kind != ClassKind::Responding || r.is_empty() {
                return Err(SpecError::BadClass(format!("δ emitted a bad class {r}")));
            }
            if !r.ids().is_subset(&eligible) {
                return Err(SpecError::BadClass(format!(
                    "δ responds to a process with no pending invocation in {r}"
                )));
            }
            if let Some(prev) = by_class.insert(r, q2) {
                if prev != q2 {
                    return Err(SpecError::ResponseDeterminism(format!(
                        "class {r} leads to both {prev} and {q2}"
                    )));
                }
            }
            self.check_flavor(input, r)?;
        }
        Ok(outs)
    }

    fn check_flavor(&self, input: &ConcurrencyClass, r: &ConcurrencyClass) -> Result<(), SpecError> {
        match self.flavor {
            Flavor::Interval => Ok(()),
            Flavor::SetSequential | Flavor::Sequential => {
                if self.flavor == Flavor::Sequential && input.len() != 1 {
                    return Err(SpecError::FlavorViolation(
                        "sequential spec consumed a non-singleton class".into(),
                    ));
                }
                if r.len() != input.len() || r.ids() != input.ids() {
                    return Err(SpecError::FlavorViolation(format!(
                        "transition {input} -> {r} does not answer exactly its invocations"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Whether some initial state and δ-choices reproduce `h` exactly;
    /// returns the witness state path on success.
    pub fn accepts(&self, h: &IntervalExecution) -> Option<Vec<SpecState>> {
        for q0 in &self.initial_states {
            if let Some(path) = self.replay(q0, h) {
                // response-determinism audit: replaying must reproduce the
                // same state labels
                let again = self.replay(q0, h).expect("replay is deterministic");
                assert_eq!(path, again, "response-determinism violated on replay");
                return Some(path);
            }
        }
        None
    }

    fn replay(&self, q0: &SpecState, h: &IntervalExecution) -> Option<Vec<SpecState>> {
        let mut path = vec![q0.clone()];
        let mut q = q0.clone();
        for (i, r) in h.pairs() {
            let outs = self.step(&q, i).ok()?;
            let next = outs.into_iter().find(|(cand, _)| cand == r)?;
            q = next.1;
            path.push(q.clone());
        }
        Some(path)
    }

    /// Whether every reachable state answers every legal single invocation.
    /// Reachability is explored breadth-first up to `bound` states.
    pub fn is_total(&self, bound: usize) -> Result<bool, SpecError> {
        let mut seen: BTreeSet<SpecState> = BTreeSet::new();
        let mut queue: VecDeque<SpecState> = VecDeque::new();
        for q0 in &self.initial_states {
            if seen.insert(q0.clone()) {
                queue.push_back(q0.clone());
            }
        }
        while let Some(q) = queue.pop_front() {
            if seen.len() > bound {
                return Err(SpecError::BudgetExceeded {
                    explored: seen.len(),
                    bound,
                });
            }
            let candidates = self.invocations(&q);
            // totality is required for singleton invoking classes only
            for inv in &candidates {
                let class = ConcurrencyClass::invoking([inv.clone()]).expect("singleton");
                let outs = self.step(&q, &class)?;
                let answered = outs
                    .iter()
                    .any(|(r, _)| r.contains_process(inv.process));
                if !answered {
                    return Ok(false);
                }
            }
            // expand over all properly-colored invoking classes
            let mut by_proc: BTreeMap<ProcessId, Vec<&Event>> = BTreeMap::new();
            for inv in &candidates {
                by_proc.entry(inv.process).or_default().push(inv);
            }
            let procs: Vec<ProcessId> = by_proc.keys().copied().collect();
            for combo in colored_combos(&procs, &by_proc) {
                let class = ConcurrencyClass::invoking(combo.into_iter().cloned()).expect("non-empty");
                for (_, q2) in self.step(&q, &class)? {
                    if seen.insert(q2.clone()) {
                        queue.push_back(q2);
                    }
                }
            }
        }
        Ok(true)
    }
}

// All non-empty choices of at most one candidate event per process.
fn colored_combos<'a>(
    procs: &[ProcessId],
    by_proc: &BTreeMap<ProcessId, Vec<&'a Event>>,
) -> Vec<Vec<&'a Event>> {
    let mut out: Vec<Vec<&'a Event>> = vec![Vec::new()];
    for p in procs {
        let mut next = Vec::new();
        for combo in &out {
            next.push(combo.clone());
            for e in &by_proc[p] {
                let mut c = combo.clone();
                c.push(e);
                next.push(c);
            }
        }
        out = next;
    }
    out.retain(|c| !c.is_empty());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv(p: u32, v: i64) -> Event {
        Event::inv(p, "x", "op", Value::Int(v))
    }

    fn res(p: u32, v: i64) -> Event {
        Event::res(p, "x", "op", Value::Int(v))
    }

    #[test]
    fn class_rejects_duplicates_and_mixed_kinds() {
        assert!(ConcurrencyClass::invoking([inv(0, 0), inv(0, 1)]).is_err());
        assert!(ConcurrencyClass::invoking([inv(0, 0), res(1, 1)]).is_err());
        assert!(ConcurrencyClass::invoking(std::iter::empty()).is_err());
        assert!(ConcurrencyClass::invoking([inv(0, 0), inv(1, 1)]).is_ok());
    }

    #[test]
    fn interval_execution_validates_matching() {
        let i0 = ConcurrencyClass::invoking([inv(0, 0)]).unwrap();
        let r_wrong = ConcurrencyClass::responding([res(1, 0)]).unwrap();
        assert!(IntervalExecution::new(vec![i0.clone(), r_wrong]).is_err());

        let r0 = ConcurrencyClass::responding([res(0, 0)]).unwrap();
        let h = IntervalExecution::new(vec![i0, r0]).unwrap();
        assert_eq!(h.len_pairs(), 1);
        assert!(IntervalExecution::empty().is_empty());
    }

    #[test]
    fn projection_splits_mixed_classes() {
        let a_inv = Event::inv(0, "a", "op", Value::Int(0));
        let b_inv = Event::inv(1, "b", "op", Value::Int(1));
        let a_res = Event::res(0, "a", "op", Value::Int(0));
        let b_res = Event::res(1, "b", "op", Value::Int(1));
        let h = IntervalExecution::new(vec![
            ConcurrencyClass::invoking([a_inv.clone(), b_inv]).unwrap(),
            ConcurrencyClass::responding([a_res.clone(), b_res]).unwrap(),
        ])
        .unwrap();
        let pa = project_interval(&h, "a").unwrap();
        assert_eq!(pa.classes().len(), 2);
        assert_eq!(pa.classes()[0].events().len(), 1);
        assert!(pa.classes()[0].events().contains(&a_inv));

        // single-object projection is the identity
        let ha = project_interval(&pa, "a").unwrap();
        assert_eq!(ha, pa);
    }
}
