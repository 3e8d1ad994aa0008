//! Constructive translations between tasks and interval-sequential
//! objects.
//!
//! The `sequences` scan turns an execution into two face chains
//! σ0 ⊂ σ1 ⊂ ... and τ0 ⊂ τ1 ⊆ ...: an invocation arriving after a batch
//! of responses opens a new pair. Everything else builds on it:
//!
//! - [`task_to_object`]: states are pairs (σ, τ); a transition extends σ
//!   by the invoking class and answers any response set R with
//!   τ ∪ R ∈ Δ(σ ∪ I). The δ is characterized by that predicate instead
//!   of enumerating satisfying executions, which coincides because every
//!   batch of a satisfying execution keeps τᵢ ∈ Δ(σᵢ).
//! - [`object_to_refined_task`]: Δ(σ) collects the decorated output
//!   simplexes γ_E of the pending-free interval-linearizable executions
//!   with inputs σ, each response paired with the input simplex of its
//!   batch. Executions are enumerated up to a caller-supplied event
//!   bound; callers should surface the bound next to the output.
//! - [`refined_task_to_object`]: as `task_to_object`, but a response is
//!   emitted exactly in the batch whose input simplex equals its view.
//! - [`task_to_split_sequential`]: the two-operation (set/get) sequential
//!   object of a task.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use crate::checker::{check, CheckError, CheckOptions, Condition};
use crate::histories::{Event, EventKind, Execution, ProcessId};
use crate::interval::{ConcurrencyClass, Flavor, IntervalSpec, SpecError, SpecState};
use crate::task::{Complex, Simplex, Task, TaskError, Vertex, Violation};
use crate::value::Value;

#[derive(Clone, Debug)]
pub enum BridgeError {
    InvalidTask(Vec<Violation>),
    NotOneShot,
    NotSingleOperation,
    NotTotal,
    Spec(SpecError),
    Check(String),
    Task(TaskError),
}

impl fmt::Display for BridgeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BridgeError::InvalidTask(vs) => {
                write!(f, "task fails validation: ")?;
                for (k, v) in vs.iter().enumerate() {
                    if k > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{v}")?;
                }
                Ok(())
            }
            BridgeError::NotOneShot => write!(f, "the object must be one-shot"),
            BridgeError::NotSingleOperation => write!(f, "the object must have a single operation"),
            BridgeError::NotTotal => write!(f, "the object's operation must be total"),
            BridgeError::Spec(e) => write!(f, "{e}"),
            BridgeError::Check(m) => write!(f, "{m}"),
            BridgeError::Task(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for BridgeError {}

impl From<SpecError> for BridgeError {
    fn from(e: SpecError) -> Self {
        BridgeError::Spec(e)
    }
}

impl From<CheckError> for BridgeError {
    fn from(e: CheckError) -> Self {
        BridgeError::Check(e.to_string())
    }
}

impl From<TaskError> for BridgeError {
    fn from(e: TaskError) -> Self {
        BridgeError::Task(e)
    }
}

/// The face chains produced by [`sequences`], as sets of event indices.
/// The leading (∅, ∅) pair is retained; consumers skip it as needed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FaceSequences {
    pub sigma: Vec<BTreeSet<usize>>,
    pub tau: Vec<BTreeSet<usize>>,
}

impl FaceSequences {
    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    /// Batch index of a response event: the first i with the event in τᵢ.
    pub fn batch_of_response(&self, idx: usize) -> Option<usize> {
        self.tau.iter().position(|t| t.contains(&idx))
    }

    /// Batch index of an invocation event.
    pub fn batch_of_invocation(&self, idx: usize) -> Option<usize> {
        self.sigma.iter().position(|s| s.contains(&idx))
    }

    /// Input simplex of batch `i` (payload vertices of its invocations).
    pub fn sigma_simplex(&self, e: &Execution, i: usize) -> Simplex {
        Simplex::new(
            self.sigma[i]
                .iter()
                .map(|&k| vertex_of_event(&e.events()[k])),
        )
        .expect("one-shot execution")
    }

    pub fn tau_simplex(&self, e: &Execution, i: usize) -> Simplex {
        Simplex::new(
            self.tau[i]
                .iter()
                .map(|&k| vertex_of_event(&e.events()[k])),
        )
        .expect("one-shot execution")
    }
}

fn vertex_of_event(ev: &Event) -> Vertex {
    Vertex::new(ev.process.0, ev.payload.clone())
}

/// Scans a one-shot execution into its face chains: responses accumulate
/// into the current τ batch; an invocation arriving while the current
/// batch already holds new responses closes the pair and opens the next.
pub fn sequences(e: &Execution) -> FaceSequences {
    let mut sigma: Vec<BTreeSet<usize>> = vec![BTreeSet::new()];
    let mut tau: Vec<BTreeSet<usize>> = vec![BTreeSet::new()];
    let mut cur_sigma: BTreeSet<usize> = BTreeSet::new();
    let mut cur_tau: BTreeSet<usize> = BTreeSet::new();
    for (k, ev) in e.events().iter().enumerate() {
        match ev.kind {
            EventKind::Invocation => {
                let prev_tau = tau.last().expect("non-empty");
                if cur_tau == *prev_tau {
                    cur_sigma.insert(k);
                } else {
                    sigma.push(cur_sigma.clone());
                    tau.push(cur_tau.clone());
                    cur_sigma.insert(k);
                }
            }
            EventKind::Response => {
                cur_tau.insert(k);
            }
        }
    }
    if !e.is_empty() {
        sigma.push(cur_sigma);
        tau.push(cur_tau);
    }
    FaceSequences { sigma, tau }
}

/// Checks the structural properties of the face chains against their
/// execution; returns human-readable violations (empty when all hold).
/// With a task supplied, each batch's outputs must lie in Δ of its
/// inputs — callers assert this for executions that satisfy the task.
///
/// The pending case of the "last batches" property follows the code, not
/// the loose prose: the final τ link is strict exactly when the execution
/// ends with a response.
pub fn check_sequences_properties(
    e: &Execution,
    fs: &FaceSequences,
    task: Option<&Task>,
) -> Vec<String> {
    let mut bad = Vec::new();
    let m = fs.sigma.len().saturating_sub(1);

    // item 1: equal lengths
    if fs.sigma.len() != fs.tau.len() {
        bad.push("sigma and tau chains differ in length".into());
        return bad;
    }

    // item 2: strict σ chain; τ chain strict except the final link
    let all_inv: BTreeSet<usize> = (0..e.len()).filter(|&k| e.events()[k].is_invocation()).collect();
    let all_res: BTreeSet<usize> = (0..e.len()).filter(|&k| e.events()[k].is_response()).collect();
    if fs.sigma[m] != all_inv {
        bad.push("last sigma is not the full invocation set".into());
    }
    if fs.tau[m] != all_res {
        bad.push("last tau is not the full response set".into());
    }
    for i in 1..=m {
        if !fs.sigma[i - 1].is_subset(&fs.sigma[i]) || fs.sigma[i - 1] == fs.sigma[i] {
            bad.push(format!("sigma chain not strictly increasing at {i}"));
        }
        if !fs.tau[i - 1].is_subset(&fs.tau[i]) {
            bad.push(format!("tau chain not increasing at {i}"));
        }
        if i < m && fs.tau[i - 1] == fs.tau[i] {
            bad.push(format!("tau chain not strict at inner index {i}"));
        }
    }

    // item 3: the final τ link, driven by how the execution ends
    if m >= 1 {
        let strict = fs.tau[m - 1] != fs.tau[m];
        match e.events().last() {
            Some(ev) if ev.is_response() && !strict => {
                bad.push("execution ends with a response but final tau link is not strict".into());
            }
            Some(ev) if ev.is_invocation() && strict => {
                bad.push("execution ends with an invocation but final tau link is strict".into());
            }
            _ => {}
        }
        if e.pending_calls().is_empty() && !strict {
            bad.push("no pending invocations but final tau link is not strict".into());
        }
    }

    // item 4: τᵢ ∈ Δ(σᵢ)
    if let Some(t) = task {
        for i in 1..=m {
            let s = fs.sigma_simplex(e, i);
            let tv = fs.tau_simplex(e, i);
            let ok = match t.delta(&s) {
                Some(image) => image.contains(&tv),
                None => false,
            };
            if !ok {
                bad.push(format!("batch {i}: tau not in Delta(sigma)"));
            }
        }
    }

    // item 5: a response before a non-matching invocation lands in an
    // earlier batch
    for (a, ev_a) in e.events().iter().enumerate() {
        if !ev_a.is_response() {
            continue;
        }
        for (b, ev_b) in e.events().iter().enumerate().skip(a + 1) {
            if !ev_b.is_invocation() || ev_b.process == ev_a.process {
                continue;
            }
            let ia = fs.batch_of_response(a).unwrap();
            let ib = fs.batch_of_invocation(b).unwrap();
            if ia >= ib {
                bad.push(format!("response {a} not strictly before invocation {b} in batches"));
            }
        }
    }

    // item 6: σᵢ covers every invocation preceding a fresh response of
    // batch i
    for i in 1..=m {
        let fresh: BTreeSet<usize> = fs.tau[i].difference(&fs.tau[i - 1]).copied().collect();
        for &r in &fresh {
            for k in 0..r {
                if e.events()[k].is_invocation() && !fs.sigma[i].contains(&k) {
                    bad.push(format!("batch {i}: invocation {k} precedes response {r} but is not in sigma"));
                }
            }
        }
    }
    bad
}

/// Decorated output simplex of an execution: each response paired with
/// the input simplex of its batch.
pub fn gamma(e: &Execution) -> Simplex {
    let fs = sequences(e);
    let mut vertices = Vec::new();
    for i in 1..fs.len() {
        let view = fs.sigma_simplex(e, i);
        let fresh: Vec<usize> = fs.tau[i].difference(&fs.tau[i - 1]).copied().collect();
        for r in fresh {
            let ev = &e.events()[r];
            vertices.push(Vertex::with_view(ev.process.0, ev.payload.clone(), view.clone()));
        }
    }
    Simplex::new(vertices).expect("one-shot execution")
}

fn encode_simplex(s: &Simplex) -> Value {
    Value::Set(
        s.vertices()
            .map(|v| match &v.view {
                None => Value::pair(Value::Int(v.process.0 as i64), v.value.clone()),
                Some(view) => Value::pair(
                    Value::Int(v.process.0 as i64),
                    Value::pair(v.value.clone(), encode_simplex(view)),
                ),
            })
            .collect(),
    )
}

fn decode_simplex(v: &Value, decorated: bool) -> Simplex {
    let items = v.as_set().expect("encoded simplex");
    Simplex::new(items.iter().map(|item| {
        let Value::Pair(p, rest) = item else {
            panic!("encoded vertex")
        };
        let pid = p.as_int().expect("pid") as u32;
        if decorated {
            let Value::Pair(value, view) = rest.as_ref() else {
                panic!("decorated vertex")
            };
            Vertex::with_view(pid, (**value).clone(), decode_simplex(view, false))
        } else {
            Vertex::new(pid, (**rest).clone())
        }
    }))
    .expect("encoded simplexes are chromatic")
}

fn encode_ops(ops: &BTreeMap<ProcessId, String>) -> Value {
    Value::Set(
        ops.iter()
            .map(|(p, op)| Value::pair(Value::Int(p.0 as i64), Value::sym(op)))
            .collect(),
    )
}

fn decode_ops(v: &Value) -> BTreeMap<ProcessId, String> {
    v.as_set()
        .expect("encoded ops")
        .iter()
        .map(|item| {
            let Value::Pair(p, op) = item else { panic!("encoded op") };
            let Value::Sym(name) = op.as_ref() else { panic!("op symbol") };
            (ProcessId(p.as_int().unwrap() as u32), name.clone())
        })
        .collect()
}

// Shared skeleton of the task-to-object constructions:
// states are (σ, τ) pairs plus the pending operations' names.
fn task_object_spec(task: Task, name: &str, refined: bool) -> IntervalSpec {
    let task = Arc::new(task);
    let n = 1 + task
        .inputs
        .vertices()
        .iter()
        .map(|v| v.process.0)
        .max()
        .unwrap_or(0);
    let initial = SpecState::new([
        ("sigma", encode_simplex(&Simplex::empty())),
        ("tau", encode_simplex(&Simplex::empty())),
        ("ops", Value::set([])),
    ]);
    let t_delta = Arc::clone(&task);
    let t_inv = Arc::clone(&task);
    IntervalSpec::new(
        name,
        n,
        &["task"],
        Flavor::Interval,
        true,
        vec![initial],
        move |q, input| {
            let task = &t_delta;
            let sigma = decode_simplex(q.get("sigma"), false);
            let tau = decode_simplex(q.get("tau"), refined);
            let mut ops = decode_ops(q.get("ops"));
            // extend σ by the invoking class
            let mut sigma2 = sigma.clone();
            for ev in input.events() {
                if sigma2.vertex_of(ev.process).is_some() {
                    return Vec::new(); // one-shot
                }
                sigma2 = match sigma2.insert(vertex_of_event(ev)) {
                    Ok(s) => s,
                    Err(_) => return Vec::new(),
                };
                ops.insert(ev.process, ev.operation.clone());
            }
            if !task.inputs.contains(&sigma2) {
                return Vec::new();
            }
            let Some(image) = task.delta(&sigma2) else {
                return Vec::new();
            };
            let object = input.events().iter().next().unwrap().object.clone();
            let pending: Vec<ProcessId> = sigma2
                .ids()
                .into_iter()
                .filter(|p| tau.vertex_of(*p).is_none())
                .collect();
            // candidate outputs per pending process, drawn from Δ(σ₂)
            let mut candidates: BTreeMap<ProcessId, Vec<Vertex>> = BTreeMap::new();
            for v in image.vertices() {
                if !pending.contains(&v.process) {
                    continue;
                }
                if refined {
                    if v.view.as_ref() == Some(&sigma2) {
                        candidates.entry(v.process).or_default().push(v.clone());
                    }
                } else {
                    candidates.entry(v.process).or_default().push(v.clone());
                }
            }
            let mut outs = Vec::new();
            let procs: Vec<ProcessId> = candidates.keys().copied().collect();
            for subset_mask in 1u32..(1 << procs.len()) {
                let chosen: Vec<ProcessId> = procs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| subset_mask & (1 << i) != 0)
                    .map(|(_, p)| *p)
                    .collect();
                let mut stack: Vec<(usize, Simplex, Vec<Event>)> =
                    vec![(0, tau.clone(), Vec::new())];
                while let Some((depth, t_acc, evs)) = stack.pop() {
                    if depth == chosen.len() {
                        if image.contains(&t_acc) {
                            let class = ConcurrencyClass::responding(evs.clone())
                                .expect("distinct processes");
                            let mut ops2 = ops.clone();
                            for p in &chosen {
                                ops2.remove(p);
                            }
                            let q2 = SpecState::new([
                                ("sigma", encode_simplex(&sigma2)),
                                ("tau", encode_simplex(&t_acc)),
                                ("ops", encode_ops(&ops2)),
                            ]);
                            outs.push((class, q2));
                        }
                        continue;
                    }
                    let p = chosen[depth];
                    for cand in &candidates[&p] {
                        let Ok(t_next) = t_acc.insert(cand.clone()) else {
                            continue;
                        };
                        let op = ops.get(&p).expect("pending has an op");
                        let mut evs2 = evs.clone();
                        evs2.push(Event::res(p.0, &object, op, cand.value.clone()));
                        stack.push((depth + 1, t_next, evs2));
                    }
                }
            }
            outs
        },
        |q| {
            let sigma = decode_simplex(q.get("sigma"), false);
            let tau_ids: BTreeSet<ProcessId> = decode_ops(q.get("ops")).keys().copied().collect();
            sigma.ids().intersection(&tau_ids).copied().collect()
        },
        move |q| {
            let task = &t_inv;
            let sigma = decode_simplex(q.get("sigma"), false);
            let mut out = Vec::new();
            for v in task.inputs.vertices() {
                if sigma.vertex_of(v.process).is_some() {
                    continue;
                }
                if let Ok(s2) = sigma.insert(v.clone()) {
                    if task.inputs.contains(&s2) {
                        out.push(Event::inv(v.process.0, "task_object", "task", v.value.clone()));
                    }
                }
            }
            out
        },
    )
}

/// Translation of a (plain) task into an interval-sequential
/// object with states (σ, τ).
pub fn task_to_object(task: &Task) -> Result<IntervalSpec, BridgeError> {
    let violations = task.validate();
    if !violations.is_empty() {
        return Err(BridgeError::InvalidTask(violations));
    }
    if task.refined {
        return Err(BridgeError::InvalidTask(vec![Violation::MixedDecoration]));
    }
    Ok(task_object_spec(task.clone(), "task_object", false))
}

/// Translation of a refined task into an interval-sequential object: a
/// response is emitted exactly in the batch whose input simplex equals
/// its set-view.
pub fn refined_task_to_object(task: &Task) -> Result<IntervalSpec, BridgeError> {
    let violations = task.validate();
    if !violations.is_empty() {
        return Err(BridgeError::InvalidTask(violations));
    }
    if !task.refined {
        return Err(BridgeError::InvalidTask(vec![Violation::MixedDecoration]));
    }
    Ok(task_object_spec(task.clone(), "refined_task_object", true))
}

/// The split set/get sequential object of a task: `set(p, v)` records an
/// input, `get(p)` (after the process's own set) returns an output `y`
/// with τ ∪ {(p, y)} ∈ Δ(σ).
pub fn task_to_split_sequential(task: &Task) -> Result<IntervalSpec, BridgeError> {
    let violations = task.validate();
    if !violations.is_empty() {
        return Err(BridgeError::InvalidTask(violations));
    }
    let task = Arc::new(task.clone());
    let n = 1 + task
        .inputs
        .vertices()
        .iter()
        .map(|v| v.process.0)
        .max()
        .unwrap_or(0);
    let initial = SpecState::new([
        ("sigma", encode_simplex(&Simplex::empty())),
        ("tau", encode_simplex(&Simplex::empty())),
    ]);
    let t_delta = Arc::clone(&task);
    let t_inv = Arc::clone(&task);
    Ok(IntervalSpec::new(
        "split_task",
        n,
        &["set", "get"],
        Flavor::Sequential,
        false,
        vec![initial],
        move |q, input| {
            let task = &t_delta;
            if input.len() != 1 {
                return Vec::new();
            }
            let ev = input.events().iter().next().unwrap();
            let sigma = decode_simplex(q.get("sigma"), false);
            let tau = decode_simplex(q.get("tau"), false);
            match ev.operation.as_str() {
                "set" => {
                    if sigma.vertex_of(ev.process).is_some() {
                        return Vec::new();
                    }
                    let Ok(sigma2) = sigma.insert(vertex_of_event(ev)) else {
                        return Vec::new();
                    };
                    if !task.inputs.contains(&sigma2) {
                        return Vec::new();
                    }
                    let class = ConcurrencyClass::responding([Event::res(
                        ev.process.0,
                        &ev.object,
                        "set",
                        Value::sym("ok"),
                    )])
                    .expect("singleton");
                    vec![(
                        class,
                        SpecState::new([
                            ("sigma", encode_simplex(&sigma2)),
                            ("tau", encode_simplex(&tau)),
                        ]),
                    )]
                }
                "get" => {
                    if sigma.vertex_of(ev.process).is_none() || tau.vertex_of(ev.process).is_some() {
                        return Vec::new();
                    }
                    let Some(image) = task.delta(&sigma) else {
                        return Vec::new();
                    };
                    let mut outs = Vec::new();
                    for v in image.vertices() {
                        if v.process != ev.process {
                            continue;
                        }
                        let Ok(tau2) = tau.insert(v.clone()) else {
                            continue;
                        };
                        if !image.contains(&tau2) {
                            continue;
                        }
                        let class = ConcurrencyClass::responding([Event::res(
                            ev.process.0,
                            &ev.object,
                            "get",
                            v.value.clone(),
                        )])
                        .expect("singleton");
                        outs.push((
                            class,
                            SpecState::new([
                                ("sigma", encode_simplex(&sigma)),
                                ("tau", encode_simplex(&tau2)),
                            ]),
                        ));
                    }
                    outs
                }
                _ => Vec::new(),
            }
        },
        |_| BTreeSet::new(),
        move |q| {
            let task = &t_inv;
            let sigma = decode_simplex(q.get("sigma"), false);
            let tau = decode_simplex(q.get("tau"), false);
            let mut out = Vec::new();
            for v in task.inputs.vertices() {
                if sigma.vertex_of(v.process).is_none() {
                    if let Ok(s2) = sigma.insert(v.clone()) {
                        if task.inputs.contains(&s2) {
                            out.push(Event::inv(v.process.0, "split_task", "set", v.value.clone()));
                        }
                    }
                }
            }
            for p in sigma.ids() {
                if tau.vertex_of(p).is_none() {
                    out.push(Event::inv(p.0, "split_task", "get", Value::sym("nil")));
                }
            }
            out
        },
    ))
}

/// Enumerates one-shot executions over candidate invocations and
/// per-process response payloads, up to `max_events` events. With
/// `pending_free`, only executions where every call completes are kept.
pub fn enumerate_one_shot_executions(
    invocations: &[Event],
    responses: &BTreeMap<ProcessId, Vec<Value>>,
    max_events: usize,
    pending_free: bool,
) -> Vec<Execution> {
    let mut out = Vec::new();
    let mut events: Vec<Event> = Vec::new();
    enumerate_rec(invocations, responses, max_events, pending_free, &mut events, &mut out);
    out
}

fn enumerate_rec(
    invocations: &[Event],
    responses: &BTreeMap<ProcessId, Vec<Value>>,
    max_events: usize,
    pending_free: bool,
    events: &mut Vec<Event>,
    out: &mut Vec<Execution>,
) {
    let invoked: BTreeSet<ProcessId> = events
        .iter()
        .filter(|e| e.is_invocation())
        .map(|e| e.process)
        .collect();
    let responded: BTreeSet<ProcessId> = events
        .iter()
        .filter(|e| e.is_response())
        .map(|e| e.process)
        .collect();
    if !pending_free || invoked == responded {
        out.push(Execution::from_events(events.clone()).expect("constructed well-formed"));
    }
    if events.len() >= max_events {
        return;
    }
    for inv in invocations {
        if !invoked.contains(&inv.process) {
            events.push(inv.clone());
            enumerate_rec(invocations, responses, max_events, pending_free, events, out);
            events.pop();
        }
    }
    for inv_ev in events.clone() {
        if !inv_ev.is_invocation()
            || responded.contains(&inv_ev.process)
            || !invoked.contains(&inv_ev.process)
        {
            continue;
        }
        if let Some(values) = responses.get(&inv_ev.process) {
            for v in values {
                events.push(Event::res(
                    inv_ev.process.0,
                    &inv_ev.object,
                    &inv_ev.operation,
                    v.clone(),
                ));
                enumerate_rec(invocations, responses, max_events, pending_free, events, out);
                events.pop();
            }
        }
    }
}

/// Response payloads the spec can emit, per process, found by a bounded
/// breadth-first sweep of the reachable states.
pub fn response_universe(
    spec: &IntervalSpec,
    state_bound: usize,
) -> Result<BTreeMap<ProcessId, Vec<Value>>, SpecError> {
    let mut seen: BTreeSet<SpecState> = BTreeSet::new();
    let mut queue: Vec<SpecState> = Vec::new();
    let mut out: BTreeMap<ProcessId, BTreeSet<Value>> = BTreeMap::new();
    for q0 in &spec.initial_states {
        if seen.insert(q0.clone()) {
            queue.push(q0.clone());
        }
    }
    while let Some(q) = queue.pop() {
        if seen.len() > state_bound {
            return Err(SpecError::BudgetExceeded {
                explored: seen.len(),
                bound: state_bound,
            });
        }
        let candidates = spec.invocations(&q);
        let mut by_proc: BTreeMap<ProcessId, Vec<Event>> = BTreeMap::new();
        for inv in candidates {
            by_proc.entry(inv.process).or_default().push(inv);
        }
        let combos = all_colored_classes(&by_proc);
        for class in combos {
            for (r, q2) in spec.step(&q, &class)? {
                for ev in r.events() {
                    out.entry(ev.process).or_default().insert(ev.payload.clone());
                }
                if seen.insert(q2.clone()) {
                    queue.push(q2);
                }
            }
        }
    }
    Ok(out
        .into_iter()
        .map(|(p, vs)| (p, vs.into_iter().collect()))
        .collect())
}

fn all_colored_classes(by_proc: &BTreeMap<ProcessId, Vec<Event>>) -> Vec<ConcurrencyClass> {
    let mut combos: Vec<Vec<Event>> = vec![Vec::new()];
    for events in by_proc.values() {
        let mut next = Vec::new();
        for combo in &combos {
            next.push(combo.clone());
            for e in events {
                let mut c = combo.clone();
                c.push(e.clone());
                next.push(c);
            }
        }
        combos = next;
    }
    combos
        .into_iter()
        .filter(|c| !c.is_empty())
        .map(|c| ConcurrencyClass::invoking(c).expect("distinct processes"))
        .collect()
}

fn enumeration_inputs(spec: &IntervalSpec) -> Vec<Event> {
    let q0 = &spec.initial_states[0];
    spec.invocations(q0)
}

/// Translation of a one-shot, single-total-operation object
/// into a refined task: Δ(σ) holds the decorated output simplexes of the
/// pending-free interval-linearizable executions with inputs σ, explored
/// up to `max_events` events per execution.
pub fn object_to_refined_task(
    spec: &IntervalSpec,
    max_events: usize,
    budget: u64,
) -> Result<Task, BridgeError> {
    if !spec.one_shot {
        return Err(BridgeError::NotOneShot);
    }
    if spec.operations.len() != 1 {
        return Err(BridgeError::NotSingleOperation);
    }
    match spec.is_total(10_000) {
        Ok(true) => {}
        Ok(false) => return Err(BridgeError::NotTotal),
        Err(e) => return Err(BridgeError::Spec(e)),
    }
    derive_task(spec, max_events, budget, true, Condition::IntervalLinearizable)
}

/// Builds the naive (non-refined) task collecting the plain output
/// simplexes of the object's pending-free executions under `condition`.
/// This is the construction the queue counterexample defeats.
pub fn object_to_plain_task(
    spec: &IntervalSpec,
    max_events: usize,
    budget: u64,
    condition: Condition,
) -> Result<Task, BridgeError> {
    if !spec.one_shot {
        return Err(BridgeError::NotOneShot);
    }
    derive_task(spec, max_events, budget, false, condition)
}

fn derive_task(
    spec: &IntervalSpec,
    max_events: usize,
    budget: u64,
    refined: bool,
    condition: Condition,
) -> Result<Task, BridgeError> {
    let invocations = enumeration_inputs(spec);
    let responses = response_universe(spec, 100_000)?;
    let executions = enumerate_one_shot_executions(&invocations, &responses, max_events, true);

    let opts = CheckOptions::new(condition).with_budget(budget);
    let mut delta_facets: BTreeMap<Simplex, Vec<Simplex>> = BTreeMap::new();
    for e in &executions {
        if e.is_empty() {
            continue;
        }
        let specs = crate::checker::bind_all(e, spec);
        let verdict = check(e, &specs, &opts)?;
        if !verdict.ok {
            continue;
        }
        let sigma = Simplex::new(
            e.events()
                .iter()
                .filter(|ev| ev.is_invocation())
                .map(vertex_of_event),
        )
        .expect("one-shot");
        let out = if refined {
            gamma(e)
        } else {
            Simplex::new(
                e.events()
                    .iter()
                    .filter(|ev| ev.is_response())
                    .map(vertex_of_event),
            )
            .expect("one-shot")
        };
        delta_facets.entry(sigma).or_default().push(out);
    }

    // input complex: all chromatic combinations of the invocation universe
    let input_vertices: Vec<Vertex> = invocations.iter().map(vertex_of_event).collect();
    let mut by_proc: BTreeMap<ProcessId, Vec<Vertex>> = BTreeMap::new();
    for v in input_vertices {
        by_proc.entry(v.process).or_default().push(v);
    }
    let mut facets: Vec<Simplex> = vec![Simplex::empty()];
    for vs in by_proc.values() {
        let mut next = Vec::new();
        for f in &facets {
            for v in vs {
                next.push(f.insert(v.clone()).expect("distinct"));
            }
        }
        facets = next;
    }
    let inputs = Complex::from_facets(facets);

    let mut delta = BTreeMap::new();
    let mut outputs = Complex::empty();
    for s in inputs.simplexes() {
        let image = Complex::from_facets(delta_facets.remove(&s).unwrap_or_default());
        outputs = outputs.union(&image);
        delta.insert(s, image);
    }
    Ok(Task::new(inputs, outputs, delta))
}
