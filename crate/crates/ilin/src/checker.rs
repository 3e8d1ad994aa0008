//! Deciding linearizability, set-linearizability, and
//! interval-linearizability of executions against interval-sequential
//! specs.
//!
//! An execution is interval-linearizable when some extension (responses
//! appended to pending invocations) and some interval-sequential execution
//! agree per process with the completed extension, are accepted per object,
//! and respect real-time precedence of operation calls. The search is a
//! depth-first assignment of events to concurrency classes, pruned by
//! precedence, by incremental δ-acceptance of the class prefix, and by
//! drawing candidate appended responses only from the spec's own step
//! outputs. Iterative deepening over the class-pair count makes the first
//! witness found the lexicographically least by (class count, event
//! indices), so goldens are reproducible.
//!
//! Set-linearizability constrains witnesses so every invocation is
//! answered in the very next class; linearizability additionally forces
//! singleton classes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::histories::{Event, EventKind, Execution, HistoryError, OperationCall, ProcessId};
use crate::interval::{
    project_interval, ClassKind, ConcurrencyClass, IntervalExecution, IntervalSpec, SpecError,
    SpecState,
};

/// Default cap on search nodes; override per call or via the CLI's
/// `ILIN_BUDGET` environment variable.
pub const DEFAULT_BUDGET: u64 = 2_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Condition {
    Linearizable,
    SetLinearizable,
    IntervalLinearizable,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Condition::Linearizable => "linearizable",
            Condition::SetLinearizable => "set-linearizable",
            Condition::IntervalLinearizable => "interval-linearizable",
        };
        write!(f, "{name}")
    }
}

#[derive(Clone, Copy, Debug)]
pub struct CheckOptions {
    pub condition: Condition,
    pub budget: u64,
}

impl CheckOptions {
    pub fn new(condition: Condition) -> CheckOptions {
        CheckOptions {
            condition,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> CheckOptions {
        self.budget = budget;
        self
    }
}

/// Outcome of a check. On `ok`, the witness satisfies all three
/// interval-linearizability conditions against the input and has been
/// re-verified before being reported.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub ok: bool,
    pub witness: Option<IntervalExecution>,
    /// Responses appended to pending invocations to form the extension.
    pub appended: Vec<Event>,
    /// Search nodes explored.
    pub nodes: u64,
}

#[derive(Clone, Debug)]
pub enum CheckError {
    MissingSpec(String),
    BudgetExceeded { nodes: u64, budget: u64 },
    History(HistoryError),
    Spec(SpecError),
    /// A witness failed re-verification; this is a checker bug and is
    /// reported loudly instead of being swallowed.
    WitnessAudit(String),
    /// `nonblocking_extension` was called on a non-linearizable execution.
    NotLinearizable,
    /// The spec could not answer a pending total-operation invocation;
    /// violates the totality contract.
    NoResponseFound(String),
}

impl fmt::Display for CheckError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckError::MissingSpec(x) => write!(f, "no spec bound to object '{x}'"),
            CheckError::BudgetExceeded { nodes, budget } => {
                write!(f, "search budget exceeded ({nodes} > {budget} nodes)")
            }
            CheckError::History(e) => write!(f, "{e}"),
            CheckError::Spec(e) => write!(f, "{e}"),
            CheckError::WitnessAudit(m) => write!(f, "witness failed re-verification: {m}"),
            CheckError::NotLinearizable => {
                write!(f, "execution is not interval-linearizable")
            }
            CheckError::NoResponseFound(m) => {
                write!(f, "no response keeps the execution linearizable: {m}")
            }
        }
    }
}

impl std::error::Error for CheckError {}

impl From<HistoryError> for CheckError {
    fn from(e: HistoryError) -> CheckError {
        CheckError::History(e)
    }
}

impl From<SpecError> for CheckError {
    fn from(e: SpecError) -> CheckError {
        CheckError::Spec(e)
    }
}

/// Binds one spec to every object appearing in `e`.
pub fn bind_all(e: &Execution, spec: &IntervalSpec) -> BTreeMap<String, IntervalSpec> {
    e.objects()
        .into_iter()
        .map(|x| (x, spec.clone()))
        .collect()
}

pub fn check_interval_linearizable(
    e: &Execution,
    specs: &BTreeMap<String, IntervalSpec>,
) -> Result<Verdict, CheckError> {
    check(e, specs, &CheckOptions::new(Condition::IntervalLinearizable))
}

pub fn check_set_linearizable(
    e: &Execution,
    specs: &BTreeMap<String, IntervalSpec>,
) -> Result<Verdict, CheckError> {
    check(e, specs, &CheckOptions::new(Condition::SetLinearizable))
}

pub fn check_linearizable(
    e: &Execution,
    specs: &BTreeMap<String, IntervalSpec>,
) -> Result<Verdict, CheckError> {
    check(e, specs, &CheckOptions::new(Condition::Linearizable))
}

#[derive(Clone, Debug)]
struct CallInfo {
    process: ProcessId,
    object: String,
    operation: String,
    inv_idx: usize,
    inv_event: Event,
    resp: Option<(usize, Event)>,
    prev_of_process: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Unplaced,
    Invoked,
    Done,
}

#[derive(Clone)]
struct ObjCtx {
    frontier: Vec<SpecState>,
    awaiting: Option<ConcurrencyClass>,
}

struct Search<'a> {
    specs: &'a BTreeMap<String, IntervalSpec>,
    calls: Vec<CallInfo>,
    // a -> b: response of a occurs before invocation of b
    preds_of: Vec<Vec<usize>>,
    condition: Condition,
    budget: u64,
    nodes: u64,
}

/// The main entry point: decides the chosen consistency condition for `e`
/// against per-object specs, producing a re-verified witness on success.
pub fn check(
    e: &Execution,
    specs: &BTreeMap<String, IntervalSpec>,
    opts: &CheckOptions,
) -> Result<Verdict, CheckError> {
    for obj in e.objects() {
        if !specs.contains_key(&obj) {
            return Err(CheckError::MissingSpec(obj));
        }
    }

    let raw = e.calls();
    let mut last_of_process: BTreeMap<ProcessId, usize> = BTreeMap::new();
    let mut calls = Vec::with_capacity(raw.len());
    for (k, c) in raw.iter().enumerate() {
        let inv = e.events()[c.invocation].clone();
        let prev = last_of_process.insert(inv.process, k);
        calls.push(CallInfo {
            process: inv.process,
            object: inv.object.clone(),
            operation: inv.operation.clone(),
            inv_idx: c.invocation,
            inv_event: inv,
            resp: c.response.map(|r| (r, e.events()[r].clone())),
            prev_of_process: prev,
        });
    }

    let mut preds_of = vec![Vec::new(); calls.len()];
    for (a, ca) in calls.iter().enumerate() {
        if let Some((ra, _)) = ca.resp {
            for (b, cb) in calls.iter().enumerate() {
                if a != b && ra < cb.inv_idx {
                    preds_of[b].push(a);
                }
            }
        }
    }

    let required = calls.iter().filter(|c| c.resp.is_some()).count();
    let mut search = Search {
        specs,
        calls,
        preds_of,
        condition: opts.condition,
        budget: opts.budget,
        nodes: 0,
    };

    if required == 0 {
        // dropping every pending invocation leaves the empty witness
        return Ok(Verdict {
            ok: true,
            witness: Some(IntervalExecution::empty()),
            appended: Vec::new(),
            nodes: 0,
        });
    }

    let total = search.calls.len();
    for max_pairs in 1..=total {
        let statuses = vec![Status::Unplaced; total];
        let mut ctx: BTreeMap<String, ObjCtx> = BTreeMap::new();
        for obj in e.objects() {
            ctx.insert(
                obj.clone(),
                ObjCtx {
                    frontier: specs[&obj].initial_states.clone(),
                    awaiting: None,
                },
            );
        }
        let mut classes = Vec::new();
        let mut found = Vec::new();
        search.dfs(&statuses, &ctx, &mut classes, max_pairs, &mut found, 1)?;
        if let Some(classes) = found.into_iter().next() {
            let witness = IntervalExecution::new(classes)
                .map_err(|err| CheckError::WitnessAudit(err.to_string()))?;
            let appended = appended_responses(e, &witness);
            verify_witness(e, specs, &witness, &appended, opts.condition)
                .map_err(CheckError::WitnessAudit)?;
            return Ok(Verdict {
                ok: true,
                witness: Some(witness),
                appended,
                nodes: search.nodes,
            });
        }
    }
    Ok(Verdict {
        ok: false,
        witness: None,
        appended: Vec::new(),
        nodes: search.nodes,
    })
}

/// Experimental: all witnesses of minimal class count, up to `limit`.
/// Distinct extensions of pending invocations count as distinct
/// witnesses.
pub fn enumerate_witnesses(
    e: &Execution,
    specs: &BTreeMap<String, IntervalSpec>,
    opts: &CheckOptions,
    limit: usize,
) -> Result<Vec<IntervalExecution>, CheckError> {
    for obj in e.objects() {
        if !specs.contains_key(&obj) {
            return Err(CheckError::MissingSpec(obj));
        }
    }
    let raw = e.calls();
    let mut last_of_process: BTreeMap<ProcessId, usize> = BTreeMap::new();
    let mut calls = Vec::with_capacity(raw.len());
    for (k, c) in raw.iter().enumerate() {
        let inv = e.events()[c.invocation].clone();
        let prev = last_of_process.insert(inv.process, k);
        calls.push(CallInfo {
            process: inv.process,
            object: inv.object.clone(),
            operation: inv.operation.clone(),
            inv_idx: c.invocation,
            inv_event: inv,
            resp: c.response.map(|r| (r, e.events()[r].clone())),
            prev_of_process: prev,
        });
    }
    let mut preds_of = vec![Vec::new(); calls.len()];
    for (a, ca) in calls.iter().enumerate() {
        if let Some((ra, _)) = ca.resp {
            for (b, cb) in calls.iter().enumerate() {
                if a != b && ra < cb.inv_idx {
                    preds_of[b].push(a);
                }
            }
        }
    }
    let required = calls.iter().filter(|c| c.resp.is_some()).count();
    if required == 0 {
        return Ok(vec![IntervalExecution::empty()]);
    }
    let total = calls.len();
    let mut search = Search {
        specs,
        calls,
        preds_of,
        condition: opts.condition,
        budget: opts.budget,
        nodes: 0,
    };
    for max_pairs in 1..=total {
        let statuses = vec![Status::Unplaced; total];
        let mut ctx: BTreeMap<String, ObjCtx> = BTreeMap::new();
        for obj in e.objects() {
            ctx.insert(
                obj.clone(),
                ObjCtx {
                    frontier: specs[&obj].initial_states.clone(),
                    awaiting: None,
                },
            );
        }
        let mut classes = Vec::new();
        let mut found = Vec::new();
        search.dfs(&statuses, &ctx, &mut classes, max_pairs, &mut found, limit)?;
        if !found.is_empty() {
            return found
                .into_iter()
                .map(|classes| {
                    IntervalExecution::new(classes)
                        .map_err(|err| CheckError::WitnessAudit(err.to_string()))
                })
                .collect();
        }
    }
    Ok(Vec::new())
}

impl<'a> Search<'a> {
    fn tick(&mut self) -> Result<(), CheckError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            Err(CheckError::BudgetExceeded {
                nodes: self.nodes,
                budget: self.budget,
            })
        } else {
            Ok(())
        }
    }

    fn done(&self, statuses: &[Status]) -> bool {
        statuses.iter().enumerate().all(|(k, s)| match s {
            Status::Done => true,
            Status::Invoked => false,
            Status::Unplaced => self.calls[k].resp.is_none(),
        })
    }

    fn dfs(
        &mut self,
        statuses: &[Status],
        ctx: &BTreeMap<String, ObjCtx>,
        classes: &mut Vec<ConcurrencyClass>,
        pairs_left: usize,
        found: &mut Vec<Vec<ConcurrencyClass>>,
        limit: usize,
    ) -> Result<bool, CheckError> {
        if self.done(statuses) {
            found.push(classes.clone());
            return Ok(found.len() >= limit);
        }
        if pairs_left == 0 {
            return Ok(false);
        }

        let eligible: Vec<usize> = (0..self.calls.len())
            .filter(|&k| {
                statuses[k] == Status::Unplaced
                    && self.calls[k]
                        .prev_of_process
                        .is_none_or(|p| statuses[p] == Status::Done)
                    && self.preds_of[k].iter().all(|&a| statuses[a] == Status::Done)
                    && ctx[&self.calls[k].object].awaiting.is_none()
            })
            .collect();
        if eligible.is_empty() {
            return Ok(false);
        }

        for inv_set in invoking_candidates(&eligible, self.condition) {
            self.tick()?;
            let mut statuses2 = statuses.to_vec();
            let mut ctx2 = ctx.clone();
            let mut by_obj: BTreeMap<String, Vec<Event>> = BTreeMap::new();
            for &k in &inv_set {
                statuses2[k] = Status::Invoked;
                by_obj
                    .entry(self.calls[k].object.clone())
                    .or_default()
                    .push(self.calls[k].inv_event.clone());
            }
            let global_inv =
                ConcurrencyClass::invoking(inv_set.iter().map(|&k| self.calls[k].inv_event.clone()))
                    .expect("distinct processes");
            for (obj, events) in by_obj {
                let class = ConcurrencyClass::invoking(events).expect("distinct processes");
                ctx2.get_mut(&obj).unwrap().awaiting = Some(class);
            }
            classes.push(global_inv);

            let stop = self.responding_phase(&statuses2, &ctx2, classes, pairs_left, found, limit)?;
            classes.pop();
            if stop {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn responding_phase(
        &mut self,
        statuses: &[Status],
        ctx: &BTreeMap<String, ObjCtx>,
        classes: &mut Vec<ConcurrencyClass>,
        pairs_left: usize,
        found: &mut Vec<Vec<ConcurrencyClass>>,
        limit: usize,
    ) -> Result<bool, CheckError> {
        let awaiting: Vec<String> = ctx
            .iter()
            .filter(|(_, c)| c.awaiting.is_some())
            .map(|(x, _)| x.clone())
            .collect();

        // per-object candidate transitions, keyed by responding class
        let mut per_obj: BTreeMap<String, Vec<(ConcurrencyClass, Vec<SpecState>)>> = BTreeMap::new();
        for obj in &awaiting {
            let spec = &self.specs[obj];
            let input = ctx[obj].awaiting.as_ref().unwrap();
            let mut by_class: BTreeMap<ConcurrencyClass, Vec<SpecState>> = BTreeMap::new();
            for q in &ctx[obj].frontier {
                for (r, q2) in spec.step(q, input)? {
                    if self.response_matches(statuses, &r) {
                        let states = by_class.entry(r).or_default();
                        if !states.contains(&q2) {
                            states.push(q2);
                        }
                    }
                }
            }
            let mut options: Vec<(ConcurrencyClass, Vec<SpecState>)> = by_class.into_iter().collect();
            options.sort_by_key(|(r, _)| self.class_sort_key(r));
            per_obj.insert(obj.clone(), options);
        }

        for subset in object_subsets(&awaiting, self.condition) {
            if subset.iter().any(|obj| per_obj[obj].is_empty()) {
                continue;
            }
            let stop = self.try_products(
                &subset,
                &per_obj,
                statuses,
                ctx,
                classes,
                pairs_left,
                0,
                &mut Vec::new(),
                found,
                limit,
            )?;
            if stop {
                return Ok(true);
            }
        }
        Ok(false)
    }

    #[allow(clippy::too_many_arguments)]
    fn try_products(
        &mut self,
        subset: &[String],
        per_obj: &BTreeMap<String, Vec<(ConcurrencyClass, Vec<SpecState>)>>,
        statuses: &[Status],
        ctx: &BTreeMap<String, ObjCtx>,
        classes: &mut Vec<ConcurrencyClass>,
        pairs_left: usize,
        depth: usize,
        chosen: &mut Vec<(String, ConcurrencyClass, Vec<SpecState>)>,
        found: &mut Vec<Vec<ConcurrencyClass>>,
        limit: usize,
    ) -> Result<bool, CheckError> {
        if depth == subset.len() {
            return self.apply_response(statuses, ctx, classes, pairs_left, chosen, found, limit);
        }
        let obj = &subset[depth];
        for (r, states) in &per_obj[obj] {
            chosen.push((obj.clone(), r.clone(), states.clone()));
            let stop = self.try_products(
                subset, per_obj, statuses, ctx, classes, pairs_left, depth + 1, chosen, found,
                limit,
            )?;
            chosen.pop();
            if stop {
                return Ok(true);
            }
        }
        Ok(false)
    }

    #[allow(clippy::too_many_arguments)]
    fn apply_response(
        &mut self,
        statuses: &[Status],
        ctx: &BTreeMap<String, ObjCtx>,
        classes: &mut Vec<ConcurrencyClass>,
        pairs_left: usize,
        chosen: &[(String, ConcurrencyClass, Vec<SpecState>)],
        found: &mut Vec<Vec<ConcurrencyClass>>,
        limit: usize,
    ) -> Result<bool, CheckError> {
        self.tick()?;
        let mut statuses2 = statuses.to_vec();
        let mut ctx2 = ctx.clone();
        let mut events: BTreeSet<Event> = BTreeSet::new();
        for (obj, r, states) in chosen {
            for ev in r.events() {
                events.insert(ev.clone());
                let k = self
                    .call_of(&statuses2, ev)
                    .expect("δ responds only to invoked calls");
                statuses2[k] = Status::Done;
            }
            let c = ctx2.get_mut(obj).unwrap();
            c.frontier = states.clone();
            c.awaiting = None;
        }
        let global = match ConcurrencyClass::responding(events) {
            Ok(c) => c,
            Err(_) => return Ok(false),
        };

        if matches!(self.condition, Condition::SetLinearizable | Condition::Linearizable)
            && statuses2.contains(&Status::Invoked)
        {
            return Ok(false);
        }
        if self.condition == Condition::Linearizable && global.len() != 1 {
            return Ok(false);
        }

        classes.push(global);
        let stop = self.dfs(&statuses2, &ctx2, classes, pairs_left - 1, found, limit)?;
        classes.pop();
        Ok(stop)
    }

    // A δ-emitted responding class is usable when each response answers an
    // invoked call, with the exact payload for calls completed in the input
    // execution (pending calls accept whatever the spec offers).
    fn response_matches(&self, statuses: &[Status], r: &ConcurrencyClass) -> bool {
        r.events().iter().all(|ev| match self.call_of(statuses, ev) {
            None => false,
            Some(k) => match &self.calls[k].resp {
                Some((_, actual)) => actual.payload == ev.payload && actual.operation == ev.operation,
                None => self.calls[k].operation == ev.operation,
            },
        })
    }

    fn call_of(&self, statuses: &[Status], ev: &Event) -> Option<usize> {
        (0..self.calls.len()).find(|&k| {
            statuses[k] == Status::Invoked
                && self.calls[k].process == ev.process
                && self.calls[k].object == ev.object
        })
    }

    fn class_sort_key(&self, r: &ConcurrencyClass) -> Vec<usize> {
        let mut key: Vec<usize> = r
            .events()
            .iter()
            .map(|ev| {
                self.calls
                    .iter()
                    .position(|c| c.process == ev.process && c.object == ev.object)
                    .map(|k| match &self.calls[k].resp {
                        Some((idx, _)) => *idx,
                        None => usize::MAX / 2 + k,
                    })
                    .unwrap_or(usize::MAX)
            })
            .collect();
        key.sort();
        key
    }
}

// Non-empty subsets of eligible calls ordered by their invocation-index
// vectors; singletons only under linearizability.
fn invoking_candidates(eligible: &[usize], condition: Condition) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if condition == Condition::Linearizable {
        for &k in eligible {
            out.push(vec![k]);
        }
        return out;
    }
    let n = eligible.len();
    for mask in 1u32..(1 << n) {
        let set: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| eligible[i]).collect();
        out.push(set);
    }
    out.sort();
    out
}

// Non-empty subsets of awaiting objects; under set/linearizability every
// awaiting object must answer immediately, so only the full set is tried.
fn object_subsets(awaiting: &[String], condition: Condition) -> Vec<Vec<String>> {
    if matches!(condition, Condition::SetLinearizable | Condition::Linearizable) {
        return vec![awaiting.to_vec()];
    }
    let n = awaiting.len();
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        let set: Vec<String> = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| awaiting[i].clone())
            .collect();
        out.push(set);
    }
    out.sort_by_key(|s| s.len());
    out
}

// Responses in the witness whose calls are pending in `e`: per process
// and object, any response beyond the count of completed calls answers a
// pending invocation (a process has at most one pending call, so at most
// one response per key is in excess).
fn appended_responses(e: &Execution, witness: &IntervalExecution) -> Vec<Event> {
    let mut completed: BTreeMap<(ProcessId, String), usize> = BTreeMap::new();
    for c in e.calls() {
        if !c.is_pending() {
            let ev = &e.events()[c.invocation];
            *completed.entry((ev.process, ev.object.clone())).or_insert(0) += 1;
        }
    }
    let mut out = Vec::new();
    for class in witness.classes() {
        if class.kind != ClassKind::Responding {
            continue;
        }
        for ev in class.events() {
            match completed.get_mut(&(ev.process, ev.object.clone())) {
                Some(n) if *n > 0 => *n -= 1,
                _ => out.push(ev.clone()),
            }
        }
    }
    out
}

/// Replays a witness against the three interval-linearizability conditions
/// (per-process agreement with the completed extension, per-object spec
/// acceptance, precedence respect) plus the shape restriction of the
/// requested condition. Used by the checker before reporting and by the
/// test suites as a soundness audit.
pub fn verify_witness(
    e: &Execution,
    specs: &BTreeMap<String, IntervalSpec>,
    witness: &IntervalExecution,
    appended: &[Event],
    condition: Condition,
) -> Result<(), String> {
    let extended = e.extend(appended).map_err(|err| err.to_string())?;
    let comp = extended.complete();

    // (1) per-process agreement
    for p in comp.processes().union(&witness_processes(witness)) {
        let mine: Vec<&Event> = comp.events().iter().filter(|ev| ev.process == *p).collect();
        let theirs = witness.project_process(*p);
        if mine.len() != theirs.len() || mine.iter().zip(&theirs).any(|(a, b)| a != b) {
            return Err(format!("projection at {p} differs from comp(extension)"));
        }
    }

    // (2) per-object acceptance
    for obj in witness.objects() {
        let spec = specs.get(&obj).ok_or(format!("no spec for {obj}"))?;
        let proj = project_interval(witness, &obj).map_err(|err| err.to_string())?;
        if spec.accepts(&proj).is_none() {
            return Err(format!("projection at {obj} rejected by its spec"));
        }
    }

    // (3) precedence respect
    let spans = witness_spans(witness);
    let order = comp.precedence();
    for (a, b) in order.pairs() {
        let ca = order.calls[*a];
        let cb = order.calls[*b];
        let (sa, sb) = match (span_of(&comp, &spans, ca), span_of(&comp, &spans, cb)) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err("a completed call is missing from the witness".into()),
        };
        if sa.1 >= sb.0 {
            return Err(format!(
                "precedence violated: response class {} not before invocation class {}",
                sa.1, sb.0
            ));
        }
    }

    // condition shape
    match condition {
        Condition::IntervalLinearizable => {}
        Condition::SetLinearizable | Condition::Linearizable => {
            for (p, start, end) in witness.call_spans() {
                if end != start + 1 {
                    return Err(format!(
                        "{p}'s call spans classes {start}..{end}, not answered in the very next class"
                    ));
                }
            }
            if condition == Condition::Linearizable
                && witness.classes().iter().any(|c| c.len() != 1)
            {
                return Err("linearizability needs singleton classes".into());
            }
        }
    }
    Ok(())
}

fn witness_processes(witness: &IntervalExecution) -> BTreeSet<ProcessId> {
    witness
        .events_in_order()
        .iter()
        .map(|ev| ev.process)
        .collect()
}

// (process, inv event index within its per-process sequence) -> class span
type SpanMap = BTreeMap<(ProcessId, usize), (usize, usize)>;

fn witness_spans(witness: &IntervalExecution) -> SpanMap {
    let mut counter: BTreeMap<ProcessId, usize> = BTreeMap::new();
    let mut map = BTreeMap::new();
    for (p, start, end) in witness.call_spans() {
        let k = counter.entry(p).or_insert(0);
        map.insert((p, *k), (start, end));
        *k += 1;
    }
    map
}

fn span_of(comp: &Execution, spans: &SpanMap, call: OperationCall) -> Option<(usize, usize)> {
    let inv = &comp.events()[call.invocation];
    // ordinal of this call among the process's calls
    let ordinal = comp.events()[..call.invocation]
        .iter()
        .filter(|ev| ev.process == inv.process && ev.kind == EventKind::Invocation)
        .count();
    spans.get(&(inv.process, ordinal)).copied()
}

/// Verdict of the locality composition: each per-object projection is
/// checked independently; on success the per-object witnesses are merged
/// into one global witness (transitive closure of per-object orders plus
/// cross-object precedence, then class merging) and re-verified.
#[derive(Clone, Debug)]
pub struct LocalVerdict {
    pub ok: bool,
    pub failing_object: Option<String>,
    pub per_object: Vec<(String, Verdict)>,
    pub composed: Option<Verdict>,
    pub nodes: u64,
}

/// Checks each object projection independently (locality)
/// and composes a global witness from the per-object ones.
pub fn check_local(
    e: &Execution,
    specs: &BTreeMap<String, IntervalSpec>,
    opts: &CheckOptions,
) -> Result<LocalVerdict, CheckError> {
    let mut per_object = Vec::new();
    let mut nodes = 0;
    for obj in e.objects() {
        let proj = e.project_object(&obj);
        let v = check(&proj, specs, opts)?;
        nodes += v.nodes;
        let ok = v.ok;
        per_object.push((obj.clone(), v));
        if !ok {
            return Ok(LocalVerdict {
                ok: false,
                failing_object: Some(obj),
                per_object,
                composed: None,
                nodes,
            });
        }
    }

    let composed = compose_witnesses(e, specs, &per_object, opts.condition)?;
    Ok(LocalVerdict {
        ok: true,
        failing_object: None,
        per_object,
        composed: Some(composed),
        nodes,
    })
}

// The merge used in the locality proof: order per-object classes by their
// own sequence plus cross-object precedence edges (responding class of a
// before invoking class of b whenever a precedes b), audit acyclicity,
// extend to a total order, then merge adjacent same-kind classes.
fn compose_witnesses(
    e: &Execution,
    specs: &BTreeMap<String, IntervalSpec>,
    per_object: &[(String, Verdict)],
    condition: Condition,
) -> Result<Verdict, CheckError> {
    let mut appended: Vec<Event> = Vec::new();
    for (_, v) in per_object {
        appended.extend(v.appended.iter().cloned());
    }
    let extended = e.extend(&appended)?;
    let comp = extended.complete();

    // nodes of the merge graph: (object, class index)
    let mut node_ids: Vec<(String, usize)> = Vec::new();
    let mut classes_of: BTreeMap<(String, usize), ConcurrencyClass> = BTreeMap::new();
    let mut spans_of: BTreeMap<String, SpanMap> = BTreeMap::new();
    for (obj, v) in per_object {
        let w = v.witness.as_ref().expect("ok verdicts carry witnesses");
        for (k, c) in w.classes().iter().enumerate() {
            node_ids.push((obj.clone(), k));
            classes_of.insert((obj.clone(), k), c.clone());
        }
        spans_of.insert(obj.clone(), witness_spans(w));
    }

    let index: BTreeMap<(String, usize), usize> = node_ids
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect();
    let mut edges: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); node_ids.len()];

    for (obj, v) in per_object {
        let w = v.witness.as_ref().unwrap();
        for k in 1..w.classes().len() {
            edges[index[&(obj.clone(), k - 1)]].insert(index[&(obj.clone(), k)]);
        }
    }

    let order = comp.precedence();
    for (a, b) in order.pairs() {
        let ca = order.calls[*a];
        let cb = order.calls[*b];
        let oa = comp.events()[ca.invocation].object.clone();
        let ob = comp.events()[cb.invocation].object.clone();
        if oa == ob {
            continue;
        }
        let comp_a = comp.project_object(&oa);
        let comp_b = comp.project_object(&ob);
        let sa = span_in_projection(&comp, &comp_a, &spans_of[&oa], ca)
            .ok_or_else(|| CheckError::WitnessAudit(format!("call missing from {oa} witness")))?;
        let sb = span_in_projection(&comp, &comp_b, &spans_of[&ob], cb)
            .ok_or_else(|| CheckError::WitnessAudit(format!("call missing from {ob} witness")))?;
        edges[index[&(oa, sa.1)]].insert(index[&(ob, sb.0)]);
    }

    // acyclicity audit (the merge relation must be a partial order)
    let topo = topological_order(&node_ids, &edges)
        .ok_or_else(|| CheckError::WitnessAudit("cross-object merge relation is cyclic".into()))?;

    // merge consecutive invoking classes and responding classes
    let mut merged: Vec<ConcurrencyClass> = Vec::new();
    for i in topo {
        let class = &classes_of[&node_ids[i]];
        match merged.last() {
            Some(last) if last.kind == class.kind => {
                let union: BTreeSet<Event> = last
                    .events()
                    .iter()
                    .chain(class.events().iter())
                    .cloned()
                    .collect();
                let kind = class.kind;
                merged.pop();
                merged.push(
                    ConcurrencyClass::new(kind, union)
                        .map_err(|err| CheckError::WitnessAudit(err.to_string()))?,
                );
            }
            _ => merged.push(class.clone()),
        }
    }
    let witness =
        IntervalExecution::new(merged).map_err(|err| CheckError::WitnessAudit(err.to_string()))?;
    verify_witness(e, specs, &witness, &appended, condition).map_err(CheckError::WitnessAudit)?;
    Ok(Verdict {
        ok: true,
        witness: Some(witness),
        appended,
        nodes: 0,
    })
}

// Span of a global call inside its object's witness: translate the call
// into the object projection, then look its ordinal up in the span map.
fn span_in_projection(
    comp: &Execution,
    comp_proj: &Execution,
    spans: &SpanMap,
    call: OperationCall,
) -> Option<(usize, usize)> {
    let inv = &comp.events()[call.invocation];
    let ordinal = comp.events()[..call.invocation]
        .iter()
        .filter(|ev| {
            ev.process == inv.process && ev.kind == EventKind::Invocation && ev.object == inv.object
        })
        .count();
    let _ = comp_proj;
    spans.get(&(inv.process, ordinal)).copied()
}

fn topological_order(nodes: &[(String, usize)], edges: &[BTreeSet<usize>]) -> Option<Vec<usize>> {
    let mut indegree = vec![0usize; nodes.len()];
    for outs in edges {
        for &t in outs {
            indegree[t] += 1;
        }
    }
    let mut ready: BTreeSet<usize> = (0..nodes.len()).filter(|&i| indegree[i] == 0).collect();
    let mut out = Vec::with_capacity(nodes.len());
    while let Some(&i) = ready.iter().next() {
        ready.remove(&i);
        out.push(i);
        for &t in &edges[i] {
            indegree[t] -= 1;
            if indegree[t] == 0 {
                ready.insert(t);
            }
        }
    }
    if out.len() == nodes.len() {
        Some(out)
    } else {
        None
    }
}

/// Finds a response to a pending invocation of a total operation whose
/// appension keeps the execution interval-linearizable.
pub fn nonblocking_extension(
    e: &Execution,
    specs: &BTreeMap<String, IntervalSpec>,
    pending: &OperationCall,
    opts: &CheckOptions,
) -> Result<Event, CheckError> {
    let inv = e.events()[pending.invocation].clone();
    let v = check(e, specs, &CheckOptions::new(Condition::IntervalLinearizable).with_budget(opts.budget))?;
    if !v.ok {
        return Err(CheckError::NotLinearizable);
    }
    if let Some(r) = v
        .appended
        .iter()
        .find(|r| r.process == inv.process && r.object == inv.object)
    {
        return Ok(r.clone());
    }

    // the witness dropped this invocation: the operation is total, so the
    // spec can answer it from the witness's final state
    let witness = v.witness.as_ref().expect("yes verdicts carry witnesses");
    let spec = specs
        .get(&inv.object)
        .ok_or_else(|| CheckError::MissingSpec(inv.object.clone()))?;
    let proj = project_interval(witness, &inv.object).map_err(CheckError::Spec)?;
    let path = spec
        .accepts(&proj)
        .ok_or_else(|| CheckError::WitnessAudit("witness projection no longer accepted".into()))?;
    let last = path.last().expect("path includes the initial state").clone();
    let class = ConcurrencyClass::invoking([inv.clone()]).expect("singleton");
    for (r, _) in spec.step(&last, &class)? {
        if let Some(resp) = r.events().iter().find(|ev| ev.process == inv.process) {
            return Ok(resp.clone());
        }
    }
    Err(CheckError::NoResponseFound(format!(
        "spec '{}' answered nothing for {} — non-total operation",
        spec.name, inv
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objects::{builtin_spec, BuiltinObjectId};
    use crate::value::Value;

    fn ws_specs(e: &Execution, n: u32) -> BTreeMap<String, IntervalSpec> {
        bind_all(e, &builtin_spec(&BuiltinObjectId::new("write_snapshot", n)).unwrap())
    }

    fn fig4() -> Execution {
        Execution::parse(
            "P0 inv ws.write_snapshot(0)\n\
             P1 inv ws.write_snapshot(1)\n\
             P0 res ws.write_snapshot -> {0,1}\n\
             P2 inv ws.write_snapshot(2)\n\
             P2 res ws.write_snapshot -> {0,1,2}\n\
             P1 res ws.write_snapshot -> {0,1,2}\n",
        )
        .unwrap()
    }

    #[test]
    fn fig4_interval_but_not_set_linearizable() {
        let e = fig4();
        let specs = ws_specs(&e, 3);
        let v = check_interval_linearizable(&e, &specs).unwrap();
        assert!(v.ok);
        let w = v.witness.unwrap();
        // witness classes: I{p,q} R{p} I{r} R{q,r}
        assert_eq!(w.len_pairs(), 2);
        let ids: Vec<BTreeSet<ProcessId>> = w.classes().iter().map(|c| c.ids()).collect();
        assert_eq!(ids[0], [ProcessId(0), ProcessId(1)].into_iter().collect());
        assert_eq!(ids[1], [ProcessId(0)].into_iter().collect());
        assert_eq!(ids[2], [ProcessId(2)].into_iter().collect());
        assert_eq!(ids[3], [ProcessId(1), ProcessId(2)].into_iter().collect());

        assert!(!check_set_linearizable(&e, &specs).unwrap().ok);
        assert!(!check_linearizable(&e, &specs).unwrap().ok);
    }

    #[test]
    fn single_complete_call_is_linearizable() {
        let e = Execution::parse(
            "P0 inv v.validity(1)\nP0 res v.validity -> 1\n",
        )
        .unwrap();
        let specs = bind_all(&e, &builtin_spec(&BuiltinObjectId::new("validity", 2)).unwrap());
        for v in [
            check_linearizable(&e, &specs).unwrap(),
            check_set_linearizable(&e, &specs).unwrap(),
            check_interval_linearizable(&e, &specs).unwrap(),
        ] {
            assert!(v.ok);
        }
    }

    #[test]
    fn containment_violation_is_rejected() {
        // concurrent p -> {0}, q -> {1}: no class sequence is accepted
        let e = Execution::parse(
            "P0 inv ws.write_snapshot(0)\n\
             P1 inv ws.write_snapshot(1)\n\
             P0 res ws.write_snapshot -> {0}\n\
             P1 res ws.write_snapshot -> {1}\n",
        )
        .unwrap();
        let specs = ws_specs(&e, 2);
        assert!(!check_interval_linearizable(&e, &specs).unwrap().ok);
    }

    #[test]
    fn fig3_linearizable_through_sequential_automaton() {
        let e = Execution::parse(
            "P0 inv ws.write_snapshot(0)\n\
             P1 inv ws.write_snapshot(1)\n\
             P0 res ws.write_snapshot -> {0,1}\n\
             P1 res ws.write_snapshot -> {0,1}\n\
             P2 inv ws.write_snapshot(2)\n\
             P2 res ws.write_snapshot -> {0,1,2}\n",
        )
        .unwrap();
        let specs = bind_all(&e, &builtin_spec(&BuiltinObjectId::new("ws_sequential", 3)).unwrap());
        let v = check_linearizable(&e, &specs).unwrap();
        assert!(v.ok);
        let w = v.witness.unwrap();
        let path = specs["ws"].accepts(&project_interval(&w, "ws").unwrap()).unwrap();
        let states: Vec<String> = path.iter().map(|q| q.get("written").to_string()).collect();
        assert_eq!(states, vec!["{}", "{0,1}", "{0,1}", "{0,1,2}"]);
    }

    #[test]
    fn queue_alpha3_not_linearizable() {
        let e = Execution::parse(
            "P0 inv q.enq(1)\nP0 res q.enq -> ok\n\
             P1 inv q.enq(2)\nP1 res q.enq -> ok\n\
             P2 inv q.deq(nil)\nP2 res q.deq -> 2\n",
        )
        .unwrap();
        let specs = bind_all(&e, &builtin_spec(&BuiltinObjectId::new("restricted_queue", 3)).unwrap());
        assert!(!check_linearizable(&e, &specs).unwrap().ok);
    }

    #[test]
    fn pending_only_execution_is_trivially_linearizable() {
        let e = Execution::parse("P0 inv ws.write_snapshot(0)\n").unwrap();
        let specs = ws_specs(&e, 2);
        let v = check_interval_linearizable(&e, &specs).unwrap();
        assert!(v.ok);
        assert!(v.witness.unwrap().is_empty());
    }

    #[test]
    fn pending_invocation_forced_into_witness_by_other_outputs() {
        // q's output contains p's value, so p's pending invocation must be
        // answered in the extension rather than dropped
        let e = Execution::parse(
            "P0 inv ws.write_snapshot(0)\n\
             P1 inv ws.write_snapshot(1)\n\
             P1 res ws.write_snapshot -> {0,1}\n",
        )
        .unwrap();
        let specs = ws_specs(&e, 2);
        let v = check_interval_linearizable(&e, &specs).unwrap();
        assert!(v.ok);
        assert_eq!(v.appended.len(), 1);
        assert_eq!(v.appended[0].process, ProcessId(0));
    }

    #[test]
    fn remark2_hierarchy_on_corpus() {
        let e = fig4();
        let specs = ws_specs(&e, 3);
        let lin = check_linearizable(&e, &specs).unwrap().ok;
        let set = check_set_linearizable(&e, &specs).unwrap().ok;
        let int = check_interval_linearizable(&e, &specs).unwrap().ok;
        assert!(!lin || set);
        assert!(!set || int);
        assert!(int);
    }

    #[test]
    fn local_check_agrees_on_single_object() {
        let e = fig4();
        let specs = ws_specs(&e, 3);
        let opts = CheckOptions::new(Condition::IntervalLinearizable);
        let local = check_local(&e, &specs, &opts).unwrap();
        let direct = check(&e, &specs, &opts).unwrap();
        assert_eq!(local.ok, direct.ok);
    }

    #[test]
    fn local_check_composes_two_objects() {
        let e = Execution::parse(
            "P0 inv v.validity(1)\n\
             P1 inv ws.write_snapshot(1)\n\
             P0 res v.validity -> 1\n\
             P1 res ws.write_snapshot -> {1}\n\
             P0 inv ws.write_snapshot(0)\n\
             P0 res ws.write_snapshot -> {0,1}\n",
        )
        .unwrap();
        let mut specs = BTreeMap::new();
        specs.insert(
            "v".to_string(),
            builtin_spec(&BuiltinObjectId::new("validity", 2)).unwrap(),
        );
        specs.insert(
            "ws".to_string(),
            builtin_spec(&BuiltinObjectId::new("write_snapshot", 2)).unwrap(),
        );
        let opts = CheckOptions::new(Condition::IntervalLinearizable);
        let local = check_local(&e, &specs, &opts).unwrap();
        assert!(local.ok);
        let composed = local.composed.unwrap();
        assert!(composed.witness.is_some());
        // the composed witness re-verifies against the global execution
        verify_witness(
            &e,
            &specs,
            composed.witness.as_ref().unwrap(),
            &composed.appended,
            Condition::IntervalLinearizable,
        )
        .unwrap();

        let direct = check(&e, &specs, &opts).unwrap();
        assert_eq!(local.ok, direct.ok);
    }

    #[test]
    fn nonblocking_solo_validity() {
        let e = Execution::parse("P0 inv v.validity(1)\n").unwrap();
        let specs = bind_all(&e, &builtin_spec(&BuiltinObjectId::new("validity", 2)).unwrap());
        let pending = e.pending_calls()[0];
        let opts = CheckOptions::new(Condition::IntervalLinearizable);
        let r = nonblocking_extension(&e, &specs, &pending, &opts).unwrap();
        assert_eq!(r.payload, Value::Int(1)); // the only proposable value
        let e2 = e.extend(&[r]).unwrap();
        assert!(check_interval_linearizable(&e2, &specs).unwrap().ok);
    }

    #[test]
    fn nonblocking_pending_write_snapshot() {
        let e = Execution::parse(
            "P1 inv ws.write_snapshot(1)\n\
             P1 res ws.write_snapshot -> {1}\n\
             P0 inv ws.write_snapshot(0)\n",
        )
        .unwrap();
        let specs = ws_specs(&e, 2);
        let pending = e.pending_calls()[0];
        let opts = CheckOptions::new(Condition::IntervalLinearizable);
        let r = nonblocking_extension(&e, &specs, &pending, &opts).unwrap();
        assert_eq!(r.payload, Value::int_set([0, 1]));
        let e2 = e.extend(&[r]).unwrap();
        assert!(check_interval_linearizable(&e2, &specs).unwrap().ok);
    }

    #[test]
    fn nonblocking_rejects_nonlinearizable_input() {
        let e = Execution::parse(
            "P0 inv ws.write_snapshot(0)\n\
             P1 inv ws.write_snapshot(1)\n\
             P0 res ws.write_snapshot -> {0}\n\
             P1 res ws.write_snapshot -> {1}\n\
             P0 inv v.validity(1)\n",
        )
        .unwrap();
        let mut specs = ws_specs(&e, 2);
        specs.insert(
            "v".to_string(),
            builtin_spec(&BuiltinObjectId::new("validity", 2)).unwrap(),
        );
        let pending = e.pending_calls()[0];
        let opts = CheckOptions::new(Condition::IntervalLinearizable);
        assert!(matches!(
            nonblocking_extension(&e, &specs, &pending, &opts),
            Err(CheckError::NotLinearizable)
        ));
    }

    #[test]
    fn multi_shot_pending_repeat_call_can_be_appended() {
        // P0's second (pending) proposal must be placed and answered,
        // because P1's response returns the value only that call proposes
        let e = Execution::parse(
            "P0 inv v.validity(1)\n\
             P0 res v.validity -> 1\n\
             P0 inv v.validity(2)\n\
             P1 inv v.validity(3)\n\
             P1 res v.validity -> 2\n",
        )
        .unwrap();
        let specs = bind_all(&e, &builtin_spec(&BuiltinObjectId::new("validity", 2)).unwrap());
        let v = check_interval_linearizable(&e, &specs).unwrap();
        assert!(v.ok);
        assert_eq!(v.appended.len(), 1);
        assert_eq!(v.appended[0].process, ProcessId(0));
        let extended = e.extend(&v.appended).unwrap();
        assert!(extended.pending_calls().is_empty());
    }

    #[test]
    fn witness_enumeration_returns_minimal_class_count() {
        let e = Execution::parse(
            "P0 inv ws.write_snapshot(0)\n\
             P1 inv ws.write_snapshot(1)\n\
             P0 res ws.write_snapshot -> {0,1}\n\
             P1 res ws.write_snapshot -> {0,1}\n",
        )
        .unwrap();
        let specs = ws_specs(&e, 2);
        let opts = CheckOptions::new(Condition::IntervalLinearizable);
        let all = enumerate_witnesses(&e, &specs, &opts, 16).unwrap();
        assert!(!all.is_empty());
        // both complete concurrently: the one-pair witness is minimal and
        // unique
        assert!(all.iter().all(|w| w.len_pairs() == 1));
        assert_eq!(all.len(), 1);
    }

    #[test]
    fn budget_is_enforced() {
        let e = fig4();
        let specs = ws_specs(&e, 3);
        let opts = CheckOptions::new(Condition::IntervalLinearizable).with_budget(1);
        assert!(matches!(
            check(&e, &specs, &opts),
            Err(CheckError::BudgetExceeded { .. })
        ));
    }
}
