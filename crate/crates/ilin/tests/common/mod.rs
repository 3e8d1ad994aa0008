#![allow(dead_code)] // each test binary uses a different slice of this module

//! Shared test support: the naive brute-force consistency oracle and the
//! history generators. The oracle enumerates every extension and every
//! alternating class sequence outright — no pruning, no frontier — so it
//! stays independent of the checker's search.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use ilin::checker::Condition;
use ilin::histories::{Event, Execution, ProcessId};
use ilin::interval::{project_interval, ConcurrencyClass, IntervalExecution, IntervalSpec};
use ilin::value::Value;

/// Brute-force verdict: tries every subset of pending invocations, every
/// assignment of candidate response values, and every way of packing the
/// completed calls into alternating classes, and validates each candidate
/// witness against the definition directly.
pub fn oracle_check(
    e: &Execution,
    specs: &BTreeMap<String, IntervalSpec>,
    condition: Condition,
    response_candidates: &BTreeMap<ProcessId, Vec<Value>>,
) -> bool {
    let pending = e.pending_calls();
    let npend = pending.len();
    for mask in 0u32..(1 << npend) {
        let chosen: Vec<usize> = (0..npend).filter(|i| mask & (1 << i) != 0).collect();
        let mut assignments: Vec<Vec<Event>> = vec![Vec::new()];
        for &k in &chosen {
            let inv = &e.events()[pending[k].invocation];
            let values = response_candidates
                .get(&inv.process)
                .cloned()
                .unwrap_or_default();
            let mut next = Vec::new();
            for base in &assignments {
                for v in &values {
                    let mut a = base.clone();
                    a.push(Event::res(
                        inv.process.0,
                        &inv.object,
                        &inv.operation,
                        v.clone(),
                    ));
                    next.push(a);
                }
            }
            assignments = next;
        }
        for appended in assignments {
            let Ok(extended) = e.extend(&appended) else {
                continue;
            };
            if extension_has_witness(e, &extended, specs, condition) {
                return true;
            }
        }
    }
    false
}

fn extension_has_witness(
    original: &Execution,
    extended: &Execution,
    specs: &BTreeMap<String, IntervalSpec>,
    condition: Condition,
) -> bool {
    let comp = extended.complete();
    let calls = comp.calls();
    if calls.is_empty() {
        return true;
    }
    let n = calls.len();
    let mut spans = vec![(0usize, 0usize); n];
    try_spans(original, &comp, specs, condition, &mut spans, 0, n)
}

fn try_spans(
    original: &Execution,
    comp: &Execution,
    specs: &BTreeMap<String, IntervalSpec>,
    condition: Condition,
    spans: &mut Vec<(usize, usize)>,
    k: usize,
    n: usize,
) -> bool {
    if k == n {
        for m in 1..=n {
            if spans.iter().all(|(_, r)| *r < m) && witness_from_spans(comp, spans, m, specs, condition, original) {
                return true;
            }
        }
        return false;
    }
    for i in 0..n {
        for r in i..n {
            spans[k] = (i, r);
            if condition != Condition::IntervalLinearizable && i != r {
                continue;
            }
            if try_spans(original, comp, specs, condition, spans, k + 1, n) {
                return true;
            }
        }
    }
    false
}

fn witness_from_spans(
    comp: &Execution,
    spans: &[(usize, usize)],
    pairs: usize,
    specs: &BTreeMap<String, IntervalSpec>,
    condition: Condition,
    original: &Execution,
) -> bool {
    let calls = comp.calls();
    let mut classes: Vec<ConcurrencyClass> = Vec::new();
    for j in 0..pairs {
        let invs: Vec<Event> = calls
            .iter()
            .zip(spans)
            .filter(|(_, (i, _))| *i == j)
            .map(|(c, _)| comp.events()[c.invocation].clone())
            .collect();
        let ress: Vec<Event> = calls
            .iter()
            .zip(spans)
            .filter(|(_, (_, r))| *r == j)
            .map(|(c, _)| comp.events()[c.response.unwrap()].clone())
            .collect();
        let (Ok(i_class), Ok(r_class)) = (
            ConcurrencyClass::invoking(invs),
            ConcurrencyClass::responding(ress),
        ) else {
            return false;
        };
        classes.push(i_class);
        classes.push(r_class);
    }
    let Ok(witness) = IntervalExecution::new(classes) else {
        return false;
    };

    // per-process agreement with comp
    for p in comp.processes() {
        let mine: Vec<&Event> = comp.events().iter().filter(|ev| ev.process == p).collect();
        let theirs = witness.project_process(p);
        if mine.len() != theirs.len() || mine.iter().zip(&theirs).any(|(a, b)| a != b) {
            return false;
        }
    }
    // precedence respect (precedence of the completed extension restricted
    // to the original's real-time order is the same relation)
    let order = comp.precedence();
    for (a, b) in order.pairs() {
        if spans[*a].1 >= spans[*b].0 {
            return false;
        }
    }
    let _ = original;
    // shape restrictions
    if condition == Condition::Linearizable
        && witness.classes().iter().any(|c| c.len() != 1)
    {
        return false;
    }
    // per-object acceptance
    for obj in witness.objects() {
        let Ok(proj) = project_interval(&witness, &obj) else {
            return false;
        };
        match specs.get(&obj) {
            Some(spec) => {
                if spec.accepts(&proj).is_none() {
                    return false;
                }
            }
            None => return false,
        }
    }
    true
}

/// A random well-formed one-shot execution over a single object, with a
/// mix of plausible and junk response values.
pub fn random_one_shot(
    rng: &mut ChaCha8Rng,
    n: u32,
    max_events: usize,
    object: &str,
    operation: &str,
) -> Execution {
    let mut events: Vec<Event> = Vec::new();
    let mut invoked = vec![false; n as usize];
    let mut pending: Vec<ProcessId> = Vec::new();
    let target = rng.random_range(0..=max_events);
    while events.len() < target {
        let can_invoke: Vec<u32> = (0..n).filter(|p| !invoked[*p as usize]).collect();
        let do_invoke = !can_invoke.is_empty() && (pending.is_empty() || rng.random_bool(0.5));
        if do_invoke {
            let p = can_invoke[rng.random_range(0..can_invoke.len())];
            invoked[p as usize] = true;
            pending.push(ProcessId(p));
            events.push(Event::inv(p, object, operation, Value::Int(p as i64)));
        } else if !pending.is_empty() {
            let k = rng.random_range(0..pending.len());
            let p = pending.remove(k);
            let written: Vec<i64> = events
                .iter()
                .filter(|ev| ev.is_invocation())
                .map(|ev| ev.process.0 as i64)
                .collect();
            let value = if rng.random_bool(0.7) {
                // plausible: the set of invoked indices so far
                Value::int_set(written.iter().copied())
            } else {
                let mut s: Vec<i64> = Vec::new();
                for i in 0..n as i64 {
                    if rng.random_bool(0.5) {
                        s.push(i);
                    }
                }
                Value::int_set(s)
            };
            events.push(Event::res(p.0, object, operation, value));
        } else {
            break;
        }
    }
    Execution::from_events(events).expect("generator emits well-formed")
}

/// A random two-object history over a validity object `v` and a
/// write-snapshot object `ws`, one-shot per object, with a mix of
/// plausible and junk responses.
pub fn random_two_object(rng: &mut ChaCha8Rng, n: u32, max_events: usize) -> Execution {
    let mut events: Vec<Event> = Vec::new();
    let mut invoked_v = vec![false; n as usize];
    let mut invoked_ws = vec![false; n as usize];
    let mut pending: BTreeMap<u32, &'static str> = BTreeMap::new();
    let target = rng.random_range(0..=max_events);
    while events.len() < target {
        let mut actions: Vec<(u32, &'static str, bool)> = Vec::new();
        for p in 0..n {
            if pending.contains_key(&p) {
                actions.push((p, pending[&p], false)); // respond
            } else {
                if !invoked_v[p as usize] {
                    actions.push((p, "v", true));
                }
                if !invoked_ws[p as usize] {
                    actions.push((p, "ws", true));
                }
            }
        }
        if actions.is_empty() {
            break;
        }
        let (p, obj, is_inv) = actions[rng.random_range(0..actions.len())];
        if is_inv {
            pending.insert(p, obj);
            if obj == "v" {
                invoked_v[p as usize] = true;
                events.push(Event::inv(p, "v", "validity", Value::Int(p as i64)));
            } else {
                invoked_ws[p as usize] = true;
                events.push(Event::inv(p, "ws", "write_snapshot", Value::Int(p as i64)));
            }
        } else {
            pending.remove(&p);
            if obj == "v" {
                let proposed: Vec<i64> = events
                    .iter()
                    .filter(|ev| ev.is_invocation() && ev.object == "v")
                    .map(|ev| ev.payload.as_int().unwrap())
                    .collect();
                let value = if rng.random_bool(0.7) && !proposed.is_empty() {
                    Value::Int(proposed[rng.random_range(0..proposed.len())])
                } else {
                    Value::Int(rng.random_range(0..n as i64 + 1))
                };
                events.push(Event::res(p, "v", "validity", value));
            } else {
                let written: Vec<i64> = events
                    .iter()
                    .filter(|ev| ev.is_invocation() && ev.object == "ws")
                    .map(|ev| ev.payload.as_int().unwrap())
                    .collect();
                let value = if rng.random_bool(0.7) {
                    Value::int_set(written.iter().copied())
                } else {
                    let mut s: Vec<i64> = Vec::new();
                    for i in 0..n as i64 {
                        if rng.random_bool(0.5) {
                            s.push(i);
                        }
                    }
                    Value::int_set(s)
                };
                events.push(Event::res(p, "ws", "write_snapshot", value));
            }
        }
    }
    Execution::from_events(events).expect("generator emits well-formed")
}
