//! Deterministic interleaving simulator for the double-collect
//! write-snapshot algorithm over single-writer multi-reader atomic
//! registers.
//!
//! One scheduled step is one register read or write; local computation is
//! free. A process writes its index, then repeats full collects (reads in
//! ascending index order) until two successive collects agree, and
//! returns the last collect. The invocation event is emitted at the
//! process's first scheduled step (the write) and the response at the
//! step executing the final read of the successful double collect.
//!
//! Reads of the array are asynchronous and could happen in any order;
//! fixing ascending order is one admissible order and keeps schedule
//! enumeration tractable.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::histories::{Event, Execution, ProcessId};
use crate::interval::{ConcurrencyClass, IntervalExecution};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub steps: Vec<ProcessId>,
}

impl Schedule {
    pub fn new<I: IntoIterator<Item = u32>>(steps: I) -> Schedule {
        Schedule {
            steps: steps.into_iter().map(ProcessId).collect(),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, p) in self.steps.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", p.0)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepAction {
    Write { reg: usize, value: i64 },
    Read { reg: usize, value: Option<i64> },
    /// The scheduled process had already returned.
    Skip,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepRecord {
    pub step: usize,
    pub process: ProcessId,
    pub action: StepAction,
}

/// A simulated run: the produced history plus the per-step register
/// operations.
#[derive(Clone, Debug)]
pub struct SimTrace {
    pub execution: Execution,
    pub step_log: Vec<StepRecord>,
    /// Results of the processes that completed.
    pub outputs: Vec<(ProcessId, BTreeSet<i64>)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SimError {
    IllegalProcess { pid: u32, n: u32 },
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::IllegalProcess { pid, n } => {
                write!(f, "schedule names P{pid} but the system has {n} processes")
            }
        }
    }
}

impl std::error::Error for SimError {}

#[derive(Clone, Debug)]
enum Pc {
    NotStarted,
    Collect {
        buf: BTreeSet<i64>,
        next_reg: usize,
        prev: Option<BTreeSet<i64>>,
        // step index at which the current collect started
        started_at: usize,
        // end step of the previous collect
        prev_ended_at: usize,
    },
    Done,
}

struct Machine {
    n: u32,
    mem: Vec<Option<i64>>,
    pcs: Vec<Pc>,
    events: Vec<Event>,
    log: Vec<StepRecord>,
    outputs: Vec<(ProcessId, BTreeSet<i64>)>,
    // (old collect end, new collect start) per completed process
    windows: Vec<Option<(usize, usize)>>,
}

impl Machine {
    fn new(n: u32) -> Machine {
        Machine {
            n,
            mem: vec![None; n as usize],
            pcs: (0..n).map(|_| Pc::NotStarted).collect(),
            events: Vec::new(),
            log: Vec::new(),
            outputs: Vec::new(),
            windows: vec![None; n as usize],
        }
    }

    fn finished(&self, p: ProcessId) -> bool {
        matches!(self.pcs[p.0 as usize], Pc::Done)
    }

    fn all_finished(&self) -> bool {
        (0..self.n).all(|p| self.finished(ProcessId(p)))
    }

    fn step(&mut self, p: ProcessId) {
        let step = self.log.len();
        let i = p.0 as usize;
        match std::mem::replace(&mut self.pcs[i], Pc::Done) {
            Pc::NotStarted => {
                self.mem[i] = Some(i as i64);
                self.events
                    .push(Event::inv(p.0, "ws", "write_snapshot", Value::Int(i as i64)));
                self.log.push(StepRecord {
                    step,
                    process: p,
                    action: StepAction::Write { reg: i, value: i as i64 },
                });
                self.pcs[i] = Pc::Collect {
                    buf: BTreeSet::new(),
                    next_reg: 0,
                    prev: None,
                    started_at: step + 1,
                    prev_ended_at: step,
                };
            }
            Pc::Collect {
                mut buf,
                next_reg,
                prev,
                started_at,
                prev_ended_at,
            } => {
                let value = self.mem[next_reg];
                if let Some(v) = value {
                    buf.insert(v);
                }
                self.log.push(StepRecord {
                    step,
                    process: p,
                    action: StepAction::Read { reg: next_reg, value },
                });
                if next_reg + 1 < self.n as usize {
                    self.pcs[i] = Pc::Collect {
                        buf,
                        next_reg: next_reg + 1,
                        prev,
                        started_at,
                        prev_ended_at,
                    };
                    return;
                }
                // a full collect just ended at this step
                match prev {
                    Some(old) if old == buf => {
                        self.events.push(Event::res(
                            p.0,
                            "ws",
                            "write_snapshot",
                            Value::int_set(buf.iter().copied()),
                        ));
                        self.outputs.push((p, buf));
                        self.windows[i] = Some((prev_ended_at, started_at));
                        self.pcs[i] = Pc::Done;
                    }
                    _ => {
                        self.pcs[i] = Pc::Collect {
                            buf: BTreeSet::new(),
                            next_reg: 0,
                            prev: Some(buf),
                            started_at: step + 1,
                            prev_ended_at: step,
                        };
                    }
                }
            }
            Pc::Done => {
                self.log.push(StepRecord {
                    step,
                    process: p,
                    action: StepAction::Skip,
                });
            }
        }
    }

    fn into_trace(self) -> SimTrace {
        SimTrace {
            execution: Execution::from_events(self.events).expect("simulator emits well-formed"),
            step_log: self.log,
            outputs: self.outputs,
        }
    }
}

/// Runs the algorithm under a schedule. Running out of steps mid-operation
/// leaves the invocation pending — that is a result, not an error.
pub fn run_write_snapshot(n: u32, schedule: &Schedule) -> Result<SimTrace, SimError> {
    let mut m = Machine::new(n);
    for p in &schedule.steps {
        if p.0 >= n {
            return Err(SimError::IllegalProcess { pid: p.0, n });
        }
        m.step(*p);
    }
    Ok(m.into_trace())
}

/// Worst-case scheduled steps one process can consume: the write plus the
/// initial collect plus at most (n-1)+1 further collects of n reads each.
pub fn max_steps_per_process(n: u32) -> usize {
    1 + (n as usize) * (n as usize + 1)
}

/// Every step sequence up to `max_steps`, deduplicated by trace
/// equivalence: finished processes are never scheduled (their steps would
/// be recorded skips), so each branch is a distinct register-op log.
/// Returned in lexicographic order.
pub fn enumerate_schedules(n: u32, max_steps: usize) -> Vec<Schedule> {
    let mut out = Vec::new();
    let m = Machine::new(n);
    let mut steps = Vec::new();
    enumerate_rec(n, max_steps, &m, &mut steps, &mut out);
    out
}

fn enumerate_rec(
    n: u32,
    max_steps: usize,
    m: &Machine,
    steps: &mut Vec<ProcessId>,
    out: &mut Vec<Schedule>,
) {
    if steps.len() >= max_steps || m.all_finished() {
        out.push(Schedule {
            steps: steps.clone(),
        });
        return;
    }
    for p in (0..n).map(ProcessId) {
        if m.finished(p) {
            continue;
        }
        // replay is cheap at desk scale; clone the machine per branch
        let mut m2 = Machine::new(n);
        for s in steps.iter() {
            m2.step(*s);
        }
        m2.step(p);
        steps.push(p);
        enumerate_rec(n, max_steps, &m2, steps, out);
        steps.pop();
    }
}

/// Deterministic pseudo-random complete schedules: each trace keeps
/// scheduling a uniformly chosen unfinished process until all return.
/// Identical seeds yield identical trace streams on any platform.
pub fn fuzz_write_snapshot(n: u32, seed: u64, count: usize) -> Vec<SimTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut m = Machine::new(n);
        while !m.all_finished() {
            let unfinished: Vec<ProcessId> =
                (0..n).map(ProcessId).filter(|p| !m.finished(*p)).collect();
            let pick = unfinished[rng.random_range(0..unfinished.len())];
            m.step(pick);
        }
        out.push(m.into_trace());
    }
    out
}

/// The direct interval-linearization of a simulated run, following the
/// proof construction: pick a time τᵢ inside each completed double
/// collect at which the written set equals the output, order and
/// deduplicate by equal sets, then emit each group's invocations and
/// responses as one class pair. Pending invocations whose index appears
/// in some output are answered with the largest set in the final class.
///
/// Returns the witness plus the responses appended for pending calls.
pub fn direct_witness(trace: &SimTrace) -> Result<(IntervalExecution, Vec<Event>), String> {
    if trace.outputs.is_empty() {
        return Ok((IntervalExecution::empty(), Vec::new()));
    }

    // group by distinct output sets, in τ order
    let mut groups: Vec<(BTreeSet<i64>, Vec<ProcessId>)> = Vec::new();
    for (p, set) in sorted_outputs(trace)? {
        match groups.last_mut() {
            Some((s, ps)) if *s == set => ps.push(p),
            _ => groups.push((set, vec![p])),
        }
    }

    let inv_event_of = |pid: ProcessId| -> Option<Event> {
        trace
            .execution
            .events()
            .iter()
            .find(|e| e.is_invocation() && e.process == pid)
            .cloned()
    };
    let res_event_of = |pid: ProcessId| -> Option<Event> {
        trace
            .execution
            .events()
            .iter()
            .find(|e| e.is_response() && e.process == pid)
            .cloned()
    };

    let top: BTreeSet<i64> = groups.last().expect("non-empty").0.clone();
    let pending_included: Vec<ProcessId> = trace
        .execution
        .pending_calls()
        .iter()
        .map(|c| trace.execution.events()[c.invocation].process)
        .filter(|p| top.contains(&(p.0 as i64)))
        .collect();

    let mut appended = Vec::new();
    let mut pairs = Vec::new();
    let mut covered: BTreeSet<i64> = BTreeSet::new();
    for (k, (set, responders)) in groups.iter().enumerate() {
        let fresh: Vec<i64> = set.difference(&covered).copied().collect();
        covered = set.clone();
        let inv_events: Vec<Event> = fresh
            .iter()
            .map(|i| inv_event_of(ProcessId(*i as u32)).ok_or(format!("P{i} wrote but never invoked?")))
            .collect::<Result<_, _>>()?;
        let mut res_events: Vec<Event> = responders
            .iter()
            .map(|p| res_event_of(*p).expect("completed"))
            .collect();
        if k + 1 == groups.len() {
            for p in &pending_included {
                let r = Event::res(p.0, "ws", "write_snapshot", Value::int_set(top.iter().copied()));
                appended.push(r.clone());
                res_events.push(r);
            }
        }
        pairs.push((
            ConcurrencyClass::invoking(inv_events).map_err(|e| e.to_string())?,
            ConcurrencyClass::responding(res_events).map_err(|e| e.to_string())?,
        ));
    }
    let witness = IntervalExecution::from_pairs(pairs).map_err(|e| e.to_string())?;
    Ok((witness, appended))
}

fn sorted_outputs(trace: &SimTrace) -> Result<Vec<(ProcessId, BTreeSet<i64>)>, String> {
    let written_at = |t: usize| -> BTreeSet<i64> {
        trace
            .step_log
            .iter()
            .take(t + 1)
            .filter_map(|r| match r.action {
                StepAction::Write { value, .. } => Some(value),
                _ => None,
            })
            .collect()
    };
    let mut times: Vec<(usize, ProcessId, BTreeSet<i64>)> = Vec::new();
    for (p, set) in &trace.outputs {
        let (lo, hi) = window_of(trace, *p)
            .ok_or_else(|| format!("{p} completed without a recorded double collect"))?;
        let t = (lo..=hi)
            .find(|&t| written_at(t) == *set)
            .ok_or_else(|| format!("no time in {p}'s double collect matches its output"))?;
        times.push((t, *p, set.clone()));
    }
    times.sort();
    Ok(times.into_iter().map(|(_, p, s)| (p, s)).collect())
}

// Recover the (old collect end, new collect start) step window of a
// completed process from the log.
fn window_of(trace: &SimTrace, p: ProcessId) -> Option<(usize, usize)> {
    let reads: Vec<usize> = trace
        .step_log
        .iter()
        .filter(|r| r.process == p && matches!(r.action, StepAction::Read { .. }))
        .map(|r| r.step)
        .collect();
    // the collect length equals the register count; infer it from the
    // largest register index this process read
    let regs = trace
        .step_log
        .iter()
        .filter_map(|r| match r.action {
            StepAction::Read { reg, .. } if r.process == p => Some(reg),
            _ => None,
        })
        .max()?
        + 1;
    if reads.len() < 2 * regs {
        return None;
    }
    let old_end = reads[reads.len() - regs - 1];
    let new_start = reads[reads.len() - regs];
    Some((old_end, new_start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::checker::{bind_all, check_interval_linearizable, verify_witness, Condition};
    use crate::objects::{builtin_spec, BuiltinObjectId};

    #[test]
    fn solo_process_returns_itself() {
        let t = run_write_snapshot(1, &Schedule::new([0, 0, 0])).unwrap();
        assert_eq!(t.outputs, vec![(ProcessId(0), [0i64].into_iter().collect())]);
        assert_eq!(t.execution.len(), 2);
    }

    #[test]
    fn sequential_runs_nest() {
        // P0 to completion (5 steps: write + two 2-read collects), then P1
        let mut steps = vec![0u32; 5];
        steps.extend(vec![1u32; 5]);
        let t = run_write_snapshot(2, &Schedule::new(steps)).unwrap();
        let sets: Vec<BTreeSet<i64>> = t.outputs.iter().map(|(_, s)| s.clone()).collect();
        assert_eq!(sets[0], [0i64].into_iter().collect());
        assert_eq!(sets[1], [0i64, 1].into_iter().collect());
    }

    #[test]
    fn round_robin_sees_both() {
        let t = run_write_snapshot(2, &Schedule::new([0, 1, 0, 1, 0, 1, 0, 1, 0, 1])).unwrap();
        assert_eq!(t.outputs.len(), 2);
        for (_, s) in &t.outputs {
            assert_eq!(*s, [0i64, 1].into_iter().collect());
        }
    }

    #[test]
    fn scheduling_after_completion_is_recorded_as_skip() {
        let t = run_write_snapshot(1, &Schedule::new([0, 0, 0, 0])).unwrap();
        assert!(matches!(t.step_log[3].action, StepAction::Skip));
        assert!(matches!(
            run_write_snapshot(1, &Schedule::new([5])),
            Err(SimError::IllegalProcess { pid: 5, n: 1 })
        ));
    }

    #[test]
    fn out_of_steps_leaves_invocation_pending() {
        let t = run_write_snapshot(2, &Schedule::new([0, 0])).unwrap();
        assert_eq!(t.execution.pending_calls().len(), 1);
        assert!(t.outputs.is_empty());
    }

    #[test]
    fn enumeration_counts() {
        // n=1: the solo run is forced
        let s = enumerate_schedules(1, 3);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0], Schedule::new([0, 0, 0]));

        // n=2, one step: two classes, all invocations pending
        let s = enumerate_schedules(2, 1);
        assert_eq!(s.len(), 2);
        for sched in &s {
            let t = run_write_snapshot(2, sched).unwrap();
            assert!(t.outputs.is_empty());
        }
    }

    #[test]
    fn fuzz_is_deterministic() {
        let a = fuzz_write_snapshot(3, 42, 5);
        let b = fuzz_write_snapshot(3, 42, 5);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.step_log, y.step_log);
            assert_eq!(x.execution, y.execution);
        }
    }

    #[test]
    fn outputs_satisfy_self_inclusion_and_containment() {
        for trace in fuzz_write_snapshot(3, 7, 25) {
            for (p, s) in &trace.outputs {
                assert!(s.contains(&(p.0 as i64)), "self-inclusion");
            }
            for (_, a) in &trace.outputs {
                for (_, b) in &trace.outputs {
                    assert!(a.is_subset(b) || b.is_subset(a), "containment");
                }
            }
        }
    }

    #[test]
    fn termination_within_bounded_collects() {
        // after an arbitrary prefix, a process run alone finishes within
        // its worst-case step count
        let prefix = Schedule::new([0, 1, 2, 0, 1, 2, 2, 1]);
        let mut steps: Vec<u32> = prefix.steps.iter().map(|p| p.0).collect();
        steps.extend(vec![0u32; max_steps_per_process(3)]);
        let t = run_write_snapshot(3, &Schedule::new(steps)).unwrap();
        assert!(t.outputs.iter().any(|(p, _)| *p == ProcessId(0)));
    }

    #[test]
    fn direct_witness_agrees_with_checker() {
        let spec = builtin_spec(&BuiltinObjectId::new("write_snapshot", 3)).unwrap();
        for trace in fuzz_write_snapshot(3, 11, 10) {
            let specs = bind_all(&trace.execution, &spec);
            let verdict = check_interval_linearizable(&trace.execution, &specs).unwrap();
            assert!(verdict.ok);
            let (witness, appended) = direct_witness(&trace).unwrap();
            verify_witness(
                &trace.execution,
                &specs,
                &witness,
                &appended,
                Condition::IntervalLinearizable,
            )
            .unwrap();
        }
    }
}
