//! Acceptance suite: every criterion runs at its stated tolerance and
//! prints one pass/fail line. Exhaustive small-instance oracles back the
//! checker, the simulator, and both directions of the task/object
//! translations.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use ilin::batch::map_items;
use ilin::bridges::{
    enumerate_one_shot_executions, object_to_plain_task, object_to_refined_task, response_universe,
    sequences, task_to_object, check_sequences_properties,
};
use ilin::checker::{
    bind_all, check, check_interval_linearizable, check_linearizable, check_local,
    check_set_linearizable, nonblocking_extension, verify_witness, CheckOptions, Condition,
};
use ilin::corpus;
use ilin::histories::{Event, Execution, ProcessId};
use ilin::interval::{project_interval, IntervalSpec};
use ilin::objects::{builtin_spec, BuiltinObjectId};
use ilin::sim::{enumerate_schedules, fuzz_write_snapshot, max_steps_per_process, run_write_snapshot, direct_witness};
use ilin::task::{builtin_task, Task, TaskId, Vertex};
use ilin::value::Value;

use common::{oracle_check, random_one_shot, random_two_object};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pass(n: u32, what: &str) {
    println!("criterion {n} ({what}): PASS");
}

fn ws_spec(n: u32) -> IntervalSpec {
    builtin_spec(&BuiltinObjectId::new("write_snapshot", n)).unwrap()
}

#[test]
fn acceptance_01_golden_histories() {
    // fig3 golden: linearizable through the sequential automaton via the path
    // {}, {0,1}, {0,1}, {0,1,2}
    let t0 = Instant::now();
    let e = corpus::fig3();
    let specs = bind_all(&e, &builtin_spec(&BuiltinObjectId::new("ws_sequential", 3)).unwrap());
    let v = check_linearizable(&e, &specs).unwrap();
    assert!(v.ok, "fig3 must be linearizable");
    let w = v.witness.unwrap();
    let path = specs["ws"].accepts(&project_interval(&w, "ws").unwrap()).unwrap();
    let states: Vec<String> = path.iter().map(|q| q.get("written").to_string()).collect();
    assert_eq!(states, vec!["{}", "{0,1}", "{0,1}", "{0,1,2}"]);
    assert!(t0.elapsed().as_secs_f64() < 1.0, "fig3 check under a second");

    // fig4 golden: interval-linearizable but not set-linearizable
    let t0 = Instant::now();
    let e = corpus::fig4();
    let specs = bind_all(&e, &ws_spec(3));
    assert!(check_interval_linearizable(&e, &specs).unwrap().ok);
    assert!(!check_set_linearizable(&e, &specs).unwrap().ok);
    assert!(t0.elapsed().as_secs_f64() < 1.0, "fig4 checks under a second");

    // validity execution: interval-linearizable with witness classes
    // I0{P0,P1} R0{P0} I1{P2} R1{P1,P2}
    let t0 = Instant::now();
    let e = corpus::validity_execution();
    let specs = bind_all(
        &e,
        &builtin_spec(
            &BuiltinObjectId::new("validity", 3)
                .with_universe([Value::Int(1), Value::Int(2), Value::Int(3)]),
        )
        .unwrap(),
    );
    let v = check_interval_linearizable(&e, &specs).unwrap();
    assert!(v.ok);
    let w = v.witness.unwrap();
    let ids: Vec<Vec<u32>> = w
        .classes()
        .iter()
        .map(|c| c.ids().iter().map(|p| p.0).collect())
        .collect();
    assert_eq!(ids, vec![vec![0, 1], vec![0], vec![2], vec![1, 2]]);
    assert!(t0.elapsed().as_secs_f64() < 1.0, "validity check under a second");

    pass(1, "golden histories");
}

#[test]
fn acceptance_02_simulator_sweep() {
    let started = Instant::now();

    // exhaustive schedule enumeration for n = 2
    let spec2 = ws_spec(2);
    let schedules = enumerate_schedules(2, 2 * max_steps_per_process(2));
    assert!(!schedules.is_empty());
    let traces: Vec<_> = schedules
        .iter()
        .map(|s| run_write_snapshot(2, s).unwrap())
        .collect();
    let results = map_items(&traces, true, |trace| {
        let specs = bind_all(&trace.execution, &spec2);
        let ok = trace.execution.is_empty()
            || check_interval_linearizable(&trace.execution, &specs).unwrap().ok;
        let props = snapshot_properties_hold(trace);
        let (witness, appended) = direct_witness(trace).unwrap();
        let direct = verify_witness(
            &trace.execution,
            &specs,
            &witness,
            &appended,
            Condition::IntervalLinearizable,
        )
        .is_ok();
        (ok, props, direct)
    });
    let total2 = results.len();
    assert!(results.iter().all(|(a, b, c)| *a && *b && *c));
    // every trace-equivalence class passed; record the count as a golden
    assert_eq!(total2, schedules.len());

    // >= 1000 seeded schedules for n = 3
    let spec3 = ws_spec(3);
    let traces = fuzz_write_snapshot(3, 20260810, 1000);
    assert_eq!(traces.len(), 1000);
    let results = map_items(&traces, true, |trace| {
        let specs = bind_all(&trace.execution, &spec3);
        let ok = check_interval_linearizable(&trace.execution, &specs).unwrap().ok;
        let props = snapshot_properties_hold(trace);
        let (witness, appended) = direct_witness(trace).unwrap();
        let direct = verify_witness(
            &trace.execution,
            &specs,
            &witness,
            &appended,
            Condition::IntervalLinearizable,
        )
        .is_ok();
        (ok, props, direct)
    });
    assert!(results.iter().all(|(a, b, c)| *a && *b && *c));

    assert!(
        started.elapsed().as_secs() < 300,
        "the simulator sweep must finish within five minutes"
    );
    pass(2, "simulator sweep: every trace interval-linearizable");
}

fn snapshot_properties_hold(trace: &ilin::sim::SimTrace) -> bool {
    for (p, s) in &trace.outputs {
        if !s.contains(&(p.0 as i64)) {
            return false; // self-inclusion
        }
    }
    for (_, a) in &trace.outputs {
        for (_, b) in &trace.outputs {
            if !(a.is_subset(b) || b.is_subset(a)) {
                return false; // containment
            }
        }
    }
    true
}

#[test]
fn acceptance_03_checker_vs_oracle() {
    // all one-shot executions of two processes over the validity spec
    let spec = builtin_spec(
        &BuiltinObjectId::new("validity", 2).with_universe([Value::Int(1), Value::Int(2)]),
    )
    .unwrap();
    let invocations: Vec<Event> = (0..2)
        .flat_map(|p| {
            [1i64, 2].map(|v| Event::inv(p, "v", "validity", Value::Int(v)))
        })
        .collect();
    let mut responses: BTreeMap<ProcessId, Vec<Value>> = BTreeMap::new();
    for p in 0..2 {
        responses.insert(
            ProcessId(p),
            vec![Value::Int(1), Value::Int(2), Value::Int(7)],
        );
    }
    let executions = enumerate_one_shot_executions(&invocations, &responses, 8, false);
    assert_eq!(executions.len(), 313, "the exhaustive corpus has a known size");

    let mut oracle_candidates: BTreeMap<ProcessId, Vec<Value>> = BTreeMap::new();
    for p in 0..2 {
        oracle_candidates.insert(ProcessId(p), vec![Value::Int(1), Value::Int(2)]);
    }
    let disagreements: usize = map_items(&executions, true, |e| {
        let specs = bind_all(e, &spec);
        let mine = check_interval_linearizable(e, &specs).unwrap().ok;
        let naive = oracle_check(e, &specs, Condition::IntervalLinearizable, &oracle_candidates);
        usize::from(mine != naive)
    })
    .into_iter()
    .sum();
    assert_eq!(disagreements, 0, "checker must agree with the brute-force oracle");
    pass(3, "checker vs oracle");
}

#[test]
fn acceptance_04_locality() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut specs: BTreeMap<String, IntervalSpec> = BTreeMap::new();
    specs.insert(
        "v".into(),
        builtin_spec(
            &BuiltinObjectId::new("validity", 3)
                .with_universe([Value::Int(0), Value::Int(1), Value::Int(2), Value::Int(3)]),
        )
        .unwrap(),
    );
    specs.insert("ws".into(), ws_spec(3));

    let mut histories = Vec::new();
    while histories.len() < 500 {
        let e = random_two_object(&mut rng, 3, 8);
        if e.objects().len() == 2 {
            histories.push(e);
        }
    }
    let opts = CheckOptions::new(Condition::IntervalLinearizable);
    let results = map_items(&histories, true, |e| {
        let local = check_local(e, &specs, &opts).unwrap();
        let direct = check(e, &specs, &opts).unwrap();
        if local.ok != direct.ok {
            return (false, false);
        }
        // on yes, the composed witness exists and has re-verified (the
        // composition errors loudly if the merge relation were cyclic)
        let composed_ok = !local.ok || local.composed.is_some();
        (true, composed_ok)
    });
    let agreed = results.iter().filter(|(a, _)| *a).count();
    let composed = results.iter().filter(|(_, b)| *b).count();
    assert_eq!(agreed, histories.len(), "locality must agree with the direct check");
    assert_eq!(composed, histories.len(), "every composed witness re-verifies");
    pass(4, "locality of interval-linearizability");
}

#[test]
fn acceptance_05_nonblocking() {
    // every interval-linearizable execution with a pending invocation in
    // the exhaustive n=2 validity corpus can be extended
    let spec = builtin_spec(
        &BuiltinObjectId::new("validity", 2).with_universe([Value::Int(1), Value::Int(2)]),
    )
    .unwrap();
    let invocations: Vec<Event> = (0..2)
        .flat_map(|p| [1i64, 2].map(|v| Event::inv(p, "v", "validity", Value::Int(v))))
        .collect();
    let mut responses: BTreeMap<ProcessId, Vec<Value>> = BTreeMap::new();
    for p in 0..2 {
        responses.insert(ProcessId(p), vec![Value::Int(1), Value::Int(2)]);
    }
    let executions = enumerate_one_shot_executions(&invocations, &responses, 8, false);
    let opts = CheckOptions::new(Condition::IntervalLinearizable);

    let mut tried = 0;
    for e in &executions {
        if e.pending_calls().is_empty() {
            continue;
        }
        let specs = bind_all(e, &spec);
        if !check_interval_linearizable(e, &specs).unwrap().ok {
            continue;
        }
        for pending in e.pending_calls() {
            tried += 1;
            let r = nonblocking_extension(e, &specs, &pending, &opts)
                .expect("a response must exist for a total operation");
            let extended = e.extend(&[r]).unwrap();
            assert!(
                check_interval_linearizable(&extended, &specs).unwrap().ok,
                "appending the found response keeps the execution linearizable"
            );
        }
    }
    assert!(tried > 40, "the corpus exercises many pending invocations");
    pass(5, "non-blocking extension");
}

fn exhaustive_task_histories(task: &Task, max_events: usize) -> Vec<Execution> {
    let invocations: Vec<Event> = task
        .inputs
        .vertices()
        .iter()
        .map(|v| Event::inv(v.process.0, "t", "task", v.value.clone()))
        .collect();
    let mut responses: BTreeMap<ProcessId, Vec<Value>> = BTreeMap::new();
    for v in task.outputs.vertices() {
        let entry = responses.entry(v.process).or_default();
        if !entry.contains(&v.value) {
            entry.push(v.value.clone());
        }
    }
    enumerate_one_shot_executions(&invocations, &responses, max_events, false)
}

#[test]
fn acceptance_06_task_to_object_equivalence() {
    for id in [
        TaskId::new("validity", 2),
        TaskId::new("immediate_snapshot", 2),
    ] {
        let task = builtin_task(&id).unwrap();
        let object = task_to_object(&task).unwrap();
        let executions = exhaustive_task_histories(&task, 4);
        let disagreements: usize = map_items(&executions, true, |e| {
            let sat = task.satisfies(e).unwrap().satisfied;
            let specs = bind_all(e, &object);
            let lin = e.is_empty() || check_interval_linearizable(e, &specs).unwrap().ok;
            usize::from(sat != lin)
        })
        .into_iter()
        .sum();
        assert_eq!(disagreements, 0, "{id:?}: satisfies_task must match the object");
    }
    pass(6, "task-to-object equivalence");
}

#[test]
fn acceptance_07_refined_task_round_trips() {
    let spec = ws_spec(2);
    let task = object_to_refined_task(&spec, 4, 1_000_000).unwrap();
    assert!(task.validate().is_empty());

    let invocations: Vec<Event> = (0..2)
        .map(|p| Event::inv(p, "ws", "write_snapshot", Value::Int(p as i64)))
        .collect();
    let responses = response_universe(&spec, 100_000).unwrap();
    let executions = enumerate_one_shot_executions(&invocations, &responses, 4, false);

    // object-to-task direction: satisfaction of the derived refined task
    // coincides with interval-linearizability against the source object
    let disagreements: usize = map_items(&executions, true, |e| {
        let sat = task.satisfies_refined(e).unwrap().satisfied;
        let specs = bind_all(e, &spec);
        let lin = e.is_empty() || check_interval_linearizable(e, &specs).unwrap().ok;
        usize::from(sat != lin)
    })
    .into_iter()
    .sum();
    assert_eq!(disagreements, 0, "object-to-task round trip");

    // task-to-object direction: the object rebuilt from the refined task
    // has the same interval-linearizable executions
    let object = ilin::bridges::refined_task_to_object(&task).unwrap();
    let disagreements: usize = map_items(&executions, true, |e| {
        let sat = task.satisfies_refined(e).unwrap().satisfied;
        let specs = bind_all(e, &object);
        let lin = e.is_empty() || check_interval_linearizable(e, &specs).unwrap().ok;
        usize::from(sat != lin)
    })
    .into_iter()
    .sum();
    assert_eq!(disagreements, 0, "task-to-object round trip");
    pass(7, "refined-task round trips");
}

#[test]
fn acceptance_08_lemma1_queue_separation() {
    let spec = builtin_spec(&BuiltinObjectId::new("restricted_queue", 3)).unwrap();
    let a1 = corpus::lemma1_alpha1();
    let a2 = corpus::lemma1_alpha2();
    let a3 = corpus::lemma1_alpha3();
    assert!(check_linearizable(&a1, &bind_all(&a1, &spec)).unwrap().ok);
    assert!(check_linearizable(&a2, &bind_all(&a2, &spec)).unwrap().ok);
    assert!(!check_linearizable(&a3, &bind_all(&a3, &spec)).unwrap().ok);

    // the naive task built from the queue's linearizable pending-free
    // executions accepts α3 anyway: tasks cannot express the queue
    let naive = object_to_plain_task(&spec, 6, 1_000_000, Condition::Linearizable).unwrap();
    let verdict = naive.satisfies(&a3).unwrap();
    assert!(verdict.satisfied, "alpha3 satisfies the naive task");
    pass(8, "queue/task separation");
}

#[test]
fn acceptance_09_claim2_property_suite() {
    let task4 = builtin_task(&TaskId::new("write_snapshot", 4)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut checked = 0;
    let mut item4_checked = 0;
    while checked < 10_000 {
        let n = 1 + (checked % 4) as u32;
        let e = random_one_shot(&mut rng, n, 12, "ws", "write_snapshot");
        let fs = sequences(&e);
        let violations = check_sequences_properties(&e, &fs, None);
        assert!(violations.is_empty(), "face-sequence items on {e:?}: {violations:?}");
        // item 4 applies when the execution satisfies the task
        if let Ok(v) = task4.satisfies(&e) {
            if v.satisfied {
                let with_task = check_sequences_properties(&e, &fs, Some(&task4));
                assert!(with_task.is_empty(), "item 4 on {e:?}: {with_task:?}");
                item4_checked += 1;
            }
        }
        checked += 1;
    }
    assert!(item4_checked > 500, "item 4 exercised on satisfying executions");
    pass(9, "face-sequence property suite");
}

#[test]
fn acceptance_10_validity_task_negative_golden() {
    let task = builtin_task(
        &TaskId::new("validity", 3).with_universe([Value::Int(1), Value::Int(2), Value::Int(3)]),
    )
    .unwrap();
    let e = corpus::validity_mislead();
    let verdict = task.satisfies(&e).unwrap();
    assert!(!verdict.satisfied);
    // the violation surfaces before P2's invocation (event index 4)
    let r_invocation_index = e
        .events()
        .iter()
        .position(|ev| ev.process == ProcessId(2) && ev.is_invocation())
        .unwrap();
    let prefix = verdict.violating_prefix.unwrap();
    assert!(prefix <= r_invocation_index);
    assert_eq!(prefix, 3);

    // the generated object rejects the same history
    let object = task_to_object(&task).unwrap();
    let specs = bind_all(&e, &object);
    assert!(!check_interval_linearizable(&e, &specs).unwrap().ok);
    pass(10, "negative validity-task golden");
}

#[test]
fn task_vertices_match_history_payloads() {
    // the write-snapshot task derived facets agree with the combinatorial
    // builder's on n = 2 (the derivation itself is under test)
    let spec = ws_spec(2);
    let derived = object_to_refined_task(&spec, 4, 1_000_000).unwrap();
    let built = builtin_task(&TaskId::new("write_snapshot", 2)).unwrap();
    // stripping set-views from the derived facets yields the built task's
    let full = ilin::task::Simplex::new([
        Vertex::new(0, Value::Int(0)),
        Vertex::new(1, Value::Int(1)),
    ])
    .unwrap();
    let derived_plain: std::collections::BTreeSet<ilin::task::Simplex> = derived
        .delta(&full)
        .unwrap()
        .facets()
        .map(|f| {
            ilin::task::Simplex::new(
                f.vertices().map(|v| Vertex::new(v.process.0, v.value.clone())),
            )
            .unwrap()
        })
        .collect();
    let built_facets: std::collections::BTreeSet<ilin::task::Simplex> =
        built.delta(&full).unwrap().facets().cloned().collect();
    assert_eq!(derived_plain, built_facets);
}
