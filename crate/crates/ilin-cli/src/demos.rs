//! The built-in demo scenarios. Each one recomputes its report and
//! compares it against the embedded golden output, failing loudly on any
//! drift.

use std::collections::BTreeMap;

use ilin::batch::map_items;
use ilin::bridges::object_to_plain_task;
use ilin::checker::{
    bind_all, check_interval_linearizable, check_linearizable, check_set_linearizable, Condition,
};
use ilin::corpus;
use ilin::interval::{project_interval, IntervalSpec};
use ilin::objects::{builtin_spec, BuiltinObjectId};
use ilin::sim::{enumerate_schedules, fuzz_write_snapshot, max_steps_per_process, run_write_snapshot};
use ilin::table::render_witness;
use ilin::value::Value;

pub const DEMO_NAMES: [&str; 6] = [
    "fig3",
    "fig4",
    "validity",
    "validity_abort",
    "lemma1",
    "theorem1",
];

pub fn golden(name: &str) -> Option<&'static str> {
    match name {
        "fig3" => Some(include_str!("../assets/demo_fig3.txt")),
        "fig4" => Some(include_str!("../assets/demo_fig4.txt")),
        "validity" => Some(include_str!("../assets/demo_validity.txt")),
        "validity_abort" => Some(include_str!("../assets/demo_validity_abort.txt")),
        "lemma1" => Some(include_str!("../assets/demo_lemma1.txt")),
        "theorem1" => Some(include_str!("../assets/demo_theorem1.txt")),
        _ => None,
    }
}

pub fn report(name: &str) -> Option<String> {
    match name {
        "fig3" => Some(fig3()),
        "fig4" => Some(fig4()),
        "validity" => Some(validity()),
        "validity_abort" => Some(validity_abort()),
        "lemma1" => Some(lemma1()),
        "theorem1" => Some(theorem1()),
        _ => None,
    }
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn fig3() -> String {
    let e = corpus::fig3();
    let specs = bind_all(&e, &builtin_spec(&BuiltinObjectId::new("ws_sequential", 3)).unwrap());
    let v = check_linearizable(&e, &specs).unwrap();
    let mut out = String::new();
    out.push_str("history (a linearizable write-snapshot execution that predicts the future):\n");
    out.push_str(&e.print());
    out.push_str(&format!(
        "linearizable against ws_sequential:n=3: {}\n",
        yes_no(v.ok)
    ));
    if let Some(w) = &v.witness {
        let path = specs["ws"].accepts(&project_interval(w, "ws").unwrap()).unwrap();
        let states: Vec<String> = path.iter().map(|q| q.get("written").to_string()).collect();
        out.push_str(&format!("automaton path: {}\n", states.join(" -> ")));
        out.push_str("witness:\n");
        out.push_str(&render_witness(w, 3));
    }
    out
}

fn fig4() -> String {
    let e = corpus::fig4();
    let specs = bind_all(&e, &builtin_spec(&BuiltinObjectId::new("write_snapshot", 3)).unwrap());
    let intlin = check_interval_linearizable(&e, &specs).unwrap();
    let setlin = check_set_linearizable(&e, &specs).unwrap();
    let mut out = String::new();
    out.push_str("history (a write-snapshot execution that is not set-linearizable):\n");
    out.push_str(&e.print());
    out.push_str(&format!(
        "interval-linearizable against write_snapshot:n=3: {}\n",
        yes_no(intlin.ok)
    ));
    if let Some(w) = &intlin.witness {
        out.push_str("witness:\n");
        out.push_str(&render_witness(w, 3));
    }
    out.push_str(&format!("set-linearizable: {}\n", yes_no(setlin.ok)));
    out
}

fn validity() -> String {
    let e = corpus::validity_execution();
    let spec = builtin_spec(
        &BuiltinObjectId::new("validity", 3)
            .with_universe([Value::Int(1), Value::Int(2), Value::Int(3)]),
    )
    .unwrap();
    let specs = bind_all(&e, &spec);
    let v = check_interval_linearizable(&e, &specs).unwrap();
    let mut out = String::new();
    out.push_str("history (an execution of a validity object):\n");
    out.push_str(&e.print());
    out.push_str(&format!(
        "interval-linearizable against validity:n=3: {}\n",
        yes_no(v.ok)
    ));
    if let Some(w) = &v.witness {
        out.push_str("witness:\n");
        out.push_str(&render_witness(w, 3));
    }
    out
}

fn validity_abort() -> String {
    let e = corpus::validity_abort_execution();
    let spec = builtin_spec(
        &BuiltinObjectId::new("validity_abort", 3)
            .with_k(2)
            .with_universe([Value::Int(1), Value::Int(2), Value::Int(3)]),
    )
    .unwrap();
    let specs = bind_all(&e, &spec);
    let v = check_interval_linearizable(&e, &specs).unwrap();
    let mut out = String::new();
    out.push_str("history (two concurrent aborts take effect, k=2):\n");
    out.push_str(&e.print());
    out.push_str(&format!(
        "interval-linearizable against validity_abort:n=3,k=2: {}\n",
        yes_no(v.ok)
    ));
    if let Some(w) = &v.witness {
        out.push_str("witness:\n");
        out.push_str(&render_witness(w, 3));
    }
    out
}

fn lemma1() -> String {
    let spec = builtin_spec(&BuiltinObjectId::new("restricted_queue", 3)).unwrap();
    let runs = [
        ("alpha1", corpus::lemma1_alpha1()),
        ("alpha2", corpus::lemma1_alpha2()),
        ("alpha3", corpus::lemma1_alpha3()),
    ];
    let mut out = String::new();
    out.push_str("restricted queue: P0 may enq(1), P1 may enq(2), P2 may deq\n");
    for (name, e) in &runs {
        let v = check_linearizable(e, &bind_all(e, &spec)).unwrap();
        let deq = e
            .events()
            .iter()
            .rev()
            .find(|ev| ev.operation == "deq" && ev.is_response())
            .map(|ev| ev.payload.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{name} (deq -> {deq}): linearizable: {}\n",
            yes_no(v.ok)
        ));
    }
    let naive = object_to_plain_task(&spec, 6, 2_000_000, Condition::Linearizable).unwrap();
    let verdict = naive.satisfies(&runs[2].1).unwrap();
    out.push_str(&format!(
        "alpha3 satisfies the naive task built from the queue's linearizable executions: {}\n",
        yes_no(verdict.satisfied)
    ));
    out.push_str(
        "alpha3 has the same inputs and outputs as alpha2, so no task can separate them,\n\
         but the sequential queue does: tasks cannot express this object.\n",
    );
    out
}

fn theorem1() -> String {
    let mut out = String::new();

    let spec2 = builtin_spec(&BuiltinObjectId::new("write_snapshot", 2)).unwrap();
    let schedules = enumerate_schedules(2, 2 * max_steps_per_process(2));
    let traces: Vec<_> = schedules
        .iter()
        .map(|s| run_write_snapshot(2, s).unwrap())
        .collect();
    let ok: usize = map_items(&traces, true, |t| {
        let specs: BTreeMap<String, IntervalSpec> = bind_all(&t.execution, &spec2);
        usize::from(
            t.execution.is_empty()
                || check_interval_linearizable(&t.execution, &specs).unwrap().ok,
        )
    })
    .into_iter()
    .sum();
    out.push_str(&format!(
        "exhaustive n=2 schedules (<= {} steps): {} trace classes, {}/{} interval-linearizable\n",
        2 * max_steps_per_process(2),
        traces.len(),
        ok,
        traces.len()
    ));

    let spec3 = builtin_spec(&BuiltinObjectId::new("write_snapshot", 3)).unwrap();
    let traces = fuzz_write_snapshot(3, 1, 200);
    let ok: usize = map_items(&traces, true, |t| {
        let specs: BTreeMap<String, IntervalSpec> = bind_all(&t.execution, &spec3);
        let lin = check_interval_linearizable(&t.execution, &specs).unwrap().ok;
        let props = t.outputs.iter().all(|(p, s)| s.contains(&(p.0 as i64)))
            && t.outputs
                .iter()
                .all(|(_, a)| t.outputs.iter().all(|(_, b)| a.is_subset(b) || b.is_subset(a)));
        usize::from(lin && props)
    })
    .into_iter()
    .sum();
    out.push_str(&format!(
        "seeded n=3 schedules (seed 1): {}/200 interval-linearizable with self-inclusion and containment\n",
        ok
    ));
    out
}
