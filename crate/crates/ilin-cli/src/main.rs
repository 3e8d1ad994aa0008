//! The `ilin` command line: check histories against interval-sequential
//! specs, simulate the write-snapshot algorithm, convert between tasks
//! and objects, validate tasks, and replay the built-in demos.
//!
//! Exit codes: 0 for yes/success, 1 for no/violations/drift, 2 for usage
//! or internal errors. Results go to stdout, diagnostics to stderr. The
//! `ILIN_BUDGET` environment variable caps checker search nodes (default
//! 2,000,000).

mod demos;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ilin::batch::map_items;
use ilin::bridges::{
    object_to_refined_task, task_to_object, task_to_split_sequential,
};
use ilin::checker::{
    check, check_local, enumerate_witnesses, CheckOptions, Condition, DEFAULT_BUDGET,
};
use ilin::histories::Execution;
use ilin::interval::{ConcurrencyClass, IntervalSpec, SpecState};
use ilin::objects::{builtin_spec, BuiltinObjectId};
use ilin::sim::{
    enumerate_schedules, fuzz_write_snapshot, max_steps_per_process, run_write_snapshot, SimTrace,
};
use ilin::table::render_witness;
use ilin::task::{builtin_task, Task, TaskId};
use ilin::taskfile::{parse_task, print_task};

#[derive(Parser)]
#[command(
    name = "ilin",
    about = "Specify concurrent one-shot problems as interval-sequential objects or tasks, and check execution histories against them"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConditionArg {
    /// Linearizability: singleton classes.
    Lin,
    /// Set-linearizability: every invocation answered in the next class.
    Setlin,
    /// Interval-linearizability.
    Intlin,
    /// Per-object interval-linearizability with witness composition.
    Local,
}

#[derive(Subcommand)]
enum Command {
    /// Decide a consistency condition for a history file.
    Check(CheckArgs),
    /// Run the write-snapshot algorithm under generated schedules.
    Simulate(SimulateArgs),
    /// Translate between tasks and interval-sequential objects.
    Convert {
        #[command(subcommand)]
        what: ConvertCmd,
    },
    /// Validate a task's carrier-map laws (and optionally a history).
    Validate(ValidateArgs),
    /// Re-run a named scenario and compare against its golden output.
    Demo {
        /// One of: fig3, fig4, validity, validity_abort, lemma1, theorem1.
        name: String,
    },
}

#[derive(Args)]
struct CheckArgs {
    /// Consistency condition to decide.
    #[arg(long, value_enum, default_value = "intlin")]
    condition: ConditionArg,
    /// Spec binding `[OBJECT=]NAME:PARAMS`; a bare spec binds every
    /// object in the history. Repeatable.
    #[arg(long = "object", required = true)]
    objects: Vec<String>,
    /// Print the witness as an init/term table.
    #[arg(long)]
    witness: bool,
    /// Experimental: enumerate all minimal witnesses (up to 16).
    #[arg(long)]
    all: bool,
    /// History file.
    history: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Algorithm to run; only `write-snapshot` is available.
    algorithm: String,
    /// Number of processes.
    #[arg(short)]
    n: u32,
    /// Seed for pseudo-random schedules.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of seeded schedules.
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Exhaustively enumerate schedules instead of sampling.
    #[arg(long)]
    enumerate: bool,
    /// Step bound for exhaustive enumeration (default: worst case).
    #[arg(long)]
    max_steps: Option<usize>,
    /// Write each trace as a history file into this directory.
    #[arg(long)]
    emit: Option<PathBuf>,
    /// Check every trace against the write-snapshot spec.
    #[arg(long)]
    check: bool,
    /// Worker threads for --check (1 disables parallelism).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum ConvertCmd {
    /// Task (built-in name or file) to an interval-sequential object.
    TaskToObject {
        #[arg(long)]
        task: String,
        /// Transition depth explored for the summary.
        #[arg(long, default_value_t = 4)]
        bound: usize,
    },
    /// One-shot object to its refined task, writing the task format.
    ObjectToTask {
        #[arg(long)]
        object: String,
        /// Event bound on the executions enumerated to build Δ.
        #[arg(long)]
        bound: usize,
        /// Output file (stdout when absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Task to the split set/get sequential object.
    Split {
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 4)]
        bound: usize,
    },
}

#[derive(Args)]
struct ValidateArgs {
    /// Task (built-in name like `immediate_snapshot:n=3`, or a file).
    #[arg(long)]
    task: String,
    /// Optionally check a history against the task.
    #[arg(long)]
    history: Option<PathBuf>,
    /// Treat the task as refined when checking the history.
    #[arg(long)]
    refined: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn budget() -> u64 {
    std::env::var("ILIN_BUDGET")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

fn run(command: Command) -> Result<u8, String> {
    match command {
        Command::Check(args) => cmd_check(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Convert { what } => cmd_convert(what),
        Command::Validate(args) => cmd_validate(args),
        Command::Demo { name } => cmd_demo(&name),
    }
}

fn load_history(path: &Path) -> Result<Execution, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    Execution::parse(&text).map_err(|e| e.to_string())
}

fn load_task(spec: &str) -> Result<Task, String> {
    if Path::new(spec).exists() {
        let text = std::fs::read_to_string(spec).map_err(|e| format!("cannot read {spec}: {e}"))?;
        return parse_task(&text).map_err(|e| e.to_string());
    }
    let id = TaskId::parse(spec).map_err(|e| e.to_string())?;
    builtin_task(&id).map_err(|e| e.to_string())
}

fn bind_specs(bindings: &[String], e: &Execution) -> Result<BTreeMap<String, IntervalSpec>, String> {
    let mut map: BTreeMap<String, IntervalSpec> = BTreeMap::new();
    let mut default_spec: Option<IntervalSpec> = None;
    for binding in bindings {
        // `NAME=SPEC` binds one object; a bare `SPEC` (whose first `=`
        // lies inside the parameter list, after the `:`) binds them all
        let named = binding
            .split_once('=')
            .filter(|(lhs, _)| !lhs.contains(':'));
        match named {
            Some((object, spec_text)) => {
                let id = BuiltinObjectId::parse(spec_text).map_err(|e| e.to_string())?;
                map.insert(object.to_string(), builtin_spec(&id).map_err(|e| e.to_string())?);
            }
            None => {
                let id = BuiltinObjectId::parse(binding).map_err(|e| e.to_string())?;
                default_spec = Some(builtin_spec(&id).map_err(|e| e.to_string())?);
            }
        }
    }
    for object in e.objects() {
        if let std::collections::btree_map::Entry::Vacant(slot) = map.entry(object.clone()) {
            match &default_spec {
                Some(spec) => {
                    slot.insert(spec.clone());
                }
                None => return Err(format!("no spec bound to object '{object}'")),
            }
        }
    }
    Ok(map)
}

fn cmd_check(args: CheckArgs) -> Result<u8, String> {
    let e = load_history(&args.history)?;
    let specs = bind_specs(&args.objects, &e)?;
    let n = specs.values().map(|s| s.processes).max().unwrap_or(1);

    let condition = match args.condition {
        ConditionArg::Lin => Condition::Linearizable,
        ConditionArg::Setlin => Condition::SetLinearizable,
        ConditionArg::Intlin | ConditionArg::Local => Condition::IntervalLinearizable,
    };
    let opts = CheckOptions::new(condition).with_budget(budget());

    if args.condition == ConditionArg::Local {
        let verdict = check_local(&e, &specs, &opts).map_err(|e| e.to_string())?;
        println!(
            "local interval-linearizable: {} ({} nodes)",
            if verdict.ok { "yes" } else { "no" },
            verdict.nodes
        );
        if let Some(obj) = &verdict.failing_object {
            println!("failing object: {obj}");
        }
        if args.witness {
            if let Some(composed) = verdict.composed.as_ref().and_then(|c| c.witness.as_ref()) {
                print!("{}", render_witness(composed, n));
            }
        }
        return Ok(u8::from(!verdict.ok));
    }

    let verdict = check(&e, &specs, &opts).map_err(|e| e.to_string())?;
    println!(
        "{condition}: {} ({} nodes)",
        if verdict.ok { "yes" } else { "no" },
        verdict.nodes
    );
    if !verdict.appended.is_empty() {
        println!("appended responses to pending invocations:");
        for ev in &verdict.appended {
            println!("  {ev}");
        }
    }
    if args.witness {
        if let Some(w) = &verdict.witness {
            print!("{}", render_witness(w, n));
        }
    }
    if args.all && verdict.ok {
        eprintln!("note: --all is experimental; listing minimal witnesses");
        let all = enumerate_witnesses(&e, &specs, &opts, 16).map_err(|e| e.to_string())?;
        println!("{} minimal witness(es):", all.len());
        for (k, w) in all.iter().enumerate() {
            println!("witness {k}:");
            print!("{}", render_witness(w, n));
        }
    }
    Ok(u8::from(!verdict.ok))
}

fn cmd_simulate(args: SimulateArgs) -> Result<u8, String> {
    if args.algorithm != "write-snapshot" {
        return Err(format!(
            "unknown algorithm '{}'; only write-snapshot is available",
            args.algorithm
        ));
    }
    if args.n < 1 {
        return Err("need at least one process".into());
    }
    let traces: Vec<SimTrace> = if args.enumerate {
        if args.max_steps.is_none() && args.n > 2 {
            return Err(
                "exhaustive enumeration needs an explicit --max-steps when n > 2".into(),
            );
        }
        let bound = args
            .max_steps
            .unwrap_or(args.n as usize * max_steps_per_process(args.n));
        let schedules = enumerate_schedules(args.n, bound);
        eprintln!("{} schedule classes within {} steps", schedules.len(), bound);
        schedules
            .iter()
            .map(|s| run_write_snapshot(args.n, s).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?
    } else {
        fuzz_write_snapshot(args.n, args.seed, args.count)
    };

    let complete = traces
        .iter()
        .filter(|t| t.execution.pending_calls().is_empty())
        .count();
    println!(
        "simulated {} traces (n={}), {} complete, {} with pending invocations",
        traces.len(),
        args.n,
        complete,
        traces.len() - complete
    );

    if let Some(dir) = &args.emit {
        std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
        for (k, t) in traces.iter().enumerate() {
            let path = dir.join(format!("trace_{k:05}.hist"));
            std::fs::write(&path, t.execution.print())
                .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
        }
        println!("wrote {} history files to {}", traces.len(), dir.display());
    }

    if args.check {
        let spec = builtin_spec(&BuiltinObjectId::new("write_snapshot", args.n))
            .map_err(|e| e.to_string())?;
        let opts = CheckOptions::new(Condition::IntervalLinearizable).with_budget(budget());
        let parallel = args.jobs != Some(1);
        let run_batch = || -> Vec<bool> {
            map_items(&traces, parallel, |t| {
                if t.execution.is_empty() {
                    return true;
                }
                let specs = ilin::checker::bind_all(&t.execution, &spec);
                check(&t.execution, &specs, &opts).map(|v| v.ok).unwrap_or(false)
            })
        };
        let results = match args.jobs {
            Some(j) if j > 1 => rayon::ThreadPoolBuilder::new()
                .num_threads(j)
                .build()
                .map_err(|e| e.to_string())?
                .install(run_batch),
            _ => run_batch(),
        };
        let passed = results.iter().filter(|b| **b).count();
        println!(
            "interval-linearizability: {passed}/{} traces pass",
            results.len()
        );
        if passed != results.len() {
            return Ok(1);
        }
    }
    Ok(0)
}

// Reachable states and transitions of a generated spec, exploring up to
// `bound` transition depths from the initial states.
fn spec_summary(spec: &IntervalSpec, bound: usize) -> (usize, usize) {
    let mut seen: std::collections::BTreeSet<SpecState> = spec.initial_states.iter().cloned().collect();
    let mut frontier: Vec<SpecState> = spec.initial_states.clone();
    let mut transitions = 0usize;
    for _ in 0..bound {
        let mut next = Vec::new();
        for q in &frontier {
            let invocations = spec.invocations(q);
            let mut by_proc: BTreeMap<u32, Vec<ilin::histories::Event>> = BTreeMap::new();
            for inv in invocations {
                by_proc.entry(inv.process.0).or_default().push(inv);
            }
            let mut combos: Vec<Vec<ilin::histories::Event>> = vec![Vec::new()];
            for events in by_proc.values() {
                let mut grown = Vec::new();
                for combo in &combos {
                    grown.push(combo.clone());
                    for e in events {
                        let mut c = combo.clone();
                        c.push(e.clone());
                        grown.push(c);
                    }
                }
                combos = grown;
            }
            for combo in combos.into_iter().filter(|c| !c.is_empty()) {
                let class = ConcurrencyClass::invoking(combo).expect("distinct");
                if let Ok(outs) = spec.step(q, &class) {
                    for (_, q2) in outs {
                        transitions += 1;
                        if seen.insert(q2.clone()) {
                            next.push(q2);
                        }
                    }
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    (seen.len(), transitions)
}

fn cmd_convert(what: ConvertCmd) -> Result<u8, String> {
    match what {
        ConvertCmd::TaskToObject { task, bound } => {
            let t = load_task(&task)?;
            let spec = task_to_object(&t).map_err(|e| e.to_string())?;
            let (states, transitions) = spec_summary(&spec, bound);
            println!(
                "interval-sequential object '{}' over {} processes",
                spec.name, spec.processes
            );
            println!(
                "{states} states and {transitions} transitions reachable within {bound} transition steps"
            );
            Ok(0)
        }
        ConvertCmd::ObjectToTask { object, bound, output } => {
            let id = BuiltinObjectId::parse(&object).map_err(|e| e.to_string())?;
            let spec = builtin_spec(&id).map_err(|e| e.to_string())?;
            let task = object_to_refined_task(&spec, bound, budget()).map_err(|e| e.to_string())?;
            let mut text = format!(
                "# refined task derived from {object}; executions explored up to {bound} events\n"
            );
            text.push_str(&print_task(&task));
            match output {
                Some(path) => {
                    std::fs::write(&path, text)
                        .map_err(|e| format!("cannot write {}: {e}", path.display()))?;
                    println!("wrote {}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(0)
        }
        ConvertCmd::Split { task, bound } => {
            let t = load_task(&task)?;
            let spec = task_to_split_sequential(&t).map_err(|e| e.to_string())?;
            let (states, transitions) = spec_summary(&spec, bound);
            println!(
                "sequential object '{}' with operations set/get over {} processes",
                spec.name, spec.processes
            );
            println!(
                "{states} states and {transitions} transitions reachable within {bound} transition steps"
            );
            Ok(0)
        }
    }
}

fn cmd_validate(args: ValidateArgs) -> Result<u8, String> {
    let task = load_task(&args.task)?;
    let violations = task.validate();
    if violations.is_empty() {
        println!("task is valid ({} input facets)", task.inputs.facet_count());
    } else {
        println!("{} violations:", violations.len());
        for v in &violations {
            println!("  {v}");
        }
        return Ok(1);
    }
    if let Some(path) = &args.history {
        let e = load_history(path)?;
        let verdict = if args.refined || task.refined {
            task.satisfies_refined(&e).map_err(|e| e.to_string())?
        } else {
            task.satisfies(&e).map_err(|e| e.to_string())?
        };
        match verdict.violating_prefix {
            None => println!("history satisfies the task"),
            Some(k) => {
                println!("history violates the task; shortest violating prefix has {k} events");
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn cmd_demo(name: &str) -> Result<u8, String> {
    let Some(actual) = demos::report(name) else {
        return Err(format!(
            "unknown demo '{name}'; available: {}",
            demos::DEMO_NAMES.join(", ")
        ));
    };
    let expected = demos::golden(name).expect("every demo has a golden");
    print!("{actual}");
    if actual == expected {
        println!("-- matches the expected output");
        Ok(0)
    } else {
        eprintln!("demo '{name}' drifted from its golden output");
        for (k, (a, b)) in expected.lines().zip(actual.lines()).enumerate() {
            if a != b {
                eprintln!("line {}:\n  expected: {a}\n  actual:   {b}", k + 1);
            }
        }
        if expected.lines().count() != actual.lines().count() {
            eprintln!(
                "line counts differ: expected {}, actual {}",
                expected.lines().count(),
                actual.lines().count()
            );
        }
        Ok(1)
    }
}
