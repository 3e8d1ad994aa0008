//! Batch checking throughput, sequential vs rayon fan-out. Each check is
//! internally sequential; the parallelism is across independent histories,
//! which is the shape of the simulator sweeps and the exhaustive oracles.
//!
//! Built without the `parallel` feature, the "parallel" variants fall
//! back to the sequential path and the two series coincide.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use ilin::batch::check_many;
use ilin::checker::{bind_all, CheckOptions, Condition};
use ilin::histories::Execution;
use ilin::objects::{builtin_spec, BuiltinObjectId};
use ilin::sim::fuzz_write_snapshot;

fn bench_batch_check(c: &mut Criterion) {
    let spec = builtin_spec(&BuiltinObjectId::new("write_snapshot", 3)).unwrap();
    let executions: Vec<Execution> = fuzz_write_snapshot(3, 1234, 64)
        .into_iter()
        .map(|t| t.execution)
        .collect();
    let specs = bind_all(&executions[0], &spec);
    let opts = CheckOptions::new(Condition::IntervalLinearizable);

    let mut group = c.benchmark_group("check_64_snapshot_traces");
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(check_many(&executions, &specs, &opts, false)))
    });
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(check_many(&executions, &specs, &opts, true)))
    });
    group.finish();
}

fn bench_simulate_and_check(c: &mut Criterion) {
    let spec = builtin_spec(&BuiltinObjectId::new("write_snapshot", 4)).unwrap();
    let opts = CheckOptions::new(Condition::IntervalLinearizable);

    let mut group = c.benchmark_group("simulate_and_check_n4");
    group.sample_size(20);
    for parallel in [false, true] {
        let name = if parallel { "parallel" } else { "sequential" };
        group.bench_function(name, |b| {
            b.iter(|| {
                let executions: Vec<Execution> = fuzz_write_snapshot(4, 99, 32)
                    .into_iter()
                    .map(|t| t.execution)
                    .collect();
                let specs = bind_all(&executions[0], &spec);
                black_box(check_many(&executions, &specs, &opts, parallel))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batch_check, bench_simulate_and_check);
criterion_main!(benches);
