//! Per-run cost of the interpreted loop against the hand-coded one, with
//! zero-cost mocks so only the execution machinery is measured.

use criterion::{criterion_group, criterion_main, Criterion};
use megaloop::bench::{interpreter_engine, mocks, Baseline, OpLog};
use megaloop::runtime::VirtualClock;
use std::sync::{Arc, Mutex};

fn per_run(c: &mut Criterion) {
    let log: OpLog = Arc::new(Mutex::new(Vec::new()));
    let mut engine = interpreter_engine(Arc::new(VirtualClock::new()), 0, 960, &log).expect("bench engine");
    let mut baseline = Baseline::new(mocks(0.0, &log));
    let mut group = c.benchmark_group("self-repair run");
    group.bench_function("interpreter", |b| {
        b.iter(|| {
            engine.execute_run("selfRepair", "Monitor").expect("run");
            log.lock().unwrap().clear();
        })
    });
    group.bench_function("baseline", |b| {
        b.iter(|| {
            baseline.run_once();
            log.lock().unwrap().clear();
        })
    });
    group.finish();
}

criterion_group!(benches, per_run);
criterion_main!(benches);
