use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use relaysim::search::{estimate_drift_nodba, estimate_drift_odba};
use relaysim::{simulate, Execution, Protocol, ScenarioConfig, ScenarioDb, SimOptions};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn small_cell() -> ScenarioConfig {
    ScenarioConfig::from_db(&ScenarioDb::two_ue(20.0, 20.0, 46.0, [-6.0, -8.0, -40.0, -41.0, 0.0])).unwrap()
}

fn drift_batches(c: &mut Criterion) {
    let cfg = small_cell();
    let mut g = c.benchmark_group("drift_batch_10k");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("odba", name), &exec, |b, &e| {
            b.iter(|| estimate_drift_odba(&cfg, black_box(-0.58), black_box(-0.79), 10_000, 1, 0, e))
        });
        g.bench_with_input(BenchmarkId::new("nodba", name), &exec, |b, &e| {
            b.iter(|| estimate_drift_nodba(&cfg, black_box(-0.39), black_box(-0.24), 10_000, 1, 0, e).unwrap())
        });
    }
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let mut cfg = small_cell();
    cfg.frames = 10_000;
    let opts = SimOptions::default();
    let mut g = c.benchmark_group("simulate_10k");
    for p in Protocol::ALL {
        g.bench_function(p.name(), |b| b.iter(|| simulate(&cfg, p, black_box([-0.5, -0.5]), &opts).unwrap()));
    }
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = drift_batches, simulation
}
criterion_main!(benches);
