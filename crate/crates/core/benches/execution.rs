use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use shallow_core::circuit::random_brickwork;
use shallow_core::learning::{batch_learn, OracleChannel, TomographySettings};
use shallow_core::par::Execution;
use shallow_core::protocol::{distinguish, Ensemble, Partition, ProtocolConfig, ProtocolSetup, ReadoutMode};
use shallow_core::seed::rng_from_seed;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn protocol(c: &mut Criterion) {
    let mut group = c.benchmark_group("distinguish");
    group.sample_size(10);
    for (name, execution) in MODES {
        let cfg = ProtocolConfig {
            partition: Partition::standard(12).unwrap(),
            p: 2,
            q: 3,
            delta: 0.01,
            repetitions: Some(64),
            mode: ReadoutMode::Exact,
            seed: 1,
            execution,
        };
        let setup = ProtocolSetup::number(cfg).unwrap();
        for ens in [Ensemble::ShallowBrickwork { depth: 1 }, Ensemble::GlobalSymmetric] {
            let label = match ens {
                Ensemble::ShallowBrickwork { .. } => "shallow",
                Ensemble::GlobalSymmetric => "global",
            };
            group.bench_with_input(BenchmarkId::new(name, label), &ens, |b, ens| {
                b.iter(|| black_box(distinguish(&setup, ens).unwrap().mean))
            });
        }
    }
    group.finish();
}

fn learning(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch_learn");
    group.sample_size(10);
    let circuit = random_brickwork(8, 2, 2, false, &mut rng_from_seed(3)).unwrap();
    let oracle = OracleChannel::new(circuit, false);
    for (name, execution) in MODES {
        let settings = TomographySettings { execution, ..TomographySettings::exact() };
        group.bench_function(name, |b| b.iter(|| black_box(batch_learn(&oracle, &settings).unwrap().queries)));
    }
    group.finish();
}

criterion_group!(benches, protocol, learning);
criterion_main!(benches);
