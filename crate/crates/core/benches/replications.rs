//! Sequential against rayon-parallel replication of the same scenario.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use iwcn_core::mac::WusMode;
use iwcn_core::sim::{run_with, Execution, PolicyKind, Scenario};

fn scenario(devices: usize) -> Scenario {
    Scenario {
        devices,
        policy: PolicyKind::Intelligent,
        wus_mode: WusMode::Group,
        horizon: 20_000,
        warmup: 1_000,
        replications: 8,
        ..Scenario::default()
    }
}

fn replications(c: &mut Criterion) {
    let mut group = c.benchmark_group("replications");
    group.sample_size(10);
    for devices in [25, 100] {
        let s = scenario(devices);
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, devices), &s, |b, s| {
                b.iter(|| run_with(s, exec).expect("valid scenario"))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, replications);
criterion_main!(benches);
