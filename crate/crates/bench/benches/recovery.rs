use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pursuitlab::{make_instance, recover, Algorithm, SignalKind, StoppingRule, TraceLevel};
use std::hint::black_box;

fn recovery(c: &mut Criterion) {
    let mut group = c.benchmark_group("recover");
    for &(m, n, s) in &[(32, 64, 4), (64, 256, 8), (128, 512, 16)] {
        let inst = make_instance(SignalKind::ExactSparse, m, n, s, 0.0, 1).unwrap();
        for alg in [Algorithm::Sp, Algorithm::Cosamp] {
            group.bench_with_input(
                BenchmarkId::new(alg.name(), format!("{m}x{n}/s{s}")),
                &inst,
                |b, inst| {
                    b.iter(|| {
                        recover(
                            alg,
                            &inst.phi,
                            black_box(&inst.y),
                            s,
                            &StoppingRule::default(),
                            TraceLevel::Norms,
                            None,
                        )
                        .unwrap()
                    })
                },
            );
        }
    }
    group.finish();
}

criterion_group!(benches, recovery);
criterion_main!(benches);
