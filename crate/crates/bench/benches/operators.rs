use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ncbe_bench::{assemble, fixture};
use ncbe_core::cases::CaseId;
use ncbe_core::stepper::{bdf2_step, be_step, SolverState, StepperConfig};

fn bench_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble");
    group.sample_size(10);
    for (id, n) in [(CaseId::M1, 320), (CaseId::M4, 160), (CaseId::M5, 40), (CaseId::M6, 10)] {
        group.bench_with_input(BenchmarkId::new(id.as_str(), n), &n, |b, &n| {
            b.iter(|| assemble(id, black_box(n), 1).unwrap())
        });
    }
    group.finish();
}

fn bench_residual(c: &mut Criterion) {
    let mut group = c.benchmark_group("residual");
    for (id, n) in [(CaseId::M1, 320), (CaseId::M5, 80), (CaseId::M6, 20)] {
        let (ops, alpha) = fixture(id, n, 1).unwrap();
        group.bench_function(BenchmarkId::new(id.as_str(), n), |b| {
            b.iter(|| ops.nonlinear_residual(black_box(&alpha)))
        });
        let lin = ops.linearize(&alpha);
        group.bench_function(BenchmarkId::new(format!("{}_jacobian_apply", id.as_str()), n), |b| {
            b.iter(|| ops.jacobian_apply(&lin, black_box(&alpha)))
        });
    }
    group.finish();
}

fn bench_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("step");
    group.sample_size(10);
    for (id, n) in [(CaseId::M1, 320), (CaseId::M5, 40)] {
        let (ops, alpha) = fixture(id, n, 1).unwrap();
        let cfg = StepperConfig { tau: 1e-3, t_final: 1.0, ..Default::default() };
        let mut warm = SolverState::new(alpha.clone());
        be_step(&mut warm, &ops, &cfg).unwrap();
        group.bench_function(BenchmarkId::new(id.as_str(), n), |b| {
            b.iter(|| {
                let mut state = warm.clone();
                bdf2_step(&mut state, &ops, &cfg).unwrap();
                state
            })
        });
    }
    group.finish();
}

criterion_group!(benches, bench_assembly, bench_residual, bench_step);
criterion_main!(benches);
