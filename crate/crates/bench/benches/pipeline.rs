use std::hint::black_box;

use cohengine_core::sweepopt::{GapRange, DEFAULT_REL_TOL};
use cohengine_core::{
    build_dynamical_matrix, evaluate_point, optimize_gap, solve_steady_state, sweep, CAxis, GapTemplate,
    MachineConfig, OptimizationTarget, SweepGrid, TapeQubitState,
};
use criterion::{criterion_group, criterion_main, Criterion};
use num_complex::Complex64;

fn fig3() -> MachineConfig {
    MachineConfig::new(1.0, 0.5, 1.2, 0.06, 0.0025, 2.0, 0.02).unwrap()
}

fn tape() -> TapeQubitState {
    TapeQubitState::new(0.4, Complex64::new(0.3, 0.1)).unwrap()
}

fn single_point(c: &mut Criterion) {
    let cfg = fig3();
    let t = tape();
    c.bench_function("steady_state", |b| {
        b.iter(|| solve_steady_state(&build_dynamical_matrix(black_box(&cfg), black_box(&t))).unwrap())
    });
    c.bench_function("evaluate_point", |b| b.iter(|| evaluate_point(black_box(&cfg), black_box(&t)).unwrap()));
}

fn optimizer(c: &mut Criterion) {
    let tpl = GapTemplate {
        e_q: 1.0,
        beta_c: 1.0,
        beta_h: 0.05,
        gamma0: 0.0025,
        r: 2.0,
        phi: 0.02,
    };
    let t = TapeQubitState::new(0.3, Complex64::new(0.35, 0.0)).unwrap();
    c.bench_function("optimize_gap_free_energy", |b| {
        b.iter(|| {
            optimize_gap(&tpl, black_box(&t), OptimizationTarget::FreeEnergy, GapRange::standard(1.0), DEFAULT_REL_TOL)
                .unwrap()
        })
    });
}

fn grid(c: &mut Criterion) {
    let cfg = fig3();
    let g = SweepGrid::new((1e-3, 1.0 - 1e-3), 21, CAxis::SignedDiameter, 21).unwrap();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(20);
    group.bench_function("fig3_21x21", |b| b.iter(|| sweep(black_box(&cfg), &g, None)));
    group.finish();
}

criterion_group!(benches, single_point, optimizer, grid);
criterion_main!(benches);
