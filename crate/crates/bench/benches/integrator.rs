use criterion::{black_box, criterion_group, criterion_main, Criterion};

use mrimex::advdiff::{advective_rhs, make_system};
use mrimex::harness::{build_map, build_scheme, preset};
use mrimex::stepper::{step, StepperState};
use mrimex::{r_numeric, Complex64, SolverConfig, ZTriple};

fn bench_advective_rhs(c: &mut Criterion) {
    let cfg = preset("fig2c").unwrap();
    let grid = cfg.grid().unwrap();
    let omega = cfg.profile().unwrap().sample(&grid);
    let u = cfg.ic.evaluate(&grid);
    let mut out = vec![0.0; grid.cells()];
    c.bench_function("advective_rhs_m81", |b| {
        b.iter(|| {
            advective_rhs(black_box(&u), &grid, &omega, &mut out);
            black_box(&out);
        })
    });
}

fn bench_multirate_step(c: &mut Criterion) {
    let cfg = preset("fig2c").unwrap();
    let grid = cfg.grid().unwrap();
    let scheme = build_scheme(&cfg).unwrap();
    let map = build_map(&cfg).unwrap();
    let sys = make_system(&cfg).unwrap();
    let state = StepperState::new(0.0, cfg.ic.evaluate(&grid));
    let solver = SolverConfig::default();
    c.bench_function("multirate_astable_step_m81", |b| {
        b.iter(|| {
            let next = step(&scheme, &sys, &map, black_box(&state), cfg.dt, &solver).unwrap();
            black_box(next.y[0]);
        })
    });
}

fn bench_stability_eval(c: &mut Criterion) {
    let cfg = preset("fig2c").unwrap();
    let scheme = build_scheme(&cfg).unwrap();
    let z = ZTriple {
        fast: Complex64::new(-0.5, 0.3),
        slow: Complex64::new(-0.2, 0.0),
        stiff: Complex64::new(-10.0, 0.0),
    };
    c.bench_function("r_numeric_m2", |b| {
        b.iter(|| black_box(r_numeric(&scheme, black_box(z)).unwrap()))
    });
}

criterion_group!(
    benches,
    bench_advective_rhs,
    bench_multirate_step,
    bench_stability_eval
);
criterion_main!(benches);
