use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use sdebound_bench::{path, setup};
use sdebound_core::brownian::{uniform_grid, ExactEvaluator};
use sdebound_core::harness::experiment::master_path;
use sdebound_core::rng::{stream, Lane};
use sdebound_core::schemes::run_scheme_with;

fn psi(c: &mut Criterion) {
    let s = setup();
    let spec = s.glued().unwrap().clone();
    let ys: Vec<f64> = spec.plateaus().windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    c.bench_function("psi_eval", |b| b.iter(|| black_box(spec.eval(black_box(0.41)))));
    c.bench_function("psi_inv_between_knots", |b| {
        b.iter(|| ys.iter().map(|&y| spec.inv(y).unwrap()).sum::<f64>())
    });
}

fn paths(c: &mut Criterion) {
    let s = setup();
    let grid = uniform_grid(s.cs.t_end(), 1 << 16);
    c.bench_function("master_path_2^16", |b| {
        b.iter(|| master_path(1, black_box(&grid), 0).unwrap())
    });
    let oracle = ExactEvaluator::new(&s.cs, &grid).unwrap();
    let p = path(&s, 16);
    c.bench_function("exact_solution_2^16", |b| {
        b.iter(|| oracle.solve(&s.psi, black_box(&p)))
    });
}

fn schemes(c: &mut Criterion) {
    let s = setup();
    let p = path(&s, 16);
    let n = s.n0.unwrap();
    let delta = s.delta_for(n).unwrap();
    let settings = s.settings(delta);
    for sc in &s.config.schemes {
        let scheme = s.build_scheme(sc, n, delta).unwrap();
        c.bench_function(&format!("run_{}", sc.label()), |b| {
            b.iter(|| {
                let refine = stream(1, Lane::Refinement, &[], 0);
                let mut inner = stream(1, Lane::InnerMonteCarlo, &[], 0);
                run_scheme_with(scheme.as_ref(), &settings, &p, refine, &mut inner).unwrap()
            })
        });
    }
}

criterion_group! {
    name = kernels;
    config = Criterion::default().sample_size(20);
    targets = psi, paths, schemes
}
criterion_main!(kernels);
