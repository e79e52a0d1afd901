use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use sipp::conic::{ConicBackend, InteriorPoint, IpmOptions};
use sipp::exchange::{master_program, solve_inner, ExchangeOptions};
use sipp::io::{corpus, generate_random_instance, IndexSetKind, RandomInstanceSpec};
use sipp::moment::{build_moment_sdp, RelaxationOptions};
use sipp::par;

fn ipm(parallel: bool) -> InteriorPoint {
    InteriorPoint::new(IpmOptions { parallel, ..IpmOptions::default() })
}

/// One relaxation solve, Schur complement assembled on the pool or on one thread.
fn schur_assembly(c: &mut Criterion) {
    let a3 = corpus::load("a3").unwrap();
    let mut group = c.benchmark_group("ipm_solve");
    group.sample_size(10);
    for order in [3usize, 4] {
        let prog = master_program(&a3.problem, &[vec![0.5], vec![1.5]]).unwrap().unwrap();
        let sdp = build_moment_sdp(&prog, order, &RelaxationOptions::default()).unwrap();
        for parallel in [true, false] {
            let backend = ipm(parallel);
            let label = if parallel { "rayon" } else { "sequential" };
            group.bench_with_input(BenchmarkId::new(label, format!("a3_master_k{order}")), &sdp, |b, sdp| {
                b.iter(|| black_box(backend.solve(&sdp.conic).unwrap()))
            });
        }
    }
    group.finish();
}

/// Inner problems of one exchange iteration, solved as a batch.
fn inner_batch(c: &mut Criterion) {
    let inst = generate_random_instance(&RandomInstanceSpec {
        n: 2,
        p: 2,
        d1: 1,
        d2: 1,
        index_set: IndexSetKind::Ball,
        seed: 3,
    })
    .unwrap();
    let problem = inst.problem;
    let opts = ExchangeOptions::default();
    let xs: Vec<Vec<f64>> = (0..8)
        .map(|i| {
            let t = i as f64 * std::f64::consts::TAU / 8.0;
            vec![0.5 * t.cos(), 0.5 * t.sin()]
        })
        .collect();
    // one thread per solve, so the comparison is between the batch maps
    let backend = ipm(false);
    let mut group = c.benchmark_group("inner_batch");
    group.sample_size(10);
    group.bench_function("rayon", |b| {
        b.iter(|| black_box(par::map_slice(&xs, |x| solve_inner(&problem, x, &opts, &backend).unwrap())))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(par::seq::map_slice(&xs, |x| solve_inner(&problem, x, &opts, &backend).unwrap())))
    });
    group.finish();
}

criterion_group!(benches, schur_assembly, inner_batch);
criterion_main!(benches);
