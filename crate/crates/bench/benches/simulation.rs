//! Benchmarks for the hot simulation stages: coupling-matrix construction,
//! a full uplink drop, and a full downlink geometry drop.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use uavsim_bench::{bench_config, bench_snapshot};
use uavsim_core::association::associate;
use uavsim_core::deployment::build_network;
use uavsim_core::dl_engine::geometry_sinr;
use uavsim_core::propagation::build_coupling_matrix;
use uavsim_core::ul_engine::run_ul_drop;

fn coupling_matrix(c: &mut Criterion) {
    let cfg = bench_config();
    let (layout, pop) = bench_snapshot(&cfg);
    c.bench_function("coupling_matrix_57cells_855ues", |b| {
        b.iter(|| {
            black_box(build_coupling_matrix(
                &layout,
                &pop,
                &cfg.antenna,
                cfg.propagation_params(),
                black_box(7),
            ))
        })
    });
}

fn ul_drop(c: &mut Criterion) {
    let cfg = bench_config();
    let layout = build_network(&cfg).unwrap();
    c.bench_function("ul_drop_open_loop", |b| {
        b.iter(|| black_box(run_ul_drop(&layout, &cfg, &cfg.power_control, black_box(0))))
    });
}

fn dl_geometry(c: &mut Criterion) {
    let cfg = bench_config();
    let (layout, pop) = bench_snapshot(&cfg);
    let matrix = build_coupling_matrix(&layout, &pop, &cfg.antenna, cfg.propagation_params(), 7);
    let assignments = associate(&matrix, &layout);
    let classes: Vec<_> = pop.ues.iter().map(|u| u.class).collect();
    c.bench_function("dl_geometry_sinr", |b| {
        b.iter(|| {
            black_box(geometry_sinr(
                &matrix,
                &assignments,
                &classes,
                layout.tx_power_dbm,
                cfg.dl_noise_dbm(),
            ))
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = coupling_matrix, ul_drop, dl_geometry
}
criterion_main!(benches);
