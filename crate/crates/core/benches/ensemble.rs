//! Path ensembles on one thread against the default rayon pool.

use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use skewbm::measure::{validate_measure, Atom, SignedMeasureSpec};
use skewbm::par;
use skewbm::sim::{natural_scale_around, simulate_grid_walk, simulate_paths, SimConfig, Window};
use skewbm::structure::{construct_constants, glue_effective_intervals, ConstantsTarget, SkewDensity, Structure};

fn ensembles(c: &mut Criterion) {
    let m =
        validate_measure(SignedMeasureSpec { atoms: vec![Atom { location: 0.0, weight: 0.5 }], ..Default::default() })
            .unwrap();
    let s = Arc::new(Structure::new(&m).unwrap());
    let k = construct_constants(&s, ConstantsTarget::AnyValid).unwrap();
    let t =
        natural_scale_around(&glue_effective_intervals(Arc::new(SkewDensity::new(s, k).unwrap())), 0.0, 1.0).unwrap();
    let cfg = SimConfig::new(0.0, 1.0, 2000, 1).with_windows([Window::around(0.0, 0.1)]);
    let euler = cfg.clone().with_step(1e-3);
    let walk = cfg.with_step(0.02);

    let mut g = c.benchmark_group("ensemble");
    g.sample_size(10);
    let threads = [("sequential", Some(1)), ("parallel", None)];
    for (name, n) in threads {
        let run = |f: &(dyn Fn() + Sync)| match n {
            Some(n) => par::with_threads(n, f),
            None => f(),
        };
        g.bench_function(BenchmarkId::new("euler", name), |b| {
            b.iter(|| run(&|| drop(simulate_paths(&t, &euler).unwrap())))
        });
        g.bench_function(BenchmarkId::new("walk", name), |b| {
            b.iter(|| run(&|| drop(simulate_grid_walk(&m, &walk).unwrap())))
        });
    }
    g.finish();
}

criterion_group!(benches, ensembles);
criterion_main!(benches);
