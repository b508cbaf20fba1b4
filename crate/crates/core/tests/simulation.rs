use std::sync::Arc;

use skewbm::measure::{validate_measure, Atom, CheckedMeasure, SignedMeasureSpec, Span};
use skewbm::par;
use skewbm::sim::{
    agree, drift_consistency_check, estimate_local_time, estimate_occupation, estimate_window_rate,
    natural_scale_around, simulate_grid_walk, simulate_paths, MeanSe, NaturalScaleTransform, SimConfig, SimError,
    Window,
};
use skewbm::structure::{
    construct_constants, density_to_effective_intervals, glue_effective_intervals, ConstantsTarget, RawDensity,
    RawPiece, SkewDensity, Structure,
};

fn atoms(list: &[(f64, f64)]) -> CheckedMeasure {
    validate_measure(SignedMeasureSpec {
        atoms: list.iter().map(|&(location, weight)| Atom { location, weight }).collect(),
        ..Default::default()
    })
    .unwrap()
}

fn transform(m: &CheckedMeasure, x0: f64, t: f64) -> NaturalScaleTransform {
    let s = Arc::new(Structure::new(m).unwrap());
    let c = construct_constants(&s, ConstantsTarget::AnyValid).unwrap();
    let es = glue_effective_intervals(Arc::new(SkewDensity::new(s, c).unwrap()));
    natural_scale_around(&es, x0, t).unwrap()
}

const POSITIVE: Span = Span { lo: 0.0, hi: f64::INFINITY, lo_closed: false, hi_closed: false };

#[test]
fn brownian_terminal_variance() {
    let t = transform(&atoms(&[]), 0.0, 1.0);
    let e = simulate_paths(&t, &SimConfig::new(0.0, 1.0, 4000, 2).with_step(1e-3)).unwrap();
    let sq = MeanSe::of(e.terminals().map(|x| x * x));
    assert!((sq.mean - 1.0).abs() <= 3.0 * sq.stderr, "{sq:?}");
    let occ = estimate_occupation(&e, &POSITIVE, 1.0).unwrap();
    assert!((occ.estimate - 0.5).abs() <= 3.0 * occ.stderr, "{occ:?}");
}

#[test]
fn martingale_mean_across_seeds() {
    let t = transform(&atoms(&[]), 0.0, 1.0);
    for seed in 0..10 {
        let e = simulate_paths(&t, &SimConfig::new(0.0, 1.0, 400, seed).with_step(1e-3)).unwrap();
        let m = MeanSe::of(e.terminals());
        assert!(m.mean.abs() <= 4.0 * m.stderr, "seed {seed}: {m:?}");
    }
}

#[test]
fn runs_are_reproducible() {
    let t = transform(&atoms(&[(0.0, 0.3)]), 0.0, 0.5);
    let cfg = SimConfig::new(0.0, 0.5, 64, 99).with_step(1e-3).with_windows([Window::around(0.0, 0.1)]);
    let a = simulate_paths(&t, &cfg).unwrap();
    let b = par::with_threads(1, || simulate_paths(&t, &cfg).unwrap());
    let c = par::with_threads(3, || simulate_paths(&t, &cfg).unwrap());
    for i in 0..64 {
        assert_eq!(a.path(i), b.path(i));
        assert_eq!(a.path(i), c.path(i));
        assert_eq!(a.martingale(i).to_bits(), c.martingale(i).to_bits());
    }
    let other = simulate_paths(&t, &SimConfig { seed: 100, ..cfg }).unwrap();
    assert_ne!(a.path(0), other.path(0));
}

#[test]
fn skew_occupation_matches_walk() {
    for alpha in [0.25, 0.75] {
        let m = atoms(&[(0.0, 2.0 * alpha - 1.0)]);
        let cfg = SimConfig::new(0.0, 1.0, 6000, 5);
        let euler = simulate_paths(&transform(&m, 0.0, 1.0), &cfg.clone().with_step(4e-4)).unwrap();
        let walk = simulate_grid_walk(&m, &cfg.with_step(0.02)).unwrap();
        let a = estimate_occupation(&euler, &POSITIVE, 1.0).unwrap();
        // the walk can sit on 0; count half of it on each side
        let b_pos = estimate_occupation(&walk, &POSITIVE, 1.0).unwrap();
        let b_zero = estimate_occupation(&walk, &Span::closed(0.0, 0.0), 1.0).unwrap();
        let b = MeanSe { mean: b_pos.estimate + 0.5 * b_zero.estimate, stderr: b_pos.stderr };
        assert!(agree(a.into(), b, 3.0), "alpha {alpha}: {a:?} {b:?}");
        assert!((a.estimate - alpha).abs() <= 3.0 * a.stderr, "alpha {alpha}: {a:?}");
    }
}

#[test]
fn two_atoms_cross_scheme() {
    let m = atoms(&[(0.0, 0.5), (1.0, -0.5)]);
    let cfg = SimConfig::new(0.0, 1.0, 6000, 8);
    let euler = simulate_paths(&transform(&m, 0.0, 1.0), &cfg.clone().with_step(4e-4)).unwrap();
    let walk = simulate_grid_walk(&m, &cfg.with_step(0.02)).unwrap();
    for set in [Span::open(0.0, 1.0), Span::open(1.0, f64::INFINITY), Span::open(f64::NEG_INFINITY, 0.0)] {
        let a = estimate_occupation(&euler, &set, 1.0).unwrap();
        let b = estimate_occupation(&walk, &set, 1.0).unwrap();
        // walk mass sitting on the atoms is excluded from open sets, allow for it
        let on_atoms = [0.0, 1.0]
            .iter()
            .map(|&z| estimate_occupation(&walk, &Span::closed(z, z), 1.0).unwrap().estimate)
            .sum::<f64>();
        let diff = (a.estimate - b.estimate).abs();
        assert!(diff <= 3.0 * a.stderr.hypot(b.stderr) + on_atoms, "{set:?}: {a:?} {b:?}");
    }
}

#[test]
fn skew_local_time_cross_scheme_and_ratio() {
    let alpha = 0.75;
    let m = atoms(&[(0.0, 2.0 * alpha - 1.0)]);
    let windows =
        [Window::around(0.0, 0.1), Window::around(0.0, 0.2), Window::right_of(0.0, 0.2), Window::left_of(0.0, 0.2)];
    let cfg = SimConfig::new(0.0, 1.0, 6000, 13).with_windows(windows);
    let euler = simulate_paths(&transform(&m, 0.0, 1.0), &cfg.clone().with_step(4e-4)).unwrap();
    let walk = simulate_grid_walk(&m, &cfg.with_step(0.02)).unwrap();
    let a = estimate_local_time(&euler, 0.0, 0.1, 1.0).unwrap();
    let b = estimate_local_time(&walk, 0.0, 0.1, 1.0).unwrap();
    assert!(agree(a.best(), b.best(), 3.0), "{:?} {:?}", a.best(), b.best());
    assert!(a.per_path.iter().all(|x| *x >= 0.0));
    // E L⁰₁ = E X₁ / β with E X₁ = (2α − 1)·E|B₁|
    assert!((b.best().mean - 0.7979).abs() <= 3.0 * b.best().stderr + 0.01, "{:?}", b.best());

    let r = estimate_window_rate(&euler, Window::right_of(0.0, 0.2), 1.0).unwrap();
    let l = estimate_window_rate(&euler, Window::left_of(0.0, 0.2), 1.0).unwrap();
    let ratio = r.mean / l.mean;
    let se = ratio * ((r.stderr / r.mean).powi(2) + (l.stderr / l.mean).powi(2)).sqrt();
    let want = alpha / (1.0 - alpha);
    assert!((ratio - want).abs() <= 3.0 * se, "ratio {ratio} ± {se}");
}

#[test]
fn halving_the_step_is_stable() {
    let m = atoms(&[(0.0, 0.4)]);
    let t = transform(&m, 0.0, 1.0);
    let cfg = SimConfig::new(0.0, 1.0, 5000, 21);
    let coarse = simulate_paths(&t, &cfg.clone().with_step(8e-4)).unwrap();
    let fine = simulate_paths(&t, &cfg.with_step(4e-4)).unwrap();
    let a = estimate_occupation(&coarse, &POSITIVE, 1.0).unwrap();
    let b = estimate_occupation(&fine, &POSITIVE, 1.0).unwrap();
    assert!(agree(a.into(), b.into(), 3.0), "{a:?} {b:?}");
}

#[test]
fn drift_identity_on_the_walk() {
    let m = atoms(&[(0.0, 0.5)]);
    let cfg = SimConfig::new(0.0, 1.0, 5000, 4)
        .with_step(0.02)
        .with_windows([Window::around(0.0, 0.1), Window::around(0.0, 0.2)]);
    let walk = simulate_grid_walk(&m, &cfg).unwrap();
    let r = drift_consistency_check(&walk, &m).unwrap();
    assert!(r.consistent, "{r:?}");
    let lt = estimate_local_time(&walk, 0.0, 0.1, 1.0).unwrap().best();
    assert!(agree(r.residual, MeanSe { mean: 0.5 * lt.mean, stderr: 0.5 * lt.stderr }, 3.0));

    let flat = atoms(&[]);
    let bm = simulate_grid_walk(&flat, &SimConfig::new(0.0, 1.0, 500, 4).with_step(0.05)).unwrap();
    let r = drift_consistency_check(&bm, &flat).unwrap();
    assert!(r.residual.mean.abs() < 1e-12 && r.consistent);
}

#[test]
fn reflection_keeps_paths_inside() {
    // ρ = 0 on (−∞, 0], ρ = 1 beyond: reflected Brownian motion on [0, ∞)
    let raw = RawDensity::new(
        vec![RawPiece::constant(f64::NEG_INFINITY, 0.0, 0.0), RawPiece::constant(0.0, f64::INFINITY, 1.0)],
        vec![],
        vec![],
    )
    .unwrap();
    let es = density_to_effective_intervals(&raw);
    let t = natural_scale_around(&es, 0.0, 1.0).unwrap();
    assert_eq!(t.reflecting(), (true, false));
    let e = simulate_paths(&t, &SimConfig::new(0.0, 1.0, 3000, 6).with_step(1e-3)).unwrap();
    assert!((0..e.n_paths()).all(|i| e.path(i).iter().all(|x| *x >= 0.0)));
    let m = MeanSe::of(e.terminals());
    assert!((m.mean - 0.7979).abs() <= 3.0 * m.stderr + 0.01, "{m:?}");
    assert_eq!(e.clamped, 0);
}

#[test]
fn coarse_steps_on_short_intervals_are_rejected() {
    // ρ = 1 on (0, 1), 0 elsewhere: natural-scale diameter 1
    let raw = RawDensity::new(
        vec![
            RawPiece::constant(f64::NEG_INFINITY, 0.0, 0.0),
            RawPiece::constant(0.0, 1.0, 1.0),
            RawPiece::constant(1.0, f64::INFINITY, 0.0),
        ],
        vec![],
        vec![],
    )
    .unwrap();
    let es = density_to_effective_intervals(&raw);
    let t = natural_scale_around(&es, 0.5, 1.0).unwrap();
    let err = simulate_paths(&t, &SimConfig::new(0.5, 1.0, 10, 1).with_step(2e-4)).unwrap_err();
    assert!(matches!(err, SimError::StepTooCoarse { .. }));
    let e = simulate_paths(&t, &SimConfig::new(0.5, 1.0, 200, 1).with_step(1e-4)).unwrap();
    assert!((0..200).all(|i| e.path(i).iter().all(|x| (0.0..=1.0).contains(x))));
}

#[test]
fn path_export_has_one_row_per_saved_point() {
    let m = atoms(&[(0.0, 0.5)]);
    let e = simulate_grid_walk(&m, &SimConfig::new(0.0, 0.04, 3, 1).with_step(0.05).with_saves(4)).unwrap();
    let mut buf = Vec::new();
    e.write_paths(&mut buf, ',', None).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "path_id,t,x");
    assert_eq!(lines.len(), 1 + 3 * e.times.len());
}
