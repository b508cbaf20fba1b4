//! Shared measures and random-spec strategies for the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use proptest::prelude::*;
use proptest::strategy::ValueTree;
use proptest::test_runner::TestRunner;

use skewbm::measure::{
    validate_measure, Atom, AtomRule, CheckedMeasure, DensityPiece, LocationLaw, Shape, SignedMeasureSpec,
    TailCertificate, Variant, WeightLaw,
};
use skewbm::profile::{build_profile, Side};
use skewbm::report::{analyze, effective_rows};
use skewbm::structure::{
    check_conservative, construct_constants, glue_effective_intervals, measure_density_roundtrip,
    semimartingale_verdict, ConstantsTarget, SkewDensity, Structure,
};

pub fn measure(spec: SignedMeasureSpec) -> CheckedMeasure {
    validate_measure(spec).expect("valid measure")
}

/// `(2α − 1)δ₀`.
pub fn skew(alpha: f64) -> CheckedMeasure {
    measure(SignedMeasureSpec { atoms: vec![Atom { location: 0.0, weight: 2.0 * alpha - 1.0 }], ..Default::default() })
}

pub fn unit_atom() -> CheckedMeasure {
    measure(SignedMeasureSpec { atoms: vec![Atom { location: 0.0, weight: 1.0 }], ..Default::default() })
}

fn power_piece(lo: f64, hi: f64, coefficient: f64, center: f64) -> DensityPiece {
    DensityPiece { lo, hi, coefficient, shape: Shape::Power { center, exponent: -1.0 } }
}

/// Unit atom at 0 with density `−(α/2)|z|⁻¹` on the negative half-line, so
/// that ϱ = |z|^α left of the barrier.
pub fn power_barrier(alpha: f64) -> CheckedMeasure {
    measure(SignedMeasureSpec {
        atoms: vec![Atom { location: 0.0, weight: 1.0 }],
        pieces: vec![power_piece(f64::NEG_INFINITY, 0.0, -0.5 * alpha, 0.0)],
        ..Default::default()
    })
}

fn reciprocal_rule(name: &str, shift: f64, weight: WeightLaw) -> AtomRule {
    AtomRule {
        name: name.into(),
        location: LocationLaw::Reciprocal { anchor: 0.0, scale: -0.5, shift },
        weight,
        start: 1,
        end: None,
        tail: TailCertificate::Divergent,
        accumulation: Some(0.0),
    }
}

/// Unit atom at 0 with atoms `±k/(k+2)` alternating at `−1/2k`, `−1/(2k+1)`.
pub fn oscillating_barrier() -> CheckedMeasure {
    let w = |sign| WeightLaw::Ratio { sign, num_shift: 0.0, den_shift: 2.0 };
    measure(SignedMeasureSpec {
        atoms: vec![Atom { location: 0.0, weight: 1.0 }],
        rules: vec![reciprocal_rule("plus", 0.0, w(1.0)), reciprocal_rule("minus", 0.5, w(-1.0))],
        ..Default::default()
    })
}

/// Unit atom at 0 with atoms at `−1/2k` and `−1/(2k+1)` multiplying ϱ by
/// `((k+1)/k)^α` and `(k/(k+1))^{2α}`.
pub fn jump_power_barrier(alpha: f64) -> CheckedMeasure {
    let w = |sign, gamma| WeightLaw::JumpPower { sign, u: 1.0, v: 0.0, gamma };
    measure(SignedMeasureSpec {
        atoms: vec![Atom { location: 0.0, weight: 1.0 }],
        rules: vec![reciprocal_rule("up", 0.0, w(1.0, alpha)), reciprocal_rule("down", 0.5, w(-1.0, 2.0 * alpha))],
        ..Default::default()
    })
}

/// A real barrier at each end of `(0, 1)`.
pub fn facing_barriers() -> CheckedMeasure {
    measure(SignedMeasureSpec {
        atoms: vec![Atom { location: 0.0, weight: 1.0 }, Atom { location: 1.0, weight: -1.0 }],
        pieces: vec![power_piece(-1.0, 0.0, -1.0, 0.0), power_piece(1.0, 2.0, 1.0, 1.0)],
        ..Default::default()
    })
}

/// ϱ = e^{x³} on `(0, ∞)`.
pub fn cubic_growth() -> CheckedMeasure {
    measure(SignedMeasureSpec {
        pieces: vec![DensityPiece {
            lo: 0.0,
            hi: f64::INFINITY,
            coefficient: 1.5,
            shape: Shape::Power { center: 0.0, exponent: 2.0 },
        }],
        ..Default::default()
    })
}

// ---------------------------------------------------------------------------
// random specs

pub const ATOM_MASS_CAP: f64 = 4.99;

/// Up to 50 atoms on a 1/64 lattice in `(−10, 10)` with `|μ_y| ≤ 0.9` and
/// `Σ|μ_y| < 5`.
pub fn atoms_strategy() -> impl Strategy<Value = Vec<Atom>> {
    prop::collection::btree_map(-640i32..640, -0.9f64..=0.9, 0..=50).prop_map(|m| {
        let total: f64 = m.values().map(|w| w.abs()).sum();
        let scale = if total > ATOM_MASS_CAP { ATOM_MASS_CAP / total } else { 1.0 };
        m.into_iter()
            .filter(|(_, w)| *w != 0.0)
            .map(|(k, w)| Atom { location: k as f64 / 64.0, weight: w * scale })
            .collect()
    })
}

/// Up to three disjoint bounded pieces, constant or exponential.
pub fn pieces_strategy() -> impl Strategy<Value = Vec<DensityPiece>> {
    let piece = (-0.5f64..0.5, prop::option::of(-0.3f64..0.3));
    prop::collection::vec(piece, 0..=3).prop_map(|ps| {
        let slots = [(-9.0, -4.0), (-3.0, 2.0), (3.0, 9.0)];
        ps.into_iter()
            .zip(slots)
            .map(|((coefficient, rate), (lo, hi))| DensityPiece {
                lo,
                hi,
                coefficient,
                shape: rate.map_or(Shape::Constant, |rate| Shape::Exp { rate }),
            })
            .collect()
    })
}

pub fn smooth_spec_strategy() -> impl Strategy<Value = SignedMeasureSpec> {
    (atoms_strategy(), pieces_strategy()).prop_map(|(atoms, pieces)| SignedMeasureSpec {
        atoms,
        pieces,
        ..Default::default()
    })
}

/// Specs with up to three right barriers at `−6, 0, 6`, each preceded by a
/// power-law density making it pseudo or real, plus small atoms between.
pub fn barrier_spec_strategy() -> impl Strategy<Value = SignedMeasureSpec> {
    let barrier = prop::option::of(prop::sample::select(vec![0.5, 0.8, 1.0, 1.5, 2.0]));
    (prop::collection::vec(barrier, 3), prop::collection::vec((-2.5f64..2.5, -0.6f64..0.6), 0..6)).prop_map(
        |(barriers, small)| {
            let mut spec = SignedMeasureSpec::default();
            for (z, alpha) in [-6.0, 0.0, 6.0].into_iter().zip(barriers) {
                if let Some(alpha) = alpha {
                    spec.atoms.push(Atom { location: z, weight: 1.0 });
                    spec.pieces.push(power_piece(z - 2.0, z, -0.5 * alpha, z));
                }
            }
            for (i, (x, w)) in small.into_iter().enumerate() {
                // keep clear of the barrier pieces
                let loc = (i as f64 - 2.5) * 6.0 + 3.0 + 0.1 * x;
                if spec.atoms.iter().all(|a| (a.location - loc).abs() > 0.5) {
                    spec.atoms.push(Atom { location: loc, weight: w });
                }
            }
            spec.atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
            spec
        },
    )
}

/// `n` deterministic draws from a strategy.
pub fn sample<S: Strategy>(strategy: S, n: usize) -> Vec<S::Value> {
    let mut runner = TestRunner::deterministic();
    (0..n).map(|_| strategy.new_tree(&mut runner).expect("strategy draws").current()).collect()
}

// ---------------------------------------------------------------------------
// checks shared by the property tests and the acceptance run

pub const PROFILE_TOL: f64 = 1e-9;
pub const ATOM_ROUNDTRIP_TOL: f64 = 1e-10;
pub const DENSITY_ROUNDTRIP_TOL: f64 = 1e-7;

fn sample_points(spec: &SignedMeasureSpec) -> Vec<f64> {
    let mut z: Vec<f64> = (0..=48).map(|k| -12.0 + 0.5 * k as f64).collect();
    z.extend(spec.atoms.iter().flat_map(|a| [a.location - 1e-3, a.location, a.location + 1e-3]));
    z.extend(spec.pieces.iter().flat_map(|p| [p.lo, p.hi]));
    z.sort_by(f64::total_cmp);
    z.dedup();
    z
}

/// ϱ = ϱ⁺/ϱ⁻, the atom-jump identity, monotone ϱ± and ϱ(e) = 1 on a measure
/// without barriers, whose only interval is the line.
pub fn profile_properties(spec: &SignedMeasureSpec) -> Result<(), String> {
    let m = validate_measure(spec.clone()).map_err(|e| e.to_string())?;
    let g = m.locally_finite_decomposition().map_err(|e| e.to_string())?;
    let [iv] = g.intervals.as_slice() else { return Err(format!("{} intervals", g.intervals.len())) };
    let p = build_profile(&m, iv).map_err(|e| e.to_string())?;
    let rel = |a: f64, b: f64| (a - b).abs() <= PROFILE_TOL * a.abs().max(b.abs()).max(1.0);
    let at_e = p.eval_density(iv.e, Side::Right).unwrap();
    if !rel(at_e, 1.0) {
        return Err(format!("ϱ(e) = {at_e}"));
    }
    let mut last = (0.0, 0.0);
    for z in sample_points(spec) {
        for side in [Side::Left, Side::Right] {
            let t = p.eval_density(z, side).unwrap();
            let plus = p.eval_variant(z, side, Variant::Plus).unwrap();
            let minus = p.eval_variant(z, side, Variant::Minus).unwrap();
            if !rel(t, plus / minus) {
                return Err(format!("ϱ({z}) = {t} but ϱ⁺/ϱ⁻ = {}", plus / minus));
            }
            if plus < last.0 * (1.0 - PROFILE_TOL) || minus < last.1 * (1.0 - PROFILE_TOL) {
                return Err(format!("ϱ± decrease at {z}"));
            }
            last = (plus, minus);
        }
    }
    for a in &spec.atoms {
        let r = p.eval_density(a.location, Side::Right).unwrap();
        let l = p.eval_density(a.location, Side::Left).unwrap();
        let w = (r - l) / (r + l);
        if (w - a.weight).abs() > PROFILE_TOL {
            return Err(format!("jump at {} gives {w}, atom {}", a.location, a.weight));
        }
    }
    Ok(())
}

fn density_of(spec: &SignedMeasureSpec, x: f64) -> f64 {
    spec.pieces.iter().filter(|p| p.lo < x && x < p.hi).map(|p| p.density(x)).sum()
}

/// μ → ρ → μ: atoms to 1e−10 and the continuous density at 10³ points away
/// from atoms and piece ends.
pub fn roundtrip(spec: &SignedMeasureSpec) -> Result<(), String> {
    let m = validate_measure(spec.clone()).map_err(|e| e.to_string())?;
    let s = Arc::new(Structure::new(&m).map_err(|e| e.to_string())?);
    let c = construct_constants(&s, ConstantsTarget::AnyValid).map_err(|e| e.to_string())?;
    let rho = SkewDensity::new(s, c).map_err(|e| e.to_string())?;
    let back = measure_density_roundtrip(&rho).map_err(|e| e.to_string())?;
    for a in &spec.atoms {
        let w = back.atom_at(a.location);
        if (w - a.weight).abs() > ATOM_ROUNDTRIP_TOL {
            return Err(format!("atom at {}: {} recovered as {w}", a.location, a.weight));
        }
    }
    if let Some(extra) = back
        .atoms
        .iter()
        .find(|b| b.weight.abs() > ATOM_ROUNDTRIP_TOL && !spec.atoms.iter().any(|a| a.location == b.location))
    {
        return Err(format!("spurious atom {extra:?}"));
    }
    let ends: Vec<f64> =
        spec.atoms.iter().map(|a| a.location).chain(spec.pieces.iter().flat_map(|p| [p.lo, p.hi])).collect();
    let mut checked = 0;
    let mut k = 0u32;
    while checked < 1000 {
        k += 1;
        // a low-discrepancy walk over (−12, 12)
        let x = -12.0 + 24.0 * (k as f64 * 0.618_033_988_749_894_9).fract();
        if ends.iter().any(|e| (e - x).abs() < 0.05) {
            continue;
        }
        checked += 1;
        let (got, want) = (back.density(x), density_of(spec, x));
        if (got - want).abs() > DENSITY_ROUNDTRIP_TOL * (1.0 + want.abs()) {
            return Err(format!("density at {x}: {want} recovered as {got}"));
        }
    }
    Ok(())
}

/// Everything in a report that must not depend on the scale of the constants.
#[derive(Debug, PartialEq)]
pub struct ScaleSnapshot {
    pub verdicts: String,
    pub effective: Vec<(f64, f64, bool, bool, usize)>,
    pub conservative: String,
    pub semimartingale: String,
}

fn kind<T: serde::Serialize>(x: &T) -> String {
    serde_json::to_value(x).ok().and_then(|v| v["verdict"].as_str().map(String::from)).unwrap_or_default()
}

pub fn scale_snapshot(spec: &SignedMeasureSpec, lambda: f64) -> Result<ScaleSnapshot, String> {
    let m = validate_measure(spec.clone()).map_err(|e| e.to_string())?;
    let report = analyze(&m, "").map_err(|e| e.to_string())?;
    let verdicts = format!(
        "{:?} {:?} {:?} {:?} {:?}",
        report.exists,
        report.unique,
        report.irreducible_exists,
        report.conditions.iter().map(|c| c.holds).collect::<Vec<_>>(),
        report.barriers.iter().map(|b| (b.z, b.label)).collect::<Vec<_>>()
    );
    let s = Arc::new(Structure::new(&m).map_err(|e| e.to_string())?);
    let c = construct_constants(&s, ConstantsTarget::AnyValid).unwrap_or_else(|_| vec![1.0; s.len()]);
    let rho = SkewDensity::new(s, c).and_then(|r| r.rescaled(lambda)).map_err(|e| e.to_string())?;
    let es = glue_effective_intervals(Arc::new(rho));
    Ok(ScaleSnapshot {
        verdicts,
        effective: effective_rows(&es).iter().map(|r| (r.lo, r.hi, r.closed_lo, r.closed_hi, r.cells)).collect(),
        conservative: kind(&check_conservative(&es)),
        semimartingale: kind(&semimartingale_verdict(&es)),
    })
}

pub const SCALES: [f64; 3] = [1e-3, 1.0, 1e3];

pub fn scale_invariant(spec: &SignedMeasureSpec) -> Result<(), String> {
    let base = scale_snapshot(spec, 1.0)?;
    for lambda in SCALES {
        let other = scale_snapshot(spec, lambda)?;
        if other != base {
            return Err(format!("λ = {lambda}: {other:?} vs {base:?}"));
        }
    }
    Ok(())
}
