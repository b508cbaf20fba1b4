//! The five existence conditions, scale connection between intervals of `G`,
//! uniqueness and irreducibility, and the construction of the constants `c_n`.

use serde::{Deserialize, Serialize};

use super::{Structure, StructureError};
use crate::measure::{ComplementPart, Span, Variant};
use crate::num::{Confidence, ExtendedReal, Flagged, Verdict};
use crate::profile::{BvStatus, End, EndModel, Half, IntervalStats, ProfileError, TailClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `Ξ⁺` (resp. `Ξ⁻`) is exactly the set of finite left (right) endpoints
    /// next to which `|μ|` is finite.
    BarrierEndpoints,
    /// `|μ|(G^c ∖ Ξ) = 0`.
    NullComplement,
    /// `∫ϱ` is finite toward every finite endpoint.
    EndpointIntegrability,
    /// ϱ extends with bounded variation to finite endpoints where `∫1/ϱ < ∞`.
    BoundedVariation,
    /// `∫ (1/ϱ)(x) ∫ ϱ = ∞` on unbounded ends.
    NonExplosion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionVerdict {
    pub condition: Condition,
    pub holds: Flagged,
    /// First failing or undecided items.
    pub evidence: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExistenceReport {
    pub conditions: Vec<ConditionVerdict>,
    pub exists: Flagged,
    pub unique: Flagged,
    pub irreducible_exists: Flagged,
    pub confidence: Confidence,
}

impl ExistenceReport {
    pub fn condition(&self, c: Condition) -> &ConditionVerdict {
        self.conditions.iter().find(|v| v.condition == c).expect("all conditions reported")
    }
}

const EVIDENCE_CAP: usize = 8;

struct Collector {
    holds: Flagged,
    evidence: Vec<String>,
}

impl Collector {
    fn new() -> Self {
        Collector { holds: Flagged::certified(Verdict::True), evidence: Vec::new() }
    }

    fn push(&mut self, f: Flagged, what: impl FnOnce() -> String) {
        if f.verdict != Verdict::True && self.evidence.len() < EVIDENCE_CAP {
            self.evidence.push(format!("{}: {}", what(), f.verdict));
        }
        self.holds = self.holds.and(f);
    }

    fn finish(self, condition: Condition) -> ConditionVerdict {
        ConditionVerdict { condition, holds: self.holds, evidence: self.evidence }
    }
}

fn bv_flag(status: BvStatus, confidence: Confidence) -> Flagged {
    let verdict = match status {
        BvStatus::Bv => Verdict::True,
        BvStatus::NotBv => Verdict::False,
        BvStatus::Unknown => Verdict::Unknown,
    };
    Flagged { verdict, confidence }
}

fn barrier_endpoints(s: &Structure) -> ConditionVerdict {
    let m = s.measure();
    let mut c = Collector::new();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for (i, iv) in s.decomposition().intervals.iter().enumerate() {
        if let Err(ProfileError::AtomOnBoundary { location, weight }) = s.profile(i) {
            c.push(Flagged::certified(Verdict::False), || {
                format!("unit atom {weight} at {location} lies inside ({}, {})", iv.a, iv.b)
            });
        }
        if iv.a.is_finite() {
            let mass = m.mass_on_interval(&Span::open(iv.a, iv.e), Variant::Total);
            match mass.is_finite() {
                Verdict::True => plus.push(iv.a),
                Verdict::False => {}
                Verdict::Unknown => c.push(Flagged::numeric(Verdict::Unknown), || format!("|μ| near {}", iv.a)),
            }
        }
        if iv.b.is_finite() {
            let mass = m.mass_on_interval(&Span::open(iv.e, iv.b), Variant::Total);
            match mass.is_finite() {
                Verdict::True => minus.push(iv.b),
                Verdict::False => {}
                Verdict::Unknown => c.push(Flagged::numeric(Verdict::Unknown), || format!("|μ| near {}", iv.b)),
            }
        }
    }
    plus.sort_by(f64::total_cmp);
    minus.sort_by(f64::total_cmp);
    for (name, expected, actual) in [("Ξ⁺", &plus, m.xi_plus()), ("Ξ⁻", &minus, m.xi_minus())] {
        let matches = expected.as_slice() == actual;
        c.push(Flagged::certified(Verdict::from_bool(matches)), || {
            let extra: Vec<f64> = actual.iter().filter(|x| !expected.contains(x)).take(4).copied().collect();
            let missing: Vec<f64> = expected.iter().filter(|x| !actual.contains(x)).take(4).copied().collect();
            format!("{name} differs from the endpoint set (extra {extra:?}, missing {missing:?})")
        });
    }
    c.finish(Condition::BarrierEndpoints)
}

fn null_complement(s: &Structure) -> ConditionVerdict {
    let m = s.measure();
    let mut c = Collector::new();
    for part in &s.decomposition().complement {
        match *part {
            ComplementPart::Point { x } => {
                let w = m.atom_at(x).abs();
                c.push(Flagged::certified(Verdict::from_bool(w == 0.0 || w == 1.0)), || {
                    format!("atom of weight {w} at non-locally-finite point {x}")
                });
            }
            ComplementPart::Segment { lo, hi } => {
                c.push(Flagged::certified(Verdict::False), || format!("infinite mass on [{lo}, {hi}]"));
            }
            // atoms of the Cantor measure sit at gap endpoints only
            ComplementPart::CantorSet { .. } => {}
        }
    }
    c.finish(Condition::NullComplement)
}

fn endpoint_conditions(s: &Structure) -> (ConditionVerdict, ConditionVerdict) {
    let mut integ = Collector::new();
    let mut bv = Collector::new();
    for (i, iv) in s.decomposition().intervals.iter().enumerate() {
        let (Ok(p), Some(st)) = (s.profile(i), s.stats(i)) else {
            let f = Flagged::numeric(Verdict::Unknown);
            integ.push(f, || format!("no profile on ({}, {})", iv.a, iv.b));
            bv.push(f, || format!("no profile on ({}, {})", iv.a, iv.b));
            continue;
        };
        for (x, integral, inverse, half) in [
            (iv.a, st.integral_left, st.inverse_left, Half::Left),
            (iv.b, st.integral_right, st.inverse_right, Half::Right),
        ] {
            if !x.is_finite() {
                continue;
            }
            integ.push(Flagged::from(integral), || format!("∫ϱ toward {x}"));
            match inverse.is_finite() {
                Verdict::False => {}
                v => {
                    let cert = p.bv_certificate(half);
                    let f = bv_flag(cert.status, cert.confidence);
                    // only required when ∫1/ϱ is finite; undecided unless BV anyway
                    let f = if v == Verdict::Unknown && f.verdict != Verdict::True {
                        Flagged::numeric(Verdict::Unknown)
                    } else {
                        f
                    };
                    bv.push(f, || format!("bounded variation toward {x}"));
                }
            }
        }
    }
    (integ.finish(Condition::EndpointIntegrability), bv.finish(Condition::BoundedVariation))
}

/// Whether `∫ (1/ϱ) ∫ ϱ` diverges toward an infinite end with this model.
pub(crate) fn tail_conservative(model: &EndModel) -> Flagged {
    match model {
        EndModel::Tail { class: TailClass::Growth { explodes: true } } => Flagged::certified(Verdict::False),
        EndModel::Tail { .. } => Flagged::certified(Verdict::True),
        _ => Flagged::numeric(Verdict::Unknown),
    }
}

fn non_explosion(s: &Structure) -> ConditionVerdict {
    let mut c = Collector::new();
    let ivs = &s.decomposition().intervals;
    let ends = [(0usize, End::A), (ivs.len() - 1, End::B)];
    for (i, end) in ends {
        let iv = &ivs[i];
        let x = if end == End::A { iv.a } else { iv.b };
        if x.is_finite() {
            continue;
        }
        match s.profile(i) {
            Ok(p) => c.push(tail_conservative(&p.end_model(end)), || format!("tail toward {x}")),
            Err(_) => c.push(Flagged::numeric(Verdict::Unknown), || format!("no profile toward {x}")),
        }
    }
    c.finish(Condition::NonExplosion)
}

pub fn check_existence(s: &Structure) -> ExistenceReport {
    let (integ, bv) = endpoint_conditions(s);
    let conditions = vec![barrier_endpoints(s), null_complement(s), integ, bv, non_explosion(s)];
    let exists = conditions.iter().fold(Flagged::certified(Verdict::True), |acc, c| acc.and(c.holds));
    let (unique, irreducible_exists) = check_uniqueness_irreducibility(s, exists);
    let confidence = exists.confidence.weakest(unique.confidence).weakest(irreducible_exists.confidence);
    ExistenceReport { conditions, exists, unique, irreducible_exists, confidence }
}

/// Whether positive constants can make `I_i` and `I_j` scale-connected: the
/// gap between them must be Lebesgue-null, `B_iʳ` and `B_jˡ` finite, and
/// `Σ √((A_n + V_n)·B_n)` over the intervals in between finite. The choice
/// `c_n = √(B_n/(A_n+V_n))` attains it; AM–GM shows nothing smaller works.
pub fn decide_scale_connectable(
    stats_i: &IntervalStats,
    stats_j: &IntervalStats,
    between: &[IntervalStats],
    gap_measure_zero: bool,
) -> Flagged {
    if !gap_measure_zero {
        return Flagged::certified(Verdict::False);
    }
    let ends = Flagged::from(stats_i.inverse_right).and(Flagged::from(stats_j.inverse_left));
    between.iter().fold(ends, |acc, s| acc.and(Flagged::from(s.integral + s.variation)).and(Flagged::from(s.inverse)))
}

/// `√((A+V)·B)` for an interval with all three finite.
fn connection_term(s: &IntervalStats) -> Option<f64> {
    Some(((s.integral + s.variation).value()? * s.inverse.value()?).sqrt())
}

/// Convergence of a positive series from its sums over consecutive levels.
fn level_series(level_sums: &[f64]) -> Flagged {
    let n = level_sums.len();
    if n < 3 {
        return Flagged::numeric(Verdict::Unknown);
    }
    let r = level_sums[n - 1] / level_sums[n - 2];
    if !r.is_finite() {
        return Flagged::numeric(Verdict::Unknown);
    }
    if r >= 1.0 - 1e-6 {
        Flagged::numeric(Verdict::False)
    } else if r < 1.0 - 1e-3 {
        Flagged::numeric(Verdict::True)
    } else {
        Flagged::numeric(Verdict::Unknown)
    }
}

/// Level sums `Σ f(stats)` over Cantor gaps, indexed by generation.
fn cantor_level_sums<F: Fn(usize, &IntervalStats) -> Option<f64>>(s: &Structure, f: F) -> Option<Vec<f64>> {
    let mut sums: Vec<f64> = Vec::new();
    for (i, iv) in s.decomposition().intervals.iter().enumerate() {
        let Some(level) = iv.level else { continue };
        let v = f(i, s.stats(i)?)?;
        let p = level as usize;
        if sums.len() < p {
            sums.resize(p, 0.0);
        }
        sums[p - 1] += v;
    }
    Some(sums)
}

/// Scale connection of the two unbounded intervals through all Cantor gaps.
fn cantor_connectable(s: &Structure) -> Flagged {
    let Some(c) = s.measure().cantor() else { return Flagged::numeric(Verdict::Unknown) };
    if c.limit_measure > 0.0 {
        return Flagged::certified(Verdict::False);
    }
    let n = s.len();
    let (Some(first), Some(last)) = (s.stats(0), s.stats(n - 1)) else {
        return Flagged::numeric(Verdict::Unknown);
    };
    let ends = Flagged::from(first.inverse_right).and(Flagged::from(last.inverse_left));
    match cantor_level_sums(s, |_, st| connection_term(st)) {
        Some(sums) => ends.and(level_series(&sums)),
        None => ends.and(Flagged::numeric(Verdict::False)),
    }
}

fn adjacent_connectable(s: &Structure, i: usize) -> Flagged {
    let ivs = &s.decomposition().intervals;
    let (Some(si), Some(sj)) = (s.stats(i), s.stats(i + 1)) else {
        return Flagged::numeric(Verdict::Unknown);
    };
    let null = s.decomposition().null_between(ivs[i].b, ivs[i + 1].a);
    decide_scale_connectable(si, sj, &[], null)
}

/// `(unique, irreducible_exists)`. Without existence both are false.
pub fn check_uniqueness_irreducibility(s: &Structure, exists: Flagged) -> (Flagged, Flagged) {
    if exists.verdict == Verdict::False {
        let f = Flagged { verdict: Verdict::False, confidence: exists.confidence };
        return (f, f);
    }
    let n = s.len();
    let (unique, irreducible) = if n == 1 {
        (Flagged::certified(Verdict::True), Flagged::certified(Verdict::True))
    } else if s.measure().cantor().is_some() {
        let conn = cantor_connectable(s);
        (conn.not(), conn)
    } else {
        let pairs: Vec<Flagged> = (0..n - 1).map(|i| adjacent_connectable(s, i)).collect();
        let any = pairs.iter().fold(Flagged::certified(Verdict::False), |acc, f| Flagged {
            verdict: acc.verdict.or(f.verdict),
            confidence: acc.confidence.weakest(f.confidence),
        });
        let null = s.decomposition().complement_measure() == 0.0;
        let all = pairs.iter().fold(Flagged::certified(Verdict::from_bool(null)), |acc, f| acc.and(*f));
        (any.not(), all)
    };
    let unknown_exists = |f: Flagged| if exists.verdict == Verdict::Unknown { f.and(exists) } else { f };
    (unknown_exists(unique), unknown_exists(irreducible))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantsTarget {
    /// Any admissible choice; intervals are glued only where forced.
    AnyValid,
    /// Glue every connectable cluster.
    MaximallyGlued,
}

fn any_valid(label: u64, s: &IntervalStats, bounded: bool) -> f64 {
    if !bounded {
        return 1.0;
    }
    let n = label as f64;
    let a = s.integral.value().unwrap_or(1.0);
    let v = s.variation.value().unwrap_or(1.0);
    1.0 / (n * n * a.max(v).max(1.0))
}

fn balanced(s: &IntervalStats) -> Option<f64> {
    let c = (s.inverse.value()? / (s.integral + s.variation).value()?).sqrt();
    (c.is_finite() && c > 0.0).then_some(c)
}

/// Constants `c_n > 0` such that `Σ c_n A_n` is locally finite and `Σ c_n V_n`
/// finite on compacts of each glued interval.
pub fn construct_constants(s: &Structure, target: ConstantsTarget) -> Result<Vec<f64>, StructureError> {
    let report = check_existence(s);
    if report.exists.verdict != Verdict::True {
        let failing: Vec<String> = report
            .conditions
            .iter()
            .filter(|c| c.holds.verdict != Verdict::True)
            .map(|c| format!("{:?}: {}", c.condition, c.holds.verdict))
            .collect();
        return Err(StructureError::ConditionsNotMet(failing.join("; ")));
    }
    let ivs = &s.decomposition().intervals;
    let mut c: Vec<f64> = ivs
        .iter()
        .enumerate()
        .map(|(i, iv)| {
            let st = s.stats(i).expect("profiles exist when the conditions hold");
            any_valid(iv.label, st, iv.a.is_finite() && iv.b.is_finite())
        })
        .collect();
    if target == ConstantsTarget::MaximallyGlued && ivs.len() > 2 {
        if s.measure().cantor().is_some() {
            if cantor_connectable(s).verdict == Verdict::True {
                for i in 1..ivs.len() - 1 {
                    if let Some(b) = s.stats(i).and_then(balanced) {
                        c[i] = b;
                    }
                }
            }
        } else {
            for i in 1..ivs.len() - 1 {
                let left = adjacent_connectable(s, i - 1).verdict == Verdict::True;
                let right = adjacent_connectable(s, i).verdict == Verdict::True;
                if left && right {
                    if let Some(b) = s.stats(i).and_then(balanced) {
                        c[i] = b;
                    }
                }
            }
        }
    }
    Ok(c)
}

/// `Σ c_n A_n`, `Σ B_n / c_n` and `Σ c_n V_n` over bounded intervals.
pub fn constant_sums(s: &Structure, c: &[f64]) -> [ExtendedReal; 3] {
    let mut out = [ExtendedReal::ZERO; 3];
    for (i, iv) in s.decomposition().intervals.iter().enumerate() {
        if !(iv.a.is_finite() && iv.b.is_finite()) {
            continue;
        }
        let Some(st) = s.stats(i) else { continue };
        out[0] = out[0] + st.integral.scale(c[i]);
        out[1] = out[1] + st.inverse.scale(1.0 / c[i]);
        out[2] = out[2] + st.variation.scale(c[i]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{validate_measure, Atom, CantorStructure, CheckedMeasure, Gap, SignedMeasureSpec};
    use crate::structure::fixtures::*;

    fn report(m: &CheckedMeasure) -> ExistenceReport {
        check_existence(&Structure::new(m).unwrap())
    }

    #[test]
    fn skew_exists_uniquely() {
        for alpha in [0.25, 0.5, 0.75] {
            let r = report(&skew(alpha));
            assert_eq!(r.exists.verdict, Verdict::True);
            assert_eq!(r.unique.verdict, Verdict::True);
            assert_eq!(r.irreducible_exists.verdict, Verdict::True);
            assert_eq!(r.confidence, Confidence::Certified);
        }
    }

    #[test]
    fn unit_atom_has_no_process() {
        let r = report(&unit_atom());
        assert_eq!(r.exists.verdict, Verdict::False);
        assert_eq!(r.condition(Condition::BarrierEndpoints).holds.verdict, Verdict::False);
    }

    #[test]
    fn pseudo_barrier_breaks_uniqueness() {
        let r = report(&power_barrier(0.5));
        assert_eq!(r.exists.verdict, Verdict::True, "{r:#?}");
        assert_eq!(r.unique.verdict, Verdict::False);
        assert_eq!(r.irreducible_exists.verdict, Verdict::True);
        let r = report(&power_barrier(1.5));
        assert_eq!(r.exists.verdict, Verdict::True);
        assert_eq!(r.unique.verdict, Verdict::True);
        assert_eq!(r.irreducible_exists.verdict, Verdict::False);
        let r = report(&power_barrier(-1.0));
        assert_eq!(r.exists.verdict, Verdict::False);
    }

    #[test]
    fn three_bounded_intervals_constants() {
        // barriers at 0, 1, 2, 3 leave three bounded intervals in G
        let m = validate_measure(SignedMeasureSpec {
            atoms: vec![
                Atom { location: 0.0, weight: -1.0 },
                Atom { location: 0.5, weight: 0.3 },
                Atom { location: 1.0, weight: 1.0 },
                Atom { location: 2.0, weight: -1.0 },
                Atom { location: 3.0, weight: 1.0 },
            ],
            ..Default::default()
        })
        .unwrap();
        // isolated unit atoms sit inside G, so no process exists here
        assert_eq!(report(&m).exists.verdict, Verdict::False);
        let s = Structure::new(&m).unwrap();
        assert!(matches!(construct_constants(&s, ConstantsTarget::AnyValid), Err(StructureError::ConditionsNotMet(_))));
    }

    #[test]
    fn cantor_constants_and_connection() {
        let gaps = vec![Gap { a: 1.0 / 3.0, b: 2.0 / 3.0, level: 1, label: 3 }];
        let m = CheckedMeasure::from_cantor(CantorStructure { gaps, depth: 1, limit_measure: 0.0 });
        let s = Structure::new(&m).unwrap();
        let r = check_existence(&s);
        assert_eq!(r.exists.verdict, Verdict::True, "{r:#?}");
        let c = construct_constants(&s, ConstantsTarget::AnyValid).unwrap();
        assert_eq!(c[0], 1.0);
        // label 3, A = B = 1/3, V = 2
        assert!((c[1] - 1.0 / 18.0).abs() < 1e-12);
        let sums = constant_sums(&s, &c);
        assert!(sums.iter().all(|x| x.is_finite() == Verdict::True));
    }
}
