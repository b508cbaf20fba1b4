//! Labels for the points of `Ξ`: real, pseudo or nonsensical barriers.
//!
//! A right barrier `z ∈ Ξ⁺` sits between an interval `(a', z)` on its left
//! and `(z, b')` on its right, where `a'`, `b'` are the neighbouring points
//! of `Ξ ∪ G^c`. The label reads the `μ`-masses of the half-intervals next to
//! `z` and the profile of the far side. Left barriers are mirrored.

use serde::{Deserialize, Serialize};

use super::StructureError;
use crate::measure::{CheckedMeasure, ComplementPart, GInterval, IntervalDecomposition, Span, Variant};
use crate::num::{Confidence, ExtendedReal, Flagged, Verdict};
use crate::profile::{build_profile, BvStatus, BvVerdict, End, EndpointLimit, Half, LimitVerdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierSide {
    /// `μ_z = +1`
    Right,
    /// `μ_z = −1`
    Left,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierLabel {
    Real,
    Pseudo,
    Nonsensical,
    Unknown,
}

/// Which argument produced the label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    /// The near side carries infinite `|μ|`.
    NearMass,
    /// Finite mass of the sign that keeps ϱ away from zero on the far side.
    FarMassShortcut,
    /// Only one sign is infinite on the far side; the inverse integral decides.
    InverseTest,
    /// Both signs infinite: the definitions checked directly.
    Definition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierEvidence {
    /// `|μ|` of the half-interval on the barrier's own side.
    pub near_mass: ExtendedReal,
    /// `μ⁺` and `μ⁻` of the half-interval on the far side.
    pub far_plus: ExtendedReal,
    pub far_minus: ExtendedReal,
    /// `∫ϱ` and `∫1/ϱ` over the far half.
    pub integral: Option<ExtendedReal>,
    pub inverse: Option<ExtendedReal>,
    pub bv: Option<BvVerdict>,
    pub limit: Option<LimitVerdict>,
    pub rule: LabelRule,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierEntry {
    pub z: f64,
    pub side: BarrierSide,
    pub label: BarrierLabel,
    pub confidence: Confidence,
    pub evidence: BarrierEvidence,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BarrierClassification {
    pub entries: Vec<BarrierEntry>,
    /// Barriers without an interval ending there on both sides (for instance
    /// gap endpoints of a Cantor set); these carry no label.
    pub non_isolated: usize,
}

impl BarrierClassification {
    pub fn label_of(&self, z: f64) -> Option<BarrierLabel> {
        self.entries.iter().find(|e| e.z == z).map(|e| e.label)
    }
}

/// The neighbouring obstacle (point of `Ξ` or of `G^c`) strictly left of `z`,
/// or `None` when obstacles accumulate at `z` from the left.
fn left_neighbour(m: &CheckedMeasure, g: &IntervalDecomposition, z: f64) -> Option<f64> {
    let mut best = f64::NEG_INFINITY;
    for list in [m.xi_plus(), m.xi_minus()] {
        let i = list.partition_point(|&x| x < z);
        if i > 0 {
            best = best.max(list[i - 1]);
        }
    }
    for c in &g.complement {
        match *c {
            ComplementPart::Point { x } if x < z => best = best.max(x),
            ComplementPart::Point { .. } => {}
            ComplementPart::Segment { lo, hi } | ComplementPart::CantorSet { lo, hi, .. } => {
                if lo < z && hi >= z {
                    return None;
                }
                if hi < z {
                    best = best.max(hi);
                }
            }
        }
    }
    Some(best)
}

fn right_neighbour(m: &CheckedMeasure, g: &IntervalDecomposition, z: f64) -> Option<f64> {
    let mut best = f64::INFINITY;
    for list in [m.xi_plus(), m.xi_minus()] {
        let i = list.partition_point(|&x| x <= z);
        if i < list.len() {
            best = best.min(list[i]);
        }
    }
    for c in &g.complement {
        match *c {
            ComplementPart::Point { x } if x > z => best = best.min(x),
            ComplementPart::Point { .. } => {}
            ComplementPart::Segment { lo, hi } | ComplementPart::CantorSet { lo, hi, .. } => {
                if lo <= z && hi > z {
                    return None;
                }
                if lo > z {
                    best = best.min(lo);
                }
            }
        }
    }
    Some(best)
}

pub fn classify_barrier(m: &CheckedMeasure, g: &IntervalDecomposition, z: f64) -> Result<BarrierEntry, StructureError> {
    let w = m.atom_at(z);
    let side = if w == 1.0 {
        BarrierSide::Right
    } else if w == -1.0 {
        BarrierSide::Left
    } else {
        return Err(StructureError::NotABarrier(z));
    };
    if m.cantor().is_some() {
        return Err(StructureError::NonIsolatedBarrier(z));
    }
    let (Some(lo), Some(hi)) = (left_neighbour(m, g, z), right_neighbour(m, g, z)) else {
        return Err(StructureError::NonIsolatedBarrier(z));
    };
    let left = GInterval::new(lo, z, 0);
    let right = GInterval::new(z, hi, 0);
    // near half carries the barrier's own side, far half the other
    let (near, far, far_interval, far_half) = match side {
        BarrierSide::Right => (Span::left_open(z, right.e), Span::right_open(left.e, z), left, Half::Right),
        BarrierSide::Left => (Span::right_open(left.e, z), Span::left_open(z, right.e), right, Half::Left),
    };
    let near_mass = m.mass_on_interval(&near, Variant::Total);
    let far_plus = m.mass_on_interval(&far, Variant::Plus);
    let far_minus = m.mass_on_interval(&far, Variant::Minus);
    // the sign whose finiteness forces ϱ to stay positive toward z
    let (guard, other) = match side {
        BarrierSide::Right => (far_minus, far_plus),
        BarrierSide::Left => (far_plus, far_minus),
    };
    let mut evidence = BarrierEvidence {
        near_mass,
        far_plus,
        far_minus,
        integral: None,
        inverse: None,
        bv: None,
        limit: None,
        rule: LabelRule::NearMass,
    };
    let entry = |label, confidence, evidence| BarrierEntry { z, side, label, confidence, evidence };
    match near_mass.is_finite() {
        Verdict::False => return Ok(entry(BarrierLabel::Nonsensical, near_mass.confidence, evidence)),
        Verdict::Unknown => return Ok(entry(BarrierLabel::Unknown, Confidence::Numeric, evidence)),
        Verdict::True => {}
    }
    evidence.rule = LabelRule::FarMassShortcut;
    let conf = near_mass.confidence.weakest(guard.confidence);
    match guard.is_finite() {
        Verdict::True => return Ok(entry(BarrierLabel::Nonsensical, conf, evidence)),
        Verdict::Unknown => return Ok(entry(BarrierLabel::Unknown, Confidence::Numeric, evidence)),
        Verdict::False => {}
    }
    let profile = match build_profile(m, &far_interval) {
        Ok(p) => p,
        Err(_) => return Ok(entry(BarrierLabel::Unknown, Confidence::Numeric, evidence)),
    };
    let stats = profile.integral_stats();
    let (integral, inverse) = match far_half {
        Half::Right => (stats.integral_right, stats.inverse_right),
        Half::Left => (stats.integral_left, stats.inverse_left),
    };
    let end = match far_half {
        Half::Right => End::B,
        Half::Left => End::A,
    };
    evidence.integral = Some(integral);
    evidence.inverse = Some(inverse);
    let inverse_infinite = Flagged::from(inverse).not();
    match other.is_finite() {
        Verdict::True => {
            evidence.rule = LabelRule::InverseTest;
            let label = match inverse_infinite.verdict {
                Verdict::True => BarrierLabel::Real,
                Verdict::False => BarrierLabel::Pseudo,
                Verdict::Unknown => BarrierLabel::Unknown,
            };
            Ok(entry(label, conf.weakest(inverse_infinite.confidence).weakest(other.confidence), evidence))
        }
        Verdict::Unknown => Ok(entry(BarrierLabel::Unknown, Confidence::Numeric, evidence)),
        Verdict::False => {
            evidence.rule = LabelRule::Definition;
            let bv = profile.bv_certificate(far_half);
            let limit = profile.endpoint_limit(end).clone();
            let real = Flagged::from(integral).and(inverse_infinite);
            let bv_flag = Flagged {
                verdict: match bv.status {
                    BvStatus::Bv => Verdict::True,
                    BvStatus::NotBv => Verdict::False,
                    BvStatus::Unknown => Verdict::Unknown,
                },
                confidence: bv.confidence,
            };
            let zero = Flagged {
                verdict: match limit.limit {
                    EndpointLimit::Zero => Verdict::True,
                    EndpointLimit::Unknown => Verdict::Unknown,
                    _ => Verdict::False,
                },
                confidence: limit.confidence,
            };
            let pseudo = bv_flag.and(zero).and(Flagged::from(inverse));
            evidence.bv = Some(bv);
            evidence.limit = Some(limit);
            let (label, c) = match (real.verdict, pseudo.verdict) {
                (Verdict::True, _) => (BarrierLabel::Real, real.confidence),
                (_, Verdict::True) => (BarrierLabel::Pseudo, pseudo.confidence),
                (Verdict::False, Verdict::False) => {
                    (BarrierLabel::Nonsensical, real.confidence.weakest(pseudo.confidence))
                }
                _ => (BarrierLabel::Unknown, Confidence::Numeric),
            };
            Ok(entry(label, conf.weakest(c), evidence))
        }
    }
}

/// Labels for every point of `Ξ`.
pub fn classify_all(m: &CheckedMeasure, g: &IntervalDecomposition) -> BarrierClassification {
    let mut points: Vec<f64> = m.xi_plus().iter().chain(m.xi_minus()).copied().collect();
    points.sort_by(f64::total_cmp);
    let mut out = BarrierClassification::default();
    if m.cantor().is_some() {
        out.non_isolated = points.len();
        return out;
    }
    for z in points {
        match classify_barrier(m, g, z) {
            Ok(e) => out.entries.push(e),
            Err(_) => out.non_isolated += 1,
        }
    }
    out
}
