//! Deterministic, serializable reports. Non-finite numbers are written as the
//! strings `"inf"`, `"-inf"` and `"nan"` so that JSON round-trips losslessly.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cantor::{
    cantor_constants, cantor_verdict, first_label, CantorConstants, CantorError, CantorSpec, CantorVerdict,
};
use crate::measure::{CheckedMeasure, ComplementPart};
use crate::num::{Confidence, Flagged, Verdict};
use crate::structure::{
    check_conservative, check_existence, classify_all, construct_constants, glue_effective_intervals, BarrierEntry,
    BarrierLabel, BarrierSide, Condition, Conservativeness, ConstantsTarget, EffectiveIntervalSet, ExistenceReport,
    LabelRule, SkewDensity, Structure, StructureError,
};

/// Serde adapter for `f64` that keeps infinities and NaN.
pub mod xf64 {
    use serde::de::{self, Deserializer, Visitor};
    use serde::Serializer;
    use std::fmt;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = f64;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number, \"inf\", \"-inf\" or \"nan\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
                Ok(v)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
                Ok(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
                match v {
                    "inf" => Ok(f64::INFINITY),
                    "-inf" => Ok(f64::NEG_INFINITY),
                    "nan" => Ok(f64::NAN),
                    _ => Err(E::custom(format!("unexpected number string {v:?}"))),
                }
            }
        }
        d.deserialize_any(V)
    }

    pub mod vec {
        use serde::de::Deserializer;
        use serde::ser::{SerializeSeq, Serializer};
        use serde::Deserialize;

        #[derive(serde::Serialize, serde::Deserialize)]
        struct W(#[serde(with = "super")] f64);

        pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(xs.len()))?;
            for x in xs {
                seq.serialize_element(&W(*x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Ok(Vec::<W>::deserialize(d)?.into_iter().map(|w| w.0).collect())
        }
    }
}

/// Rows listed in full up to this many; larger decompositions are truncated.
pub const MAX_ROWS: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalRow {
    #[serde(with = "xf64")]
    pub a: f64,
    #[serde(with = "xf64")]
    pub b: f64,
    pub label: u64,
    /// Cantor level for gaps.
    pub level: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierRow {
    #[serde(with = "xf64")]
    pub z: f64,
    pub side: BarrierSide,
    pub label: BarrierLabel,
    pub rule: LabelRule,
    pub confidence: Confidence,
    pub evidence: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub condition: Condition,
    pub holds: Verdict,
    pub confidence: Confidence,
    pub evidence: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRow {
    #[serde(with = "xf64")]
    pub lo: f64,
    #[serde(with = "xf64")]
    pub hi: f64,
    pub closed_lo: bool,
    pub closed_hi: bool,
    /// Natural-scale image of the interval.
    #[serde(with = "xf64::vec")]
    pub image: Vec<f64>,
    pub cells: usize,
    pub confidence: Confidence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ConservativenessRow {
    Conservative {
        confidence: Confidence,
    },
    Explodes {
        #[serde(with = "xf64::vec")]
        toward: Vec<f64>,
        confidence: Confidence,
    },
    Unknown {
        reason: String,
    },
    /// No process exists, so there is nothing to test.
    NotApplicable,
}

impl From<Conservativeness> for ConservativenessRow {
    fn from(c: Conservativeness) -> Self {
        match c {
            Conservativeness::Conservative { confidence } => ConservativenessRow::Conservative { confidence },
            Conservativeness::Explodes { toward, confidence } => ConservativenessRow::Explodes { toward, confidence },
            Conservativeness::Unknown { reason } => ConservativenessRow::Unknown { reason },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub spec_hash: String,
    pub intervals_total: usize,
    pub intervals: Vec<IntervalRow>,
    #[serde(with = "xf64")]
    pub complement_measure: f64,
    pub complement_points: usize,
    pub barriers: Vec<BarrierRow>,
    pub non_isolated_barriers: usize,
    pub conditions: Vec<ConditionRow>,
    pub exists: Flagged,
    pub unique: Flagged,
    pub irreducible_exists: Flagged,
    pub effective_intervals: Vec<EffectiveRow>,
    pub conservativeness: ConservativenessRow,
    pub confidence: Confidence,
    pub notes: Vec<String>,
}

impl AnalysisReport {
    /// Process exit code: 0 when a process exists, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.exists.verdict == Verdict::True {
            0
        } else {
            2
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

fn barrier_row(b: &BarrierEntry) -> BarrierRow {
    let e = &b.evidence;
    let mut evidence = vec![
        format!("near-side |mu| = {}", e.near_mass),
        format!("far-side mu+ = {}, mu- = {}", e.far_plus, e.far_minus),
    ];
    if let Some(x) = e.integral {
        evidence.push(format!("far-side integral of rho = {x}"));
    }
    if let Some(x) = e.inverse {
        evidence.push(format!("far-side integral of 1/rho = {x}"));
    }
    if let Some(bv) = e.bv {
        evidence.push(format!("bounded variation: {:?}, total variation {}", bv.status, bv.total_variation));
    }
    if let Some(l) = &e.limit {
        evidence.push(format!("endpoint limit: {:?}", l.limit));
    }
    BarrierRow { z: b.z, side: b.side, label: b.label, rule: e.rule, confidence: b.confidence, evidence }
}

/// Effective intervals of the process built with admissible constants.
pub fn effective_rows(es: &EffectiveIntervalSet) -> Vec<EffectiveRow> {
    es.intervals
        .iter()
        .map(|k| EffectiveRow {
            lo: k.lo,
            hi: k.hi,
            closed_lo: k.closed_lo,
            closed_hi: k.closed_hi,
            image: vec![k.image.0, k.image.1],
            cells: k.cells.len(),
            confidence: k.confidence,
        })
        .collect()
}

/// Build the full analysis of a measure.
pub fn analyze(m: &CheckedMeasure, spec_hash: &str) -> Result<AnalysisReport, StructureError> {
    let structure = Arc::new(Structure::new(m)?);
    let g = structure.decomposition();
    let barriers = classify_all(m, g);
    let existence: ExistenceReport = check_existence(&structure);
    let mut notes = Vec::new();

    let (effective_intervals, conservativeness) = if existence.exists.verdict == Verdict::True {
        let c = construct_constants(&structure, ConstantsTarget::AnyValid)?;
        let es = glue_effective_intervals(Arc::new(SkewDensity::new(structure.clone(), c)?));
        let rows = effective_rows(&es);
        let interior_closed = rows.iter().any(|r| {
            (r.closed_lo && g.intervals.first().is_some_and(|c| r.lo > c.a))
                || (r.closed_hi && g.intervals.last().is_some_and(|c| r.hi < c.b))
        });
        if interior_closed {
            notes.push(
                "some effective interval is adjoined at a barrier inside the state space; simulations reflect there"
                    .to_string(),
            );
        }
        (rows, check_conservative(&es).into())
    } else {
        (Vec::new(), ConservativenessRow::NotApplicable)
    };
    if barriers.non_isolated > 0 {
        notes.push(format!("{} barrier(s) are not isolated and carry no label", barriers.non_isolated));
    }
    if m.cantor().is_some_and(|c| c.limit_measure > 0.0) {
        notes.push("the Cantor limit set has positive Lebesgue measure".to_string());
    }

    let intervals: Vec<IntervalRow> = g
        .intervals
        .iter()
        .take(MAX_ROWS)
        .map(|i| IntervalRow { a: i.a, b: i.b, label: i.label, level: i.level })
        .collect();
    let complement_points = g.complement.iter().filter(|c| matches!(c, ComplementPart::Point { .. })).count();
    let conditions = existence
        .conditions
        .iter()
        .map(|c| ConditionRow {
            condition: c.condition,
            holds: c.holds.verdict,
            confidence: c.holds.confidence,
            evidence: c.evidence.clone(),
        })
        .collect();
    Ok(AnalysisReport {
        spec_hash: spec_hash.to_string(),
        intervals_total: g.intervals.len(),
        intervals,
        complement_measure: g.complement_measure(),
        complement_points,
        barriers: barriers.entries.iter().take(MAX_ROWS).map(barrier_row).collect(),
        non_isolated_barriers: barriers.non_isolated,
        conditions,
        exists: existence.exists,
        unique: existence.unique,
        irreducible_exists: existence.irreducible_exists,
        effective_intervals,
        conservativeness,
        confidence: existence.confidence.weakest(structure.confidence()),
        notes,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCensus {
    pub level: u32,
    pub gaps: u64,
    pub first_label: u64,
    #[serde(with = "xf64")]
    pub gap_length: f64,
    #[serde(with = "xf64")]
    pub total_length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorReport {
    pub spec: CantorSpec,
    pub verdict: CantorVerdict,
    pub census: Vec<LevelCensus>,
    pub constants: Option<CantorConstants>,
}

impl CantorReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Verdict, per-level gap census and, when `beta` is given, the witness
/// constants (first `MAX_ROWS` entries).
pub fn cantor_report(spec: &CantorSpec, beta: Option<f64>) -> Result<CantorReport, CantorError> {
    let verdict = cantor_verdict(spec, spec.depth)?;
    let census = (1..=spec.depth)
        .map(|p| {
            let gaps = 1u64 << (p - 1);
            let gap_length = spec.gap_length(p);
            LevelCensus {
                level: p,
                gaps,
                first_label: first_label(p),
                gap_length,
                total_length: gaps as f64 * gap_length,
            }
        })
        .collect();
    let constants = beta
        .map(|b| {
            cantor_constants(spec, b).map(|mut c| {
                c.per_interval.truncate(MAX_ROWS);
                c
            })
        })
        .transpose()?;
    Ok(CantorReport { spec: *spec, verdict, census, constants })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::fixtures::{power_barrier, skew, unit_atom};

    #[test]
    fn skew_report_round_trips() {
        let r = analyze(&skew(0.75), "abc").unwrap();
        assert_eq!(r.exit_code(), 0);
        assert_eq!(r.unique.verdict, Verdict::True);
        let json = r.to_json();
        assert!(json.contains("\"-inf\""));
        assert_eq!(AnalysisReport::from_json(&json).unwrap(), r);
    }

    #[test]
    fn unit_atom_has_no_process() {
        let r = analyze(&unit_atom(), "x").unwrap();
        assert_eq!(r.exit_code(), 2);
        assert_eq!(r.conservativeness, ConservativenessRow::NotApplicable);
        assert_eq!(AnalysisReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn barrier_evidence_is_reported() {
        let r = analyze(&power_barrier(0.5), "x").unwrap();
        assert_eq!(r.barriers.len(), 1);
        assert!(!r.barriers[0].evidence.is_empty());
        assert_eq!(AnalysisReport::from_json(&r.to_json()).unwrap(), r);
    }

    #[test]
    fn non_finite_values_survive_json() {
        #[derive(Serialize, Deserialize)]
        struct T(#[serde(with = "xf64")] f64);
        for x in [f64::INFINITY, f64::NEG_INFINITY, 1.5] {
            let s = serde_json::to_string(&T(x)).unwrap();
            assert_eq!(serde_json::from_str::<T>(&s).unwrap().0, x);
        }
        let s = serde_json::to_string(&T(f64::NAN)).unwrap();
        assert!(serde_json::from_str::<T>(&s).unwrap().0.is_nan());
    }

    #[test]
    fn cantor_census() {
        let spec = CantorSpec::constant(0.2, crate::cantor::GapModel::PowerLaw).with_depth(6);
        let r = cantor_report(&spec, Some(0.45)).unwrap();
        assert_eq!(r.census.len(), 6);
        assert_eq!(r.census[2].gaps, 4);
        assert_eq!(r.census[0].first_label, 3);
        assert_eq!(r.census[1].first_label, 4);
        assert!(r.constants.is_some());
        let bad = cantor_report(&spec, Some(0.3));
        assert!(matches!(bad, Err(CantorError::BetaOutOfRange { .. })));
    }
}
