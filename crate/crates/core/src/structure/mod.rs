//! Decisions built on the profiles: barrier labels, the existence conditions,
//! scale connection and the constants `c_n`, effective intervals, and the
//! density-side verdicts.

use std::sync::Arc;

use thiserror::Error;

use crate::measure::{CheckedMeasure, IntervalDecomposition, MeasureError};
use crate::num::Confidence;
use crate::par;
use crate::profile::{build_profile, DensityProfile, IntervalStats, ProfileError};

mod barrier;
mod density;
mod effective;
mod existence;
mod raw;

pub use barrier::{
    classify_all, classify_barrier, BarrierClassification, BarrierEntry, BarrierEvidence, BarrierLabel, BarrierSide,
    LabelRule,
};
pub use density::{measure_density_roundtrip, Density, RecoveredMeasure, SkewDensity};
pub use effective::{
    check_conservative, explosion_study, glue_effective_intervals, Conservativeness, EffectiveInterval,
    EffectiveIntervalSet, ExplosionStudy, Truncation,
};
pub use existence::{
    check_existence, check_uniqueness_irreducibility, constant_sums, construct_constants, decide_scale_connectable,
    Condition, ConditionVerdict, ConstantsTarget, ExistenceReport,
};
pub use raw::{
    density_to_effective_intervals, semimartingale_verdict, JumpRule, NuSummary, RawDensity, RawPiece,
    SemimartingaleVerdict, StepRule,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StructureError {
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error("{0} carries no atom of weight ±1")]
    NotABarrier(f64),
    #[error("barrier {0} is not isolated: no interval ends there on both sides")]
    NonIsolatedBarrier(f64),
    #[error("existence conditions fail: {0}")]
    ConditionsNotMet(String),
    #[error("density is not of bounded variation near {0}")]
    NotBoundedVariation(f64),
    #[error("density does not vanish on its singular set: {0}")]
    AssumptionAViolated(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
}

/// A measure together with its decomposition `G = ∪ (a_n, b_n)`, the profile
/// on every interval and the statistics `A_n`, `B_n`, `V_n`.
#[derive(Debug)]
pub struct Structure {
    measure: CheckedMeasure,
    decomposition: IntervalDecomposition,
    profiles: Vec<Result<Arc<DensityProfile>, ProfileError>>,
    stats: Vec<Option<IntervalStats>>,
}

impl Structure {
    pub fn new(m: &CheckedMeasure) -> Result<Self, StructureError> {
        let decomposition = m.locally_finite_decomposition()?;
        let profiles = par::map(&decomposition.intervals, |i| build_profile(m, i).map(Arc::new));
        let stats = par::map(&profiles, |p| p.as_ref().ok().map(|p| p.integral_stats()));
        Ok(Structure { measure: m.clone(), decomposition, profiles, stats })
    }

    pub fn measure(&self) -> &CheckedMeasure {
        &self.measure
    }

    pub fn decomposition(&self) -> &IntervalDecomposition {
        &self.decomposition
    }

    pub fn profile(&self, i: usize) -> Result<&Arc<DensityProfile>, &ProfileError> {
        self.profiles[i].as_ref()
    }

    pub fn stats(&self, i: usize) -> Option<&IntervalStats> {
        self.stats[i].as_ref()
    }

    pub fn len(&self) -> usize {
        self.decomposition.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decomposition.intervals.is_empty()
    }

    /// Weakest confidence among the interval statistics.
    pub fn confidence(&self) -> Confidence {
        self.stats
            .iter()
            .flatten()
            .flat_map(|s| [s.integral, s.inverse, s.variation])
            .map(|x| x.confidence)
            .min()
            .unwrap_or(Confidence::Certified)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use crate::measure::*;

    pub fn skew(alpha: f64) -> CheckedMeasure {
        validate_measure(SignedMeasureSpec {
            atoms: vec![Atom { location: 0.0, weight: 2.0 * alpha - 1.0 }],
            ..Default::default()
        })
        .unwrap()
    }

    /// Unit atom at 0 with density `−(α/2)|z|⁻¹` on the negative half-line.
    pub fn power_barrier(alpha: f64) -> CheckedMeasure {
        validate_measure(SignedMeasureSpec {
            atoms: vec![Atom { location: 0.0, weight: 1.0 }],
            pieces: vec![DensityPiece {
                lo: f64::NEG_INFINITY,
                hi: 0.0,
                coefficient: -0.5 * alpha,
                shape: Shape::Power { center: 0.0, exponent: -1.0 },
            }],
            ..Default::default()
        })
        .unwrap()
    }

    /// Unit atom at 0 with families on `−1/2k` and `−1/(2k+1)` whose jumps
    /// multiply ϱ by `((k+1)/k)^α` and `(k/(k+1))^{2α}`.
    pub fn jump_power_barrier(alpha: f64) -> CheckedMeasure {
        let rule = |name: &str, shift: f64, sign: f64, gamma: f64| AtomRule {
            name: name.into(),
            location: LocationLaw::Reciprocal { anchor: 0.0, scale: -0.5, shift },
            weight: WeightLaw::JumpPower { sign, u: 1.0, v: 0.0, gamma },
            start: 1,
            end: None,
            tail: TailCertificate::Divergent,
            accumulation: Some(0.0),
        };
        validate_measure(SignedMeasureSpec {
            atoms: vec![Atom { location: 0.0, weight: 1.0 }],
            rules: vec![rule("up", 0.0, 1.0, alpha), rule("down", 0.5, -1.0, 2.0 * alpha)],
            ..Default::default()
        })
        .unwrap()
    }

    pub fn oscillating_barrier() -> CheckedMeasure {
        validate_measure(crate::measure::tests::oscillating_families()).unwrap()
    }

    pub fn unit_atom() -> CheckedMeasure {
        validate_measure(SignedMeasureSpec { atoms: vec![Atom { location: 0.0, weight: 1.0 }], ..Default::default() })
            .unwrap()
    }
}
