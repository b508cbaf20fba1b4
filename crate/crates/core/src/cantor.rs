//! Generalized Cantor sets, the measure with `+1` atoms at the left ends and
//! `−1` atoms at the right ends of the gaps, and the regime analysis for
//! constant removal proportions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::{CantorStructure, CheckedMeasure, Gap, IntervalDecomposition};

pub const DEFAULT_DEPTH: u32 = 20;
pub const MAX_DEPTH: u32 = 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CantorError {
    #[error("depth {depth} outside 1..={max}")]
    DepthOverflow { depth: u32, max: u32 },
    #[error("invalid removal proportions: {0}")]
    InvalidAlpha(String),
    #[error("power-law gaps no longer fit inside their segments at level {level}")]
    GapsDoNotFit { level: u32 },
    #[error("β = {beta} must lie in ({lo}, {hi})")]
    BetaOutOfRange { beta: f64, lo: f64, hi: f64 },
    #[error("{0}")]
    ModelMismatch(String),
}

/// The proportions `α_j` removed at level `j ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum AlphaRule {
    Constant {
        alpha: f64,
    },
    /// `α_j = first·ratio^{j−1}`.
    Geometric {
        first: f64,
        ratio: f64,
    },
    /// `α_j = scale·j^{−exponent}`.
    Power {
        scale: f64,
        exponent: f64,
    },
}

impl AlphaRule {
    pub fn alpha(&self, j: u32) -> f64 {
        match *self {
            AlphaRule::Constant { alpha } => alpha,
            AlphaRule::Geometric { first, ratio } => first * ratio.powi(j as i32 - 1),
            AlphaRule::Power { scale, exponent } => scale * (j as f64).powf(-exponent),
        }
    }

    fn constant(&self) -> Option<f64> {
        match *self {
            AlphaRule::Constant { alpha } => Some(alpha),
            _ => None,
        }
    }

    fn validate(&self, depth: u32) -> Result<(), CantorError> {
        let bad = (1..=depth.max(64)).find(|&j| !(self.alpha(j) > 0.0 && self.alpha(j) < 1.0));
        match bad {
            Some(j) => Err(CantorError::InvalidAlpha(format!("α_{j} = {} is outside (0, 1)", self.alpha(j)))),
            None => Ok(()),
        }
    }

    /// `∏_j (1 − α_j)`, the Lebesgue measure of the limit set under the
    /// middle-proportion model.
    fn retained_product(&self) -> f64 {
        match *self {
            AlphaRule::Constant { .. } => 0.0,
            // the terms are eventually below 1e-300 or the product has settled
            _ => {
                let mut log = 0.0;
                for j in 1..=2_000_000u32 {
                    let a = self.alpha(j);
                    log += (-a).ln_1p();
                    if a < 1e-17 {
                        break;
                    }
                }
                log.exp()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapModel {
    /// Remove the open middle `α_j` proportion of every remaining segment.
    MiddleProportion,
    /// Gaps at level `p` have length `α^p`, centred in their segments.
    PowerLaw,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorSpec {
    pub alphas: AlphaRule,
    #[serde(default = "default_depth")]
    pub depth: u32,
    pub model: GapModel,
}

fn default_depth() -> u32 {
    DEFAULT_DEPTH
}

impl CantorSpec {
    pub fn constant(alpha: f64, model: GapModel) -> Self {
        CantorSpec { alphas: AlphaRule::Constant { alpha }, depth: DEFAULT_DEPTH, model }
    }

    pub fn with_depth(mut self, depth: u32) -> Self {
        self.depth = depth;
        self
    }

    /// Length of each gap at level `p`.
    pub fn gap_length(&self, p: u32) -> f64 {
        match self.model {
            GapModel::PowerLaw => self.alphas.alpha(1).powi(p as i32),
            GapModel::MiddleProportion => {
                let kept: f64 = (1..p).map(|q| 0.5 * (1.0 - self.alphas.alpha(q))).product();
                self.alphas.alpha(p) * kept
            }
        }
    }

    /// Lebesgue measure of the limit set.
    pub fn limit_measure(&self) -> f64 {
        match self.model {
            GapModel::MiddleProportion => self.alphas.retained_product(),
            GapModel::PowerLaw => {
                let a = self.alphas.alpha(1);
                if a >= 0.5 {
                    0.0
                } else {
                    (1.0 - a / (1.0 - 2.0 * a)).max(0.0)
                }
            }
        }
    }

    fn validate(&self) -> Result<(), CantorError> {
        if self.depth == 0 || self.depth > MAX_DEPTH {
            return Err(CantorError::DepthOverflow { depth: self.depth, max: MAX_DEPTH });
        }
        if self.model == GapModel::PowerLaw && self.alphas.constant().is_none() {
            return Err(CantorError::ModelMismatch("the power-law model needs a constant α".into()));
        }
        self.alphas.validate(self.depth)
    }
}

/// First label at level `p`: level `p` holds labels `2 + 2^{p−1}, …, 1 + 2^p`.
pub fn first_label(p: u32) -> u64 {
    2 + (1u64 << (p - 1))
}

/// Gaps to the spec's depth and the measure `Σ δ_{a_n} − Σ δ_{b_n}` over the
/// gaps, with `−1` at 0 and `+1` at 1.
pub fn generate_cantor(spec: &CantorSpec) -> Result<(IntervalDecomposition, CheckedMeasure), CantorError> {
    spec.validate()?;
    let mut segments: Vec<(f64, f64)> = vec![(0.0, 1.0)];
    let mut gaps = Vec::with_capacity((1usize << spec.depth) - 1);
    for p in 1..=spec.depth {
        let label0 = first_label(p);
        let mut next = Vec::with_capacity(segments.len() * 2);
        for (k, &(u, v)) in segments.iter().enumerate() {
            let len = match spec.model {
                GapModel::MiddleProportion => spec.alphas.alpha(p) * (v - u),
                GapModel::PowerLaw => spec.gap_length(p),
            };
            if !(len < v - u) {
                return Err(CantorError::GapsDoNotFit { level: p });
            }
            let side = 0.5 * (v - u - len);
            let (a, b) = (u + side, v - side);
            gaps.push(Gap { a, b, level: p, label: label0 + k as u64 });
            next.push((u, a));
            next.push((b, v));
        }
        segments = next;
    }
    gaps.sort_by(|x, y| x.a.total_cmp(&y.a));
    let m =
        CheckedMeasure::from_cantor(CantorStructure { gaps, depth: spec.depth, limit_measure: spec.limit_measure() });
    let d = m.locally_finite_decomposition().expect("Cantor decompositions are explicit");
    Ok((d, m))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CantorRegime {
    Unique,
    InfinitelyManyIrreducible,
    Unknown,
}

impl std::fmt::Display for CantorRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CantorRegime::Unique => "unique",
            CantorRegime::InfinitelyManyIrreducible => "infinitely_many_irreducible",
            CantorRegime::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorVerdict {
    pub regime: CantorRegime,
    /// Level ratio of `Σ_p 2^{p−1}·ℓ_p^{1/2}`.
    pub ratio: f64,
    /// Whether the ratio is exact rather than read off level sums.
    pub analytic: bool,
    /// A constant `β` producing irreducible solutions, when one exists.
    pub witness_beta: Option<f64>,
    pub limit_measure: f64,
    /// Disagreement between this verdict and the general gluing test.
    pub caveat: Option<String>,
}

/// Uniqueness against irreducibility from the series `Σ_n |b_n − a_n|^{1/2}`:
/// divergence leaves no admissible constants connecting `I_1` to `I_2`,
/// convergence admits a whole family of them.
pub fn cantor_verdict(spec: &CantorSpec, depth_for_series: u32) -> Result<CantorVerdict, CantorError> {
    spec.validate()?;
    let limit_measure = spec.limit_measure();
    let (ratio, analytic) = match (spec.model, spec.alphas.constant()) {
        (GapModel::PowerLaw, Some(a)) => (2.0 * a.sqrt(), true),
        (GapModel::MiddleProportion, Some(a)) => ((2.0 * (1.0 - a)).sqrt(), true),
        _ => {
            let j = depth_for_series.max(3);
            let term = |p: u32| 2f64.powi(p as i32 - 1) * spec.gap_length(p).sqrt();
            (term(j) / term(j - 1), false)
        }
    };
    let regime = if spec.model == GapModel::MiddleProportion && limit_measure > 0.0 {
        // every stretch between two gaps meets the limit set in positive measure
        CantorRegime::Unique
    } else if analytic {
        if ratio < 1.0 {
            CantorRegime::InfinitelyManyIrreducible
        } else {
            CantorRegime::Unique
        }
    } else if ratio < 1.0 - 1e-3 {
        CantorRegime::InfinitelyManyIrreducible
    } else if ratio >= 1.0 - 1e-6 {
        CantorRegime::Unique
    } else {
        CantorRegime::Unknown
    };
    let witness_beta = match (regime, spec.model, spec.alphas.constant()) {
        (CantorRegime::InfinitelyManyIrreducible, GapModel::PowerLaw, Some(a)) => Some(0.5 * (2.0 * a + 0.5)),
        _ => None,
    };
    let caveat =
        (spec.model == GapModel::PowerLaw && limit_measure > 0.0 && regime != CantorRegime::Unique).then(|| {
            format!(
                "centred power-law gaps leave a limit set of Lebesgue measure {limit_measure:.6}; \
             the general test needs a null set between connected intervals and finds no connection"
            )
        });
    Ok(CantorVerdict { regime, ratio, analytic, witness_beta, limit_measure, caveat })
}

/// A geometric series check `Σ_p K·r^p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesCheck {
    pub name: String,
    pub ratio: f64,
    pub converges: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorConstants {
    pub beta: f64,
    /// `c_n` in the order of the interval decomposition.
    pub per_interval: Vec<f64>,
    pub checks: Vec<SeriesCheck>,
}

/// `c_1 = c_2 = c_3 = 1` and `c_n = β^{p−1}` for gaps at level `p`, valid for
/// `2α < β < 1/2` under the power-law model.
pub fn cantor_constants(spec: &CantorSpec, beta: f64) -> Result<CantorConstants, CantorError> {
    spec.validate()?;
    let (GapModel::PowerLaw, Some(alpha)) = (spec.model, spec.alphas.constant()) else {
        return Err(CantorError::ModelMismatch("the β construction needs the power-law model with constant α".into()));
    };
    let (lo, hi) = (2.0 * alpha, 0.5);
    if !(beta > lo && beta < hi) {
        return Err(CantorError::BetaOutOfRange { beta, lo, hi });
    }
    let (d, _) = generate_cantor(spec)?;
    let per_interval = d.intervals.iter().map(|iv| iv.level.map_or(1.0, |p| beta.powi(p as i32 - 1))).collect();
    // level p holds 2^{p−1} gaps of length α^p with constant β^{p−1}
    let check = |name: &str, ratio: f64| SeriesCheck { name: name.into(), ratio, converges: ratio < 1.0 };
    let checks = vec![
        check("sum c_n |b_n - a_n|", 2.0 * alpha * beta),
        check("sum |b_n - a_n| / c_n", 2.0 * alpha / beta),
        check("sum c_n", 2.0 * beta),
    ];
    Ok(CantorConstants { beta, per_interval, checks })
}
