//! Extended reals with a confidence flag and three-valued verdicts.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Add;

/// How a value or verdict was obtained. `Numeric` is weaker than `Certified`,
/// so combining flags takes the minimum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Confidence {
    Numeric,
    Certified,
}

impl Confidence {
    pub fn weakest(self, other: Confidence) -> Confidence {
        self.min(other)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extent {
    Finite(f64),
    Infinite,
    Unknown,
}

/// A nonnegative quantity that may be `+∞` or undetermined.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtendedReal {
    pub extent: Extent,
    pub confidence: Confidence,
}

impl ExtendedReal {
    pub const ZERO: ExtendedReal = ExtendedReal { extent: Extent::Finite(0.0), confidence: Confidence::Certified };

    pub fn finite(v: f64) -> Self {
        Self { extent: Extent::Finite(v), confidence: Confidence::Certified }
    }

    pub fn numeric(v: f64) -> Self {
        Self { extent: Extent::Finite(v), confidence: Confidence::Numeric }
    }

    pub fn infinite() -> Self {
        Self { extent: Extent::Infinite, confidence: Confidence::Certified }
    }

    pub fn numeric_infinite() -> Self {
        Self { extent: Extent::Infinite, confidence: Confidence::Numeric }
    }

    pub fn unknown() -> Self {
        Self { extent: Extent::Unknown, confidence: Confidence::Numeric }
    }

    pub fn with_confidence(mut self, c: Confidence) -> Self {
        self.confidence = self.confidence.weakest(c);
        self
    }

    pub fn value(&self) -> Option<f64> {
        match self.extent {
            Extent::Finite(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> Verdict {
        match self.extent {
            Extent::Finite(_) => Verdict::True,
            Extent::Infinite => Verdict::False,
            Extent::Unknown => Verdict::Unknown,
        }
    }

    pub fn is_infinite(&self) -> Verdict {
        self.is_finite().not()
    }

    /// Multiply by a positive constant.
    pub fn scale(self, c: f64) -> Self {
        match self.extent {
            Extent::Finite(v) => Self { extent: Extent::Finite(v * c), ..self },
            _ => self,
        }
    }

    /// Sum of nonnegative quantities; an infinite summand dominates an unknown one.
    pub fn sum<I: IntoIterator<Item = ExtendedReal>>(it: I) -> Self {
        it.into_iter().fold(Self::ZERO, |a, b| a + b)
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;

    fn add(self, rhs: ExtendedReal) -> ExtendedReal {
        use Extent::*;
        match (self.extent, rhs.extent) {
            (Finite(a), Finite(b)) => {
                ExtendedReal { extent: Finite(a + b), confidence: self.confidence.weakest(rhs.confidence) }
            }
            (Infinite, Infinite) => ExtendedReal { extent: Infinite, confidence: self.confidence.max(rhs.confidence) },
            (Infinite, _) => self,
            (_, Infinite) => rhs,
            _ => ExtendedReal::unknown(),
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flag = match self.confidence {
            Confidence::Certified => "",
            Confidence::Numeric => " (numeric)",
        };
        match self.extent {
            Extent::Finite(v) => write!(f, "{v}{flag}"),
            Extent::Infinite => write!(f, "inf{flag}"),
            Extent::Unknown => write!(f, "unknown"),
        }
    }
}

/// Kleene three-valued truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    True,
    False,
    Unknown,
}

impl Verdict {
    pub fn from_bool(b: bool) -> Self {
        if b {
            Verdict::True
        } else {
            Verdict::False
        }
    }

    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (False, _) | (_, False) => False,
            (True, True) => True,
            _ => Unknown,
        }
    }

    pub fn or(self, other: Verdict) -> Verdict {
        self.not().and(other.not()).not()
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Verdict {
        match self {
            Verdict::True => Verdict::False,
            Verdict::False => Verdict::True,
            Verdict::Unknown => Verdict::Unknown,
        }
    }

    pub fn all<I: IntoIterator<Item = Verdict>>(it: I) -> Verdict {
        it.into_iter().fold(Verdict::True, Verdict::and)
    }

    pub fn any<I: IntoIterator<Item = Verdict>>(it: I) -> Verdict {
        it.into_iter().fold(Verdict::False, Verdict::or)
    }

    pub fn is_true(self) -> bool {
        self == Verdict::True
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::True => "true",
            Verdict::False => "false",
            Verdict::Unknown => "unknown",
        })
    }
}

/// A verdict together with the weakest confidence of its inputs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flagged {
    pub verdict: Verdict,
    pub confidence: Confidence,
}

impl Flagged {
    pub fn certified(v: Verdict) -> Self {
        Self { verdict: v, confidence: Confidence::Certified }
    }

    pub fn numeric(v: Verdict) -> Self {
        Self { verdict: v, confidence: Confidence::Numeric }
    }

    pub fn and(self, other: Flagged) -> Flagged {
        Flagged { verdict: self.verdict.and(other.verdict), confidence: self.confidence.weakest(other.confidence) }
    }

    pub fn not(self) -> Flagged {
        Flagged { verdict: self.verdict.not(), ..self }
    }
}

impl From<ExtendedReal> for Flagged {
    /// Finiteness of the quantity.
    fn from(x: ExtendedReal) -> Self {
        Flagged { verdict: x.is_finite(), confidence: x.confidence }
    }
}
