//! Measure specifications on disk: TOML with sections `atoms`, `atom_rules`,
//! `density_pieces`, `infinite_regions` and `cantor`. Any scalar may be a
//! TOML number or a string holding a decimal, `p/q` rational, `inf` or `-inf`.

use std::fmt;
use std::path::Path;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cantor::{generate_cantor, AlphaRule, CantorError, CantorSpec, GapModel, DEFAULT_DEPTH};
use crate::measure::{
    validate_measure, Atom, AtomRule, CheckedMeasure, DensityPiece, MeasureError, Shape, SignedMeasureSpec,
};

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Cantor(#[from] CantorError),
}

/// A scalar read from a spec. Rationals `p/q` are divided once, so the value
/// is the correctly rounded double of the fraction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub f64);

impl Num {
    pub fn parse(s: &str) -> Result<Num, String> {
        let t = s.trim();
        let v = match t {
            "inf" | "+inf" | "infinity" => f64::INFINITY,
            "-inf" | "-infinity" => f64::NEG_INFINITY,
            _ => match t.split_once('/') {
                Some((p, q)) => {
                    let p: i64 = p.trim().parse().map_err(|_| format!("bad numerator in {t:?}"))?;
                    let q: i64 = q.trim().parse().map_err(|_| format!("bad denominator in {t:?}"))?;
                    if q == 0 {
                        return Err(format!("zero denominator in {t:?}"));
                    }
                    p as f64 / q as f64
                }
                None => t.parse().map_err(|_| format!("not a number: {t:?}"))?,
            },
        };
        if v.is_nan() {
            return Err(format!("NaN is not allowed: {t:?}"));
        }
        Ok(Num(v))
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Num;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a string such as \"1/3\" or \"-inf\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Num, E> {
                Ok(Num(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Num, E> {
                Ok(Num(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Num, E> {
                Num::parse(v).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(if self.0 > 0.0 { "inf" } else { "-inf" })
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomEntry {
    pub location: Num,
    pub weight: Num,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeEntry {
    Constant,
    Power { center: Num, exponent: Num },
    Exp { rate: Num },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceEntry {
    pub lo: Num,
    pub hi: Num,
    pub coefficient: Num,
    #[serde(default = "constant_shape")]
    pub shape: ShapeEntry,
}

fn constant_shape() -> ShapeEntry {
    ShapeEntry::Constant
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CantorSection {
    /// Constant proportion; alternatively give `rule`.
    pub alpha: Option<Num>,
    pub rule: Option<AlphaRule>,
    pub depth: Option<u32>,
    pub model: GapModel,
}

impl CantorSection {
    pub fn to_spec(&self) -> Result<CantorSpec, SpecError> {
        let alphas = match (&self.alpha, &self.rule) {
            (Some(a), None) => AlphaRule::Constant { alpha: a.0 },
            (None, Some(r)) => *r,
            _ => {
                return Err(SpecError::Field {
                    field: "cantor".into(),
                    message: "give exactly one of `alpha` and `rule`".into(),
                })
            }
        };
        Ok(CantorSpec { alphas, depth: self.depth.unwrap_or(DEFAULT_DEPTH), model: self.model })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    #[serde(default)]
    pub atoms: Vec<AtomEntry>,
    #[serde(default)]
    pub atom_rules: Vec<AtomRule>,
    #[serde(default)]
    pub density_pieces: Vec<PieceEntry>,
    #[serde(default)]
    pub infinite_regions: Vec<[Num; 2]>,
    pub cantor: Option<CantorSection>,
}

pub fn parse_spec(text: &str) -> Result<MeasureFile, SpecError> {
    toml::from_str(text).map_err(|e| SpecError::Parse(e.to_string()))
}

pub fn load_spec(path: &Path) -> Result<MeasureFile, SpecError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| SpecError::Io { path: path.display().to_string(), source })?;
    parse_spec(&text)
}

impl MeasureFile {
    pub fn to_measure_spec(&self) -> SignedMeasureSpec {
        SignedMeasureSpec {
            atoms: self.atoms.iter().map(|a| Atom { location: a.location.0, weight: a.weight.0 }).collect(),
            rules: self.atom_rules.clone(),
            pieces: self
                .density_pieces
                .iter()
                .map(|p| DensityPiece {
                    lo: p.lo.0,
                    hi: p.hi.0,
                    coefficient: p.coefficient.0,
                    shape: match p.shape {
                        ShapeEntry::Constant => Shape::Constant,
                        ShapeEntry::Power { center, exponent } => {
                            Shape::Power { center: center.0, exponent: exponent.0 }
                        }
                        ShapeEntry::Exp { rate } => Shape::Exp { rate: rate.0 },
                    },
                })
                .collect(),
            infinite_regions: self.infinite_regions.iter().map(|[a, b]| (a.0, b.0)).collect(),
        }
    }

    /// The validated measure. A `cantor` section stands alone.
    pub fn to_measure(&self) -> Result<CheckedMeasure, SpecError> {
        match &self.cantor {
            Some(c) => {
                let others = !self.atoms.is_empty()
                    || !self.atom_rules.is_empty()
                    || !self.density_pieces.is_empty()
                    || !self.infinite_regions.is_empty();
                if others {
                    return Err(SpecError::Field {
                        field: "cantor".into(),
                        message: "a Cantor measure cannot be combined with other sections".into(),
                    });
                }
                Ok(generate_cantor(&c.to_spec()?)?.1)
            }
            None => Ok(validate_measure(self.to_measure_spec())?),
        }
    }

    /// SHA-256 of the canonical JSON form, so formatting does not matter.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("specs serialize");
        hex::encode(Sha256::digest(canonical))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_and_infinities() {
        assert_eq!(Num::parse("1/3").unwrap().0, 1.0 / 3.0);
        assert_eq!(Num::parse(" -2/4 ").unwrap().0, -0.5);
        assert_eq!(Num::parse("-inf").unwrap().0, f64::NEG_INFINITY);
        assert_eq!(Num::parse("0.25").unwrap().0, 0.25);
        assert!(Num::parse("1/0").is_err());
        assert!(Num::parse("one").is_err());
    }

    #[test]
    fn skew_spec_parses() {
        let f = parse_spec("[[atoms]]\nlocation = 0\nweight = \"1/2\"\n").unwrap();
        let m = f.to_measure().unwrap();
        assert_eq!(m.atom_at(0.0), 0.5);
    }

    #[test]
    fn pieces_and_cantor() {
        let f = parse_spec(
            "[[density_pieces]]\nlo = \"-inf\"\nhi = 0\ncoefficient = \"-1/4\"\nshape = { kind = \"power\", center = 0, exponent = -1 }\n",
        )
        .unwrap();
        assert_eq!(f.density_pieces[0].lo.0, f64::NEG_INFINITY);
        let c = parse_spec("[cantor]\nalpha = \"1/3\"\ndepth = 4\nmodel = \"power_law\"\n").unwrap();
        let m = c.to_measure().unwrap();
        assert!(m.cantor().is_some());
    }

    #[test]
    fn errors_name_the_field() {
        let e = parse_spec("[[atoms]]\nlocation = 0\nweight = \"1/x\"\n").unwrap_err().to_string();
        assert!(e.contains("line 3") || e.contains("weight"), "{e}");
        let e = parse_spec("[[atoms]]\nlocation = 0\nwieght = 1\n").unwrap_err().to_string();
        assert!(e.contains("wieght"), "{e}");
        let both = parse_spec("[[atoms]]\nlocation = 0\nweight = 0.5\n[cantor]\nalpha = 0.3\nmodel = \"power_law\"\n")
            .unwrap()
            .to_measure()
            .unwrap_err();
        assert!(matches!(both, SpecError::Field { .. }));
    }

    #[test]
    fn hash_ignores_formatting() {
        let a = parse_spec("[[atoms]]\nlocation = 0\nweight = 0.5\n").unwrap();
        let b = parse_spec("# comment\n[[atoms]]\nweight   = \"1/2\"\nlocation = 0.0\n").unwrap();
        assert_eq!(a.hash(), b.hash());
    }
}
