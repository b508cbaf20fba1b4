//! Signed measures `μ = μ⁺ − μ⁻` made of atoms, closed-form atom families and
//! piecewise closed-form densities, together with `|μ|`-masses and the open
//! set `G` where `|μ|` is locally finite.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::num::{Confidence, ExtendedReal, Extent};
use crate::quad;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("atom at {location} has weight {weight} with |weight| > 1")]
    AtomMagnitude { location: f64, weight: f64 },
    #[error("two atoms share location {0}")]
    DuplicateAtom(f64),
    #[error("rule `{rule}`: inconsistent tail certificate: {reason}")]
    InconsistentTailCertificate { rule: String, reason: String },
    #[error("rule `{rule}`: {reason}")]
    InvalidRule { rule: String, reason: String },
    #[error("density piece on ({lo}, {hi}): {reason}")]
    InvalidDensityPiece { lo: f64, hi: f64, reason: String },
    #[error("density pieces ({0}, {1}) and ({2}, {3}) overlap")]
    OverlappingDensityPieces(f64, f64, f64, f64),
    #[error("rule `{0}` generates infinitely many atoms but declares no accumulation point")]
    UndecidableLocalFiniteness(String),
    #[error("non-finite number in measure specification")]
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

/// Location of the `k`-th atom of a family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum LocationLaw {
    /// `anchor + scale / (k + shift)`
    Reciprocal { anchor: f64, scale: f64, shift: f64 },
    /// `anchor + scale · ratio^k`, `0 < ratio < 1`
    Geometric { anchor: f64, scale: f64, ratio: f64 },
}

/// Weight `μ({z_k})` of the `k`-th atom of a family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum WeightLaw {
    Constant {
        value: f64,
    },
    /// `value · (k + shift)^(−exponent)`
    Power {
        value: f64,
        shift: f64,
        exponent: f64,
    },
    /// `value · ratio^k`, `0 < ratio < 1`
    Geometric {
        value: f64,
        ratio: f64,
    },
    /// `sign · (k + num_shift) / (k + den_shift)`
    Ratio {
        sign: f64,
        num_shift: f64,
        den_shift: f64,
    },
    /// `sign · (J − 1)/(J + 1)` with `J = ((k + u)/(k + v))^gamma`, so the
    /// atom multiplies the profile by exactly `J^sign`.
    JumpPower {
        sign: f64,
        u: f64,
        v: f64,
        gamma: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "decay", rename_all = "snake_case")]
pub enum TailDecay {
    /// bound `constant · K^(−exponent)`
    Power { exponent: f64 },
    /// bound `constant · ratio^K`
    Geometric { ratio: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailCertificate {
    /// `Σ_{k>K} |w_k| ≤ constant · decay(K)` when given.
    Summable {
        bound: Option<(f64, TailDecay)>,
    },
    Divergent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRule {
    pub name: String,
    pub location: LocationLaw,
    pub weight: WeightLaw,
    pub start: u64,
    /// Last index (inclusive); `None` for an infinite family.
    pub end: Option<u64>,
    pub tail: TailCertificate,
    pub accumulation: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Constant,
    /// `|x − center|^exponent`
    Power {
        center: f64,
        exponent: f64,
    },
    /// `e^(rate·x)`
    Exp {
        rate: f64,
    },
}

/// `coefficient · shape(x)` on the open interval `(lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityPiece {
    pub lo: f64,
    pub hi: f64,
    pub coefficient: f64,
    pub shape: Shape,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SignedMeasureSpec {
    pub atoms: Vec<Atom>,
    pub rules: Vec<AtomRule>,
    pub pieces: Vec<DensityPiece>,
    /// Closed intervals on which `|μ|` is declared infinite.
    pub infinite_regions: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Total,
    Plus,
    Minus,
}

/// An interval with optional closed ends; endpoints may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Span {
    pub fn open(lo: f64, hi: f64) -> Self {
        Span { lo, hi, lo_closed: false, hi_closed: false }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Span { lo, hi, lo_closed: lo.is_finite(), hi_closed: hi.is_finite() }
    }

    /// `(lo, hi]`
    pub fn left_open(lo: f64, hi: f64) -> Self {
        Span { lo, hi, lo_closed: false, hi_closed: hi.is_finite() }
    }

    /// `[lo, hi)`
    pub fn right_open(lo: f64, hi: f64) -> Self {
        Span { lo, hi, lo_closed: lo.is_finite(), hi_closed: false }
    }

    pub fn contains(&self, x: f64) -> bool {
        (x > self.lo || (self.lo_closed && x == self.lo)) && (x < self.hi || (self.hi_closed && x == self.hi))
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }
}

// ---------------------------------------------------------------------------
// atom families

const EXPLICIT_TERMS: u64 = 1 << 16;
const PREFIX_CACHE: u64 = 1 << 20;

/// A validated infinite atom family.
#[derive(Debug)]
pub struct Family {
    pub rule: AtomRule,
    /// Accumulation point.
    pub point: f64,
    /// `−1` when atoms lie left of the accumulation point, `+1` otherwise.
    pub side: f64,
    pub summable: bool,
    /// Sign of every weight.
    pub sign: f64,
    prefix: OnceLock<Vec<f64>>,
}

impl Family {
    pub fn location(&self, k: f64) -> f64 {
        match self.rule.location {
            LocationLaw::Reciprocal { anchor, scale, shift } => anchor + scale / (k + shift),
            LocationLaw::Geometric { anchor, scale, ratio } => anchor + scale * ratio.powf(k),
        }
    }

    /// Real index whose location is `x`; `x` must lie on the family's side.
    fn index_of(&self, x: f64) -> f64 {
        match self.rule.location {
            LocationLaw::Reciprocal { anchor, scale, shift } => scale / (x - anchor) - shift,
            LocationLaw::Geometric { anchor, scale, ratio } => ((x - anchor) / scale).ln() / ratio.ln(),
        }
    }

    pub fn weight(&self, k: f64) -> f64 {
        weight_at(&self.rule.weight, k)
    }

    /// `ln((1 + w_k)/(1 − w_k))`, evaluated without cancellation.
    pub fn log_factor(&self, k: f64) -> f64 {
        log_factor_at(&self.rule.weight, k)
    }

    /// Indices whose atoms lie in `span`; the upper end is `None` when the
    /// span reaches the accumulation point.
    pub fn index_range(&self, span: &Span) -> Option<(u64, Option<u64>)> {
        let start = self.rule.start;
        let p = self.point;
        // locations increase with k when the atoms sit left of the point
        let increasing = self.side < 0.0;
        let inside = |k: u64| span.contains(self.location(k as f64));
        let before_far = |k: u64| {
            let x = self.location(k as f64);
            if increasing {
                x < span.lo || (x == span.lo && !span.lo_closed)
            } else {
                x > span.hi || (x == span.hi && !span.hi_closed)
            }
        };
        let far = if increasing { span.lo } else { span.hi };
        let first_loc = self.location(start as f64);
        let mut first = if (increasing && far < first_loc) || (!increasing && far > first_loc) {
            start
        } else if (increasing && far >= p) || (!increasing && far <= p) {
            return None;
        } else {
            (self.index_of(far).floor().max(start as f64) as u64).saturating_sub(1).max(start)
        };
        while before_far(first) {
            first += 1;
        }
        if !inside(first) {
            return None;
        }
        let near = if increasing { span.hi } else { span.lo };
        if (increasing && near >= p) || (!increasing && near <= p) {
            return Some((first, None));
        }
        let mut last = (self.index_of(near).floor().max(first as f64) as u64).saturating_add(1);
        while last > first && !inside(last) {
            last -= 1;
        }
        while inside(last + 1) {
            last += 1;
        }
        Some((first, Some(last)))
    }

    fn prefix(&self) -> &Vec<f64> {
        self.prefix.get_or_init(|| {
            let mut acc = 0.0;
            let mut out = Vec::with_capacity(PREFIX_CACHE as usize + 1);
            out.push(0.0);
            for i in 0..PREFIX_CACHE {
                acc += self.log_factor((self.rule.start + i) as f64);
                out.push(acc);
            }
            out
        })
    }

    /// `Σ_{k=k1}^{k2} ln J_k`, `k2 = None` meaning up to infinity (only for
    /// summable families).
    pub fn log_factor_sum(&self, k1: u64, k2: Option<u64>) -> f64 {
        let s = self.rule.start;
        let cap = s + PREFIX_CACHE - 1;
        match k2 {
            Some(k2) if k2 < k1 => 0.0,
            Some(k2) if k2 <= cap => {
                let p = self.prefix();
                p[(k2 - s + 1) as usize] - p[(k1 - s) as usize]
            }
            _ if k1 <= cap => {
                let p = self.prefix();
                let head = p[(cap - s + 1) as usize] - p[(k1 - s) as usize];
                head + range_sum(|k| self.log_factor(k), cap + 1, k2)
            }
            _ => range_sum(|k| self.log_factor(k), k1, k2),
        }
    }

    pub fn abs_weight_sum(&self, k1: u64, k2: Option<u64>) -> f64 {
        range_sum(|k| self.weight(k).abs(), k1, k2)
    }
}

impl Clone for Family {
    fn clone(&self) -> Self {
        Family {
            rule: self.rule.clone(),
            point: self.point,
            side: self.side,
            summable: self.summable,
            sign: self.sign,
            prefix: OnceLock::new(),
        }
    }
}

fn weight_at(law: &WeightLaw, k: f64) -> f64 {
    match *law {
        WeightLaw::Constant { value } => value,
        WeightLaw::Power { value, shift, exponent } => value * (k + shift).powf(-exponent),
        WeightLaw::Geometric { value, ratio } => value * ratio.powf(k),
        WeightLaw::Ratio { sign, num_shift, den_shift } => sign * (k + num_shift) / (k + den_shift),
        WeightLaw::JumpPower { sign, u, v, gamma } => {
            let lj = gamma * ((u - v) / (k + v)).ln_1p();
            sign * (0.5 * lj).tanh()
        }
    }
}

fn log_factor_at(law: &WeightLaw, k: f64) -> f64 {
    match *law {
        WeightLaw::Ratio { sign, num_shift, den_shift } => {
            sign * ((2.0 * k + num_shift + den_shift) / (den_shift - num_shift)).ln()
        }
        WeightLaw::JumpPower { sign, u, v, gamma } => sign * gamma * ((u - v) / (k + v)).ln_1p(),
        _ => 2.0 * weight_at(law, k).atanh(),
    }
}

/// `Σ_{k=k1}^{k2} f(k)` for a smooth, eventually monotone `f`: explicit terms
/// first, then Euler–Maclaurin with the integral by quadrature.
pub fn range_sum<F: Fn(f64) -> f64>(f: F, k1: u64, k2: Option<u64>) -> f64 {
    if let Some(k2) = k2 {
        if k2 < k1 {
            return 0.0;
        }
    }
    let explicit_end = match k2 {
        Some(k2) => k2.min(k1 + EXPLICIT_TERMS - 1),
        None => k1 + EXPLICIT_TERMS - 1,
    };
    let mut total = 0.0;
    let mut k = k1;
    while k <= explicit_end {
        let t = f(k as f64);
        total += t;
        if k2.is_none() && t.abs() < 1e-30 * total.abs().max(1e-300) && k > k1 + 64 {
            return total;
        }
        k += 1;
    }
    let m = explicit_end + 1;
    match k2 {
        Some(k2) if k2 < m => total,
        Some(k2) => {
            let (a, b) = (m as f64, k2 as f64);
            let integral = quad::finite(&f, a, b, 1e-18).value;
            let d = |x: f64| 0.5 * (f(x + 1.0) - f(x - 1.0));
            total + integral + 0.5 * (f(a) + f(b)) + (d(b) - d(a)) / 12.0
        }
        None => {
            let a = m as f64;
            let integral = quad::to_pos_infinity(&f, a, 1e-18).value;
            let d = |x: f64| 0.5 * (f(x + 1.0) - f(x - 1.0));
            total + integral + 0.5 * f(a) - d(a) / 12.0
        }
    }
}

// ---------------------------------------------------------------------------
// density pieces

impl DensityPiece {
    pub fn density(&self, x: f64) -> f64 {
        self.coefficient * self.shape_at(x)
    }

    fn shape_at(&self, x: f64) -> f64 {
        match self.shape {
            Shape::Constant => 1.0,
            Shape::Power { center, exponent } => (x - center).abs().powf(exponent),
            Shape::Exp { rate } => (rate * x).exp(),
        }
    }

    pub fn sign(&self) -> f64 {
        self.coefficient.signum()
    }

    /// True when the power singularity sits at a finite end of the piece.
    pub fn singular_end(&self) -> Option<f64> {
        match self.shape {
            Shape::Power { center, exponent } if exponent <= -1.0 => {
                if center == self.lo || center == self.hi {
                    Some(center)
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// `∫_u^v shape` over `(u, v) ⊂ (lo, hi)`, possibly infinite.
    pub fn shape_integral(&self, u: f64, v: f64) -> f64 {
        let u = u.max(self.lo);
        let v = v.min(self.hi);
        if !(v > u) {
            return 0.0;
        }
        match self.shape {
            Shape::Constant => v - u,
            Shape::Exp { rate } => {
                if rate == 0.0 {
                    v - u
                } else {
                    // (e^{rv} − e^{ru}) / r, computed as e^{ru}·expm1(r(v−u))/r
                    let ru = rate * u;
                    if !v.is_finite() || !u.is_finite() {
                        let ev = if v.is_finite() {
                            (rate * v).exp()
                        } else if rate > 0.0 {
                            f64::INFINITY
                        } else {
                            0.0
                        };
                        let eu = if u.is_finite() {
                            ru.exp()
                        } else if rate > 0.0 {
                            0.0
                        } else {
                            f64::INFINITY
                        };
                        (ev - eu) / rate
                    } else {
                        ru.exp() * (rate * (v - u)).exp_m1() / rate
                    }
                }
            }
            Shape::Power { center, exponent: p } => {
                // distances from the center, both on the same side
                let (d1, d2) = if center <= u { (u - center, v - center) } else { (center - v, center - u) };
                power_antiderivative(d1, d2, p)
            }
        }
    }

    /// Signed `μ_c`-mass of `(u, v)`.
    pub fn signed_integral(&self, u: f64, v: f64) -> f64 {
        self.coefficient * self.shape_integral(u, v)
    }
}

/// `∫_{d1}^{d2} t^p dt` for `0 ≤ d1 < d2 ≤ ∞`.
fn power_antiderivative(d1: f64, d2: f64, p: f64) -> f64 {
    if p == -1.0 {
        if d1 == 0.0 || !d2.is_finite() {
            return f64::INFINITY;
        }
        return (d2 / d1).ln();
    }
    let q = p + 1.0;
    if q < 0.0 && d1 == 0.0 {
        return f64::INFINITY;
    }
    if q > 0.0 && !d2.is_finite() {
        return f64::INFINITY;
    }
    let f = |d: f64| if d.is_finite() { d.powf(q) / q } else { 0.0 };
    f(d2) - f(d1)
}

// ---------------------------------------------------------------------------
// Cantor structure

/// Gap of a generalized Cantor set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub a: f64,
    pub b: f64,
    /// Level `p ≥ 1`; level-`p` gaps number `2^(p−1)`.
    pub level: u32,
    /// Index in the enumeration where `1` and `2` are the unbounded intervals.
    pub label: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorStructure {
    /// Gaps sorted by position.
    pub gaps: Vec<Gap>,
    pub depth: u32,
    /// Lebesgue measure of the limit set.
    pub limit_measure: f64,
}

impl CantorStructure {
    fn gap_containing(&self, x: f64) -> Option<&Gap> {
        let i = self.gaps.partition_point(|g| g.b < x);
        self.gaps.get(i).filter(|g| g.a <= x && x <= g.b)
    }

    fn atom_at(&self, z: f64) -> f64 {
        if z == 0.0 {
            return -1.0;
        }
        if z == 1.0 {
            return 1.0;
        }
        match self.gap_containing(z) {
            Some(g) if g.a == z => 1.0,
            Some(g) if g.b == z => -1.0,
            _ => 0.0,
        }
    }

    /// `|μ|`-type mass of a span: infinite when the open span meets the limit set.
    fn mass(&self, span: &Span) -> ExtendedReal {
        let (u, v) = (span.lo, span.hi);
        let endpoint_mass = |x: f64, closed: bool| if closed { self.atom_at(x).abs() } else { 0.0 };
        let inside_closed_gap =
            v <= 0.0 || u >= 1.0 || self.gap_containing(0.5 * (u + v)).is_some_and(|g| g.a <= u && v <= g.b);
        if inside_closed_gap {
            return ExtendedReal::finite(endpoint_mass(u, span.lo_closed) + endpoint_mass(v, span.hi_closed));
        }
        // some listed gap endpoint or 0, 1 lies in the open span: infinitely many
        // atoms accumulate there
        let hits_known = (u < 0.0 && v > 0.0) || (u < 1.0 && v > 1.0) || {
            let i = self.gaps.partition_point(|g| g.b <= u);
            self.gaps.get(i).is_some_and(|g| (g.a > u && g.a < v) || (g.b > u && g.b < v))
        };
        if hits_known {
            ExtendedReal::infinite()
        } else {
            ExtendedReal::unknown()
        }
    }
}

// ---------------------------------------------------------------------------
// checked measure

#[derive(Clone, Debug)]
pub struct CheckedMeasure {
    atoms: Vec<Atom>,
    families: Vec<Arc<Family>>,
    pieces: Vec<DensityPiece>,
    regions: Vec<(f64, f64)>,
    cantor: Option<Arc<CantorStructure>>,
    xi_plus: Vec<f64>,
    xi_minus: Vec<f64>,
}

const LOCATION_CHECK_TERMS: u64 = 100_000;

pub fn validate_measure(spec: SignedMeasureSpec) -> Result<CheckedMeasure, MeasureError> {
    let mut atoms = Vec::new();
    for a in &spec.atoms {
        if !a.location.is_finite() || !a.weight.is_finite() {
            return Err(MeasureError::NonFinite);
        }
        if a.weight.abs() > 1.0 {
            return Err(MeasureError::AtomMagnitude { location: a.location, weight: a.weight });
        }
        if a.weight != 0.0 {
            atoms.push(*a);
        }
    }
    let mut families = Vec::new();
    for rule in &spec.rules {
        match rule.end {
            Some(end) => {
                check_rule_shape(rule)?;
                if end < rule.start {
                    continue;
                }
                if end - rule.start > 10_000_000 {
                    return Err(invalid(rule, "finite rule longer than 10^7 atoms"));
                }
                for k in rule.start..=end {
                    let location = location_at(&rule.location, k as f64);
                    let weight = weight_at(&rule.weight, k as f64);
                    if weight.abs() > 1.0 {
                        return Err(MeasureError::AtomMagnitude { location, weight });
                    }
                    if weight != 0.0 {
                        atoms.push(Atom { location, weight });
                    }
                }
            }
            None => families.push(Arc::new(build_family(rule)?)),
        }
    }
    atoms.sort_by(|x, y| x.location.total_cmp(&y.location));
    for w in atoms.windows(2) {
        if w[0].location == w[1].location {
            return Err(MeasureError::DuplicateAtom(w[0].location));
        }
    }
    for f in &families {
        for a in &atoms {
            if let Some((k1, _)) = f.index_range(&Span::closed(a.location, a.location)) {
                let _ = k1;
                return Err(MeasureError::DuplicateAtom(a.location));
            }
        }
    }
    for (i, f) in families.iter().enumerate() {
        for g in &families[i + 1..] {
            if let Some(x) = shared_location(f, g) {
                return Err(MeasureError::DuplicateAtom(x));
            }
        }
    }
    let pieces = check_pieces(&spec.pieces)?;
    for &(lo, hi) in &spec.infinite_regions {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(MeasureError::NonFinite);
        }
    }
    let mut regions = spec.infinite_regions.clone();
    regions.sort_by(|x, y| x.0.total_cmp(&y.0));
    let xi_plus = atoms.iter().filter(|a| a.weight == 1.0).map(|a| a.location).collect();
    let xi_minus = atoms.iter().filter(|a| a.weight == -1.0).map(|a| a.location).collect();
    Ok(CheckedMeasure { atoms, families, pieces, regions, cantor: None, xi_plus, xi_minus })
}

fn invalid(rule: &AtomRule, reason: &str) -> MeasureError {
    MeasureError::InvalidRule { rule: rule.name.clone(), reason: reason.to_string() }
}

fn location_at(law: &LocationLaw, k: f64) -> f64 {
    match *law {
        LocationLaw::Reciprocal { anchor, scale, shift } => anchor + scale / (k + shift),
        LocationLaw::Geometric { anchor, scale, ratio } => anchor + scale * ratio.powf(k),
    }
}

fn check_rule_shape(rule: &AtomRule) -> Result<(), MeasureError> {
    let s = rule.start as f64;
    match rule.location {
        LocationLaw::Reciprocal { anchor, scale, shift } => {
            if !anchor.is_finite() || !scale.is_finite() || !shift.is_finite() {
                return Err(MeasureError::NonFinite);
            }
            if scale == 0.0 {
                return Err(invalid(rule, "location scale must be nonzero"));
            }
            if s + shift <= 0.0 {
                return Err(invalid(rule, "k + shift must be positive for every index"));
            }
        }
        LocationLaw::Geometric { anchor, scale, ratio } => {
            if !anchor.is_finite() || !scale.is_finite() || !ratio.is_finite() {
                return Err(MeasureError::NonFinite);
            }
            if scale == 0.0 || !(ratio > 0.0 && ratio < 1.0) {
                return Err(invalid(rule, "geometric locations need scale ≠ 0 and 0 < ratio < 1"));
            }
        }
    }
    match rule.weight {
        WeightLaw::Constant { value } if !value.is_finite() => Err(MeasureError::NonFinite),
        WeightLaw::Power { shift, exponent, .. } if s + shift <= 0.0 || exponent < 0.0 => {
            Err(invalid(rule, "power weights need k + shift > 0 and exponent ≥ 0"))
        }
        WeightLaw::Geometric { ratio, .. } if !(ratio > 0.0 && ratio < 1.0) => {
            Err(invalid(rule, "geometric weights need 0 < ratio < 1"))
        }
        WeightLaw::Ratio { sign, num_shift, den_shift } => {
            if sign.abs() != 1.0 {
                Err(invalid(rule, "ratio sign must be ±1"))
            } else if s + den_shift <= 0.0 || s + num_shift < 0.0 || num_shift >= den_shift {
                Err(invalid(rule, "ratio weights need 0 ≤ k + num_shift < k + den_shift"))
            } else {
                Ok(())
            }
        }
        WeightLaw::JumpPower { sign, u, v, .. } => {
            if sign.abs() != 1.0 {
                Err(invalid(rule, "jump sign must be ±1"))
            } else if s + u <= 0.0 || s + v <= 0.0 {
                Err(invalid(rule, "jump weights need k + u > 0 and k + v > 0"))
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

/// Analytic summability of `Σ |w_k|`.
fn analytically_summable(law: &WeightLaw) -> bool {
    match *law {
        WeightLaw::Constant { value } => value == 0.0,
        WeightLaw::Power { value, exponent, .. } => value == 0.0 || exponent > 1.0,
        WeightLaw::Geometric { .. } => true,
        WeightLaw::Ratio { .. } => false,
        WeightLaw::JumpPower { u, v, gamma, .. } => u == v || gamma == 0.0,
    }
}

fn build_family(rule: &AtomRule) -> Result<Family, MeasureError> {
    check_rule_shape(rule)?;
    let s = rule.start as f64;
    let anchor = match rule.location {
        LocationLaw::Reciprocal { anchor, .. } | LocationLaw::Geometric { anchor, .. } => anchor,
    };
    let point = rule.accumulation.ok_or_else(|| MeasureError::UndecidableLocalFiniteness(rule.name.clone()))?;
    if point != anchor {
        return Err(invalid(rule, "declared accumulation point differs from the location law's limit"));
    }
    let first = location_at(&rule.location, s);
    let side = (first - point).signum();
    let summable = analytically_summable(&rule.weight);
    match (rule.tail, summable) {
        (TailCertificate::Divergent, true) => {
            return Err(MeasureError::InconsistentTailCertificate {
                rule: rule.name.clone(),
                reason: "declared divergent but the weight law is summable".into(),
            })
        }
        (TailCertificate::Summable { .. }, false) => {
            return Err(MeasureError::InconsistentTailCertificate {
                rule: rule.name.clone(),
                reason: "declared summable but the weight law is not".into(),
            })
        }
        _ => {}
    }
    let sign = weight_at(&rule.weight, s).signum();
    // weights must keep one sign and stay strictly inside (−1, 1)
    for k in [s, s + 1.0, s + 10.0, s + 1e3, s + 1e6] {
        let w = weight_at(&rule.weight, k);
        if w.abs() >= 1.0 {
            return Err(MeasureError::AtomMagnitude { location: location_at(&rule.location, k), weight: w });
        }
        if w != 0.0 && w.signum() != sign {
            return Err(invalid(rule, "family weights must keep a single sign"));
        }
    }
    let family = Family { rule: rule.clone(), point, side, summable, sign, prefix: OnceLock::new() };
    if let TailCertificate::Summable { bound: Some((c, decay)) } = rule.tail {
        for dk in [10u64, 100, 1_000, 10_000] {
            let kk = rule.start + dk;
            let actual = family.abs_weight_sum(kk + 1, None);
            let declared = match decay {
                TailDecay::Power { exponent } => c * (kk as f64).powf(-exponent),
                TailDecay::Geometric { ratio } => c * ratio.powf(kk as f64),
            };
            if actual > declared * (1.0 + 1e-9) + 1e-300 {
                return Err(MeasureError::InconsistentTailCertificate {
                    rule: rule.name.clone(),
                    reason: format!("tail after index {kk} is {actual:e}, above the declared bound {declared:e}"),
                });
            }
        }
    }
    Ok(family)
}

fn shared_location(f: &Family, g: &Family) -> Option<f64> {
    if f.point != g.point || f.side != g.side {
        // different accumulation structure: only finitely many candidates near
        // one of them; check a window of leading atoms
        for k in f.rule.start..f.rule.start + 1_000 {
            let x = f.location(k as f64);
            if g.index_range(&Span::closed(x, x)).is_some() {
                return Some(x);
            }
        }
        return None;
    }
    let (mut i, mut j) = (f.rule.start, g.rule.start);
    let (iend, jend) = (f.rule.start + LOCATION_CHECK_TERMS, g.rule.start + LOCATION_CHECK_TERMS);
    while i < iend && j < jend {
        let (x, y) = (f.location(i as f64), g.location(j as f64));
        if x == y {
            return Some(x);
        }
        // both sequences move toward the point; advance the one farther away
        if (x - f.point).abs() > (y - f.point).abs() {
            i += 1;
        } else {
            j += 1;
        }
    }
    None
}

fn check_pieces(pieces: &[DensityPiece]) -> Result<Vec<DensityPiece>, MeasureError> {
    let mut out = Vec::new();
    for p in pieces {
        let bad = |reason: &str| MeasureError::InvalidDensityPiece { lo: p.lo, hi: p.hi, reason: reason.to_string() };
        if p.lo.is_nan() || p.hi.is_nan() || !p.coefficient.is_finite() {
            return Err(MeasureError::NonFinite);
        }
        if !(p.lo < p.hi) {
            return Err(bad("empty interval"));
        }
        if p.coefficient == 0.0 {
            continue;
        }
        match p.shape {
            Shape::Power { center, exponent } => {
                if !center.is_finite() || !exponent.is_finite() {
                    return Err(MeasureError::NonFinite);
                }
                if center > p.lo && center < p.hi {
                    out.push(DensityPiece { hi: center, ..*p });
                    out.push(DensityPiece { lo: center, ..*p });
                } else {
                    out.push(*p);
                }
            }
            Shape::Exp { rate } if !rate.is_finite() => return Err(MeasureError::NonFinite),
            _ => out.push(*p),
        }
    }
    out.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    for w in out.windows(2) {
        if w[1].lo < w[0].hi {
            return Err(MeasureError::OverlappingDensityPieces(w[0].lo, w[0].hi, w[1].lo, w[1].hi));
        }
    }
    Ok(out)
}

/// An open interval `(a, b)` of `G` with its reference point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GInterval {
    pub a: f64,
    pub b: f64,
    pub e: f64,
    /// Enumeration index `n ≥ 1`.
    pub label: u64,
    /// Cantor level of a bounded gap, when generated by the Cantor model.
    pub level: Option<u32>,
}

impl GInterval {
    pub fn new(a: f64, b: f64, label: u64) -> Self {
        GInterval { a, b, e: reference_point(a, b), label, level: None }
    }

    pub fn span(&self) -> Span {
        Span::open(self.a, self.b)
    }
}

/// Midpoint for bounded intervals, finite endpoint ± 1 for half-lines, 0 on ℝ.
pub fn reference_point(a: f64, b: f64) -> f64 {
    match (a.is_finite(), b.is_finite()) {
        (true, true) => 0.5 * (a + b),
        (false, true) => b - 1.0,
        (true, false) => a + 1.0,
        (false, false) => 0.0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComplementPart {
    Point {
        x: f64,
    },
    Segment {
        lo: f64,
        hi: f64,
    },
    /// The limit set of a Cantor construction inside `[lo, hi]`.
    CantorSet {
        lo: f64,
        hi: f64,
        measure: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalDecomposition {
    pub intervals: Vec<GInterval>,
    pub complement: Vec<ComplementPart>,
}

impl IntervalDecomposition {
    pub fn complement_measure(&self) -> f64 {
        self.complement
            .iter()
            .map(|c| match *c {
                ComplementPart::Point { .. } => 0.0,
                ComplementPart::Segment { lo, hi } => hi - lo,
                ComplementPart::CantorSet { measure, .. } => measure,
            })
            .sum()
    }

    /// Complement points strictly between `x` and `y`, and whether some
    /// complement part of positive measure lies between them.
    pub fn null_between(&self, x: f64, y: f64) -> bool {
        self.complement.iter().all(|c| match *c {
            ComplementPart::Point { .. } => true,
            ComplementPart::Segment { lo, hi } => hi <= x || lo >= y || hi == lo,
            ComplementPart::CantorSet { lo, hi, measure } => hi <= x || lo >= y || measure == 0.0,
        })
    }

    pub fn interval_containing(&self, x: f64) -> Option<usize> {
        self.intervals.iter().position(|i| i.a < x && x < i.b)
    }
}

impl CheckedMeasure {
    pub fn from_cantor(cantor: CantorStructure) -> CheckedMeasure {
        let mut xi_plus = vec![1.0];
        let mut xi_minus = vec![0.0];
        let mut atoms = vec![Atom { location: 0.0, weight: -1.0 }, Atom { location: 1.0, weight: 1.0 }];
        for g in &cantor.gaps {
            xi_plus.push(g.a);
            xi_minus.push(g.b);
            atoms.push(Atom { location: g.a, weight: 1.0 });
            atoms.push(Atom { location: g.b, weight: -1.0 });
        }
        atoms.sort_by(|x, y| x.location.total_cmp(&y.location));
        xi_plus.sort_by(f64::total_cmp);
        xi_minus.sort_by(f64::total_cmp);
        CheckedMeasure {
            atoms,
            families: Vec::new(),
            pieces: Vec::new(),
            regions: Vec::new(),
            cantor: Some(Arc::new(cantor)),
            xi_plus,
            xi_minus,
        }
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn families(&self) -> &[Arc<Family>] {
        &self.families
    }

    pub fn pieces(&self) -> &[DensityPiece] {
        &self.pieces
    }

    pub fn infinite_regions(&self) -> &[(f64, f64)] {
        &self.regions
    }

    pub fn cantor(&self) -> Option<&CantorStructure> {
        self.cantor.as_deref()
    }

    /// `Ξ⁺ = {z : μ_z = 1}`.
    pub fn xi_plus(&self) -> &[f64] {
        &self.xi_plus
    }

    /// `Ξ⁻ = {z : μ_z = −1}`.
    pub fn xi_minus(&self) -> &[f64] {
        &self.xi_minus
    }

    pub fn has_continuous_part(&self) -> bool {
        !self.pieces.is_empty()
    }

    pub fn is_finite_atomic(&self) -> bool {
        self.families.is_empty() && self.pieces.is_empty() && self.regions.is_empty() && self.cantor.is_none()
    }

    /// `μ_z`, zero when `z` carries no atom.
    pub fn atom_at(&self, z: f64) -> f64 {
        if let Some(c) = &self.cantor {
            return c.atom_at(z);
        }
        if let Ok(i) = self.atoms.binary_search_by(|a| a.location.total_cmp(&z)) {
            return self.atoms[i].weight;
        }
        for f in &self.families {
            if let Some((k, _)) = f.index_range(&Span::closed(z, z)) {
                return f.weight(k as f64);
            }
        }
        0.0
    }

    /// `|μ|(J)`, `μ⁺(J)` or `μ⁻(J)`.
    pub fn mass_on_interval(&self, span: &Span, variant: Variant) -> ExtendedReal {
        if span.is_empty() {
            return ExtendedReal::ZERO;
        }
        if let Some(c) = &self.cantor {
            let m = c.mass(span);
            if variant == Variant::Total || m.extent != Extent::Finite(0.0) {
                if let Extent::Finite(v) = m.extent {
                    // split endpoint atoms by sign
                    let part = |x: f64, closed: bool| {
                        let w = if closed { c.atom_at(x) } else { 0.0 };
                        match variant {
                            Variant::Total => w.abs(),
                            Variant::Plus => w.max(0.0),
                            Variant::Minus => (-w).max(0.0),
                        }
                    };
                    let _ = v;
                    return ExtendedReal::finite(part(span.lo, span.lo_closed) + part(span.hi, span.hi_closed));
                }
                return m;
            }
            return m;
        }
        for &(lo, hi) in &self.regions {
            let meets = (span.lo < hi || (span.lo_closed && span.lo == hi))
                && (span.hi > lo || (span.hi_closed && span.hi == lo));
            if meets {
                return ExtendedReal::infinite();
            }
        }
        let keep = |w: f64| match variant {
            Variant::Total => w.abs(),
            Variant::Plus => w.max(0.0),
            Variant::Minus => (-w).max(0.0),
        };
        let lo_i = self.atoms.partition_point(|a| a.location < span.lo);
        let mut total = 0.0;
        for a in &self.atoms[lo_i..] {
            if a.location > span.hi {
                break;
            }
            if span.contains(a.location) {
                total += keep(a.weight);
            }
        }
        let mut result = ExtendedReal::finite(0.0);
        for f in &self.families {
            let counts = match variant {
                Variant::Total => true,
                Variant::Plus => f.sign > 0.0,
                Variant::Minus => f.sign < 0.0,
            };
            if !counts {
                continue;
            }
            if let Some((k1, k2)) = f.index_range(span) {
                if k2.is_none() && !f.summable {
                    result = result + ExtendedReal::infinite();
                } else {
                    total += f.abs_weight_sum(k1, k2);
                }
            }
        }
        for p in &self.pieces {
            let counts = match variant {
                Variant::Total => true,
                Variant::Plus => p.sign() > 0.0,
                Variant::Minus => p.sign() < 0.0,
            };
            if !counts {
                continue;
            }
            let m = p.coefficient.abs() * p.shape_integral(span.lo, span.hi);
            if m.is_infinite() {
                result = result + ExtendedReal::infinite();
            } else {
                total += m;
            }
        }
        result + ExtendedReal::finite(total)
    }

    /// Points and segments where `|μ|` fails to be locally finite.
    fn singular_parts(&self) -> Vec<ComplementPart> {
        let mut parts = Vec::new();
        for f in &self.families {
            if !f.summable {
                parts.push(ComplementPart::Point { x: f.point });
            }
        }
        for p in &self.pieces {
            if let Some(x) = p.singular_end() {
                parts.push(ComplementPart::Point { x });
            }
        }
        for &(lo, hi) in &self.regions {
            if lo == hi {
                parts.push(ComplementPart::Point { x: lo });
            } else {
                parts.push(ComplementPart::Segment { lo, hi });
            }
        }
        parts.sort_by(|x, y| part_lo(x).total_cmp(&part_lo(y)));
        // merge overlaps and duplicates
        let mut merged: Vec<ComplementPart> = Vec::new();
        for p in parts {
            if let Some(last) = merged.last_mut() {
                if part_lo(&p) <= part_hi(last) {
                    let lo = part_lo(last);
                    let hi = part_hi(last).max(part_hi(&p));
                    *last = if lo == hi { ComplementPart::Point { x: lo } } else { ComplementPart::Segment { lo, hi } };
                    continue;
                }
            }
            merged.push(p);
        }
        merged
    }

    pub fn locally_finite_decomposition(&self) -> Result<IntervalDecomposition, MeasureError> {
        if let Some(c) = &self.cantor {
            return Ok(cantor_decomposition(c));
        }
        let complement = self.singular_parts();
        let mut intervals = Vec::new();
        let mut left = f64::NEG_INFINITY;
        for c in &complement {
            let (lo, hi) = (part_lo(c), part_hi(c));
            if lo > left {
                intervals.push((left, lo));
            }
            left = hi;
        }
        intervals.push((left, f64::INFINITY));
        let intervals =
            intervals.into_iter().enumerate().map(|(i, (a, b))| GInterval::new(a, b, i as u64 + 1)).collect();
        Ok(IntervalDecomposition { intervals, complement })
    }

    /// The same measure with every atom weight and density coefficient
    /// multiplied by `t` (rules are dropped unless `t == 1`).
    pub fn scaled(&self, t: f64) -> SignedMeasureSpec {
        SignedMeasureSpec {
            atoms: self.atoms.iter().map(|a| Atom { location: a.location, weight: a.weight * t }).collect(),
            rules: if t == 1.0 { self.families.iter().map(|f| f.rule.clone()).collect() } else { Vec::new() },
            pieces: self.pieces.iter().map(|p| DensityPiece { coefficient: p.coefficient * t, ..*p }).collect(),
            infinite_regions: if t == 0.0 { Vec::new() } else { self.regions.clone() },
        }
    }

    /// Confidence of mass statements: rule tails are analytic, so always certified.
    pub fn confidence(&self) -> Confidence {
        Confidence::Certified
    }
}

fn part_lo(p: &ComplementPart) -> f64 {
    match *p {
        ComplementPart::Point { x } => x,
        ComplementPart::Segment { lo, .. } | ComplementPart::CantorSet { lo, .. } => lo,
    }
}

fn part_hi(p: &ComplementPart) -> f64 {
    match *p {
        ComplementPart::Point { x } => x,
        ComplementPart::Segment { hi, .. } | ComplementPart::CantorSet { hi, .. } => hi,
    }
}

fn cantor_decomposition(c: &CantorStructure) -> IntervalDecomposition {
    let mut intervals = vec![GInterval { a: f64::NEG_INFINITY, b: 0.0, e: -1.0, label: 1, level: None }];
    for g in &c.gaps {
        intervals.push(GInterval { a: g.a, b: g.b, e: 0.5 * (g.a + g.b), label: g.label, level: Some(g.level) });
    }
    intervals.push(GInterval { a: 1.0, b: f64::INFINITY, e: 2.0, label: 2, level: None });
    IntervalDecomposition {
        intervals,
        complement: vec![ComplementPart::CantorSet { lo: 0.0, hi: 1.0, measure: c.limit_measure }],
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn skew(alpha: f64) -> CheckedMeasure {
        validate_measure(SignedMeasureSpec {
            atoms: vec![Atom { location: 0.0, weight: 2.0 * alpha - 1.0 }],
            ..Default::default()
        })
        .unwrap()
    }

    pub(crate) fn oscillating_families() -> SignedMeasureSpec {
        SignedMeasureSpec {
            atoms: vec![Atom { location: 0.0, weight: 1.0 }],
            rules: vec![
                AtomRule {
                    name: "plus".into(),
                    location: LocationLaw::Reciprocal { anchor: 0.0, scale: -0.5, shift: 0.0 },
                    weight: WeightLaw::Ratio { sign: 1.0, num_shift: 0.0, den_shift: 2.0 },
                    start: 1,
                    end: None,
                    tail: TailCertificate::Divergent,
                    accumulation: Some(0.0),
                },
                AtomRule {
                    name: "minus".into(),
                    location: LocationLaw::Reciprocal { anchor: 0.0, scale: -0.5, shift: 0.5 },
                    weight: WeightLaw::Ratio { sign: -1.0, num_shift: 0.0, den_shift: 2.0 },
                    start: 1,
                    end: None,
                    tail: TailCertificate::Divergent,
                    accumulation: Some(0.0),
                },
            ],
            ..Default::default()
        }
    }

    #[test]
    fn validation_examples() {
        let m = skew(0.75);
        assert!(m.xi_plus().is_empty() && m.xi_minus().is_empty());
        let m = validate_measure(SignedMeasureSpec {
            atoms: vec![Atom { location: 0.0, weight: 1.0 }],
            ..Default::default()
        })
        .unwrap();
        assert_eq!(m.xi_plus(), &[0.0]);
        let e = validate_measure(SignedMeasureSpec {
            atoms: vec![Atom { location: 0.0, weight: 1.2 }],
            ..Default::default()
        });
        assert!(matches!(e, Err(MeasureError::AtomMagnitude { .. })));
        let e = validate_measure(SignedMeasureSpec {
            atoms: vec![Atom { location: 0.0, weight: 0.2 }, Atom { location: 0.0, weight: 0.3 }],
            ..Default::default()
        });
        assert!(matches!(e, Err(MeasureError::DuplicateAtom(_))));
    }

    #[test]
    fn masses() {
        let m = skew(0.2);
        let v = m.mass_on_interval(&Span::open(-1.0, 1.0), Variant::Total);
        assert!((v.value().unwrap() - 0.6).abs() < 1e-15);
        let power_barrier_measure = validate_measure(SignedMeasureSpec {
            atoms: vec![Atom { location: 0.0, weight: 1.0 }],
            pieces: vec![DensityPiece {
                lo: f64::NEG_INFINITY,
                hi: 0.0,
                coefficient: -0.25,
                shape: Shape::Power { center: 0.0, exponent: -1.0 },
            }],
            ..Default::default()
        })
        .unwrap();
        let v = power_barrier_measure.mass_on_interval(&Span::open(-1.0, 0.0), Variant::Total);
        assert_eq!(v, ExtendedReal::infinite());
        let v = power_barrier_measure.mass_on_interval(&Span::open(-1.0, 0.0), Variant::Plus);
        assert_eq!(v.value(), Some(0.0));
        let oscillating = validate_measure(oscillating_families()).unwrap();
        let v = oscillating.mass_on_interval(&Span::open(-1.0, 0.0), Variant::Plus);
        assert_eq!(v, ExtendedReal::infinite());
        let v = oscillating.mass_on_interval(&Span::open(-1.0, -0.01), Variant::Plus);
        // k = 1..49 of k/(k+2)
        let direct: f64 = (1..=49).map(|k| k as f64 / (k as f64 + 2.0)).sum();
        assert!((v.value().unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn atom_lookup() {
        let m = skew(0.75);
        assert_eq!(m.atom_at(0.0), 0.5);
        assert_eq!(m.atom_at(1.0), 0.0);
        let oscillating = validate_measure(oscillating_families()).unwrap();
        assert!((oscillating.atom_at(-1.0 / 6.0) - 3.0 / 5.0).abs() < 1e-15);
        assert!((oscillating.atom_at(-1.0 / 7.0) + 3.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn decompositions() {
        let g = skew(0.3).locally_finite_decomposition().unwrap();
        assert_eq!(g.intervals.len(), 1);
        assert_eq!(g.intervals[0].e, 0.0);
        let oscillating = validate_measure(oscillating_families()).unwrap().locally_finite_decomposition().unwrap();
        assert_eq!(oscillating.intervals.len(), 2);
        assert_eq!(oscillating.intervals[0].b, 0.0);
        assert_eq!(oscillating.intervals[0].e, -1.0);
        assert_eq!(oscillating.intervals[1].e, 1.0);
    }

    #[test]
    fn missing_accumulation_is_undecidable() {
        let mut spec = oscillating_families();
        spec.rules[0].accumulation = None;
        assert!(matches!(validate_measure(spec), Err(MeasureError::UndecidableLocalFiniteness(_))));
    }

    #[test]
    fn tail_certificates_are_checked() {
        let mut spec = oscillating_families();
        spec.rules[0].tail = TailCertificate::Summable { bound: None };
        assert!(matches!(validate_measure(spec), Err(MeasureError::InconsistentTailCertificate { .. })));
        let rule = |bound| AtomRule {
            name: "geo".into(),
            location: LocationLaw::Geometric { anchor: 3.0, scale: 1.0, ratio: 0.5 },
            weight: WeightLaw::Power { value: 0.5, shift: 0.0, exponent: 2.0 },
            start: 1,
            end: None,
            tail: TailCertificate::Summable { bound },
            accumulation: Some(3.0),
        };
        // Σ_{k>K} 0.5/k² ≤ 0.5/K
        let ok = SignedMeasureSpec {
            rules: vec![rule(Some((0.5, TailDecay::Power { exponent: 1.0 })))],
            ..Default::default()
        };
        assert!(validate_measure(ok).is_ok());
        let bad = SignedMeasureSpec {
            rules: vec![rule(Some((0.5, TailDecay::Power { exponent: 2.0 })))],
            ..Default::default()
        };
        assert!(matches!(validate_measure(bad), Err(MeasureError::InconsistentTailCertificate { .. })));
    }

    #[test]
    fn summable_family_tail_sum() {
        let spec = SignedMeasureSpec {
            rules: vec![AtomRule {
                name: "p2".into(),
                location: LocationLaw::Reciprocal { anchor: 5.0, scale: 1.0, shift: 0.0 },
                weight: WeightLaw::Power { value: 0.5, shift: 0.0, exponent: 2.0 },
                start: 1,
                end: None,
                tail: TailCertificate::Summable { bound: None },
                accumulation: Some(5.0),
            }],
            ..Default::default()
        };
        let m = validate_measure(spec).unwrap();
        let v = m.mass_on_interval(&Span::open(4.0, 7.0), Variant::Total).value().unwrap();
        let exact = 0.5 * std::f64::consts::PI.powi(2) / 6.0;
        assert!((v - exact).abs() < 1e-12, "{v} vs {exact}");
        let g = m.locally_finite_decomposition().unwrap();
        assert_eq!(g.intervals.len(), 1);
    }

    #[test]
    fn power_centers_split_pieces() {
        let m = validate_measure(SignedMeasureSpec {
            pieces: vec![DensityPiece {
                lo: -1.0,
                hi: 1.0,
                coefficient: 1.0,
                shape: Shape::Power { center: 0.0, exponent: -1.5 },
            }],
            ..Default::default()
        })
        .unwrap();
        assert_eq!(m.pieces().len(), 2);
        let g = m.locally_finite_decomposition().unwrap();
        assert_eq!(g.intervals.len(), 2);
        let v = m.mass_on_interval(&Span::open(0.5, 1.0), Variant::Total).value().unwrap();
        let exact = 2.0 * (0.5f64.powf(-0.5) - 1.0);
        assert!((v - exact).abs() < 1e-12);
    }
}
