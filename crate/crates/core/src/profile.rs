//! The profile ϱ of a measure on one interval `(a, b)` of `G`, normalized so
//! that ϱ(e) = 1.
//!
//! Everything is done in log form. Writing `Λ(u, v)` for twice the continuous
//! mass of `(u, v]` plus `Σ ln((1+μ_y)/(1−μ_y))` over atoms `y ∈ (u, v]`,
//! `ln ϱ(z) = Λ(e, z)` for `z ≥ e` and `−Λ(z, e)` for `z < e`. The variants
//! ϱ⁺ and ϱ⁻ keep only the positive (resp. negated negative) contributions, so
//! both are nondecreasing and ϱ = ϱ⁺/ϱ⁻.
//!
//! Integrals are assembled cell by cell: between consecutive breakpoints
//! (atoms, piece boundaries) ϱ is monotone and given by at most one piece.
//! Near an endpoint the behaviour is read from an [`EndModel`].

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::measure::{CheckedMeasure, DensityPiece, Family, GInterval, Shape, Span, Variant};
use crate::num::{Confidence, ExtendedReal, Verdict};
use crate::quad;
use crate::series::{self, SeriesDecision};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("atom of weight {weight} at interior point {location}")]
    AtomOnBoundary { location: f64, weight: f64 },
    #[error("|μ| is not Radon on ({a}, {b}): {reason}")]
    NonRadon { a: f64, b: f64, reason: String },
    #[error("{z} lies outside ({a}, {b})")]
    OutOfInterval { z: f64, a: f64, b: f64 },
}

/// Right value ϱ(z) or left limit ϱ(z−).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Right,
    Left,
}

/// Endpoint of the interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum End {
    A,
    B,
}

/// `(a, e]` or `[e, b)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Half {
    Left,
    Right,
}

impl End {
    fn half(self) -> Half {
        match self {
            End::A => Half::Left,
            End::B => Half::Right,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EndpointLimit {
    Positive { value: f64 },
    Zero,
    Diverges,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitVerdict {
    pub limit: EndpointLimit,
    pub confidence: Confidence,
    pub evidence: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BvStatus {
    Bv,
    NotBv,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BvVerdict {
    pub status: BvStatus,
    pub total_variation: ExtendedReal,
    pub confidence: Confidence,
}

/// Behaviour of ϱ toward an infinite end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum TailClass {
    /// ϱ tends to a positive constant.
    Bounded,
    /// ϱ behaves like `|x|^gamma`.
    Power { gamma: f64 },
    /// ϱ grows faster than any power; `explodes` when `∫ 1/(ln ϱ)′ < ∞`.
    Growth { explodes: bool },
    /// ϱ decays faster than any power.
    Decay,
}

/// Behaviour of ϱ near a finite end carrying a non-integrable density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Singularity {
    /// ϱ behaves like `distance^gamma`.
    Power {
        gamma: f64,
    },
    SuperZero,
    SuperInfinity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum EndModel {
    Tail {
        class: TailClass,
    },
    /// ϱ has a limit computed from convergent sums and integrals.
    Regular,
    Singular {
        singularity: Singularity,
    },
    /// Atom families with divergent weight sums accumulate at the end.
    Families,
    Unsupported {
        reason: String,
    },
}

/// `∫ϱ`, `∫1/ϱ` and the variation of ϱ over one half.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfStats {
    pub integral: ExtendedReal,
    pub inverse: ExtendedReal,
    pub variation: ExtendedReal,
}

/// `A = ∫ϱ`, `B = ∫1/ϱ` with its halves, and `V`, the total variation of the
/// canonical extension over the closure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalStats {
    pub integral: ExtendedReal,
    pub inverse: ExtendedReal,
    pub inverse_left: ExtendedReal,
    pub inverse_right: ExtendedReal,
    pub variation: ExtendedReal,
    pub integral_left: ExtendedReal,
    pub integral_right: ExtendedReal,
    pub variation_left: ExtendedReal,
    pub variation_right: ExtendedReal,
}

/// Series decisions behind the block sums at one end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSeries {
    pub integral: SeriesDecision,
    pub inverse: SeriesDecision,
    pub variation: SeriesDecision,
}

#[derive(Clone, Debug)]
struct HalfDetail {
    stats: HalfStats,
    series: Option<BlockSeries>,
}

#[derive(Clone, Copy, Debug)]
struct HalfMass {
    plus: ExtendedReal,
    minus: ExtendedReal,
}

/// Default tolerance reported for the infinite atom products. Tails of the
/// products are summed (Euler–Maclaurin) rather than dropped, so the actual
/// error is far below this.
pub const EPS_PROD: f64 = 1e-12;

const SLIVER_CAP: u64 = 4096;
const BLOCKS_PLAIN: u64 = 1 << 17;
const BLOCKS_WITH_DENSITY: u64 = 1 << 10;
const MAX_BLOCK_ATOMS: u64 = 10_000;

#[derive(Debug)]
pub struct DensityProfile {
    interval: GInterval,
    /// `(location, ln J, weight)` of explicit atoms inside `(a, b)`.
    atoms: Vec<(f64, f64, f64)>,
    /// Prefix sums of `ln J` per variant: total, plus, minus.
    cum: [Vec<f64>; 3],
    families: Vec<Arc<Family>>,
    pieces: Vec<DensityPiece>,
    masses: [HalfMass; 2],
    ends: [EndModel; 2],
    limits: [LimitVerdict; 2],
    detail: OnceLock<[HalfDetail; 2]>,
}

fn variant_index(v: Variant) -> usize {
    match v {
        Variant::Total => 0,
        Variant::Plus => 1,
        Variant::Minus => 2,
    }
}

/// Part of a signed log contribution kept by a variant; the minus variant is
/// returned negated so that it is nonnegative.
fn keep(x: f64, v: Variant) -> f64 {
    match v {
        Variant::Total => x,
        Variant::Plus => x.max(0.0),
        Variant::Minus => (-x).max(0.0),
    }
}

fn log_jump(w: f64) -> f64 {
    2.0 * w.atanh()
}

fn end_index(end: End) -> usize {
    match end {
        End::A => 0,
        End::B => 1,
    }
}

pub fn build_profile(m: &CheckedMeasure, interval: &GInterval) -> Result<DensityProfile, ProfileError> {
    let (a, b, e) = (interval.a, interval.b, interval.e);
    let non_radon = |reason: String| ProfileError::NonRadon { a, b, reason };
    let span = Span::open(a, b);
    for &(lo, hi) in m.infinite_regions() {
        if lo < b && hi > a {
            return Err(non_radon(format!("declared infinite region [{lo}, {hi}]")));
        }
    }
    let lo_i = m.atoms().partition_point(|x| x.location <= a);
    let hi_i = m.atoms().partition_point(|x| x.location < b);
    let mut atoms = Vec::with_capacity(hi_i.saturating_sub(lo_i));
    for x in &m.atoms()[lo_i..hi_i.max(lo_i)] {
        if x.weight.abs() >= 1.0 {
            return Err(ProfileError::AtomOnBoundary { location: x.location, weight: x.weight });
        }
        atoms.push((x.location, log_jump(x.weight), x.weight));
    }
    if m.cantor().is_some() && !atoms.is_empty() {
        return Err(non_radon("the interval meets the Cantor limit set".into()));
    }
    let mut families = Vec::new();
    for f in m.families() {
        if f.point > a && f.point < b && !f.summable {
            return Err(non_radon(format!("divergent family `{}` accumulates at {}", f.rule.name, f.point)));
        }
        if f.index_range(&span).is_some() {
            families.push(f.clone());
        }
    }
    let mut pieces = Vec::new();
    for p in m.pieces() {
        if p.hi <= a || p.lo >= b {
            continue;
        }
        if let Some(x) = p.singular_end() {
            if x > a && x < b {
                return Err(non_radon(format!("non-integrable density at {x}")));
            }
        }
        pieces.push(DensityPiece { lo: p.lo.max(a), hi: p.hi.min(b), ..*p });
    }
    let mut cum = [vec![0.0], vec![0.0], vec![0.0]];
    for &(_, l, _) in &atoms {
        for v in [Variant::Total, Variant::Plus, Variant::Minus] {
            let c = &mut cum[variant_index(v)];
            let last = *c.last().unwrap();
            c.push(last + keep(l, v));
        }
    }
    let left = Span::left_open(a, e);
    let right = Span::right_open(e, b);
    let masses = [
        HalfMass { plus: m.mass_on_interval(&left, Variant::Plus), minus: m.mass_on_interval(&left, Variant::Minus) },
        HalfMass { plus: m.mass_on_interval(&right, Variant::Plus), minus: m.mass_on_interval(&right, Variant::Minus) },
    ];
    let mut profile = DensityProfile {
        interval: *interval,
        atoms,
        cum,
        families,
        pieces,
        masses,
        ends: [EndModel::Regular, EndModel::Regular],
        limits: [
            LimitVerdict { limit: EndpointLimit::Unknown, confidence: Confidence::Numeric, evidence: None },
            LimitVerdict { limit: EndpointLimit::Unknown, confidence: Confidence::Numeric, evidence: None },
        ],
        detail: OnceLock::new(),
    };
    profile.ends = [profile.end_model(End::A), profile.end_model(End::B)];
    profile.limits = [profile.compute_limit(End::A), profile.compute_limit(End::B)];
    Ok(profile)
}

impl DensityProfile {
    pub fn interval(&self) -> &GInterval {
        &self.interval
    }

    pub fn end_model(&self, end: End) -> EndModel {
        let (a, b) = (self.interval.a, self.interval.b);
        let x = match end {
            End::A => a,
            End::B => b,
        };
        if !x.is_finite() {
            let piece = self.pieces.iter().find(|p| if end == End::B { p.hi == x } else { p.lo == x });
            return EndModel::Tail { class: piece.map_or(TailClass::Bounded, |p| tail_class(p, end)) };
        }
        let fams: Vec<&Arc<Family>> = self.end_families(end).collect();
        let singular = self
            .pieces
            .iter()
            .find(|p| p.singular_end() == Some(x) && (if end == End::B { p.hi == x } else { p.lo == x }));
        match singular {
            Some(_) if !fams.is_empty() => {
                EndModel::Unsupported { reason: "non-integrable density and accumulating atoms at the same end".into() }
            }
            Some(p) => EndModel::Singular { singularity: singularity(p, end) },
            None if fams.iter().any(|f| !f.summable) => {
                let block_piece = self.pieces.iter().find(|p| if end == End::B { p.hi == x } else { p.lo == x });
                match block_piece {
                    Some(p) if !matches!(p.shape, Shape::Constant) && p.singular_end().is_some() => {
                        EndModel::Unsupported { reason: "singular density among accumulating atoms".into() }
                    }
                    _ => EndModel::Families,
                }
            }
            None => EndModel::Regular,
        }
    }

    /// Families accumulating at the given end from inside the interval.
    fn end_families(&self, end: End) -> impl Iterator<Item = &Arc<Family>> {
        let (x, side) = match end {
            End::A => (self.interval.a, 1.0),
            End::B => (self.interval.b, -1.0),
        };
        self.families.iter().filter(move |f| f.point == x && f.side == side)
    }

    /// `Λ` over `span` for the chosen variant (minus variant nonnegative).
    fn log_mass(&self, span: &Span, v: Variant) -> f64 {
        let c = &self.cum[variant_index(v)];
        let lo_i = self.atoms.partition_point(|x| x.0 < span.lo || (x.0 == span.lo && !span.lo_closed));
        let hi_i = self.atoms.partition_point(|x| x.0 < span.hi || (x.0 == span.hi && span.hi_closed));
        let mut total = if hi_i > lo_i { c[hi_i] - c[lo_i] } else { 0.0 };
        for f in &self.families {
            if let Some((k1, k2)) = f.index_range(span) {
                let s = if k2.is_none() && !f.summable { f.sign * f64::INFINITY } else { f.log_factor_sum(k1, k2) };
                total += keep(s, v);
            }
        }
        for p in &self.pieces {
            total += keep(2.0 * p.signed_integral(span.lo, span.hi), v);
        }
        total
    }

    fn log_variant(&self, z: f64, side: Side, v: Variant) -> f64 {
        let e = self.interval.e;
        match side {
            Side::Right if z >= e => self.log_mass(&Span::left_open(e, z), v),
            Side::Right => -self.log_mass(&Span::left_open(z, e), v),
            Side::Left if z > e => self.log_mass(&Span::open(e, z), v),
            Side::Left => -self.log_mass(&Span::closed(z, e), v),
        }
    }

    fn log_right(&self, z: f64) -> f64 {
        self.log_variant(z, Side::Right, Variant::Total)
    }

    fn log_left(&self, z: f64) -> f64 {
        self.log_variant(z, Side::Left, Variant::Total)
    }

    fn check_inside(&self, z: f64) -> Result<(), ProfileError> {
        let GInterval { a, b, .. } = self.interval;
        if z > a && z < b {
            Ok(())
        } else {
            Err(ProfileError::OutOfInterval { z, a, b })
        }
    }

    /// ϱ(z) or ϱ(z−).
    pub fn eval_density(&self, z: f64, side: Side) -> Result<f64, ProfileError> {
        self.eval_variant(z, side, Variant::Total)
    }

    /// `ln ϱ(z)` or `ln ϱ(z−)`.
    pub fn log_density(&self, z: f64, side: Side) -> Result<f64, ProfileError> {
        self.check_inside(z)?;
        Ok(self.log_variant(z, side, Variant::Total))
    }

    /// ϱ, ϱ⁺ or ϱ⁻ at `z`.
    pub fn eval_variant(&self, z: f64, side: Side, v: Variant) -> Result<f64, ProfileError> {
        self.check_inside(z)?;
        Ok(self.log_variant(z, side, v).exp())
    }

    pub fn endpoint_limit(&self, end: End) -> &LimitVerdict {
        &self.limits[end_index(end)]
    }

    pub fn end_models(&self) -> &[EndModel; 2] {
        &self.ends
    }

    pub fn epsilon_prod(&self) -> f64 {
        EPS_PROD
    }

    /// Finiteness of `μ⁺` and `μ⁻` on the half.
    pub fn half_masses(&self, half: Half) -> (ExtendedReal, ExtendedReal) {
        let m = &self.masses[half as usize];
        (m.plus, m.minus)
    }

    fn compute_limit(&self, end: End) -> LimitVerdict {
        let m = self.masses[end.half() as usize];
        let certified = |limit| LimitVerdict { limit, confidence: Confidence::Certified, evidence: None };
        let (plus, minus) = (m.plus.is_finite(), m.minus.is_finite());
        // limit when only μ⁺ (resp. only μ⁻) is infinite; ϱ(z) = exp(−Λ(z, e)) toward a
        let (plus_only, minus_only) = match end {
            End::A => (EndpointLimit::Zero, EndpointLimit::Diverges),
            End::B => (EndpointLimit::Diverges, EndpointLimit::Zero),
        };
        let conf = m.plus.confidence.weakest(m.minus.confidence);
        match (plus, minus) {
            (Verdict::True, Verdict::True) => {
                let l = match end {
                    End::A => self.log_right(self.interval.a),
                    End::B => self.log_left(self.interval.b),
                };
                LimitVerdict { limit: EndpointLimit::Positive { value: l.exp() }, confidence: conf, evidence: None }
            }
            (Verdict::False, Verdict::True) => LimitVerdict { confidence: conf, ..certified(plus_only) },
            (Verdict::True, Verdict::False) => LimitVerdict { confidence: conf, ..certified(minus_only) },
            (Verdict::False, Verdict::False) => match self.ends[end_index(end)] {
                EndModel::Families => self.block_trend(end),
                _ => LimitVerdict {
                    limit: EndpointLimit::Unknown,
                    confidence: Confidence::Numeric,
                    evidence: Some("both μ⁺ and μ⁻ are infinite near the end".into()),
                },
            },
            _ => LimitVerdict { limit: EndpointLimit::Unknown, confidence: Confidence::Numeric, evidence: None },
        }
    }

    /// BV extension of ϱ on the closed half.
    pub fn bv_certificate(&self, half: Half) -> BvVerdict {
        let end = match half {
            Half::Left => End::A,
            Half::Right => End::B,
        };
        let variation = self.half_detail(half).stats.variation;
        let limit = self.endpoint_limit(end);
        if limit.limit == EndpointLimit::Diverges {
            return BvVerdict {
                status: BvStatus::NotBv,
                total_variation: ExtendedReal::infinite().with_confidence(limit.confidence),
                confidence: limit.confidence,
            };
        }
        let m = self.masses[half as usize];
        // the factor that could blow up is bounded when this part is finite
        let guard = match half {
            Half::Left => m.minus,
            Half::Right => m.plus,
        };
        if guard.is_finite() == Verdict::True {
            return BvVerdict { status: BvStatus::Bv, total_variation: variation, confidence: guard.confidence };
        }
        let status = match variation.is_finite() {
            Verdict::True => BvStatus::Bv,
            Verdict::False => BvStatus::NotBv,
            Verdict::Unknown => BvStatus::Unknown,
        };
        BvVerdict { status, total_variation: variation, confidence: Confidence::Numeric }
    }

    pub fn integral_stats(&self) -> IntervalStats {
        let [l, r] = self.halves();
        let (l, r) = (l.stats, r.stats);
        let jump = |end: End, inverse: ExtendedReal| -> ExtendedReal {
            let x = match end {
                End::A => self.interval.a,
                End::B => self.interval.b,
            };
            if !x.is_finite() {
                return ExtendedReal::ZERO;
            }
            let lim = self.endpoint_limit(end);
            let value = match lim.limit {
                EndpointLimit::Positive { value } => ExtendedReal::finite(value).with_confidence(lim.confidence),
                EndpointLimit::Zero => ExtendedReal::ZERO,
                EndpointLimit::Diverges => ExtendedReal::infinite().with_confidence(lim.confidence),
                EndpointLimit::Unknown => ExtendedReal::unknown(),
            };
            match inverse.is_finite() {
                Verdict::True => value.with_confidence(inverse.confidence),
                Verdict::False => ExtendedReal::ZERO,
                Verdict::Unknown if lim.limit == EndpointLimit::Zero => ExtendedReal::ZERO,
                Verdict::Unknown => ExtendedReal::unknown(),
            }
        };
        let vl = l.variation + jump(End::A, l.inverse);
        let vr = r.variation + jump(End::B, r.inverse);
        IntervalStats {
            integral: l.integral + r.integral,
            inverse: l.inverse + r.inverse,
            inverse_left: l.inverse,
            inverse_right: r.inverse,
            variation: vl + vr,
            integral_left: l.integral,
            integral_right: r.integral,
            variation_left: vl,
            variation_right: vr,
        }
    }

    /// Block-series evidence at an end whose model is [`EndModel::Families`].
    pub fn block_series(&self, end: End) -> Option<&BlockSeries> {
        self.halves()[end.half() as usize].series.as_ref()
    }

    /// `∫ϱ`, `∫1/ϱ` and the variation of ϱ over `[lo, hi]`, both inside the
    /// interval; jumps at `lo` itself are not counted.
    pub fn segment(&self, lo: f64, hi: f64) -> HalfStats {
        let acc = self.walk(lo, hi);
        HalfStats { integral: acc.integral, inverse: acc.inverse, variation: acc.variation }
    }

    /// Atom locations inside the interval, taking at most `cap` atoms from
    /// each infinite family.
    pub fn jump_locations(&self, cap: u64) -> Vec<f64> {
        let mut out: Vec<f64> = self.atoms.iter().map(|x| x.0).collect();
        for f in &self.families {
            if let Some((k1, k2)) = f.index_range(&Span::open(self.interval.a, self.interval.b)) {
                let last = k2.unwrap_or(u64::MAX).min(k1.saturating_add(cap - 1));
                out.extend((k1..=last).map(|k| f.location(k as f64)));
            }
        }
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    fn halves(&self) -> &[HalfDetail; 2] {
        self.detail.get_or_init(|| [self.compute_half(Half::Left), self.compute_half(Half::Right)])
    }

    fn half_detail(&self, half: Half) -> &HalfDetail {
        &self.halves()[half as usize]
    }

    // -----------------------------------------------------------------------
    // cells

    /// Sorted breakpoints strictly inside `(lo, hi)` and the sliver regions
    /// standing for the tails of summable families.
    fn breakpoints(&self, lo: f64, hi: f64) -> (Vec<f64>, Vec<Sliver>) {
        let mut points = Vec::new();
        let inside = |x: f64| x > lo && x < hi;
        let i0 = self.atoms.partition_point(|x| x.0 <= lo);
        for x in &self.atoms[i0..] {
            if x.0 >= hi {
                break;
            }
            points.push(x.0);
        }
        for p in &self.pieces {
            for x in [p.lo, p.hi] {
                if inside(x) {
                    points.push(x);
                }
            }
        }
        let mut slivers: Vec<Sliver> = Vec::new();
        for f in &self.families {
            let Some((k1, k2)) = f.index_range(&Span::open(lo, hi)) else { continue };
            match k2 {
                Some(k2) => points.extend((k1..=k2).map(|k| f.location(k as f64))),
                None => {
                    let last = k1 + SLIVER_CAP - 1;
                    points.extend((k1..=last).map(|k| f.location(k as f64)));
                    let edge = f.location(last as f64);
                    let (s_lo, s_hi) = if f.side < 0.0 { (edge, f.point) } else { (f.point, edge) };
                    if inside(f.point) {
                        points.push(f.point);
                    }
                    slivers.push(Sliver { lo: s_lo, hi: s_hi, tail: f.abs_weight_sum(last + 1, None) });
                }
            }
        }
        // merge overlapping slivers and drop points inside them
        slivers.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        let mut merged: Vec<Sliver> = Vec::new();
        for s in slivers {
            match merged.last_mut() {
                Some(m) if s.lo < m.hi => {
                    m.hi = m.hi.max(s.hi);
                    m.tail += s.tail;
                }
                _ => merged.push(s),
            }
        }
        points.retain(|&x| !merged.iter().any(|s| x > s.lo && x < s.hi));
        for s in &merged {
            for x in [s.lo, s.hi] {
                if inside(x) {
                    points.push(x);
                }
            }
        }
        points.sort_by(f64::total_cmp);
        points.dedup();
        (points, merged)
    }

    fn piece_on(&self, lo: f64, hi: f64) -> Option<&DensityPiece> {
        self.pieces.iter().find(|p| p.lo < hi && p.hi > lo)
    }

    /// Integrals and continuous variation over `[lo, hi]` with ϱ given by
    /// `ln ϱ(lo) = log_lo` and at most one density piece.
    fn exact_cell(&self, lo: f64, hi: f64, log_lo: f64) -> (Acc, f64) {
        let len = hi - lo;
        let Some(p) = self.piece_on(lo, hi) else {
            return (
                Acc {
                    integral: ExtendedReal::finite(len * log_lo.exp()),
                    inverse: ExtendedReal::finite(len * (-log_lo).exp()),
                    variation: ExtendedReal::ZERO,
                },
                log_lo,
            );
        };
        let m = 2.0 * p.signed_integral(lo, hi);
        let log_hi = log_lo + m;
        let variation = ExtendedReal::finite((log_hi.exp() - log_lo.exp()).abs());
        let (integral, inverse) = cell_integrals(p, lo, hi, log_lo);
        (Acc { integral, inverse, variation }, log_hi)
    }

    /// Walk the cells of `[lo, hi]`, both finite, collecting integrals,
    /// continuous variation and the jumps at interior breakpoints.
    fn walk(&self, lo: f64, hi: f64) -> Acc {
        if !(hi > lo) {
            return Acc::zero();
        }
        let (points, slivers) = self.breakpoints(lo, hi);
        let mut edges = Vec::with_capacity(points.len() + 2);
        edges.push(lo);
        edges.extend(points);
        edges.push(hi);
        let mut acc = Acc::zero();
        let mut prev_hi: Option<f64> = None;
        for w in edges.windows(2) {
            let (x, y) = (w[0], w[1]);
            let log_lo = self.log_right(x);
            if let Some(ph) = prev_hi {
                acc.variation = acc.variation + ExtendedReal::finite((log_lo.exp() - ph.exp()).abs());
            }
            let sliver = slivers.iter().find(|s| s.lo <= x && y <= s.hi);
            let log_hi = match sliver {
                Some(s) => {
                    let log_hi = self.log_left(y);
                    let mid = self.log_right(0.5 * (x + y)).exp();
                    let len = y - x;
                    acc.integral = acc.integral + ExtendedReal::numeric(len * mid);
                    acc.inverse = acc.inverse + ExtendedReal::numeric(len / mid);
                    let v = (log_hi.exp() - log_lo.exp()).abs() + 2.0 * mid * s.tail;
                    acc.variation = acc.variation + ExtendedReal::numeric(v);
                    log_hi
                }
                None => {
                    let (c, log_hi) = self.exact_cell(x, y, log_lo);
                    acc.add(c);
                    log_hi
                }
            };
            prev_hi = Some(log_hi);
        }
        acc
    }

    fn jump_at(&self, x: f64) -> ExtendedReal {
        ExtendedReal::finite((self.log_right(x).exp() - self.log_left(x).exp()).abs())
    }

    // -----------------------------------------------------------------------
    // halves

    fn compute_half(&self, half: Half) -> HalfDetail {
        let GInterval { a, b, e, .. } = self.interval;
        let end = match half {
            Half::Left => End::A,
            Half::Right => End::B,
        };
        let unknown = HalfDetail {
            stats: HalfStats {
                integral: ExtendedReal::unknown(),
                inverse: ExtendedReal::unknown(),
                variation: ExtendedReal::unknown(),
            },
            series: None,
        };
        let model = &self.ends[end_index(end)];
        let mut series = None;
        let (near, far): (Acc, Acc) = match model {
            EndModel::Unsupported { .. } => return unknown,
            EndModel::Regular => {
                let acc = match half {
                    Half::Left => self.walk(a, e),
                    Half::Right => self.walk(e, b),
                };
                (acc, Acc::zero())
            }
            EndModel::Tail { .. } | EndModel::Singular { .. } => {
                let (lo, hi) = match half {
                    Half::Left => (a, e),
                    Half::Right => (e, b),
                };
                let (points, _) = self.breakpoints(lo, hi);
                let t = match half {
                    Half::Left => points.first().copied().unwrap_or(e).min(e),
                    Half::Right => points.last().copied().unwrap_or(e).max(e),
                };
                let mut acc = match half {
                    Half::Left => self.walk(t, e),
                    Half::Right => self.walk(e, t),
                };
                if t != e {
                    acc.variation = acc.variation + self.jump_at(t);
                }
                (acc, self.end_cell(end, t, model))
            }
            EndModel::Families => match self.blocks(end) {
                Some((k0_loc, acc, s)) => {
                    series = Some(s);
                    let near = match half {
                        Half::Left => self.walk(k0_loc, e),
                        Half::Right => self.walk(e, k0_loc),
                    };
                    (near, acc)
                }
                None => return unknown,
            },
        };
        let mut total = near;
        total.add(far);
        if half == Half::Left {
            // the atom at e belongs to (a, e]
            total.variation = total.variation + ExtendedReal::finite((1.0 - self.log_left(e).exp()).abs());
        }
        HalfDetail {
            stats: HalfStats { integral: total.integral, inverse: total.inverse, variation: total.variation },
            series,
        }
    }

    /// The last cell between breakpoint `t` and the end, for tail and
    /// singular models.
    fn end_cell(&self, end: End, t: f64, model: &EndModel) -> Acc {
        let x = match end {
            End::A => self.interval.a,
            End::B => self.interval.b,
        };
        // value of ϱ on the cell at its inner edge
        let log_t = match end {
            End::A => self.log_left(t),
            End::B => self.log_right(t),
        };
        let rho_t = log_t.exp();
        let piece = match end {
            End::A => self.piece_on(x, t),
            End::B => self.piece_on(t, x),
        };
        let profile = |y: f64| -> f64 {
            let p = piece.expect("piece present");
            match end {
                End::A => (log_t - 2.0 * p.signed_integral(y, t)).exp(),
                End::B => (log_t + 2.0 * p.signed_integral(t, y)).exp(),
            }
        };
        let integrate = |f: &dyn Fn(f64) -> f64| -> ExtendedReal {
            let q = match end {
                End::A => quad::integrate(f, x, t, 0.0),
                End::B => quad::integrate(f, t, x, 0.0),
            };
            if q.converged {
                ExtendedReal::finite(q.value)
            } else {
                ExtendedReal::numeric(q.value)
            }
        };
        let inf = ExtendedReal::infinite();
        let finite = ExtendedReal::finite;
        match *model {
            EndModel::Tail { class } => {
                let Some(p) = piece else {
                    return Acc { integral: inf, inverse: inf, variation: ExtendedReal::ZERO };
                };
                match class {
                    TailClass::Bounded => {
                        let limit = match end {
                            End::A => log_t - 2.0 * p.signed_integral(x, t),
                            End::B => log_t + 2.0 * p.signed_integral(t, x),
                        };
                        Acc { integral: inf, inverse: inf, variation: finite((limit.exp() - rho_t).abs()) }
                    }
                    TailClass::Power { gamma } => {
                        let Shape::Power { center, .. } = p.shape else { unreachable!("power tail from power piece") };
                        let d = (t - center).abs();
                        let integral = if gamma < -1.0 { finite(rho_t * d / (-gamma - 1.0)) } else { inf };
                        let inverse = if gamma > 1.0 { finite(d / (rho_t * (gamma - 1.0))) } else { inf };
                        let variation = if gamma > 0.0 { inf } else { finite(rho_t) };
                        Acc { integral, inverse, variation }
                    }
                    TailClass::Growth { .. } => {
                        Acc { integral: inf, inverse: integrate(&|y| 1.0 / profile(y)), variation: inf }
                    }
                    TailClass::Decay => Acc { integral: integrate(&profile), inverse: inf, variation: finite(rho_t) },
                }
            }
            EndModel::Singular { singularity } => match singularity {
                Singularity::Power { gamma } => {
                    let d = (x - t).abs();
                    let integral = if gamma > -1.0 { finite(rho_t * d / (gamma + 1.0)) } else { inf };
                    let inverse = if gamma < 1.0 { finite(d / (rho_t * (1.0 - gamma))) } else { inf };
                    let variation = if gamma > 0.0 { finite(rho_t) } else { inf };
                    Acc { integral, inverse, variation }
                }
                Singularity::SuperZero => Acc { integral: integrate(&profile), inverse: inf, variation: finite(rho_t) },
                Singularity::SuperInfinity => {
                    Acc { integral: inf, inverse: integrate(&|y| 1.0 / profile(y)), variation: inf }
                }
            },
            _ => Acc::zero(),
        }
    }

    // -----------------------------------------------------------------------
    // blocks between consecutive atoms of a divergent family

    fn primary_family(&self, end: End) -> Option<&Arc<Family>> {
        self.end_families(end).find(|f| !f.summable)
    }

    /// First index of the primary family whose atom lies beyond `e`, every
    /// explicit atom, every piece boundary and every other family's atoms.
    fn first_block(&self, end: End) -> Option<u64> {
        let GInterval { a, b, e, .. } = self.interval;
        let f0 = self.primary_family(end)?;
        let mut bound = e;
        let mut push = |x: f64| {
            if x > a && x < b {
                bound = match end {
                    End::A => bound.min(x),
                    End::B => bound.max(x),
                };
            }
        };
        for x in &self.atoms {
            push(x.0);
        }
        for p in &self.pieces {
            push(p.lo);
            push(p.hi);
        }
        let end_x = match end {
            End::A => a,
            End::B => b,
        };
        for f in &self.families {
            if f.point == end_x {
                continue;
            }
            push(f.point);
            push(f.location(f.rule.start as f64));
        }
        let span = match end {
            End::A => Span::open(a, bound),
            End::B => Span::open(bound, b),
        };
        f0.index_range(&span).map(|(k, _)| k)
    }

    /// Log of ϱ on the outer side of the primary family's `k`-th atom.
    fn lambda_at(&self, end: End, f0: &Family, k: u64) -> f64 {
        let x = f0.location(k as f64);
        match end {
            End::A => self.log_right(x),
            End::B => self.log_left(x),
        }
    }

    /// Relative statistics of block `k`: the stretch from the primary atom
    /// `x_k` (its jump included) to `x_{k+1}` (excluded).
    fn block(&self, end: End, f0: &Family, k: u64) -> Option<Block> {
        let x0 = f0.location(k as f64);
        let x1 = f0.location((k + 1) as f64);
        let (lo, hi) = if x0 < x1 { (x0, x1) } else { (x1, x0) };
        let mut inner: Vec<(f64, f64)> = Vec::new();
        for f in self.end_families(end) {
            if let Some((k1, Some(k2))) = f.index_range(&Span::open(lo, hi)) {
                if k2 - k1 > MAX_BLOCK_ATOMS {
                    return None;
                }
                inner.extend((k1..=k2).map(|j| (f.location(j as f64), f.log_factor(j as f64))));
            }
        }
        inner.sort_by(|p, q| p.0.total_cmp(&q.0));
        let l0 = f0.log_factor(k as f64);
        let mut blk =
            Block { tau_a: 0.0, tau_b: 0.0, tau_v: 0.0, dlambda: 0.0, rmin: f64::INFINITY, rmax: f64::NEG_INFINITY };
        let cell = |u: f64, v: f64, r_lo: f64, blk: &mut Block| -> f64 {
            let (acc, r_hi) = self.exact_cell(u, v, r_lo);
            blk.tau_a += acc.integral.value().unwrap_or(f64::NAN);
            blk.tau_b += acc.inverse.value().unwrap_or(f64::NAN);
            blk.tau_v += acc.variation.value().unwrap_or(f64::NAN);
            blk.rmin = blk.rmin.min(r_lo).min(r_hi);
            blk.rmax = blk.rmax.max(r_lo).max(r_hi);
            r_hi
        };
        match end {
            End::B => {
                // walk rightward from x0
                let mut r = l0;
                blk.tau_v += l0.exp_m1().abs();
                let mut u = x0;
                for &(y, l) in &inner {
                    let r_hi = cell(u, y, r, &mut blk);
                    r = r_hi + l;
                    blk.tau_v += (r.exp() - r_hi.exp()).abs();
                    u = y;
                }
                blk.dlambda = cell(u, x1, r, &mut blk);
            }
            End::A => {
                // walk leftward from x0; ϱ(x0−) = ϱ(x0)·e^{−L}
                let mut r_top = -l0;
                blk.tau_v += (-l0).exp_m1().abs();
                let mut v = x0;
                for &(y, l) in inner.iter().rev() {
                    let r_lo = r_top - self.piece_on(y, v).map_or(0.0, |p| 2.0 * p.signed_integral(y, v));
                    cell(y, v, r_lo, &mut blk);
                    // crossing y leftward
                    r_top = r_lo - l;
                    blk.tau_v += (r_top.exp() - r_lo.exp()).abs();
                    v = y;
                }
                let r_lo = r_top - self.piece_on(x1, v).map_or(0.0, |p| 2.0 * p.signed_integral(x1, v));
                cell(x1, v, r_lo, &mut blk);
                blk.dlambda = r_lo;
            }
        }
        Some(blk)
    }

    /// Block sums toward `end`: the location of the first block, the
    /// accumulated statistics beyond it, and the series decisions.
    fn blocks(&self, end: End) -> Option<(f64, Acc, BlockSeries)> {
        let f0 = self.primary_family(end)?.clone();
        let k0 = self.first_block(end)?;
        let n = if self.pieces.is_empty() { BLOCKS_PLAIN } else { BLOCKS_WITH_DENSITY };
        let mut lambda = self.lambda_at(end, &f0, k0);
        let (mut sa, mut sb, mut sv) = (0.0f64, 0.0f64, 0.0f64);
        let mut last = None;
        for k in k0..k0 + n {
            let blk = self.block(end, &f0, k)?;
            sa += lambda.exp() * blk.tau_a;
            sb += (-lambda).exp() * blk.tau_b;
            sv += lambda.exp() * blk.tau_v;
            last = Some((k, lambda, blk));
            lambda += blk.dlambda;
        }
        let (k_last, lambda_last, blk_last) = last?;
        let probes = [k0 + 10_000, k0 + 100_000, k0 + 1_000_000];
        let fam: &Family = &f0;
        let ratio = |select: fn(&Block) -> f64, sign: f64| {
            move |k: u64| -> f64 {
                match (self.block(end, fam, k), self.block(end, fam, k + 1)) {
                    (Some(p), Some(q)) => select(&p).ln() - select(&q).ln() - sign * p.dlambda,
                    _ => f64::NAN,
                }
            }
        };
        let dec_a = series::decide_at(probes, ratio(|b| b.tau_a, 1.0));
        let dec_b = series::decide_at(probes, ratio(|b| b.tau_b, -1.0));
        let variation_vanishes = probes.iter().all(|&k| self.block(end, &f0, k).is_some_and(|b| b.tau_v == 0.0));
        let dec_v = if variation_vanishes {
            SeriesDecision { converges: Verdict::True, test: series::SeriesTest::Raabe, samples: Vec::new() }
        } else {
            series::decide_at(probes, ratio(|b| b.tau_v, 1.0))
        };
        let finish = |partial: f64, last_term: f64, dec: &SeriesDecision| -> ExtendedReal {
            match dec.converges {
                Verdict::True => {
                    let s = dec.samples.last().map_or(0.0, |x| x.1);
                    let tail = if dec.test == series::SeriesTest::Raabe && s > 1.0 {
                        last_term * k_last as f64 / (s - 1.0)
                    } else {
                        0.0
                    };
                    ExtendedReal::numeric(partial + tail)
                }
                Verdict::False => ExtendedReal::numeric_infinite(),
                Verdict::Unknown => ExtendedReal::unknown(),
            }
        };
        let acc = Acc {
            integral: finish(sa, lambda_last.exp() * blk_last.tau_a, &dec_a),
            inverse: finish(sb, (-lambda_last).exp() * blk_last.tau_b, &dec_b),
            variation: finish(sv, lambda_last.exp() * blk_last.tau_v, &dec_v),
        };
        Some((f0.location(k0 as f64), acc, BlockSeries { integral: dec_a, inverse: dec_b, variation: dec_v }))
    }

    /// Endpoint limit read from the envelope of ϱ over blocks far out.
    fn block_trend(&self, end: End) -> LimitVerdict {
        let unknown = |evidence: String| LimitVerdict {
            limit: EndpointLimit::Unknown,
            confidence: Confidence::Numeric,
            evidence: Some(evidence),
        };
        let (Some(f0), Some(k0)) = (self.primary_family(end), self.first_block(end)) else {
            return unknown("no block structure".into());
        };
        let mut env = Vec::new();
        for j in 2..=6 {
            let k = k0 + 10u64.pow(j);
            let Some(blk) = self.block(end, f0, k) else {
                return unknown("block too dense to resolve".into());
            };
            let l = self.lambda_at(end, f0, k);
            env.push((l + blk.rmin.min(0.0), l + blk.rmax.max(0.0)));
        }
        let lows: Vec<f64> = env.iter().map(|x| x.0).collect();
        let highs: Vec<f64> = env.iter().map(|x| x.1).collect();
        let falling = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0] - 0.05) && v[v.len() - 1] < v[0] - 1.0;
        let rising = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0] + 0.05) && v[v.len() - 1] > v[0] + 1.0;
        let n = env.len();
        let evidence = format!("log-envelope of ϱ over blocks at k0+10^2..10^6: {env:?}");
        if falling(&highs) {
            return LimitVerdict {
                limit: EndpointLimit::Zero,
                confidence: Confidence::Numeric,
                evidence: Some(evidence),
            };
        }
        if rising(&lows) {
            return LimitVerdict {
                limit: EndpointLimit::Diverges,
                confidence: Confidence::Numeric,
                evidence: Some(evidence),
            };
        }
        let amplitude = highs[n - 1] - lows[n - 1];
        if amplitude < 1e-2 && (highs[n - 1] - highs[n - 2]).abs() < 1e-2 {
            let value = (0.5 * (highs[n - 1] + lows[n - 1])).exp();
            return LimitVerdict {
                limit: EndpointLimit::Positive { value },
                confidence: Confidence::Numeric,
                evidence: Some(evidence),
            };
        }
        unknown(format!("oscillation of amplitude {amplitude:.3} in ln ϱ; {evidence}"))
    }
}

#[derive(Clone, Copy, Debug)]
struct Sliver {
    lo: f64,
    hi: f64,
    /// `Σ |w|` of the family tail the sliver stands for.
    tail: f64,
}

#[derive(Clone, Copy, Debug)]
struct Block {
    tau_a: f64,
    tau_b: f64,
    tau_v: f64,
    dlambda: f64,
    rmin: f64,
    rmax: f64,
}

#[derive(Clone, Copy, Debug)]
struct Acc {
    integral: ExtendedReal,
    inverse: ExtendedReal,
    variation: ExtendedReal,
}

impl Acc {
    fn zero() -> Self {
        Acc { integral: ExtendedReal::ZERO, inverse: ExtendedReal::ZERO, variation: ExtendedReal::ZERO }
    }

    fn add(&mut self, o: Acc) {
        self.integral = self.integral + o.integral;
        self.inverse = self.inverse + o.inverse;
        self.variation = self.variation + o.variation;
    }
}

/// `∫ϱ` and `∫1/ϱ` over `[lo, hi]` when `ln ϱ = log_lo + 2∫_lo^x p`.
fn cell_integrals(p: &DensityPiece, lo: f64, hi: f64, log_lo: f64) -> (ExtendedReal, ExtendedReal) {
    let len = hi - lo;
    if let Shape::Constant = p.shape {
        let m = 2.0 * p.coefficient * len;
        let ratio = |m: f64| if m == 0.0 { 1.0 } else { m.exp_m1() / m };
        return (
            ExtendedReal::finite(len * log_lo.exp() * ratio(m)),
            ExtendedReal::finite(len * (-log_lo).exp() * ratio(-m)),
        );
    }
    let f = |x: f64| (log_lo + 2.0 * p.signed_integral(lo, x)).exp();
    let g = |x: f64| (-log_lo - 2.0 * p.signed_integral(lo, x)).exp();
    let wrap = |q: quad::Quad| {
        if q.converged {
            ExtendedReal::finite(q.value)
        } else {
            ExtendedReal::numeric(q.value)
        }
    };
    (wrap(quad::finite(f, lo, hi, 0.0)), wrap(quad::finite(g, lo, hi, 0.0)))
}

/// Class of the tail governed by the piece reaching an infinite end.
fn tail_class(p: &DensityPiece, end: End) -> TailClass {
    // growth direction: ln ϱ gains 2c per unit mass toward +∞, loses it toward −∞
    let c = match end {
        End::B => p.coefficient,
        End::A => -p.coefficient,
    };
    let grow_or_decay = |explodes: bool| if c > 0.0 { TailClass::Growth { explodes } } else { TailClass::Decay };
    match p.shape {
        Shape::Constant => grow_or_decay(false),
        Shape::Power { exponent, .. } => {
            if exponent < -1.0 {
                TailClass::Bounded
            } else if exponent == -1.0 {
                TailClass::Power { gamma: 2.0 * c }
            } else {
                grow_or_decay(exponent > 1.0)
            }
        }
        Shape::Exp { rate } => {
            let outward = match end {
                End::B => rate,
                End::A => -rate,
            };
            if outward < 0.0 {
                TailClass::Bounded
            } else if outward == 0.0 {
                grow_or_decay(false)
            } else {
                grow_or_decay(true)
            }
        }
    }
}

fn singularity(p: &DensityPiece, end: End) -> Singularity {
    let Shape::Power { exponent, .. } = p.shape else { unreachable!("singular pieces are powers") };
    // ln ϱ ≈ −2c·ln d toward b and 2c·ln d toward a
    let c = match end {
        End::B => -p.coefficient,
        End::A => p.coefficient,
    };
    if exponent == -1.0 {
        Singularity::Power { gamma: 2.0 * c }
    } else if c > 0.0 {
        Singularity::SuperZero
    } else {
        Singularity::SuperInfinity
    }
}
