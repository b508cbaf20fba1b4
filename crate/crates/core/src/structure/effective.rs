//! Effective intervals: gluing scale-connected cells, adapted scale
//! functions and their inverses, and the conservativeness test.

use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::density::{cell_containing, Density};
use super::existence::tail_conservative;
use crate::num::{Confidence, ExtendedReal, Flagged, Verdict};
use crate::profile::{End, EndModel, Side};
use crate::quad;

/// A maximal interval on which the process is irreducible, with the adapted
/// scale function `s` normalized by `s(e) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveInterval {
    pub lo: f64,
    pub hi: f64,
    pub closed_lo: bool,
    pub closed_hi: bool,
    pub e: f64,
    /// Indices of the density cells glued into this interval.
    pub cells: Range<usize>,
    /// `s` at the reference point of every glued cell.
    offsets: Vec<f64>,
    /// Image `J = (s(lo), s(hi))`, infinite at open ends.
    pub image: (f64, f64),
    pub confidence: Confidence,
}

pub struct EffectiveIntervalSet {
    pub intervals: Vec<EffectiveInterval>,
    rho: Arc<dyn Density>,
}

impl std::fmt::Debug for EffectiveIntervalSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EffectiveIntervalSet").field("intervals", &self.intervals).finish()
    }
}

fn value_or_inf(x: ExtendedReal) -> f64 {
    match x.is_finite() {
        Verdict::True => x.value().unwrap_or(f64::NAN),
        Verdict::False => f64::INFINITY,
        Verdict::Unknown => f64::NAN,
    }
}

/// Glue neighbouring cells whose joint `∫1/ρ` across the junction is finite.
/// A finite end is adjoined exactly when `∫1/ρ` toward it is finite.
pub fn glue_effective_intervals(rho: Arc<dyn Density>) -> EffectiveIntervalSet {
    let cells = rho.cells();
    let n = cells.len();
    let stats: Vec<_> = crate::par::map_range(n, |i| rho.cell_stats(i));
    let links: Vec<(ExtendedReal, Flagged)> = (0..n.saturating_sub(1))
        .map(|i| {
            let across = stats[i].inverse_right + rho.bridge(i) + stats[i + 1].inverse_left;
            (across, Flagged::from(across))
        })
        .collect();
    let mut intervals = Vec::new();
    let mut start = 0;
    for i in 0..n {
        let joined = i + 1 < n && links[i].1.verdict == Verdict::True;
        if joined {
            continue;
        }
        let range = start..i + 1;
        let first = &cells[range.start];
        let last = &cells[i];
        let mut offsets = Vec::with_capacity(range.len());
        let mut s = 0.0;
        let mut confidence = Confidence::Certified;
        for k in range.clone() {
            if k > range.start {
                let gap = stats[k - 1].inverse_right + rho.bridge(k - 1) + stats[k].inverse_left;
                s += gap.value().unwrap_or(f64::NAN);
                confidence = confidence.weakest(gap.confidence);
            }
            offsets.push(s);
        }
        // the flags of the links that ended the interval matter as well
        for l in [range.start.checked_sub(1), (i + 1 < n).then_some(i)].into_iter().flatten() {
            confidence = confidence.weakest(links[l].1.confidence);
        }
        let left = stats[range.start].inverse_left;
        let right = stats[i].inverse_right;
        confidence = confidence.weakest(left.confidence).weakest(right.confidence);
        let closed_lo = first.a.is_finite() && left.is_finite() == Verdict::True;
        let closed_hi = last.b.is_finite() && right.is_finite() == Verdict::True;
        let image = (-value_or_inf(left), s + value_or_inf(right));
        intervals.push(EffectiveInterval {
            lo: first.a,
            hi: last.b,
            closed_lo,
            closed_hi,
            e: first.e,
            cells: range,
            offsets,
            image,
            confidence,
        });
        start = i + 1;
    }
    EffectiveIntervalSet { intervals, rho }
}

impl EffectiveIntervalSet {
    pub fn density(&self) -> &Arc<dyn Density> {
        &self.rho
    }

    /// Index of the effective interval containing `x`.
    pub fn locate(&self, x: f64) -> Option<usize> {
        self.intervals
            .iter()
            .position(|k| (k.lo < x || (k.closed_lo && k.lo == x)) && (x < k.hi || (k.closed_hi && k.hi == x)))
    }

    /// `s_k(x)`. Points of the complement inside a glued interval get the
    /// value at the preceding junction.
    pub fn scale(&self, k: usize, x: f64) -> f64 {
        let iv = &self.intervals[k];
        let cells = self.rho.cells();
        if x <= iv.lo {
            return iv.image.0;
        }
        if x >= iv.hi {
            return iv.image.1;
        }
        let slice = &cells[iv.cells.clone()];
        let j = match cell_containing(slice, x) {
            Some(j) => j,
            None => {
                // x sits between cells: value at the end of the cell before it
                let j = slice.partition_point(|c| c.b <= x).saturating_sub(1);
                let idx = iv.cells.start + j;
                let inv = self.rho.cell_stats(idx).inverse_right;
                return iv.offsets[j] + inv.value().unwrap_or(f64::NAN);
            }
        };
        let idx = iv.cells.start + j;
        let e = cells[idx].e;
        if x >= e {
            iv.offsets[j] + self.rho.inverse_between(idx, e, x)
        } else {
            iv.offsets[j] - self.rho.inverse_between(idx, x, e)
        }
    }

    /// `t_k = s_k⁻¹`, by bisection to `1e-12`.
    pub fn inverse_scale(&self, k: usize, y: f64) -> f64 {
        let iv = &self.intervals[k];
        if y <= iv.image.0 {
            return iv.lo;
        }
        if y >= iv.image.1 {
            return iv.hi;
        }
        let (mut lo, mut hi) = (iv.lo, iv.hi);
        let mut w = 1.0;
        while !lo.is_finite() {
            let x = iv.e - w;
            if self.scale(k, x) <= y {
                lo = x;
            } else {
                hi = hi.min(x);
                w *= 2.0;
            }
        }
        w = 1.0;
        while !hi.is_finite() {
            let x = iv.e + w;
            if self.scale(k, x) >= y {
                hi = x;
            } else {
                lo = lo.max(x);
                w *= 2.0;
            }
        }
        while hi - lo > 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.scale(k, mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Conservativeness {
    Conservative {
        confidence: Confidence,
    },
    /// The process reaches the listed infinite ends in finite time.
    Explodes {
        toward: Vec<f64>,
        confidence: Confidence,
    },
    Unknown {
        reason: String,
    },
}

/// Bounded effective intervals are conservative; at an infinite end the
/// process explodes iff `∫ (1/ρ)(x) ∫ ρ` converges there.
pub fn check_conservative(es: &EffectiveIntervalSet) -> Conservativeness {
    let rho = es.density();
    let mut toward = Vec::new();
    let mut flag = Flagged::certified(Verdict::True);
    let mut undecided = Vec::new();
    for iv in &es.intervals {
        for (x, cell, end) in [(iv.lo, iv.cells.start, End::A), (iv.hi, iv.cells.end - 1, End::B)] {
            if x.is_finite() {
                continue;
            }
            let f = match rho.tail(cell, end) {
                Some(class) => tail_conservative(&EndModel::Tail { class }),
                None => Flagged::numeric(Verdict::Unknown),
            };
            match f.verdict {
                Verdict::False => toward.push(x),
                Verdict::Unknown => undecided.push(x),
                Verdict::True => {}
            }
            flag = flag.and(f);
        }
    }
    if !toward.is_empty() {
        Conservativeness::Explodes { toward, confidence: flag.confidence }
    } else if !undecided.is_empty() {
        Conservativeness::Unknown { reason: format!("no tail model toward {undecided:?}") }
    } else {
        Conservativeness::Conservative { confidence: flag.confidence }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truncation {
    /// Truncation point `X`.
    pub x: f64,
    /// `∫_L^X (1/ρ)(x) ∫_L^x ρ`.
    pub partial: f64,
    /// Power-law estimate of the remainder beyond `X`.
    pub tail: f64,
}

impl Truncation {
    pub fn corrected(&self) -> f64 {
        self.partial + self.tail
    }
}

/// Truncated double integrals toward an infinite end.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplosionStudy {
    pub base: f64,
    pub truncations: Vec<Truncation>,
    pub estimate: f64,
    /// The last two corrected values agree to three digits.
    pub stable: bool,
}

const TRUNCATIONS: [f64; 4] = [4.0, 8.0, 16.0, 32.0];

/// Geometric breakpoints `w·4^{-k}` refining toward 0 on `[0, w]`.
fn geometric_quad<F: Fn(f64) -> f64>(f: F, w: f64) -> f64 {
    let mut total = 0.0;
    let mut hi = w;
    for _ in 0..20 {
        let lo = hi / 4.0;
        total += quad::finite(&f, lo, hi, 1e-14).value;
        hi = lo;
    }
    total + quad::finite(&f, 0.0, hi, 1e-14).value
}

/// `∫ (1/ρ)(x) ∫ ρ` toward the infinite `end` of cell `i`, measured from the
/// cell's reference point, at truncations `L ± {4, 8, 16, 32}·max(1, |L|)`.
pub fn explosion_study(rho: &dyn Density, i: usize, end: End) -> ExplosionStudy {
    let base = rho.cells()[i].e;
    let dir = match end {
        End::A => -1.0,
        End::B => 1.0,
    };
    // work in the coordinate u = dir·x, increasing toward the end
    let l = dir * base;
    let log_rho = |u: f64| rho.log_eval(dir * u, Side::Right);
    let g = |u: f64| {
        let lu = log_rho(u);
        geometric_quad(|t| (log_rho(u - t) - lu).exp(), u - l)
    };
    let unit = l.abs().max(1.0);
    let mut truncations = Vec::with_capacity(TRUNCATIONS.len());
    let mut partial = 0.0;
    let mut prev = l;
    for d in TRUNCATIONS {
        let x = l + d * unit;
        partial += quad::finite(g, prev, x, 1e-12).value;
        prev = x;
        // power-law fit g ≈ C·x^{-q}, against x itself when x/2 stays beyond L
        let absolute = x / 2.0 > l;
        let (half, span) = if absolute { (x / 2.0, x) } else { (0.5 * (l + x), x - l) };
        let (gh, gx) = (g(half), g(x));
        let q = (gh / gx).ln() / std::f64::consts::LN_2;
        let tail = if q > 1.0 { gx * span / (q - 1.0) } else { f64::INFINITY };
        truncations.push(Truncation { x: dir * x, partial, tail });
    }
    let n = truncations.len();
    let (a, b) = (truncations[n - 2].corrected(), truncations[n - 1].corrected());
    let stable = b.is_finite() && ((a - b) / b).abs() < 1e-3;
    ExplosionStudy { base, truncations, estimate: b, stable }
}
