//! Densities given directly in closed form: the singular set, effective
//! intervals and the semimartingale verdict.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::density::Density;
use super::effective::{glue_effective_intervals, EffectiveIntervalSet};
use super::StructureError;
use crate::measure::{reference_point, GInterval};
use crate::num::{Confidence, ExtendedReal, Flagged, Verdict};
use crate::profile::{End, IntervalStats, Side, TailClass};
use crate::quad;

/// `c·|x − x0|^p·exp(q·x^r)` on `(lo, hi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawPiece {
    pub lo: f64,
    pub hi: f64,
    pub c: f64,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub p: f64,
    #[serde(default)]
    pub q: f64,
    #[serde(default = "one")]
    pub r: u32,
}

fn one() -> u32 {
    1
}

impl RawPiece {
    pub fn constant(lo: f64, hi: f64, c: f64) -> Self {
        RawPiece { lo, hi, c, x0: 0.0, p: 0.0, q: 0.0, r: 1 }
    }

    fn log_value(&self, x: f64) -> f64 {
        let mut l = self.c.ln();
        if self.p != 0.0 {
            l += self.p * (x - self.x0).abs().ln();
        }
        if self.q != 0.0 {
            l += self.q * x.powi(self.r as i32);
        }
        l
    }

    fn log_derivative(&self, x: f64) -> f64 {
        let mut d = 0.0;
        if self.p != 0.0 {
            d += self.p / (x - self.x0);
        }
        if self.q != 0.0 {
            d += self.q * self.r as f64 * x.powi(self.r as i32 - 1);
        }
        d
    }

    fn is_zero(&self) -> bool {
        self.c == 0.0
    }

    /// Outward growth coefficient of `q·x^r` toward an infinite end.
    fn outward_q(&self, end: End) -> f64 {
        match end {
            End::B => self.q,
            End::A if self.r % 2 == 1 => -self.q,
            End::A => self.q,
        }
    }
}

/// Multiply ρ by `factor` on the cells between `point + scale/(2k+1)` and
/// `point + scale/(2k)`, `k ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRule {
    pub point: f64,
    pub scale: f64,
    pub factor: f64,
}

impl StepRule {
    /// Whether `x` (or `x−` on the left side) lies in one of the cells.
    fn active(&self, x: f64, side: Side) -> bool {
        let d = x - self.point;
        if d == 0.0 || d.signum() != self.scale.signum() {
            return false;
        }
        let t = self.scale / d;
        let m = t.round();
        if (t - m).abs() <= 1e-9 * t {
            // on a cell boundary: t moves opposite to the sign of the scale as x grows
            let up = match side {
                Side::Right => self.scale < 0.0,
                Side::Left => self.scale > 0.0,
            };
            let k = if up { m } else { m - 1.0 };
            return k >= 2.0 && k % 2.0 == 0.0;
        }
        let k = t.floor();
        k >= 2.0 && k % 2.0 == 0.0
    }

    fn boundaries(&self, count: u64) -> impl Iterator<Item = f64> + '_ {
        (2..2 + 2 * count).map(move |m| self.point + self.scale / m as f64)
    }
}

/// Add `amplitude·ratio^{n−1}` to ρ past the `n`-th rational of one sign:
/// on `[q_n, ∞)` for positive rationals, on `(−∞, −q_n)` for negative ones.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpRule {
    /// `1` for the positive rationals, `−1` for the negative ones.
    pub side: i8,
    pub amplitude: f64,
    pub ratio: f64,
}

/// Positive rationals in Calkin–Wilf order, each once.
fn calkin_wilf() -> impl Iterator<Item = f64> {
    std::iter::successors(Some((1u64, 1u64)), |&(a, b)| {
        // next = b / (2⌊a/b⌋b + b − a)
        let n = a / b;
        Some((b, (2 * n + 1) * b - a))
    })
    .map(|(a, b)| a as f64 / b as f64)
}

#[derive(Clone, Debug)]
struct JumpTable {
    side: i8,
    /// `(q_n, weight)` truncated where weights drop below 1e-17 of the first.
    points: Vec<(f64, f64)>,
}

impl JumpTable {
    fn new(rule: &JumpRule) -> Self {
        let n = ((1e-17f64).ln() / rule.ratio.ln()).ceil().clamp(1.0, 4096.0) as usize;
        let points = calkin_wilf()
            .take(n)
            .scan(rule.amplitude, |w, q| {
                let out = (q, *w);
                *w *= rule.ratio;
                Some(out)
            })
            .collect();
        JumpTable { side: rule.side, points }
    }

    fn at(&self, x: f64, side: Side) -> f64 {
        let hit = |q: f64| -> bool {
            if self.side > 0 {
                match side {
                    Side::Right => q <= x,
                    Side::Left => q < x,
                }
            } else {
                match side {
                    Side::Right => q < -x,
                    Side::Left => q <= -x,
                }
            }
        };
        self.points.iter().filter(|p| hit(p.0)).map(|p| p.1).sum()
    }

    fn locations(&self) -> impl Iterator<Item = f64> + '_ {
        let s = self.side as f64;
        self.points.iter().map(move |p| s * p.0)
    }
}

/// `ρ = base·steps + jumps`: a piecewise closed-form base covering the line,
/// multiplicative step rules and cumulative jumps at the rationals.
#[derive(Clone, Debug)]
pub struct RawDensity {
    pieces: Vec<RawPiece>,
    steps: Vec<StepRule>,
    jumps: Vec<JumpTable>,
    cells: Vec<GInterval>,
}

fn invalid(msg: impl Into<String>) -> StructureError {
    StructureError::InvalidDensity(msg.into())
}

impl RawDensity {
    pub fn new(pieces: Vec<RawPiece>, steps: Vec<StepRule>, jumps: Vec<JumpRule>) -> Result<Self, StructureError> {
        if pieces.is_empty() {
            return Err(invalid("no pieces"));
        }
        if pieces[0].lo != f64::NEG_INFINITY || pieces[pieces.len() - 1].hi != f64::INFINITY {
            return Err(invalid("pieces must cover the whole line"));
        }
        for w in pieces.windows(2) {
            if w[0].hi != w[1].lo {
                return Err(invalid(format!("pieces leave a gap or overlap at {}", w[0].hi)));
            }
        }
        for p in &pieces {
            if !(p.lo < p.hi) || !(p.c >= 0.0 && p.c.is_finite()) || !p.p.is_finite() || !p.q.is_finite() || p.r == 0 {
                return Err(invalid(format!("bad piece {p:?}")));
            }
            if p.c > 0.0 && p.p <= -1.0 && p.x0 >= p.lo && p.x0 <= p.hi {
                return Err(invalid(format!("ρ is not locally integrable at {}", p.x0)));
            }
        }
        for s in &steps {
            if !(s.factor > 0.0 && s.factor.is_finite()) || s.scale == 0.0 || !s.scale.is_finite() {
                return Err(invalid(format!("bad step rule {s:?}")));
            }
        }
        for j in &jumps {
            if j.side.abs() != 1 || !(j.amplitude > 0.0) || !(j.ratio > 0.0 && j.ratio < 1.0) {
                return Err(invalid(format!("bad jump rule {j:?}")));
            }
            // jumps would make ρ positive on a zero stretch of the singular set
            let hits_zero = pieces.iter().any(|p| p.is_zero() && if j.side > 0 { p.hi > 0.0 } else { p.lo < 0.0 });
            if hits_zero {
                return Err(StructureError::AssumptionAViolated(format!(
                    "jump rule on the {} half-line meets a zero piece",
                    if j.side > 0 { "positive" } else { "negative" }
                )));
            }
        }
        let cells = singular_cells(&pieces);
        Ok(RawDensity { pieces, steps, jumps: jumps.iter().map(JumpTable::new).collect(), cells })
    }

    /// The singular set `S(ρ)`: zero pieces and zeros of order `p ≥ 1`.
    pub fn singular_set(&self) -> Vec<(f64, f64)> {
        singular_parts(&self.pieces)
    }

    fn piece_at(&self, x: f64, side: Side) -> &RawPiece {
        let i = match side {
            Side::Right => self.pieces.partition_point(|p| p.hi <= x),
            Side::Left => self.pieces.partition_point(|p| p.hi < x),
        };
        &self.pieces[i.min(self.pieces.len() - 1)]
    }

    fn step_factor(&self, x: f64, side: Side) -> f64 {
        self.steps.iter().filter(|s| s.active(x, side)).map(|s| s.factor).product()
    }

    fn jump_sum(&self, x: f64, side: Side) -> f64 {
        self.jumps.iter().map(|j| j.at(x, side)).sum()
    }

    fn breakpoints(&self, u: f64, v: f64) -> Vec<f64> {
        let mut pts = vec![u, v];
        for p in &self.pieces {
            pts.extend([p.lo, p.hi, p.x0]);
        }
        for s in &self.steps {
            pts.push(s.point);
            pts.extend(s.boundaries(16));
        }
        pts.retain(|x| *x >= u && *x <= v && x.is_finite() || *x == u || *x == v);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn quad<F: Fn(f64) -> f64>(&self, f: F, u: f64, v: f64) -> f64 {
        let pts = self.breakpoints(u, v);
        pts.windows(2).map(|w| quad::integrate(&f, w[0], w[1], 1e-12).value).sum()
    }

    /// Whether a step rule with a nontrivial factor accumulates at `x`.
    fn steps_accumulate_at(&self, x: f64) -> bool {
        self.steps.iter().any(|s| s.factor != 1.0 && s.point == x)
    }

    /// `(∫ρ finite, ∫1/ρ finite)` toward the end `x` of cell `i`.
    fn end_finiteness(&self, i: usize, end: End) -> (bool, bool) {
        let c = &self.cells[i];
        let x = if end == End::A { c.a } else { c.b };
        let inside = if end == End::A { Side::Right } else { Side::Left };
        let p = self.piece_at(x, inside);
        if x.is_finite() {
            if p.x0 == x && p.c > 0.0 {
                return (p.p > -1.0, p.p < 1.0);
            }
            return (true, true);
        }
        let jumps = self.jumps.iter().any(|j| (j.side > 0) == (end == End::B));
        let qo = p.outward_q(end);
        if qo > 0.0 {
            (false, true)
        } else if qo < 0.0 {
            (jumps, false)
        } else {
            (p.p < -1.0 && !jumps, p.p > 1.0)
        }
    }

    fn half_stats(&self, i: usize, end: End) -> (ExtendedReal, ExtendedReal) {
        let c = &self.cells[i];
        let (u, v) = match end {
            End::A => (c.a, c.e),
            End::B => (c.e, c.b),
        };
        let (int_fin, inv_fin) = self.end_finiteness(i, end);
        let value = |finite: bool, f: &dyn Fn(f64) -> f64| {
            if finite {
                ExtendedReal::numeric(self.quad(f, u, v))
            } else {
                ExtendedReal::infinite()
            }
        };
        let integral = value(int_fin, &|x| self.eval(x, Side::Right));
        let inverse = value(inv_fin, &|x| 1.0 / self.eval(x, Side::Right));
        (integral, inverse)
    }

    fn bv_toward(&self, x: f64, inside: Side) -> Flagged {
        if self.steps_accumulate_at(x) {
            return Flagged::certified(Verdict::False);
        }
        let p = self.piece_at(x, inside);
        Flagged::certified(Verdict::from_bool(!(p.x0 == x && p.c > 0.0 && p.p < 0.0)))
    }
}

fn singular_parts(pieces: &[RawPiece]) -> Vec<(f64, f64)> {
    let mut parts: Vec<(f64, f64)> = Vec::new();
    for p in pieces {
        if p.is_zero() {
            parts.push((p.lo, p.hi));
        } else if p.p >= 1.0 && p.x0 >= p.lo && p.x0 <= p.hi {
            parts.push((p.x0, p.x0));
        }
    }
    parts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in parts {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }
    merged
}

fn singular_cells(pieces: &[RawPiece]) -> Vec<GInterval> {
    let mut cells = Vec::new();
    let mut left = f64::NEG_INFINITY;
    for (lo, hi) in singular_parts(pieces) {
        if lo > left {
            cells.push((left, lo));
        }
        left = hi;
    }
    if left < f64::INFINITY {
        cells.push((left, f64::INFINITY));
    }
    cells
        .into_iter()
        .enumerate()
        .map(|(k, (a, b))| GInterval { a, b, e: reference_point(a, b), label: k as u64 + 1, level: None })
        .collect()
}

impl Density for RawDensity {
    fn cells(&self) -> &[GInterval] {
        &self.cells
    }

    fn eval(&self, x: f64, side: Side) -> f64 {
        let p = self.piece_at(x, side);
        let base = if p.is_zero() { 0.0 } else { p.log_value(x).exp() };
        base * self.step_factor(x, side) + self.jump_sum(x, side)
    }

    fn inverse_between(&self, _i: usize, u: f64, v: f64) -> f64 {
        self.quad(|x| 1.0 / self.eval(x, Side::Right), u, v)
    }

    fn integral_between(&self, _i: usize, u: f64, v: f64) -> f64 {
        self.quad(|x| self.eval(x, Side::Right), u, v)
    }

    fn cell_stats(&self, i: usize) -> IntervalStats {
        let (il, vl) = self.half_stats(i, End::A);
        let (ir, vr) = self.half_stats(i, End::B);
        // variation is not tabulated for closed-form densities
        let unknown = ExtendedReal::unknown();
        IntervalStats {
            integral: il + ir,
            inverse: vl + vr,
            inverse_left: vl,
            inverse_right: vr,
            variation: unknown,
            integral_left: il,
            integral_right: ir,
            variation_left: unknown,
            variation_right: unknown,
        }
    }

    fn tail(&self, i: usize, end: End) -> Option<TailClass> {
        let c = &self.cells[i];
        let x = if end == End::A { c.a } else { c.b };
        if x.is_finite() {
            return None;
        }
        let p = self.piece_at(x, if end == End::A { Side::Right } else { Side::Left });
        let jumps = self.jumps.iter().any(|j| (j.side > 0) == (end == End::B));
        let qo = p.outward_q(end);
        Some(if qo > 0.0 {
            TailClass::Growth { explodes: p.r > 2 }
        } else if qo < 0.0 {
            if jumps {
                TailClass::Bounded
            } else {
                TailClass::Decay
            }
        } else if p.p == 0.0 || (p.p < 0.0 && jumps) {
            TailClass::Bounded
        } else {
            TailClass::Power { gamma: p.p }
        })
    }

    fn bridge(&self, i: usize) -> ExtendedReal {
        if self.cells[i].b == self.cells[i + 1].a {
            ExtendedReal::ZERO
        } else {
            ExtendedReal::infinite()
        }
    }

    fn junction_bv(&self, i: usize) -> Flagged {
        self.end_bv(i, End::B).and(self.end_bv(i + 1, End::A))
    }

    fn locally_bv(&self, i: usize) -> Flagged {
        let c = &self.cells[i];
        let inside = |x: f64| x > c.a && x < c.b;
        let steps = self.steps.iter().any(|s| s.factor != 1.0 && inside(s.point));
        let poles = self.pieces.iter().any(|p| p.c > 0.0 && p.p < 0.0 && inside(p.x0) && p.x0 >= p.lo && p.x0 <= p.hi);
        Flagged::certified(Verdict::from_bool(!steps && !poles))
    }

    fn end_bv(&self, i: usize, end: End) -> Flagged {
        let c = &self.cells[i];
        match end {
            End::A => self.bv_toward(c.a, Side::Right),
            End::B => self.bv_toward(c.b, Side::Left),
        }
    }

    fn jump_points(&self, i: usize) -> Vec<f64> {
        let c = &self.cells[i];
        let mut pts: Vec<f64> = self.jumps.iter().flat_map(|j| j.locations()).collect();
        for s in &self.steps {
            pts.extend(s.boundaries(64));
        }
        for p in &self.pieces {
            pts.extend([p.lo, p.hi]);
        }
        pts.retain(|x| *x > c.a && *x < c.b);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    fn nu_density(&self, x: f64) -> f64 {
        let p = self.piece_at(x, Side::Right);
        if p.is_zero() || (p.p == 0.0 && p.q == 0.0) {
            return 0.0;
        }
        p.log_value(x).exp() * self.step_factor(x, Side::Right) * p.log_derivative(x)
    }
}

/// Effective intervals of a closed-form density.
pub fn density_to_effective_intervals(rho: &RawDensity) -> EffectiveIntervalSet {
    glue_effective_intervals(Arc::new(rho.clone()))
}

/// Summary of `ν_ρ`, the measure `dρ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NuSummary {
    /// `(location, ρ(y) − ρ(y−))` for the first listed jumps.
    pub atoms: Vec<(f64, f64)>,
    /// Whether more jumps exist than listed.
    pub truncated: bool,
    /// Whether `ν_ρ` has an absolutely continuous part.
    pub continuous: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SemimartingaleVerdict {
    Semimartingale { nu: NuSummary, confidence: Confidence },
    NotSemimartingale { reason: String },
    Unknown { reason: String },
}

const LISTED_ATOMS: usize = 256;

/// The process is a semimartingale iff ρ is locally of bounded variation on
/// every effective interval, including adjoined ends and glued junctions.
pub fn semimartingale_verdict(es: &EffectiveIntervalSet) -> SemimartingaleVerdict {
    let rho = es.density();
    let mut flag = Flagged::certified(Verdict::True);
    let mut failure = None;
    let mut note = |f: Flagged, what: String, flag: &mut Flagged| {
        if f.verdict != Verdict::True && failure.is_none() {
            failure = Some(what);
        }
        *flag = flag.and(f);
    };
    for iv in &es.intervals {
        for i in iv.cells.clone() {
            note(rho.locally_bv(i), format!("ρ is not locally BV inside cell {i}"), &mut flag);
            if i + 1 < iv.cells.end {
                note(rho.junction_bv(i), format!("ρ is not BV across the junction after cell {i}"), &mut flag);
            }
        }
        if iv.closed_lo {
            note(rho.end_bv(iv.cells.start, End::A), format!("ρ is not BV up to {}", iv.lo), &mut flag);
        }
        if iv.closed_hi {
            note(rho.end_bv(iv.cells.end - 1, End::B), format!("ρ is not BV up to {}", iv.hi), &mut flag);
        }
    }
    match flag.verdict {
        Verdict::False => SemimartingaleVerdict::NotSemimartingale { reason: failure.unwrap_or_default() },
        Verdict::Unknown => SemimartingaleVerdict::Unknown { reason: failure.unwrap_or_default() },
        Verdict::True => {
            let cells = rho.cells();
            let mut points: Vec<f64> = (0..cells.len()).flat_map(|i| rho.jump_points(i)).collect();
            points.extend(cells.iter().flat_map(|c| [c.a, c.b]).filter(|x| x.is_finite()));
            points.sort_by(f64::total_cmp);
            points.dedup();
            let mut atoms: Vec<(f64, f64)> = points
                .into_iter()
                .map(|y| (y, rho.eval(y, Side::Right) - rho.eval(y, Side::Left)))
                .filter(|(_, m)| *m != 0.0 && !m.is_nan())
                .collect();
            let truncated = atoms.len() > LISTED_ATOMS;
            atoms.truncate(LISTED_ATOMS);
            let continuous = cells.iter().any(|c| {
                let (lo, hi) = (c.a.max(c.e - 8.0), c.b.min(c.e + 8.0));
                (1..64).any(|k| rho.nu_density(lo + (hi - lo) * k as f64 / 64.0) != 0.0)
            });
            SemimartingaleVerdict::Semimartingale {
                nu: NuSummary { atoms, truncated, continuous },
                confidence: flag.confidence,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::density::cell_containing;
    use crate::structure::{check_conservative, Conservativeness};

    fn power(alpha: f64) -> RawDensity {
        let p = RawPiece { lo: f64::NEG_INFINITY, hi: f64::INFINITY, c: 1.0, x0: 0.0, p: alpha, q: 0.0, r: 1 };
        RawDensity::new(vec![p], vec![], vec![]).unwrap()
    }

    #[test]
    fn calkin_wilf_prefix() {
        let q: Vec<f64> = calkin_wilf().take(7).collect();
        assert_eq!(q, vec![1.0, 0.5, 2.0, 1.0 / 3.0, 1.5, 2.0 / 3.0, 3.0]);
    }

    #[test]
    fn power_density_intervals() {
        let es = density_to_effective_intervals(&power(0.5));
        assert_eq!(es.intervals.len(), 1);
        assert_eq!((es.intervals[0].lo, es.intervals[0].hi), (f64::NEG_INFINITY, f64::INFINITY));
        match semimartingale_verdict(&es) {
            SemimartingaleVerdict::Semimartingale { nu, .. } => {
                assert!(nu.continuous && nu.atoms.is_empty());
            }
            v => panic!("{v:?}"),
        }
        let rho = power(0.5);
        let x: f64 = 2.0;
        assert!((rho.nu_density(x) - 0.5 * x.powf(-0.5)).abs() < 1e-14);
        assert!((rho.nu_density(-x) + 0.5 * x.powf(-0.5)).abs() < 1e-14);

        let rho = power(1.5);
        assert_eq!(rho.singular_set(), vec![(0.0, 0.0)]);
        let es = density_to_effective_intervals(&rho);
        assert_eq!(es.intervals.len(), 2);
        assert!(es.intervals.iter().all(|k| !k.closed_lo && !k.closed_hi));
        assert_eq!(es.intervals[0].hi, 0.0);
        assert_eq!(es.intervals[1].lo, 0.0);
    }

    #[test]
    fn oscillating_steps_are_irreducible_but_not_semimartingale() {
        let rho = RawDensity::new(
            vec![RawPiece::constant(f64::NEG_INFINITY, f64::INFINITY, 1.0)],
            vec![StepRule { point: 0.0, scale: 1.0, factor: 2.0 }],
            vec![],
        )
        .unwrap();
        assert_eq!(rho.eval(0.4, Side::Right), 2.0);
        assert_eq!(rho.eval(0.3, Side::Right), 1.0);
        assert_eq!(rho.eval(0.5, Side::Right), 1.0);
        assert_eq!(rho.eval(0.5, Side::Left), 2.0);
        let es = density_to_effective_intervals(&rho);
        assert_eq!(es.intervals.len(), 1);
        assert!(matches!(check_conservative(&es), Conservativeness::Conservative { .. }));
        assert!(matches!(semimartingale_verdict(&es), SemimartingaleVerdict::NotSemimartingale { .. }));
    }

    #[test]
    fn rational_jumps_give_discrete_nu() {
        let rho = RawDensity::new(
            vec![RawPiece::constant(f64::NEG_INFINITY, f64::INFINITY, 1.0)],
            vec![],
            vec![JumpRule { side: 1, amplitude: 0.5, ratio: 0.5 }, JumpRule { side: -1, amplitude: 0.25, ratio: 0.5 }],
        )
        .unwrap();
        // q₁ = 1 carries ϱ⁺₁ = 0.5; q₂ = 1/2 carries 0.25
        assert!((rho.eval(1.0, Side::Right) - rho.eval(1.0, Side::Left) - 0.5).abs() < 1e-15);
        assert!((rho.eval(0.5, Side::Right) - rho.eval(0.5, Side::Left) - 0.25).abs() < 1e-15);
        // 1 + Σ 0.5·2^{1−n} = 2 once every listed rational is passed
        assert!((rho.eval(1e9, Side::Right) - 2.0).abs() < 1e-12);
        let es = density_to_effective_intervals(&rho);
        assert_eq!(es.intervals.len(), 1);
        match semimartingale_verdict(&es) {
            SemimartingaleVerdict::Semimartingale { nu, .. } => {
                assert!(!nu.continuous);
                let at_one = nu.atoms.iter().find(|a| a.0 == 1.0).unwrap();
                assert!((at_one.1 - 0.5).abs() < 1e-15);
                let at_minus_one = nu.atoms.iter().find(|a| a.0 == -1.0).unwrap();
                assert!((at_minus_one.1 + 0.25).abs() < 1e-15);
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn zero_piece_adjoins_closed_end() {
        let rho = RawDensity::new(
            vec![RawPiece::constant(f64::NEG_INFINITY, 0.0, 0.0), RawPiece::constant(0.0, f64::INFINITY, 1.0)],
            vec![],
            vec![],
        )
        .unwrap();
        let es = density_to_effective_intervals(&rho);
        assert_eq!(es.intervals.len(), 1);
        assert!(es.intervals[0].closed_lo);
        assert_eq!(es.intervals[0].lo, 0.0);
        assert_eq!(cell_containing(rho.cells(), 3.0), Some(0));
        let bad = RawDensity::new(
            vec![RawPiece::constant(f64::NEG_INFINITY, 0.0, 0.0), RawPiece::constant(0.0, f64::INFINITY, 1.0)],
            vec![],
            vec![JumpRule { side: -1, amplitude: 1.0, ratio: 0.5 }],
        );
        assert!(matches!(bad, Err(StructureError::AssumptionAViolated(_))));
    }

    #[test]
    fn cubic_exponential_tail_explodes() {
        let rho = RawDensity::new(
            vec![
                RawPiece::constant(f64::NEG_INFINITY, 1.0, 0.0),
                RawPiece { lo: 1.0, hi: f64::INFINITY, c: 1.0, x0: 0.0, p: 0.0, q: 1.0, r: 3 },
            ],
            vec![],
            vec![],
        )
        .unwrap();
        let es = density_to_effective_intervals(&rho);
        assert!(matches!(check_conservative(&es), Conservativeness::Explodes { .. }));
    }
}
