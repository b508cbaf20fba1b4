use crate::profile::Side;
use crate::structure::EffectiveIntervalSet;

use super::SimError;

/// Uniform knots across the window, before refinement.
const BASE_KNOTS: usize = 2048;
/// Geometric refinement depth around special points.
const REFINE: i32 = 40;
/// Cap on refined special points (Cantor-type intervals have many).
const MAX_SPECIAL: usize = 4096;
/// Smallest refinement offset relative to `1 + |x|`; below this the scale
/// differences drown in rounding.
const MIN_OFFSET: f64 = 1e-8;

/// A jump of `h` at `z`: the process is locally an oscillating Brownian
/// motion there, i.e. skew BM with parameter `alpha` in local coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct HJump {
    pub z: f64,
    pub h_minus: f64,
    pub h_plus: f64,
    pub alpha: f64,
}

/// `f = s_k` tabulated on a knot grid, with its piecewise-linear inverse `g`
/// and `h = 1/ρ ∘ g` taken as the secant slope on each segment.
#[derive(Clone, Debug)]
pub struct NaturalScaleTransform {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    reflect_lo: bool,
    reflect_hi: bool,
    interval: usize,
    image: (f64, f64),
    jumps: Vec<HJump>,
    /// Nearest jump for each segment.
    nearest: Vec<Option<u32>>,
}

/// Tabulate the scale function of interval `k` over `window ∩ I_k`.
/// Adjoined ends inside the window become reflecting; open ends are
/// approached geometrically and saturate.
pub fn natural_scale(
    es: &EffectiveIntervalSet,
    k: usize,
    window: (f64, f64),
) -> Result<NaturalScaleTransform, SimError> {
    let iv = es.intervals.get(k).ok_or_else(|| SimError::InvalidParameter(format!("no effective interval {k}")))?;
    let lo = window.0.max(iv.lo);
    let hi = window.1.min(iv.hi);
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(SimError::InvalidParameter(format!("empty window ({lo}, {hi})")));
    }
    let reflect_lo = iv.closed_lo && lo == iv.lo;
    let reflect_hi = iv.closed_hi && hi == iv.hi;
    let open_lo = lo == iv.lo && !iv.closed_lo;
    let open_hi = hi == iv.hi && !iv.closed_hi;
    let d = (hi - lo) / BASE_KNOTS as f64;

    let rho = es.density();
    let cells = rho.cells();
    let jump_points: Vec<f64> =
        iv.cells.clone().flat_map(|i| rho.jump_points(i)).filter(|x| *x > lo && *x < hi).collect();
    let mut special: Vec<f64> = iv
        .cells
        .clone()
        .flat_map(|i| [cells[i].a, cells[i].b])
        .filter(|x| *x > lo && *x < hi)
        .chain(jump_points.iter().copied())
        .collect();
    special.sort_by(f64::total_cmp);
    special.dedup();
    if special.len() > MAX_SPECIAL {
        let step = special.len().div_ceil(MAX_SPECIAL);
        special = special.into_iter().step_by(step).collect();
    }

    let mut knots: Vec<f64> = (0..=BASE_KNOTS).map(|j| lo + d * j as f64).collect();
    knots.extend(special.iter().copied());
    let offsets = |x: f64| {
        let floor = MIN_OFFSET * (1.0 + x.abs());
        (0..=REFINE).map(move |j| d * 2f64.powi(-j)).filter(move |o| *o >= floor)
    };
    for &s in &special {
        knots.extend(offsets(s).flat_map(|o| [s - o, s + o]));
    }
    knots.extend(offsets(lo).map(|o| lo + o));
    knots.extend(offsets(hi).map(|o| hi - o));
    knots.retain(|x| (*x > lo || (*x == lo && !open_lo)) && (*x < hi || (*x == hi && !open_hi)));
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let values = crate::par::map(&knots, |&x| es.scale(k, x));
    if values.iter().any(|v| !v.is_finite()) {
        return Err(SimError::ScaleUnavailable(format!("non-finite scale value on interval {k}")));
    }
    // keep a strictly increasing table
    let (mut xs, mut fs) = (Vec::with_capacity(knots.len()), Vec::with_capacity(knots.len()));
    for (x, v) in knots.into_iter().zip(values) {
        if fs.last().is_none_or(|&last| v > last) {
            xs.push(x);
            fs.push(v);
        }
    }
    if xs.len() < 2 {
        return Err(SimError::ScaleUnavailable("scale function is flat on the window".into()));
    }
    let slopes: Vec<f64> = xs.windows(2).zip(fs.windows(2)).map(|(x, f)| (f[1] - f[0]) / (x[1] - x[0])).collect();
    let mut jumps: Vec<HJump> = jump_points
        .iter()
        .filter_map(|&x| {
            let h_plus = 1.0 / rho.eval(x, Side::Right);
            let h_minus = 1.0 / rho.eval(x, Side::Left);
            let ok = h_plus.is_finite() && h_minus.is_finite() && h_plus > 0.0 && h_minus > 0.0;
            (ok && (h_plus / h_minus - 1.0).abs() > 1e-12).then(|| HJump {
                z: es.scale(k, x),
                h_minus,
                h_plus,
                alpha: h_minus / (h_minus + h_plus),
            })
        })
        .collect();
    jumps.sort_by(|a, b| a.z.total_cmp(&b.z));
    let nearest = fs
        .windows(2)
        .map(|f| {
            let mid = 0.5 * (f[0] + f[1]);
            let j = jumps.partition_point(|h| h.z < mid);
            let below = j.checked_sub(1);
            let above = (j < jumps.len()).then_some(j);
            match (below, above) {
                (Some(b), Some(a)) => Some(if mid - jumps[b].z <= jumps[a].z - mid { b } else { a }),
                (b, a) => b.or(a),
            }
            .map(|i| i as u32)
        })
        .collect();
    Ok(NaturalScaleTransform {
        knots: xs,
        values: fs,
        slopes,
        reflect_lo,
        reflect_hi,
        interval: k,
        image: iv.image,
        jumps,
        nearest,
    })
}

/// Transform for a path started at `x0` over horizon `t`: the window is wide
/// enough that a Brownian-scale excursion never reaches a truncated edge.
pub fn natural_scale_around(es: &EffectiveIntervalSet, x0: f64, t: f64) -> Result<NaturalScaleTransform, SimError> {
    let k = es.locate(x0).ok_or(SimError::StartOutside(x0))?;
    let w = 10.0 * t.sqrt() + 1.0;
    natural_scale(es, k, (x0 - w, x0 + w))
}

impl NaturalScaleTransform {
    pub fn interval(&self) -> usize {
        self.interval
    }

    /// Tabulated `x` range.
    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], self.knots[self.knots.len() - 1])
    }

    /// Tabulated `z` range.
    pub fn range(&self) -> (f64, f64) {
        (self.values[0], self.values[self.values.len() - 1])
    }

    /// Diameter of the whole effective interval in natural scale.
    pub fn diameter(&self) -> f64 {
        self.image.1 - self.image.0
    }

    pub fn reflecting(&self) -> (bool, bool) {
        (self.reflect_lo, self.reflect_hi)
    }

    pub fn f(&self, x: f64) -> f64 {
        let (lo, hi) = self.domain();
        if x <= lo {
            return self.values[0];
        }
        if x >= hi {
            return self.values[self.values.len() - 1];
        }
        let j = self.knots.partition_point(|k| *k <= x) - 1;
        self.values[j] + self.slopes[j] * (x - self.knots[j])
    }

    /// Segment holding `z`, right-continuous at knots.
    pub(crate) fn segment(&self, z: f64) -> usize {
        let j = self.values.partition_point(|v| *v <= z);
        j.saturating_sub(1).min(self.slopes.len() - 1)
    }

    /// Re-find the segment after a small move, starting from `j`.
    #[inline]
    pub(crate) fn relocate(&self, z: f64, mut j: usize) -> usize {
        let last = self.slopes.len() - 1;
        while j > 0 && z < self.values[j] {
            j -= 1;
        }
        while j < last && z >= self.values[j + 1] {
            j += 1;
        }
        j
    }

    #[inline]
    pub(crate) fn g_at(&self, z: f64, j: usize) -> f64 {
        let x = self.knots[j] + (z - self.values[j]) / self.slopes[j];
        x.clamp(self.knots[j], self.knots[j + 1])
    }

    #[inline]
    pub(crate) fn slope(&self, j: usize) -> f64 {
        self.slopes[j]
    }

    /// The jump of `h` nearest to segment `j`, if any.
    #[inline]
    pub(crate) fn jump_near(&self, j: usize) -> Option<&HJump> {
        self.nearest[j].map(|i| &self.jumps[i as usize])
    }

    pub fn g(&self, z: f64) -> f64 {
        let (zl, zh) = self.range();
        let z = z.clamp(zl, zh);
        self.g_at(z, self.segment(z))
    }

    pub fn h(&self, z: f64) -> f64 {
        self.slopes[self.segment(z)]
    }

    /// Fold `z` back into the range at reflecting ends and clamp at the
    /// others. Returns whether the value was clamped.
    #[inline]
    pub(crate) fn fold(&self, z: &mut f64) -> bool {
        let (zl, zh) = self.range();
        for _ in 0..64 {
            if self.reflect_lo && *z < zl {
                *z = 2.0 * zl - *z;
            } else if self.reflect_hi && *z > zh {
                *z = 2.0 * zh - *z;
            } else {
                break;
            }
        }
        if *z < zl {
            *z = zl;
            true
        } else if *z > zh {
            *z = zh;
            true
        } else {
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::structure::fixtures::skew;
    use crate::structure::{
        construct_constants, density_to_effective_intervals, glue_effective_intervals, ConstantsTarget, RawDensity,
        RawPiece, SkewDensity, Structure,
    };

    fn glued(m: &crate::measure::CheckedMeasure) -> EffectiveIntervalSet {
        let s = Arc::new(Structure::new(m).unwrap());
        let c = construct_constants(&s, ConstantsTarget::AnyValid).unwrap();
        glue_effective_intervals(Arc::new(SkewDensity::new(s, c).unwrap()))
    }

    #[test]
    fn flat_density_is_identity() {
        let es = density_to_effective_intervals(
            &RawDensity::new(vec![RawPiece::constant(f64::NEG_INFINITY, f64::INFINITY, 1.0)], vec![], vec![]).unwrap(),
        );
        let t = natural_scale(&es, 0, (-5.0, 5.0)).unwrap();
        for x in [-4.5, -1.0, 0.0, 0.3, 4.9] {
            assert!((t.f(x) - x).abs() < 1e-12);
            assert!((t.h(x) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn skew_transform_is_piecewise_linear() {
        let alpha = 0.75;
        let es = glued(&skew(alpha));
        let t = natural_scale(&es, 0, (-3.0, 3.0)).unwrap();
        let ratio = alpha / (1.0 - alpha);
        for x in [-2.0, -0.5, 0.0, 0.7, 2.5] {
            let want = if x >= 0.0 { x } else { ratio * x };
            assert!((t.f(x) - want).abs() < 1e-10, "f({x})");
            assert!((t.g(t.f(x)) - x).abs() < 1e-10);
        }
        // right-continuous at the atom
        assert!((t.h(0.0) - 1.0).abs() < 1e-9);
        assert!((t.h(-1e-3) - ratio).abs() < 1e-9);
    }

    #[test]
    fn square_root_scale() {
        // ϱ = |z|^{1/2}: f(z) − f(0) = −2|z|^{1/2} for z < 0
        let p = |lo, hi| RawPiece { lo, hi, c: 1.0, x0: 0.0, p: 0.5, q: 0.0, r: 1 };
        let raw = RawDensity::new(vec![p(f64::NEG_INFINITY, 0.0), p(0.0, f64::INFINITY)], vec![], vec![]).unwrap();
        let es = density_to_effective_intervals(&raw);
        assert_eq!(es.intervals.len(), 1);
        let t = natural_scale(&es, 0, (-4.0, 1.0)).unwrap();
        let f0 = t.f(0.0);
        for z in [-4.0f64, -1.0, -0.25] {
            let want = -2.0 * (-z).sqrt();
            assert!((t.f(z) - f0 - want).abs() < 1e-6, "f({z})");
        }
        for w in [-3.0, -1.0, -0.1] {
            let want = -(w / 2.0f64).powi(2);
            assert!((t.g(f0 + w) - want).abs() < 1e-3, "g({w})");
        }
    }

    #[test]
    fn reflecting_flags_follow_adjoined_ends() {
        let es = glued(&crate::structure::fixtures::power_barrier(1.5));
        let k = es.locate(-1.0).unwrap();
        let t = natural_scale(&es, k, (-3.0, 3.0)).unwrap();
        let iv = &es.intervals[k];
        assert_eq!(t.reflecting().1, iv.closed_hi && iv.hi <= 3.0);
        let (zl, zh) = t.range();
        let mut z = zh + 0.25 * (zh - zl).min(1.0);
        let clamped = t.fold(&mut z);
        assert!(z <= zh && z >= zl);
        assert_eq!(clamped, !t.reflecting().1);
    }
}
