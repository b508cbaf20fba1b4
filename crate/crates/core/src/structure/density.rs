//! Density functions `ρ` on the line, the density built from a measure and
//! constants `c_n`, and the recovery of `μ` from `ρ`.

use std::sync::Arc;

use super::{Structure, StructureError};
use crate::measure::{Atom, GInterval};
use crate::num::{ExtendedReal, Flagged, Verdict};
use crate::profile::{BvStatus, BvVerdict, End, EndModel, EndpointLimit, Half, IntervalStats, Side, TailClass};

/// A nonnegative density whose `1/ρ` is locally integrable exactly on a
/// sorted list of disjoint open cells.
pub trait Density: Send + Sync {
    /// Maximal open intervals on which `1/ρ` is locally integrable, sorted.
    fn cells(&self) -> &[GInterval];

    /// `ρ(x)` or `ρ(x−)`; `+∞` where ρ blows up, NaN where undecided.
    fn eval(&self, x: f64, side: Side) -> f64;

    fn log_eval(&self, x: f64, side: Side) -> f64 {
        self.eval(x, side).ln()
    }

    /// `∫_u^v 1/ρ` for `u ≤ v` inside cell `i`.
    fn inverse_between(&self, i: usize, u: f64, v: f64) -> f64;

    /// `∫_u^v ρ` for `u ≤ v` inside cell `i`.
    fn integral_between(&self, i: usize, u: f64, v: f64) -> f64;

    /// `∫ρ`, `∫1/ρ` and the variation over each half of cell `i`.
    fn cell_stats(&self, i: usize) -> IntervalStats;

    /// Tail class toward an infinite end of cell `i`.
    fn tail(&self, i: usize, end: End) -> Option<TailClass>;

    /// `∫ 1/ρ` over the stretch between cells `i` and `i + 1`.
    fn bridge(&self, i: usize) -> ExtendedReal;

    /// Bounded variation of ρ on a neighbourhood of the stretch between cells
    /// `i` and `i + 1`.
    fn junction_bv(&self, i: usize) -> Flagged;

    /// Bounded variation of ρ on compacts inside cell `i`.
    fn locally_bv(&self, i: usize) -> Flagged;

    /// Bounded variation of ρ up to the finite `end` of cell `i`.
    fn end_bv(&self, i: usize, end: End) -> Flagged;

    /// Jump locations inside cell `i`, truncated for infinite families.
    fn jump_points(&self, i: usize) -> Vec<f64>;

    /// Density of the absolutely continuous part of `dρ` at `x`.
    fn nu_density(&self, x: f64) -> f64;
}

/// Index of the cell containing `x` in its interior.
pub(crate) fn cell_containing(cells: &[GInterval], x: f64) -> Option<usize> {
    let i = cells.partition_point(|c| c.b <= x);
    cells.get(i).filter(|c| c.a < x).map(|_| i)
}

fn limit_value(l: EndpointLimit) -> f64 {
    match l {
        EndpointLimit::Positive { value } => value,
        EndpointLimit::Zero => 0.0,
        EndpointLimit::Diverges => f64::INFINITY,
        EndpointLimit::Unknown => f64::NAN,
    }
}

fn bv_flag(b: &BvVerdict) -> Flagged {
    let verdict = match b.status {
        BvStatus::Bv => Verdict::True,
        BvStatus::NotBv => Verdict::False,
        BvStatus::Unknown => Verdict::Unknown,
    };
    Flagged { verdict, confidence: b.confidence }
}

/// Geometric extrapolation of a positive series from its level sums.
fn level_tail(sums: &[f64]) -> ExtendedReal {
    let n = sums.len();
    if n < 3 {
        return ExtendedReal::unknown();
    }
    let r = sums[n - 1] / sums[n - 2];
    if !r.is_finite() {
        return ExtendedReal::unknown();
    }
    if r < 1.0 - 1e-3 {
        ExtendedReal::numeric(sums[n - 1] * r / (1.0 - r))
    } else if r >= 1.0 - 1e-6 {
        ExtendedReal::numeric_infinite()
    } else {
        ExtendedReal::unknown()
    }
}

/// Bridge estimates for a truncated Cantor construction: the deeper levels
/// are spread evenly over the `2^J` slots of the last level.
#[derive(Clone, Debug)]
struct CantorTails {
    inverse: ExtendedReal,
    variation: ExtendedReal,
}

/// `ρ = c_n ϱ_n` on every interval of `G`, `c_n lim ϱ_n` at points of `Ξ⁺`,
/// zero elsewhere.
#[derive(Clone, Debug)]
pub struct SkewDensity {
    structure: Arc<Structure>,
    constants: Vec<f64>,
    cantor: Option<CantorTails>,
}

impl SkewDensity {
    pub fn new(structure: Arc<Structure>, constants: Vec<f64>) -> Result<Self, StructureError> {
        if constants.len() != structure.len() || constants.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(StructureError::InvalidDensity(format!(
                "need {} positive constants, got {:?}",
                structure.len(),
                constants.iter().take(4).collect::<Vec<_>>()
            )));
        }
        for i in 0..structure.len() {
            if let Err(e) = structure.profile(i) {
                return Err(e.clone().into());
            }
        }
        let cantor = structure.measure().cantor().map(|c| {
            if c.limit_measure > 0.0 {
                return CantorTails { inverse: ExtendedReal::infinite(), variation: ExtendedReal::infinite() };
            }
            let mut inv = vec![0.0; c.depth as usize];
            let mut var = vec![0.0; c.depth as usize];
            let mut finite = true;
            for (i, iv) in structure.decomposition().intervals.iter().enumerate() {
                let (Some(p), Some(st)) = (iv.level, structure.stats(i)) else { continue };
                match (st.inverse.value(), st.variation.value()) {
                    (Some(b), Some(v)) => {
                        inv[p as usize - 1] += b / constants[i];
                        var[p as usize - 1] += v * constants[i];
                    }
                    _ => finite = false,
                }
            }
            if !finite {
                return CantorTails { inverse: ExtendedReal::unknown(), variation: ExtendedReal::unknown() };
            }
            let slots = 2f64.powi(c.depth as i32);
            CantorTails { inverse: level_tail(&inv).scale(1.0 / slots), variation: level_tail(&var).scale(1.0 / slots) }
        });
        Ok(SkewDensity { structure, constants, cantor })
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn constants(&self) -> &[f64] {
        &self.constants
    }

    /// The same density with every constant multiplied by `lambda`.
    pub fn rescaled(&self, lambda: f64) -> Result<Self, StructureError> {
        SkewDensity::new(self.structure.clone(), self.constants.iter().map(|c| c * lambda).collect())
    }

    fn profile(&self, i: usize) -> &crate::profile::DensityProfile {
        self.structure.profile(i).expect("checked in the constructor")
    }

    fn end_value(&self, i: usize, end: End) -> f64 {
        self.constants[i] * limit_value(self.profile(i).endpoint_limit(end).limit)
    }
}

impl Density for SkewDensity {
    fn cells(&self) -> &[GInterval] {
        &self.structure.decomposition().intervals
    }

    fn eval(&self, x: f64, side: Side) -> f64 {
        let cells = self.cells();
        if let Some(i) = cell_containing(cells, x) {
            return self.constants[i] * self.profile(i).eval_density(x, side).unwrap_or(f64::NAN);
        }
        match side {
            Side::Right => {
                let i = cells.partition_point(|c| c.a < x);
                let at_plus = self.structure.measure().xi_plus().binary_search_by(|z| z.total_cmp(&x)).is_ok();
                match cells.get(i) {
                    Some(c) if c.a == x && at_plus => self.end_value(i, End::A),
                    _ => 0.0,
                }
            }
            Side::Left => {
                let i = cells.partition_point(|c| c.b < x);
                match cells.get(i) {
                    Some(c) if c.b == x => self.end_value(i, End::B),
                    _ => 0.0,
                }
            }
        }
    }

    fn log_eval(&self, x: f64, side: Side) -> f64 {
        match cell_containing(self.cells(), x) {
            Some(i) => self.constants[i].ln() + self.profile(i).log_density(x, side).unwrap_or(f64::NAN),
            None => self.eval(x, side).ln(),
        }
    }

    fn inverse_between(&self, i: usize, u: f64, v: f64) -> f64 {
        self.profile(i).segment(u, v).inverse.value().unwrap_or(f64::NAN) / self.constants[i]
    }

    fn integral_between(&self, i: usize, u: f64, v: f64) -> f64 {
        self.profile(i).segment(u, v).integral.value().unwrap_or(f64::NAN) * self.constants[i]
    }

    fn cell_stats(&self, i: usize) -> IntervalStats {
        let s = *self.structure.stats(i).expect("checked in the constructor");
        let c = self.constants[i];
        IntervalStats {
            integral: s.integral.scale(c),
            inverse: s.inverse.scale(1.0 / c),
            inverse_left: s.inverse_left.scale(1.0 / c),
            inverse_right: s.inverse_right.scale(1.0 / c),
            variation: s.variation.scale(c),
            integral_left: s.integral_left.scale(c),
            integral_right: s.integral_right.scale(c),
            variation_left: s.variation_left.scale(c),
            variation_right: s.variation_right.scale(c),
        }
    }

    fn tail(&self, i: usize, end: End) -> Option<TailClass> {
        match self.profile(i).end_model(end) {
            EndModel::Tail { class } => Some(class),
            _ => None,
        }
    }

    fn bridge(&self, i: usize) -> ExtendedReal {
        if let Some(t) = &self.cantor {
            return t.inverse;
        }
        let cells = self.cells();
        let (x, y) = (cells[i].b, cells[i + 1].a);
        if x == y {
            ExtendedReal::ZERO
        } else {
            // ρ vanishes on a stretch of positive length
            ExtendedReal::infinite()
        }
    }

    fn junction_bv(&self, i: usize) -> Flagged {
        let halves = self.end_bv(i, End::B).and(self.end_bv(i + 1, End::A));
        match &self.cantor {
            Some(t) => halves.and(Flagged::from(t.variation)),
            None => halves,
        }
    }

    fn end_bv(&self, i: usize, end: End) -> Flagged {
        let half = match end {
            End::A => Half::Left,
            End::B => Half::Right,
        };
        bv_flag(&self.profile(i).bv_certificate(half))
    }

    fn locally_bv(&self, _i: usize) -> Flagged {
        // |μ| is Radon inside every interval of G, so ϱ has locally finite variation
        Flagged::certified(Verdict::True)
    }

    fn jump_points(&self, i: usize) -> Vec<f64> {
        self.profile(i).jump_locations(2000)
    }

    fn nu_density(&self, x: f64) -> f64 {
        let m: f64 =
            self.structure.measure().pieces().iter().filter(|p| p.lo < x && x < p.hi).map(|p| p.density(x)).sum();
        if m == 0.0 {
            return 0.0;
        }
        2.0 * m * self.eval(x, Side::Right)
    }
}

/// `μ` recovered from a density: atoms `ν_ρ({y}) / (ρ(y) + ρ(y−))` and the
/// continuous part `(ln ρ)′ / 2`.
pub struct RecoveredMeasure<'a> {
    pub atoms: Vec<Atom>,
    rho: &'a dyn Density,
}

impl std::fmt::Debug for RecoveredMeasure<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RecoveredMeasure").field("atoms", &self.atoms).finish()
    }
}

impl RecoveredMeasure<'_> {
    pub fn atom_at(&self, x: f64) -> f64 {
        self.atoms.binary_search_by(|a| a.location.total_cmp(&x)).map_or(0.0, |i| self.atoms[i].weight)
    }

    /// Continuous density at `x`, by Richardson-extrapolated central
    /// differences of `ln ρ`; `x` must keep a distance from jumps.
    pub fn density(&self, x: f64) -> f64 {
        let cells = self.rho.cells();
        let Some(i) = cell_containing(cells, x) else { return 0.0 };
        let room = (x - cells[i].a).min(cells[i].b - x);
        let h = (1e-3 * x.abs().max(1.0)).min(0.25 * room);
        let d = |h: f64| (self.rho.log_eval(x + h, Side::Right) - self.rho.log_eval(x - h, Side::Right)) / (2.0 * h);
        0.5 * (4.0 * d(0.5 * h) - d(h)) / 3.0
    }
}

fn jump_weight(right: f64, left: f64) -> Option<f64> {
    match (right.is_infinite(), left.is_infinite()) {
        (true, false) => Some(1.0),
        (false, true) => Some(-1.0),
        (true, true) => None,
        _ if right + left > 0.0 => Some((right - left) / (right + left)),
        _ => None,
    }
}

/// Recover `μ` from `ρ`. Every finite endpoint reached by a finite `∫1/ρ` must
/// carry a bounded-variation extension.
pub fn measure_density_roundtrip(rho: &SkewDensity) -> Result<RecoveredMeasure<'_>, StructureError> {
    let cells = rho.cells();
    for (i, iv) in cells.iter().enumerate() {
        let st = rho.cell_stats(i);
        for (x, inverse, half) in [(iv.a, st.inverse_left, Half::Left), (iv.b, st.inverse_right, Half::Right)] {
            if x.is_finite()
                && inverse.is_finite() == Verdict::True
                && rho.profile(i).bv_certificate(half).status == BvStatus::NotBv
            {
                return Err(StructureError::NotBoundedVariation(x));
            }
        }
    }
    let mut points: Vec<f64> = (0..cells.len()).flat_map(|i| rho.jump_points(i)).collect();
    points.extend(cells.iter().flat_map(|c| [c.a, c.b]).filter(|x| x.is_finite()));
    points.sort_by(f64::total_cmp);
    points.dedup();
    let atoms = points
        .into_iter()
        .filter_map(|y| {
            let w = jump_weight(rho.eval(y, Side::Right), rho.eval(y, Side::Left))?;
            (w != 0.0 && w.is_finite()).then_some(Atom { location: y, weight: w })
        })
        .collect();
    Ok(RecoveredMeasure { atoms, rho })
}
