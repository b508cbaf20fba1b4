use serde::{Deserialize, Serialize};

use super::paths::{PathEnsemble, Window};
use super::SimError;
use crate::measure::{CheckedMeasure, Span};

/// Minimum window half-width in units of the scheme's spatial step.
const MIN_STEPS_PER_WINDOW: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSe {
    pub mean: f64,
    pub stderr: f64,
}

impl MeanSe {
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Self {
        let (mut n, mut s, mut s2) = (0.0, 0.0, 0.0);
        for x in xs {
            n += 1.0;
            s += x;
            s2 += x * x;
        }
        let mean = s / n;
        let var = if n > 1.0 { ((s2 - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
        MeanSe { mean, stderr: (var / n).sqrt() }
    }
}

/// `|a − b| ≤ k·√(se_a² + se_b²)`.
pub fn agree(a: MeanSe, b: MeanSe, k: f64) -> bool {
    (a.mean - b.mean).abs() <= k * a.stderr.hypot(b.stderr)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Occupation {
    pub estimate: f64,
    pub stderr: f64,
    pub n: usize,
}

impl From<Occupation> for MeanSe {
    fn from(o: Occupation) -> Self {
        MeanSe { mean: o.estimate, stderr: o.stderr }
    }
}

/// Fraction of paths inside `set` at time `at`, with binomial stderr.
pub fn estimate_occupation(e: &PathEnsemble, set: &Span, at: f64) -> Result<Occupation, SimError> {
    let j = e.time_index(at)?;
    let n = e.n_paths();
    let hits = (0..n).filter(|&i| set.contains(e.path(i)[j])).count();
    let p = hits as f64 / n as f64;
    Ok(Occupation { estimate: p, stderr: (p * (1.0 - p) / n as f64).sqrt(), n })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalTimeEstimate {
    pub z: f64,
    pub eps: f64,
    pub at: f64,
    pub per_path: Vec<f64>,
    pub mean: f64,
    pub stderr: f64,
    /// `2·L̂(ε) − L̂(2ε)` when the doubled window was recorded. `L^a` has a
    /// kink at the starting level, so the plain estimator carries an `O(ε)`
    /// bias which this removes.
    pub corrected: Option<MeanSe>,
}

impl LocalTimeEstimate {
    pub fn summary(&self) -> MeanSe {
        MeanSe { mean: self.mean, stderr: self.stderr }
    }

    /// The corrected estimate when available, the plain one otherwise.
    pub fn best(&self) -> MeanSe {
        self.corrected.unwrap_or(self.summary())
    }
}

/// Occupation of a recorded window divided by its width, per path.
pub fn estimate_window_rate(e: &PathEnsemble, w: Window, at: f64) -> Result<MeanSe, SimError> {
    Ok(MeanSe::of(window_rates(e, w, at)?))
}

fn window_rates(e: &PathEnsemble, w: Window, at: f64) -> Result<Vec<f64>, SimError> {
    let half = 0.5 * w.width();
    let min = MIN_STEPS_PER_WINDOW * e.resolution;
    if half < min * (1.0 - 1e-9) {
        return Err(SimError::WindowTooNarrow { eps: half, min });
    }
    let j = e.time_index(at)?;
    let k = e.window_index(w)?;
    Ok((0..e.n_paths()).map(|i| e.occupation(i, k, j) / w.width()).collect())
}

/// `(1/2ε)∫₀^t 1_{(z−ε, z+ε)}(Y_s) ds`, the symmetric local time estimator
/// (the martingale part is Brownian, so `d⟨Y⟩ = ds`).
pub fn estimate_local_time(e: &PathEnsemble, z: f64, eps: f64, at: f64) -> Result<LocalTimeEstimate, SimError> {
    let per_path = window_rates(e, Window::around(z, eps), at)?;
    let MeanSe { mean, stderr } = MeanSe::of(per_path.iter().copied());
    let corrected = extrapolated(e, z, eps, at, &per_path).map(MeanSe::of);
    Ok(LocalTimeEstimate { z, eps, at, per_path, mean, stderr, corrected })
}

/// Per-path `2·r(ε) − r(2ε)`, if the doubled window exists.
fn extrapolated(e: &PathEnsemble, z: f64, eps: f64, at: f64, plain: &[f64]) -> Option<Vec<f64>> {
    let wide = window_rates(e, Window::around(z, 2.0 * eps), at).ok()?;
    Some(plain.iter().zip(wide).map(|(a, b)| 2.0 * a - b).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// `(z, μ_z, half-width of the window used)`.
    pub atoms: Vec<(f64, f64, f64)>,
    /// `X_T − x0 − M_T`.
    pub residual: MeanSe,
    /// `Σ μ_z L̂^z_T`.
    pub drift: MeanSe,
    /// Per-path difference of the two.
    pub discrepancy: MeanSe,
    /// Discrepancy within three standard errors of zero.
    pub consistent: bool,
}

/// Compare the Tanaka residual of every path with the local-time drift
/// `Σ μ_z L^z_T`. Every atom needs a recorded window centred on it; the
/// narrowest one is used, corrected as in [`LocalTimeEstimate`] when its
/// doubled window was recorded too.
pub fn drift_consistency_check(e: &PathEnsemble, m: &CheckedMeasure) -> Result<DriftReport, SimError> {
    if !m.is_finite_atomic() {
        return Err(SimError::NotFiniteAtomic);
    }
    let at = *e.times.last().expect("ensembles save the horizon");
    let mut atoms = Vec::new();
    let mut rates = Vec::new();
    for a in m.atoms().iter().filter(|a| a.weight != 0.0) {
        let w = e
            .config
            .windows
            .iter()
            .filter(|w| (0.5 * (w.lo + w.hi) - a.location).abs() <= 1e-12 * (1.0 + a.location.abs()))
            .filter(|w| 0.5 * w.width() >= MIN_STEPS_PER_WINDOW * e.resolution)
            .min_by(|u, v| u.width().total_cmp(&v.width()))
            .copied()
            .ok_or(SimError::WindowNotRecorded(a.location, a.location))?;
        let eps = 0.5 * w.width();
        let plain = window_rates(e, w, at)?;
        rates.push(extrapolated(e, a.location, eps, at, &plain).unwrap_or(plain));
        atoms.push((a.location, a.weight, 0.5 * w.width()));
    }
    let x0 = e.config.x0;
    let n = e.n_paths();
    let residual: Vec<f64> = (0..n).map(|i| e.terminal(i) - x0 - e.martingale(i)).collect();
    let drift: Vec<f64> = (0..n).map(|i| atoms.iter().zip(&rates).map(|(a, r)| a.1 * r[i]).sum()).collect();
    let discrepancy = MeanSe::of(residual.iter().zip(&drift).map(|(r, d)| r - d));
    let consistent = discrepancy.mean.abs() <= 3.0 * discrepancy.stderr + 1e-12;
    Ok(DriftReport { atoms, residual: MeanSe::of(residual), drift: MeanSe::of(drift), discrepancy, consistent })
}
