use std::collections::HashMap;
use std::io::{self, Write};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::transform::NaturalScaleTransform;
use super::SimError;
use crate::measure::CheckedMeasure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    EulerNaturalScale,
    GridWalk,
}

/// An open occupation window `(lo, hi)` tracked along every path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn around(z: f64, eps: f64) -> Self {
        Window { lo: z - eps, hi: z + eps }
    }

    pub fn right_of(z: f64, eps: f64) -> Self {
        Window { lo: z, hi: z + eps }
    }

    pub fn left_of(z: f64, eps: f64) -> Self {
        Window { lo: z - eps, hi: z }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub x0: f64,
    pub horizon: f64,
    /// `dt` for the Euler scheme, the grid spacing for the walk.
    pub step: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Number of saved time points after the start.
    pub saves: usize,
    pub windows: Vec<Window>,
}

impl SimConfig {
    /// Defaults: `dt = 1e-4·T`, 100 saved points, no windows.
    pub fn new(x0: f64, horizon: f64, n_paths: usize, seed: u64) -> Self {
        SimConfig { x0, horizon, step: 1e-4 * horizon, n_paths, seed, saves: 100, windows: Vec::new() }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_windows(mut self, windows: impl IntoIterator<Item = Window>) -> Self {
        self.windows.extend(windows);
        self
    }

    pub fn with_saves(mut self, saves: usize) -> Self {
        self.saves = saves;
        self
    }

    fn validate(&self) -> Result<(), SimError> {
        let bad = |what: &str| Err(SimError::InvalidParameter(what.to_string()));
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad("horizon must be positive");
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad("step must be positive");
        }
        if self.n_paths == 0 {
            return bad("need at least one path");
        }
        if !self.x0.is_finite() {
            return bad("start point must be finite");
        }
        if self.windows.iter().any(|w| !(w.lo < w.hi)) {
            return bad("windows must have lo < hi");
        }
        Ok(())
    }
}

/// Step indices at which states are saved: `0, s, 2s, …` and always `n`.
fn save_steps(n: usize, saves: usize) -> Vec<usize> {
    let stride = n.div_ceil(saves.max(1)).max(1);
    let mut v: Vec<usize> = (0..n).step_by(stride).collect();
    v.push(n);
    v
}

/// Output of one path: saved states, window occupations at every saved time
/// (window-major), the accumulated martingale part and the clamp count.
struct PathRecord {
    states: Vec<f64>,
    occupation: Vec<f64>,
    martingale: f64,
    clamped: u64,
}

/// Simulated paths, thinned to the saved times.
#[derive(Clone, Debug)]
pub struct PathEnsemble {
    pub scheme: Scheme,
    pub config: SimConfig,
    /// Saved times, starting at 0 and ending at the horizon.
    pub times: Vec<f64>,
    /// Width of one step in space (`√dt` or the grid spacing).
    pub resolution: f64,
    states: Vec<f64>,
    occupation: Vec<f64>,
    martingale: Vec<f64>,
    /// Steps that hit a truncated table edge and were clamped.
    pub clamped: u64,
}

impl PathEnsemble {
    fn assemble(scheme: Scheme, config: SimConfig, times: Vec<f64>, resolution: f64, records: Vec<PathRecord>) -> Self {
        let clamped = records.iter().map(|r| r.clamped).sum();
        let mut states = Vec::with_capacity(records.len() * times.len());
        let mut occupation = Vec::with_capacity(records.len() * times.len() * config.windows.len());
        let mut martingale = Vec::with_capacity(records.len());
        for r in records {
            states.extend(r.states);
            occupation.extend(r.occupation);
            martingale.push(r.martingale);
        }
        PathEnsemble { scheme, config, times, resolution, states, occupation, martingale, clamped }
    }

    pub fn n_paths(&self) -> usize {
        self.config.n_paths
    }

    /// Saved states of path `i`.
    pub fn path(&self, i: usize) -> &[f64] {
        let n = self.times.len();
        &self.states[i * n..(i + 1) * n]
    }

    pub fn terminal(&self, i: usize) -> f64 {
        self.path(i)[self.times.len() - 1]
    }

    pub fn terminals(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_paths()).map(|i| self.terminal(i))
    }

    /// Accumulated martingale part of `X` at the horizon.
    pub fn martingale(&self, i: usize) -> f64 {
        self.martingale[i]
    }

    /// Index of the saved time equal to `at`.
    pub fn time_index(&self, at: f64) -> Result<usize, SimError> {
        let tol = 1e-9 * self.config.horizon;
        self.times.iter().position(|t| (t - at).abs() <= tol).ok_or(SimError::TimeNotSaved(at))
    }

    pub fn window_index(&self, w: Window) -> Result<usize, SimError> {
        let tol = 1e-12 * (1.0 + w.lo.abs().max(w.hi.abs()));
        self.config
            .windows
            .iter()
            .position(|v| (v.lo - w.lo).abs() <= tol && (v.hi - w.hi).abs() <= tol)
            .ok_or(SimError::WindowNotRecorded(w.lo, w.hi))
    }

    /// Time spent by path `i` in window `w` up to saved time `j`.
    pub fn occupation(&self, i: usize, w: usize, j: usize) -> f64 {
        let n = self.times.len();
        let nw = self.config.windows.len();
        self.occupation[(i * nw + w) * n + j]
    }

    /// Delimited export, one row per (path, saved time).
    pub fn write_paths<W: Write>(&self, mut out: W, delimiter: char, max_paths: Option<usize>) -> io::Result<()> {
        writeln!(out, "path_id{delimiter}t{delimiter}x")?;
        let n = max_paths.unwrap_or(self.n_paths()).min(self.n_paths());
        for i in 0..n {
            for (t, x) in self.times.iter().zip(self.path(i)) {
                writeln!(out, "{i}{delimiter}{t}{delimiter}{x}")?;
            }
        }
        Ok(())
    }
}

fn rng_for(seed: u64, path: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path as u64);
    rng
}

/// Steps starting within this many local step widths of a jump of `h` are
/// handled by the exact skew step.
const NEAR_JUMP: f64 = 8.0;

/// Euler–Maruyama for `dZ = h(Z) dW` with `Z₀ = f(x0)`, reported as `X = g(Z)`.
/// Plain Euler steps across a jump of `h` under-sample the time spent near
/// it, so steps close to a jump use the exact transition of the local
/// oscillating Brownian motion: a Brownian step in local coordinates whose
/// sign is redrawn with the local skewness when the bridge touches the jump.
pub fn simulate_paths(t: &NaturalScaleTransform, config: &SimConfig) -> Result<PathEnsemble, SimError> {
    config.validate()?;
    let dt = config.step;
    let limit = (t.diameter() / 100.0).powi(2);
    if dt > limit {
        return Err(SimError::StepTooCoarse { dt, limit });
    }
    let (xl, xh) = t.domain();
    if !(xl <= config.x0 && config.x0 <= xh) {
        return Err(SimError::StartOutside(config.x0));
    }
    let n = (config.horizon / dt).round().max(1.0) as usize;
    let steps = save_steps(n, config.saves);
    let times: Vec<f64> = steps.iter().map(|&s| s as f64 * dt).collect();
    let zwin: Vec<(f64, f64)> = config.windows.iter().map(|w| (t.f(w.lo), t.f(w.hi))).collect();
    let sdt = dt.sqrt();
    let z0 = t.f(config.x0);

    let records = crate::par::map_range(config.n_paths, |i| {
        let mut rng = rng_for(config.seed, i);
        let nw = zwin.len();
        let ns = steps.len();
        let mut occ = vec![0.0; nw];
        let mut saved_occ = vec![0.0; nw * ns];
        let mut states = Vec::with_capacity(ns);
        let (mut z, mut mart, mut clamped) = (z0, 0.0, 0u64);
        let mut seg = t.segment(z);
        let mut next = 0;
        for step in 0..=n {
            if steps[next] == step {
                states.push(t.g_at(z, seg));
                for (w, o) in occ.iter().enumerate() {
                    saved_occ[w * ns + next] = *o;
                }
                next += 1;
                if step == n {
                    break;
                }
            }
            for (o, &(a, b)) in occ.iter_mut().zip(&zwin) {
                if a < z && z < b {
                    *o += dt;
                }
            }
            let dw = sdt * rng.sample::<f64, _>(StandardNormal);
            mart += dw;
            match t.jump_near(seg) {
                Some(jm) if (z - jm.z).abs() < NEAR_JUMP * jm.h_minus.max(jm.h_plus) * sdt => {
                    // exact skew-BM step in local coordinates around the jump
                    let y = (z - jm.z) / if z >= jm.z { jm.h_plus } else { jm.h_minus };
                    let mut y1 = y + dw;
                    let crossed = y * y1 <= 0.0 || rng.random::<f64>() < (-2.0 * y * y1 / dt).exp();
                    if crossed {
                        y1 = if rng.random::<f64>() < jm.alpha { y1.abs() } else { -y1.abs() };
                    }
                    z = jm.z + y1 * if y1 >= 0.0 { jm.h_plus } else { jm.h_minus };
                }
                _ => z += t.slope(seg) * dw,
            }
            if t.fold(&mut z) {
                clamped += 1;
            }
            seg = t.relocate(z, seg);
        }
        PathRecord { states, occupation: saved_occ, martingale: mart, clamped }
    });
    Ok(PathEnsemble::assemble(Scheme::EulerNaturalScale, config.clone(), times, sdt, records))
}

/// Largest spacing `1/m ≤ target` putting every atom and `x0` on the grid.
pub fn default_grid_spacing(m: &CheckedMeasure, x0: f64, target: f64) -> Option<f64> {
    let first = (1.0 / target).ceil().max(1.0) as u64;
    (first..first.saturating_mul(64).max(first + 1))
        .map(|k| 1.0 / k as f64)
        .find(|h| m.atoms().iter().map(|a| a.location).chain([x0]).all(|x| on_grid(x, *h).is_some()))
}

fn on_grid(x: f64, h: f64) -> Option<i64> {
    let k = (x / h).round();
    ((x - k * h).abs() <= 1e-9 * h.max(x.abs() * 1e-3)).then_some(k as i64)
}

/// Discrete skew walk with spacing `hgrid` and time step `hgrid²`: at an atom
/// `z` the walk steps right with probability `(1 + μ_z)/2`.
pub fn simulate_grid_walk(m: &CheckedMeasure, config: &SimConfig) -> Result<PathEnsemble, SimError> {
    config.validate()?;
    if !m.is_finite_atomic() {
        return Err(SimError::NotFiniteAtomic);
    }
    let h = config.step;
    let mut atoms: HashMap<i64, (f64, f64)> = HashMap::new();
    for a in m.atoms() {
        if a.weight.abs() >= 1.0 {
            return Err(SimError::UnitAtom(a.location));
        }
        let k = on_grid(a.location, h).ok_or(SimError::AtomOffGrid(a.location))?;
        atoms.insert(k, (0.5 * (1.0 + a.weight), a.weight));
    }
    let k0 = on_grid(config.x0, h).ok_or(SimError::StartOffGrid(config.x0))?;
    let dt = h * h;
    let n = (config.horizon / dt).round().max(1.0) as usize;
    let steps = save_steps(n, config.saves);
    let times: Vec<f64> = steps.iter().map(|&s| s as f64 * dt).collect();
    // windows in grid units; boundary sites count one half
    let wins: Vec<(f64, f64)> = config.windows.iter().map(|w| (w.lo / h, w.hi / h)).collect();
    let weight = |k: i64, (a, b): (f64, f64)| -> f64 {
        let x = k as f64;
        if (x - a).abs() < 1e-9 || (x - b).abs() < 1e-9 {
            0.5
        } else if a < x && x < b {
            1.0
        } else {
            0.0
        }
    };

    let records = crate::par::map_range(config.n_paths, |i| {
        let mut rng = rng_for(config.seed, i);
        let nw = wins.len();
        let ns = steps.len();
        let mut occ = vec![0.0; nw];
        let mut saved_occ = vec![0.0; nw * ns];
        let mut states = Vec::with_capacity(ns);
        let (mut k, mut mart) = (k0, 0.0);
        let (mut bits, mut left) = (0u64, 0u32);
        let mut next = 0;
        for step in 0..=n {
            if steps[next] == step {
                states.push(k as f64 * h);
                for (w, o) in occ.iter().enumerate() {
                    saved_occ[w * ns + next] = *o;
                }
                next += 1;
                if step == n {
                    break;
                }
            }
            for (o, &win) in occ.iter_mut().zip(&wins) {
                *o += dt * weight(k, win);
            }
            if let Some(&(p, mu)) = atoms.get(&k) {
                let up = rng.random::<f64>() < p;
                let s = if up { 1.0 } else { -1.0 };
                mart += (s - mu) * h;
                k += if up { 1 } else { -1 };
            } else {
                if left == 0 {
                    bits = rng.next_u64();
                    left = 64;
                }
                let up = bits & 1 == 1;
                bits >>= 1;
                left -= 1;
                mart += if up { h } else { -h };
                k += if up { 1 } else { -1 };
            }
        }
        PathRecord { states, occupation: saved_occ, martingale: mart, clamped: 0 }
    });
    Ok(PathEnsemble::assemble(Scheme::GridWalk, config.clone(), times, h, records))
}
