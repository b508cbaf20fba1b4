//! Monte Carlo simulation on an effective interval: an Euler scheme for the
//! natural-scale SDE `dZ = h(Z) dW`, a discrete skew random walk used as an
//! independent oracle, and occupation / local-time estimators.

mod estimate;
mod paths;
mod transform;

pub use estimate::{
    agree, drift_consistency_check, estimate_local_time, estimate_occupation, estimate_window_rate, DriftReport,
    LocalTimeEstimate, MeanSe, Occupation,
};
pub use paths::{default_grid_spacing, simulate_grid_walk, simulate_paths, PathEnsemble, Scheme, SimConfig, Window};
pub use transform::{natural_scale, natural_scale_around, NaturalScaleTransform};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("dt = {dt} exceeds the limit {limit} set by the natural-scale diameter")]
    StepTooCoarse { dt: f64, limit: f64 },
    #[error("atom at {0} is not on the walk grid")]
    AtomOffGrid(f64),
    #[error("start point {0} is not on the walk grid")]
    StartOffGrid(f64),
    #[error("start point {0} lies outside the effective interval")]
    StartOutside(f64),
    #[error("the grid walk needs a measure with finitely many atoms and nothing else")]
    NotFiniteAtomic,
    #[error("atom at {0} has weight ±1 and cannot drive a walk")]
    UnitAtom(f64),
    #[error("window half-width {eps} is below {min}, a few step widths")]
    WindowTooNarrow { eps: f64, min: f64 },
    #[error("no occupation window ({0}, {1}) was recorded")]
    WindowNotRecorded(f64, f64),
    #[error("time {0} is not among the saved times")]
    TimeNotSaved(f64),
    #[error("scale function unavailable: {0}")]
    ScaleUnavailable(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
