//! Convergence tests for positive series given through local log-ratios.
//!
//! Terms of the series we meet are products of many factors, so their size is
//! out of reach for large indices while their successive ratios are cheap and
//! accurate. Tests therefore take `ln(T_k / T_{k+1})` as input.

use serde::{Deserialize, Serialize};

use crate::num::Verdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesTest {
    Raabe,
    Bertrand,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesDecision {
    /// `True` when the series converges.
    pub converges: Verdict,
    pub test: SeriesTest,
    /// Sampled `(k, statistic)` pairs used in the decision.
    pub samples: Vec<(u64, f64)>,
}

const PROBES: [u64; 3] = [10_000, 100_000, 1_000_000];
const MARGIN: f64 = 0.05;
const RAABE_MARGIN: f64 = 0.01;

/// Raabe's test, then Bertrand's test when the Raabe statistic tends to 1.
///
/// `log_ratio(k)` must return `ln T_k − ln T_{k+1}`.
pub fn decide<F: Fn(u64) -> f64>(log_ratio: F) -> SeriesDecision {
    decide_at(PROBES, log_ratio)
}

/// As [`decide`], probing at the given increasing indices.
pub fn decide_at<F: Fn(u64) -> f64>(probes: [u64; 3], log_ratio: F) -> SeriesDecision {
    let raabe: Vec<(u64, f64)> = probes.iter().map(|&k| (k, k as f64 * log_ratio(k).exp_m1())).collect();
    let last = raabe[raabe.len() - 1].1;
    let prev = raabe[raabe.len() - 2].1;
    // Raabe decides only when its statistic has settled away from 1; a slow
    // drift toward 1 (log factors) is left to Bertrand.
    let settled = (last - prev).abs() < 0.1 * (last - 1.0).abs();
    if settled && last > 1.0 + RAABE_MARGIN && prev > 1.0 + RAABE_MARGIN {
        return SeriesDecision { converges: Verdict::True, test: SeriesTest::Raabe, samples: raabe };
    }
    if settled && last < 1.0 - RAABE_MARGIN && prev < 1.0 - RAABE_MARGIN {
        return SeriesDecision { converges: Verdict::False, test: SeriesTest::Raabe, samples: raabe };
    }
    let bertrand: Vec<(u64, f64)> = raabe.iter().map(|&(k, r)| (k, (k as f64).ln() * (r - 1.0))).collect();
    let last = bertrand[bertrand.len() - 1].1;
    let prev = bertrand[bertrand.len() - 2].1;
    let converges = if last > 1.0 + MARGIN && prev > 1.0 + MARGIN {
        Verdict::True
    } else if last < 1.0 - MARGIN && prev < 1.0 - MARGIN {
        Verdict::False
    } else {
        Verdict::Unknown
    };
    let test = if converges == Verdict::Unknown { SeriesTest::Inconclusive } else { SeriesTest::Bertrand };
    SeriesDecision { converges, test, samples: bertrand }
}

/// Geometric series `Σ_p c·r^p` with `r > 0`.
pub fn geometric_converges(ratio: f64) -> bool {
    ratio < 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power(s: f64) -> impl Fn(u64) -> f64 {
        move |k| s * ((k + 1) as f64 / k as f64).ln()
    }

    #[test]
    fn p_series() {
        assert_eq!(decide(power(2.0)).converges, Verdict::True);
        assert_eq!(decide(power(0.5)).converges, Verdict::False);
        assert_eq!(decide(power(1.05)).converges, Verdict::True);
        let harmonic = decide(power(1.0));
        assert_eq!(harmonic.converges, Verdict::False);
        assert_eq!(harmonic.test, SeriesTest::Bertrand);
    }

    #[test]
    fn log_squared_needs_bertrand() {
        // T_k = 1 / (k ln^2 k)
        let lr = |k: u64| {
            let a = k as f64;
            let b = a + 1.0;
            (b.ln() - a.ln()) + 2.0 * (b.ln().ln() - a.ln().ln())
        };
        let d = decide(lr);
        assert_eq!(d.converges, Verdict::True);
        assert_eq!(d.test, SeriesTest::Bertrand);
    }

    #[test]
    fn k_log_k_is_not_misread() {
        // T_k = 1 / (k ln k) diverges; Raabe's statistic drifts toward 1 from above
        let lr = |k: u64| {
            let a = k as f64;
            let b = a + 1.0;
            (b.ln() - a.ln()) + (b.ln().ln() - a.ln().ln())
        };
        assert_ne!(decide(lr).converges, Verdict::True);
    }

    #[test]
    fn growing_terms_diverge() {
        assert_eq!(decide(|_| -0.1).converges, Verdict::False);
        assert_eq!(decide(|_| 0.1).converges, Verdict::True);
    }
}
