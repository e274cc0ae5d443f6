//! Finite-size conversion from probabilities to counts.
//!
//! Two standard bounds are used. Sums of per-round conditional probabilities
//! over detected rounds are compared with realised counts through the
//! Azuma–Hoeffding inequality for martingales with unit-range increments.
//! The number of rounds that can carry a deviation `d` among all `N`
//! emitted pulses is bounded above with the Chernoff–Hoeffding (relative
//! entropy) tail, solved numerically.

use crate::channel::YieldSet;
use crate::error::{Error, Result};
use crate::rt::{phase_error_numerator, EstimatorInputs, W_CORNERS};

/// Azuma deviation `√((n/2) ln(1/ε))`: a martingale with increments in a
/// unit-length interval exceeds this after `n` steps with probability at
/// most `ε`.
pub fn azuma_deviation(n: f64, failure_eps: f64) -> f64 {
    (0.5 * n * (1.0 / failure_eps).ln()).sqrt()
}

/// Relative entropy `D(x‖p)` between Bernoulli distributions, in nats.
fn bernoulli_kl(x: f64, p: f64) -> f64 {
    let mut d = 0.0;
    if x > 0.0 {
        d += x * ((x - p) / p).ln_1p();
    }
    if x < 1.0 {
        d += (1.0 - x) * (-(x - p) / (1.0 - p)).ln_1p();
    }
    d
}

/// Upper bound, valid except with probability `failure_eps`, on the number
/// of successes among `n` independent trials with success probability
/// `mean`: `n·x*` where `x* ≥ mean` solves `D(x*‖mean) = ln(1/ε)/n`.
pub fn chernoff_upper(mean: f64, n: f64, failure_eps: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    if mean >= 1.0 {
        return n;
    }
    let target = (1.0 / failure_eps).ln() / n;
    if bernoulli_kl(1.0, mean) <= target {
        return n;
    }
    let (mut lo, mut hi) = (mean, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if bernoulli_kl(mid, mean) > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    n * hi
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountBudget {
    /// Emitted pulses.
    pub n: f64,
    /// Detected events.
    pub n_det: f64,
    /// Failure probability of each concentration bound.
    pub failure_eps: f64,
}

impl CountBudget {
    pub fn new(n: f64, n_det: f64, failure_eps: f64) -> Result<Self> {
        if !(n_det > 0.0 && n_det <= n) {
            return Err(Error::OutOfRange {
                name: "N_det",
                value: n_det,
            });
        }
        if !(failure_eps > 0.0 && failure_eps < 1.0) {
            return Err(Error::OutOfRange {
                name: "failure_eps",
                value: failure_eps,
            });
        }
        Ok(Self {
            n,
            n_det,
            failure_eps,
        })
    }
}

/// Per-detection quantities that replace the asymptotic probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteSizeTerms {
    /// `N / N_det`: turns a per-pulse probability into a per-detection
    /// expected frequency.
    pub scale: f64,
    /// Statistical deviation of each observed frequency.
    pub stat: f64,
    /// Upper bound on `N(d_j) / N_det`.
    pub d_j: f64,
    /// Upper bound on `N(d_key) / N_det`.
    pub d_key: f64,
}

impl FiniteSizeTerms {
    /// Deviation events are counted over all `N` pulses, not only the
    /// detected ones: in the worst case all of them land on detections.
    pub fn from_budget(d_j: f64, d_key: f64, budget: &CountBudget) -> Self {
        Self {
            scale: budget.n / budget.n_det,
            stat: azuma_deviation(budget.n_det, budget.failure_eps) / budget.n_det,
            d_j: chernoff_upper(d_j, budget.n, budget.failure_eps) / budget.n_det,
            d_key: chernoff_upper(d_key, budget.n, budget.failure_eps) / budget.n_det,
        }
    }
}

pub struct FiniteSizeInputs<'a> {
    pub yields: &'a YieldSet,
    pub estimator: EstimatorInputs<'a>,
    pub d_j: f64,
    pub d_key: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FiniteSizeOutcome {
    Bounded(f64),
    /// The deviations are too large for the bound to mean anything.
    Inconclusive(String),
}

pub fn finite_size_phase_error(
    inputs: &FiniteSizeInputs<'_>,
    budget: &CountBudget,
) -> Result<FiniteSizeOutcome> {
    let terms = FiniteSizeTerms::from_budget(inputs.d_j, inputs.d_key, budget);
    finite_size_with_terms(inputs, &terms)
}

/// Phase-error bound with explicit finite-size terms. Observed frequencies
/// move by `±stat` in whichever direction raises the bound; the phase error
/// numerator is linear in them, so the sign is read off its gradient.
pub fn finite_size_with_terms(
    inputs: &FiniteSizeInputs<'_>,
    terms: &FiniteSizeTerms,
) -> Result<FiniteSizeOutcome> {
    let third = inputs.estimator.third;
    let mut scaled = *inputs.yields;
    for v in scaled.obs_x.iter_mut().flatten() {
        *v *= terms.scale;
    }
    for v in scaled.obs_z.iter_mut().flatten() {
        *v *= terms.scale;
    }

    let den = scaled.obs_z.iter().flatten().sum::<f64>() - 4.0 * terms.stat;
    if !(den > 0.0) {
        return Ok(FiniteSizeOutcome::Inconclusive(
            "statistical deviation exceeds the sifted Z frequency".into(),
        ));
    }

    let used = [
        crate::states::Setting::Z0,
        crate::states::Setting::Z1,
        third,
    ];
    let mut best = f64::NEG_INFINITY;
    for w in W_CORNERS {
        let mut slope = 0.0;
        for s in 0..2 {
            for setting in used {
                let mut unit = YieldSet {
                    obs_x: [[0.0; 4]; 2],
                    obs_z: [[0.0; 2]; 2],
                };
                unit.obs_x[s][setting.index()] = 1.0;
                slope += phase_error_numerator(&unit, &inputs.estimator, 0.0, w)?.abs();
            }
        }
        let num = phase_error_numerator(&scaled, &inputs.estimator, terms.d_j, w)?
            + 2.0 * terms.d_key
            + terms.stat * slope;
        best = best.max(num);
    }

    let e_x = best / den;
    if e_x > 1.0 {
        return Ok(FiniteSizeOutcome::Inconclusive(format!(
            "phase error bound {e_x:.3e} exceeds 1"
        )));
    }
    Ok(FiniteSizeOutcome::Bounded(e_x.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn azuma_values() {
        let n = 1e6;
        let want = (0.5 * 1e6 * (1e10f64).ln()).sqrt();
        assert!((azuma_deviation(n, 1e-10) - want).abs() < 1e-9);
        assert!((azuma_deviation(1.0, 0.05) - (0.5 * 20f64.ln()).sqrt()).abs() < 1e-15);
        let rel: Vec<f64> = [1e3, 1e6, 1e9]
            .iter()
            .map(|&n| azuma_deviation(n, 1e-10) / n)
            .collect();
        assert!(rel[0] > rel[1] && rel[1] > rel[2]);
        assert!(rel[2] < 1e-3);
    }

    #[test]
    fn chernoff_edges_and_monotonicity() {
        assert_eq!(chernoff_upper(0.0, 1e10, 1e-10), 0.0);
        assert_eq!(chernoff_upper(1.0, 1e10, 1e-10), 1e10);
        // vanishing mean drives the bound to zero
        let tiny = chernoff_upper(1e-30, 1e10, 1e-10);
        assert!(tiny < 1.0, "{tiny}");
        let mut prev = 0.0;
        for k in 1..=20 {
            let mean = k as f64 * 1e-4;
            let b = chernoff_upper(mean, 1e10, 1e-10);
            assert!(b > prev);
            assert!(b >= mean * 1e10);
            prev = b;
        }
    }

    #[test]
    fn chernoff_solution_satisfies_tail_equation() {
        let (mean, n, eps) = (2e-3, 1e10, 1e-10);
        let x = chernoff_upper(mean, n, eps) / n;
        let lhs = n * bernoulli_kl(x, mean);
        assert!((lhs - (1.0 / eps).ln()).abs() < 1e-6 * (1.0 / eps).ln());
    }

    #[test]
    fn budget_validation() {
        assert!(CountBudget::new(10.0, 0.0, 0.1).is_err());
        assert!(CountBudget::new(10.0, 11.0, 0.1).is_err());
        assert!(CountBudget::new(10.0, 5.0, 1.0).is_err());
        assert!(CountBudget::new(10.0, 5.0, 0.1).is_ok());
    }
}
