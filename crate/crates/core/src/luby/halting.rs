//! Halting-time distributions and the expected running time of the
//! A6519 restart strategy against them.
//!
//! A program halts at time `t` with probability `p(t)`. Run `n` of the
//! universal strategy is given `f(n)` time units; it halts within the run
//! with probability `q(f(n))` and otherwise costs the full `f(n)`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::luby::schedule::a6519;

#[derive(Debug, Error, PartialEq)]
pub enum HaltingError {
    #[error("halting times start at 1")]
    ZeroTime,
    #[error("probability {value} at time {time} is not in [0, 1]")]
    InvalidProbability { time: u64, value: f64 },
    #[error("total halting mass {0} exceeds 1")]
    MassExceedsOne(f64),
    #[error("the program never halts; the expected running time is infinite")]
    InfiniteExpectation,
}

/// A (possibly defective) distribution over halting times `t >= 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct HaltingDistribution {
    p: BTreeMap<u64, f64>,
}

impl HaltingDistribution {
    pub fn new<I: IntoIterator<Item = (u64, f64)>>(pairs: I) -> Result<Self, HaltingError> {
        let mut p = BTreeMap::new();
        for (time, value) in pairs {
            if time == 0 {
                return Err(HaltingError::ZeroTime);
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(HaltingError::InvalidProbability { time, value });
            }
            if value > 0.0 {
                *p.entry(time).or_insert(0.0) += value;
            }
        }
        let total: f64 = p.values().sum();
        if total > 1.0 + 1e-12 {
            return Err(HaltingError::MassExceedsOne(total));
        }
        Ok(HaltingDistribution { p })
    }

    /// Halts at exactly `t`.
    pub fn point(t: u64) -> Result<Self, HaltingError> {
        HaltingDistribution::new([(t, 1.0)])
    }

    /// `p(t) = 2^-t` for `t <= max_time`.
    pub fn geometric(max_time: u64) -> Self {
        HaltingDistribution::new((1..=max_time).map(|t| (t, 0.5f64.powi(t as i32))))
            .expect("geometric weights are valid")
    }

    pub fn p(&self, t: u64) -> f64 {
        self.p.get(&t).copied().unwrap_or(0.0)
    }

    /// Cumulative probability of halting by time `t`.
    pub fn q(&self, t: u64) -> f64 {
        self.p.range(..=t).map(|(_, v)| v).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.p.values().sum()
    }

    /// Largest time with positive mass.
    pub fn max_time(&self) -> Option<u64> {
        self.p.keys().next_back().copied()
    }

    /// `E[min(T, limit)]` counting a non-halting run as `limit`.
    pub fn truncated_mean(&self, limit: u64) -> f64 {
        let (halted, mass) = self
            .p
            .range(..=limit)
            .fold((0.0, 0.0), |(s, m), (&t, &v)| (s + t as f64 * v, m + v));
        halted + (1.0 - mass).max(0.0) * limit as f64
    }
}

/// Expected running time with a certified truncation error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RuntimeEstimate {
    pub value: f64,
    /// The true value lies in `[value, value + error_bound]`.
    pub error_bound: f64,
    pub runs_simulated: u64,
}

/// Expected total time of the A6519 restart strategy, by walking the run
/// schedule and accumulating survival-weighted run costs until the
/// remaining expected cost is certified below `tolerance`.
///
/// The tail bound after `N = K * tau` runs, with `tau` the smallest power
/// of two covering the support and `g = 1 - q(tau)`: every block of `tau`
/// runs contains one run of length at least `tau`, so the survival into
/// block `j` is at most `g^j`, and a block costs at most
/// `tau log2(tau) / 2 + tau (K + j + 1)`.
pub fn expected_runtime_universal(
    dist: &HaltingDistribution,
    tolerance: f64,
) -> Result<RuntimeEstimate, HaltingError> {
    let max_time = dist.max_time().ok_or(HaltingError::InfiniteExpectation)?;
    let tau = max_time.next_power_of_two();
    let log_tau = tau.trailing_zeros() as f64;
    let tau_f = tau as f64;
    let gamma = 1.0 - dist.q(tau);

    let mut value = 0.0;
    let mut survival = 1.0;
    let mut n = 0u64;
    loop {
        n += 1;
        let limit = a6519(n).expect("n >= 1");
        value += survival * dist.truncated_mean(limit);
        survival *= 1.0 - dist.q(limit);
        if n.is_multiple_of(tau) {
            let k = (n / tau) as f64;
            let tail = if gamma <= 0.0 {
                0.0
            } else {
                let one_minus = 1.0 - gamma;
                tau_f * log_tau / (2.0 * one_minus)
                    + tau_f * ((k + 1.0) / one_minus + gamma / (one_minus * one_minus))
            };
            let error_bound = survival * tail;
            if error_bound < tolerance || survival == 0.0 {
                return Ok(RuntimeEstimate {
                    value,
                    error_bound,
                    runs_simulated: n,
                });
            }
        }
    }
}

/// `t + (t/q)(log2(t/q) + 6.1)`.
pub fn restart_bound(t: f64, q: f64) -> f64 {
    if q <= 0.0 {
        return f64::INFINITY;
    }
    let ratio = t / q;
    t + ratio * (ratio.log2() + 6.1)
}

/// The universal-restart bound at cutoff `t`; infinite when `q(t) = 0`.
pub fn restart_bound_at(dist: &HaltingDistribution, t: u64) -> f64 {
    restart_bound(t as f64, dist.q(t))
}

/// Minimum of [`restart_bound_at`] over `1..=t_max` with its argmin.
pub fn best_restart_bound(dist: &HaltingDistribution, t_max: u64) -> (u64, f64) {
    (1..=t_max)
        .map(|t| (t, restart_bound_at(dist, t)))
        .fold((1, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}
