//! Single-trajectory sampling and the two restart strategies built on it.
//!
//! A run visits nodes from the root, goal-testing each one before sampling
//! the next action, and stops after testing the node at the depth limit.
//! Every visited node counts as one expansion, so a failed run with limit
//! `D` costs `D + 1` expansions.
//!
//! Randomness: run `k` of a search seeded with `s` draws from a ChaCha8
//! stream seeded with `s` on stream number `k`. Runs are therefore
//! reproducible individually, independent of how many runs precede them.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::luby::schedule::a6519;
use crate::search::{
    validate_conditionals, ActionId, Policy, SearchDomain, SearchError, SearchLimits,
    SearchReport, SearchStatus, TrajectoryNode,
};

/// Result of one sampled trajectory.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampleOutcome {
    pub solution: Option<Vec<ActionId>>,
    pub expansions: u64,
}

impl SampleOutcome {
    pub fn is_solved(&self) -> bool {
        self.solution.is_some()
    }
}

/// The generator for run `run` of a search seeded with `seed`.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Inverse-CDF draw over `probs` in index order for `u` in `[0, 1)`.
/// Zero-probability actions are never returned.
pub fn sample_action(probs: &[f64], u: f64) -> ActionId {
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (a, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        cumulative += p;
        last_positive = a;
        if u < cumulative {
            return ActionId::from(a);
        }
    }
    // Rounding left the cumulative sum just below u.
    ActionId::from(last_positive)
}

/// Samples one trajectory of at most `depth_limit` actions.
pub fn sample_traj<D, P, R>(
    domain: &D,
    policy: &P,
    depth_limit: u64,
    rng: &mut R,
) -> Result<SampleOutcome, SearchError>
where
    D: SearchDomain,
    P: Policy<D> + ?Sized,
    R: Rng + ?Sized,
{
    sample_bounded(domain, policy, depth_limit, rng, u64::MAX).map(|(outcome, _)| outcome)
}

/// As [`sample_traj`] but stops after `max_nodes` visits; the flag reports
/// whether the run was cut short by that cap.
fn sample_bounded<D, P, R>(
    domain: &D,
    policy: &P,
    depth_limit: u64,
    rng: &mut R,
    max_nodes: u64,
) -> Result<(SampleOutcome, bool), SearchError>
where
    D: SearchDomain,
    P: Policy<D> + ?Sized,
    R: Rng + ?Sized,
{
    let action_count = domain.action_count();
    let mut node = TrajectoryNode::root_of(domain, policy);
    let mut expansions = 0u64;
    loop {
        if expansions >= max_nodes {
            return Ok((
                SampleOutcome {
                    solution: None,
                    expansions,
                },
                true,
            ));
        }
        expansions += 1;
        if domain.is_goal(node.state()) {
            let outcome = SampleOutcome {
                solution: Some(node.actions()),
                expansions,
            };
            return Ok((outcome, false));
        }
        if node.depth() as u64 >= depth_limit {
            break;
        }
        let evaluation = policy.evaluate(domain, &node)?;
        validate_conditionals(&evaluation.probs, action_count)?;
        if evaluation.is_dead_end() {
            break;
        }
        let action = sample_action(&evaluation.probs, rng.random::<f64>());
        node = node
            .child(domain, &evaluation, action)
            .expect("sampled actions have positive probability");
    }
    Ok((
        SampleOutcome {
            solution: None,
            expansions,
        },
        false,
    ))
}

/// Restart options shared by multiTS and LubyTS.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SamplingOptions {
    /// Maximum number of runs; `None` restarts until solved or a limit hits.
    pub nsims: Option<u64>,
    pub limits: SearchLimits,
}

impl SamplingOptions {
    pub fn runs(nsims: u64) -> Self {
        SamplingOptions {
            nsims: Some(nsims),
            limits: SearchLimits::unlimited(),
        }
    }

    pub fn unbounded() -> Self {
        SamplingOptions::default()
    }
}

/// Restarts fixed-depth trajectories until one reaches a goal.
pub fn multi_ts<D, P>(
    domain: &D,
    policy: &P,
    depth_limit: u64,
    options: &SamplingOptions,
    seed: u64,
) -> Result<SearchReport, SearchError>
where
    D: SearchDomain,
    P: Policy<D> + ?Sized,
{
    if depth_limit == 0 {
        return Err(SearchError::InvalidParameter("multiTS depth limit must be >= 1"));
    }
    restart_search(domain, policy, options, seed, |_| depth_limit)
}

/// Restarts trajectories whose run `k` has depth limit `d_min * A6519(k)`.
pub fn luby_ts<D, P>(
    domain: &D,
    policy: &P,
    d_min: u64,
    options: &SamplingOptions,
    seed: u64,
) -> Result<SearchReport, SearchError>
where
    D: SearchDomain,
    P: Policy<D> + ?Sized,
{
    if d_min == 0 {
        return Err(SearchError::InvalidParameter("LubyTS d_min must be >= 1"));
    }
    restart_search(domain, policy, options, seed, |k| {
        d_min.saturating_mul(a6519(k).expect("run indices start at 1"))
    })
}

fn restart_search<D, P, F>(
    domain: &D,
    policy: &P,
    options: &SamplingOptions,
    seed: u64,
    depth_of_run: F,
) -> Result<SearchReport, SearchError>
where
    D: SearchDomain,
    P: Policy<D> + ?Sized,
    F: Fn(u64) -> u64,
{
    if options.nsims == Some(0) {
        return Err(SearchError::InvalidParameter("nsims must be >= 1"));
    }
    let started = Instant::now();
    let deadline = options.limits.time_limit.map(|t| started + t);
    let mut expansions = 0u64;
    let mut runs = 0u64;
    let report = |status, expansions, runs, solution| SearchReport {
        status,
        expansions,
        solution,
        runs,
        wall_time: started.elapsed(),
    };

    for k in 1u64.. {
        if options.nsims.is_some_and(|n| runs >= n) {
            return Ok(report(SearchStatus::Exhausted, expansions, runs, None));
        }
        let remaining = match options.limits.max_expansions {
            Some(max) if expansions >= max => {
                return Ok(report(SearchStatus::BudgetReached, expansions, runs, None))
            }
            Some(max) => max - expansions,
            None => u64::MAX,
        };
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok(report(SearchStatus::BudgetReached, expansions, runs, None));
        }
        let mut rng = run_rng(seed, k);
        let (outcome, truncated) =
            sample_bounded(domain, policy, depth_of_run(k), &mut rng, remaining)?;
        expansions += outcome.expansions;
        runs += 1;
        if let Some(solution) = outcome.solution {
            return Ok(report(SearchStatus::Solved, expansions, runs, Some(solution)));
        }
        if truncated {
            return Ok(report(SearchStatus::BudgetReached, expansions, runs, None));
        }
    }
    unreachable!("run counter overflowed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{FullBinaryTreeDomain, UniformPolicy};

    #[test]
    fn sample_action_respects_zeros_and_order() {
        assert_eq!(sample_action(&[0.5, 0.5], 0.0), ActionId(0));
        assert_eq!(sample_action(&[0.5, 0.5], 0.49), ActionId(0));
        assert_eq!(sample_action(&[0.5, 0.5], 0.5), ActionId(1));
        assert_eq!(sample_action(&[0.0, 1.0, 0.0], 0.0), ActionId(1));
        assert_eq!(sample_action(&[0.3, 0.7 - 1e-12, 0.0], 0.999_999_999_999_9), ActionId(1));
    }

    #[test]
    fn root_goal_is_found_before_sampling() {
        let domain = FullBinaryTreeDomain::needle(vec![]);
        let mut rng = run_rng(1, 1);
        let out = sample_traj(&domain, &UniformPolicy, 5, &mut rng).unwrap();
        assert_eq!(out.solution, Some(vec![]));
        assert_eq!(out.expansions, 1);
    }

    #[test]
    fn unreachable_needle_always_fails() {
        let domain = FullBinaryTreeDomain::needle(vec![ActionId(0); 10]);
        for seed in 0..50 {
            let mut rng = run_rng(seed, 1);
            let out = sample_traj(&domain, &UniformPolicy, 5, &mut rng).unwrap();
            assert!(!out.is_solved());
            assert_eq!(out.expansions, 6);
        }
    }

    #[test]
    fn multi_ts_needle_below_limit_is_exhausted() {
        let domain = FullBinaryTreeDomain::needle(vec![ActionId(0); 10]);
        let report = multi_ts(&domain, &UniformPolicy, 8, &SamplingOptions::runs(100), 3).unwrap();
        assert_eq!(report.status, SearchStatus::Exhausted);
        assert_eq!(report.runs, 100);
        assert_eq!(report.expansions, 900);
    }

    #[test]
    fn single_run_multi_ts_matches_sample_traj() {
        let domain = FullBinaryTreeDomain::layer(6);
        for seed in 0..20 {
            let report = multi_ts(&domain, &UniformPolicy, 6, &SamplingOptions::runs(1), seed).unwrap();
            let out = sample_traj(&domain, &UniformPolicy, 6, &mut run_rng(seed, 1)).unwrap();
            assert_eq!(report.expansions, out.expansions);
            assert_eq!(report.solution, out.solution);
        }
    }

    #[test]
    fn budget_counts_partial_runs() {
        let domain = FullBinaryTreeDomain::needle(vec![ActionId(0); 30]);
        let options = SamplingOptions {
            nsims: None,
            limits: SearchLimits::expansions(1000),
        };
        let report = luby_ts(&domain, &UniformPolicy, 1, &options, 9).unwrap();
        assert_eq!(report.status, SearchStatus::BudgetReached);
        assert_eq!(report.expansions, 1000);
    }

    #[test]
    fn zero_parameters_are_rejected() {
        let domain = FullBinaryTreeDomain::layer(2);
        assert!(multi_ts(&domain, &UniformPolicy, 0, &SamplingOptions::runs(1), 0).is_err());
        assert!(luby_ts(&domain, &UniformPolicy, 0, &SamplingOptions::runs(1), 0).is_err());
        assert!(luby_ts(&domain, &UniformPolicy, 1, &SamplingOptions::runs(0), 0).is_err());
    }

    #[test]
    fn same_seed_same_report() {
        let domain = FullBinaryTreeDomain::layer(8);
        let a = luby_ts(&domain, &UniformPolicy, 1, &SamplingOptions::unbounded(), 42).unwrap();
        let b = luby_ts(&domain, &UniformPolicy, 1, &SamplingOptions::unbounded(), 42).unwrap();
        assert!(a.same_outcome(&b));
    }
}
