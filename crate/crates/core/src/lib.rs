//! Policy-guided tree search.
//!
//! * [`levin`]: LevinTS, best-first by `depth / probability` with state
//!   cuts for Markov policies, plus a greedy-by-probability baseline.
//! * [`luby`]: trajectory sampling with fixed-depth restarts (multiTS) and
//!   restarts on the A6519 schedule (LubyTS).
//! * [`mix`]: Bayes and local policy mixtures.
//! * [`sokoban`]: the Sokoban domain and boxoban level files.
//! * [`bridge`]: policies served by another process.
//! * [`synthetic`]: small domains with exact oracles, used by the tests.

pub mod bridge;
pub mod levin;
pub mod luby;
pub mod mix;
pub mod search;
pub mod sokoban;
pub mod synthetic;

pub use levin::{greedy_prob_ts, levin_ts, LevinOptions};
pub use luby::{luby_ts, multi_ts, sample_traj, SamplingOptions};
pub use search::{
    extend, replay, ActionId, Evaluation, Policy, PolicyContext, PolicyError, SearchDomain,
    SearchError, SearchLimits, SearchReport, SearchStatus, Trajectory, TrajectoryNode,
};
