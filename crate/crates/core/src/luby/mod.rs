//! Restart-based sampling: single trajectories, fixed-depth restarts
//! (multiTS) and restarts on the A6519 schedule (LubyTS), together with the
//! expected-runtime analysis of the schedule.

pub mod halting;
pub mod lemmas;
pub mod sampling;
pub mod schedule;

pub use halting::{
    best_restart_bound, expected_runtime_universal, restart_bound_at, HaltingDistribution,
    HaltingError, RuntimeEstimate,
};
pub use sampling::{
    luby_ts, multi_ts, run_rng, sample_action, sample_traj, SampleOutcome, SamplingOptions,
};
pub use schedule::{a6519, a6519_recursive, a6519_xor, ScheduleError};
