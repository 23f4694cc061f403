//! Benchmark runner: per-level solver runs over boxoban files, aggregates
//! across seeds, and the synthetic scenarios.

pub mod config;
pub mod report;
pub mod run;
pub mod scenario;

pub use config::{parse_seeds, Algorithm, MixSpec, PolicySpec, RunConfig};
pub use report::{read_records, render_summary, summarize, write_records, write_series, Summary};
pub use run::{run_benchmark, BenchmarkRecord};
