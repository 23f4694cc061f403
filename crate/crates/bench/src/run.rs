//! Per-level solver runs.

use std::sync::Arc;
use std::time::Instant;

use anyhow::{Context, Result};
use rayon::prelude::*;

use policy_tree_search::bridge::{BridgePolicy, ProbTable, TablePolicy};
use policy_tree_search::mix::{bayes_mix, local_mix_fixed, local_mix_varying};
use policy_tree_search::sokoban::{bfs_counted, BfsOutcome, Level, SokobanDomain};
use policy_tree_search::synthetic::UniformPolicy;
use policy_tree_search::{
    greedy_prob_ts, levin_ts, luby_ts, multi_ts, LevinOptions, Policy, SamplingOptions, SearchLimits,
    SearchReport,
};

use crate::config::{Algorithm, MixSpec, PolicySpec, RunConfig};

type DynPolicy = Box<dyn Policy<SokobanDomain>>;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkRecord {
    pub level: String,
    pub seed: u64,
    /// `solved`, `exhausted`, `budget_reached` or `error`.
    pub status: String,
    pub expansions: u64,
    pub runs: u64,
    pub length: Option<usize>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

impl BenchmarkRecord {
    pub fn solved(&self) -> bool {
        self.status == "solved"
    }
}

enum Source {
    Uniform,
    Table(Arc<TablePolicy>),
    Bridge(String),
}

/// Builds one policy per search, so that bridged policies get a server
/// process of their own.
pub struct PolicyFactory {
    sources: Vec<Source>,
    config: RunConfig,
}

impl PolicyFactory {
    /// Loads tables and checks that every bridge command answers the
    /// handshake for a Sokoban domain.
    pub fn new(config: &RunConfig, probe: &SokobanDomain) -> Result<Self> {
        let mut sources = Vec::new();
        for spec in &config.policies {
            sources.push(match spec {
                PolicySpec::Uniform => Source::Uniform,
                PolicySpec::Table(path) => {
                    let table = ProbTable::load(path, 4).with_context(|| format!("loading {}", path.display()))?;
                    Source::Table(Arc::new(TablePolicy { table }))
                }
                PolicySpec::Bridge(cmd) => {
                    let policy = BridgePolicy::spawn(cmd, config.handshake_timeout)
                        .with_context(|| format!("starting policy server {cmd:?}"))?;
                    policy.check_domain(probe)?;
                    Source::Bridge(cmd.clone())
                }
            });
        }
        Ok(PolicyFactory {
            sources,
            config: config.clone(),
        })
    }

    pub fn build(&self, domain: &SokobanDomain) -> Result<DynPolicy> {
        let mut parts: Vec<DynPolicy> = Vec::new();
        for source in &self.sources {
            parts.push(match source {
                Source::Uniform => Box::new(UniformPolicy),
                Source::Table(t) => Box::new(Arc::clone(t)),
                Source::Bridge(cmd) => {
                    let policy = BridgePolicy::spawn(cmd, self.config.handshake_timeout)?;
                    policy.check_domain(domain)?;
                    Box::new(policy)
                }
            });
        }
        if let Some(eps) = self.config.noise {
            let base = parts.pop().expect("validated: one policy");
            return Ok(Box::new(local_mix_fixed(UniformPolicy, base, eps)?));
        }
        let Some(mix) = self.config.mix else {
            return Ok(parts.pop().expect("validated: one policy"));
        };
        Ok(match mix {
            MixSpec::Bayes => Box::new(bayes_mix(parts, self.config.priors.clone())?),
            MixSpec::Local(eps) | MixSpec::Varying(eps) => {
                let second = parts.pop().expect("validated: two policies");
                let first = parts.pop().expect("validated: two policies");
                if matches!(mix, MixSpec::Local(_)) {
                    Box::new(local_mix_fixed(first, second, eps)?)
                } else {
                    Box::new(local_mix_varying(first, second, eps)?)
                }
            }
        })
    }
}

/// Decorrelates the sampling streams of different levels under one seed.
fn level_seed(seed: u64, level: usize) -> u64 {
    let mut x = seed ^ (level as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn search(config: &RunConfig, factory: &PolicyFactory, domain: &SokobanDomain, seed: u64) -> Result<SearchReport> {
    let limits = SearchLimits {
        max_expansions: Some(config.budget),
        time_limit: config.time_limit,
    };
    let policy = factory.build(domain)?;
    let sampling = SamplingOptions {
        nsims: config.nsims,
        limits,
    };
    let levin = LevinOptions {
        limits,
        ..LevinOptions::default()
    };
    Ok(match config.algorithm {
        Algorithm::Levints => levin_ts(domain, &policy, &levin)?,
        Algorithm::Greedy => greedy_prob_ts(domain, &policy, &levin)?,
        Algorithm::Lubyts => luby_ts(domain, &policy, config.d_min.unwrap_or(1), &sampling, seed)?,
        Algorithm::Multits => multi_ts(domain, &policy, config.depth_limit.expect("validated"), &sampling, seed)?,
        Algorithm::BfsOracle => unreachable!("handled without a policy"),
    })
}

fn run_one(config: &RunConfig, factory: &PolicyFactory, index: usize, level: &Arc<Level>, seed: u64) -> BenchmarkRecord {
    let domain = SokobanDomain::from_shared(Arc::clone(level));
    let started = Instant::now();
    let mut record = BenchmarkRecord {
        level: level.id.clone(),
        seed,
        status: String::new(),
        expansions: 0,
        runs: 0,
        length: None,
        wall_ms: 0.0,
        error: None,
    };
    if config.algorithm == Algorithm::BfsOracle {
        let budget = usize::try_from(config.budget).unwrap_or(usize::MAX);
        let (outcome, expanded) = bfs_counted(&domain, budget);
        record.expansions = expanded as u64;
        record.length = outcome.solution_length();
        record.status = match outcome {
            BfsOutcome::Solved(_) => "solved",
            BfsOutcome::Unsolvable => "exhausted",
            BfsOutcome::BudgetExceeded => "budget_reached",
        }
        .to_string();
    } else {
        match search(config, factory, &domain, level_seed(seed, index)) {
            Ok(report) => {
                record.status = report.status.as_str().to_string();
                record.expansions = report.expansions;
                record.runs = report.runs;
                record.length = report.solution_length();
            }
            Err(e) => {
                log::warn!("level {}: {e:#}", level.id);
                record.status = "error".to_string();
                record.error = Some(format!("{e:#}"));
            }
        }
    }
    record.wall_ms = started.elapsed().as_secs_f64() * 1e3;
    record
}

/// One record per (level, seed), in level order then seed order,
/// whatever order the workers finish in.
pub fn run_benchmark(config: &RunConfig, levels: &[Level], workers: usize) -> Result<Vec<BenchmarkRecord>> {
    config.validate()?;
    let levels: Vec<Arc<Level>> = levels.iter().cloned().map(Arc::new).collect();
    let Some(first) = levels.first() else {
        return Ok(Vec::new());
    };
    let factory = PolicyFactory::new(config, &SokobanDomain::from_shared(Arc::clone(first)))?;
    let tasks: Vec<(usize, u64)> = (0..levels.len())
        .flat_map(|i| config.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    Ok(pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, seed)| run_one(config, &factory, i, &levels[i], seed))
            .collect()
    }))
}
