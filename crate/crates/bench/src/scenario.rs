//! The synthetic strength/weakness experiments: one deep goal, a layer of
//! goals, and the chain that state cuts collapse.

use std::io::Write;

use anyhow::Result;

use policy_tree_search::synthetic::{CollapsedChainDomain, FullBinaryTreeDomain, UniformPolicy};
use policy_tree_search::{
    levin_ts, luby_ts, multi_ts, ActionId, LevinOptions, SamplingOptions, SearchDomain, SearchLimits,
    SearchReport,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Scenario {
    /// A single goal at the given depth, alternating left and right.
    Needle,
    /// Every node at the given depth whose first action is 0 is a goal.
    Layer,
    /// A chain whose side branches lead back to the root.
    Collapsed,
}

#[derive(Clone, Debug)]
pub struct ScenarioRow {
    pub algorithm: &'static str,
    /// `None` for the deterministic LevinTS row.
    pub seed: Option<u64>,
    pub report: SearchReport,
}

fn rows<D: SearchDomain>(domain: &D, depth: u64, seeds: &[u64], budget: u64) -> Result<Vec<ScenarioRow>> {
    let limits = SearchLimits::expansions(budget);
    let sampling = SamplingOptions {
        nsims: None,
        limits,
    };
    let mut rows = vec![ScenarioRow {
        algorithm: "levints",
        seed: None,
        report: levin_ts(domain, &UniformPolicy, &LevinOptions { limits, ..LevinOptions::default() })?,
    }];
    for &seed in seeds {
        rows.push(ScenarioRow {
            algorithm: "lubyts",
            seed: Some(seed),
            report: luby_ts(domain, &UniformPolicy, 1, &sampling, seed)?,
        });
    }
    for &seed in seeds {
        rows.push(ScenarioRow {
            algorithm: "multits",
            seed: Some(seed),
            report: multi_ts(domain, &UniformPolicy, depth, &sampling, seed)?,
        });
    }
    Ok(rows)
}

pub fn run_scenario(scenario: Scenario, depth: u64, seeds: &[u64], budget: u64) -> Result<Vec<ScenarioRow>> {
    match scenario {
        Scenario::Needle => {
            let path = (0..depth).map(|i| ActionId((i % 2) as u32)).collect();
            rows(&FullBinaryTreeDomain::needle(path), depth, seeds, budget)
        }
        Scenario::Layer => rows(&FullBinaryTreeDomain::layer(depth as usize), depth, seeds, budget),
        Scenario::Collapsed => rows(&CollapsedChainDomain::new(depth), depth, seeds, budget),
    }
}

pub fn write_rows<W: Write>(rows: &[ScenarioRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["algorithm", "seed", "status", "expansions", "runs", "length"])?;
    for r in rows {
        w.write_record([
            r.algorithm.to_string(),
            r.seed.map_or(String::new(), |s| s.to_string()),
            r.report.status.as_str().to_string(),
            r.report.expansions.to_string(),
            r.report.runs.to_string(),
            r.report.solution_length().map_or(String::new(), |l| l.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean expansions per algorithm, in first-appearance order.
pub fn means(rows: &[ScenarioRow]) -> Vec<(&'static str, f64, usize)> {
    let mut out: Vec<(&'static str, f64, usize)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(a, ..)| *a == r.algorithm) {
            Some((_, sum, n)) => {
                *sum += r.report.expansions as f64;
                *n += 1;
            }
            None => out.push((r.algorithm, r.report.expansions as f64, 1)),
        }
    }
    out.into_iter().map(|(a, sum, n)| (a, sum / n as f64, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapsed_chain_levin_row() {
        let rows = run_scenario(Scenario::Collapsed, 10, &[0], 10_000).unwrap();
        assert_eq!(rows[0].report.expansions, 20);
        assert_eq!(rows.len(), 3);
    }
}
