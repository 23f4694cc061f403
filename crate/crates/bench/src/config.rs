//! Run configuration and its compatibility rules.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use anyhow::{anyhow, bail, ensure, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Algorithm {
    Levints,
    Lubyts,
    Multits,
    Greedy,
    BfsOracle,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PolicySpec {
    Uniform,
    Table(PathBuf),
    Bridge(String),
}

impl FromStr for PolicySpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "uniform" {
            return Ok(PolicySpec::Uniform);
        }
        match s.split_once(':') {
            Some(("table", path)) if !path.is_empty() => Ok(PolicySpec::Table(path.into())),
            Some(("bridge", cmd)) if !cmd.trim().is_empty() => Ok(PolicySpec::Bridge(cmd.to_string())),
            _ => bail!("expected uniform, table:<path> or bridge:<command>, got {s:?}"),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::Uniform => write!(f, "uniform"),
            PolicySpec::Table(p) => write!(f, "table:{}", p.display()),
            PolicySpec::Bridge(c) => write!(f, "bridge:{c}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MixSpec {
    Bayes,
    Local(f64),
    Varying(f64),
}

impl FromStr for MixSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let number = |v: &str| v.parse::<f64>().map_err(|e| anyhow!("bad mix parameter {v:?}: {e}"));
        match s.split_once(':') {
            None if s == "bayes" => Ok(MixSpec::Bayes),
            Some(("local", v)) => Ok(MixSpec::Local(number(v)?)),
            Some(("varying", v)) => Ok(MixSpec::Varying(number(v)?)),
            _ => bail!("expected bayes, local:<eps> or varying:<gamma>, got {s:?}"),
        }
    }
}

/// Seeds as a comma list of values and half-open ranges, e.g. `0..5,9`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let mut seeds = Vec::new();
    for part in s.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b): (u64, u64) = (a.parse()?, b.parse()?);
            ensure!(a < b, "empty seed range {part:?}");
            seeds.extend(a..b);
        } else {
            seeds.push(part.parse()?);
        }
    }
    ensure!(!seeds.is_empty(), "no seeds given");
    Ok(seeds)
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub policies: Vec<PolicySpec>,
    pub mix: Option<MixSpec>,
    pub priors: Option<Vec<f64>>,
    /// Shortcut for a fixed local mix of the uniform policy (weight `noise`)
    /// with the single given policy.
    pub noise: Option<f64>,
    pub nsims: Option<u64>,
    pub d_min: Option<u64>,
    pub depth_limit: Option<u64>,
    pub budget: u64,
    pub time_limit: Option<Duration>,
    pub seeds: Vec<u64>,
    pub handshake_timeout: Duration,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        RunConfig {
            algorithm,
            policies: vec![PolicySpec::Uniform],
            mix: None,
            priors: None,
            noise: None,
            nsims: None,
            d_min: None,
            depth_limit: None,
            budget: 100_000,
            time_limit: None,
            seeds: vec![0],
            handshake_timeout: Duration::from_secs(10),
        }
    }

    pub fn validate(&self) -> Result<()> {
        use Algorithm::*;
        let sampling = matches!(self.algorithm, Lubyts | Multits);
        ensure!(self.d_min.is_none() || self.algorithm == Lubyts, "--d-min applies to lubyts only");
        ensure!(
            self.depth_limit.is_none() || self.algorithm == Multits,
            "--depth-limit applies to multits only"
        );
        ensure!(self.algorithm != Multits || self.depth_limit.is_some(), "multits needs --depth-limit");
        ensure!(self.nsims.is_none() || sampling, "--nsims applies to lubyts and multits only");
        ensure!(self.nsims != Some(0), "--nsims must be positive");
        ensure!(self.d_min != Some(0), "--d-min must be positive");
        ensure!(self.depth_limit != Some(0), "--depth-limit must be positive");
        ensure!(self.budget > 0, "--budget must be positive");
        ensure!(!self.seeds.is_empty(), "no seeds given");
        ensure!(!self.policies.is_empty(), "no policy given");
        if self.algorithm == BfsOracle {
            ensure!(
                self.policies == [PolicySpec::Uniform] && self.mix.is_none() && self.noise.is_none(),
                "bfs-oracle takes no policy"
            );
        }
        match self.mix {
            None => {
                ensure!(self.policies.len() == 1, "several policies need --mix");
                ensure!(self.priors.is_none(), "--priors needs --mix bayes");
            }
            Some(mix) => {
                ensure!(self.noise.is_none(), "--noise and --mix are exclusive");
                match mix {
                    MixSpec::Bayes => ensure!(self.policies.len() >= 2, "bayes mixing needs two or more policies"),
                    MixSpec::Local(_) | MixSpec::Varying(_) => {
                        ensure!(self.policies.len() == 2, "local mixing needs exactly two policies");
                        ensure!(self.priors.is_none(), "--priors needs --mix bayes");
                    }
                }
                if let Some(p) = &self.priors {
                    ensure!(p.len() == self.policies.len(), "one prior per policy");
                }
            }
        }
        if let Some(eps) = self.noise {
            ensure!(eps > 0.0 && eps < 1.0, "--noise must lie in (0, 1)");
        }
        Ok(())
    }

    /// Row label in the style "LubyTS(256, 32)"; `inf` for unbounded nsims.
    pub fn label(&self) -> String {
        let nsims = self.nsims.map_or("inf".to_string(), |n| n.to_string());
        let base = match self.algorithm {
            Algorithm::Levints => "LevinTS".to_string(),
            Algorithm::Greedy => "Greedy".to_string(),
            Algorithm::BfsOracle => "BFS".to_string(),
            Algorithm::Lubyts => format!("LubyTS({nsims}, {})", self.d_min.unwrap_or(1)),
            Algorithm::Multits => format!("MultiTS({nsims}, {})", self.depth_limit.unwrap_or(0)),
        };
        let policy = match (&self.mix, self.noise) {
            (_, Some(eps)) => format!("noisy {eps} {}", self.policies[0]),
            (Some(mix), _) => format!(
                "{mix:?} mix of {}",
                self.policies.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")
            ),
            (None, None) => self.policies[0].to_string(),
        };
        if self.algorithm == Algorithm::BfsOracle {
            base
        } else {
            format!("{base} [{policy}]")
        }
    }
}
