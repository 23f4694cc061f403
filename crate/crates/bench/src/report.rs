//! Record files, aggregates and the sorted expansion series.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{Read, Write};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::run::BenchmarkRecord;

pub const RECORD_HEADER: [&str; 7] = ["level", "seed", "status", "expansions", "runs", "length", "error"];

/// Writes one row per record. Wall time is only written when `timing` is
/// set, so that repeated runs produce identical files by default.
pub fn write_records<W: Write>(records: &[BenchmarkRecord], out: W, timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = RECORD_HEADER.to_vec();
    if timing {
        header.push("wall_ms");
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.level.clone(),
            r.seed.to_string(),
            r.status.clone(),
            r.expansions.to_string(),
            r.runs.to_string(),
            r.length.map_or(String::new(), |l| l.to_string()),
            r.error.clone().unwrap_or_default(),
        ];
        if timing {
            row.push(format!("{:.3}", r.wall_ms));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<BenchmarkRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    if headers.iter().take(RECORD_HEADER.len()).ne(RECORD_HEADER) {
        bail!("unexpected record header {headers:?}");
    }
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row?;
        let field = |i: usize| row.get(i).unwrap_or_default();
        records.push(BenchmarkRecord {
            level: field(0).to_string(),
            seed: field(1).parse().context("seed")?,
            status: field(2).to_string(),
            expansions: field(3).parse().context("expansions")?,
            runs: field(4).parse().context("runs")?,
            length: match field(5) {
                "" => None,
                l => Some(l.parse().context("length")?),
            },
            error: Some(field(6).to_string()).filter(|e| !e.is_empty()),
            wall_ms: row.get(7).map_or(Ok(0.0), str::parse).context("wall_ms")?,
        });
    }
    Ok(records)
}

/// Table-style totals over the levels of one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub levels: usize,
    pub solved: usize,
    pub errors: usize,
    /// Mean solution length over solved levels.
    pub avg_length: Option<f64>,
    pub max_length: Option<usize>,
    /// Includes the partial counts of unsolved levels.
    pub total_expansions: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation across seeds; 0 for a single seed.
    pub std: f64,
}

impl MeanStd {
    fn of(values: &[f64]) -> Option<MeanStd> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        };
        Some(MeanStd { mean, std })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub label: String,
    pub per_seed: Vec<SeedSummary>,
    pub solved: Option<MeanStd>,
    pub avg_length: Option<MeanStd>,
    pub max_length: Option<MeanStd>,
    pub total_expansions: Option<MeanStd>,
}

/// Recomputes every aggregate from the records.
pub fn summarize(label: &str, records: &[BenchmarkRecord]) -> Summary {
    let mut by_seed: BTreeMap<u64, Vec<&BenchmarkRecord>> = BTreeMap::new();
    for r in records {
        by_seed.entry(r.seed).or_default().push(r);
    }
    let per_seed: Vec<SeedSummary> = by_seed
        .into_iter()
        .map(|(seed, rs)| {
            let lengths: Vec<usize> = rs.iter().filter(|r| r.solved()).filter_map(|r| r.length).collect();
            SeedSummary {
                seed,
                levels: rs.len(),
                solved: rs.iter().filter(|r| r.solved()).count(),
                errors: rs.iter().filter(|r| r.status == "error").count(),
                avg_length: (!lengths.is_empty())
                    .then(|| lengths.iter().sum::<usize>() as f64 / lengths.len() as f64),
                max_length: lengths.iter().copied().max(),
                total_expansions: rs.iter().map(|r| r.expansions).sum(),
            }
        })
        .collect();
    let collect = |f: &dyn Fn(&SeedSummary) -> Option<f64>| -> Option<MeanStd> {
        let values: Vec<f64> = per_seed.iter().filter_map(f).collect();
        MeanStd::of(&values)
    };
    Summary {
        label: label.to_string(),
        solved: collect(&|s| Some(s.solved as f64)),
        avg_length: collect(&|s| s.avg_length),
        max_length: collect(&|s| s.max_length.map(|m| m as f64)),
        total_expansions: collect(&|s| Some(s.total_expansions as f64)),
        per_seed,
    }
}

fn cell(v: Option<MeanStd>, seeds: usize) -> String {
    match v {
        None => "-".to_string(),
        Some(m) if seeds > 1 => format!("{:.1} ± {:.1}", m.mean, m.std),
        Some(m) => format!("{:.1}", m.mean),
    }
}

/// Human-readable table: one line per seed and the aggregate line.
pub fn render_summary(s: &Summary) -> String {
    let mut out = String::new();
    let levels = s.per_seed.first().map_or(0, |p| p.levels);
    let _ = writeln!(out, "{} on {levels} levels", s.label);
    let _ = writeln!(
        out,
        "{:>6} {:>12} {:>7} {:>12} {:>14} {:>22}",
        "seed", "solved", "errors", "avg length", "max length", "expansions"
    );
    for p in &s.per_seed {
        let _ = writeln!(
            out,
            "{:>6} {:>12} {:>7} {:>12} {:>14} {:>22}",
            p.seed,
            p.solved,
            p.errors,
            p.avg_length.map_or("-".into(), |a| format!("{a:.1}")),
            p.max_length.map_or("-".into(), |m| m.to_string()),
            p.total_expansions
        );
    }
    let n = s.per_seed.len();
    let _ = writeln!(
        out,
        "{:>6} {:>12} {:>7} {:>12} {:>14} {:>22}",
        "all",
        cell(s.solved, n),
        "",
        cell(s.avg_length, n),
        cell(s.max_length, n),
        cell(s.total_expansions, n)
    );
    out
}

/// For each seed, the expansion counts of solved levels in increasing
/// order: x = rank (levels solved so far), y = expansions.
pub fn write_series<W: Write>(label: &str, records: &[BenchmarkRecord], out: W) -> Result<()> {
    let mut by_seed: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.solved()) {
        by_seed.entry(r.seed).or_default().push(r.expansions);
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["solver", "seed", "rank", "expansions"])?;
    for (seed, mut xs) in by_seed {
        xs.sort_unstable();
        for (rank, x) in xs.into_iter().enumerate() {
            w.write_record([label.to_string(), seed.to_string(), (rank + 1).to_string(), x.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(level: &str, seed: u64, status: &str, expansions: u64, length: Option<usize>) -> BenchmarkRecord {
        BenchmarkRecord {
            level: level.into(),
            seed,
            status: status.into(),
            expansions,
            runs: 0,
            length,
            wall_ms: 0.0,
            error: None,
        }
    }

    #[test]
    fn aggregates() {
        let records = vec![
            record("a", 0, "solved", 10, Some(4)),
            record("b", 0, "budget_reached", 100, None),
            record("a", 1, "solved", 12, Some(6)),
            record("b", 1, "solved", 30, Some(10)),
        ];
        let s = summarize("x", &records);
        assert_eq!(s.per_seed[0].total_expansions, 110);
        assert_eq!(s.per_seed[1].avg_length, Some(8.0));
        assert_eq!(s.solved.unwrap().mean, 1.5);
        assert!((s.solved.unwrap().std - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(s.max_length.unwrap().mean, 7.0);
    }

    #[test]
    fn records_round_trip() {
        let mut records = vec![record("a,b", 3, "solved", 10, Some(4)), record("c", 3, "error", 0, None)];
        records[1].error = Some("server \"x\" exited".into());
        let mut buf = Vec::new();
        write_records(&records, &mut buf, false).unwrap();
        assert_eq!(read_records(&buf[..]).unwrap(), records);
    }

    #[test]
    fn series_is_sorted_per_seed() {
        let records = vec![
            record("a", 0, "solved", 30, Some(1)),
            record("b", 0, "solved", 10, Some(1)),
            record("c", 0, "exhausted", 5, None),
        ];
        let mut buf = Vec::new();
        write_series("s", &records, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "solver,seed,rank,expansions\ns,0,1,10\ns,0,2,30\n"
        );
    }
}
