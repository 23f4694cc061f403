use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use policy_tree_search::bridge::{ProbTable, StateEncoding};
use policy_tree_search::sokoban::{parse_boxoban, serialize_boxoban, SokobanDomain};
use policy_tree_search::SearchDomain;
use pts_bench::report::Summary;
use pts_bench::{read_records, summarize};

const BIN: &str = env!("CARGO_BIN_EXE_pts-bench");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

fn bench(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("PTS_WORKERS").output().expect("run pts-bench")
}

fn ok(args: &[&str]) -> String {
    let out = bench(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// The first `n` bundled levels in their own file.
fn small_level_file(dir: &Path, n: usize) -> PathBuf {
    let levels = parse_boxoban(&fs::read_to_string(fixture("boxoban_100.txt")).unwrap()).unwrap();
    let path = dir.join("levels.txt");
    fs::write(&path, serialize_boxoban(&levels[..n])).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn one_push_level_is_solved_in_one_move() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    ok(&["run", "--algorithm", "levints", "--levels", s(&fixture("one_push.txt")), "--output", s(&out)]);
    let records = read_records(fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(records.len(), 1);
    assert!(records[0].solved());
    assert_eq!(records[0].length, Some(1));
    assert!(records[0].expansions >= 1);

    ok(&["run", "--algorithm", "bfs-oracle", "--levels", s(&fixture("one_push.txt")), "--output", s(&out)]);
    assert_eq!(read_records(fs::File::open(&out).unwrap()).unwrap()[0].length, Some(1));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let levels = small_level_file(dir.path(), 8);
    let mut files = Vec::new();
    for workers in ["1", "4"] {
        let names = ["r", "s", "x"].map(|n| dir.path().join(format!("{n}{workers}")));
        ok(&[
            "run", "--algorithm", "lubyts", "--nsims", "64", "--d-min", "2", "--seeds", "0..3",
            "--budget", "20000", "--levels", s(&levels), "--workers", workers,
            "--output", s(&names[0]), "--summary", s(&names[1]), "--series", s(&names[2]),
        ]);
        files.push(names.map(|p| fs::read(p).unwrap()));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn aggregates_match_recomputation_from_records() {
    let dir = tempfile::tempdir().unwrap();
    let levels = small_level_file(dir.path(), 12);
    let (records, summary) = (dir.path().join("r.csv"), dir.path().join("s.json"));
    ok(&[
        "run", "--algorithm", "multits", "--nsims", "20", "--depth-limit", "40", "--seeds", "0..5",
        "--budget", "2000", "--levels", s(&levels), "--output", s(&records), "--summary", s(&summary),
    ]);
    let recs = read_records(fs::File::open(&records).unwrap()).unwrap();
    assert_eq!(recs.len(), 60);
    let stored: Summary = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(stored, summarize(&stored.label, &recs));
    assert_eq!(stored.label, "MultiTS(20, 40) [uniform]");
    // Totals include the partial counts of unsolved levels.
    for seed in &stored.per_seed {
        let total: u64 = recs.iter().filter(|r| r.seed == seed.seed).map(|r| r.expansions).sum();
        assert_eq!(seed.total_expansions, total);
    }
    assert!(recs.iter().any(|r| !r.solved() && r.expansions > 0));
}

#[test]
fn single_trajectory_multits_samples_once_per_level() {
    let dir = tempfile::tempdir().unwrap();
    let levels = small_level_file(dir.path(), 10);
    let out = dir.path().join("r.csv");
    ok(&[
        "run", "--algorithm", "multits", "--nsims", "1", "--depth-limit", "200", "--levels", s(&levels),
        "--output", s(&out),
    ]);
    let recs = read_records(fs::File::open(&out).unwrap()).unwrap();
    assert!(recs.iter().all(|r| r.runs == 1 && r.expansions <= 201));
}

#[test]
fn bridged_table_matches_local_table() {
    let dir = tempfile::tempdir().unwrap();
    let levels = small_level_file(dir.path(), 5);
    let mut table = ProbTable::new(4);
    for level in parse_boxoban(&fs::read_to_string(&levels).unwrap()).unwrap() {
        let domain = SokobanDomain::new(level);
        let root = domain.initial_state();
        table.insert(StateEncoding::encode_state(&domain, &root), vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        for a in 0..4 {
            let s = domain.transition(&root, a.into());
            table.insert(StateEncoding::encode_state(&domain, &s), vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        }
    }
    let table_path = dir.path().join("t.jsonl");
    fs::write(&table_path, table.to_jsonl()).unwrap();
    let local = dir.path().join("local.csv");
    let remote = dir.path().join("remote.csv");
    let base = ["run", "--algorithm", "levints", "--budget", "5000", "--levels", s(&levels)];
    let table_arg = format!("table:{}", s(&table_path));
    let bridge_arg = format!("bridge:{BIN} mock-policy-server --table {}", s(&table_path));
    ok(&[&base[..], &["--policy", &table_arg, "--output", s(&local)]].concat());
    ok(&[&base[..], &["--policy", &bridge_arg, "--output", s(&remote), "--workers", "2"]].concat());
    assert_eq!(fs::read(&local).unwrap(), fs::read(&remote).unwrap());
}

#[test]
fn mixing_flags_run() {
    let dir = tempfile::tempdir().unwrap();
    let levels = small_level_file(dir.path(), 3);
    let base = ["run", "--algorithm", "levints", "--budget", "3000", "--levels", s(&levels)];
    ok(&[&base[..], &["--noise", "0.01"]].concat());
    ok(&[&base[..], &["--policy", "uniform", "--policy", "uniform", "--mix", "bayes", "--priors", "0.25,0.75"]].concat());
    let out = ok(&[&base[..], &["--policy", "uniform", "--policy", "uniform", "--mix", "varying:1.5"]].concat());
    assert!(out.contains("Varying(1.5) mix"), "{out}");
}

#[test]
fn bad_inputs_fail_before_searching() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "; 0\n#####\n#@$.#\n#####\n\n; 1\n#####\n#@$X#\n#####\n").unwrap();
    let out_path = dir.path().join("r.csv");
    let out = bench(&["run", "--algorithm", "levints", "--levels", s(&bad), "--output", s(&out_path)]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("parsing"));
    assert!(!out_path.exists());

    let one = fixture("one_push.txt");
    for args in [
        &["run", "--algorithm", "levints", "--levels", s(&one), "--d-min", "2"][..],
        &["run", "--algorithm", "multits", "--levels", s(&one)],
        &["run", "--algorithm", "bfs-oracle", "--levels", s(&one), "--noise", "0.1"],
        &["run", "--algorithm", "levints", "--levels", s(&one), "--policy", "uniform", "--policy", "uniform"],
        &["run", "--algorithm", "levints", "--levels", s(&one), "--policy", "bridge:/nonexistent/server"],
        &["run", "--algorithm", "nope", "--levels", s(&one)],
    ] {
        assert!(!bench(args).status.success(), "{args:?}");
    }
}

#[test]
fn worker_count_comes_from_the_environment() {
    let out = Command::new(BIN)
        .args(["run", "--algorithm", "levints", "--levels", s(&fixture("one_push.txt"))])
        .env("PTS_WORKERS", "3")
        .env("RUST_LOG", "info")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("3 workers"));
}

#[test]
fn scenario_reports_all_three_solvers() {
    let out = ok(&["scenario", "collapsed", "--depth", "5", "--seeds", "0..2"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "algorithm,seed,status,expansions,runs,length");
    assert_eq!(lines[1], "levints,,solved,10,0,5");
    assert_eq!(lines.len(), 6);
}
