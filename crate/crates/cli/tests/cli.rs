//! End-to-end tests driving the compiled binary.

use std::process::{Command, Output};
use std::time::Instant;

use sparserec::bench::trials_csv_equal_modulo_wall;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sparserec"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("stderr is UTF-8")
}

/// Pulls `key=<value>` out of a summary line like `alg=it re=1.9e-7 ...`.
fn summary_field(line: &str, key: &str) -> String {
    line.split_whitespace()
        .find_map(|tok| tok.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("summary field {key} in {line:?}"))
        .to_string()
}

#[test]
fn help_exits_zero_and_lists_subcommands() {
    let out = run(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for cmd in ["solve", "bench", "sweep-p", "gen"] {
        assert!(text.contains(cmd), "help mentions {cmd}");
    }

    let out = run(&["solve", "--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for default in ["[default: 1e-8]", "[default: 0.01]", "[default: 0.7]", "[default: 1e-3]"] {
        assert!(text.contains(default), "solve help lists {default}");
    }
}

#[test]
fn unknown_flags_are_rejected_with_usage() {
    let out = run(&["solve", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn solve_without_an_instance_source_fails() {
    let out = run(&["solve", "--alg", "it"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("no instance source"));
}

#[test]
fn generated_solve_recovers_within_threshold() {
    let out = run(&[
        "solve", "--m", "64", "--n", "256", "--r", "5", "--seed", "3", "--alg", "it", "--p", "0.7",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let line = stdout(&out);
    let re: f64 = summary_field(&line, "re").parse().unwrap();
    assert!(re <= 1e-3, "relative error {re} above 1e-3");
    assert_eq!(summary_field(&line, "termination"), "converged");
}

#[test]
fn gen_round_trips_and_repeats_checksums() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("i.bin");
    let path_str = path.to_str().unwrap();

    let first = run(&["gen", "--m", "4", "--n", "8", "--r", "2", "--seed", "7", "--out", path_str]);
    assert_eq!(first.status.code(), Some(0));
    let out = run(&["solve", path_str, "--alg", "it"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).starts_with("alg=it re="));

    let again = run(&["gen", "--m", "4", "--n", "8", "--r", "2", "--seed", "7", "--out", path_str]);
    let checksum = |o: &Output| {
        stdout(o)
            .split_whitespace()
            .last()
            .expect("checksum token")
            .to_string()
    };
    assert_eq!(checksum(&first), checksum(&again));
}

#[test]
fn gen_rejects_oversized_sparsity() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("i.bin");
    let out = run(&[
        "gen", "--m", "4", "--n", "8", "--r", "6", "--seed", "7",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!path.exists());
}

#[test]
fn solve_rejects_unreadable_instance_files() {
    let out = run(&["solve", "/nonexistent/instance.bin"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn trace_row_count_matches_reported_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("t.csv");
    let out = run(&[
        "solve", "--m", "32", "--n", "64", "--r", "2", "--seed", "9",
        "--trace", trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let iterations: usize = summary_field(&stdout(&out), "iterations").parse().unwrap();

    let text = std::fs::read_to_string(&trace).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("iter,h1,step_norm,lambda,support"));
    assert_eq!(lines.count(), iterations);
}

#[test]
fn tiny_bench_writes_reports_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let base = ["bench", "--m", "16", "--n", "32", "--r-values", "1,2", "--trials", "2"];

    let start = Instant::now();
    let first = run(&[&base[..], &["--jobs", "1", "--out", out_a.to_str().unwrap()]].concat());
    let elapsed = start.elapsed().as_secs_f64();
    assert_eq!(first.status.code(), Some(0), "stderr: {}", stderr(&first));
    assert!(elapsed < 5.0, "tiny bench took {elapsed:.1}s");
    for file in ["trials.csv", "aggregate.csv", "metadata.json"] {
        assert!(out_a.join(file).exists(), "{file} written");
    }
    assert!(stdout(&first).contains("algorithm"), "summary table printed");

    let second = run(&[&base[..], &["--jobs", "2", "--out", out_b.to_str().unwrap()]].concat());
    assert_eq!(second.status.code(), Some(0));
    let trials_a = std::fs::read_to_string(out_a.join("trials.csv")).unwrap();
    let trials_b = std::fs::read_to_string(out_b.join("trials.csv")).unwrap();
    assert!(trials_csv_equal_modulo_wall(&trials_a, &trials_b));
    let agg_a = std::fs::read_to_string(out_a.join("aggregate.csv")).unwrap();
    let agg_b = std::fs::read_to_string(out_b.join("aggregate.csv")).unwrap();
    assert_eq!(agg_a, agg_b);
}

#[test]
fn bench_requires_an_output_directory() {
    let out = run(&["bench", "--m", "16", "--n", "32", "--r-values", "1,2", "--trials", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--out"));
}

#[test]
fn invalid_sweep_configs_name_the_violated_constraint() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "bench", "--m", "16", "--n", "32", "--r-values", "1,2", "--trials", "0",
        "--out", dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("trials"));
}

#[test]
fn config_files_feed_sweeps_and_flags_override_them() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.conf");
    std::fs::write(
        &config,
        "# tiny smoke sweep\nm = 16\nn = 32\nr_values = 1,2\ntrials = 2\nmaster_seed = 5\n",
    )
    .unwrap();
    let out_dir = dir.path().join("report");
    let out = run(&[
        "sweep-p", "--config", config.to_str().unwrap(), "--p-values", "0.5,0.7",
        "--trials", "1", "--jobs", "1", "--out", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("best p by area under the success curve"));

    let metadata = std::fs::read_to_string(out_dir.join("metadata.json")).unwrap();
    assert!(metadata.contains("\"trials\": 1"), "flag overrides config file");
    assert!(metadata.contains("\"master_seed\": 5"), "file value survives");

    std::fs::write(&config, "m = 16\nwhat = ever\n").unwrap();
    let out = run(&[
        "bench", "--config", config.to_str().unwrap(),
        "--out", dir.path().join("r2").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown key"));
}
