use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pbs_lex::SolutionFile;

fn pbs_lex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pbs-lex")).args(args).output().unwrap()
}

fn file(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn generate(dir: &Path, name: &str, seed: u64, pilots: usize, pairings: usize) -> String {
    let path = file(dir, name);
    let out = pbs_lex(&[
        "generate",
        "--seed",
        &seed.to_string(),
        "--pilots",
        &pilots.to_string(),
        "--pairings",
        &pairings.to_string(),
        "-o",
        &path,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn generate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate(dir.path(), "a.json", 5, 4, 12);
    let b = generate(dir.path(), "b.json", 5, 4, 12);
    let c = generate(dir.path(), "c.json", 6, 4, 12);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn generate_writes_to_stdout() {
    let out = pbs_lex(&["generate", "--seed", "1", "--pilots", "2", "--pairings", "5"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"schema_version\": 1"));
}

#[test]
fn solve_matches_oracle_and_checks() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "inst.json", 3, 3, 9);
    let sol = file(dir.path(), "sol.json");
    let out = pbs_lex(&["solve", &inst, "-o", &sol, "--check-oracle"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stderr(&out).starts_with("optimal: value"));
    let parsed = SolutionFile::parse(&fs::read_to_string(&sol).unwrap()).unwrap();
    assert_eq!(parsed.status, "optimal");
    assert_eq!(parsed.schedules.len(), 3);
    let out = pbs_lex(&["check", &inst, &sol]);
    assert!(out.status.success(), "{}", stderr(&out));
}

#[test]
fn switches_keep_the_value() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "inst.json", 8, 4, 12);
    let run = |flags: &[&str], tag: &str| -> (SolutionFile, String) {
        let sol = file(dir.path(), &format!("sol_{tag}.json"));
        let stats = file(dir.path(), &format!("stats_{tag}.json"));
        let mut args = vec![
            "solve",
            inst.as_str(),
            "-o",
            sol.as_str(),
            "--stats-out",
            stats.as_str(),
        ];
        args.extend_from_slice(flags);
        let out = pbs_lex(&args);
        assert!(out.status.success(), "{}", stderr(&out));
        (
            SolutionFile::parse(&fs::read_to_string(&sol).unwrap()).unwrap(),
            fs::read_to_string(&stats).unwrap(),
        )
    };
    let (base, base_stats) = run(&[], "base");
    let (direct, direct_stats) = run(&["--no-reduction"], "direct");
    let (unbounded, _) = run(&["--no-bounds", "--columns-per-iter", "3", "--K", "2"], "other");
    assert_eq!(base.value, direct.value);
    assert_eq!(base.value, unbounded.value);
    assert_ne!(base_stats, direct_stats);
    let stats: serde_json::Value = serde_json::from_str(&direct_stats).unwrap();
    assert_eq!(stats["reduction_rounds"], 0);
    assert!(stats.get("timings").is_none());
}

#[test]
fn timings_are_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "inst.json", 2, 2, 6);
    let stats = file(dir.path(), "stats.json");
    let out = pbs_lex(&[
        "solve",
        &inst,
        "-o",
        &file(dir.path(), "sol.json"),
        "--stats-out",
        &stats,
        "--timings",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let stats: serde_json::Value = serde_json::from_str(&fs::read_to_string(&stats).unwrap()).unwrap();
    assert!(stats["timings"]["total_seconds"].is_number());
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "inst.json", 4, 5, 16);
    let outputs: Vec<(Vec<u8>, Vec<u8>)> = ["a", "b"]
        .iter()
        .map(|tag| {
            let sol = file(dir.path(), &format!("sol_{tag}.json"));
            let stats = file(dir.path(), &format!("stats_{tag}.json"));
            let out = pbs_lex(&["solve", &inst, "-o", &sol, "--stats-out", &stats]);
            assert!(out.status.success(), "{}", stderr(&out));
            (fs::read(&sol).unwrap(), fs::read(&stats).unwrap())
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn malformed_instance_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = PathBuf::from(file(dir.path(), "bad.json"));
    fs::write(&path, "{\n  \"schema_version\": 1,\n  \"month_days\": oops\n}\n").unwrap();
    let out = pbs_lex(&["solve", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
}

#[test]
fn missing_file_is_an_input_error() {
    let out = pbs_lex(&["solve", "/nonexistent/instance.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot read"));
}

#[test]
fn bad_eps_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "inst.json", 1, 2, 5);
    let out = pbs_lex(&["solve", &inst, "--eps", "-1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_detects_tampering() {
    let dir = tempfile::tempdir().unwrap();
    let inst = generate(dir.path(), "inst.json", 9, 3, 9);
    let sol = file(dir.path(), "sol.json");
    assert!(pbs_lex(&["solve", &inst, "-o", &sol]).status.success());
    let mut parsed = SolutionFile::parse(&fs::read_to_string(&sol).unwrap()).unwrap();
    parsed.value[0] += 1;
    let tampered = file(dir.path(), "tampered.json");
    fs::write(&tampered, parsed.to_json()).unwrap();
    let out = pbs_lex(&["check", &inst, &tampered]);
    assert_eq!(out.status.code(), Some(2));
}
