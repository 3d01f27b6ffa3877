use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn kbjoint(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kbjoint"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = kbjoint(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

/// A small synthetic world with mined clues, in `w/` and `c/`.
fn world() -> TempDir {
    let tmp = TempDir::new().unwrap();
    let d = tmp.path();
    ok(
        d,
        &[
            "--output-dir",
            "w",
            "--seed",
            "2",
            "synth",
            "--pairs",
            "200",
        ],
    );
    ok(
        d,
        &["--triples", "w/triples.tsv", "--output-dir", "c", "mine"],
    );
    tmp
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn full_pipeline_produces_every_artifact() {
    let tmp = world();
    let d = tmp.path();
    for f in [
        "w/triples.tsv",
        "w/gold.tsv",
        "w/predictions.jsonl",
        "c/clues.json",
    ] {
        assert!(d.join(f).is_file(), "{f}");
    }
    let solve = [
        "--predictions",
        "w/predictions.jsonl",
        "--clues",
        "c/clues.json",
        "--output-dir",
        "ilp",
        "solve",
        "--dump-constraints",
        "--write-lp",
    ];
    ok(d, &solve);
    for f in [
        "predictions.tsv",
        "report.json",
        "constraints.tsv",
        "model.lp",
    ] {
        assert!(d.join("ilp").join(f).is_file(), "{f}");
    }
    let report: serde_json::Value = serde_json::from_str(&read(d, "ilp/report.json")).unwrap();
    assert_eq!(report["mode"], "hard");
    assert_eq!(report["optimal"], true);
    assert_eq!(report["aux_vars"], 0);

    ok(
        d,
        &[
            "--predictions",
            "w/predictions.jsonl",
            "--output-dir",
            "mz",
            "solve",
            "--method",
            "mintzpp",
        ],
    );
    ok(
        d,
        &[
            "--gold",
            "w/gold.tsv",
            "--output-dir",
            "ev",
            "eval",
            "ilp/predictions.tsv",
            "--baseline",
            "mz/predictions.tsv",
        ],
    );
    let summary: serde_json::Value = serde_json::from_str(&read(d, "ev/summary.json")).unwrap();
    let ilp = summary["peak"]["f1"].as_f64().unwrap();
    let mintz = summary["baseline_peak"]["f1"].as_f64().unwrap();
    assert!(ilp > mintz, "ILP {ilp} vs Mintz++ {mintz}");
    assert!(read(d, "ev/pr.csv").lines().count() > 1);
    assert!(d.join("ev/diff.json").is_file());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = world();
    let d = tmp.path();
    for out in ["a", "b"] {
        ok(
            d,
            &[
                "--predictions",
                "w/predictions.jsonl",
                "--clues",
                "c/clues.json",
                "--output-dir",
                out,
                "--mode",
                "soft",
                "--alpha",
                "0.5",
                "solve",
                "--write-lp",
            ],
        );
        ok(
            d,
            &[
                "--predictions",
                "w/predictions.jsonl",
                "--triples",
                "w/triples.tsv",
                "--output-dir",
                &format!("{out}/lp"),
                "export-lp",
            ],
        );
        ok(
            d,
            &[
                "--gold",
                "w/gold.tsv",
                "--output-dir",
                &format!("{out}/ev"),
                "eval",
                &format!("{out}/predictions.tsv"),
            ],
        );
    }
    for f in [
        "predictions.tsv",
        "report.json",
        "model.lp",
        "lp/model.lp",
        "ev/pr.csv",
        "ev/summary.json",
    ] {
        assert_eq!(
            fs::read(d.join("a").join(f)).unwrap(),
            fs::read(d.join("b").join(f)).unwrap(),
            "{f}"
        );
    }
    assert!(!read(d, "a/report.json").contains("time"));
}

#[test]
fn alpha_sweep_writes_one_directory_per_value() {
    let tmp = world();
    let d = tmp.path();
    ok(
        d,
        &[
            "--predictions",
            "w/predictions.jsonl",
            "--clues",
            "c/clues.json",
            "--output-dir",
            "sweep",
            "--mode",
            "soft",
            "--alpha",
            "0.1,1,10",
            "solve",
        ],
    );
    for a in ["alpha_0.1", "alpha_1", "alpha_10"] {
        let report: serde_json::Value =
            serde_json::from_str(&read(d, &format!("sweep/{a}/report.json"))).unwrap();
        assert_eq!(report["mode"], "soft");
        assert!(d.join("sweep").join(a).join("predictions.tsv").is_file());
    }
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let tmp = world();
    let d = tmp.path();
    fs::write(
        d.join("run.toml"),
        "top-k = 1\nmode = \"soft\"\nalpha = 2.0\npredictions = \"w/predictions.jsonl\"\nclues = \"c/clues.json\"\n",
    )
    .unwrap();
    ok(
        d,
        &["--config", "run.toml", "--output-dir", "from_file", "solve"],
    );
    let file: serde_json::Value = serde_json::from_str(&read(d, "from_file/report.json")).unwrap();
    assert_eq!(file["mode"], "soft");

    ok(
        d,
        &[
            "--config",
            "run.toml",
            "--mode",
            "hard",
            "--top-k",
            "3",
            "--output-dir",
            "flags",
            "solve",
        ],
    );
    let flags: serde_json::Value = serde_json::from_str(&read(d, "flags/report.json")).unwrap();
    assert_eq!(flags["mode"], "hard");
    assert!(flags["decision_vars"].as_u64() > file["decision_vars"].as_u64());
}

#[test]
fn hard_and_soft_differ_only_in_penalised_rows() {
    let tmp = world();
    let d = tmp.path();
    // Finite clue scores, so that soft mode has penalised rows.
    fs::write(
        d.join("finite.json"),
        read(d, "c/clues.json").replace("\"-inf\"", "-4.0"),
    )
    .unwrap();
    let base = [
        "--predictions",
        "w/predictions.jsonl",
        "--clues",
        "finite.json",
    ];
    ok(d, &[&base[..], &["--output-dir", "hard", "solve"]].concat());
    ok(
        d,
        &[
            &base[..],
            &[
                "--output-dir",
                "soft",
                "--mode",
                "soft",
                "--alpha",
                "1000",
                "solve",
            ],
        ]
        .concat(),
    );
    let hard: serde_json::Value = serde_json::from_str(&read(d, "hard/report.json")).unwrap();
    let soft: serde_json::Value = serde_json::from_str(&read(d, "soft/report.json")).unwrap();
    assert_eq!(hard["decision_vars"], soft["decision_vars"]);
    assert_eq!(hard["constraints"], soft["constraints"]);
    assert_eq!(hard["aux_vars"], 0);
    assert!(soft["aux_vars"].as_u64().unwrap() > 0);
    assert_eq!(
        read(d, "hard/predictions.tsv"),
        read(d, "soft/predictions.tsv")
    );
}

#[test]
fn comparing_a_run_with_itself_has_no_differences() {
    let tmp = world();
    let d = tmp.path();
    ok(
        d,
        &[
            "--predictions",
            "w/predictions.jsonl",
            "--clues",
            "c/clues.json",
            "--output-dir",
            "r",
            "solve",
            "--method",
            "rule-based",
        ],
    );
    ok(
        d,
        &[
            "--gold",
            "w/gold.tsv",
            "--output-dir",
            "ev",
            "eval",
            "r/predictions.tsv",
            "--baseline",
            "r/predictions.tsv",
        ],
    );
    let diff: serde_json::Value = serde_json::from_str(&read(d, "ev/diff.json")).unwrap();
    assert_eq!(diff["eliminated"], 0);
    assert_eq!(diff["corrected"], 0);
    assert_eq!(diff["introduced"], 0);
}

#[test]
fn empty_predictions_give_empty_output() {
    let tmp = world();
    let d = tmp.path();
    fs::write(d.join("none.jsonl"), "").unwrap();
    ok(
        d,
        &[
            "--predictions",
            "none.jsonl",
            "--clues",
            "c/clues.json",
            "--output-dir",
            "e",
            "solve",
        ],
    );
    let lines: Vec<String> = read(d, "e/predictions.tsv")
        .lines()
        .map(String::from)
        .collect();
    assert_eq!(lines.len(), 1);
    assert!(lines[0].starts_with('#'));
}

#[test]
fn mine_and_candidates_print_to_stdout_without_output_dir() {
    let tmp = world();
    let d = tmp.path();
    let mined = ok(d, &["--triples", "w/triples.tsv", "mine"]);
    assert_eq!(
        String::from_utf8(mined.stdout).unwrap(),
        read(d, "c/clues.json")
    );
    let cands = ok(d, &["--predictions", "w/predictions.jsonl", "candidates"]);
    let text = String::from_utf8(cands.stdout).unwrap();
    assert_eq!(text.lines().count(), 200);
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["pair_id"], "p0000");
}

#[test]
fn usage_and_config_errors_exit_with_one() {
    let tmp = world();
    let d = tmp.path();
    for args in [
        vec!["mine"],
        vec!["frobnicate"],
        vec!["--triples", "w/triples.tsv", "--kappa", "0.5", "mine"],
        vec![
            "--triples",
            "w/triples.tsv",
            "--uniq-threshold",
            "1.5",
            "mine",
        ],
        vec![
            "--predictions",
            "w/predictions.jsonl",
            "--top-k",
            "0",
            "candidates",
        ],
        vec![
            "--predictions",
            "w/predictions.jsonl",
            "--clues",
            "c/clues.json",
            "solve",
        ],
        vec![
            "--predictions",
            "w/predictions.jsonl",
            "--output-dir",
            "x",
            "solve",
        ],
        vec!["--output-dir", "s", "synth", "--noise", "2"],
        vec!["--config", "missing.toml", "mine"],
    ] {
        let out = kbjoint(d, &args);
        assert_eq!(
            code(&out),
            1,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn data_errors_exit_with_two() {
    let tmp = world();
    let d = tmp.path();
    fs::write(d.join("bad.tsv"), "only\ttwo\n").unwrap();
    fs::write(d.join("empty_gold.tsv"), "").unwrap();
    ok(
        d,
        &[
            "--predictions",
            "w/predictions.jsonl",
            "--output-dir",
            "mz",
            "solve",
            "--method",
            "mintzpp",
        ],
    );
    for args in [
        vec!["--triples", "absent.tsv", "mine"],
        vec!["--triples", "bad.tsv", "mine"],
        vec![
            "--gold",
            "absent.tsv",
            "--output-dir",
            "ev",
            "eval",
            "mz/predictions.tsv",
        ],
        vec![
            "--gold",
            "empty_gold.tsv",
            "--output-dir",
            "ev",
            "eval",
            "mz/predictions.tsv",
        ],
    ] {
        let out = kbjoint(d, &args);
        assert_eq!(
            code(&out),
            2,
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    }
}

#[test]
fn help_exits_cleanly() {
    let tmp = TempDir::new().unwrap();
    let out = kbjoint(tmp.path(), &["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for sub in ["mine", "candidates", "solve", "eval", "synth", "export-lp"] {
        assert!(text.contains(sub), "{sub}");
    }
}
