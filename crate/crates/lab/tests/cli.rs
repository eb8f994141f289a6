//! Command-line behaviour: exit codes, validation diagnostics, reruns.

use std::path::Path;
use std::process::Command;

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lab"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const GOOD: &str = r#"
[experiment]
kind = sbc-ratio
trials = 3
seed = 5
horizon = 4096

[system]
spec = expanding k=2

[target]
schedule = powerlaw K=0.25 beta=0.5
"#;

#[test]
fn validate_ok_and_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "good.conf", GOOD);
    let out = lab().arg("validate").arg(&cfg).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "ok");
}

#[test]
fn validate_reports_named_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.conf",
        r#"
[experiment]
kind = sbc-ratio

[system]
spec = iet lengths=0.4,0.5 perm=2,1

[target]
schedule = geometric r0=0.5 lambda=1.5
"#,
    );
    let out = lab().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("lambda must be in (0,1)"), "{text}");
    assert!(text.contains("sum to 1"), "{text}");
}

#[test]
fn run_rejects_bad_config_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.conf",
        "[experiment]\nkind = sbc-ratio\n\n[system]\nspec = expanding k=1\n",
    );
    let out = lab().arg("run").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("k >= 2"));
}

#[test]
fn acceptance_fail_sets_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "fail.conf",
        &format!("{GOOD}\n[acceptance]\nmedian_min = 500\n"),
    );
    let out = lab()
        .arg("run")
        .arg(&cfg)
        .arg("--output")
        .arg(dir.path().join("rows.jsonl"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn single_trial_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "one.conf",
        &GOOD.replace("trials = 3", "trials = 1"),
    );
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for out in [&a, &b] {
        let st = lab()
            .arg("run")
            .arg(&cfg)
            .arg("--output")
            .arg(out)
            .output()
            .unwrap();
        assert!(st.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn trial_prefix_unchanged_when_trials_added() {
    // per-trial streams make earlier trials' rows independent of the count
    let dir = tempfile::tempdir().unwrap();
    let c3 = write(dir.path(), "three.conf", GOOD);
    let c5 = write(
        dir.path(),
        "five.conf",
        &GOOD.replace("trials = 3", "trials = 5"),
    );
    let out3 = dir.path().join("three.jsonl");
    let out5 = dir.path().join("five.jsonl");
    lab()
        .arg("run")
        .arg(&c3)
        .arg("--output")
        .arg(&out3)
        .output()
        .unwrap();
    lab()
        .arg("run")
        .arg(&c5)
        .arg("--output")
        .arg(&out5)
        .output()
        .unwrap();
    let t3 = std::fs::read_to_string(&out3).unwrap();
    let t5 = std::fs::read_to_string(&out5).unwrap();
    assert!(
        t5.starts_with(&t3),
        "five-trial rows must extend three-trial rows"
    );
}

#[test]
fn csv_view_has_header_and_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "csv.conf",
        &GOOD.replace("horizon = 4096", "horizon = 4096\nformat = csv"),
    );
    let out_path = dir.path().join("rows.csv");
    let st = lab()
        .arg("run")
        .arg(&cfg)
        .arg("--output")
        .arg(&out_path)
        .output()
        .unwrap();
    assert!(st.status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "system,trial,n,s_n,sum_mu,ratio,last_hit,max_gap"
    );
    let first = lines.next().unwrap();
    assert_eq!(first.split(',').count(), 8);
    assert!(first.starts_with("expanding(2),0,"));
}

#[test]
fn summary_quantiles_recomputable_from_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "q.conf",
        &GOOD.replace("trials = 3", "trials = 9"),
    );
    let rows_path = dir.path().join("rows.jsonl");
    let out = lab()
        .arg("run")
        .arg(&cfg)
        .arg("--output")
        .arg(&rows_path)
        .output()
        .unwrap();
    let summary: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stdout).trim()).unwrap();
    // final ratio per trial from the row stream
    let mut finals = std::collections::BTreeMap::new();
    for line in std::fs::read_to_string(&rows_path).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if v["type"] == "hit" && v["n"].as_u64() == Some(4096) {
            finals.insert(v["trial"].as_u64().unwrap(), v["ratio"].as_f64().unwrap());
        }
    }
    let mut ratios: Vec<f64> = finals.values().copied().collect();
    ratios.sort_by(f64::total_cmp);
    let median = ratios[(ratios.len() - 1) / 2..].first().copied().unwrap();
    let p50 = summary["quantiles"]["p50"].as_f64().unwrap();
    assert!((median - p50).abs() < 1e-12, "{median} vs {p50}");
}

#[test]
fn rows_stream_to_stdout_when_no_output_configured() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "stdout.conf",
        &GOOD.replace("trials = 3", "trials = 2"),
    );
    let out = lab().arg("run").arg(&cfg).output().unwrap();
    assert!(out.status.success());
    // rows on stdout (one JSON object per line), summary on stderr
    for line in String::from_utf8_lossy(&out.stdout).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["type"], "hit");
    }
    let summary: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stderr).trim()).unwrap();
    assert_eq!(summary["kind"], "sbc-ratio");
}

#[test]
fn torus_rotation_waiting_scan_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "torus.conf",
        r#"
[experiment]
kind = waiting-exponent
trials = 5
seed = 8
horizon = 2000000

[system]
spec = rotation alpha=golden,silver

[radii]
spec = dyadic from=2 to=7
"#,
    );
    let rows_path = dir.path().join("rows.jsonl");
    let out = lab()
        .arg("run")
        .arg(&cfg)
        .arg("--output")
        .arg(&rows_path)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let first: serde_json::Value = serde_json::from_str(
        std::fs::read_to_string(&rows_path)
            .unwrap()
            .lines()
            .next()
            .unwrap(),
    )
    .unwrap();
    assert_eq!(first["x"].as_array().unwrap().len(), 2);
}

#[test]
fn oracle_subcommands_answer() {
    let out = lab()
        .args(["oracle", "cf", "--alpha", "golden", "--depth", "5"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("quotients = 1,1,1,1,1"), "{text}");

    let out = lab()
        .args([
            "oracle",
            "waiting-naive",
            "--system",
            "expanding k=2",
            "--x",
            "0.1",
            "--y",
            "0.0",
            "--r",
            "0.0625",
            "--horizon",
            "1000",
        ])
        .output()
        .unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "55");

    let out = lab()
        .args([
            "oracle",
            "three-distance",
            "--alpha",
            "golden",
            "--n",
            "100",
        ])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        text.starts_with("distinct_gap_count = 3") || text.starts_with("distinct_gap_count = 2"),
        "{text}"
    );
}
