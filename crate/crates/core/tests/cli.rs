use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Command, Stdio};
use std::time::Duration;

use iconary::server::ServerMessage;

fn iconary() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_iconary"));
    c.env_remove("ICONARY_DATASET")
        .env_remove("ICONARY_ICONS")
        .env("RUST_LOG", "warn");
    c
}

fn run_ok(args: &[&str], dir: &std::path::Path) -> String {
    let out = iconary().args(args).current_dir(dir).output().unwrap();
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn unknown_flag_prints_usage_and_fails() {
    let out = iconary()
        .args(["stats", "--no-such-flag"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage:"));
    let out = iconary().arg("frobnicate").output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn stats_for_one_split() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&["stats", "--split", "train"], dir.path());
    let lines: Vec<&str> = out.lines().collect();
    assert!(lines[0].starts_with("split") && lines[0].contains("off-by-one"));
    assert!(
        lines[1].starts_with("train") && lines[1].split_whitespace().nth(1) == Some("30"),
        "{out}"
    );
    assert!(!out.contains("ood_test"));
}

#[test]
fn synth_is_seeded_and_matches_bundled_corpus() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&["--seed", "50", "synth", "--out", "a.jsonl"], dir.path());
    let a = std::fs::read_to_string(dir.path().join("a.jsonl")).unwrap();
    assert_eq!(a, iconary::synth::BUNDLED_CORPUS_JSONL);
    run_ok(
        &["--seed", "9", "synth", "--out", "b.jsonl", "--planted", "5"],
        dir.path(),
    );
    run_ok(
        &["--seed", "9", "synth", "--out", "c.jsonl", "--planted", "5"],
        dir.path(),
    );
    assert_eq!(
        std::fs::read(dir.path().join("b.jsonl")).unwrap(),
        std::fs::read(dir.path().join("c.jsonl")).unwrap()
    );
}

#[test]
fn eval_guesser_writes_report_files_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--seed",
        "3",
        "eval-guesser",
        "--agent",
        "baseline",
        "--corpus",
        "ood-dev",
        "--out",
        "r",
    ];
    run_ok(&args, dir.path());
    let json = dir.path().join("r/guesser_ood-dev.json");
    let first = std::fs::read_to_string(&json).unwrap();
    assert!(dir.path().join("r/guesser_ood-dev.csv").exists());
    let report: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(report["games"], 4);
    run_ok(&args, dir.path());
    assert_eq!(std::fs::read_to_string(&json).unwrap(), first);
}

#[test]
fn align_augment_replay_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&["align", "--out", "m.align", "--epochs", "5"], dir.path());
    assert!(out.contains("wrote m.align"));
    run_ok(
        &["augment", "--alignment", "m.align", "--out", "aug.jsonl"],
        dir.path(),
    );
    let aug = std::fs::read_to_string(dir.path().join("aug.jsonl")).unwrap();
    assert!(aug.lines().count() > 0 && aug.contains("~aug"));

    let id = iconary::synth::bundled_corpus()[0].game_id.clone();
    let t = run_ok(&["replay", &id], dir.path());
    assert!(
        t.starts_with(&format!("game {id} [train]")) && t.contains("outcome:"),
        "{t}"
    );
    let missing = iconary()
        .args(["replay", "nope"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(!missing.status.success());

    run_ok(&["export-plots", "--out", "p"], dir.path());
    for f in ["guesser_curves.svg", "drawer_curves.svg", "curves.json"] {
        assert!(dir.path().join("p").join(f).exists(), "{f}");
    }
    let d = run_ok(
        &[
            "eval-drawer",
            "--corpus",
            "ind-dev",
            "--alignment",
            "m.align",
            "--out",
            "r",
        ],
        dir.path(),
    );
    assert!(d.contains("icon F1") && d.contains("perplexity"), "{d}");
}

#[test]
fn serve_baseline_drawer_gives_a_joinable_session() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = iconary()
        .args([
            "serve",
            "--drawer",
            "baseline",
            "--guesser",
            "human",
            "--http-port",
            "0",
        ])
        .env("ICONARY_PORT", "0")
        .env("ICONARY_DATA_DIR", dir.path().join("games"))
        .current_dir(dir.path())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut stdout = BufReader::new(child.stdout.take().unwrap());
    let mut line = String::new();
    stdout.read_line(&mut line).unwrap();
    let addr = line.trim().rsplit(' ').next().unwrap().to_string();
    assert!(line.starts_with("game server listening on"), "{line}");

    let mut conn = TcpStream::connect(&addr).unwrap();
    conn.set_read_timeout(Some(Duration::from_secs(20)))
        .unwrap();
    conn.write_all(b"{\"type\":\"join\",\"role\":\"guesser\",\"player\":{\"id\":\"tester\"}}\n")
        .unwrap();
    let mut reader = BufReader::new(conn.try_clone().unwrap());
    let mut types = Vec::new();
    while !types.contains(&"submit_drawing".to_string()) {
        let mut l = String::new();
        assert!(
            reader.read_line(&mut l).unwrap() > 0,
            "closed early after {types:?}"
        );
        let msg: ServerMessage = serde_json::from_str(&l).unwrap();
        if let ServerMessage::Start { phrase, .. } = &msg {
            assert!(phrase.is_none());
        }
        types.push(
            serde_json::from_str::<serde_json::Value>(&l).unwrap()["type"]
                .as_str()
                .unwrap()
                .to_string(),
        );
    }
    assert_eq!(types, ["join", "start", "submit_drawing"]);
    child.kill().unwrap();
    child.wait().unwrap();
}
