//! Runs the transcripts in docs/protocol.md through the state machine and
//! compares every server line byte for byte. `ICONARY_BLESS=1` rewrites the
//! expected lines in the document instead.

use std::path::PathBuf;
use std::sync::Arc;

use iconary::agents::AlignmentModel;
use iconary::domain::{Phrase, PhraseWord};
use iconary::server::{encode_line, replay, session_step_line, Role, Session, SessionContext};
use iconary::IconLibrary;

fn doc_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/protocol.md")
}

struct Block {
    /// Line range of the block body within the document.
    start: usize,
    end: usize,
}

fn blocks(lines: &[&str]) -> Vec<Block> {
    let mut out = Vec::new();
    let mut open = None;
    for (i, l) in lines.iter().enumerate() {
        if *l == "```transcript" {
            open = Some(i + 1);
        } else if *l == "```" {
            if let Some(start) = open.take() {
                out.push(Block { start, end: i });
            }
        }
    }
    out
}

fn role(s: &str) -> Role {
    match s {
        "drawer" => Role::Drawer,
        "guesser" => Role::Guesser,
        other => panic!("unknown role `{other}`"),
    }
}

/// Two-word model in which `a` and `b` have cosine 0.9.
fn close_model(a: &str, b: &str) -> AlignmentModel {
    let s = (1.0f64 - 0.81).sqrt();
    AlignmentModel::new(
        2,
        vec![a.into(), b.into()],
        vec![],
        vec![1.0, 0.0, 0.9, s],
        vec![],
        vec![1, 1],
    )
    .unwrap()
}

/// Runs one block; returns the block with server lines regenerated, and the
/// final session.
fn run(body: &[&str]) -> (Vec<String>, Session) {
    let mut ctx = SessionContext::with_library(Arc::new(IconLibrary::bundled()));
    let mut session: Option<Session> = None;
    let mut out = Vec::new();
    for line in body {
        if let Some(p) = line.strip_prefix("phrase: ") {
            let words = p
                .split_whitespace()
                .map(|w| match w.strip_suffix('*') {
                    Some(s) => PhraseWord::stopword(s),
                    None => PhraseWord::content(w),
                })
                .collect();
            session = Some(Session::new("fixture", Phrase::new(words).unwrap()));
            out.push(line.to_string());
        } else if let Some(pair) = line.strip_prefix("close: ") {
            let (a, b) = pair.split_once(' ').unwrap();
            ctx.alignment = Some(Arc::new(close_model(a, b)));
            out.push(line.to_string());
        } else if let Some(rest) = line.strip_prefix('@') {
            let (t, rest) = rest.split_once(' ').unwrap();
            let (who, raw) = rest.split_once("> ").unwrap();
            let s = session.as_ref().expect("phrase line first");
            let (next, msgs) = session_step_line(s, t.parse().unwrap(), role(who), raw, &ctx);
            session = Some(next);
            out.push(line.to_string());
            for m in msgs {
                let to = if m.to == Role::Drawer {
                    "drawer"
                } else {
                    "guesser"
                };
                out.push(format!("{to}< {}", encode_line(&m.message).trim_end()));
            }
        }
    }
    let s = session.unwrap();
    // replay of the accepted events must land on the same state
    assert_eq!(replay(&s, &ctx), s);
    (out, s)
}

#[test]
fn protocol_doc_fixtures_match_the_state_machine() {
    let text = std::fs::read_to_string(doc_path()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let found = blocks(&lines);
    assert_eq!(found.len(), 3, "expected three transcript blocks");
    let bless = std::env::var_os("ICONARY_BLESS").is_some();
    let mut rebuilt: Vec<String> = Vec::new();
    let mut cursor = 0;
    for b in &found {
        let body = &lines[b.start..b.end];
        let (regenerated, _) = run(body);
        if !bless {
            let expected: Vec<String> = body.iter().map(|s| s.to_string()).collect();
            for (i, (want, got)) in expected.iter().zip(&regenerated).enumerate() {
                assert_eq!(want, got, "fixture line {}", b.start + i + 1);
            }
            assert_eq!(
                expected.len(),
                regenerated.len(),
                "fixture block at line {}",
                b.start
            );
        }
        rebuilt.extend(lines[cursor..b.start].iter().map(|s| s.to_string()));
        rebuilt.extend(regenerated);
        cursor = b.end;
    }
    if bless {
        rebuilt.extend(lines[cursor..].iter().map(|s| s.to_string()));
        std::fs::write(doc_path(), rebuilt.join("\n") + "\n").unwrap();
    }
}

#[test]
fn the_full_game_fixture_is_two_rounds_and_won() {
    let text = std::fs::read_to_string(doc_path()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let b = &blocks(&lines)[0];
    let (_, s) = run(&lines[b.start..b.end]);
    let record = s.to_record(iconary::Split::Train);
    assert_eq!(record.rounds.len(), 2);
    assert_eq!(record.rounds[0].guesses.len(), 5);
    assert_eq!(record.outcome, iconary::domain::Outcome::Won);
    assert!(record.violations(Some(&IconLibrary::bundled())).is_empty());
}
