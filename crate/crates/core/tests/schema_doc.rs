//! The examples in docs/game-schema.md must load and validate.

use std::path::PathBuf;

use iconary::domain::{game_outcome, GameRecord, Outcome};
use iconary::server::{convert_flat_jsonl, ingest_dataset};
use iconary::IconLibrary;

fn json_blocks() -> Vec<String> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/game-schema.md");
    let text = std::fs::read_to_string(path).unwrap();
    let mut out = Vec::new();
    let mut cur: Option<String> = None;
    for l in text.lines() {
        match (&mut cur, l) {
            (None, "```json") => cur = Some(String::new()),
            (Some(_), "```") => out.push(cur.take().unwrap()),
            (Some(b), l) => {
                b.push_str(l);
                b.push('\n');
            }
            _ => {}
        }
    }
    out
}

#[test]
fn canonical_example_is_a_valid_record() {
    let blocks = json_blocks();
    assert_eq!(blocks.len(), 2);
    let rec: GameRecord = serde_json::from_str(&blocks[0]).unwrap();
    assert!(rec.violations(Some(&IconLibrary::bundled())).is_empty());
    assert_eq!(rec.outcome, Outcome::Won);
    assert!(game_outcome(&rec).won);
    // stored verdicts agree with rescoring
    let stored: Vec<_> = rec.rounds[0]
        .guesses
        .iter()
        .map(|g| g.correct.clone())
        .collect();
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("one.json"), &blocks[0]).unwrap();
    let (loaded, report) = ingest_dataset(dir.path(), Some(&IconLibrary::bundled())).unwrap();
    assert_eq!((loaded.len(), report.violations.len()), (1, 0));
    assert_eq!(
        loaded[0].rounds[0]
            .guesses
            .iter()
            .map(|g| g.correct.clone())
            .collect::<Vec<_>>(),
        stored
    );
}

#[test]
fn flat_example_converts() {
    let line = json_blocks()[1].replace('\n', "");
    let (recs, errors) = convert_flat_jsonl(&line);
    assert!(errors.is_empty(), "{errors:?}");
    let rec = &recs[0];
    assert_eq!(rec.split.as_str(), "ood_valid");
    assert_eq!(rec.rounds.len(), 2);
    assert_eq!(rec.rounds[1].drawing.placements[1].scale, 0.8);
    assert_eq!(
        rec.rounds[0].guesses[0].correct,
        Some(vec![true, false, true])
    );
    assert!(rec.phrase.words()[1].is_oov);
    assert_eq!(rec.players.drawer.id, "p-3");
    assert_eq!(rec.players.guesser.id, "guesser");
    assert!(rec.violations(Some(&IconLibrary::bundled())).is_empty());
}
