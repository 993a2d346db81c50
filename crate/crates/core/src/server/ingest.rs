//! Loading corpora in the canonical game schema, plus a converter for the
//! flat per-game layout used by dataset exports.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ServerError;
use crate::domain::{
    game_outcome, Drawing, GameRecord, Guess, IconLibrary, IconPlacement, Outcome, Phrase,
    PhraseWord, Player, Players, Round, Split,
};

/// Above this share of invalid records the whole ingest fails.
pub const MAX_VIOLATION_RATE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinCrossCheck {
    pub split: Split,
    pub games: usize,
    /// Every content word guessed at some point.
    pub all_content_words: f64,
    /// The stored outcome flag.
    pub recorded: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IngestReport {
    pub files: usize,
    pub records_seen: usize,
    pub accepted: usize,
    pub per_split: BTreeMap<String, usize>,
    /// (record location, problem); violating records are excluded.
    pub violations: Vec<(String, String)>,
    /// (file or line, parse error); skipped.
    pub unparseable: Vec<(String, String)>,
    pub win_check: Vec<WinCrossCheck>,
}

impl IngestReport {
    pub fn violation_rate(&self) -> f64 {
        let bad = self.records_seen - self.accepted;
        if self.records_seen == 0 {
            0.0
        } else {
            bad as f64 / self.records_seen as f64
        }
    }
}

fn parse_file(
    path: &Path,
    out: &mut Vec<(String, Result<GameRecord, String>)>,
    report: &mut IngestReport,
) {
    let name = path.display().to_string();
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            report.unparseable.push((name, e.to_string()));
            return;
        }
    };
    report.files += 1;
    if path.extension().is_some_and(|e| e == "jsonl") {
        for (i, line) in text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
        {
            let loc = format!("{name}:{}", i + 1);
            match serde_json::from_str::<serde_json::Value>(line) {
                Ok(v) => out.push((loc, serde_json::from_value(v).map_err(|e| e.to_string()))),
                Err(e) => report.unparseable.push((loc, e.to_string())),
            }
        }
        return;
    }
    match serde_json::from_str::<serde_json::Value>(&text) {
        Ok(serde_json::Value::Array(items)) => {
            for (i, v) in items.into_iter().enumerate() {
                out.push((
                    format!("{name}[{i}]"),
                    serde_json::from_value(v).map_err(|e| e.to_string()),
                ));
            }
        }
        Ok(v) => out.push((name, serde_json::from_value(v).map_err(|e| e.to_string()))),
        Err(e) => report.unparseable.push((name, e.to_string())),
    }
}

/// Reads every `.json` / `.jsonl` file under `path` (or `path` itself).
///
/// Records that parse as JSON but break the schema are listed as
/// violations and dropped; files that are not JSON at all are listed and
/// skipped. More than [`MAX_VIOLATION_RATE`] violations is a hard failure.
pub fn ingest_dataset(
    path: &Path,
    library: Option<&IconLibrary>,
) -> Result<(Vec<GameRecord>, IngestReport), ServerError> {
    let mut report = IngestReport::default();
    let mut parsed = Vec::new();
    if path.is_dir() {
        for entry in walkdir::WalkDir::new(path).sort_by_file_name() {
            let entry = entry.map_err(|e| ServerError::Io(e.into()))?;
            let p = entry.path();
            if p.is_file() && p.extension().is_some_and(|e| e == "json" || e == "jsonl") {
                parse_file(p, &mut parsed, &mut report);
            }
        }
    } else if path.is_file() {
        parse_file(path, &mut parsed, &mut report);
    } else {
        return Err(ServerError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            path.display().to_string(),
        )));
    }

    let mut corpus = Vec::new();
    report.records_seen = parsed.len();
    for (loc, rec) in parsed {
        match rec {
            Err(e) => report.violations.push((loc, e)),
            Ok(r) => {
                let v = r.violations(library);
                if v.is_empty() {
                    corpus.push(r);
                } else {
                    report
                        .violations
                        .extend(v.into_iter().map(|m| (format!("{loc} ({})", r.game_id), m)));
                }
            }
        }
    }
    report.accepted = corpus.len();
    for g in &corpus {
        *report
            .per_split
            .entry(g.split.as_str().to_string())
            .or_default() += 1;
    }
    report.win_check = Split::ALL
        .iter()
        .filter_map(|&split| {
            let games: Vec<&GameRecord> = corpus.iter().filter(|g| g.split == split).collect();
            let n = games.len();
            (n > 0).then(|| WinCrossCheck {
                split,
                games: n,
                all_content_words: 100.0
                    * games.iter().filter(|g| game_outcome(g).won).count() as f64
                    / n as f64,
                recorded: 100.0 * games.iter().filter(|g| g.outcome == Outcome::Won).count() as f64
                    / n as f64,
            })
        })
        .collect();
    let rate = report.violation_rate();
    if rate > MAX_VIOLATION_RATE {
        return Err(ServerError::TooManyViolations {
            rate,
            report: Box::new(report),
        });
    }
    Ok((corpus, report))
}

/// JSON Lines export, one canonical record per line.
pub fn export_jsonl(corpus: &[GameRecord]) -> String {
    crate::synth::to_jsonl(corpus)
}

/// Flat per-game export layout (see `docs/game-schema.md`).
#[derive(Debug, Clone, Deserialize)]
pub struct FlatGame {
    pub id: String,
    pub split: String,
    pub phrase: Vec<String>,
    pub stopwords: Vec<bool>,
    #[serde(default)]
    pub oov: Vec<bool>,
    pub drawings: Vec<Vec<FlatIcon>>,
    /// Guesses per drawing, each a list of words.
    pub guesses: Vec<Vec<Vec<String>>>,
    pub won: bool,
    pub seconds: f64,
    #[serde(default)]
    pub drawer: Option<String>,
    #[serde(default)]
    pub guesser: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct FlatIcon {
    pub name: String,
    pub x: f64,
    pub y: f64,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub rotation: f64,
    #[serde(default)]
    pub flip: bool,
}

fn one() -> f64 {
    1.0
}

/// Converts one flat-layout game into the canonical schema. Guess verdicts
/// are recomputed; pose values are clamped into range.
pub fn convert_flat(game: &FlatGame) -> Result<GameRecord, ServerError> {
    let bad = |m: String| ServerError::Convert(format!("{}: {m}", game.id));
    if game.stopwords.len() != game.phrase.len()
        || !(game.oov.is_empty() || game.oov.len() == game.phrase.len())
    {
        return Err(bad(
            "per-word flag lists must match the phrase length".into()
        ));
    }
    if game.guesses.len() > game.drawings.len() {
        return Err(bad("more guess lists than drawings".into()));
    }
    let split: Split = game.split.parse().map_err(bad)?;
    let words = game
        .phrase
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let mut w = if game.stopwords[i] {
                PhraseWord::stopword(t.as_str())
            } else {
                PhraseWord::content(t.as_str())
            };
            w.is_oov = game.oov.get(i).copied().unwrap_or(false);
            w
        })
        .collect();
    let phrase = Phrase::new(words).map_err(|e| bad(e.to_string()))?;
    let mut state = phrase.clone();
    let mut rounds = Vec::new();
    for (r, icons) in game.drawings.iter().enumerate() {
        let placements = icons
            .iter()
            .map(|i| {
                IconPlacement {
                    icon_id: i.name.clone(),
                    x: i.x,
                    y: i.y,
                    scale: i.scale,
                    rotation: i.rotation,
                    flipped: i.flip,
                }
                .clamped()
            })
            .collect();
        let mut guesses = Vec::new();
        for g in game.guesses.get(r).into_iter().flatten() {
            let (next, scored) = crate::domain::evaluate_guess(&state, &Guess::new(g.clone()))
                .map_err(|e| bad(e.to_string()))?;
            state = next;
            guesses.push(scored);
        }
        rounds.push(Round {
            drawing: Drawing::new(placements, r),
            guesses,
        });
    }
    let player = |id: &Option<String>, fallback: &str| {
        Player::human(id.clone().unwrap_or_else(|| fallback.to_string()))
    };
    Ok(GameRecord {
        game_id: game.id.clone(),
        split,
        phrase,
        rounds,
        outcome: if game.won {
            Outcome::Won
        } else {
            Outcome::LostTimeout
        },
        elapsed_seconds: game.seconds,
        players: Players {
            drawer: player(&game.drawer, "drawer"),
            guesser: player(&game.guesser, "guesser"),
        },
    })
}

/// Converts a JSON Lines file of flat-layout games. Failures are returned
/// alongside the converted records rather than aborting.
pub fn convert_flat_jsonl(text: &str) -> (Vec<GameRecord>, Vec<(usize, String)>) {
    let mut ok = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        match serde_json::from_str::<FlatGame>(line)
            .map_err(ServerError::from)
            .and_then(|g| convert_flat(&g))
        {
            Ok(r) => ok.push(r),
            Err(e) => errors.push((i + 1, e.to_string())),
        }
    }
    (ok, errors)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, body: &str) {
        fs::write(dir.join(name), body).unwrap();
    }

    #[test]
    fn round_trip_is_byte_stable() {
        let corpus = crate::synth::bundled_corpus();
        let dir = tempfile::tempdir().unwrap();
        let text = export_jsonl(&corpus);
        write(dir.path(), "all.jsonl", &text);
        let (back, report) = ingest_dataset(dir.path(), Some(&IconLibrary::bundled())).unwrap();
        assert_eq!(back, corpus);
        assert_eq!(export_jsonl(&back), text);
        assert_eq!(report.accepted, 50);
        assert_eq!(report.per_split["train"], 30);
        assert!(report.violations.is_empty());
        assert_eq!(report.win_check.len(), 5);
    }

    #[test]
    fn violations_listed_and_threshold_enforced() {
        let mut corpus = crate::synth::bundled_corpus();
        corpus[0].rounds[0]
            .guesses
            .push(Guess::new(["too", "short"].iter().copied().take(1)));
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "a.jsonl", &export_jsonl(&corpus));
        write(dir.path(), "junk.json", "{not json");
        let (ok, report) = ingest_dataset(dir.path(), None).unwrap();
        assert_eq!(ok.len(), 49);
        assert!(report
            .violations
            .iter()
            .any(|(_, m)| m.contains("1 words for a")));
        assert_eq!(report.unparseable.len(), 1);

        for g in corpus.iter_mut().take(4) {
            g.elapsed_seconds = -1.0;
        }
        write(dir.path(), "a.jsonl", &export_jsonl(&corpus));
        assert!(matches!(
            ingest_dataset(dir.path(), None),
            Err(ServerError::TooManyViolations { .. })
        ));
    }

    #[test]
    fn flat_layout_converts() {
        let line = r#"{"id":"f1","split":"ood-dev","phrase":["a","zebra","runs"],"stopwords":[true,false,false],
            "oov":[false,true,false],"drawings":[[{"name":"horse","x":0.2,"y":0.5}],[{"name":"horse","x":1.3,"y":0.5,"rotation":-90}]],
            "guesses":[[["a","horse","runs"]],[["a","zebra","runs"]]],"won":true,"seconds":80.5}"#
            .replace('\n', "");
        let (recs, errs) = convert_flat_jsonl(&format!("{line}\n{{\"id\":1}}\n"));
        assert_eq!(errs.len(), 1);
        let r = &recs[0];
        assert_eq!(
            (r.split, r.rounds.len(), r.outcome),
            (Split::OodValid, 2, Outcome::Won)
        );
        assert!(r.violations(None).is_empty());
        assert_eq!(r.rounds[1].drawing.placements[0].x, 1.0);
        assert_eq!(r.rounds[1].drawing.placements[0].rotation, 270.0);
        assert_eq!(
            r.rounds[0].guesses[0].correct,
            Some(vec![true, false, true])
        );
        assert!(r.phrase.words()[1].is_oov);
    }
}
