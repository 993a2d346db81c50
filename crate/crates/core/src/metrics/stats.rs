use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::domain::{
    classify_game_revision, game_outcome, normalize_word, GameRecord, GameRevision, Outcome, Split,
};

/// Shares (percent) of multi-drawing games by revision strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionShares {
    pub games: usize,
    pub edit: f64,
    pub add: f64,
    pub redraw: f64,
}

/// One split's summary. Percentages are in [0, 100]; `None` when the split
/// is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStats {
    pub split: Split,
    pub games: usize,
    pub phrases: usize,
    /// Every content word guessed, from replaying the guesses.
    pub win_pct: Option<f64>,
    /// Outcome flag as recorded in the data.
    pub recorded_win_pct: Option<f64>,
    pub off_by_one_pct: Option<f64>,
    pub rounds_ge2_pct: Option<f64>,
    pub rounds_ge3_pct: Option<f64>,
    pub rounds_ge4_pct: Option<f64>,
    pub revisions: Option<RevisionShares>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total_games: usize,
    /// All five splits in fixed order, empty ones included.
    pub splits: Vec<SplitStats>,
}

impl DatasetStats {
    pub fn get(&self, split: Split) -> &SplitStats {
        self.splits
            .iter()
            .find(|s| s.split == split)
            .expect("all splits present")
    }
}

fn pct(n: usize, d: usize) -> Option<f64> {
    (d > 0).then(|| 100.0 * n as f64 / d as f64)
}

fn split_stats(split: Split, games: &[&GameRecord]) -> SplitStats {
    let n = games.len();
    let phrases: BTreeSet<Vec<String>> = games
        .iter()
        .map(|g| {
            g.phrase
                .words()
                .iter()
                .map(|w| normalize_word(&w.text))
                .collect()
        })
        .collect();
    let outcomes: Vec<_> = games.iter().map(|g| game_outcome(g)).collect();
    let rounds = |k: usize| games.iter().filter(|g| g.rounds.len() >= k).count();
    let labels: Vec<GameRevision> = games
        .iter()
        .map(|g| classify_game_revision(g))
        .filter(|l| *l != GameRevision::SingleDrawing)
        .collect();
    let share = |l: GameRevision| {
        pct(labels.iter().filter(|x| **x == l).count(), labels.len()).unwrap_or(0.0)
    };
    SplitStats {
        split,
        games: n,
        phrases: phrases.len(),
        win_pct: pct(outcomes.iter().filter(|o| o.won).count(), n),
        recorded_win_pct: pct(
            games.iter().filter(|g| g.outcome == Outcome::Won).count(),
            n,
        ),
        off_by_one_pct: pct(outcomes.iter().filter(|o| o.off_by_one).count(), n),
        rounds_ge2_pct: pct(rounds(2), n),
        rounds_ge3_pct: pct(rounds(3), n),
        rounds_ge4_pct: pct(rounds(4), n),
        revisions: (!labels.is_empty()).then(|| RevisionShares {
            games: labels.len(),
            edit: share(GameRevision::Edit),
            add: share(GameRevision::Add),
            redraw: share(GameRevision::Redraw),
        }),
    }
}

/// Per-split game counts, win and near-miss rates, round-count shares and
/// revision-strategy mix.
pub fn dataset_stats(corpus: &[GameRecord]) -> DatasetStats {
    DatasetStats {
        total_games: corpus.len(),
        splits: Split::ALL
            .iter()
            .map(|&s| {
                split_stats(
                    s,
                    &corpus.iter().filter(|g| g.split == s).collect::<Vec<_>>(),
                )
            })
            .collect(),
    }
}

/// Published per-split figures: counts in thousands at the printed
/// precision, rates in percent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRow {
    pub split: Split,
    pub games_k: f64,
    pub phrases_k: f64,
    /// Decimal places the counts were printed with.
    pub count_digits: i32,
    pub win: f64,
    pub off_by_one: f64,
}

pub const REFERENCE_TABLE: [ReferenceRow; 5] = [
    ReferenceRow {
        split: Split::Train,
        games_k: 56.0,
        phrases_k: 34.0,
        count_digits: 0,
        win: 71.1,
        off_by_one: 83.9,
    },
    ReferenceRow {
        split: Split::IndValid,
        games_k: 5.1,
        phrases_k: 3.1,
        count_digits: 1,
        win: 75.1,
        off_by_one: 87.5,
    },
    ReferenceRow {
        split: Split::IndTest,
        games_k: 4.7,
        phrases_k: 2.9,
        count_digits: 1,
        win: 76.8,
        off_by_one: 88.3,
    },
    ReferenceRow {
        split: Split::OodValid,
        games_k: 1.0,
        phrases_k: 0.8,
        count_digits: 1,
        win: 54.4,
        off_by_one: 75.8,
    },
    ReferenceRow {
        split: Split::OodTest,
        games_k: 3.0,
        phrases_k: 2.3,
        count_digits: 1,
        win: 54.1,
        off_by_one: 75.5,
    },
];

/// Published round-count shares (percent) for the dev splits.
pub const REFERENCE_ROUNDS: [(Split, [f64; 3]); 2] = [
    (Split::IndValid, [33.3, 9.4, 1.9]),
    (Split::OodValid, [65.6, 23.8, 4.5]),
];
pub const RATE_TOLERANCE: f64 = 0.1;
pub const ROUNDS_TOLERANCE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceCheck {
    pub name: String,
    pub expected: f64,
    pub actual: Option<f64>,
    pub pass: bool,
}

fn round_to(v: f64, digits: i32) -> f64 {
    let m = 10f64.powi(digits);
    (v * m).round() / m
}

/// Compares stats of the full released dataset against the published
/// tables. Counts must round to the printed value; rates must lie within
/// the pinned tolerances.
pub fn reference_checks(stats: &DatasetStats) -> Vec<ReferenceCheck> {
    let mut out = Vec::new();
    let mut push = |name: String, expected: f64, actual: Option<f64>, tol: f64| {
        let pass = actual.is_some_and(|a| (a - expected).abs() <= tol + 1e-9);
        out.push(ReferenceCheck {
            name,
            expected,
            actual,
            pass,
        });
    };
    for r in REFERENCE_TABLE {
        let s = stats.get(r.split);
        let k = |n: usize| round_to(n as f64 / 1000.0, r.count_digits);
        let name = r.split.as_str();
        push(
            format!("{name} games (k)"),
            r.games_k,
            (s.games > 0).then(|| k(s.games)),
            0.0,
        );
        push(
            format!("{name} phrases (k)"),
            r.phrases_k,
            (s.games > 0).then(|| k(s.phrases)),
            0.0,
        );
        push(format!("{name} win %"), r.win, s.win_pct, RATE_TOLERANCE);
        push(
            format!("{name} off-by-one %"),
            r.off_by_one,
            s.off_by_one_pct,
            RATE_TOLERANCE,
        );
    }
    for (split, [ge2, ge3, ge4]) in REFERENCE_ROUNDS {
        let s = stats.get(split);
        let name = split.as_str();
        push(
            format!("{name} >=2 rounds %"),
            ge2,
            s.rounds_ge2_pct,
            ROUNDS_TOLERANCE,
        );
        push(
            format!("{name} >=3 rounds %"),
            ge3,
            s.rounds_ge3_pct,
            ROUNDS_TOLERANCE,
        );
        push(
            format!("{name} >=4 rounds %"),
            ge4,
            s.rounds_ge4_pct,
            ROUNDS_TOLERANCE,
        );
    }
    out
}

/// Golden-file layout: `{"total_games": n, "splits": {"train": {...}, ...}}`
/// with the same per-split fields as [`SplitStats`].
pub fn golden_value(stats: &DatasetStats) -> serde_json::Value {
    let mut splits = serde_json::Map::new();
    for s in &stats.splits {
        let mut v = serde_json::to_value(s).expect("stats serialize");
        v.as_object_mut().expect("object").remove("split");
        splits.insert(s.split.as_str().to_string(), v);
    }
    serde_json::json!({ "total_games": stats.total_games, "splits": splits })
}

fn diff(path: &str, a: &serde_json::Value, b: &serde_json::Value, tol: f64, out: &mut Vec<String>) {
    use serde_json::Value;
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (
                x.as_f64().unwrap_or(f64::NAN),
                y.as_f64().unwrap_or(f64::NAN),
            );
            if !((x - y).abs() <= tol) {
                out.push(format!("{path}: {x} vs golden {y}"));
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            let keys: BTreeSet<&String> = x.keys().chain(y.keys()).collect();
            for k in keys {
                let sub = format!("{path}/{k}");
                match (x.get(k), y.get(k)) {
                    (Some(p), Some(q)) => diff(&sub, p, q, tol, out),
                    _ => out.push(format!("{sub}: present on one side only")),
                }
            }
        }
        _ if a == b => {}
        _ => out.push(format!("{path}: {a} vs golden {b}")),
    }
}

/// Every field where `stats` and the golden JSON disagree by more than `tol`.
pub fn golden_mismatches(
    stats: &DatasetStats,
    golden: &str,
    tol: f64,
) -> Result<Vec<String>, serde_json::Error> {
    let golden: serde_json::Value = serde_json::from_str(golden)?;
    let mut out = Vec::new();
    diff("", &golden_value(stats), &golden, tol, &mut out);
    Ok(out)
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.1}"))
}

impl fmt::Display for DatasetStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<12}{:>8}{:>9}{:>8}{:>12}",
            "split", "games", "phrases", "win", "off-by-one"
        )?;
        for s in &self.splits {
            writeln!(
                f,
                "{:<12}{:>8}{:>9}{:>8}{:>12}",
                s.split.as_str(),
                s.games,
                s.phrases,
                cell(s.win_pct),
                cell(s.off_by_one_pct)
            )?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "{:<12}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}",
            "split", ">=2", ">=3", ">=4", "edit", "add", "redraw"
        )?;
        for s in &self.splits {
            let r = s.revisions.as_ref();
            writeln!(
                f,
                "{:<12}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}",
                s.split.as_str(),
                cell(s.rounds_ge2_pct),
                cell(s.rounds_ge3_pct),
                cell(s.rounds_ge4_pct),
                cell(r.map(|r| r.edit)),
                cell(r.map(|r| r.add)),
                cell(r.map(|r| r.redraw))
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tests::{game, phrase};

    #[test]
    fn empty_corpus_is_flagged_not_zero() {
        let s = dataset_stats(&[]);
        assert_eq!(s.splits.len(), 5);
        assert!(s
            .splits
            .iter()
            .all(|x| x.games == 0 && x.win_pct.is_none() && x.revisions.is_none()));
        assert!(s.to_string().contains("n/a"));
    }

    #[test]
    fn counts_and_rates() {
        let p = || phrase(&[("dog", false, false), ("runs", false, false)]);
        let corpus = vec![
            game("a", p(), vec![(vec!["dog"], vec![vec!["dog", "runs"]])]),
            game(
                "b",
                p(),
                vec![
                    (vec!["dog"], vec![vec!["dog", "x"]]),
                    (vec!["dog", "arrow"], vec![]),
                ],
            ),
            game(
                "c",
                phrase(&[("cat", false, false)]),
                vec![
                    (vec!["cat"], vec![]),
                    (vec!["sun"], vec![]),
                    (vec!["sun"], vec![]),
                ],
            ),
        ];
        let s = dataset_stats(&corpus);
        let t = s.get(Split::Train);
        assert_eq!((t.games, t.phrases), (3, 2));
        assert!((t.win_pct.unwrap() - 100.0 / 3.0).abs() < 1e-9);
        // game c misses its only word: still off by one
        assert_eq!(t.off_by_one_pct, Some(100.0));
        assert!((t.rounds_ge2_pct.unwrap() - 200.0 / 3.0).abs() < 1e-9);
        assert!((t.rounds_ge3_pct.unwrap() - 100.0 / 3.0).abs() < 1e-9);
        assert_eq!(t.rounds_ge4_pct, Some(0.0));
        let r = t.revisions.as_ref().unwrap();
        assert_eq!((r.games, r.add, r.redraw), (2, 50.0, 50.0));
        assert_eq!(s.get(Split::OodTest).games, 0);
    }

    #[test]
    fn bundled_corpus_matches_independent_golden() {
        let s = dataset_stats(&crate::synth::bundled_corpus());
        let m = golden_mismatches(&s, crate::synth::BUNDLED_GOLDEN_JSON, 1e-9).unwrap();
        assert!(m.is_empty(), "{m:?}");
        let mut broken = golden_value(&s);
        broken["splits"]["train"]["games"] = serde_json::json!(29);
        assert_eq!(
            golden_mismatches(&s, &broken.to_string(), 1e-9)
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn reference_checks_round_counts() {
        // 56,400 games rounds to 56k; 71.15 % is within 0.1 of 71.1
        let mut s = dataset_stats(&[]);
        let t = s
            .splits
            .iter_mut()
            .find(|x| x.split == Split::Train)
            .unwrap();
        t.games = 56_400;
        t.phrases = 34_499;
        t.win_pct = Some(71.15);
        t.off_by_one_pct = Some(84.2);
        let checks = reference_checks(&s);
        let pass = |n: &str| checks.iter().find(|c| c.name == n).unwrap().pass;
        assert!(pass("train games (k)") && pass("train phrases (k)") && pass("train win %"));
        assert!(!pass("train off-by-one %"));
        assert!(!pass("ind_valid games (k)"));
        assert_eq!(checks.len(), 26);
    }
}
