use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{evaluate_guess, normalize_word, Drawing, Guess, IconLibrary, Phrase};

/// Dataset partition a game belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    IndValid,
    IndTest,
    OodValid,
    OodTest,
}

impl Split {
    pub const ALL: [Split; 5] = [
        Split::Train,
        Split::IndValid,
        Split::IndTest,
        Split::OodValid,
        Split::OodTest,
    ];

    pub fn is_ood(self) -> bool {
        matches!(self, Split::OodValid | Split::OodTest)
    }

    /// Coarse tag: `train`, `ind` or `ood`.
    pub fn family(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::IndValid | Split::IndTest => "ind",
            Split::OodValid | Split::OodTest => "ood",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::IndValid => "ind_valid",
            Split::IndTest => "ind_test",
            Split::OodValid => "ood_valid",
            Split::OodTest => "ood_test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "train" => Ok(Split::Train),
            "ind_valid" | "ind_dev" | "ind_val" => Ok(Split::IndValid),
            "ind_test" => Ok(Split::IndTest),
            "ood_valid" | "ood_dev" | "ood_val" => Ok(Split::OodValid),
            "ood_test" => Ok(Split::OodTest),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Won,
    LostTimeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Player {
    pub id: String,
    #[serde(default)]
    pub ai: bool,
}

impl Player {
    pub fn human(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            ai: false,
        }
    }

    pub fn agent(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            ai: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Players {
    pub drawer: Player,
    pub guesser: Player,
}

/// One drawing and the guesses made against it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Round {
    pub drawing: Drawing,
    #[serde(default)]
    pub guesses: Vec<Guess>,
}

/// A complete game transcript; the persistence and dataset format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game_id: String,
    pub split: Split,
    pub phrase: Phrase,
    pub rounds: Vec<Round>,
    pub outcome: Outcome,
    pub elapsed_seconds: f64,
    pub players: Players,
}

impl GameRecord {
    pub fn drawings(&self) -> impl Iterator<Item = &Drawing> {
        self.rounds.iter().map(|r| &r.drawing)
    }

    pub fn guess_count(&self) -> usize {
        self.rounds.iter().map(|r| r.guesses.len()).sum()
    }

    /// Phrase with `guessed` flags recomputed by replaying every guess.
    pub fn replayed_phrase(&self) -> Phrase {
        let mut phrase = self.phrase.reset();
        for g in self.rounds.iter().flat_map(|r| &r.guesses) {
            if let Ok((p, _)) = evaluate_guess(&phrase, g) {
                phrase = p;
            }
        }
        phrase
    }

    /// Lists every schema violation; empty means the record is valid.
    pub fn violations(&self, library: Option<&IconLibrary>) -> Vec<String> {
        let mut out = Vec::new();
        if self.game_id.trim().is_empty() {
            out.push("empty game_id".to_string());
        }
        if !(self.elapsed_seconds.is_finite() && self.elapsed_seconds >= 0.0) {
            out.push(format!(
                "elapsed_seconds {} is not a non-negative number",
                self.elapsed_seconds
            ));
        }
        if self.rounds.is_empty() && self.outcome == Outcome::Won {
            out.push("won game has no rounds".to_string());
        }
        for (r, round) in self.rounds.iter().enumerate() {
            if round.drawing.round_index != r {
                out.push(format!(
                    "round {r}: round_index is {}",
                    round.drawing.round_index
                ));
            }
            if round.drawing.is_empty() {
                out.push(format!("round {r}: empty drawing"));
            }
            for p in &round.drawing.placements {
                if let Err(e) = p.validate() {
                    out.push(format!("round {r}: {e}"));
                }
                if let Some(lib) = library {
                    if !lib.contains(&p.icon_id) {
                        out.push(format!("round {r}: unknown icon `{}`", p.icon_id));
                    }
                }
            }
            for (g, guess) in round.guesses.iter().enumerate() {
                if guess.words.len() != self.phrase.len() {
                    out.push(format!(
                        "round {r} guess {g}: {} words for a {}-word phrase",
                        guess.words.len(),
                        self.phrase.len()
                    ));
                }
            }
        }
        if self.outcome == Outcome::Won {
            let last = self.rounds.iter().flat_map(|r| &r.guesses).last();
            let all_correct = last.is_some_and(|g| {
                g.words.len() == self.phrase.len()
                    && g.words
                        .iter()
                        .zip(self.phrase.words())
                        .all(|(a, w)| normalize_word(a) == normalize_word(&w.text))
            });
            if !all_correct {
                out.push("outcome is won but the final guess is not the phrase".to_string());
            }
        }
        out
    }
}

/// Win/near-miss summary of a finished game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub won: bool,
    pub off_by_one: bool,
    pub missed_words: usize,
}

/// Derives the outcome from the guesses actually made: a word counts once any
/// guess matched it (or the record already flags it guessed).
pub fn game_outcome(record: &GameRecord) -> GameOutcome {
    let replayed = record.replayed_phrase();
    let missed = record
        .phrase
        .words()
        .iter()
        .zip(replayed.words())
        .filter(|(stored, replay)| !(stored.is_revealed() || replay.is_revealed()))
        .count();
    GameOutcome {
        won: missed == 0,
        off_by_one: missed <= 1,
        missed_words: missed,
    }
}
