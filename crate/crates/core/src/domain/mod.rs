//! Game types shared across the crate.
//!
//! Everything here is a plain value: operations take references and return new
//! values, so they can be called from any thread without coordination.

mod library;
mod record;
mod revision;
mod stopwords;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub use library::{Icon, IconLibrary, LibraryManifest};
pub use record::{game_outcome, GameOutcome, GameRecord, Outcome, Player, Players, Round, Split};
pub use revision::{classify_game_revision, classify_revision, GameRevision, Revision};
pub use stopwords::StopwordList;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("duplicate icon id `{0}`")]
    DuplicateIcon(String),
    #[error("arrow icon `{0}` is not in the library")]
    UnknownArrow(String),
    #[error("unknown icon id `{0}`")]
    UnknownIcon(String),
    #[error("invalid icon `{id}`: {reason}")]
    InvalidIcon { id: String, reason: String },
    #[error("invalid placement: {0}")]
    InvalidPlacement(String),
    #[error("invalid phrase: {0}")]
    InvalidPhrase(String),
    #[error("guess has {got} words but the phrase has {expected}")]
    GuessLength { expected: usize, got: usize },
    #[error("drawing has no icons")]
    EmptyDrawing,
}

/// Canonical comparison form of a word: NFC-normalised, trimmed and lowercased.
pub fn normalize_word(word: &str) -> String {
    word.trim().nfc().collect::<String>().to_lowercase()
}

/// One icon instance on the canvas.
///
/// Coordinates are normalised to the unit square; `rotation` is in degrees,
/// clockwise, and `flipped` is a horizontal mirror.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IconPlacement {
    #[serde(rename = "icon")]
    pub icon_id: String,
    pub x: f64,
    pub y: f64,
    pub scale: f64,
    pub rotation: f64,
    #[serde(default)]
    pub flipped: bool,
}

impl IconPlacement {
    pub fn new(
        icon_id: impl Into<String>,
        x: f64,
        y: f64,
        scale: f64,
        rotation: f64,
        flipped: bool,
    ) -> Result<Self, DomainError> {
        let p = Self {
            icon_id: icon_id.into(),
            x,
            y,
            scale,
            rotation,
            flipped,
        };
        p.validate()?;
        Ok(p)
    }

    /// A placement at default size, unrotated and unflipped.
    pub fn at(icon_id: impl Into<String>, x: f64, y: f64) -> Self {
        Self {
            icon_id: icon_id.into(),
            x,
            y,
            scale: 1.0,
            rotation: 0.0,
            flipped: false,
        }
    }

    /// Pulls a pose that overshot the canvas back inside the valid ranges.
    pub fn clamped(mut self) -> Self {
        self.x = clamp_unit(self.x);
        self.y = clamp_unit(self.y);
        if !(self.scale.is_finite() && self.scale > 0.0) {
            self.scale = 1.0;
        }
        self.rotation = if self.rotation.is_finite() {
            self.rotation.rem_euclid(360.0)
        } else {
            0.0
        };
        // rem_euclid can round up to exactly 360 for tiny negative inputs
        if self.rotation >= 360.0 {
            self.rotation = 0.0;
        }
        self
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        let bad = |what: &str| {
            Err(DomainError::InvalidPlacement(format!(
                "{what} out of range for `{}`",
                self.icon_id
            )))
        };
        if !(0.0..=1.0).contains(&self.x) {
            return bad("x");
        }
        if !(0.0..=1.0).contains(&self.y) {
            return bad("y");
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return bad("scale");
        }
        if !(0.0..360.0).contains(&self.rotation) {
            return bad("rotation");
        }
        Ok(())
    }
}

fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        0.5
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// The icons placed for one round, in creation order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Drawing {
    #[serde(rename = "icons")]
    pub placements: Vec<IconPlacement>,
    #[serde(default)]
    pub round_index: usize,
}

impl Drawing {
    pub fn new(placements: Vec<IconPlacement>, round_index: usize) -> Self {
        Self {
            placements,
            round_index,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    /// Icon ids with multiplicity.
    pub fn icon_bag(&self) -> std::collections::BTreeMap<&str, usize> {
        let mut bag = std::collections::BTreeMap::new();
        for p in &self.placements {
            *bag.entry(p.icon_id.as_str()).or_insert(0) += 1;
        }
        bag
    }

    /// Checks a drawing submitted for play: non-empty, valid poses, known icons.
    pub fn validate(&self, library: &IconLibrary) -> Result<(), DomainError> {
        if self.placements.is_empty() {
            return Err(DomainError::EmptyDrawing);
        }
        for p in &self.placements {
            p.validate()?;
            if !library.contains(&p.icon_id) {
                return Err(DomainError::UnknownIcon(p.icon_id.clone()));
            }
        }
        Ok(())
    }
}

/// A phrase word with its visibility flags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseWord {
    pub text: String,
    #[serde(rename = "stopword", default)]
    pub is_stopword: bool,
    #[serde(rename = "oov", default)]
    pub is_oov: bool,
    #[serde(default)]
    pub guessed: bool,
}

impl PhraseWord {
    pub fn content(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            is_stopword: false,
            is_oov: false,
            guessed: false,
        }
    }

    pub fn stopword(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            is_stopword: true,
            is_oov: false,
            guessed: false,
        }
    }

    /// Stopwords are always shown to the guesser; content words once guessed.
    pub fn is_revealed(&self) -> bool {
        self.is_stopword || self.guessed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PhraseWord>", into = "Vec<PhraseWord>")]
pub struct Phrase {
    words: Vec<PhraseWord>,
}

impl TryFrom<Vec<PhraseWord>> for Phrase {
    type Error = DomainError;

    fn try_from(words: Vec<PhraseWord>) -> Result<Self, Self::Error> {
        Phrase::new(words)
    }
}

impl From<Phrase> for Vec<PhraseWord> {
    fn from(p: Phrase) -> Self {
        p.words
    }
}

impl Phrase {
    pub fn new(words: Vec<PhraseWord>) -> Result<Self, DomainError> {
        if words.is_empty() {
            return Err(DomainError::InvalidPhrase("no words".into()));
        }
        for w in &words {
            if w.text.is_empty() || w.text.chars().any(char::is_whitespace) {
                return Err(DomainError::InvalidPhrase(format!("bad word `{}`", w.text)));
            }
        }
        if words.iter().all(|w| w.is_stopword) {
            return Err(DomainError::InvalidPhrase("no content word".into()));
        }
        Ok(Self { words })
    }

    /// Builds a fresh phrase from text, flagging stopwords from `stopwords`
    /// and out-of-vocabulary words with `is_oov`.
    pub fn from_text(
        text: &str,
        stopwords: &StopwordList,
        is_oov: impl Fn(&str) -> bool,
    ) -> Result<Self, DomainError> {
        let words = text
            .split_whitespace()
            .map(|w| {
                let text = normalize_word(w);
                let is_stopword = stopwords.contains(&text);
                PhraseWord {
                    is_oov: !is_stopword && is_oov(&text),
                    text,
                    is_stopword,
                    guessed: false,
                }
            })
            .collect();
        Phrase::new(words)
    }

    pub fn words(&self) -> &[PhraseWord] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn text(&self) -> String {
        self.words
            .iter()
            .map(|w| w.text.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn content_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.words
            .iter()
            .enumerate()
            .filter(|(_, w)| !w.is_stopword)
            .map(|(i, _)| i)
    }

    pub fn content_count(&self) -> usize {
        self.words.iter().filter(|w| !w.is_stopword).count()
    }

    pub fn revealed(&self) -> Vec<bool> {
        self.words.iter().map(PhraseWord::is_revealed).collect()
    }

    /// Every word is visible to the guesser.
    pub fn is_complete(&self) -> bool {
        self.words.iter().all(PhraseWord::is_revealed)
    }

    /// Content words never guessed.
    pub fn missed_content_words(&self) -> usize {
        self.words.iter().filter(|w| !w.is_revealed()).count()
    }

    /// Same words with every `guessed` flag cleared.
    pub fn reset(&self) -> Self {
        let mut p = self.clone();
        for w in &mut p.words {
            w.guessed = false;
        }
        p
    }

    /// Sets `guessed` on the given positions. Flags are only ever raised.
    pub fn with_guessed(&self, positions: impl IntoIterator<Item = usize>) -> Self {
        let mut p = self.clone();
        for i in positions {
            if let Some(w) = p.words.get_mut(i) {
                w.guessed = true;
            }
        }
        p
    }

    /// Removes the words at `positions`; fails if no content word would remain.
    pub fn without(&self, positions: &[usize]) -> Result<Self, DomainError> {
        let words = self
            .words
            .iter()
            .enumerate()
            .filter(|(i, _)| !positions.contains(i))
            .map(|(_, w)| w.clone())
            .collect();
        Phrase::new(words)
    }
}

/// A guess: one word per phrase position, plus the per-position verdicts once
/// it has been evaluated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guess {
    pub words: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<Vec<bool>>,
}

impl Guess {
    pub fn new<S: Into<String>>(words: impl IntoIterator<Item = S>) -> Self {
        Self {
            words: words.into_iter().map(Into::into).collect(),
            correct: None,
        }
    }

    pub fn is_all_correct(&self) -> bool {
        self.correct.as_ref().is_some_and(|c| c.iter().all(|&b| b))
    }
}

/// Scores `guess` against `phrase`.
///
/// Returns the guess with verdicts filled in and the phrase with the matched
/// positions marked as guessed. A position is correct iff the words compare
/// equal under [`normalize_word`].
pub fn evaluate_guess(phrase: &Phrase, guess: &Guess) -> Result<(Phrase, Guess), DomainError> {
    if guess.words.len() != phrase.len() {
        return Err(DomainError::GuessLength {
            expected: phrase.len(),
            got: guess.words.len(),
        });
    }
    let correct: Vec<bool> = phrase
        .words()
        .iter()
        .zip(&guess.words)
        .map(|(w, g)| normalize_word(&w.text) == normalize_word(g))
        .collect();
    let updated = phrase.with_guessed(
        correct
            .iter()
            .enumerate()
            .filter(|(_, &c)| c)
            .map(|(i, _)| i),
    );
    Ok((
        updated,
        Guess {
            words: guess.words.clone(),
            correct: Some(correct),
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Turn {
    Drawer,
    Guesser,
}

/// Full game state as the drawer sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    pub phrase: Phrase,
    pub drawings: Vec<Drawing>,
    /// Guesses made for each drawing, aligned with `drawings`.
    pub guesses: Vec<Vec<Guess>>,
    pub turn: Turn,
    pub remaining_seconds: f64,
}

impl GameState {
    pub fn new(phrase: Phrase) -> Self {
        Self {
            phrase,
            drawings: Vec::new(),
            guesses: Vec::new(),
            turn: Turn::Drawer,
            remaining_seconds: 240.0,
        }
    }

    pub fn latest_drawing(&self) -> Option<&Drawing> {
        self.drawings.last()
    }

    pub fn all_guesses(&self) -> impl Iterator<Item = &Guess> {
        self.guesses.iter().flatten()
    }

    /// The restricted view given to the guesser: unguessed content words are
    /// replaced by [`Slot::Hidden`].
    pub fn guesser_view(&self) -> GuesserView {
        GuesserView {
            slots: Slot::from_phrase(&self.phrase),
            drawings: self.drawings.clone(),
            guesses: self.guesses.clone(),
            turn: self.turn,
            remaining_seconds: self.remaining_seconds,
        }
    }
}

/// One phrase position as the guesser sees it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    Known(String),
    Hidden,
}

impl Slot {
    pub fn from_phrase(phrase: &Phrase) -> Vec<Slot> {
        phrase
            .words()
            .iter()
            .map(|w| {
                if w.is_revealed() {
                    Slot::Known(w.text.clone())
                } else {
                    Slot::Hidden
                }
            })
            .collect()
    }

    pub fn known(&self) -> Option<&str> {
        match self {
            Slot::Known(w) => Some(w),
            Slot::Hidden => None,
        }
    }
}

/// Guesser-side game state. Holds no unguessed content-word text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuesserView {
    pub slots: Vec<Slot>,
    pub drawings: Vec<Drawing>,
    pub guesses: Vec<Vec<Guess>>,
    pub turn: Turn,
    pub remaining_seconds: f64,
}

impl GuesserView {
    pub fn latest_drawing(&self) -> Option<&Drawing> {
        self.drawings.last()
    }

    pub fn all_guesses(&self) -> impl Iterator<Item = &Guess> {
        self.guesses.iter().flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phrase(spec: &[(&str, bool)]) -> Phrase {
        Phrase::new(
            spec.iter()
                .map(|&(t, stop)| {
                    if stop {
                        PhraseWord::stopword(t)
                    } else {
                        PhraseWord::content(t)
                    }
                })
                .collect(),
        )
        .unwrap()
    }

    fn dog_barking() -> Phrase {
        phrase(&[("a", true), ("dog", false), ("barking", false)])
    }

    #[test]
    fn exact_guess_wins() {
        let (p, g) = evaluate_guess(&dog_barking(), &Guess::new(["a", "dog", "barking"])).unwrap();
        assert_eq!(g.correct, Some(vec![true, true, true]));
        assert!(p.is_complete());
    }

    #[test]
    fn single_mismatch() {
        let (p, g) = evaluate_guess(&dog_barking(), &Guess::new(["a", "cat", "barking"])).unwrap();
        assert_eq!(g.correct, Some(vec![true, false, true]));
        assert!(!p.is_complete());
        assert_eq!(p.missed_content_words(), 1);
    }

    #[test]
    fn matching_ignores_case() {
        let p = phrase(&[("a", true), ("Dog", false), ("barking", false)]);
        let (_, g) = evaluate_guess(&p, &Guess::new(["a", "dog", "Barking"])).unwrap();
        assert!(g.is_all_correct());
    }

    #[test]
    fn matching_normalizes_unicode_and_whitespace() {
        let p = phrase(&[("caf\u{e9}", false)]);
        let (_, g) = evaluate_guess(&p, &Guess::new([" CAFE\u{301} "])).unwrap();
        assert!(g.is_all_correct());
    }

    #[test]
    fn length_mismatch_rejected() {
        let err = evaluate_guess(&dog_barking(), &Guess::new(["dog", "barking"])).unwrap_err();
        assert_eq!(
            err,
            DomainError::GuessLength {
                expected: 3,
                got: 2
            }
        );
    }

    #[test]
    fn guessed_flags_are_monotone() {
        let (p1, _) = evaluate_guess(&dog_barking(), &Guess::new(["a", "dog", "x"])).unwrap();
        let (p2, _) = evaluate_guess(&p1, &Guess::new(["a", "cat", "barking"])).unwrap();
        assert!(p2.words()[1].guessed);
        assert!(p2.is_complete());
    }

    #[test]
    fn evaluation_is_idempotent() {
        let g = Guess::new(["a", "dog", "meowing"]);
        let (p1, g1) = evaluate_guess(&dog_barking(), &g).unwrap();
        let (p2, g2) = evaluate_guess(&p1, &g).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(g1, g2);
    }

    #[test]
    fn phrase_needs_a_content_word() {
        assert!(Phrase::new(vec![PhraseWord::stopword("the")]).is_err());
        assert!(Phrase::new(vec![PhraseWord::content("two words")]).is_err());
        assert!(Phrase::new(vec![]).is_err());
    }

    #[test]
    fn guesser_view_hides_unguessed_content() {
        let state = GameState::new(dog_barking().with_guessed([2]));
        let view = state.guesser_view();
        assert_eq!(
            view.slots,
            vec![
                Slot::Known("a".into()),
                Slot::Hidden,
                Slot::Known("barking".into())
            ]
        );
        let json = serde_json::to_string(&view).unwrap();
        assert!(!json.contains("dog"));
    }

    #[test]
    fn clamping_pulls_pose_into_range() {
        let p = IconPlacement {
            icon_id: "dog".into(),
            x: 1.3,
            y: -0.2,
            scale: 2.0,
            rotation: -90.0,
            flipped: false,
        }
        .clamped();
        assert_eq!((p.x, p.y, p.rotation), (1.0, 0.0, 270.0));
        p.validate().unwrap();
    }

    #[test]
    fn from_text_flags_stopwords_and_oov() {
        let stop = StopwordList::default();
        let p =
            Phrase::from_text("A dog  juggling in the park", &stop, |w| w == "juggling").unwrap();
        assert_eq!(p.text(), "a dog juggling in the park");
        let flags: Vec<_> = p
            .words()
            .iter()
            .map(|w| (w.is_stopword, w.is_oov))
            .collect();
        assert_eq!(
            flags,
            vec![
                (true, false),
                (false, false),
                (false, true),
                (true, false),
                (true, false),
                (false, false)
            ]
        );
    }
}
