//! Phrase-shortening data augmentation.

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use super::alignment::{align_game, AlignmentModel};
use crate::domain::{normalize_word, Drawing, GameRecord, Guess, Outcome, Round};

#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub record: GameRecord,
    /// Phrase positions removed from the source record; empty on passthrough.
    pub removed: Vec<usize>,
    /// No removal was possible; `record` is the input unchanged.
    pub passthrough: bool,
}

/// Candidate spans: each content word alone, and each content word together
/// with the stopwords directly in front of it ("in the park").
fn spans(record: &GameRecord) -> Vec<Vec<usize>> {
    let words = record.phrase.words();
    let mut out = Vec::new();
    for c in record.phrase.content_indices() {
        out.push(vec![c]);
        let mut start = c;
        while start > 0 && words[start - 1].is_stopword {
            start -= 1;
        }
        if start < c {
            out.push((start..=c).collect());
        }
    }
    out
}

fn remove_span(
    record: &GameRecord,
    span: &[usize],
    assignment: &[Vec<Option<usize>>],
) -> Option<GameRecord> {
    let phrase = record.phrase.without(span).ok()?;
    let mut rounds = Vec::with_capacity(record.rounds.len());
    for (r, round) in record.rounds.iter().enumerate() {
        let placements: Vec<_> = round
            .drawing
            .placements
            .iter()
            .zip(&assignment[r])
            .filter(|(_, a)| !a.is_some_and(|pos| span.contains(&pos)))
            .map(|(p, _)| p.clone())
            .collect();
        if placements.is_empty() {
            return None;
        }
        let keep = |i: &usize| !span.contains(i);
        let guesses = round
            .guesses
            .iter()
            .map(|g| Guess {
                words: g
                    .words
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| keep(i))
                    .map(|(_, w)| w.clone())
                    .collect(),
                correct: g.correct.as_ref().map(|c| {
                    c.iter()
                        .enumerate()
                        .filter(|(i, _)| keep(i))
                        .map(|(_, &b)| b)
                        .collect()
                }),
            })
            .collect();
        rounds.push(Round {
            drawing: Drawing::new(placements, round.drawing.round_index),
            guesses,
        });
    }
    let solved = rounds
        .iter()
        .flat_map(|r| &r.guesses)
        .last()
        .is_some_and(|g: &Guess| {
            g.words.len() == phrase.len()
                && g.words
                    .iter()
                    .zip(phrase.words())
                    .all(|(a, w)| normalize_word(a) == normalize_word(&w.text))
        });
    Some(GameRecord {
        game_id: format!("{}~aug{}", record.game_id, span[0]),
        split: record.split,
        phrase,
        rounds,
        outcome: if solved {
            Outcome::Won
        } else {
            Outcome::LostTimeout
        },
        elapsed_seconds: record.elapsed_seconds,
        players: record.players.clone(),
    })
}

/// Removes one randomly chosen word or constituent from the phrase, together
/// with every icon aligned to it. Spans whose removal would leave a drawing
/// empty (or the phrase without content words) are skipped; when none is
/// left the record passes through unchanged and flagged.
pub fn augment(record: &GameRecord, model: &AlignmentModel, rng: &mut dyn RngCore) -> Augmented {
    let assignment = align_game(model, record);
    let mut candidates = spans(record);
    candidates.shuffle(rng);
    // prefer single words and constituents about equally
    if rng.gen_bool(0.5) {
        candidates.sort_by_key(|s| s.len() > 1);
    }
    for span in candidates {
        if let Some(out) = remove_span(record, &span, &assignment) {
            return Augmented {
                record: out,
                removed: span,
                passthrough: false,
            };
        }
    }
    Augmented {
        record: record.clone(),
        removed: Vec::new(),
        passthrough: true,
    }
}
