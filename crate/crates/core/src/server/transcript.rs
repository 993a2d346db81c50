//! Turn-by-turn text rendering of a recorded game.

use std::fmt::Write;

use crate::domain::{evaluate_guess, GameRecord, IconLibrary, Outcome, Player};
use crate::encoder::describe_drawing;

fn who(p: &Player) -> String {
    if p.ai {
        format!("{} (ai)", p.id)
    } else {
        p.id.clone()
    }
}

/// Renders `record` as a transcript. Each guess shows per-word marks
/// (`+` correct, `.` wrong) and the phrase as the guesser then saw it.
/// Drawings are described with the state encoder when the library knows
/// every icon, else listed by id.
pub fn render_transcript(record: &GameRecord, library: Option<&IconLibrary>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "game {} [{}]", record.game_id, record.split.as_str());
    let _ = writeln!(out, "phrase: {}", record.phrase.text());
    let _ = writeln!(
        out,
        "drawer: {}   guesser: {}",
        who(&record.players.drawer),
        who(&record.players.guesser)
    );
    let mut phrase = record.phrase.reset();
    for (r, round) in record.rounds.iter().enumerate() {
        let described = library.and_then(|l| describe_drawing(&round.drawing, l).ok());
        let icons = described.unwrap_or_else(|| {
            round
                .drawing
                .placements
                .iter()
                .map(|p| p.icon_id.as_str())
                .collect::<Vec<_>>()
                .join(", ")
        });
        let _ = writeln!(
            out,
            "round {}: drawer draws {} icon(s): {icons}",
            r + 1,
            round.drawing.len()
        );
        if round.guesses.is_empty() {
            let _ = writeln!(out, "  (no guesses)");
        }
        for (k, g) in round.guesses.iter().enumerate() {
            match evaluate_guess(&phrase, g) {
                Ok((next, scored)) => {
                    let marks: String = scored
                        .correct
                        .iter()
                        .flatten()
                        .map(|&c| if c { '+' } else { '.' })
                        .collect();
                    let seen: Vec<String> = next
                        .words()
                        .iter()
                        .map(|w| {
                            if w.is_revealed() {
                                w.text.clone()
                            } else {
                                "_".repeat(w.text.chars().count().max(1))
                            }
                        })
                        .collect();
                    let _ = writeln!(
                        out,
                        "  guess {}: {}  [{marks}]  -> {}",
                        k + 1,
                        g.words.join(" "),
                        seen.join(" ")
                    );
                    phrase = next;
                }
                Err(e) => {
                    let _ = writeln!(
                        out,
                        "  guess {}: {}  (invalid: {e})",
                        k + 1,
                        g.words.join(" ")
                    );
                }
            }
        }
    }
    let result = match record.outcome {
        Outcome::Won => "won",
        Outcome::LostTimeout => "lost (time out)",
    };
    let _ = writeln!(
        out,
        "outcome: {result} after {} round(s), {:.1} s",
        record.rounds.len(),
        record.elapsed_seconds
    );
    out
}
