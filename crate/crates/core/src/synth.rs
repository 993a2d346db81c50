//! Synthetic games over a planted icon↔word mapping.
//!
//! Every content word has exactly one icon that depicts it, so a drawer that
//! learns the mapping makes every game winnable. Simulated humans know a
//! drawn word with fixed probability, revise drawings by edit/add/redraw and
//! run against the 240 s clock.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{
    evaluate_guess, Drawing, GameRecord, Guess, IconLibrary, IconPlacement, Outcome, Phrase,
    PhraseWord, Player, Players, Round, Split,
};

const GAME_SECONDS: f64 = 240.0;
const MAX_ROUNDS: usize = 5;

const TEMPLATES: &[&[&str]] = &[
    &["C", "C"],
    &["C", "the", "C"],
    &["a", "C", "with", "a", "C"],
    &["C", "in", "the", "C"],
    &["C", "and", "C", "on", "the", "C"],
    &["the", "C", "C", "the", "C"],
];

#[derive(Debug, Clone)]
pub struct PlantedWorld {
    /// Content words usable in train/in-domain phrases.
    pub seen: Vec<String>,
    /// Held-out words that only occur in out-of-domain phrases.
    pub held_out: Vec<String>,
    /// The one icon for each word.
    pub icon_of: BTreeMap<String, String>,
    arrow: Option<String>,
}

impl PlantedWorld {
    /// Words are the single-token, non-arrow icon ids; every fifth one is
    /// held out.
    pub fn from_library(library: &IconLibrary) -> Self {
        let mut seen = Vec::new();
        let mut held_out = Vec::new();
        let mut icon_of = BTreeMap::new();
        let ids = library
            .icons()
            .iter()
            .map(|i| i.id.as_str())
            .filter(|id| !id.contains('_') && !library.is_arrow(id));
        for (k, id) in ids.enumerate() {
            icon_of.insert(id.to_string(), id.to_string());
            if k % 5 == 4 {
                held_out.push(id.to_string())
            } else {
                seen.push(id.to_string())
            }
        }
        Self {
            seen,
            held_out,
            icon_of,
            arrow: library.arrow_ids().first().cloned(),
        }
    }

    pub fn icons(&self) -> Vec<&str> {
        self.icon_of.values().map(String::as_str).collect()
    }

    /// A random phrase; out-of-domain phrases contain at least one held-out word.
    pub fn phrase(&self, rng: &mut impl Rng, ood: bool) -> Phrase {
        let template = TEMPLATES.choose(rng).expect("templates");
        let slots = template.iter().filter(|t| **t == "C").count();
        let oov_slot = if ood {
            Some(rng.gen_range(0..slots))
        } else {
            None
        };
        let mut k = 0;
        let words = template
            .iter()
            .map(|t| {
                if *t != "C" {
                    return PhraseWord::stopword(*t);
                }
                let oov = oov_slot == Some(k);
                k += 1;
                let pool = if oov { &self.held_out } else { &self.seen };
                let mut w = PhraseWord::content(pool.choose(rng).expect("vocabulary").as_str());
                w.is_oov = oov;
                w
            })
            .collect();
        Phrase::new(words).expect("templates hold a content word")
    }
}

fn pose(rng: &mut impl Rng, id: &str) -> IconPlacement {
    let r3 = |v: f64| (v * 1000.0).round() / 1000.0;
    IconPlacement {
        icon_id: id.to_string(),
        x: r3(rng.gen_range(0.05..0.95)),
        y: r3(rng.gen_range(0.1..0.9)),
        scale: r3(rng.gen_range(0.5..2.0)),
        rotation: if rng.gen_bool(0.15) {
            90.0 * rng.gen_range(1..4) as f64
        } else {
            0.0
        },
        flipped: rng.gen_bool(0.1),
    }
}

/// Simulated human play knobs.
#[derive(Debug, Clone)]
pub struct HumanModel {
    /// Chance the guesser names a word whose icon is on the canvas, per guess.
    pub recognize: f64,
    /// Chance of naming a word whose icon is absent.
    pub blind: f64,
    /// Chance the drawer includes the planted icon for a word.
    pub draw_word: f64,
    pub distractor: f64,
    pub max_guesses_per_round: usize,
}

impl Default for HumanModel {
    fn default() -> Self {
        Self {
            recognize: 0.18,
            blind: 0.02,
            draw_word: 0.8,
            distractor: 0.2,
            max_guesses_per_round: 5,
        }
    }
}

fn initial_drawing(
    world: &PlantedWorld,
    phrase: &Phrase,
    hm: &HumanModel,
    rng: &mut impl Rng,
) -> Vec<IconPlacement> {
    let icons = world.icons();
    let mut out = Vec::new();
    for w in phrase.words().iter().filter(|w| !w.is_stopword) {
        if rng.gen_bool(hm.draw_word) {
            out.push(pose(rng, &world.icon_of[&w.text]));
        }
    }
    if out.is_empty() || rng.gen_bool(hm.distractor) {
        out.push({
            let id = icons.choose(rng).expect("icons").to_string();
            pose(rng, &id)
        });
    }
    out
}

fn revise(
    world: &PlantedWorld,
    phrase: &Phrase,
    prev: &[IconPlacement],
    rng: &mut impl Rng,
) -> Vec<IconPlacement> {
    let open: Vec<&str> = phrase
        .words()
        .iter()
        .filter(|w| !w.is_revealed())
        .map(|w| w.text.as_str())
        .collect();
    match rng.gen_range(0..100) {
        // edit: re-pose what is there
        0..=29 => prev
            .iter()
            .map(|p| IconPlacement {
                x: pose(rng, "").x,
                ..p.clone()
            })
            .collect(),
        // add: keep everything, add icons for open words (or an arrow)
        30..=74 => {
            let mut out = prev.to_vec();
            for w in &open {
                if rng.gen_bool(0.7) {
                    out.push(pose(rng, &world.icon_of[*w]));
                }
            }
            match &world.arrow {
                Some(a) if out.len() == prev.len() => out.push(pose(rng, a)),
                _ => {}
            }
            if out.len() == prev.len() {
                let id = world.icons().choose(rng).expect("icons").to_string();
                out.push(pose(rng, &id));
            }
            out
        }
        // redraw: start over with only the open words
        _ => {
            let mut out: Vec<IconPlacement> =
                open.iter().map(|w| pose(rng, &world.icon_of[*w])).collect();
            let id = world.icons().choose(rng).expect("icons").to_string();
            out.push(pose(rng, &id));
            out
        }
    }
}

/// Plays one simulated human game.
pub fn simulate_game(
    world: &PlantedWorld,
    phrase: &Phrase,
    game_id: String,
    split: Split,
    hm: &HumanModel,
    rng: &mut impl Rng,
) -> GameRecord {
    let vocab: Vec<&String> = world.seen.iter().chain(&world.held_out).collect();
    let mut state = phrase.reset();
    let mut rounds: Vec<Round> = Vec::new();
    let mut t = 0.0;
    let mut outcome = Outcome::LostTimeout;
    'game: for r in 0..MAX_ROUNDS {
        let placements = match rounds.last() {
            None => initial_drawing(world, &state, hm, rng),
            Some(prev) => revise(world, &state, &prev.drawing.placements, rng),
        };
        t += rng.gen_range(10.0..30.0);
        if t >= GAME_SECONDS {
            break;
        }
        let drawn: BTreeSet<String> = placements.iter().map(|p| p.icon_id.clone()).collect();
        let mut round = Round {
            drawing: Drawing::new(placements, r),
            guesses: Vec::new(),
        };
        for _ in 0..rng.gen_range(1..=hm.max_guesses_per_round) {
            t += rng.gen_range(4.0..10.0);
            if t >= GAME_SECONDS {
                rounds.push(round);
                break 'game;
            }
            let words: Vec<String> = state
                .words()
                .iter()
                .map(|w| {
                    if w.is_revealed() {
                        return w.text.clone();
                    }
                    let p = if drawn.contains(&world.icon_of[&w.text]) {
                        hm.recognize
                    } else {
                        hm.blind
                    };
                    if rng.gen_bool(p) {
                        w.text.clone()
                    } else {
                        vocab.choose(rng).expect("vocabulary").to_string()
                    }
                })
                .collect();
            let (next, scored) =
                evaluate_guess(&state, &Guess::new(words)).expect("guess has phrase length");
            state = next;
            round.guesses.push(scored);
            if state.is_complete() {
                outcome = Outcome::Won;
                rounds.push(round);
                break 'game;
            }
        }
        rounds.push(round);
    }
    let elapsed = if outcome == Outcome::Won {
        (t.min(GAME_SECONDS) * 10.0).round() / 10.0
    } else {
        GAME_SECONDS
    };
    GameRecord {
        game_id,
        split,
        phrase: phrase.reset(),
        rounds,
        outcome,
        elapsed_seconds: elapsed,
        players: Players {
            drawer: Player::human("sim-drawer"),
            guesser: Player::human("sim-guesser"),
        },
    }
}

/// `counts` games per split. In-domain splits share one phrase pool and
/// out-of-domain splits another, so phrases repeat across games.
pub fn synth_corpus(
    library: &IconLibrary,
    counts: &[(Split, usize)],
    seed: u64,
) -> Vec<GameRecord> {
    let world = PlantedWorld::from_library(library);
    let hm = HumanModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let total: usize = counts.iter().map(|c| c.1).sum();
    let pool_size = (total * 3 / 5).max(1);
    let ind: Vec<Phrase> = (0..pool_size)
        .map(|_| world.phrase(&mut rng, false))
        .collect();
    let ood: Vec<Phrase> = (0..pool_size)
        .map(|_| world.phrase(&mut rng, true))
        .collect();
    let mut out = Vec::with_capacity(total);
    for &(split, n) in counts {
        let pool = if split.is_ood() { &ood } else { &ind };
        for _ in 0..n {
            let phrase = pool.choose(&mut rng).expect("pool").clone();
            let id = format!("syn-{seed}-{:05}", out.len());
            out.push(simulate_game(&world, &phrase, id, split, &hm, &mut rng));
        }
    }
    out
}

/// Training corpus for self-play: `games` train-split games.
pub fn planted_training_corpus(library: &IconLibrary, games: usize, seed: u64) -> Vec<GameRecord> {
    synth_corpus(library, &[(Split::Train, games)], seed)
}

pub const BUNDLED_SEED: u64 = 50;
pub const BUNDLED_COUNTS: [(Split, usize); 5] = [
    (Split::Train, 30),
    (Split::IndValid, 6),
    (Split::IndTest, 6),
    (Split::OodValid, 4),
    (Split::OodTest, 4),
];

/// The shipped 50-game corpus (JSON Lines).
pub const BUNDLED_CORPUS_JSONL: &str = include_str!("../data/synthetic50.jsonl");
/// Its statistics, computed by an independent script.
pub const BUNDLED_GOLDEN_JSON: &str = include_str!("../data/synthetic50.golden.json");

pub fn bundled_corpus() -> Vec<GameRecord> {
    BUNDLED_CORPUS_JSONL
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).expect("bundled corpus parses"))
        .collect()
}

pub fn to_jsonl(corpus: &[GameRecord]) -> String {
    corpus
        .iter()
        .map(|g| serde_json::to_string(g).expect("record serializes") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::game_outcome;

    #[test]
    fn games_are_valid_and_deterministic() {
        let lib = IconLibrary::bundled();
        let a = synth_corpus(&lib, &BUNDLED_COUNTS, 3);
        assert_eq!(a.len(), 50);
        for g in &a {
            assert!(
                g.violations(Some(&lib)).is_empty(),
                "{}: {:?}",
                g.game_id,
                g.violations(Some(&lib))
            );
            assert_eq!(g.outcome == Outcome::Won, game_outcome(g).won);
        }
        assert_eq!(
            to_jsonl(&a),
            to_jsonl(&synth_corpus(&lib, &BUNDLED_COUNTS, 3))
        );
    }

    #[test]
    fn ood_phrases_hold_out_words() {
        let lib = IconLibrary::bundled();
        let world = PlantedWorld::from_library(&lib);
        let corpus = synth_corpus(&lib, &BUNDLED_COUNTS, 1);
        let train_words: BTreeSet<&str> = corpus
            .iter()
            .filter(|g| !g.split.is_ood())
            .flat_map(|g| {
                g.phrase
                    .words()
                    .iter()
                    .filter(|w| !w.is_stopword)
                    .map(|w| w.text.as_str())
            })
            .collect();
        for g in corpus.iter().filter(|g| g.split.is_ood()) {
            let oov: Vec<&PhraseWord> = g.phrase.words().iter().filter(|w| w.is_oov).collect();
            assert!(!oov.is_empty());
            assert!(oov.iter().all(
                |w| world.held_out.contains(&w.text) && !train_words.contains(w.text.as_str())
            ));
        }
    }

    #[test]
    fn bundled_corpus_matches_generator() {
        let lib = IconLibrary::bundled();
        assert_eq!(
            BUNDLED_CORPUS_JSONL,
            to_jsonl(&synth_corpus(&lib, &BUNDLED_COUNTS, BUNDLED_SEED))
        );
        assert_eq!(bundled_corpus().len(), 50);
    }
}
