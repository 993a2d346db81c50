//! Strategies shared by the property tests.
#![allow(dead_code)]

use iconary::domain::{Drawing, IconPlacement, Phrase, PhraseWord};
use iconary::IconLibrary;
use proptest::prelude::*;

pub const CONTENT: [&str; 8] = [
    "dog", "kite", "beach", "runs", "red", "tree", "boat", "sleeps",
];
pub const STOP: [&str; 4] = ["a", "the", "in", "on"];

/// 1–6 words with at least one content word. Content and stopwords come
/// from disjoint lists.
pub fn phrase() -> impl Strategy<Value = Phrase> {
    prop::collection::vec((any::<bool>(), 0..CONTENT.len(), 0..STOP.len()), 1..=6)
        .prop_filter("needs a content word", |ws| {
            ws.iter().any(|(stop, _, _)| !stop)
        })
        .prop_map(|ws| {
            let words = ws
                .into_iter()
                .map(|(stop, c, s)| {
                    if stop {
                        PhraseWord::stopword(STOP[s])
                    } else {
                        PhraseWord::content(CONTENT[c])
                    }
                })
                .collect();
            Phrase::new(words).unwrap()
        })
}

/// A guess of length `n` drawn from both word lists plus a decoy.
pub fn guess_words(n: usize) -> impl Strategy<Value = Vec<String>> {
    let pool: Vec<&'static str> = CONTENT
        .iter()
        .chain(STOP.iter())
        .copied()
        .chain(["zebra"])
        .collect();
    prop::collection::vec(prop::sample::select(pool), n)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

pub fn placement(ids: Vec<String>) -> impl Strategy<Value = IconPlacement> {
    (
        prop::sample::select(ids),
        0.0..=1.0f64,
        0.0..=1.0f64,
        -3.0..3.0f64,
        0.0..360.0f64,
        any::<bool>(),
    )
        .prop_map(
            |(icon_id, x, y, log_scale, rotation, flipped)| IconPlacement {
                icon_id,
                x,
                y,
                // inside the default quantization range [1/8, 8]
                scale: (log_scale * 0.69).exp(),
                rotation,
                flipped,
            },
        )
}

pub fn drawing(ids: Vec<String>, max: usize) -> impl Strategy<Value = Drawing> {
    prop::collection::vec(placement(ids), 1..=max).prop_map(|p| Drawing::new(p, 0))
}

pub fn library_ids(lib: &IconLibrary) -> Vec<String> {
    lib.icons().iter().map(|i| i.id.clone()).collect()
}

pub mod fuzz {
    use iconary::domain::Phrase;
    use iconary::server::Role;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[derive(Debug, Clone)]
    pub enum Step {
        Line(Role, String),
        Tick,
    }

    const ICONS: [&str; 6] = ["dog", "tree", "sun", "boat", "kite", "unicorn"];
    /// Malformed input never mentions a vocabulary word.
    const JUNK: [&str; 5] = [
        "not json",
        "{\"type\":\"fly\"}",
        "{\"type\":\"submit_guess\",\"words\":3}",
        "[]",
        "{}",
    ];

    fn drawing_line(rng: &mut ChaCha8Rng) -> String {
        let n = if rng.gen_bool(0.1) {
            0
        } else {
            rng.gen_range(1..4)
        };
        let icons: Vec<String> = (0..n)
            .map(|_| {
                let x: f64 = if rng.gen_bool(0.05) {
                    1.5
                } else {
                    rng.gen_range(0.0..1.0)
                };
                format!(
                    r#"{{"icon":"{}","x":{x},"y":{},"scale":{},"rotation":{},"flipped":{}}}"#,
                    ICONS.choose(rng).unwrap(),
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.5..2.0),
                    rng.gen_range(0.0..360.0),
                    rng.gen_bool(0.3)
                )
            })
            .collect();
        format!(
            r#"{{"type":"submit_drawing","drawing":{{"icons":[{}]}}}}"#,
            icons.join(",")
        )
    }

    fn guess_line(rng: &mut ChaCha8Rng, phrase: &Phrase) -> String {
        let mut n = phrase.len();
        if rng.gen_bool(0.05) {
            n += 1;
        }
        let words: Vec<String> = (0..n)
            .map(|i| {
                let w = if i < phrase.len() && rng.gen_bool(0.6) {
                    phrase.words()[i].text.clone()
                } else if rng.gen_bool(0.5) {
                    super::CONTENT.choose(rng).unwrap().to_string()
                } else {
                    super::STOP.choose(rng).unwrap().to_string()
                };
                format!("\"{w}\"")
            })
            .collect();
        format!(r#"{{"type":"submit_guess","words":[{}]}}"#, words.join(","))
    }

    /// A phrase and a random event sequence with non-decreasing clock
    /// readings, mostly well-formed and mostly in turn.
    pub fn transcript(seed: u64) -> (Phrase, Vec<(f64, Step)>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phrase = {
            let n = rng.gen_range(1..=5);
            let mut words: Vec<_> = (0..n)
                .map(|_| {
                    if rng.gen_bool(0.3) {
                        iconary::domain::PhraseWord::stopword(
                            *super::STOP.choose(&mut rng).unwrap(),
                        )
                    } else {
                        iconary::domain::PhraseWord::content(
                            *super::CONTENT.choose(&mut rng).unwrap(),
                        )
                    }
                })
                .collect();
            if words.iter().all(|w| w.is_stopword) {
                words.push(iconary::domain::PhraseWord::content(
                    *super::CONTENT.choose(&mut rng).unwrap(),
                ));
            }
            Phrase::new(words).unwrap()
        };
        let ai = rng.gen_bool(0.5);
        let mut t = 0.0;
        let mut out = Vec::new();
        let len = rng.gen_range(5..80);
        for _ in 0..len {
            t += match rng.gen_range(0..10) {
                0 => 0.0,
                1 => rng.gen_range(30.0..120.0),
                _ => rng.gen_range(0.1..8.0),
            };
            let role = if rng.gen_bool(0.5) {
                Role::Drawer
            } else {
                Role::Guesser
            };
            let other = if role == Role::Drawer {
                "guesser"
            } else {
                "drawer"
            };
            let own = if role == Role::Drawer {
                "drawer"
            } else {
                "guesser"
            };
            let step = match rng.gen_range(0..100) {
                0..=4 => Step::Tick,
                5..=9 => Step::Line(role, JUNK.choose(&mut rng).unwrap().to_string()),
                10..=17 => Step::Line(
                    role,
                    format!(
                        r#"{{"type":"join","role":"{}","player":{{"id":"p-{own}","ai":{}}}}}"#,
                        if rng.gen_bool(0.9) { own } else { other },
                        ai && role == Role::Guesser
                    ),
                ),
                18..=22 => Step::Line(role, r#"{"type":"start"}"#.into()),
                23..=45 => Step::Line(Role::Drawer, drawing_line(&mut rng)),
                46..=85 => Step::Line(Role::Guesser, guess_line(&mut rng, &phrase)),
                86..=93 => Step::Line(Role::Guesser, r#"{"type":"pass_turn"}"#.into()),
                _ => Step::Line(
                    role,
                    if rng.gen_bool(0.5) {
                        drawing_line(&mut rng)
                    } else {
                        guess_line(&mut rng, &phrase)
                    },
                ),
            };
            out.push((t, step));
        }
        (phrase, out)
    }
}
