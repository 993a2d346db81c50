mod common;

use iconary::domain::{Drawing, GameState, IconPlacement, Phrase, PhraseWord};
use iconary::encoder::{
    describe_drawing, fill_in_the_blank_target, render_guesser_input, PhraseStyle, PhraseTemplate,
    SentinelFormat,
};
use iconary::IconLibrary;
use proptest::prelude::*;

use common::*;

/// Phrase with a random subset of content words already guessed.
fn partly_guessed() -> impl Strategy<Value = Phrase> {
    phrase()
        .prop_flat_map(|p| {
            let n = p.len();
            (Just(p), prop::collection::vec(any::<bool>(), n))
        })
        .prop_map(|(p, flags)| {
            let words = p
                .words()
                .iter()
                .zip(flags)
                .map(|(w, g)| {
                    let mut w = w.clone();
                    w.guessed = !w.is_stopword && g;
                    w
                })
                .collect();
            Phrase::new(words).unwrap()
        })
}

/// Drawing whose placements all have distinct x.
fn distinct_x_drawing() -> impl Strategy<Value = Drawing> {
    let ids = library_ids(&IconLibrary::bundled());
    drawing(ids, 7).prop_map(|mut d| {
        let n = d.len();
        for (i, p) in d.placements.iter_mut().enumerate() {
            p.x = (i as f64 + 0.5) / n as f64;
        }
        d
    })
}

fn view_text(p: &Phrase, d: &Drawing, style: &PhraseStyle) -> String {
    let mut st = GameState::new(p.clone());
    st.drawings.push(d.clone());
    st.guesses.push(Vec::new());
    render_guesser_input(&st.guesser_view(), &IconLibrary::bundled(), style).unwrap()
}

fn runs_of_hidden(p: &Phrase) -> usize {
    let mut runs = 0;
    let mut prev = false;
    for w in p.words() {
        let hidden = !w.is_revealed();
        if hidden && !prev {
            runs += 1;
        }
        prev = hidden;
    }
    runs
}

proptest! {
    #[test]
    fn rendering_is_deterministic(p in partly_guessed(), d in distinct_x_drawing()) {
        for style in [PhraseStyle::Underscore, PhraseStyle::fill_in_the_blank()] {
            prop_assert_eq!(view_text(&p, &d, &style), view_text(&p, &d, &style));
        }
    }

    #[test]
    fn creation_order_does_not_matter(d in distinct_x_drawing(), perm in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let lib = IconLibrary::bundled();
        let mut shuffled: Vec<IconPlacement> = d.placements.clone();
        shuffled.shuffle(&mut rand::rngs::StdRng::seed_from_u64(perm));
        let other = Drawing::new(shuffled, d.round_index);
        prop_assert_eq!(describe_drawing(&d, &lib).unwrap(), describe_drawing(&other, &lib).unwrap());
    }

    #[test]
    fn hidden_words_never_leak(p in partly_guessed(), d in distinct_x_drawing()) {
        for style in [PhraseStyle::Underscore, PhraseStyle::fill_in_the_blank()] {
            let text = view_text(&p, &d, &style);
            let phrase_part = text.split_once(" phrase: ").unwrap().1;
            let shown: Vec<&str> = phrase_part.split(' ').collect();
            let revealed: Vec<&str> = p.words().iter().filter(|w| w.is_revealed()).map(|w| w.text.as_str()).collect();
            for w in p.words().iter().filter(|w| !w.is_revealed() && !revealed.contains(&w.text.as_str())) {
                prop_assert!(!shown.contains(&w.text.as_str()), "{} leaked in {}", w.text, text);
            }
            if style == PhraseStyle::Underscore {
                prop_assert_eq!(shown.len(), p.len());
            }
        }
    }

    #[test]
    fn sentinels_match_runs(p in partly_guessed()) {
        let runs = runs_of_hidden(&p);
        let st = GameState::new(p.clone());
        let template = PhraseTemplate::new(&st.guesser_view().slots, PhraseStyle::fill_in_the_blank());
        prop_assert_eq!(template.sentinel_count(), runs);
        let fmt = SentinelFormat::default();
        let target = fill_in_the_blank_target(&p, &fmt);
        let in_target = target.split(' ').filter(|t| t.starts_with(&fmt.prefix)).count();
        prop_assert_eq!(in_target, runs + 1);
        // the target words are exactly the hidden words, in order
        let words: Vec<&str> = target.split(' ').filter(|t| !t.starts_with(&fmt.prefix)).collect();
        let hidden: Vec<&str> = p.words().iter().filter(|w| !w.is_revealed()).map(|w| w.text.as_str()).collect();
        prop_assert_eq!(words, hidden);
    }
}

#[test]
fn stopword_only_reveal_keeps_one_sentinel_per_gap() {
    let p = Phrase::new(vec![
        PhraseWord::content("dog"),
        PhraseWord::stopword("on"),
        PhraseWord::content("beach"),
    ])
    .unwrap();
    assert_eq!(runs_of_hidden(&p), 2);
}
