use std::collections::BTreeSet;
use std::hash::{Hash, Hasher};

use iconary::constraints::{
    boost_rare, constrained_beam_search, log_boost_rare, BeamConfig, FnOracle, TokenizerView,
    WordConstraints,
};
use proptest::prelude::*;

const PIECES: [&str; 10] = [
    "run", "walk", "dog", "cat", "##er", "##s", "##ing", "the", "park", "[EOS]",
];
const WORDS: [&str; 10] = [
    "run", "runs", "walker", "walk", "walking", "dog", "dogs", "cat", "the", "park",
];

/// Context-dependent pseudo-random logits, fixed by `seed`.
fn hashed_logits(seed: u64, prefix: &[usize], v: usize) -> Vec<f64> {
    (0..v)
        .map(|i| {
            let mut h = std::collections::hash_map::DefaultHasher::new();
            (seed, prefix, i).hash(&mut h);
            (h.finish() % 10_000) as f64 / 1000.0 - 5.0
        })
        .collect()
}

fn constraints(n: usize) -> impl Strategy<Value = WordConstraints> {
    let slot = prop_oneof![
        3 => Just(None),
        1 => prop::sample::select(WORDS.to_vec()).prop_map(Some),
    ];
    (
        prop::collection::vec(slot, n),
        prop::collection::vec((0..n, prop::sample::select(WORDS.to_vec())), 0..4),
        prop::collection::vec(
            prop::collection::vec(prop::sample::select(WORDS.to_vec()), n),
            0..3,
        ),
    )
        .prop_map(move |(known, bad, prev)| {
            let mut c = WordConstraints::new(n);
            for (i, k) in known.into_iter().enumerate() {
                if let Some(w) = k {
                    c = c.with_known(i, w);
                }
            }
            for (i, w) in bad {
                c = c.with_incorrect(i, w);
            }
            for p in prev {
                c = c.with_previous(&p);
            }
            c
        })
}

fn renorm(p: &[f64]) -> Vec<f64> {
    let s: f64 = p.iter().sum();
    p.iter().map(|x| x / s).collect()
}

/// Plain beam search over exactly `n` whole words then the end piece,
/// length-normalized, ties broken by piece ids.
fn reference_beam(
    logits: &dyn Fn(&[usize]) -> Vec<f64>,
    vocab: usize,
    eos: usize,
    n: usize,
    beams: usize,
) -> Vec<(Vec<usize>, f64)> {
    let log_softmax = |z: Vec<f64>| {
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + z.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
        z.into_iter().map(|x| x - lse).collect::<Vec<_>>()
    };
    let mut live: Vec<(Vec<usize>, f64)> = vec![(vec![], 0.0)];
    for step in 0..=n {
        let mut pool = Vec::new();
        for (seq, lp) in &live {
            let l = log_softmax(logits(seq));
            let next: Vec<usize> = if step == n {
                vec![eos]
            } else {
                (0..vocab).filter(|&p| p != eos).collect()
            };
            for p in next {
                let mut s = seq.clone();
                s.push(p);
                pool.push((s, lp + l[p]));
            }
        }
        // all candidates have the same length, so normalizing does not change order
        pool.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        pool.truncate(beams);
        live = pool;
    }
    live
}

proptest! {
    #[test]
    fn guesses_respect_constraints(
        (n, c) in (1usize..=3).prop_flat_map(|n| (Just(n), constraints(n))),
        seed in any::<u64>(),
        beams in 1usize..8,
    ) {
        let tok = TokenizerView::from_wordpieces(&PIECES, "[EOS]").unwrap();
        let v = tok.len();
        let oracle = FnOracle::new(v, move |p: &[usize]| hashed_logits(seed, p, v));
        let cfg = BeamConfig { beams, max_pieces: 12, boost: 0.0, unseen: BTreeSet::new() };
        match constrained_beam_search(&oracle, &c, &tok, &cfg) {
            Ok(found) => {
                for g in &found {
                    prop_assert_eq!(g.words.len(), n);
                    prop_assert!(c.admits(&g.words));
                    for (i, k) in c.known.iter().enumerate() {
                        if let Some(k) = k {
                            prop_assert_eq!(&g.words[i], k);
                        }
                    }
                    prop_assert_eq!(*g.pieces.last().unwrap(), tok.eos());
                }
                for w in found.windows(2) {
                    prop_assert!(w[0].score >= w[1].score);
                }
            }
            Err(e) => prop_assert_eq!(e, iconary::constraints::ConstraintError::NoGuess),
        }
    }

    #[test]
    fn boost_is_a_distribution(
        logits in prop::collection::vec(-30.0..30.0f64, 1..40),
        picks in prop::collection::vec(any::<prop::sample::Index>(), 0..10),
        b in 0.0..10.0f64,
    ) {
        let unseen: BTreeSet<usize> = picks.iter().map(|i| i.index(logits.len())).collect();
        let p = boost_rare(&logits, &unseen, b).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(p.iter().all(|x| *x >= 0.0 && *x <= 1.0));
        let lp = log_boost_rare(&logits, &unseen, b).unwrap();
        for (a, l) in p.iter().zip(&lp) {
            prop_assert!((a - l.exp()).abs() < 1e-12);
        }
        // boosting never lowers an unseen piece's share
        let base = boost_rare(&logits, &unseen, 0.0).unwrap();
        for i in &unseen {
            prop_assert!(p[*i] >= base[*i] - 1e-15);
        }
    }

    #[test]
    fn masking_commutes_with_boosting(
        logits in prop::collection::vec(-20.0..20.0f64, 2..30),
        mask_bits in prop::collection::vec(any::<bool>(), 30),
        unseen_bits in prop::collection::vec(any::<bool>(), 30),
        b in 0.0..6.0f64,
    ) {
        let v = logits.len();
        let mut allowed: Vec<usize> = (0..v).filter(|&i| mask_bits[i]).collect();
        if allowed.is_empty() {
            allowed.push(0);
        }
        let unseen: BTreeSet<usize> = (0..v).filter(|&i| unseen_bits[i]).collect();
        // boost over everything, then restrict and renormalize
        let full = boost_rare(&logits, &unseen, b).unwrap();
        let lhs = renorm(&allowed.iter().map(|&i| full[i]).collect::<Vec<_>>());
        // restrict first, then boost
        let sub: Vec<f64> = allowed.iter().map(|&i| logits[i]).collect();
        let sub_unseen: BTreeSet<usize> = allowed.iter().enumerate().filter(|(_, i)| unseen.contains(i)).map(|(k, _)| k).collect();
        let rhs = boost_rare(&sub, &sub_unseen, b).unwrap();
        for (a, r) in lhs.iter().zip(&rhs) {
            prop_assert!((a - r).abs() < 1e-9, "{} vs {}", a, r);
        }
    }

    #[test]
    fn unconstrained_search_is_plain_beam_search(
        n in 1usize..=3,
        vocab in 2usize..6,
        seed in any::<u64>(),
        beams in 1usize..6,
    ) {
        let words: Vec<String> = (0..vocab).map(|i| format!("w{i}")).collect();
        let tok = TokenizerView::whole_words(&words).unwrap();
        let v = tok.len();
        let f = move |p: &[usize]| hashed_logits(seed, p, v);
        let oracle = FnOracle::new(v, f);
        let cfg = BeamConfig { beams, max_pieces: n + 1, boost: 0.0, unseen: BTreeSet::new() };
        let got = constrained_beam_search(&oracle, &WordConstraints::new(n), &tok, &cfg).unwrap();
        let want = reference_beam(&f, v, tok.eos(), n, beams);
        prop_assert_eq!(got.len(), want.len());
        for (g, (seq, lp)) in got.iter().zip(&want) {
            prop_assert_eq!(&g.pieces, seq);
            prop_assert!((g.log_prob - lp).abs() < 1e-9);
        }
    }
}
