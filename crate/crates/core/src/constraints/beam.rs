use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use super::{
    allowed_mask, Concurrency, ConstraintError, ConstraintState, ScoringOracle, TokenizerView,
    WordConstraints,
};
use crate::domain::normalize_word;

fn check_boost(b: f64) -> Result<(), ConstraintError> {
    if b.is_finite() && b >= 0.0 {
        Ok(())
    } else {
        Err(ConstraintError::InvalidBoost(b))
    }
}

fn boosted(logits: &[f64], unseen: &BTreeSet<usize>, b: f64) -> Result<Vec<f64>, ConstraintError> {
    check_boost(b)?;
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(ConstraintError::NonFinite);
    }
    Ok(logits
        .iter()
        .enumerate()
        .map(|(i, &x)| if unseen.contains(&i) { x + b } else { x })
        .collect())
}

/// Adds `b` to the logits of `unseen` pieces and renormalizes.
pub fn boost_rare(
    logits: &[f64],
    unseen: &BTreeSet<usize>,
    b: f64,
) -> Result<Vec<f64>, ConstraintError> {
    let z = boosted(logits, unseen, b)?;
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    Ok(e.into_iter().map(|x| x / s).collect())
}

/// Log of [`boost_rare`], computed stably.
pub fn log_boost_rare(
    logits: &[f64],
    unseen: &BTreeSet<usize>,
    b: f64,
) -> Result<Vec<f64>, ConstraintError> {
    let z = boosted(logits, unseen, b)?;
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
    Ok(z.into_iter().map(|x| x - lse).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamConfig {
    pub beams: usize,
    /// Longest sequence considered, counting the end piece.
    pub max_pieces: usize,
    pub boost: f64,
    /// Piece ids that receive the boost.
    pub unseen: BTreeSet<usize>,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            beams: 20,
            max_pieces: 32,
            boost: 2.0,
            unseen: BTreeSet::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredGuess {
    pub words: Vec<String>,
    /// Piece ids including the final end piece.
    pub pieces: Vec<usize>,
    /// Sum of piece log-probabilities.
    pub log_prob: f64,
    /// Length-normalized score used for ranking.
    pub score: f64,
}

#[derive(Clone)]
struct Hyp {
    state: ConstraintState,
    log_prob: f64,
}

impl Hyp {
    fn score(&self) -> f64 {
        length_normalized(self.log_prob, self.state.emitted().len())
    }
}

/// Mean log-probability per piece.
fn length_normalized(log_prob: f64, pieces: usize) -> f64 {
    if pieces == 0 {
        0.0
    } else {
        log_prob / pieces as f64
    }
}

/// Beam search where every expansion is masked by the word constraints.
///
/// Finished and unfinished hypotheses compete for the same `beams` slots.
/// Results are ranked best first, distinct by word sequence, and never
/// repeat a previous guess. An empty result is [`ConstraintError::NoGuess`].
pub fn constrained_beam_search<O: ScoringOracle + ?Sized>(
    oracle: &O,
    constraints: &WordConstraints,
    tok: &TokenizerView,
    config: &BeamConfig,
) -> Result<Vec<ScoredGuess>, ConstraintError> {
    if config.beams == 0 {
        return Err(ConstraintError::NoBeams);
    }
    check_boost(config.boost)?;
    if oracle.vocab_size() != tok.len() {
        return Err(ConstraintError::ScoreLength {
            expected: tok.len(),
            got: oracle.vocab_size(),
        });
    }
    let root = ConstraintState::new(constraints, tok)?;
    let mut live = vec![Hyp {
        state: root,
        log_prob: 0.0,
    }];
    let mut finished: Vec<Hyp> = Vec::new();

    for step in 0..config.max_pieces {
        if live.is_empty() {
            break;
        }
        let last_step = step + 1 == config.max_pieces;
        let mut pool: Vec<Hyp> = std::mem::take(&mut finished);
        for h in &live {
            let mask = allowed_mask(&h.state, tok);
            if !mask.iter().any(|&m| m) {
                continue;
            }
            let logits = oracle.logits(h.state.emitted());
            if logits.len() != tok.len() {
                return Err(ConstraintError::ScoreLength {
                    expected: tok.len(),
                    got: logits.len(),
                });
            }
            let logp = log_boost_rare(&logits, &config.unseen, config.boost)?;
            for (piece, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
                if last_step && piece != tok.eos() {
                    continue;
                }
                let mut state = h.state.clone();
                state.advance(piece, tok)?;
                if state.is_finished() {
                    let words: Vec<String> =
                        state.words(tok).iter().map(|w| normalize_word(w)).collect();
                    if constraints.previous.contains(&words) {
                        continue;
                    }
                }
                pool.push(Hyp {
                    state,
                    log_prob: h.log_prob + logp[piece],
                });
            }
        }
        pool.sort_by(|a, b| {
            b.score()
                .total_cmp(&a.score())
                .then_with(|| a.state.emitted().cmp(b.state.emitted()))
        });
        pool.truncate(config.beams);
        (finished, live) = pool.into_iter().partition(|h| h.state.is_finished());
    }

    let mut seen = HashSet::new();
    let out: Vec<ScoredGuess> = finished
        .into_iter()
        .filter_map(|h| {
            let words = h.state.words(tok);
            (constraints.admits(&words) && seen.insert(words.clone())).then(|| ScoredGuess {
                words,
                pieces: h.state.emitted().to_vec(),
                log_prob: h.log_prob,
                score: h.score(),
            })
        })
        .collect();
    if out.is_empty() {
        Err(ConstraintError::NoGuess)
    } else {
        Ok(out)
    }
}

/// Runs independent searches, in parallel when the oracle allows it.
pub fn search_batch<O: ScoringOracle + Sync + ?Sized>(
    oracle: &O,
    jobs: &[WordConstraints],
    tok: &TokenizerView,
    config: &BeamConfig,
) -> Vec<Result<Vec<ScoredGuess>, ConstraintError>> {
    if oracle.concurrency() == Concurrency::Serial || jobs.len() < 2 {
        return jobs
            .iter()
            .map(|c| constrained_beam_search(oracle, c, tok, config))
            .collect();
    }
    let threads = std::thread::available_parallelism()
        .map_or(2, |n| n.get())
        .min(jobs.len());
    let chunk = jobs.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|c| constrained_beam_search(oracle, c, tok, config))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("search thread panicked"))
            .collect()
    })
}
