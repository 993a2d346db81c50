//! Automatic and human/AI evaluation metrics.

mod human_ai;
mod replay;
mod report;
mod stats;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::DrawingLikelihood;
use crate::codec::{encode_drawing, QuantizationSpec};
use crate::domain::{evaluate_guess, Drawing, GameRecord, GameState, IconLibrary, Phrase, Turn};

pub use human_ai::{human_ai_scoring, CutoffPoint, HumanAiScores, ScoreRow};
pub use replay::{eval_drawer, replay_eval_guesser, replay_eval_guesser_par, GameMetric};
pub use report::{write_report_files, MetricsReport};
pub use stats::{
    dataset_stats, golden_mismatches, golden_value, reference_checks, DatasetStats, ReferenceCheck,
    ReferenceRow, RevisionShares, SplitStats, RATE_TOLERANCE, REFERENCE_ROUNDS, REFERENCE_TABLE,
    ROUNDS_TOLERANCE,
};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("token formats differ: `{0}` vs `{1}`")]
    FormatMismatch(String, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Allowed misses by phrase length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoftWinRule {
    /// Phrases up to this length must be guessed exactly.
    pub exact_max_len: usize,
    /// Phrases up to this length may miss one word; longer ones two.
    pub one_miss_max_len: usize,
}

impl Default for SoftWinRule {
    fn default() -> Self {
        Self {
            exact_max_len: 2,
            one_miss_max_len: 5,
        }
    }
}

impl SoftWinRule {
    pub fn allowed_misses(&self, len: usize) -> usize {
        if len <= self.exact_max_len {
            0
        } else if len <= self.one_miss_max_len {
            1
        } else {
            2
        }
    }

    /// `guessed[i]` marks a hit at position i; stopwords always count as hit.
    /// In OOD mode at least one OOV word must be hit as well.
    pub fn is_soft_win(&self, phrase: &Phrase, guessed: &[bool], ood_mode: bool) -> bool {
        let hit =
            |i: usize| guessed.get(i).copied().unwrap_or(false) || phrase.words()[i].is_stopword;
        let misses = (0..phrase.len()).filter(|&i| !hit(i)).count();
        if misses > self.allowed_misses(phrase.len()) {
            return false;
        }
        !ood_mode || (0..phrase.len()).any(|i| phrase.words()[i].is_oov && hit(i))
    }
}

pub fn soft_win(phrase: &Phrase, guessed: &[bool], ood_mode: bool) -> bool {
    SoftWinRule::default().is_soft_win(phrase, guessed, ood_mode)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub guesses_per_drawing: usize,
    pub guess_cutoff: usize,
    pub drawing_cutoff: usize,
    pub guess_cutoffs: Vec<usize>,
    pub drawing_cutoffs: Vec<usize>,
    pub soft_win: SoftWinRule,
    pub ood_mode: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            guesses_per_drawing: 5,
            guess_cutoff: 20,
            drawing_cutoff: 4,
            guess_cutoffs: vec![5, 10, 15, 20],
            drawing_cutoffs: vec![1, 2, 3, 4],
            soft_win: SoftWinRule::default(),
            ood_mode: false,
        }
    }
}

/// Multiset F1 between two icon bags; 0 when either is empty.
pub fn bag_f1(model: &BTreeMap<&str, usize>, human: &BTreeMap<&str, usize>) -> f64 {
    let overlap: usize = model
        .iter()
        .map(|(id, n)| (*n).min(human.get(id).copied().unwrap_or(0)))
        .sum();
    let m: usize = model.values().sum();
    let h: usize = human.values().sum();
    if overlap == 0 || m == 0 || h == 0 {
        return 0.0;
    }
    let p = overlap as f64 / m as f64;
    let r = overlap as f64 / h as f64;
    2.0 * p * r / (p + r)
}

/// Best multiset F1 of `model` against any of the human drawings; `None`
/// when there are none to compare against.
pub fn icon_f1(model: &Drawing, humans: &[Drawing]) -> Option<f64> {
    let bag = model.icon_bag();
    humans
        .iter()
        .map(|h| bag_f1(&bag, &h.icon_bag()))
        .reduce(f64::max)
}

/// The game as it stood when the drawer started drawing round `round`.
pub fn state_before_round(record: &GameRecord, round: usize) -> GameState {
    let mut state = GameState::new(record.phrase.reset());
    for r in record.rounds.iter().take(round) {
        let mut scored = Vec::with_capacity(r.guesses.len());
        for g in &r.guesses {
            if let Ok((p, g)) = evaluate_guess(&state.phrase, g) {
                state.phrase = p;
                scored.push(g);
            }
        }
        state.drawings.push(r.drawing.clone());
        state.guesses.push(scored);
    }
    state.turn = Turn::Drawer;
    state
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerplexityReport {
    pub token_format: String,
    /// Mean over games of the per-game mean drawing perplexity.
    pub perplexity: Option<f64>,
    pub games: usize,
    pub excluded: Vec<(String, String)>,
}

impl PerplexityReport {
    /// Orders two reports (lower is better); refuses mixed token formats.
    pub fn compare(&self, other: &Self) -> Result<Option<std::cmp::Ordering>, MetricsError> {
        if self.token_format != other.token_format {
            return Err(MetricsError::FormatMismatch(
                self.token_format.clone(),
                other.token_format.clone(),
            ));
        }
        Ok(match (self.perplexity, other.perplexity) {
            (Some(a), Some(b)) => a.partial_cmp(&b),
            _ => None,
        })
    }
}

/// `exp` of the mean negative log-likelihood per token.
pub fn sequence_perplexity(log_likelihoods: &[f64]) -> Option<f64> {
    if log_likelihoods.is_empty() || log_likelihoods.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let nll = -log_likelihoods.iter().sum::<f64>() / log_likelihoods.len() as f64;
    Some(nll.exp())
}

/// Perplexity of every human drawing under `oracle`, averaged per game and
/// then over games. Games with unencodable drawings or non-finite
/// likelihoods are excluded and listed.
pub fn drawing_perplexity(
    oracle: &dyn DrawingLikelihood,
    corpus: &[GameRecord],
    library: &IconLibrary,
    spec: &QuantizationSpec,
) -> Result<PerplexityReport, MetricsError> {
    let format = spec.format_id();
    if oracle.token_format() != format {
        return Err(MetricsError::FormatMismatch(oracle.token_format(), format));
    }
    let mut per_game = Vec::new();
    let mut excluded = Vec::new();
    'games: for record in corpus {
        if record.rounds.is_empty() {
            excluded.push((record.game_id.clone(), "no drawings".to_string()));
            continue;
        }
        let mut sum = 0.0;
        for (r, round) in record.rounds.iter().enumerate() {
            let tokens = match encode_drawing(&round.drawing, library, spec) {
                Ok(t) => t,
                Err(e) => {
                    excluded.push((record.game_id.clone(), format!("round {r}: {e}")));
                    continue 'games;
                }
            };
            let ll = oracle.token_log_likelihoods(&state_before_round(record, r), &tokens);
            if ll.len() != tokens.len() {
                excluded.push((
                    record.game_id.clone(),
                    format!("round {r}: {} scores for {} tokens", ll.len(), tokens.len()),
                ));
                continue 'games;
            }
            match sequence_perplexity(&ll) {
                Some(p) if p.is_finite() => sum += p,
                _ => {
                    excluded.push((
                        record.game_id.clone(),
                        format!("round {r}: non-finite likelihood"),
                    ));
                    continue 'games;
                }
            }
        }
        per_game.push(sum / record.rounds.len() as f64);
    }
    let perplexity =
        (!per_game.is_empty()).then(|| per_game.iter().sum::<f64>() / per_game.len() as f64);
    Ok(PerplexityReport {
        token_format: format,
        perplexity,
        games: per_game.len(),
        excluded,
    })
}

/// Assigns `-ln V` to every token.
#[derive(Debug, Clone)]
pub struct UniformLikelihood {
    pub vocab_size: usize,
    pub token_format: String,
}

impl DrawingLikelihood for UniformLikelihood {
    fn token_format(&self) -> String {
        self.token_format.clone()
    }

    fn token_log_likelihoods(
        &self,
        _: &GameState,
        tokens: &[crate::codec::DrawingToken],
    ) -> Vec<f64> {
        vec![-(self.vocab_size as f64).ln(); tokens.len()]
    }
}
