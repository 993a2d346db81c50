//! Lexically constrained guess decoding over a wordpiece vocabulary.
//!
//! Word-level constraints — exact word count, known words in place, and
//! words already known to be wrong at a position — are enforced by masking
//! pieces at every generation step.

mod beam;
mod oracle;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::GuesserAgent;
use crate::domain::{
    evaluate_guess, normalize_word, DomainError, GameState, Guess, GuesserView, Turn,
};

pub use beam::{
    boost_rare, constrained_beam_search, log_boost_rare, search_batch, BeamConfig, ScoredGuess,
};
pub use oracle::{Concurrency, FnOracle, ScoringOracle, UniformOracle, UnigramOracle};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstraintError {
    #[error("phrase must have at least one word")]
    NoWords,
    #[error("tokenizer needs exactly one end-of-sequence piece, found {0}")]
    EosCount(usize),
    #[error("duplicate piece `{0}`")]
    DuplicatePiece(String),
    #[error("known word `{0}` cannot be tokenized")]
    Untokenizable(String),
    #[error("piece {0} is not allowed here")]
    Disallowed(usize),
    #[error("piece id {0} out of range")]
    UnknownPiece(usize),
    #[error("boost must be finite and non-negative, got {0}")]
    InvalidBoost(f64),
    #[error("scores must be finite")]
    NonFinite,
    #[error("oracle returned {got} scores for a vocabulary of {expected}")]
    ScoreLength { expected: usize, got: usize },
    #[error("beam width must be positive")]
    NoBeams,
    #[error("no admissible guess")]
    NoGuess,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PieceKind {
    WordStart,
    Continuation,
    Eos,
}

/// The decoder's view of a wordpiece vocabulary.
#[derive(Debug, Clone)]
pub struct TokenizerView {
    surfaces: Vec<String>,
    kinds: Vec<PieceKind>,
    eos: usize,
    starts: HashMap<String, usize>,
    continuations: HashMap<String, usize>,
}

impl TokenizerView {
    /// `pieces` are `(surface, kind)`; continuation surfaces carry no marker.
    pub fn new(pieces: Vec<(String, PieceKind)>) -> Result<Self, ConstraintError> {
        let eos_ids: Vec<usize> = pieces
            .iter()
            .enumerate()
            .filter(|(_, (_, k))| *k == PieceKind::Eos)
            .map(|(i, _)| i)
            .collect();
        if eos_ids.len() != 1 {
            return Err(ConstraintError::EosCount(eos_ids.len()));
        }
        let mut starts = HashMap::new();
        let mut continuations = HashMap::new();
        for (i, (s, k)) in pieces.iter().enumerate() {
            let map = match k {
                PieceKind::WordStart => &mut starts,
                PieceKind::Continuation => &mut continuations,
                PieceKind::Eos => continue,
            };
            if s.is_empty() || map.insert(s.clone(), i).is_some() {
                return Err(ConstraintError::DuplicatePiece(s.clone()));
            }
        }
        let (surfaces, kinds) = pieces.into_iter().unzip();
        Ok(Self {
            surfaces,
            kinds,
            eos: eos_ids[0],
            starts,
            continuations,
        })
    }

    /// BERT-style list: `##x` is a continuation, `eos` names the end piece.
    pub fn from_wordpieces<S: AsRef<str>>(
        pieces: &[S],
        eos: &str,
    ) -> Result<Self, ConstraintError> {
        Self::new(
            pieces
                .iter()
                .map(|p| {
                    let p = p.as_ref();
                    if p == eos {
                        (p.to_string(), PieceKind::Eos)
                    } else if let Some(rest) = p.strip_prefix("##") {
                        (rest.to_string(), PieceKind::Continuation)
                    } else {
                        (p.to_string(), PieceKind::WordStart)
                    }
                })
                .collect(),
        )
    }

    /// One word-start piece per distinct normalized word, then `<eos>`.
    pub fn whole_words<S: AsRef<str>>(words: &[S]) -> Result<Self, ConstraintError> {
        let mut seen = HashSet::new();
        let mut pieces: Vec<(String, PieceKind)> = Vec::new();
        for w in words {
            let w = normalize_word(w.as_ref());
            if !w.is_empty() && seen.insert(w.clone()) {
                pieces.push((w, PieceKind::WordStart));
            }
        }
        pieces.push(("<eos>".into(), PieceKind::Eos));
        Self::new(pieces)
    }

    pub fn len(&self) -> usize {
        self.surfaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.surfaces.is_empty()
    }

    pub fn eos(&self) -> usize {
        self.eos
    }

    pub fn kind(&self, piece: usize) -> PieceKind {
        self.kinds[piece]
    }

    pub fn is_word_start(&self, piece: usize) -> bool {
        self.kinds[piece] == PieceKind::WordStart
    }

    pub fn surface(&self, piece: usize) -> &str {
        &self.surfaces[piece]
    }

    pub fn word_start_id(&self, surface: &str) -> Option<usize> {
        self.starts.get(surface).copied()
    }

    /// Greedy longest-match segmentation of a normalized word, backtracking
    /// when a greedy choice leaves an unsegmentable remainder.
    pub fn tokenize_word(&self, word: &str) -> Option<Vec<usize>> {
        let word = normalize_word(word);
        if word.is_empty() {
            return None;
        }
        let mut dead = HashSet::new();
        let mut out = Vec::new();
        self.segment(&word, 0, &mut out, &mut dead).then_some(out)
    }

    fn segment(
        &self,
        word: &str,
        pos: usize,
        out: &mut Vec<usize>,
        dead: &mut HashSet<usize>,
    ) -> bool {
        if pos == word.len() {
            return true;
        }
        if dead.contains(&pos) {
            return false;
        }
        let map = if pos == 0 {
            &self.starts
        } else {
            &self.continuations
        };
        let rest = &word[pos..];
        let mut ends: Vec<usize> = rest.char_indices().map(|(i, c)| i + c.len_utf8()).collect();
        ends.reverse();
        for end in ends {
            if let Some(&id) = map.get(&rest[..end]) {
                out.push(id);
                if self.segment(word, pos + end, out, dead) {
                    return true;
                }
                out.pop();
            }
        }
        if pos > 0 {
            dead.insert(pos);
        }
        false
    }

    /// Splits a piece sequence (without `<eos>`) into words.
    pub fn words(&self, pieces: &[usize]) -> Vec<String> {
        let mut words: Vec<String> = Vec::new();
        for &p in pieces {
            match self.kinds[p] {
                PieceKind::WordStart => words.push(self.surfaces[p].clone()),
                PieceKind::Continuation => match words.last_mut() {
                    Some(w) => w.push_str(&self.surfaces[p]),
                    None => words.push(self.surfaces[p].clone()),
                },
                PieceKind::Eos => break,
            }
        }
        words
    }
}

/// Word-level constraints for one guess.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct WordConstraints {
    pub known: Vec<Option<String>>,
    /// Words known to be wrong, per position.
    pub incorrect: Vec<BTreeSet<String>>,
    /// Full guesses already made; never repeated.
    pub previous: BTreeSet<Vec<String>>,
}

impl WordConstraints {
    pub fn new(n_words: usize) -> Self {
        Self {
            known: vec![None; n_words],
            incorrect: vec![BTreeSet::new(); n_words],
            previous: BTreeSet::new(),
        }
    }

    pub fn from_view(view: &GuesserView) -> Self {
        let mut c = Self::new(view.slots.len());
        for (i, slot) in view.slots.iter().enumerate() {
            c.known[i] = slot.known().map(normalize_word);
        }
        for g in view.all_guesses() {
            if g.words.len() != c.known.len() {
                continue;
            }
            if let Some(correct) = &g.correct {
                for (i, (w, ok)) in g.words.iter().zip(correct).enumerate() {
                    if !ok {
                        c.incorrect[i].insert(normalize_word(w));
                    }
                }
            }
            c.previous
                .insert(g.words.iter().map(|w| normalize_word(w)).collect());
        }
        c
    }

    pub fn n_words(&self) -> usize {
        self.known.len()
    }

    pub fn with_known(mut self, position: usize, word: &str) -> Self {
        self.known[position] = Some(normalize_word(word));
        self
    }

    pub fn with_incorrect(mut self, position: usize, word: &str) -> Self {
        self.incorrect[position].insert(normalize_word(word));
        self
    }

    pub fn with_previous<S: AsRef<str>>(mut self, words: &[S]) -> Self {
        self.previous
            .insert(words.iter().map(|w| normalize_word(w.as_ref())).collect());
        self
    }

    /// Exact compliance of a finished word sequence.
    pub fn admits(&self, words: &[String]) -> bool {
        if words.len() != self.n_words() {
            return false;
        }
        let norm: Vec<String> = words.iter().map(|w| normalize_word(w)).collect();
        if self.previous.contains(&norm) {
            return false;
        }
        norm.iter().enumerate().all(|(i, w)| match &self.known[i] {
            Some(k) => k == w,
            None => !self.incorrect[i].contains(w),
        })
    }
}

#[derive(Debug)]
struct Compiled {
    known: Vec<Option<Vec<usize>>>,
    incorrect: Vec<BTreeSet<String>>,
}

/// Decoding progress under a fixed set of [`WordConstraints`].
#[derive(Debug, Clone)]
pub struct ConstraintState {
    compiled: Arc<Compiled>,
    emitted: Vec<usize>,
    /// Index of the word being generated.
    word_index: usize,
    /// Pieces of the current word so far.
    partial: Vec<usize>,
    partial_surface: String,
    finished: bool,
}

impl ConstraintState {
    pub fn new(
        constraints: &WordConstraints,
        tok: &TokenizerView,
    ) -> Result<Self, ConstraintError> {
        if constraints.n_words() == 0 {
            return Err(ConstraintError::NoWords);
        }
        let known = constraints
            .known
            .iter()
            .map(|k| {
                k.as_ref()
                    .map(|w| {
                        tok.tokenize_word(w)
                            .ok_or_else(|| ConstraintError::Untokenizable(w.clone()))
                    })
                    .transpose()
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            compiled: Arc::new(Compiled {
                known,
                incorrect: constraints.incorrect.clone(),
            }),
            emitted: Vec::new(),
            word_index: 0,
            partial: Vec::new(),
            partial_surface: String::new(),
            finished: false,
        })
    }

    pub fn n_words(&self) -> usize {
        self.compiled.known.len()
    }

    pub fn emitted(&self) -> &[usize] {
        &self.emitted
    }

    pub fn word_index(&self) -> usize {
        self.word_index
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    /// Whether the word in progress may end here.
    fn word_may_end(&self) -> bool {
        if self.partial.is_empty() {
            return false;
        }
        match &self.compiled.known[self.word_index] {
            Some(k) => *k == self.partial,
            None => !self.compiled.incorrect[self.word_index]
                .contains(&normalize_word(&self.partial_surface)),
        }
    }

    fn start_allowed(&self, next_word: usize, piece: usize, tok: &TokenizerView) -> bool {
        tok.is_word_start(piece)
            && match &self.compiled.known[next_word] {
                Some(k) => k[0] == piece,
                None => true,
            }
    }

    pub fn allows(&self, piece: usize, tok: &TokenizerView) -> bool {
        if self.finished || piece >= tok.len() {
            return false;
        }
        if self.partial.is_empty() {
            return self.start_allowed(0, piece, tok);
        }
        match tok.kind(piece) {
            PieceKind::Continuation => match &self.compiled.known[self.word_index] {
                Some(k) => {
                    k.get(self.partial.len()) == Some(&piece)
                        && k[..self.partial.len()] == self.partial[..]
                }
                None => true,
            },
            PieceKind::WordStart => {
                self.word_index + 1 < self.n_words()
                    && self.word_may_end()
                    && self.start_allowed(self.word_index + 1, piece, tok)
            }
            PieceKind::Eos => self.word_index + 1 == self.n_words() && self.word_may_end(),
        }
    }

    pub fn advance(&mut self, piece: usize, tok: &TokenizerView) -> Result<(), ConstraintError> {
        if piece >= tok.len() {
            return Err(ConstraintError::UnknownPiece(piece));
        }
        if !self.allows(piece, tok) {
            return Err(ConstraintError::Disallowed(piece));
        }
        self.emitted.push(piece);
        match tok.kind(piece) {
            PieceKind::Eos => self.finished = true,
            PieceKind::WordStart => {
                if !self.partial.is_empty() {
                    self.word_index += 1;
                }
                self.partial.clear();
                self.partial.push(piece);
                self.partial_surface = tok.surface(piece).to_string();
            }
            PieceKind::Continuation => {
                self.partial.push(piece);
                self.partial_surface.push_str(tok.surface(piece));
            }
        }
        Ok(())
    }

    /// Words emitted so far, including the one in progress.
    pub fn words(&self, tok: &TokenizerView) -> Vec<String> {
        tok.words(&self.emitted)
    }
}

/// Admissible pieces for the next step; all-false means the hypothesis is dead.
pub fn allowed_mask(state: &ConstraintState, tok: &TokenizerView) -> Vec<bool> {
    (0..tok.len()).map(|p| state.allows(p, tok)).collect()
}

/// Up to `k` guesses for the current drawing. Each guess is scored before
/// the next is requested, so words it reveals constrain later guesses.
pub fn guess_round(
    agent: &mut dyn GuesserAgent,
    state: &mut GameState,
    k: usize,
) -> Result<Vec<Guess>, DomainError> {
    let mut made = Vec::new();
    if state.turn != Turn::Guesser {
        return Ok(made);
    }
    while state.guesses.len() < state.drawings.len() {
        state.guesses.push(Vec::new());
    }
    for _ in 0..k {
        let Some(words) = agent.guess(&state.guesser_view()) else {
            break;
        };
        let (phrase, scored) = evaluate_guess(&state.phrase, &Guess::new(words))?;
        state.phrase = phrase;
        if let Some(round) = state.guesses.last_mut() {
            round.push(scored.clone());
        }
        made.push(scored);
        if state.phrase.is_complete() {
            break;
        }
    }
    Ok(made)
}
