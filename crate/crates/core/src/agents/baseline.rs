//! Reference drawer and guesser built on an [`AlignmentModel`].

use std::collections::BTreeSet;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::RngCore;

use super::alignment::AlignmentModel;
use super::{DrawerAgent, DrawingLikelihood, GuesserAgent};
use crate::codec::{DrawingToken, QuantizationSpec};
use crate::constraints::{
    constrained_beam_search, BeamConfig, FnOracle, PieceKind, TokenizerView, WordConstraints,
};
use crate::domain::{
    normalize_word, Drawing, GameState, GuesserView, IconLibrary, IconPlacement, Slot,
};

/// Draws the best-aligned icons for each unguessed content word, left to
/// right in phrase order.
#[derive(Debug, Clone)]
pub struct BaselineDrawer {
    model: Arc<AlignmentModel>,
    library: Arc<IconLibrary>,
    pub icons_per_word: usize,
    /// Icons at or below this similarity are never drawn.
    pub similarity_floor: f64,
    /// Softmax temperature used by `sample`.
    pub temperature: f64,
    /// Probability of ending the drawing after each icon (likelihood only).
    pub stop_probability: f64,
    pub spec: QuantizationSpec,
}

impl BaselineDrawer {
    pub fn new(model: Arc<AlignmentModel>, library: Arc<IconLibrary>) -> Self {
        Self {
            model,
            library,
            icons_per_word: 1,
            similarity_floor: 0.0,
            temperature: 1.0,
            stop_probability: 0.3,
            spec: QuantizationSpec::default(),
        }
    }

    /// Drawable icons for `word`, best first. Words the model cannot place
    /// fall back to an icon named like the word, if any.
    fn candidates(&self, word: &str) -> Vec<(String, f64)> {
        let c: Vec<_> = self
            .model
            .top_icons(word, usize::MAX)
            .into_iter()
            .filter(|(id, s)| {
                *s > self.similarity_floor
                    && self.library.contains(id)
                    && !self.library.is_arrow(id)
            })
            .collect();
        if !c.is_empty() {
            return c;
        }
        let word = normalize_word(word);
        self.library
            .icons()
            .iter()
            .find(|i| {
                !self.library.is_arrow(&i.id)
                    && (normalize_word(&i.id) == word || normalize_word(&i.name) == word)
            })
            .map(|i| vec![(i.id.clone(), 0.0)])
            .unwrap_or_default()
    }

    fn compose(
        &self,
        state: &GameState,
        mut pick: impl FnMut(Vec<(String, f64)>, usize) -> Vec<String>,
    ) -> Option<Drawing> {
        let words = state.phrase.words();
        let open: Vec<&str> = words
            .iter()
            .filter(|w| !w.is_revealed())
            .map(|w| w.text.as_str())
            .collect();
        let mut groups: Vec<Vec<String>> = Vec::new();
        if open.is_empty() {
            // everything guessed: one icon to confirm
            let first = words.iter().filter(|w| !w.is_stopword).find_map(|w| {
                let c = self.candidates(&w.text);
                (!c.is_empty()).then(|| pick(c, 1))
            })?;
            groups.push(first);
        } else {
            for w in open {
                let c = self.candidates(w);
                if c.is_empty() {
                    log::debug!("no icon above the similarity floor for `{w}`");
                    continue;
                }
                groups.push(pick(c, self.icons_per_word));
            }
        }
        let m: usize = groups.iter().map(Vec::len).sum();
        if m == 0 {
            return None;
        }
        let mut placements = Vec::with_capacity(m + 1);
        for (j, id) in groups.into_iter().flatten().enumerate() {
            placements.push(IconPlacement::at(id, (j + 1) as f64 / (m + 1) as f64, 0.5));
        }
        let revising = !state.drawings.is_empty() && !state.phrase.is_complete();
        if let (true, Some(arrow)) = (revising, self.library.arrow_ids().first()) {
            // pointing down at the leftmost group
            let mut a = IconPlacement::at(arrow.clone(), placements[0].x, 0.25);
            a.rotation = 90.0;
            placements.push(a);
        }
        Some(Drawing::new(placements, state.drawings.len()))
    }
}

impl DrawerAgent for BaselineDrawer {
    fn draw(&mut self, state: &GameState) -> Option<Drawing> {
        self.compose(state, |c, k| {
            c.into_iter().take(k).map(|(id, _)| id).collect()
        })
    }

    fn sample(&mut self, state: &GameState, rng: &mut dyn RngCore) -> Option<Drawing> {
        let t = self.temperature.max(1e-6);
        self.compose(state, |mut c, k| {
            let mut out = Vec::new();
            while out.len() < k && !c.is_empty() {
                let top = c[0].1;
                let weights: Vec<f64> = c.iter().map(|(_, s)| ((s - top) / t).exp()).collect();
                let i = WeightedIndex::new(&weights)
                    .map(|d| d.sample(rng))
                    .unwrap_or(0);
                out.push(c.remove(i).0);
            }
            out
        })
    }
}

impl DrawingLikelihood for BaselineDrawer {
    fn token_format(&self) -> String {
        self.spec.format_id()
    }

    /// Icons follow a softmax over the library of each icon's best
    /// similarity to an unguessed word; the drawing stops after each icon
    /// with `stop_probability`; pose buckets are uniform.
    fn token_log_likelihoods(&self, state: &GameState, tokens: &[DrawingToken]) -> Vec<f64> {
        let open: Vec<&str> = state
            .phrase
            .words()
            .iter()
            .filter(|w| !w.is_revealed())
            .map(|w| w.text.as_str())
            .collect();
        let t = self.temperature.max(1e-6);
        let logits: Vec<f64> = self
            .library
            .icons()
            .iter()
            .map(|icon| {
                open.iter()
                    .filter_map(|w| self.model.similarity(&icon.id, w))
                    .fold(0.0_f64, f64::max)
                    / t
            })
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
        let stop = self.stop_probability.clamp(1e-9, 1.0 - 1e-9);
        let mut icons_seen = 0usize;
        tokens
            .iter()
            .map(|tok| match tok {
                DrawingToken::Icon(id) => {
                    let lp = self
                        .library
                        .position(id)
                        .map_or(f64::NEG_INFINITY, |i| logits[i] - lse);
                    let cont = if icons_seen > 0 {
                        (1.0 - stop).ln()
                    } else {
                        0.0
                    };
                    icons_seen += 1;
                    lp + cont
                }
                DrawingToken::End => {
                    if icons_seen > 0 {
                        stop.ln()
                    } else {
                        f64::NEG_INFINITY
                    }
                }
                other => -(self.spec.buckets(other.kind()) as f64).ln(),
            })
            .collect()
    }
}

/// Scores each hidden slot's candidates by icon similarity plus a log
/// frequency prior, then runs the constrained beam search over whole words.
#[derive(Debug, Clone)]
pub struct BaselineGuesser {
    model: Arc<AlignmentModel>,
    arrows: BTreeSet<String>,
    pub beam: BeamConfig,
    pub prior_weight: f64,
    /// Subtracted once per earlier use of the same word in the guess.
    pub repeat_penalty: f64,
    /// Width of the left-to-right slot/icon correspondence; `None` weighs
    /// every icon equally for every slot.
    pub position_width: Option<f64>,
}

impl BaselineGuesser {
    pub fn new(model: Arc<AlignmentModel>, library: &IconLibrary) -> Self {
        Self {
            model,
            arrows: library.arrow_ids().iter().cloned().collect(),
            beam: BeamConfig {
                boost: 0.0,
                ..BeamConfig::default()
            },
            prior_weight: 1.0,
            repeat_penalty: 2.0,
            position_width: Some(0.3),
        }
    }

    /// Best guess for `view`, with its search score.
    pub fn best(&self, view: &GuesserView) -> Option<(Vec<String>, f64)> {
        let drawing = view.latest_drawing()?;
        let mut icons: Vec<&IconPlacement> = drawing
            .placements
            .iter()
            .filter(|p| !self.arrows.contains(&p.icon_id))
            .collect();
        icons.sort_by(|a, b| a.x.total_cmp(&b.x));
        let words = self.model.words();
        let mut vocab: Vec<String> = words.to_vec();
        vocab.extend(
            view.slots
                .iter()
                .filter_map(|s| s.known().map(str::to_string)),
        );
        let tok = TokenizerView::whole_words(&vocab).ok()?;

        // per piece: model word index, if any
        let piece_word: Vec<Option<usize>> = (0..tok.len())
            .map(|p| match tok.kind(p) {
                PieceKind::WordStart => words.iter().position(|w| w == tok.surface(p)),
                _ => None,
            })
            .collect();
        let sims: Vec<Vec<f64>> = icons
            .iter()
            .map(|ic| {
                words
                    .iter()
                    .map(|w| self.model.similarity(&ic.icon_id, w).unwrap_or(0.0))
                    .collect()
            })
            .collect();
        let total: u64 = words.iter().map(|w| self.model.word_count(w)).sum();
        let prior: Vec<f64> = words
            .iter()
            .map(|w| {
                ((self.model.word_count(w) + 1) as f64 / (total + words.len() as u64) as f64).ln()
            })
            .collect();

        let hidden: Vec<usize> = view
            .slots
            .iter()
            .enumerate()
            .filter(|(_, s)| **s == Slot::Hidden)
            .map(|(i, _)| i)
            .collect();
        let m = icons.len();
        let weights: Vec<Vec<f64>> = (0..view.slots.len())
            .map(|pos| {
                let h = hidden.iter().position(|&p| p == pos);
                (0..m)
                    .map(|i| match (self.position_width, h) {
                        (Some(width), Some(h)) => {
                            let u = (h as f64 + 0.5) / hidden.len() as f64;
                            let v = (i as f64 + 0.5) / m as f64;
                            (-0.5 * ((u - v) / width).powi(2)).exp()
                        }
                        _ => 1.0,
                    })
                    .collect()
            })
            .collect();

        let oracle = FnOracle::new(tok.len(), |prefix: &[usize]| {
            let pos = prefix.len().min(view.slots.len().saturating_sub(1));
            (0..tok.len())
                .map(|p| match piece_word[p] {
                    Some(w) => {
                        let evidence: f64 = (0..m).map(|i| weights[pos][i] * sims[i][w]).sum();
                        let repeats = prefix.iter().filter(|&&q| q == p).count() as f64;
                        evidence + self.prior_weight * prior[w] - self.repeat_penalty * repeats
                    }
                    None => 0.0,
                })
                .collect()
        });
        let constraints = WordConstraints::from_view(view);
        let best = constrained_beam_search(&oracle, &constraints, &tok, &self.beam).ok()?;
        best.into_iter().next().map(|g| (g.words, g.score))
    }
}

impl GuesserAgent for BaselineGuesser {
    fn guess(&mut self, view: &GuesserView) -> Option<Vec<String>> {
        self.best(view).map(|(w, _)| w)
    }
}
