//! Icon/word embeddings learned contrastively from game co-occurrence.

use std::collections::{BTreeSet, HashMap};
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AgentError;
use crate::domain::{normalize_word, GameRecord};

const MAGIC: &[u8; 8] = b"ICALIGN\0";
pub const ALIGN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignConfig {
    pub dim: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub margin: f64,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            epochs: 30,
            negatives: 5,
            learning_rate: 0.05,
            margin: 1.0,
            init_scale: 0.1,
            seed: 0,
        }
    }
}

/// Trained embeddings; similarity is the dot product.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentModel {
    dim: usize,
    words: Vec<String>,
    icons: Vec<String>,
    word_vecs: Vec<f64>,
    icon_vecs: Vec<f64>,
    /// Content-word frequencies in the training data.
    word_counts: Vec<u64>,
    word_index: HashMap<String, usize>,
    icon_index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    schema_version: u32,
    dim: usize,
    words: Vec<String>,
    icons: Vec<String>,
    word_counts: Vec<u64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl AlignmentModel {
    pub fn new(
        dim: usize,
        words: Vec<String>,
        icons: Vec<String>,
        word_vecs: Vec<f64>,
        icon_vecs: Vec<f64>,
        word_counts: Vec<u64>,
    ) -> Result<Self, AgentError> {
        if dim == 0
            || word_vecs.len() != words.len() * dim
            || icon_vecs.len() != icons.len() * dim
            || word_counts.len() != words.len()
        {
            return Err(AgentError::Format("embedding table shapes disagree".into()));
        }
        if word_vecs.iter().chain(&icon_vecs).any(|x| !x.is_finite()) {
            return Err(AgentError::Format("non-finite embedding entry".into()));
        }
        let word_index: HashMap<String, usize> = words
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, w)| (w, i))
            .collect();
        let icon_index: HashMap<String, usize> = icons
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, w)| (w, i))
            .collect();
        if word_index.len() != words.len() || icon_index.len() != icons.len() {
            return Err(AgentError::Format("duplicate vocabulary entry".into()));
        }
        Ok(Self {
            dim,
            words,
            icons,
            word_vecs,
            icon_vecs,
            word_counts,
            word_index,
            icon_index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn icons(&self) -> &[String] {
        &self.icons
    }

    pub fn word_count(&self, word: &str) -> u64 {
        self.word_index
            .get(&normalize_word(word))
            .map_or(0, |&i| self.word_counts[i])
    }

    pub fn word_vec(&self, word: &str) -> Option<&[f64]> {
        let i = *self.word_index.get(&normalize_word(word))?;
        Some(&self.word_vecs[i * self.dim..(i + 1) * self.dim])
    }

    pub fn icon_vec(&self, icon: &str) -> Option<&[f64]> {
        let i = *self.icon_index.get(icon)?;
        Some(&self.icon_vecs[i * self.dim..(i + 1) * self.dim])
    }

    pub fn similarity(&self, icon: &str, word: &str) -> Option<f64> {
        Some(dot(self.icon_vec(icon)?, self.word_vec(word)?))
    }

    /// Cosine similarity of two word embeddings.
    pub fn word_cosine(&self, a: &str, b: &str) -> Option<f64> {
        let (u, v) = (self.word_vec(a)?, self.word_vec(b)?);
        let n = dot(u, u).sqrt() * dot(v, v).sqrt();
        (n > 0.0).then(|| dot(u, v) / n)
    }

    /// Words ranked by similarity to `icon`, best first; ties by vocabulary order.
    pub fn top_words(&self, icon: &str, k: usize) -> Vec<(String, f64)> {
        let Some(v) = self.icon_vec(icon) else {
            return Vec::new();
        };
        let mut scored: Vec<(usize, f64)> = (0..self.words.len())
            .map(|i| (i, dot(v, &self.word_vecs[i * self.dim..(i + 1) * self.dim])))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored
            .into_iter()
            .take(k)
            .map(|(i, s)| (self.words[i].clone(), s))
            .collect()
    }

    /// Icons ranked by similarity to `word`, best first; ties by icon order.
    pub fn top_icons(&self, word: &str, k: usize) -> Vec<(String, f64)> {
        let Some(v) = self.word_vec(word) else {
            return Vec::new();
        };
        let mut scored: Vec<(usize, f64)> = (0..self.icons.len())
            .map(|i| (i, dot(v, &self.icon_vecs[i * self.dim..(i + 1) * self.dim])))
            .collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored
            .into_iter()
            .take(k)
            .map(|(i, s)| (self.icons[i].clone(), s))
            .collect()
    }

    /// `.align` layout: magic, u32 schema version, u32 header length, JSON
    /// header, then little-endian f64 word rows followed by icon rows.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&Header {
            schema_version: ALIGN_SCHEMA_VERSION,
            dim: self.dim,
            words: self.words.clone(),
            icons: self.icons.clone(),
            word_counts: self.word_counts.clone(),
        })
        .expect("header serializes");
        let mut out = Vec::with_capacity(
            16 + header.len() + 8 * (self.word_vecs.len() + self.icon_vecs.len()),
        );
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&ALIGN_SCHEMA_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for x in self.word_vecs.iter().chain(&self.icon_vecs) {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, AgentError> {
        let bad = |m: &str| AgentError::Format(m.to_string());
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("not an .align file"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != ALIGN_SCHEMA_VERSION {
            return Err(AgentError::Format(format!(
                "unsupported schema version {version}"
            )));
        }
        let hlen = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let header_bytes = bytes
            .get(16..16 + hlen)
            .ok_or_else(|| bad("truncated header"))?;
        let h: Header =
            serde_json::from_slice(header_bytes).map_err(|e| AgentError::Format(e.to_string()))?;
        if h.schema_version != version {
            return Err(bad("header version disagrees with preamble"));
        }
        let body = &bytes[16 + hlen..];
        let n = (h.words.len() + h.icons.len()) * h.dim;
        if body.len() != n * 8 {
            return Err(bad("embedding payload has the wrong length"));
        }
        let floats: Vec<f64> = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let split = h.words.len() * h.dim;
        Self::new(
            h.dim,
            h.words,
            h.icons,
            floats[..split].to_vec(),
            floats[split..].to_vec(),
            h.word_counts,
        )
    }

    pub fn save(&self, path: &Path) -> Result<(), AgentError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, AgentError> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }
}

/// One (drawing, phrase) training pair, as vocabulary indices.
struct Pair {
    icons: Vec<usize>,
    words: Vec<usize>,
}

pub struct TrainedAlignment {
    pub model: AlignmentModel,
    /// Mean hinge loss per epoch.
    pub epoch_losses: Vec<f64>,
}

fn mean_rows(table: &[f64], rows: &[usize], dim: usize) -> Vec<f64> {
    let mut m = vec![0.0; dim];
    for &r in rows {
        for (a, b) in m.iter_mut().zip(&table[r * dim..(r + 1) * dim]) {
            *a += b;
        }
    }
    let n = rows.len() as f64;
    m.iter_mut().for_each(|x| *x /= n);
    m
}

/// Margin-ranking training: a drawing should score higher with its own
/// phrase than with randomly drawn phrases from other games, where the score
/// is the mean dot product over all icon/word pairs.
pub fn train_alignment(
    corpus: &[GameRecord],
    config: &AlignConfig,
) -> Result<TrainedAlignment, AgentError> {
    if config.dim == 0 || config.negatives == 0 || !(config.learning_rate > 0.0) {
        return Err(AgentError::InvalidConfig(
            "dim, negatives and learning rate must be positive".into(),
        ));
    }
    let mut words = BTreeSet::new();
    let mut icons = BTreeSet::new();
    for g in corpus {
        for w in g.phrase.words().iter().filter(|w| !w.is_stopword) {
            words.insert(normalize_word(&w.text));
        }
        for d in g.drawings() {
            for p in &d.placements {
                icons.insert(p.icon_id.clone());
            }
        }
    }
    let words: Vec<String> = words.into_iter().collect();
    let icons: Vec<String> = icons.into_iter().collect();
    let wi: HashMap<&str, usize> = words
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();
    let ii: HashMap<&str, usize> = icons
        .iter()
        .enumerate()
        .map(|(i, w)| (w.as_str(), i))
        .collect();

    let mut counts = vec![0u64; words.len()];
    let mut phrases: Vec<Vec<usize>> = Vec::new();
    let mut pairs: Vec<Pair> = Vec::new();
    for g in corpus {
        let ws: Vec<usize> = g
            .phrase
            .words()
            .iter()
            .filter(|w| !w.is_stopword)
            .map(|w| wi[normalize_word(&w.text).as_str()])
            .collect();
        for &w in &ws {
            counts[w] += 1;
        }
        let gi = phrases.len();
        phrases.push(ws.clone());
        for d in g.drawings() {
            if !d.is_empty() {
                pairs.push(Pair {
                    icons: d
                        .placements
                        .iter()
                        .map(|p| ii[p.icon_id.as_str()])
                        .collect(),
                    words: vec![gi],
                });
            }
        }
    }
    if pairs.is_empty() || phrases.len() < 2 {
        return Err(AgentError::EmptyCorpus);
    }

    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let s = config.init_scale;
    let mut wv: Vec<f64> = (0..words.len() * dim)
        .map(|_| rng.gen_range(-s..s))
        .collect();
    let mut iv: Vec<f64> = (0..icons.len() * dim)
        .map(|_| rng.gen_range(-s..s))
        .collect();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let lr = config.learning_rate;

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for &pi in &order {
            let pair = &pairs[pi];
            let own = pair.words[0];
            let pos_words = &phrases[own];
            let e = mean_rows(&iv, &pair.icons, dim);
            let v_pos = mean_rows(&wv, pos_words, dim);
            let s_pos = dot(&e, &v_pos);
            for _ in 0..config.negatives {
                let mut neg = rng.gen_range(0..phrases.len() - 1);
                if neg >= own {
                    neg += 1;
                }
                let neg_words = &phrases[neg];
                if neg_words == pos_words {
                    continue;
                }
                let v_neg = mean_rows(&wv, neg_words, dim);
                let loss = config.margin - s_pos + dot(&e, &v_neg);
                if loss <= 0.0 {
                    continue;
                }
                total += loss;
                // d loss / d icon_i = (v_neg - v_pos) / |I| per occurrence
                let ni = pair.icons.len() as f64;
                for &i in &pair.icons {
                    for k in 0..dim {
                        iv[i * dim + k] -= lr * (v_neg[k] - v_pos[k]) / ni;
                    }
                }
                let np = pos_words.len() as f64;
                for &w in pos_words {
                    for k in 0..dim {
                        wv[w * dim + k] += lr * e[k] / np;
                    }
                }
                let nn = neg_words.len() as f64;
                for &w in neg_words {
                    for k in 0..dim {
                        wv[w * dim + k] -= lr * e[k] / nn;
                    }
                }
            }
        }
        epoch_losses.push(total / (pairs.len() * config.negatives) as f64);
    }
    let model = AlignmentModel::new(dim, words, icons, wv, iv, counts)?;
    Ok(TrainedAlignment {
        model,
        epoch_losses,
    })
}

/// Best phrase position for every icon of every drawing, considering
/// content words only; ties go to the earlier position. `None` when the icon
/// or all content words are unknown to the model.
pub fn align_game(model: &AlignmentModel, record: &GameRecord) -> Vec<Vec<Option<usize>>> {
    let content: Vec<(usize, &str)> = record
        .phrase
        .words()
        .iter()
        .enumerate()
        .filter(|(_, w)| !w.is_stopword)
        .map(|(i, w)| (i, w.text.as_str()))
        .collect();
    record
        .drawings()
        .map(|d| {
            d.placements
                .iter()
                .map(|p| {
                    let mut best: Option<(usize, f64)> = None;
                    for &(pos, w) in &content {
                        if let Some(s) = model.similarity(&p.icon_id, w) {
                            if best.map_or(true, |(_, b)| s > b) {
                                best = Some((pos, s));
                            }
                        }
                    }
                    best.map(|(pos, _)| pos)
                })
                .collect()
        })
        .collect()
}
