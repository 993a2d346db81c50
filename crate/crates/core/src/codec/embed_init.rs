//! Initial embeddings for the drawing tokens added to a language model.
//!
//! Icon tokens start at the mean embedding of their name's wordpieces; the
//! k-th bucket of every coordinate kind starts at the embedding of the
//! numeral `k + 1`. `<eod>` is left to the model's own end-of-sequence row.

use super::{CodecError, DrawingToken, QuantizationSpec, TokenKind};
use crate::domain::IconLibrary;

/// Access to a pretrained model's wordpiece embedding table.
pub trait WordpieceEmbedder {
    fn dim(&self) -> usize;
    /// Wordpiece segmentation of `text`.
    fn wordpieces(&self, text: &str) -> Vec<String>;
    fn embed(&self, piece: &str) -> Vec<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbeddings {
    pub dim: usize,
    pub entries: Vec<(DrawingToken, Vec<f64>)>,
}

impl TokenEmbeddings {
    pub fn get(&self, token: &DrawingToken) -> Option<&[f64]> {
        self.entries
            .iter()
            .find(|(t, _)| t == token)
            .map(|(_, v)| v.as_slice())
    }
}

fn mean_embedding(embedder: &dyn WordpieceEmbedder, text: &str) -> Option<Vec<f64>> {
    let pieces = embedder.wordpieces(text);
    if pieces.is_empty() {
        return None;
    }
    let mut acc = vec![0.0; embedder.dim()];
    for p in &pieces {
        for (a, v) in acc.iter_mut().zip(embedder.embed(p)) {
            *a += v;
        }
    }
    let n = pieces.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    Some(acc)
}

pub fn init_token_embeddings(
    library: &IconLibrary,
    spec: &QuantizationSpec,
    embedder: &dyn WordpieceEmbedder,
) -> Result<TokenEmbeddings, CodecError> {
    spec.validate()?;
    let mut entries = Vec::new();
    for icon in library.icons() {
        let name = icon.name.trim();
        let v = if name.is_empty() {
            None
        } else {
            mean_embedding(embedder, name)
        };
        let v = v.ok_or_else(|| CodecError::EmptyIconName(icon.id.clone()))?;
        entries.push((DrawingToken::Icon(icon.id.clone()), v));
    }
    for kind in TokenKind::COORDINATES {
        for k in 0..spec.buckets(kind) {
            let numeral = (k + 1).to_string();
            let v = mean_embedding(embedder, &numeral)
                .ok_or_else(|| CodecError::BadToken(numeral.clone()))?;
            entries.extend(DrawingToken::coordinate(kind, k).map(|t| (t, v)));
        }
    }
    Ok(TokenEmbeddings {
        dim: embedder.dim(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;
    use crate::domain::Icon;

    /// Splits on spaces; numerals of several digits are one piece.
    struct Table(HashMap<String, Vec<f64>>);

    impl WordpieceEmbedder for Table {
        fn dim(&self) -> usize {
            2
        }
        fn wordpieces(&self, text: &str) -> Vec<String> {
            text.split_whitespace().map(str::to_string).collect()
        }
        fn embed(&self, piece: &str) -> Vec<f64> {
            self.0.get(piece).cloned().unwrap_or_else(|| {
                let n: f64 = piece.parse().unwrap_or(0.0);
                vec![n, -n]
            })
        }
    }

    fn table() -> Table {
        Table(HashMap::from([
            ("dog".to_string(), vec![1.0, 2.0]),
            ("palm".to_string(), vec![0.5, -1.0]),
            ("tree".to_string(), vec![1.5, 4.0]),
        ]))
    }

    #[test]
    fn icons_and_buckets() {
        let lib = IconLibrary::new(
            vec![Icon::new("dog", "dog"), Icon::new("palm_tree", "palm tree")],
            vec![],
        )
        .unwrap();
        let e = init_token_embeddings(&lib, &QuantizationSpec::default(), &table()).unwrap();
        assert_eq!(
            e.get(&DrawingToken::Icon("dog".into())).unwrap(),
            [1.0, 2.0]
        );
        assert_eq!(
            e.get(&DrawingToken::Icon("palm_tree".into())).unwrap(),
            [1.0, 1.5]
        );
        assert_eq!(e.get(&DrawingToken::X(0)).unwrap(), [1.0, -1.0]);
        assert_eq!(e.get(&DrawingToken::X(31)).unwrap(), [32.0, -32.0]);
        assert_eq!(e.get(&DrawingToken::Flip(1)).unwrap(), [2.0, -2.0]);
        assert_eq!(e.entries.len(), 2 + 32 + 16 + 11 + 8 + 2);
        assert!(e.get(&DrawingToken::End).is_none());
    }

    #[test]
    fn name_without_pieces_is_rejected() {
        struct Empty;
        impl WordpieceEmbedder for Empty {
            fn dim(&self) -> usize {
                1
            }
            fn wordpieces(&self, _: &str) -> Vec<String> {
                vec![]
            }
            fn embed(&self, _: &str) -> Vec<f64> {
                vec![0.0]
            }
        }
        let lib = IconLibrary::new(vec![Icon::new("dog", "dog")], vec![]).unwrap();
        assert_eq!(
            init_token_embeddings(&lib, &QuantizationSpec::default(), &Empty).unwrap_err(),
            CodecError::EmptyIconName("dog".into())
        );
    }
}
