use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{DrawingToken, QuantizationSpec, TokenKind};
use crate::domain::IconLibrary;

/// The full drawing-token vocabulary: icons in library order, then the
/// coordinate buckets of each kind, then `<eod>`.
#[derive(Debug, Clone)]
pub struct DrawingVocab {
    tokens: Vec<DrawingToken>,
    index: HashMap<DrawingToken, usize>,
}

impl DrawingVocab {
    pub fn new(library: &IconLibrary, spec: &QuantizationSpec) -> Self {
        let mut tokens: Vec<DrawingToken> = library
            .icons()
            .iter()
            .map(|i| DrawingToken::Icon(i.id.clone()))
            .collect();
        for kind in TokenKind::COORDINATES {
            tokens
                .extend((0..spec.buckets(kind)).filter_map(|k| DrawingToken::coordinate(kind, k)));
        }
        tokens.push(DrawingToken::End);
        let index = tokens
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect();
        Self { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[DrawingToken] {
        &self.tokens
    }

    pub fn get(&self, id: usize) -> Option<&DrawingToken> {
        self.tokens.get(id)
    }

    pub fn id_of(&self, token: &DrawingToken) -> Option<usize> {
        self.index.get(token).copied()
    }
}

/// Where generation is inside the six-token icon cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DrawingGrammarState {
    pub position_in_icon: u8,
    pub icons_emitted: usize,
    pub finished: bool,
}

impl DrawingGrammarState {
    /// Token kinds admissible next.
    pub fn allows(&self, kind: TokenKind) -> bool {
        if self.finished {
            return kind == TokenKind::End;
        }
        match self.position_in_icon {
            0 => kind == TokenKind::Icon || (kind == TokenKind::End && self.icons_emitted >= 1),
            p => TokenKind::COORDINATES[(p - 1) as usize] == kind,
        }
    }

    /// Moves past `token`; returns `false` (state unchanged) if it is not admissible.
    pub fn advance(&mut self, token: &DrawingToken) -> bool {
        if !self.allows(token.kind()) {
            return false;
        }
        if self.finished {
            return true;
        }
        match token.kind() {
            TokenKind::End => self.finished = true,
            TokenKind::Flip => {
                self.position_in_icon = 0;
                self.icons_emitted += 1;
            }
            _ => self.position_in_icon += 1,
        }
        true
    }
}

/// Admissible tokens for the next step. Never all-false: once the drawing
/// is finished only `<eod>` remains allowed, as padding.
pub fn grammar_mask(state: &DrawingGrammarState, vocab: &DrawingVocab) -> Vec<bool> {
    vocab
        .tokens()
        .iter()
        .map(|t| state.allows(t.kind()))
        .collect()
}
