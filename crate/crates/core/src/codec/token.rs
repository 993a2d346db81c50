use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::CodecError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Icon,
    X,
    Y,
    Scale,
    Rotation,
    Flip,
    End,
}

impl TokenKind {
    /// The five pose kinds, in sequence order.
    pub const COORDINATES: [TokenKind; 5] = [
        TokenKind::X,
        TokenKind::Y,
        TokenKind::Scale,
        TokenKind::Rotation,
        TokenKind::Flip,
    ];
}

/// One drawing token. Wire form: `<icon:ID>`, `<x_K>`, `<y_K>`, `<s_K>`,
/// `<r_K>`, `<f_K>` or `<eod>`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum DrawingToken {
    Icon(String),
    X(usize),
    Y(usize),
    Scale(usize),
    Rotation(usize),
    Flip(usize),
    End,
}

impl DrawingToken {
    pub fn kind(&self) -> TokenKind {
        match self {
            DrawingToken::Icon(_) => TokenKind::Icon,
            DrawingToken::X(_) => TokenKind::X,
            DrawingToken::Y(_) => TokenKind::Y,
            DrawingToken::Scale(_) => TokenKind::Scale,
            DrawingToken::Rotation(_) => TokenKind::Rotation,
            DrawingToken::Flip(_) => TokenKind::Flip,
            DrawingToken::End => TokenKind::End,
        }
    }

    pub fn coordinate(kind: TokenKind, bucket: usize) -> Option<Self> {
        Some(match kind {
            TokenKind::X => DrawingToken::X(bucket),
            TokenKind::Y => DrawingToken::Y(bucket),
            TokenKind::Scale => DrawingToken::Scale(bucket),
            TokenKind::Rotation => DrawingToken::Rotation(bucket),
            TokenKind::Flip => DrawingToken::Flip(bucket),
            TokenKind::Icon | TokenKind::End => return None,
        })
    }

    pub fn bucket(&self) -> Option<usize> {
        match self {
            DrawingToken::X(v)
            | DrawingToken::Y(v)
            | DrawingToken::Scale(v)
            | DrawingToken::Rotation(v)
            | DrawingToken::Flip(v) => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Display for DrawingToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DrawingToken::Icon(id) => write!(f, "<icon:{id}>"),
            DrawingToken::X(k) => write!(f, "<x_{k}>"),
            DrawingToken::Y(k) => write!(f, "<y_{k}>"),
            DrawingToken::Scale(k) => write!(f, "<s_{k}>"),
            DrawingToken::Rotation(k) => write!(f, "<r_{k}>"),
            DrawingToken::Flip(k) => write!(f, "<f_{k}>"),
            DrawingToken::End => f.write_str("<eod>"),
        }
    }
}

impl FromStr for DrawingToken {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || CodecError::BadToken(s.to_string());
        let inner = s
            .strip_prefix('<')
            .and_then(|r| r.strip_suffix('>'))
            .ok_or_else(bad)?;
        if inner == "eod" {
            return Ok(DrawingToken::End);
        }
        if let Some(id) = inner.strip_prefix("icon:") {
            if id.is_empty() || id.contains(['<', '>']) {
                return Err(bad());
            }
            return Ok(DrawingToken::Icon(id.to_string()));
        }
        let (prefix, num) = inner.split_once('_').ok_or_else(bad)?;
        if num.is_empty()
            || !num.bytes().all(|b| b.is_ascii_digit())
            || (num.len() > 1 && num.starts_with('0'))
        {
            return Err(bad());
        }
        let k: usize = num.parse().map_err(|_| bad())?;
        match prefix {
            "x" => Ok(DrawingToken::X(k)),
            "y" => Ok(DrawingToken::Y(k)),
            "s" => Ok(DrawingToken::Scale(k)),
            "r" => Ok(DrawingToken::Rotation(k)),
            "f" => Ok(DrawingToken::Flip(k)),
            _ => Err(bad()),
        }
    }
}

impl From<DrawingToken> for String {
    fn from(t: DrawingToken) -> Self {
        t.to_string()
    }
}

impl TryFrom<String> for DrawingToken {
    type Error = CodecError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Parses a whitespace-separated token string.
pub fn parse_tokens(text: &str) -> Result<Vec<DrawingToken>, CodecError> {
    text.split_whitespace().map(str::parse).collect()
}
