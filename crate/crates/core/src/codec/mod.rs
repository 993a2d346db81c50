//! Six-token-per-icon drawing sequences.
//!
//! Each placement becomes `[icon, x, y, scale, rotation, flip]` and the
//! sequence ends with `<eod>`. Continuous pose values are bucketed by
//! [`QuantizationSpec`]; decoding puts every value at its bucket centre, so
//! `encode(decode(t)) == t` for any well-formed `t`.

mod embed_init;
mod grammar;
mod token;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Drawing, IconLibrary, IconPlacement};

pub use embed_init::{init_token_embeddings, TokenEmbeddings, WordpieceEmbedder};
pub use grammar::{grammar_mask, DrawingGrammarState, DrawingVocab};
pub use token::{parse_tokens, DrawingToken, TokenKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("value {0} is not finite")]
    NonFinite(f64),
    #[error("invalid quantization: {0}")]
    InvalidSpec(String),
    #[error("bucket {index} out of range for {buckets} buckets")]
    BucketOutOfRange { index: usize, buckets: usize },
    #[error("cannot encode an empty drawing")]
    EmptyDrawing,
    #[error("unknown icon `{0}`")]
    UnknownIcon(String),
    #[error("icon `{0}` has no name wordpieces")]
    EmptyIconName(String),
    #[error("bad token `{0}`")]
    BadToken(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Malformed token sequence, with the offending position.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at position {position}: expected {expected}, found {}", .found.as_deref().unwrap_or("end of input"))]
pub struct ParseError {
    pub position: usize,
    pub expected: String,
    pub found: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Linear,
    Log,
}

impl Transform {
    fn apply(self, v: f64) -> f64 {
        match self {
            Transform::Linear => v,
            Transform::Log => v.ln(),
        }
    }

    fn invert(self, v: f64) -> f64 {
        match self {
            Transform::Linear => v,
            Transform::Log => v.exp(),
        }
    }
}

/// Bucket index of `value` among `buckets` equal slices of `[lo, hi]` in
/// transformed space. Out-of-range values clamp to the end buckets.
pub fn quantize(
    value: f64,
    buckets: usize,
    lo: f64,
    hi: f64,
    transform: Transform,
) -> Result<usize, CodecError> {
    check_axis(buckets, lo, hi, transform)?;
    if !value.is_finite() {
        return Err(CodecError::NonFinite(value));
    }
    // non-positive values sit below any log range
    if transform == Transform::Log && value <= 0.0 {
        return Ok(0);
    }
    let (tl, th) = (transform.apply(lo), transform.apply(hi));
    let frac = ((transform.apply(value) - tl) / (th - tl)).clamp(0.0, 1.0);
    Ok(((frac * buckets as f64).floor() as usize).min(buckets - 1))
}

/// Centre value of bucket `index`.
pub fn dequantize(
    index: usize,
    buckets: usize,
    lo: f64,
    hi: f64,
    transform: Transform,
) -> Result<f64, CodecError> {
    check_axis(buckets, lo, hi, transform)?;
    if index >= buckets {
        return Err(CodecError::BucketOutOfRange { index, buckets });
    }
    let (tl, th) = (transform.apply(lo), transform.apply(hi));
    Ok(transform.invert(tl + (index as f64 + 0.5) / buckets as f64 * (th - tl)))
}

fn check_axis(buckets: usize, lo: f64, hi: f64, transform: Transform) -> Result<(), CodecError> {
    if buckets < 2 {
        return Err(CodecError::InvalidSpec(format!("{buckets} buckets")));
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(CodecError::InvalidSpec(format!("range [{lo}, {hi}]")));
    }
    if transform == Transform::Log && lo <= 0.0 {
        return Err(CodecError::InvalidSpec("log range must be positive".into()));
    }
    Ok(())
}

/// Rotation sectors are centred on multiples of `360 / buckets`, so bucket 0
/// covers `[-w/2, w/2)` around zero.
pub fn quantize_rotation(degrees: f64, buckets: usize) -> Result<usize, CodecError> {
    if buckets < 2 {
        return Err(CodecError::InvalidSpec(format!("{buckets} buckets")));
    }
    if !degrees.is_finite() {
        return Err(CodecError::NonFinite(degrees));
    }
    let width = 360.0 / buckets as f64;
    let shifted = (degrees + width / 2.0).rem_euclid(360.0);
    Ok(((shifted / width).floor() as usize) % buckets)
}

pub fn dequantize_rotation(index: usize, buckets: usize) -> Result<f64, CodecError> {
    if buckets < 2 {
        return Err(CodecError::InvalidSpec(format!("{buckets} buckets")));
    }
    if index >= buckets {
        return Err(CodecError::BucketOutOfRange { index, buckets });
    }
    Ok(index as f64 * 360.0 / buckets as f64)
}

/// Bucket counts per pose dimension and the scale range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationSpec {
    pub x_buckets: usize,
    pub y_buckets: usize,
    pub scale_buckets: usize,
    pub rotation_buckets: usize,
    pub flip_buckets: usize,
    pub scale_min: f64,
    pub scale_max: f64,
}

impl Default for QuantizationSpec {
    fn default() -> Self {
        Self {
            x_buckets: 32,
            y_buckets: 16,
            scale_buckets: 11,
            rotation_buckets: 8,
            flip_buckets: 2,
            scale_min: 1.0 / 8.0,
            scale_max: 8.0,
        }
    }
}

impl QuantizationSpec {
    pub fn validate(&self) -> Result<(), CodecError> {
        for (name, n) in [
            ("x", self.x_buckets),
            ("y", self.y_buckets),
            ("scale", self.scale_buckets),
            ("rotation", self.rotation_buckets),
            ("flip", self.flip_buckets),
        ] {
            if n < 2 {
                return Err(CodecError::InvalidSpec(format!(
                    "{name} needs at least 2 buckets"
                )));
            }
        }
        if self.flip_buckets != 2 {
            return Err(CodecError::InvalidSpec(
                "flip is a boolean: exactly 2 buckets".into(),
            ));
        }
        if !(self.scale_min > 0.0
            && self.scale_min < 1.0
            && self.scale_max > 1.0
            && self.scale_max.is_finite())
        {
            return Err(CodecError::InvalidSpec(
                "scale range must satisfy 0 < min < 1 < max".into(),
            ));
        }
        Ok(())
    }

    /// Names the token format produced by creation-order encoding under
    /// this spec. Likelihoods are only comparable within one format.
    pub fn format_id(&self) -> String {
        format!(
            "icon6/creation/x{}-y{}-s{}-r{}-f{}/scale{}..{}",
            self.x_buckets,
            self.y_buckets,
            self.scale_buckets,
            self.rotation_buckets,
            self.flip_buckets,
            self.scale_min,
            self.scale_max
        )
    }

    pub fn buckets(&self, kind: TokenKind) -> usize {
        match kind {
            TokenKind::X => self.x_buckets,
            TokenKind::Y => self.y_buckets,
            TokenKind::Scale => self.scale_buckets,
            TokenKind::Rotation => self.rotation_buckets,
            TokenKind::Flip => self.flip_buckets,
            TokenKind::Icon | TokenKind::End => 0,
        }
    }

    /// Width of one bucket in the dimension's own (transformed) units.
    pub fn bucket_width(&self, kind: TokenKind) -> f64 {
        match kind {
            TokenKind::X => 1.0 / self.x_buckets as f64,
            TokenKind::Y => 1.0 / self.y_buckets as f64,
            TokenKind::Scale => {
                (self.scale_max.ln() - self.scale_min.ln()) / self.scale_buckets as f64
            }
            TokenKind::Rotation => 360.0 / self.rotation_buckets as f64,
            _ => 0.0,
        }
    }

    pub fn quantize_placement(&self, p: &IconPlacement) -> Result<[usize; 5], CodecError> {
        Ok([
            quantize(p.x, self.x_buckets, 0.0, 1.0, Transform::Linear)?,
            quantize(p.y, self.y_buckets, 0.0, 1.0, Transform::Linear)?,
            quantize(
                p.scale,
                self.scale_buckets,
                self.scale_min,
                self.scale_max,
                Transform::Log,
            )?,
            quantize_rotation(p.rotation, self.rotation_buckets)?,
            usize::from(p.flipped),
        ])
    }

    pub fn dequantize_placement(
        &self,
        icon_id: &str,
        b: [usize; 5],
    ) -> Result<IconPlacement, CodecError> {
        if b[4] >= self.flip_buckets {
            return Err(CodecError::BucketOutOfRange {
                index: b[4],
                buckets: self.flip_buckets,
            });
        }
        Ok(IconPlacement {
            icon_id: icon_id.to_string(),
            x: dequantize(b[0], self.x_buckets, 0.0, 1.0, Transform::Linear)?,
            y: dequantize(b[1], self.y_buckets, 0.0, 1.0, Transform::Linear)?,
            scale: dequantize(
                b[2],
                self.scale_buckets,
                self.scale_min,
                self.scale_max,
                Transform::Log,
            )?,
            rotation: dequantize_rotation(b[3], self.rotation_buckets)?,
            flipped: b[4] == 1,
        })
    }
}

/// Order in which placements are serialised.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum IconOrder {
    /// The order the player created the icons.
    #[default]
    Creation,
    /// By the phrase word each icon is aligned to, then creation order;
    /// unaligned icons go last. One entry per placement.
    WordAligned(Vec<Option<usize>>),
}

/// Encodes `drawing` in creation order.
pub fn encode_drawing(
    drawing: &Drawing,
    library: &IconLibrary,
    spec: &QuantizationSpec,
) -> Result<Vec<DrawingToken>, CodecError> {
    encode_drawing_with(drawing, library, spec, &IconOrder::Creation)
}

pub fn encode_drawing_with(
    drawing: &Drawing,
    library: &IconLibrary,
    spec: &QuantizationSpec,
    order: &IconOrder,
) -> Result<Vec<DrawingToken>, CodecError> {
    spec.validate()?;
    if drawing.is_empty() {
        return Err(CodecError::EmptyDrawing);
    }
    let ordered = match order {
        IconOrder::Creation => drawing.clone(),
        IconOrder::WordAligned(assignment) => reorder_word_aligned(drawing, assignment),
    };
    let mut out = Vec::with_capacity(ordered.len() * 6 + 1);
    for p in &ordered.placements {
        if !library.contains(&p.icon_id) {
            return Err(CodecError::UnknownIcon(p.icon_id.clone()));
        }
        let [x, y, s, r, f] = spec.quantize_placement(p)?;
        out.extend([
            DrawingToken::Icon(p.icon_id.clone()),
            DrawingToken::X(x),
            DrawingToken::Y(y),
            DrawingToken::Scale(s),
            DrawingToken::Rotation(r),
            DrawingToken::Flip(f),
        ]);
    }
    out.push(DrawingToken::End);
    Ok(out)
}

/// Stable reorder by aligned word index.
pub fn reorder_word_aligned(drawing: &Drawing, assignment: &[Option<usize>]) -> Drawing {
    let mut idx: Vec<usize> = (0..drawing.len()).collect();
    idx.sort_by_key(|&i| {
        (
            assignment.get(i).copied().flatten().unwrap_or(usize::MAX),
            i,
        )
    });
    Drawing::new(
        idx.into_iter()
            .map(|i| drawing.placements[i].clone())
            .collect(),
        drawing.round_index,
    )
}

const SLOT_NAMES: [&str; 6] = ["icon_name", "x", "y", "scale", "rotation", "flip"];

/// Parses a token sequence back into a drawing with bucket-centre poses.
pub fn decode_drawing(
    tokens: &[DrawingToken],
    library: &IconLibrary,
    spec: &QuantizationSpec,
    round_index: usize,
) -> Result<Drawing, CodecError> {
    spec.validate()?;
    let err = |position: usize, expected: &str| -> CodecError {
        ParseError {
            position,
            expected: expected.to_string(),
            found: tokens.get(position).map(|t| t.to_string()),
        }
        .into()
    };
    let mut placements = Vec::new();
    let mut pos = 0;
    loop {
        match tokens.get(pos) {
            Some(DrawingToken::End) if !placements.is_empty() => {
                if pos + 1 != tokens.len() {
                    return Err(err(pos + 1, "end of input"));
                }
                return Ok(Drawing::new(placements, round_index));
            }
            Some(DrawingToken::Icon(id)) => {
                if !library.contains(id) {
                    return Err(err(pos, "a library icon"));
                }
                let mut buckets = [0usize; 5];
                for (k, slot) in buckets.iter_mut().enumerate() {
                    let at = pos + 1 + k;
                    let value = match (k, tokens.get(at)) {
                        (0, Some(DrawingToken::X(v)))
                        | (1, Some(DrawingToken::Y(v)))
                        | (2, Some(DrawingToken::Scale(v)))
                        | (3, Some(DrawingToken::Rotation(v)))
                        | (4, Some(DrawingToken::Flip(v))) => *v,
                        _ => return Err(err(at, SLOT_NAMES[k + 1])),
                    };
                    let kind = TokenKind::COORDINATES[k];
                    if value >= spec.buckets(kind) {
                        return Err(err(
                            at,
                            &format!("{} bucket below {}", SLOT_NAMES[k + 1], spec.buckets(kind)),
                        ));
                    }
                    *slot = value;
                }
                placements.push(spec.dequantize_placement(id, buckets)?);
                pos += 6;
            }
            _ if placements.is_empty() => return Err(err(pos, "icon_name")),
            _ => return Err(err(pos, "icon_name or end_of_drawing")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Icon;

    fn lib() -> IconLibrary {
        IconLibrary::new(
            vec![Icon::new("dog", "dog"), Icon::new("tree", "tree")],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn quantize_edges_and_middle() {
        assert_eq!(quantize(0.0, 32, 0.0, 1.0, Transform::Linear).unwrap(), 0);
        assert_eq!(quantize(1.0, 32, 0.0, 1.0, Transform::Linear).unwrap(), 31);
        assert_eq!(quantize(0.5, 32, 0.0, 1.0, Transform::Linear).unwrap(), 16);
        assert_eq!(quantize(-3.0, 32, 0.0, 1.0, Transform::Linear).unwrap(), 0);
        assert_eq!(quantize(7.0, 32, 0.0, 1.0, Transform::Linear).unwrap(), 31);
    }

    #[test]
    fn quantize_rejects_bad_input() {
        assert!(matches!(
            quantize(f64::NAN, 32, 0.0, 1.0, Transform::Linear),
            Err(CodecError::NonFinite(_))
        ));
        assert!(matches!(
            quantize(0.5, 1, 0.0, 1.0, Transform::Linear),
            Err(CodecError::InvalidSpec(_))
        ));
        assert!(matches!(
            quantize(0.5, 4, 1.0, 1.0, Transform::Linear),
            Err(CodecError::InvalidSpec(_))
        ));
        assert!(matches!(
            quantize(0.5, 4, 0.0, 1.0, Transform::Log),
            Err(CodecError::InvalidSpec(_))
        ));
    }

    #[test]
    fn dequantize_bucket_centres() {
        assert_eq!(dequantize(0, 2, 0.0, 1.0, Transform::Linear).unwrap(), 0.25);
        assert_eq!(
            dequantize(16, 32, 0.0, 1.0, Transform::Linear).unwrap(),
            0.515625
        );
        assert!(matches!(
            dequantize(2, 2, 0.0, 1.0, Transform::Linear),
            Err(CodecError::BucketOutOfRange {
                index: 2,
                buckets: 2
            })
        ));
        let spec = QuantizationSpec::default();
        let centre = dequantize(5, 11, spec.scale_min, spec.scale_max, Transform::Log).unwrap();
        assert!((centre - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bucket_centres_are_fixed_points() {
        for (n, lo, hi, t) in [
            (32, 0.0, 1.0, Transform::Linear),
            (16, 0.0, 1.0, Transform::Linear),
            (11, 0.125, 8.0, Transform::Log),
        ] {
            for k in 0..n {
                let v = dequantize(k, n, lo, hi, t).unwrap();
                assert_eq!(quantize(v, n, lo, hi, t).unwrap(), k);
            }
        }
        for k in 0..8 {
            assert_eq!(
                quantize_rotation(dequantize_rotation(k, 8).unwrap(), 8).unwrap(),
                k
            );
        }
    }

    #[test]
    fn rotation_sectors_centre_on_compass() {
        assert_eq!(quantize_rotation(0.0, 8).unwrap(), 0);
        assert_eq!(quantize_rotation(22.4, 8).unwrap(), 0);
        assert_eq!(quantize_rotation(22.5, 8).unwrap(), 1);
        assert_eq!(quantize_rotation(350.0, 8).unwrap(), 0);
        assert_eq!(quantize_rotation(90.0, 8).unwrap(), 2);
        assert_eq!(quantize_rotation(-90.0, 8).unwrap(), 6);
    }

    #[test]
    fn encode_single_dog() {
        let d = Drawing::new(vec![IconPlacement::at("dog", 0.5, 0.5)], 0);
        let t = encode_drawing(&d, &lib(), &QuantizationSpec::default()).unwrap();
        let strings: Vec<String> = t.iter().map(ToString::to_string).collect();
        assert_eq!(
            strings,
            [
                "<icon:dog>",
                "<x_16>",
                "<y_8>",
                "<s_5>",
                "<r_0>",
                "<f_0>",
                "<eod>"
            ]
        );
    }

    #[test]
    fn encode_rejects_unknown_and_empty() {
        let spec = QuantizationSpec::default();
        let d = Drawing::new(vec![IconPlacement::at("cat", 0.5, 0.5)], 0);
        assert_eq!(
            encode_drawing(&d, &lib(), &spec).unwrap_err(),
            CodecError::UnknownIcon("cat".into())
        );
        assert_eq!(
            encode_drawing(&Drawing::default(), &lib(), &spec).unwrap_err(),
            CodecError::EmptyDrawing
        );
    }

    #[test]
    fn decode_reports_positions() {
        let spec = QuantizationSpec::default();
        let d = Drawing::new(vec![IconPlacement::at("dog", 0.5, 0.5)], 0);
        let t = encode_drawing(&d, &lib(), &spec).unwrap();
        match decode_drawing(&t[..5], &lib(), &spec, 0) {
            Err(CodecError::Parse(e)) => {
                assert_eq!(e.position, 5);
                assert_eq!(e.expected, "flip");
                assert_eq!(e.found, None);
            }
            other => panic!("{other:?}"),
        }
        match decode_drawing(&[DrawingToken::X(3)], &lib(), &spec, 0) {
            Err(CodecError::Parse(e)) => {
                assert_eq!((e.position, e.expected.as_str()), (0, "icon_name"))
            }
            other => panic!("{other:?}"),
        }
        // terminator alone is an empty drawing
        assert!(decode_drawing(&[DrawingToken::End], &lib(), &spec, 0).is_err());
        // missing terminator
        match decode_drawing(&t[..6], &lib(), &spec, 0) {
            Err(CodecError::Parse(e)) => assert_eq!(e.position, 6),
            other => panic!("{other:?}"),
        }
        // trailing garbage
        let mut long = t.clone();
        long.push(DrawingToken::End);
        match decode_drawing(&long, &lib(), &spec, 0) {
            Err(CodecError::Parse(e)) => {
                assert_eq!((e.position, e.expected.as_str()), (7, "end of input"))
            }
            other => panic!("{other:?}"),
        }
        // bucket index beyond the spec
        let mut wide = t.clone();
        wide[2] = DrawingToken::Y(16);
        assert!(
            matches!(decode_drawing(&wide, &lib(), &spec, 0), Err(CodecError::Parse(e)) if e.position == 2)
        );
    }

    #[test]
    fn word_aligned_order_is_stable() {
        let d = Drawing::new(
            vec![
                IconPlacement::at("tree", 0.1, 0.5),
                IconPlacement::at("dog", 0.2, 0.5),
                IconPlacement::at("dog", 0.3, 0.5),
            ],
            0,
        );
        let r = reorder_word_aligned(&d, &[Some(2), None, Some(0)]);
        let xs: Vec<f64> = r.placements.iter().map(|p| p.x).collect();
        assert_eq!(xs, [0.3, 0.1, 0.2]);
        let t = encode_drawing_with(
            &d,
            &lib(),
            &QuantizationSpec::default(),
            &IconOrder::WordAligned(vec![Some(2), None, Some(0)]),
        )
        .unwrap();
        assert_eq!(t[0], DrawingToken::Icon("dog".into()));
        assert_eq!(t[1], DrawingToken::X(9));
    }

    #[test]
    fn spec_validation() {
        assert!(QuantizationSpec::default().validate().is_ok());
        let bad = QuantizationSpec {
            scale_min: 2.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = QuantizationSpec {
            x_buckets: 1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
