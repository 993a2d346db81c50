//! Text renderings of game state for language-model agents.
//!
//! The guesser input is a description of the latest drawing followed by
//! `phrase:` and the phrase template; the drawer input is the phrase with
//! guessed words wrapped in asterisks.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::quantize_rotation;
use crate::domain::{Drawing, GuesserView, IconLibrary, Phrase, Slot};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodeError {
    #[error("no drawing to describe")]
    NoDrawing,
    #[error("unknown icon `{0}`")]
    UnknownIcon(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeModifier {
    Huge,
    Large,
    Small,
    Tiny,
}

impl SizeModifier {
    /// Bands on `scale / median scale`.
    pub fn from_ratio(r: f64) -> Option<Self> {
        if r >= 2.5 {
            Some(SizeModifier::Huge)
        } else if r >= 1.5 {
            Some(SizeModifier::Large)
        } else if r <= 0.4 {
            Some(SizeModifier::Tiny)
        } else if r <= 2.0 / 3.0 {
            Some(SizeModifier::Small)
        } else {
            None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SizeModifier::Huge => "huge",
            SizeModifier::Large => "large",
            SizeModifier::Small => "small",
            SizeModifier::Tiny => "tiny",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrowDirection {
    Right,
    Down,
    Left,
    Up,
}

impl ArrowDirection {
    /// Nearest cardinal direction of an arrow whose art points right at 0°.
    /// Rotation is clockwise; a mirrored arrow points left before rotating.
    /// Exact diagonals resolve clockwise.
    pub fn of(rotation: f64, flipped: bool) -> Self {
        let angle = (rotation + if flipped { 180.0 } else { 0.0 }).rem_euclid(360.0);
        match (((angle + 45.0) / 90.0).floor() as usize) % 4 {
            0 => ArrowDirection::Right,
            1 => ArrowDirection::Down,
            2 => ArrowDirection::Left,
            _ => ArrowDirection::Up,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ArrowDirection::Right => "right",
            ArrowDirection::Down => "down",
            ArrowDirection::Left => "left",
            ArrowDirection::Up => "up",
        }
    }
}

/// A group of identically described icons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IconDescription {
    pub count: usize,
    pub size: Option<SizeModifier>,
    pub rotated: bool,
    pub flipped: bool,
    pub base: String,
    /// Leftmost x among the grouped placements.
    pub anchor_x: f64,
    /// Creation index of the earliest grouped placement.
    pub first_index: usize,
}

impl IconDescription {
    fn label(&self) -> String {
        let mut parts: Vec<&str> = Vec::with_capacity(4);
        if let Some(s) = self.size {
            parts.push(s.as_str());
        }
        if self.rotated {
            parts.push("rotated");
        }
        if self.flipped {
            parts.push("flipped");
        }
        parts.push(&self.base);
        parts.join(" ")
    }
}

impl fmt::Display for IconDescription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.count > 1 {
            write!(f, "{} ", self.count)?;
        }
        f.write_str(&self.label())
    }
}

/// Surface form of fill-in-the-blank sentinels: `{prefix}N{suffix}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentinelFormat {
    pub prefix: String,
    pub suffix: String,
}

impl Default for SentinelFormat {
    fn default() -> Self {
        Self {
            prefix: "<extra_id_".into(),
            suffix: ">".into(),
        }
    }
}

impl SentinelFormat {
    pub fn render(&self, n: usize) -> String {
        format!("{}{n}{}", self.prefix, self.suffix)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhraseStyle {
    /// One `_` per unknown word.
    Underscore,
    /// One sentinel per maximal run of unknown words.
    FillInTheBlank(SentinelFormat),
}

impl PhraseStyle {
    pub fn fill_in_the_blank() -> Self {
        PhraseStyle::FillInTheBlank(SentinelFormat::default())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateSlot {
    Known(String),
    Blank,
    Sentinel(usize),
}

/// A guesser-side phrase rendering.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhraseTemplate {
    pub slots: Vec<TemplateSlot>,
    pub style: PhraseStyle,
}

impl PhraseTemplate {
    pub fn new(slots: &[Slot], style: PhraseStyle) -> Self {
        let mut out = Vec::with_capacity(slots.len());
        let mut next_sentinel = 0;
        for slot in slots {
            match (slot, &style) {
                (Slot::Known(w), _) => out.push(TemplateSlot::Known(w.clone())),
                (Slot::Hidden, PhraseStyle::Underscore) => out.push(TemplateSlot::Blank),
                (Slot::Hidden, PhraseStyle::FillInTheBlank(_)) => {
                    if !matches!(out.last(), Some(TemplateSlot::Sentinel(_))) {
                        out.push(TemplateSlot::Sentinel(next_sentinel));
                        next_sentinel += 1;
                    }
                }
            }
        }
        Self { slots: out, style }
    }

    pub fn sentinel_count(&self) -> usize {
        self.slots
            .iter()
            .filter(|s| matches!(s, TemplateSlot::Sentinel(_)))
            .count()
    }
}

impl fmt::Display for PhraseTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, slot) in self.slots.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            match (slot, &self.style) {
                (TemplateSlot::Known(w), _) => f.write_str(w)?,
                (TemplateSlot::Blank, _) => f.write_str("_")?,
                (TemplateSlot::Sentinel(n), PhraseStyle::FillInTheBlank(fmt)) => {
                    f.write_str(&fmt.render(*n))?
                }
                (TemplateSlot::Sentinel(n), PhraseStyle::Underscore) => {
                    f.write_str(&SentinelFormat::default().render(*n))?
                }
            }
        }
        Ok(())
    }
}

/// Rendering options.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEncoder {
    /// Rotation buckets used for the `rotated` modifier.
    pub rotation_buckets: usize,
    /// Joins icon descriptions.
    pub separator: String,
}

impl Default for StateEncoder {
    fn default() -> Self {
        Self {
            rotation_buckets: 8,
            separator: ", ".into(),
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

impl StateEncoder {
    /// Grouped, left-to-right icon descriptions.
    pub fn icon_descriptions(
        &self,
        drawing: &Drawing,
        library: &IconLibrary,
    ) -> Result<Vec<IconDescription>, EncodeError> {
        if drawing.is_empty() {
            return Err(EncodeError::NoDrawing);
        }
        let mut scales: Vec<f64> = drawing.placements.iter().map(|p| p.scale).collect();
        let med = median(&mut scales);
        let single = drawing.len() == 1;
        let mut groups: Vec<IconDescription> = Vec::new();
        for (i, p) in drawing.placements.iter().enumerate() {
            let icon = library
                .get(&p.icon_id)
                .ok_or_else(|| EncodeError::UnknownIcon(p.icon_id.clone()))?;
            let size = if single || !(med > 0.0) {
                None
            } else {
                SizeModifier::from_ratio(p.scale / med)
            };
            let d = if library.is_arrow(&p.icon_id) {
                IconDescription {
                    count: 1,
                    size,
                    rotated: false,
                    flipped: false,
                    base: format!(
                        "{} arrow",
                        ArrowDirection::of(p.rotation, p.flipped).as_str()
                    ),
                    anchor_x: p.x,
                    first_index: i,
                }
            } else {
                let bucket = quantize_rotation(p.rotation, self.rotation_buckets).unwrap_or(0);
                IconDescription {
                    count: 1,
                    size,
                    rotated: bucket != 0,
                    flipped: p.flipped,
                    base: icon.name.trim().to_lowercase(),
                    anchor_x: p.x,
                    first_index: i,
                }
            };
            let label = d.label();
            match groups.iter_mut().find(|g| g.label() == label) {
                Some(g) => {
                    g.count += 1;
                    g.anchor_x = g.anchor_x.min(d.anchor_x);
                }
                None => groups.push(d),
            }
        }
        groups.sort_by(|a, b| {
            a.anchor_x
                .total_cmp(&b.anchor_x)
                .then(a.first_index.cmp(&b.first_index))
        });
        Ok(groups)
    }

    pub fn describe_drawing(
        &self,
        drawing: &Drawing,
        library: &IconLibrary,
    ) -> Result<String, EncodeError> {
        Ok(self
            .icon_descriptions(drawing, library)?
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(&self.separator))
    }

    pub fn render_guesser_input(
        &self,
        view: &GuesserView,
        library: &IconLibrary,
        style: &PhraseStyle,
    ) -> Result<String, EncodeError> {
        let drawing = view.latest_drawing().ok_or(EncodeError::NoDrawing)?;
        let description = self.describe_drawing(drawing, library)?;
        let template = PhraseTemplate::new(&view.slots, style.clone());
        Ok(format!("{description} phrase: {template}"))
    }
}

pub fn describe_drawing(drawing: &Drawing, library: &IconLibrary) -> Result<String, EncodeError> {
    StateEncoder::default().describe_drawing(drawing, library)
}

pub fn render_guesser_input(
    view: &GuesserView,
    library: &IconLibrary,
    style: &PhraseStyle,
) -> Result<String, EncodeError> {
    StateEncoder::default().render_guesser_input(view, library, style)
}

/// The phrase with each guessed word wrapped as `*word*`.
pub fn render_drawer_input(phrase: &Phrase) -> String {
    phrase
        .words()
        .iter()
        .map(|w| {
            if w.guessed {
                format!("*{}*", w.text)
            } else {
                w.text.clone()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Fill-in-the-blank training target: each sentinel followed by the hidden
/// words of its run, closed by one more sentinel.
pub fn fill_in_the_blank_target(phrase: &Phrase, format: &SentinelFormat) -> String {
    let mut parts: Vec<String> = Vec::new();
    let mut next = 0;
    let mut in_run = false;
    for w in phrase.words() {
        if w.is_revealed() {
            in_run = false;
            continue;
        }
        if !in_run {
            parts.push(format.render(next));
            next += 1;
            in_run = true;
        }
        parts.push(w.text.clone());
    }
    parts.push(format.render(next));
    parts.join(" ")
}
