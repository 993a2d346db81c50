//! Iconary: a drawing-and-guessing game played with icons.
//!
//! The crate is organised by subsystem:
//!
//! * [`domain`] holds the shared game types, guess evaluation and revision
//!   classification.
//! * [`codec`] maps drawings to and from the six-token-per-icon sequence format.
//! * [`encoder`] renders game state as text for guesser and drawer agents.
//! * [`constraints`] is the lexically constrained guess decoder.
//! * [`metrics`] implements the automatic and human/AI evaluation metrics.
//! * [`agents`] defines the agent contracts and the alignment-based baselines.
//! * [`server`] runs live sessions, the wire protocol and dataset ingestion.

pub mod agents;
pub mod codec;
pub mod constraints;
pub mod domain;
pub mod encoder;
pub mod metrics;
pub mod plots;
pub mod server;
pub mod synth;

pub use domain::{
    evaluate_guess, game_outcome, normalize_word, Drawing, GameRecord, GameState, Guess,
    GuesserView, Icon, IconLibrary, IconPlacement, Phrase, PhraseWord, Split,
};
