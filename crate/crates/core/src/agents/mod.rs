//! Agent contracts and the alignment-based reference agents.

mod alignment;
mod augment;
mod baseline;

pub use alignment::{
    align_game, train_alignment, AlignConfig, AlignmentModel, TrainedAlignment,
    ALIGN_SCHEMA_VERSION,
};
pub use augment::{augment, Augmented};
pub use baseline::{BaselineDrawer, BaselineGuesser};

use rand::RngCore;

use crate::codec::DrawingToken;
use crate::domain::{Drawing, GameState, GuesserView};

#[derive(Debug, thiserror::Error)]
pub enum AgentError {
    #[error("training corpus has no usable (drawing, phrase) pairs")]
    EmptyCorpus,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed alignment file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Produces one guess at a time; `None` means the agent has nothing (more)
/// to offer for this view.
pub trait GuesserAgent {
    fn guess(&mut self, view: &GuesserView) -> Option<Vec<String>>;
}

/// A drawer with a deterministic best drawing and a sampling mode.
pub trait DrawerAgent {
    fn draw(&mut self, state: &GameState) -> Option<Drawing>;
    fn sample(&mut self, state: &GameState, rng: &mut dyn RngCore) -> Option<Drawing>;
}

/// Optional drawer capability used by perplexity evaluation.
pub trait DrawingLikelihood {
    /// Identifies the token format; perplexities are only comparable
    /// between oracles with the same format.
    fn token_format(&self) -> String;
    /// Natural-log likelihood of each token of `tokens` given `state`.
    fn token_log_likelihoods(&self, state: &GameState, tokens: &[DrawingToken]) -> Vec<f64>;
}

/// The agent's best drawing, unless its icon bag repeats one of the drawings
/// already in `state`; then a single sample is returned instead (which may
/// itself repeat).
pub fn diversify_drawing(
    agent: &mut dyn DrawerAgent,
    state: &GameState,
    rng: &mut dyn RngCore,
) -> Option<Drawing> {
    let best = agent.draw(state)?;
    let bag = best.icon_bag();
    if state.drawings.iter().any(|d| d.icon_bag() == bag) {
        agent.sample(state, rng)
    } else {
        Some(best)
    }
}
