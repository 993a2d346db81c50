//! Live sessions, wire protocol, persistence and dataset ingestion.

mod ingest;
mod net;
mod protocol;
mod selfplay;
mod session;
mod store;
mod transcript;

pub use ingest::{
    convert_flat, convert_flat_jsonl, export_jsonl, ingest_dataset, FlatGame, FlatIcon,
    IngestReport, WinCrossCheck, MAX_VIOLATION_RATE,
};
pub use net::{serve, AgentChoice, ServeConfig, ServerHandle};
pub use protocol::{
    decode_client, encode_line, ClientMessage, ErrorCode, GuesserClient, Outbound, Role,
    ServerMessage, Verdict,
};
pub use selfplay::{self_play, SelfPlayConfig, SelfPlayGame};
pub use session::{
    closeness, replay, session_step, session_step_line, Event, LogEntry, Phase, Session,
    SessionContext, DEFAULT_CLOSE_THRESHOLD, GAME_SECONDS,
};
pub use store::GameStore;
pub use transcript::render_transcript;

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("game id `{0}` is not a safe file name")]
    BadGameId(String),
    #[error("game `{0}` is already stored")]
    AlreadyStored(String),
    #[error("{:.1}% of records violate the schema (limit {:.0}%)", 100.0 * rate, 100.0 * MAX_VIOLATION_RATE)]
    TooManyViolations {
        rate: f64,
        report: Box<IngestReport>,
    },
    #[error("conversion failed: {0}")]
    Convert(String),
}
