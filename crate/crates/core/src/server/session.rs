//! The per-game state machine. `session_step` is pure: the same session,
//! event and clock reading always give the same result.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::protocol::{
    decode_client, ClientMessage, ErrorCode, Outbound, Role, ServerMessage, Verdict,
};
use crate::agents::AlignmentModel;
use crate::domain::{
    evaluate_guess, normalize_word, GameRecord, GameState, Guess, IconLibrary, Outcome, Phrase,
    Player, Players, Round, Slot, Split, Turn,
};

pub const GAME_SECONDS: f64 = 240.0;
pub const DEFAULT_CLOSE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Lobby,
    DrawerTurn,
    GuesserTurn,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    Client {
        from: Role,
        message: ClientMessage,
    },
    /// Server timer; only ever fires the timeout.
    Tick,
}

/// An accepted event with the clock reading it was applied at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub at: f64,
    pub event: Event,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub state: GameState,
    pub phase: Phase,
    pub drawer: Option<Player>,
    pub guesser: Option<Player>,
    /// Last clock reading applied; never decreases.
    pub clock: f64,
    pub started_at: Option<f64>,
    pub budget_seconds: f64,
    pub outcome: Option<Outcome>,
    pub log: Vec<LogEntry>,
}

impl Session {
    pub fn new(id: impl Into<String>, phrase: Phrase) -> Self {
        Self {
            id: id.into(),
            state: GameState::new(phrase.reset()),
            phase: Phase::Lobby,
            drawer: None,
            guesser: None,
            clock: 0.0,
            started_at: None,
            budget_seconds: GAME_SECONDS,
            outcome: None,
            log: Vec::new(),
        }
    }

    fn player(&self, role: Role) -> Option<&Player> {
        match role {
            Role::Drawer => self.drawer.as_ref(),
            Role::Guesser => self.guesser.as_ref(),
        }
    }

    pub fn elapsed(&self) -> f64 {
        self.started_at
            .map_or(0.0, |s| (self.clock - s).min(self.budget_seconds))
    }

    pub fn remaining(&self) -> f64 {
        (self.budget_seconds - self.elapsed()).max(0.0)
    }

    /// The finished game as a dataset record.
    pub fn to_record(&self, split: Split) -> GameRecord {
        GameRecord {
            game_id: self.id.clone(),
            split,
            phrase: self.state.phrase.reset(),
            rounds: self
                .state
                .drawings
                .iter()
                .zip(
                    self.state
                        .guesses
                        .iter()
                        .chain(std::iter::repeat(&Vec::new())),
                )
                .map(|(d, g)| Round {
                    drawing: d.clone(),
                    guesses: g.clone(),
                })
                .collect(),
            outcome: self.outcome.unwrap_or(Outcome::LostTimeout),
            elapsed_seconds: self.elapsed(),
            players: Players {
                drawer: self
                    .drawer
                    .clone()
                    .unwrap_or_else(|| Player::human("unknown")),
                guesser: self
                    .guesser
                    .clone()
                    .unwrap_or_else(|| Player::human("unknown")),
            },
        }
    }
}

/// Read-only inputs to the state machine.
#[derive(Debug, Clone, Default)]
pub struct SessionContext {
    pub library: Option<Arc<IconLibrary>>,
    pub alignment: Option<Arc<AlignmentModel>>,
    pub close_threshold: Option<f64>,
    /// Per-drawing guess cap for AI guessers; humans are never capped.
    pub ai_guess_limit: Option<usize>,
}

impl SessionContext {
    pub fn with_library(library: Arc<IconLibrary>) -> Self {
        Self {
            library: Some(library),
            ai_guess_limit: Some(5),
            ..Default::default()
        }
    }
}

/// Verdict tier of one guessed word. Without an alignment model (or for
/// words it does not know) there is no `close` tier.
pub fn closeness(
    guess: &str,
    target: &str,
    alignment: Option<&AlignmentModel>,
    threshold: f64,
) -> Verdict {
    if normalize_word(guess) == normalize_word(target) {
        return Verdict::Correct;
    }
    match alignment.and_then(|m| m.word_cosine(guess, target)) {
        Some(c) if c >= threshold => Verdict::Close,
        _ => Verdict::Incorrect,
    }
}

fn error(to: Role, code: ErrorCode, message: impl Into<String>) -> Vec<Outbound> {
    vec![Outbound {
        to,
        message: ServerMessage::Error {
            code,
            message: message.into(),
        },
    }]
}

fn both(message: ServerMessage) -> Vec<Outbound> {
    Role::BOTH
        .iter()
        .map(|&to| Outbound {
            to,
            message: message.clone(),
        })
        .collect()
}

fn finish(s: &mut Session, outcome: Outcome, out: &mut Vec<Outbound>) {
    s.phase = Phase::Finished;
    s.outcome = Some(outcome);
    if outcome == Outcome::LostTimeout {
        out.extend(both(ServerMessage::Timeout {
            elapsed_seconds: s.elapsed(),
        }));
    }
    out.extend(both(ServerMessage::GameOver {
        outcome,
        slots: Slot::from_phrase(&s.state.phrase),
        rounds: s.state.drawings.len(),
        elapsed_seconds: s.elapsed(),
    }));
}

/// Applies one event at clock reading `at`.
///
/// Rejected events produce an error reply to the sender and leave the
/// session untouched (including the clock and log). Accepted events are
/// appended to the log. Clock readings earlier than the session clock are
/// treated as the session clock.
pub fn session_step(
    session: &Session,
    at: f64,
    event: &Event,
    ctx: &SessionContext,
) -> (Session, Vec<Outbound>) {
    let at = if at.is_finite() {
        at.max(session.clock)
    } else {
        session.clock
    };
    let sender = match event {
        Event::Client { from, .. } => Some(*from),
        Event::Tick => None,
    };
    let reject = |code, msg: &str| {
        (
            session.clone(),
            sender.map_or_else(Vec::new, |r| error(r, code, msg)),
        )
    };

    if session.phase == Phase::Finished {
        return reject(ErrorCode::Finished, "game is over");
    }
    let mut s = session.clone();
    s.clock = at;
    let mut out = Vec::new();

    // the clock runs out before anything else is considered
    if let Some(start) = s.started_at {
        if at - start >= s.budget_seconds {
            s.state.remaining_seconds = 0.0;
            s.log.push(LogEntry {
                at,
                event: event.clone(),
            });
            finish(&mut s, Outcome::LostTimeout, &mut out);
            if let Some(r) = sender {
                out.extend(error(r, ErrorCode::Finished, "time is up"));
            }
            return (s, out);
        }
    }
    let Event::Client { from, message } = event else {
        // a tick that does not time out changes nothing
        return (session.clone(), Vec::new());
    };
    let from = *from;
    let remaining = s.budget_seconds - s.started_at.map_or(0.0, |st| at - st);

    match (s.phase, message) {
        (Phase::Lobby, ClientMessage::Join { role, player, .. }) => {
            if *role != from {
                return reject(ErrorCode::WrongRole, "join must name the connection's role");
            }
            if s.player(*role).is_some() {
                return reject(ErrorCode::RoleTaken, "role already taken");
            }
            match role {
                Role::Drawer => s.drawer = Some(player.clone()),
                Role::Guesser => s.guesser = Some(player.clone()),
            }
            out.extend(both(ServerMessage::Join {
                session: s.id.clone(),
                role: *role,
                player: player.clone(),
            }));
        }
        (Phase::Lobby, ClientMessage::Start) => {
            if s.drawer.is_none() || s.guesser.is_none() {
                return reject(ErrorCode::NotReady, "both roles must join first");
            }
            s.started_at = Some(at);
            s.phase = Phase::DrawerTurn;
            s.state.turn = Turn::Drawer;
            s.state.remaining_seconds = s.budget_seconds;
            let slots = Slot::from_phrase(&s.state.phrase);
            let phrase: Vec<String> = s
                .state
                .phrase
                .words()
                .iter()
                .map(|w| w.text.clone())
                .collect();
            for role in Role::BOTH {
                out.push(Outbound {
                    to: role,
                    message: ServerMessage::Start {
                        role,
                        slots: slots.clone(),
                        phrase: (role == Role::Drawer).then(|| phrase.clone()),
                        remaining_seconds: s.budget_seconds,
                    },
                });
            }
        }
        (Phase::DrawerTurn, ClientMessage::SubmitDrawing { drawing }) if from == Role::Drawer => {
            let mut d = drawing.clone();
            d.round_index = s.state.drawings.len();
            if d.is_empty() {
                return reject(ErrorCode::InvalidDrawing, "drawing has no icons");
            }
            let check = match &ctx.library {
                Some(lib) => d.validate(lib).map_err(|e| e.to_string()),
                None => d
                    .placements
                    .iter()
                    .try_for_each(|p| p.validate())
                    .map_err(|e| e.to_string()),
            };
            if let Err(e) = check {
                return reject(ErrorCode::InvalidDrawing, &e);
            }
            s.state.drawings.push(d.clone());
            s.state.guesses.push(Vec::new());
            s.state.turn = Turn::Guesser;
            s.state.remaining_seconds = remaining;
            s.phase = Phase::GuesserTurn;
            out.extend(both(ServerMessage::SubmitDrawing {
                round: d.round_index,
                drawing: d,
                remaining_seconds: remaining,
            }));
        }
        (Phase::GuesserTurn, ClientMessage::SubmitGuess { words }) if from == Role::Guesser => {
            let round = s.state.drawings.len() - 1;
            if let (Some(limit), Some(p)) = (ctx.ai_guess_limit, &s.guesser) {
                if p.ai && s.state.guesses[round].len() >= limit {
                    return reject(
                        ErrorCode::GuessLimit,
                        "guess limit for this drawing reached; pass the turn",
                    );
                }
            }
            let (phrase, scored) = match evaluate_guess(&s.state.phrase, &Guess::new(words.clone()))
            {
                Ok(x) => x,
                Err(e) => return reject(ErrorCode::GuessLength, &e.to_string()),
            };
            let threshold = ctx.close_threshold.unwrap_or(DEFAULT_CLOSE_THRESHOLD);
            let verdicts = words
                .iter()
                .zip(phrase.words())
                .map(|(g, w)| closeness(g, &w.text, ctx.alignment.as_deref(), threshold))
                .collect();
            // knowing every word is not enough: the game is won by a guess
            // that gets the whole phrase right
            let won = scored.is_all_correct();
            s.state.phrase = phrase;
            s.state.guesses[round].push(scored);
            s.state.remaining_seconds = remaining;
            out.extend(both(ServerMessage::Feedback {
                round,
                words: words.clone(),
                verdicts,
                slots: Slot::from_phrase(&s.state.phrase),
                remaining_seconds: remaining,
            }));
            if won {
                finish(&mut s, Outcome::Won, &mut out);
            }
        }
        (Phase::GuesserTurn, ClientMessage::PassTurn) if from == Role::Guesser => {
            s.phase = Phase::DrawerTurn;
            s.state.turn = Turn::Drawer;
            s.state.remaining_seconds = remaining;
            out.extend(both(ServerMessage::PassTurn {
                round: s.state.drawings.len() - 1,
                remaining_seconds: remaining,
            }));
        }
        (phase, msg) => {
            let (code, text) = match (phase, msg) {
                (Phase::Lobby, _) => (ErrorCode::NotReady, "game has not started"),
                (_, ClientMessage::Join { .. } | ClientMessage::Start) => {
                    (ErrorCode::OutOfPhase, "game already started")
                }
                (Phase::DrawerTurn, ClientMessage::SubmitDrawing { .. })
                | (
                    Phase::GuesserTurn,
                    ClientMessage::SubmitGuess { .. } | ClientMessage::PassTurn,
                ) => (ErrorCode::WrongRole, "not your role"),
                _ => (ErrorCode::OutOfPhase, "not allowed in this phase"),
            };
            return reject(code, text);
        }
    }
    s.log.push(LogEntry {
        at,
        event: event.clone(),
    });
    (s, out)
}

/// Parses a raw wire line from `from` and applies it; unparseable input is
/// answered with a `malformed` error and changes nothing.
pub fn session_step_line(
    session: &Session,
    at: f64,
    from: Role,
    line: &str,
    ctx: &SessionContext,
) -> (Session, Vec<Outbound>) {
    match decode_client(line) {
        Ok(message) => session_step(session, at, &Event::Client { from, message }, ctx),
        Err(e) => (
            session.clone(),
            error(from, ErrorCode::Malformed, e.to_string()),
        ),
    }
}

/// Re-applies a session's event log to a fresh session with the same id,
/// phrase and budget.
pub fn replay(session: &Session, ctx: &SessionContext) -> Session {
    let mut s = Session::new(session.id.clone(), session.state.phrase.reset());
    s.budget_seconds = session.budget_seconds;
    for e in &session.log {
        s = session_step(&s, e.at, &e.event, ctx).0;
    }
    s
}
