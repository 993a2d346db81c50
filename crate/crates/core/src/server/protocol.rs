//! Newline-delimited JSON wire messages.

use serde::{Deserialize, Serialize};

use crate::domain::{Drawing, Guess, GuesserView, Outcome, Player, Slot, Turn};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Drawer,
    Guesser,
}

impl Role {
    pub const BOTH: [Role; 2] = [Role::Drawer, Role::Guesser];
}

/// Client → server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Join {
        role: Role,
        player: Player,
        /// Session code to join; omitted to open a new session.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session: Option<String>,
    },
    Start,
    SubmitDrawing {
        drawing: Drawing,
    },
    SubmitGuess {
        words: Vec<String>,
    },
    PassTurn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Close,
    Incorrect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Malformed,
    OutOfPhase,
    WrongRole,
    RoleTaken,
    NotReady,
    InvalidDrawing,
    GuessLength,
    GuessLimit,
    Finished,
}

/// Server → client. Every accepted client message is echoed to both
/// players in one of these forms; rejected ones get `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Join {
        session: String,
        role: Role,
        player: Player,
    },
    Start {
        role: Role,
        slots: Vec<Slot>,
        /// Full phrase; only ever sent to the drawer.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phrase: Option<Vec<String>>,
        remaining_seconds: f64,
    },
    SubmitDrawing {
        round: usize,
        drawing: Drawing,
        remaining_seconds: f64,
    },
    Feedback {
        round: usize,
        words: Vec<String>,
        verdicts: Vec<Verdict>,
        slots: Vec<Slot>,
        remaining_seconds: f64,
    },
    PassTurn {
        round: usize,
        remaining_seconds: f64,
    },
    Timeout {
        elapsed_seconds: f64,
    },
    GameOver {
        outcome: Outcome,
        slots: Vec<Slot>,
        rounds: usize,
        elapsed_seconds: f64,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
}

/// One message for one player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outbound {
    pub to: Role,
    pub message: ServerMessage,
}

pub fn encode_line<T: Serialize>(msg: &T) -> String {
    serde_json::to_string(msg).expect("messages serialize") + "\n"
}

pub fn decode_client(line: &str) -> Result<ClientMessage, serde_json::Error> {
    serde_json::from_str(line.trim_end_matches(['\r', '\n']))
}

/// Rebuilds the guesser's [`GuesserView`] purely from the messages it
/// received, so agents playing over the wire see exactly what a human
/// would.
#[derive(Debug, Clone, Default)]
pub struct GuesserClient {
    view: Option<GuesserView>,
    pub finished: bool,
}

impl GuesserClient {
    pub fn view(&self) -> Option<&GuesserView> {
        self.view.as_ref()
    }

    pub fn receive(&mut self, msg: &ServerMessage) {
        match msg {
            ServerMessage::Start {
                slots,
                remaining_seconds,
                ..
            } => {
                self.view = Some(GuesserView {
                    slots: slots.clone(),
                    drawings: Vec::new(),
                    guesses: Vec::new(),
                    turn: Turn::Drawer,
                    remaining_seconds: *remaining_seconds,
                });
            }
            ServerMessage::SubmitDrawing {
                drawing,
                remaining_seconds,
                ..
            } => {
                if let Some(v) = &mut self.view {
                    v.drawings.push(drawing.clone());
                    v.guesses.push(Vec::new());
                    v.turn = Turn::Guesser;
                    v.remaining_seconds = *remaining_seconds;
                }
            }
            ServerMessage::Feedback {
                words,
                verdicts,
                slots,
                remaining_seconds,
                ..
            } => {
                if let Some(v) = &mut self.view {
                    let correct = verdicts.iter().map(|x| *x == Verdict::Correct).collect();
                    if let Some(last) = v.guesses.last_mut() {
                        last.push(Guess {
                            words: words.clone(),
                            correct: Some(correct),
                        });
                    }
                    v.slots = slots.clone();
                    v.remaining_seconds = *remaining_seconds;
                }
            }
            ServerMessage::PassTurn {
                remaining_seconds, ..
            } => {
                if let Some(v) = &mut self.view {
                    v.turn = Turn::Drawer;
                    v.remaining_seconds = *remaining_seconds;
                }
            }
            ServerMessage::GameOver { slots, .. } => {
                if let Some(v) = &mut self.view {
                    v.slots = slots.clone();
                }
                self.finished = true;
            }
            ServerMessage::Timeout { .. } => self.finished = true,
            ServerMessage::Join { .. } | ServerMessage::Error { .. } => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn client_wire_forms() {
        assert_eq!(
            decode_client("{\"type\":\"pass_turn\"}\n").unwrap(),
            ClientMessage::PassTurn
        );
        assert_eq!(encode_line(&ClientMessage::Start), "{\"type\":\"start\"}\n");
        let g = ClientMessage::SubmitGuess {
            words: vec!["a".into(), "dog".into()],
        };
        assert_eq!(
            encode_line(&g),
            "{\"type\":\"submit_guess\",\"words\":[\"a\",\"dog\"]}\n"
        );
        assert!(decode_client("{\"type\":\"submit_guess\"}").is_err());
        // unknown fields are ignored for forward compatibility
        assert_eq!(
            decode_client("{\"type\":\"pass_turn\",\"extra\":1}").unwrap(),
            ClientMessage::PassTurn
        );
        assert!(decode_client("not json").is_err());
    }

    #[test]
    fn server_wire_forms() {
        let m = ServerMessage::Error {
            code: ErrorCode::OutOfPhase,
            message: "x".into(),
        };
        assert_eq!(
            encode_line(&m),
            "{\"type\":\"error\",\"code\":\"out_of_phase\",\"message\":\"x\"}\n"
        );
        let s = ServerMessage::Start {
            role: Role::Guesser,
            slots: vec![Slot::Hidden, Slot::Known("the".into())],
            phrase: None,
            remaining_seconds: 240.0,
        };
        assert_eq!(
            encode_line(&s),
            "{\"type\":\"start\",\"role\":\"guesser\",\"slots\":[\"hidden\",{\"known\":\"the\"}],\"remaining_seconds\":240.0}\n"
        );
    }
}
