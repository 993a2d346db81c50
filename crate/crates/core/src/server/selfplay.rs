//! Agent-vs-agent games driven through the real state machine on a
//! simulated clock.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::protocol::{ClientMessage, GuesserClient, Outbound, Role, ServerMessage};
use super::session::{session_step, Event, Phase, Session, SessionContext};
use crate::agents::{diversify_drawing, DrawerAgent, GuesserAgent};
use crate::domain::{GameRecord, Phrase, Player, Split};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfPlayConfig {
    /// Simulated seconds the drawer spends per drawing.
    pub drawing_seconds: f64,
    pub guess_seconds: f64,
    pub guesses_per_drawing: usize,
    pub drawer_id: String,
    pub guesser_id: String,
}

impl Default for SelfPlayConfig {
    fn default() -> Self {
        Self {
            drawing_seconds: 20.0,
            guess_seconds: 5.0,
            guesses_per_drawing: 5,
            drawer_id: "baseline-drawer".into(),
            guesser_id: "baseline-guesser".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SelfPlayGame {
    pub session: Session,
    pub record: GameRecord,
    /// Error replies received by either agent.
    pub protocol_errors: Vec<String>,
    /// Every message delivered to the guesser, in order.
    pub guesser_inbox: Vec<ServerMessage>,
}

struct Driver<'a> {
    session: Session,
    ctx: &'a SessionContext,
    t: f64,
    client: GuesserClient,
    errors: Vec<String>,
    inbox: Vec<ServerMessage>,
}

impl Driver<'_> {
    fn send(&mut self, from: Role, message: ClientMessage) {
        // agents do not act after the clock has run out
        if self
            .session
            .started_at
            .is_some_and(|s| self.t - s >= self.session.budget_seconds)
        {
            return self.apply(Event::Tick);
        }
        self.apply(Event::Client { from, message });
    }

    fn apply(&mut self, event: Event) {
        let (next, out) = session_step(&self.session, self.t, &event, self.ctx);
        self.session = next;
        self.deliver(out);
    }

    fn deliver(&mut self, out: Vec<Outbound>) {
        for o in out {
            if let ServerMessage::Error { code, message } = &o.message {
                self.errors
                    .push(format!("{:?} to {:?}: {message}", code, o.to));
            }
            if o.to == Role::Guesser {
                self.client.receive(&o.message);
                self.inbox.push(o.message);
            }
        }
    }
}

/// Plays one game. The guesser only sees what arrives over the protocol;
/// the drawer sees the full state, as a drawer would.
pub fn self_play(
    id: &str,
    phrase: &Phrase,
    drawer: &mut dyn DrawerAgent,
    guesser: &mut dyn GuesserAgent,
    ctx: &SessionContext,
    config: &SelfPlayConfig,
    rng: &mut dyn RngCore,
) -> SelfPlayGame {
    let mut d = Driver {
        session: Session::new(id, phrase.clone()),
        ctx,
        t: 0.0,
        client: GuesserClient::default(),
        errors: Vec::new(),
        inbox: Vec::new(),
    };
    d.send(
        Role::Drawer,
        ClientMessage::Join {
            role: Role::Drawer,
            player: Player::agent(&config.drawer_id),
            session: None,
        },
    );
    d.send(
        Role::Guesser,
        ClientMessage::Join {
            role: Role::Guesser,
            player: Player::agent(&config.guesser_id),
            session: None,
        },
    );
    d.send(Role::Drawer, ClientMessage::Start);

    while d.session.phase != Phase::Finished {
        match d.session.phase {
            Phase::DrawerTurn => {
                d.t += config.drawing_seconds;
                let drawing = diversify_drawing(drawer, &d.session.state, rng)
                    .or_else(|| d.session.state.drawings.last().cloned());
                match drawing {
                    Some(drawing) => d.send(Role::Drawer, ClientMessage::SubmitDrawing { drawing }),
                    None => {
                        // nothing to draw: let the clock run out
                        d.t = d.session.started_at.unwrap_or(0.0) + d.session.budget_seconds;
                        d.apply(Event::Tick);
                    }
                }
            }
            Phase::GuesserTurn => {
                let mut made = 0;
                while made < config.guesses_per_drawing && d.session.phase == Phase::GuesserTurn {
                    let Some(words) = d.client.view().and_then(|v| guesser.guess(v)) else {
                        break;
                    };
                    d.t += config.guess_seconds;
                    d.send(Role::Guesser, ClientMessage::SubmitGuess { words });
                    made += 1;
                }
                if d.session.phase == Phase::GuesserTurn {
                    d.t += 1.0;
                    d.send(Role::Guesser, ClientMessage::PassTurn);
                }
            }
            Phase::Lobby | Phase::Finished => break,
        }
    }
    let record = d.session.to_record(Split::Train);
    SelfPlayGame {
        session: d.session,
        record,
        protocol_errors: d.errors,
        guesser_inbox: d.inbox,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{train_alignment, AlignConfig, BaselineDrawer, BaselineGuesser};
    use crate::domain::{IconLibrary, Outcome};
    use crate::server::session::replay;
    use crate::synth::{planted_training_corpus, PlantedWorld};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn baseline_pair_plays_clean_games() {
        let lib = Arc::new(IconLibrary::bundled());
        let corpus = planted_training_corpus(&lib, 200, 11);
        let model = Arc::new(
            train_alignment(
                &corpus,
                &AlignConfig {
                    seed: 11,
                    ..Default::default()
                },
            )
            .unwrap()
            .model,
        );
        let mut drawer = BaselineDrawer::new(model.clone(), lib.clone());
        let mut guesser = BaselineGuesser::new(model, &lib);
        let ctx = SessionContext::with_library(lib.clone());
        let world = PlantedWorld::from_library(&lib);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut wins = 0;
        for i in 0..10 {
            let phrase = world.phrase(&mut rng, false);
            let g = self_play(
                &format!("sp{i}"),
                &phrase,
                &mut drawer,
                &mut guesser,
                &ctx,
                &SelfPlayConfig::default(),
                &mut rng,
            );
            assert!(g.protocol_errors.is_empty(), "{:?}", g.protocol_errors);
            assert!(g.record.violations(Some(&lib)).is_empty());
            assert_eq!(replay(&g.session, &ctx), g.session);
            wins += usize::from(g.record.outcome == Outcome::Won);
        }
        assert!(wins > 5, "{wins}/10");
        eprintln!("self-play wins {wins}/10");
    }
}
