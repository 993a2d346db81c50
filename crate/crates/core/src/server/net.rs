//! The live server: NDJSON game connections over TCP plus a small read-only
//! HTTP surface.
//!
//! Each session is owned by one actor task that applies events in arrival
//! order, so transitions are serialized per session while sessions run
//! concurrently. Agents run on the blocking pool and hand their move back to
//! the actor as an ordinary client message.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tokio::io::{AsyncBufReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::{mpsc, watch};
use tokio::task::JoinHandle;

use super::protocol::{
    decode_client, encode_line, ClientMessage, ErrorCode, GuesserClient, Outbound, Role,
    ServerMessage,
};
use super::session::{session_step, Event, Phase, Session, SessionContext};
use super::store::GameStore;
use crate::agents::{
    diversify_drawing, AlignmentModel, BaselineDrawer, BaselineGuesser, DrawerAgent, GuesserAgent,
};
use crate::domain::{Drawing, IconLibrary, Phrase, Player, Split};
use crate::synth::PlantedWorld;

/// Who plays a role in sessions opened on this server.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AgentChoice {
    #[default]
    Human,
    Baseline,
}

impl std::str::FromStr for AgentChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "human" => Ok(Self::Human),
            "baseline" => Ok(Self::Baseline),
            other => Err(format!(
                "unknown agent `{other}` (expected human or baseline)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub host: String,
    /// Game (NDJSON) port; 0 picks a free one.
    pub port: u16,
    pub http_port: u16,
    pub data_dir: PathBuf,
    pub library: Arc<IconLibrary>,
    /// Directory icon `art` paths are relative to.
    pub art_root: Option<PathBuf>,
    pub alignment: Option<Arc<AlignmentModel>>,
    pub drawer: AgentChoice,
    pub guesser: AgentChoice,
    /// Phrases to draw from; empty means synthetic phrases over the library.
    pub phrases: Vec<Phrase>,
    pub seed: u64,
    pub tick: Duration,
    pub budget_seconds: f64,
    /// Split stamped on stored games.
    pub split: Split,
}

impl ServeConfig {
    pub fn new(data_dir: impl Into<PathBuf>, library: Arc<IconLibrary>) -> Self {
        Self {
            host: "127.0.0.1".into(),
            port: 7878,
            http_port: 7879,
            data_dir: data_dir.into(),
            library,
            art_root: None,
            alignment: None,
            drawer: AgentChoice::Human,
            guesser: AgentChoice::Human,
            phrases: Vec::new(),
            seed: 0,
            tick: Duration::from_secs(1),
            budget_seconds: super::GAME_SECONDS,
            split: Split::Train,
        }
    }
}

/// A running server. Dropping it does not stop the server; call
/// [`ServerHandle::shutdown`].
pub struct ServerHandle {
    pub game_addr: SocketAddr,
    pub http_addr: SocketAddr,
    shutdown: watch::Sender<bool>,
    tasks: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub async fn shutdown(self) {
        let _ = self.shutdown.send(true);
        for t in self.tasks {
            let _ = t.await;
        }
    }

    /// Resolves once shutdown is requested elsewhere (or never).
    pub async fn wait(self) {
        for t in self.tasks {
            let _ = t.await;
        }
    }
}

enum Command {
    Join {
        role: Role,
        message: ClientMessage,
        tx: mpsc::UnboundedSender<String>,
    },
    Line {
        role: Role,
        line: String,
    },
    Agent {
        role: Role,
        message: Option<ClientMessage>,
        drawer: Option<Box<dyn DrawerAgent + Send>>,
        guesser: Option<Box<dyn GuesserAgent + Send>>,
    },
    Left {
        role: Role,
    },
}

struct Hub {
    cfg: ServeConfig,
    ctx: SessionContext,
    store: GameStore,
    sessions: Mutex<HashMap<String, mpsc::UnboundedSender<Command>>>,
    counter: AtomicU64,
    rng: Mutex<ChaCha8Rng>,
    stop: watch::Receiver<bool>,
}

impl Hub {
    fn pick_phrase(&self) -> Phrase {
        let mut rng = self.rng.lock().expect("rng lock");
        if self.cfg.phrases.is_empty() {
            PlantedWorld::from_library(&self.cfg.library).phrase(&mut *rng, false)
        } else {
            let i = (rng.next_u64() % self.cfg.phrases.len() as u64) as usize;
            self.cfg.phrases[i].reset()
        }
    }

    /// Opens a session and returns its command channel.
    fn open(self: &Arc<Self>) -> (String, mpsc::UnboundedSender<Command>) {
        let n = self.counter.fetch_add(1, Ordering::Relaxed);
        let salt = self.rng.lock().expect("rng lock").next_u32();
        let id = format!("s{n:05}-{salt:08x}");
        let mut session = Session::new(id.clone(), self.pick_phrase());
        session.budget_seconds = self.cfg.budget_seconds;
        let (tx, rx) = mpsc::unbounded_channel();
        self.sessions
            .lock()
            .expect("hub lock")
            .insert(id.clone(), tx.clone());
        let actor = Actor::new(self.clone(), session, tx.clone(), n);
        tokio::spawn(actor.run(rx));
        (id, tx)
    }

    fn find(&self, id: &str) -> Option<mpsc::UnboundedSender<Command>> {
        self.sessions.lock().expect("hub lock").get(id).cloned()
    }
}

struct Actor {
    hub: Arc<Hub>,
    session: Session,
    me: mpsc::UnboundedSender<Command>,
    started: Instant,
    conns: HashMap<Role, mpsc::UnboundedSender<String>>,
    drawer: Option<Box<dyn DrawerAgent + Send>>,
    guesser: Option<Box<dyn GuesserAgent + Send>>,
    agent_roles: Vec<Role>,
    /// Agent guesses made against the current drawing.
    agent_guesses: usize,
    busy: bool,
    /// Log length at which an agent last failed to move; it is not asked
    /// again until something happens.
    stuck_at: Option<usize>,
    client: GuesserClient,
    rng: ChaCha8Rng,
}

impl Actor {
    fn new(hub: Arc<Hub>, session: Session, me: mpsc::UnboundedSender<Command>, n: u64) -> Self {
        let mut drawer: Option<Box<dyn DrawerAgent + Send>> = None;
        let mut guesser: Option<Box<dyn GuesserAgent + Send>> = None;
        if let Some(model) = &hub.cfg.alignment {
            if hub.cfg.drawer == AgentChoice::Baseline {
                drawer = Some(Box::new(BaselineDrawer::new(
                    model.clone(),
                    hub.cfg.library.clone(),
                )));
            }
            if hub.cfg.guesser == AgentChoice::Baseline {
                guesser = Some(Box::new(BaselineGuesser::new(
                    model.clone(),
                    &hub.cfg.library,
                )));
            }
        }
        let mut agent_roles = Vec::new();
        if drawer.is_some() {
            agent_roles.push(Role::Drawer);
        }
        if guesser.is_some() {
            agent_roles.push(Role::Guesser);
        }
        let rng = ChaCha8Rng::seed_from_u64(hub.cfg.seed ^ n.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        Self {
            hub,
            session,
            me,
            started: Instant::now(),
            conns: HashMap::new(),
            drawer,
            guesser,
            agent_roles,
            agent_guesses: 0,
            busy: false,
            stuck_at: None,
            client: GuesserClient::default(),
            rng,
        }
    }

    fn now(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }

    fn step(&mut self, event: Event) {
        let (next, out) = session_step(&self.session, self.now(), &event, &self.hub.ctx);
        self.session = next;
        self.deliver(out);
    }

    fn deliver(&mut self, out: Vec<Outbound>) {
        for o in out {
            if o.to == Role::Guesser && self.agent_roles.contains(&Role::Guesser) {
                self.client.receive(&o.message);
            }
            if let ServerMessage::SubmitDrawing { .. } = o.message {
                self.agent_guesses = 0;
            }
            if let Some(tx) = self.conns.get(&o.to) {
                let _ = tx.send(encode_line(&o.message));
            }
        }
    }

    async fn run(mut self, mut rx: mpsc::UnboundedReceiver<Command>) {
        for role in self.agent_roles.clone() {
            let id = match role {
                Role::Drawer => "baseline-drawer",
                Role::Guesser => "baseline-guesser",
            };
            let join = ClientMessage::Join {
                role,
                player: Player::agent(id),
                session: None,
            };
            self.step(Event::Client {
                from: role,
                message: join,
            });
        }
        let mut ticker = tokio::time::interval(self.hub.cfg.tick);
        ticker.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
        let mut stop = self.hub.stop.clone();
        loop {
            tokio::select! {
                cmd = rx.recv() => match cmd {
                    Some(cmd) => self.handle(cmd),
                    None => break,
                },
                _ = ticker.tick() => self.step(Event::Tick),
                _ = stop.changed() => break,
            }
            if self.session.phase == Phase::Finished {
                self.finish();
                break;
            }
            self.maybe_run_agent();
        }
        self.hub
            .sessions
            .lock()
            .expect("hub lock")
            .remove(&self.session.id);
    }

    fn handle(&mut self, cmd: Command) {
        match cmd {
            Command::Join { role, message, tx } => {
                if self.conns.contains_key(&role) || self.agent_roles.contains(&role) {
                    let _ = tx.send(encode_line(&ServerMessage::Error {
                        code: ErrorCode::RoleTaken,
                        message: "role already taken".into(),
                    }));
                    return;
                }
                let before = self.session.log.len();
                self.conns.insert(role, tx);
                self.step(Event::Client {
                    from: role,
                    message,
                });
                if self.session.log.len() == before {
                    self.conns.remove(&role);
                }
            }
            Command::Line { role, line } => match decode_client(&line) {
                Ok(message) => self.step(Event::Client {
                    from: role,
                    message,
                }),
                Err(e) => {
                    if let Some(tx) = self.conns.get(&role) {
                        let _ = tx.send(encode_line(&ServerMessage::Error {
                            code: ErrorCode::Malformed,
                            message: e.to_string(),
                        }));
                    }
                }
            },
            Command::Agent {
                role,
                message,
                drawer,
                guesser,
            } => {
                self.busy = false;
                if drawer.is_some() {
                    self.drawer = drawer;
                }
                if guesser.is_some() {
                    self.guesser = guesser;
                }
                let before = self.session.log.len();
                if let Some(message) = message {
                    if matches!(message, ClientMessage::SubmitGuess { .. }) {
                        self.agent_guesses += 1;
                    }
                    self.step(Event::Client {
                        from: role,
                        message,
                    });
                }
                if self.session.log.len() == before {
                    self.stuck_at = Some(before);
                }
            }
            Command::Left { role } => {
                self.conns.remove(&role);
            }
        }
    }

    /// Starts the game once both seats are filled, and hands the turn to an
    /// agent when it is theirs.
    fn maybe_run_agent(&mut self) {
        if self.busy || self.stuck_at == Some(self.session.log.len()) {
            return;
        }
        let s = &self.session;
        if s.phase == Phase::Lobby {
            if s.drawer.is_some() && s.guesser.is_some() && self.agent_roles.contains(&Role::Drawer)
            {
                self.step(Event::Client {
                    from: Role::Drawer,
                    message: ClientMessage::Start,
                });
            }
            return;
        }
        let limit = self.hub.ctx.ai_guess_limit.unwrap_or(5);
        match s.phase {
            Phase::DrawerTurn if self.drawer.is_some() => {
                let mut agent = self.drawer.take().expect("checked");
                let state = s.state.clone();
                let mut rng = ChaCha8Rng::seed_from_u64(self.rng.next_u64());
                let me = self.me.clone();
                self.busy = true;
                tokio::task::spawn_blocking(move || {
                    let drawing: Option<Drawing> =
                        diversify_drawing(agent.as_mut(), &state, &mut rng)
                            .or_else(|| state.drawings.last().cloned());
                    let message = drawing.map(|drawing| ClientMessage::SubmitDrawing { drawing });
                    let _ = me.send(Command::Agent {
                        role: Role::Drawer,
                        message,
                        drawer: Some(agent),
                        guesser: None,
                    });
                });
            }
            Phase::GuesserTurn if self.guesser.is_some() => {
                let mut agent = self.guesser.take().expect("checked");
                let view = self.client.view().cloned();
                let done = self.agent_guesses >= limit;
                let me = self.me.clone();
                self.busy = true;
                tokio::task::spawn_blocking(move || {
                    let words = if done {
                        None
                    } else {
                        view.and_then(|v| agent.guess(&v))
                    };
                    let message = Some(match words {
                        Some(words) => ClientMessage::SubmitGuess { words },
                        None => ClientMessage::PassTurn,
                    });
                    let _ = me.send(Command::Agent {
                        role: Role::Guesser,
                        message,
                        drawer: None,
                        guesser: Some(agent),
                    });
                });
            }
            _ => {}
        }
    }

    fn finish(&mut self) {
        let record = self.session.to_record(self.hub.cfg.split);
        match self
            .hub
            .store
            .save(&record, chrono::Utc::now().date_naive())
        {
            Ok(path) => log::info!(
                "session {} finished ({:?}), stored at {}",
                self.session.id,
                record.outcome,
                path.display()
            ),
            Err(e) => log::error!(
                "session {} finished but could not be stored: {e}",
                self.session.id
            ),
        }
        // dropping the senders closes the connections once flushed
        self.conns.clear();
    }
}

async fn connection(hub: Arc<Hub>, stream: TcpStream, mut stop: watch::Receiver<bool>) {
    let (read, mut write) = stream.into_split();
    let mut lines = BufReader::new(read).lines();
    let (tx, mut out_rx) = mpsc::unbounded_channel::<String>();
    let mut writer = tokio::spawn(async move {
        while let Some(line) = out_rx.recv().await {
            if write.write_all(line.as_bytes()).await.is_err() {
                break;
            }
        }
        let _ = write.shutdown().await;
    });

    // Until joined, this task owns the outbound sender. On join it moves to
    // the session, so the connection closes when the session drops it.
    let mut unbound = Some(tx);
    let reply = |tx: &mpsc::UnboundedSender<String>, code, message: String| {
        let _ = tx.send(encode_line(&ServerMessage::Error { code, message }));
    };
    let mut bound: Option<(Role, mpsc::UnboundedSender<Command>)> = None;
    loop {
        let line = tokio::select! {
            l = lines.next_line() => l,
            _ = &mut writer => return,
            _ = stop.changed() => break,
        };
        let Ok(Some(line)) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        if let Some((role, session)) = &bound {
            if session.send(Command::Line { role: *role, line }).is_err() {
                break;
            }
            continue;
        }
        let Some(tx) = unbound.take() else { break };
        // the first accepted message must be a join
        let message = match decode_client(&line) {
            Ok(m) => m,
            Err(e) => {
                reply(&tx, ErrorCode::Malformed, e.to_string());
                unbound = Some(tx);
                continue;
            }
        };
        let ClientMessage::Join {
            role,
            session: code,
            ..
        } = &message
        else {
            reply(&tx, ErrorCode::NotReady, "join a session first".into());
            unbound = Some(tx);
            continue;
        };
        let role = *role;
        let session = match code {
            Some(code) => match hub.find(code) {
                Some(s) => s,
                None => {
                    reply(
                        &tx,
                        ErrorCode::NotReady,
                        format!("no open session `{code}`"),
                    );
                    unbound = Some(tx);
                    continue;
                }
            },
            None => hub.open().1,
        };
        if let Err(mpsc::error::SendError(Command::Join { tx, .. })) =
            session.send(Command::Join { role, message, tx })
        {
            reply(&tx, ErrorCode::Finished, "session closed".into());
            unbound = Some(tx);
            continue;
        }
        bound = Some((role, session));
    }
    if let Some((role, session)) = bound {
        let _ = session.send(Command::Left { role });
    }
    drop(unbound);
    let _ = writer.await;
}

#[derive(Clone)]
struct HttpState {
    hub: Arc<Hub>,
}

async fn health(State(st): State<HttpState>) -> Json<serde_json::Value> {
    let open = st.hub.sessions.lock().expect("hub lock").len();
    Json(serde_json::json!({ "status": "ok", "open_sessions": open }))
}

async fn icons(State(st): State<HttpState>) -> Json<crate::domain::LibraryManifest> {
    Json(st.hub.cfg.library.manifest())
}

async fn icon_art(State(st): State<HttpState>, UrlPath(id): UrlPath<String>) -> Response {
    let art = st.hub.cfg.library.get(&id).and_then(|i| i.art.clone());
    let (Some(root), Some(art)) = (&st.hub.cfg.art_root, art) else {
        return StatusCode::NOT_FOUND.into_response();
    };
    let rel = std::path::Path::new(&art);
    if rel.is_absolute()
        || rel
            .components()
            .any(|c| matches!(c, std::path::Component::ParentDir))
    {
        return StatusCode::NOT_FOUND.into_response();
    }
    match tokio::fs::read(root.join(rel)).await {
        Ok(bytes) => {
            let mime = match rel.extension().and_then(|e| e.to_str()) {
                Some("svg") => "image/svg+xml",
                Some("png") => "image/png",
                _ => "application/octet-stream",
            };
            ([(header::CONTENT_TYPE, mime)], bytes).into_response()
        }
        Err(_) => StatusCode::NOT_FOUND.into_response(),
    }
}

async fn game(State(st): State<HttpState>, UrlPath(id): UrlPath<String>) -> Response {
    let store = st.hub.store.clone();
    match tokio::task::spawn_blocking(move || store.find(&id)).await {
        Ok(Ok(Some(record))) => Json(record).into_response(),
        Ok(Ok(None)) => StatusCode::NOT_FOUND.into_response(),
        _ => StatusCode::INTERNAL_SERVER_ERROR.into_response(),
    }
}

fn router(hub: Arc<Hub>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/icons", get(icons))
        .route("/icons/:id/art", get(icon_art))
        .route("/games/:id", get(game))
        .with_state(HttpState { hub })
}

/// Binds both listeners and starts serving. Returns once the sockets are
/// bound; the server runs until [`ServerHandle::shutdown`].
pub async fn serve(cfg: ServeConfig) -> std::io::Result<ServerHandle> {
    if (cfg.drawer == AgentChoice::Baseline || cfg.guesser == AgentChoice::Baseline)
        && cfg.alignment.is_none()
    {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "baseline agents need an alignment model",
        ));
    }
    let game_listener = TcpListener::bind((cfg.host.as_str(), cfg.port)).await?;
    let http_listener = TcpListener::bind((cfg.host.as_str(), cfg.http_port)).await?;
    let game_addr = game_listener.local_addr()?;
    let http_addr = http_listener.local_addr()?;
    let (shutdown, stop) = watch::channel(false);

    let mut ctx = SessionContext::with_library(cfg.library.clone());
    ctx.alignment = cfg.alignment.clone();
    let hub = Arc::new(Hub {
        store: GameStore::new(cfg.data_dir.clone()),
        rng: Mutex::new(ChaCha8Rng::seed_from_u64(cfg.seed)),
        cfg,
        ctx,
        sessions: Mutex::new(HashMap::new()),
        counter: AtomicU64::new(0),
        stop: stop.clone(),
    });

    let accept = {
        let hub = hub.clone();
        let mut stop = stop.clone();
        tokio::spawn(async move {
            loop {
                tokio::select! {
                    r = game_listener.accept() => match r {
                        Ok((stream, peer)) => {
                            log::debug!("connection from {peer}");
                            tokio::spawn(connection(hub.clone(), stream, stop.clone()));
                        }
                        Err(e) => log::warn!("accept failed: {e}"),
                    },
                    _ = stop.changed() => break,
                }
            }
        })
    };
    let http = {
        let mut stop = stop.clone();
        let app = router(hub);
        tokio::spawn(async move {
            let _ = axum::serve(http_listener, app)
                .with_graceful_shutdown(async move {
                    let _ = stop.changed().await;
                })
                .await;
        })
    };
    Ok(ServerHandle {
        game_addr,
        http_addr,
        shutdown,
        tasks: vec![accept, http],
    })
}
