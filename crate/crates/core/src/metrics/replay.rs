use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{icon_f1, state_before_round, EvalConfig, MetricsReport, PerplexityReport};
use crate::agents::{DrawerAgent, GuesserAgent};
use crate::codec::{encode_drawing, QuantizationSpec};
use crate::constraints::guess_round;
use crate::domain::{evaluate_guess, GameRecord, GameState, Guess, IconLibrary, Split, Turn};

/// Per-game evaluation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameMetric {
    pub game_id: String,
    pub split: Split,
    pub won: bool,
    pub soft_won: bool,
    pub off_by_one: bool,
    /// Positions credited to the agent.
    pub credited: Vec<bool>,
    pub guesses: usize,
    pub drawings: usize,
    pub icon_f1: Option<f64>,
}

fn replay_game(
    agent: &mut dyn GuesserAgent,
    record: &GameRecord,
    config: &EvalConfig,
) -> GameMetric {
    let phrase = record.phrase.reset();
    let n = phrase.len();
    let mut credited = vec![false; n];
    // positions revealed by the human guesser in rounds already played
    let mut human_revealed = phrase.revealed();
    let mut history: Vec<Vec<Guess>> = Vec::new();
    let mut budget = config.guess_cutoff;
    let mut made_total = 0;
    let mut drawings = 0;
    let complete = |c: &[bool]| {
        phrase
            .words()
            .iter()
            .zip(c)
            .all(|(w, &hit)| hit || w.is_stopword)
    };

    for (r, round) in record.rounds.iter().enumerate() {
        if budget == 0 || complete(&credited) {
            break;
        }
        drawings += 1;
        let known = (0..n).filter(|&i| human_revealed[i] || credited[i]);
        let mut state = GameState::new(phrase.with_guessed(known));
        state.drawings = record.rounds[..=r]
            .iter()
            .map(|x| x.drawing.clone())
            .collect();
        state.guesses = history.clone();
        state.guesses.push(Vec::new());
        state.turn = Turn::Guesser;

        let made = guess_round(agent, &mut state, config.guesses_per_drawing.min(budget))
            .unwrap_or_default();
        budget -= made.len();
        made_total += made.len();
        for g in &made {
            for (i, ok) in g.correct.iter().flatten().enumerate() {
                if *ok && !human_revealed[i] {
                    credited[i] = true;
                }
            }
        }

        // the human guesses for this drawing become history for the next one
        let mut human_phrase = phrase.with_guessed((0..n).filter(|&i| human_revealed[i]));
        let mut scored = Vec::new();
        for g in &round.guesses {
            if let Ok((p, g)) = evaluate_guess(&human_phrase, g) {
                human_phrase = p;
                scored.push(g);
            }
        }
        human_revealed = human_phrase.revealed();
        scored.extend(made);
        history.push(scored);
    }

    let misses = phrase
        .words()
        .iter()
        .zip(&credited)
        .filter(|(w, &hit)| !hit && !w.is_stopword)
        .count();
    GameMetric {
        game_id: record.game_id.clone(),
        split: record.split,
        won: misses == 0,
        soft_won: config
            .soft_win
            .is_soft_win(&phrase, &credited, config.ood_mode),
        off_by_one: misses <= 1,
        credited,
        guesses: made_total,
        drawings,
        icon_f1: None,
    }
}

fn screen<'a>(
    corpus: &'a [GameRecord],
    library: Option<&IconLibrary>,
) -> (Vec<&'a GameRecord>, Vec<(String, String)>) {
    let mut ok = Vec::new();
    let mut skipped = Vec::new();
    for r in corpus {
        let v = r.violations(library);
        if v.is_empty() {
            ok.push(r);
        } else {
            skipped.push((r.game_id.clone(), v.join("; ")));
        }
    }
    (ok, skipped)
}

/// Replays human/human games with the agent in the guesser's seat.
///
/// For each drawing the agent sees the earlier drawings, the human guesses
/// made for them and its own earlier guesses, then guesses up to
/// `guesses_per_drawing` times. A word is credited only if the agent hits it
/// before the human guesser had revealed it; credit is never withdrawn.
pub fn replay_eval_guesser(
    agent: &mut dyn GuesserAgent,
    corpus: &[GameRecord],
    config: &EvalConfig,
    library: Option<&IconLibrary>,
) -> MetricsReport {
    let (games, skipped) = screen(corpus, library);
    let per_game = games
        .into_iter()
        .map(|g| replay_game(agent, g, config))
        .collect();
    MetricsReport::from_games("guesser", per_game, skipped)
}

/// Parallel [`replay_eval_guesser`]; each worker builds its own agent. The
/// result is identical to the sequential run for agents without
/// cross-game state.
pub fn replay_eval_guesser_par<A, F>(
    factory: F,
    corpus: &[GameRecord],
    config: &EvalConfig,
    library: Option<&IconLibrary>,
    threads: usize,
) -> MetricsReport
where
    A: GuesserAgent,
    F: Fn() -> A + Sync,
{
    let (games, skipped) = screen(corpus, library);
    if games.is_empty() {
        return MetricsReport::from_games("guesser", Vec::new(), skipped);
    }
    let chunk = games.len().div_ceil(threads.max(1));
    let per_game = std::thread::scope(|s| {
        let handles: Vec<_> = games
            .chunks(chunk)
            .map(|part| {
                let factory = &factory;
                s.spawn(move || {
                    let mut agent = factory();
                    part.iter()
                        .map(|g| replay_game(&mut agent, g, config))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("eval worker panicked"))
            .collect()
    });
    MetricsReport::from_games("guesser", per_game, skipped)
}

/// Icon F1 of the agent's first drawing for each distinct phrase against
/// every initial human drawing of that phrase, plus optional perplexity.
pub fn eval_drawer(
    agent: &mut dyn DrawerAgent,
    corpus: &[GameRecord],
    library: &IconLibrary,
    spec: &QuantizationSpec,
    perplexity: Option<PerplexityReport>,
) -> MetricsReport {
    let (games, mut skipped) = screen(corpus, Some(library));
    let mut by_phrase: BTreeMap<String, Vec<&GameRecord>> = BTreeMap::new();
    for g in games {
        by_phrase.entry(g.phrase.text()).or_default().push(g);
    }
    let mut per_game = Vec::new();
    for records in by_phrase.values() {
        let first = records[0];
        let humans: Vec<_> = records
            .iter()
            .filter_map(|r| r.rounds.first().map(|x| x.drawing.clone()))
            .collect();
        let Some(drawing) = agent.draw(&state_before_round(first, 0)) else {
            skipped.push((first.game_id.clone(), "agent produced no drawing".into()));
            continue;
        };
        if let Err(e) = encode_drawing(&drawing, library, spec) {
            skipped.push((
                first.game_id.clone(),
                format!("agent drawing does not encode: {e}"),
            ));
            continue;
        }
        per_game.push(GameMetric {
            game_id: first.game_id.clone(),
            split: first.split,
            won: false,
            soft_won: false,
            off_by_one: false,
            credited: vec![false; first.phrase.len()],
            guesses: 0,
            drawings: 1,
            icon_f1: icon_f1(&drawing, &humans),
        });
    }
    let mut report = MetricsReport::from_games("drawer", per_game, skipped);
    report.win_rate = None;
    report.soft_win_rate = None;
    report.off_by_one_rate = None;
    report.perplexity = perplexity;
    report
}
