use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::EvalConfig;
use crate::domain::{evaluate_guess, GameRecord, Phrase};

/// Win and soft-win rates when play is cut off at `cutoff` guesses or
/// drawings (`None` = unlimited).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffPoint {
    pub cutoff: Option<usize>,
    pub win_rate: f64,
    pub soft_win_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub label: String,
    pub games: usize,
    pub points: Vec<CutoffPoint>,
}

/// One table per role: rows are labelled by who held that role.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct HumanAiScores {
    pub guesser: Vec<ScoreRow>,
    pub drawer: Vec<ScoreRow>,
}

/// Phrase state after the first `limit` guesses (all when `None`).
fn phrase_after(record: &GameRecord, limit: Option<usize>) -> Phrase {
    let mut phrase = record.phrase.reset();
    for g in record
        .rounds
        .iter()
        .flat_map(|r| &r.guesses)
        .take(limit.unwrap_or(usize::MAX))
    {
        if let Ok((p, _)) = evaluate_guess(&phrase, g) {
            phrase = p;
        }
    }
    phrase
}

fn guesses_within_rounds(record: &GameRecord, rounds: Option<usize>) -> usize {
    record
        .rounds
        .iter()
        .take(rounds.unwrap_or(usize::MAX))
        .map(|r| r.guesses.len())
        .sum()
}

fn row(
    label: String,
    games: &[&GameRecord],
    cutoffs: &[Option<usize>],
    config: &EvalConfig,
    by_drawings: bool,
) -> ScoreRow {
    let points = cutoffs
        .iter()
        .map(|&c| {
            let (mut win, mut soft) = (0usize, 0usize);
            for g in games {
                let limit = if by_drawings {
                    Some(guesses_within_rounds(g, c))
                } else {
                    c
                };
                let p = phrase_after(g, limit);
                if p.is_complete() {
                    win += 1;
                }
                if config
                    .soft_win
                    .is_soft_win(&p, &p.revealed(), config.ood_mode)
                {
                    soft += 1;
                }
            }
            let n = games.len().max(1) as f64;
            CutoffPoint {
                cutoff: c,
                win_rate: win as f64 / n,
                soft_win_rate: soft as f64 / n,
            }
        })
        .collect();
    ScoreRow {
        label,
        games: games.len(),
        points,
    }
}

/// Win/soft-win curves at the configured guess and drawing cutoffs.
///
/// In the guesser table a game is filed under its guesser (agent id, or
/// `human`); in the drawer table under its drawer.
pub fn human_ai_scoring(games: &[GameRecord], config: &EvalConfig) -> HumanAiScores {
    let label = |p: &crate::domain::Player| {
        if p.ai {
            p.id.clone()
        } else {
            "human".to_string()
        }
    };
    let mut by_guesser: BTreeMap<String, Vec<&GameRecord>> = BTreeMap::new();
    let mut by_drawer: BTreeMap<String, Vec<&GameRecord>> = BTreeMap::new();
    for g in games {
        by_guesser
            .entry(label(&g.players.guesser))
            .or_default()
            .push(g);
        by_drawer
            .entry(label(&g.players.drawer))
            .or_default()
            .push(g);
    }
    let gc: Vec<Option<usize>> = config
        .guess_cutoffs
        .iter()
        .copied()
        .map(Some)
        .chain([None])
        .collect();
    let dc: Vec<Option<usize>> = config
        .drawing_cutoffs
        .iter()
        .copied()
        .map(Some)
        .chain([None])
        .collect();
    HumanAiScores {
        guesser: by_guesser
            .into_iter()
            .map(|(l, gs)| row(l, &gs, &gc, config, false))
            .collect(),
        drawer: by_drawer
            .into_iter()
            .map(|(l, gs)| row(l, &gs, &dc, config, true))
            .collect(),
    }
}

fn table(f: &mut fmt::Formatter<'_>, title: &str, rows: &[ScoreRow]) -> fmt::Result {
    let Some(first) = rows.first() else {
        return Ok(());
    };
    write!(f, "{title:<16}{:>6}", "n")?;
    for p in &first.points {
        let c = p.cutoff.map_or("inf".to_string(), |c| c.to_string());
        write!(f, "{:>9}{:>9}", format!("win@{c}"), format!("soft@{c}"))?;
    }
    writeln!(f)?;
    for r in rows {
        write!(f, "{:<16}{:>6}", r.label, r.games)?;
        for p in &r.points {
            write!(
                f,
                "{:>9.2}{:>9.2}",
                100.0 * p.win_rate,
                100.0 * p.soft_win_rate
            )?;
        }
        writeln!(f)?;
    }
    Ok(())
}

impl fmt::Display for HumanAiScores {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        table(f, "guesser", &self.guesser)?;
        table(f, "drawer", &self.drawer)
    }
}
