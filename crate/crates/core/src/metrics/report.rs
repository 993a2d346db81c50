use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{GameMetric, HumanAiScores, MetricsError, PerplexityReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub kind: String,
    pub games: usize,
    pub skipped: Vec<(String, String)>,
    pub win_rate: Option<f64>,
    pub soft_win_rate: Option<f64>,
    pub off_by_one_rate: Option<f64>,
    pub icon_f1: Option<f64>,
    pub perplexity: Option<PerplexityReport>,
    pub curves: Option<HumanAiScores>,
    pub per_game: Vec<GameMetric>,
}

fn rate<T>(items: &[T], pred: impl Fn(&T) -> bool) -> Option<f64> {
    (!items.is_empty())
        .then(|| items.iter().filter(|x| pred(x)).count() as f64 / items.len() as f64)
}

impl MetricsReport {
    pub fn from_games(
        kind: &str,
        per_game: Vec<GameMetric>,
        skipped: Vec<(String, String)>,
    ) -> Self {
        let f1: Vec<f64> = per_game.iter().filter_map(|g| g.icon_f1).collect();
        Self {
            kind: kind.to_string(),
            games: per_game.len(),
            skipped,
            win_rate: rate(&per_game, |g| g.won),
            soft_win_rate: rate(&per_game, |g| g.soft_won),
            off_by_one_rate: rate(&per_game, |g| g.off_by_one),
            icon_f1: (!f1.is_empty()).then(|| f1.iter().sum::<f64>() / f1.len() as f64),
            perplexity: None,
            curves: None,
            per_game,
        }
    }
}

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{:.1}", 100.0 * x))
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{} evaluation: {} games ({} skipped)",
            self.kind,
            self.games,
            self.skipped.len()
        )?;
        writeln!(f, "  win          {}", pct(self.win_rate))?;
        writeln!(f, "  soft win     {}", pct(self.soft_win_rate))?;
        writeln!(f, "  off-by-one   {}", pct(self.off_by_one_rate))?;
        if let Some(x) = self.icon_f1 {
            writeln!(f, "  icon F1      {x:.4}")?;
        }
        if let Some(p) = &self.perplexity {
            match p.perplexity {
                Some(v) => writeln!(f, "  perplexity   {v:.3} [{}]", p.token_format)?,
                None => writeln!(f, "  perplexity   n/a [{}]", p.token_format)?,
            }
        }
        if let Some(c) = &self.curves {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    game_id: &'a str,
    split: &'a str,
    won: bool,
    soft_won: bool,
    off_by_one: bool,
    credited: String,
    guesses: usize,
    drawings: usize,
    icon_f1: Option<f64>,
}

/// Writes `<stem>.json` (the whole report) and `<stem>.csv` (one row per game).
pub fn write_report_files(
    report: &MetricsReport,
    dir: &Path,
    stem: &str,
) -> Result<(PathBuf, PathBuf), MetricsError> {
    fs::create_dir_all(dir)?;
    let json = dir.join(format!("{stem}.json"));
    fs::write(&json, serde_json::to_string_pretty(report)? + "\n")?;
    let csv_path = dir.join(format!("{stem}.csv"));
    let mut w = csv::Writer::from_path(&csv_path)?;
    for g in &report.per_game {
        w.serialize(CsvRow {
            game_id: &g.game_id,
            split: g.split.as_str(),
            won: g.won,
            soft_won: g.soft_won,
            off_by_one: g.off_by_one,
            credited: g
                .credited
                .iter()
                .map(|&c| if c { '1' } else { '0' })
                .collect(),
            guesses: g.guesses,
            drawings: g.drawings,
            icon_f1: g.icon_f1,
        })?;
    }
    w.flush()?;
    Ok((json, csv_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Split;

    fn metric(id: &str, won: bool) -> GameMetric {
        GameMetric {
            game_id: id.into(),
            split: Split::IndValid,
            won,
            soft_won: true,
            off_by_one: true,
            credited: vec![won, true],
            guesses: 3,
            drawings: 1,
            icon_f1: None,
        }
    }

    #[test]
    fn rates_and_files() {
        let r = MetricsReport::from_games(
            "guesser",
            vec![metric("a", true), metric("b", false)],
            vec![],
        );
        assert_eq!(r.win_rate, Some(0.5));
        assert_eq!(r.soft_win_rate, Some(1.0));
        let dir = tempfile::tempdir().unwrap();
        let (json, csv) = write_report_files(&r, dir.path(), "out").unwrap();
        let back: MetricsReport = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(back, r);
        let text = fs::read_to_string(csv).unwrap();
        assert_eq!(
            text,
            "game_id,split,won,soft_won,off_by_one,credited,guesses,drawings,icon_f1\n\
             a,ind_valid,true,true,true,11,3,1,\n\
             b,ind_valid,false,true,true,01,3,1,\n"
        );
        assert!(r.to_string().contains("win          50.0"));
    }

    #[test]
    fn empty_report_has_undefined_rates() {
        let r = MetricsReport::from_games("guesser", vec![], vec![]);
        assert_eq!(r.win_rate, None);
        assert!(r.to_string().contains("n/a"));
    }
}
