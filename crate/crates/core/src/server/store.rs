//! Append-only, one-file-per-game JSON store sharded by date
//! (`<root>/YYYY/MM/DD/<game_id>.json`).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};

use super::ServerError;
use crate::domain::GameRecord;

#[derive(Debug, Clone)]
pub struct GameStore {
    root: PathBuf,
}

fn safe_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_.~".contains(c))
        && !id.starts_with('.')
}

impl GameStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path_for(&self, id: &str, date: NaiveDate) -> PathBuf {
        self.root
            .join(format!("{:04}", date.year()))
            .join(format!("{:02}", date.month()))
            .join(format!("{:02}", date.day()))
            .join(format!("{id}.json"))
    }

    /// Writes a finished game. Existing files are never overwritten.
    pub fn save(&self, record: &GameRecord, date: NaiveDate) -> Result<PathBuf, ServerError> {
        if !safe_id(&record.game_id) {
            return Err(ServerError::BadGameId(record.game_id.clone()));
        }
        let path = self.path_for(&record.game_id, date);
        fs::create_dir_all(path.parent().expect("sharded path has a parent"))?;
        let mut f = fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .map_err(|e| {
                if e.kind() == std::io::ErrorKind::AlreadyExists {
                    ServerError::AlreadyStored(record.game_id.clone())
                } else {
                    e.into()
                }
            })?;
        f.write_all(serde_json::to_string_pretty(record)?.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(path)
    }

    /// Looks a game up by id in any shard.
    pub fn find(&self, id: &str) -> Result<Option<GameRecord>, ServerError> {
        if !safe_id(id) {
            return Ok(None);
        }
        let name = format!("{id}.json");
        for entry in walkdir::WalkDir::new(&self.root)
            .min_depth(4)
            .max_depth(4)
            .sort_by_file_name()
        {
            let entry = entry.map_err(|e| ServerError::Io(e.into()))?;
            if entry.file_name().to_str() == Some(name.as_str()) {
                return Ok(Some(serde_json::from_str(&fs::read_to_string(
                    entry.path(),
                )?)?));
            }
        }
        Ok(None)
    }

    /// Every stored game, in path order.
    pub fn load_all(&self) -> Result<Vec<GameRecord>, ServerError> {
        let mut out = Vec::new();
        if !self.root.exists() {
            return Ok(out);
        }
        for entry in walkdir::WalkDir::new(&self.root)
            .min_depth(4)
            .max_depth(4)
            .sort_by_file_name()
        {
            let entry = entry.map_err(|e| ServerError::Io(e.into()))?;
            if entry.path().extension().is_some_and(|e| e == "json") {
                out.push(serde_json::from_str(&fs::read_to_string(entry.path())?)?);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sharded_append_only() {
        let dir = tempfile::tempdir().unwrap();
        let store = GameStore::new(dir.path());
        let rec = crate::synth::bundled_corpus().remove(0);
        let date = NaiveDate::from_ymd_opt(2026, 3, 7).unwrap();
        let path = store.save(&rec, date).unwrap();
        assert!(path.ends_with(format!("2026/03/07/{}.json", rec.game_id)));
        assert!(matches!(
            store.save(&rec, date),
            Err(ServerError::AlreadyStored(_))
        ));
        assert_eq!(store.find(&rec.game_id).unwrap().unwrap(), rec);
        assert_eq!(store.find("../etc").unwrap(), None);
        assert_eq!(store.load_all().unwrap(), vec![rec.clone()]);
        let mut bad = rec;
        bad.game_id = "../x".into();
        assert!(matches!(
            store.save(&bad, date),
            Err(ServerError::BadGameId(_))
        ));
    }
}
