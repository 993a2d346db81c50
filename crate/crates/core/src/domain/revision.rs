use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Drawing, GameRecord};

/// How a drawer changed the drawing between two consecutive rounds.
///
/// Variants are ordered so that the game-level label is the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Revision {
    /// Same icons re-posed, or some removed.
    Edit,
    /// Every old icon kept, new ones added.
    Add,
    /// Some icons replaced.
    Redraw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameRevision {
    SingleDrawing,
    Edit,
    Add,
    Redraw,
}

impl From<Revision> for GameRevision {
    fn from(r: Revision) -> Self {
        match r {
            Revision::Edit => GameRevision::Edit,
            Revision::Add => GameRevision::Add,
            Revision::Redraw => GameRevision::Redraw,
        }
    }
}

fn is_sub_bag(small: &BTreeMap<&str, usize>, big: &BTreeMap<&str, usize>) -> bool {
    small
        .iter()
        .all(|(id, n)| big.get(id).is_some_and(|m| m >= n))
}

/// Labels a revision by comparing icon-id multisets.
pub fn classify_revision(prev: &Drawing, next: &Drawing) -> Revision {
    let a = prev.icon_bag();
    let b = next.icon_bag();
    if a == b {
        return Revision::Edit;
    }
    if is_sub_bag(&a, &b) {
        Revision::Add
    } else if is_sub_bag(&b, &a) {
        Revision::Edit
    } else {
        Revision::Redraw
    }
}

/// The latest-ordered label over all of a game's revisions.
pub fn classify_game_revision(record: &GameRecord) -> GameRevision {
    record
        .rounds
        .windows(2)
        .map(|w| classify_revision(&w[0].drawing, &w[1].drawing))
        .max()
        .map_or(GameRevision::SingleDrawing, GameRevision::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::IconPlacement;

    fn drawing(ids: &[&str]) -> Drawing {
        Drawing::new(
            ids.iter()
                .enumerate()
                .map(|(i, id)| IconPlacement::at(*id, 0.1 * i as f64, 0.5))
                .collect(),
            0,
        )
    }

    #[test]
    fn adding_an_arrow_is_add() {
        assert_eq!(
            classify_revision(
                &drawing(&["dog", "tree"]),
                &drawing(&["dog", "tree", "arrow"])
            ),
            Revision::Add
        );
    }

    #[test]
    fn moving_is_edit() {
        let prev = drawing(&["dog", "tree"]);
        let mut next = prev.clone();
        next.placements[0].x = 0.9;
        assert_eq!(classify_revision(&prev, &next), Revision::Edit);
        assert_eq!(classify_revision(&prev, &prev), Revision::Edit);
    }

    #[test]
    fn removal_is_edit() {
        assert_eq!(
            classify_revision(
                &drawing(&["dog", "tree", "tree"]),
                &drawing(&["tree", "dog"])
            ),
            Revision::Edit
        );
    }

    #[test]
    fn replacement_is_redraw() {
        assert_eq!(
            classify_revision(&drawing(&["dog", "tree"]), &drawing(&["cat", "tree"])),
            Revision::Redraw
        );
        // multiplicity counts: one tree swapped for a second dog
        assert_eq!(
            classify_revision(&drawing(&["dog", "tree"]), &drawing(&["dog", "dog"])),
            Revision::Redraw
        );
    }

    #[test]
    fn game_label_is_latest_in_order() {
        let labels = |v: &[Revision]| {
            v.iter()
                .copied()
                .max()
                .map_or(GameRevision::SingleDrawing, GameRevision::from)
        };
        assert_eq!(labels(&[Revision::Edit, Revision::Add]), GameRevision::Add);
        assert_eq!(
            labels(&[Revision::Add, Revision::Redraw]),
            GameRevision::Redraw
        );
        assert_eq!(labels(&[]), GameRevision::SingleDrawing);
    }
}
