use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DomainError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Icon {
    pub id: String,
    /// Lowercase display name, one to four words.
    pub name: String,
    #[serde(default)]
    pub tags: Vec<String>,
    /// Path of the icon artwork, relative to the manifest.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub art: Option<String>,
}

impl Icon {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            tags: Vec::new(),
            art: None,
        }
    }
}

/// On-disk form of an icon library.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LibraryManifest {
    pub icons: Vec<Icon>,
    #[serde(default)]
    pub arrows: Vec<String>,
}

/// The set of icons a drawer may place. Ids are unique; `arrows` names the
/// straight-arrow icons that get direction-aware descriptions.
#[derive(Debug, Clone, PartialEq)]
pub struct IconLibrary {
    icons: Vec<Icon>,
    arrows: Vec<String>,
    index: HashMap<String, usize>,
}

impl IconLibrary {
    pub fn new(icons: Vec<Icon>, arrows: Vec<String>) -> Result<Self, DomainError> {
        let mut index = HashMap::with_capacity(icons.len());
        for (i, icon) in icons.iter().enumerate() {
            if icon.id.is_empty()
                || icon.id.contains(['<', '>', ':'])
                || icon.id.chars().any(char::is_whitespace)
            {
                return Err(DomainError::InvalidIcon {
                    id: icon.id.clone(),
                    reason: "id must be a plain token".into(),
                });
            }
            if icon.name.trim().is_empty() {
                return Err(DomainError::InvalidIcon {
                    id: icon.id.clone(),
                    reason: "empty name".into(),
                });
            }
            if index.insert(icon.id.clone(), i).is_some() {
                return Err(DomainError::DuplicateIcon(icon.id.clone()));
            }
        }
        for a in &arrows {
            if !index.contains_key(a) {
                return Err(DomainError::UnknownArrow(a.clone()));
            }
        }
        Ok(Self {
            icons,
            arrows,
            index,
        })
    }

    pub fn from_manifest(manifest: LibraryManifest) -> Result<Self, DomainError> {
        Self::new(manifest.icons, manifest.arrows)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let manifest: LibraryManifest = serde_json::from_str(&text)?;
        Ok(Self::from_manifest(manifest)?)
    }

    /// The demo library bundled with the crate.
    pub fn bundled() -> Self {
        let manifest: LibraryManifest = serde_json::from_str(include_str!("../../data/icons.json"))
            .expect("bundled icon manifest parses");
        Self::from_manifest(manifest).expect("bundled icon manifest is valid")
    }

    pub fn manifest(&self) -> LibraryManifest {
        LibraryManifest {
            icons: self.icons.clone(),
            arrows: self.arrows.clone(),
        }
    }

    pub fn icons(&self) -> &[Icon] {
        &self.icons
    }

    pub fn len(&self) -> usize {
        self.icons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.icons.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Icon> {
        self.index.get(id).map(|&i| &self.icons[i])
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn is_arrow(&self, id: &str) -> bool {
        self.arrows.iter().any(|a| a == id)
    }

    pub fn arrow_ids(&self) -> &[String] {
        &self.arrows
    }
}
