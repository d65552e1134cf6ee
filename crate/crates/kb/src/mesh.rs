//! MeSH tree-number hierarchy: dot-separated codes position entities in the
//! heading tree; prefix relations define parents, children, and siblings.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::ops::Bound;

use serde::{Deserialize, Serialize};

use crate::error::{KbError, Result};
use crate::types::EntityId;

/// Wire schema of a mesh side-file line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshLine {
    pub entity_id: String,
    pub tree_numbers: Vec<String>,
}

/// Bidirectional map between entities and their MeSH tree numbers.
///
/// A tree number belongs to at most one entity; an entity may sit at several
/// positions in the tree. Entities without tree numbers are simply absent.
#[derive(Debug, Clone, Default)]
pub struct MeshTree {
    by_entity: BTreeMap<EntityId, BTreeSet<String>>,
    by_number: BTreeMap<String, EntityId>,
}

/// Parent of a tree number: the string minus its last dot-segment.
/// Single-segment (root) numbers have no parent.
pub fn parent_number(tree_number: &str) -> Option<&str> {
    tree_number.rfind('.').map(|i| &tree_number[..i])
}

impl MeshTree {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<MeshTree> {
        let mut tree = MeshTree::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| KbError::Io {
                path: "<mesh stream>".into(),
                source: e,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: MeshLine = serde_json::from_str(&line).map_err(|e| {
                KbError::InvalidInput(format!("mesh line {}: {e}", idx + 1))
            })?;
            for number in parsed.tree_numbers {
                tree.insert(&parsed.entity_id, &number)?;
            }
        }
        Ok(tree)
    }

    pub fn insert(&mut self, entity_id: &str, tree_number: &str) -> Result<()> {
        let number = tree_number.trim();
        if number.is_empty() {
            return Err(KbError::InvalidInput("empty tree number".into()));
        }
        if let Some(owner) = self.by_number.get(number) {
            if owner != entity_id {
                return Err(KbError::InvalidInput(format!(
                    "tree number {number} already owned by {owner}"
                )));
            }
            return Ok(());
        }
        self.by_number.insert(number.to_string(), entity_id.to_string());
        self.by_entity
            .entry(entity_id.to_string())
            .or_default()
            .insert(number.to_string());
        Ok(())
    }

    pub fn entity_count(&self) -> usize {
        self.by_entity.len()
    }

    pub fn contains(&self, entity_id: &str) -> bool {
        self.by_entity.contains_key(entity_id)
    }

    pub fn tree_numbers(&self, entity_id: &str) -> Option<&BTreeSet<String>> {
        self.by_entity.get(entity_id)
    }

    pub fn owner(&self, tree_number: &str) -> Option<&EntityId> {
        self.by_number.get(tree_number)
    }

    fn numbers_of(&self, entity_id: &str) -> Result<&BTreeSet<String>> {
        self.by_entity
            .get(entity_id)
            .ok_or_else(|| KbError::NotFound(format!("entity {entity_id} not in MeSH tree")))
    }

    /// Child tree numbers of `number`: numbers extending it by exactly one
    /// dot-segment.
    fn child_numbers<'a>(&'a self, number: &str) -> impl Iterator<Item = &'a str> {
        let prefix = format!("{number}.");
        let upper = format!("{number}/"); // '/' is the successor of '.' in ASCII
        self.by_number
            .range::<str, _>((Bound::Included(prefix.as_str()), Bound::Excluded(upper.as_str())))
            .map(|(k, _)| k.as_str())
            .filter(move |k| !k[prefix.len()..].contains('.'))
            .collect::<Vec<_>>()
            .into_iter()
    }

    /// Entities owning a parent tree number of any of `entity_id`'s numbers.
    /// Deduplicated and sorted by id. Root numbers contribute nothing.
    pub fn parents(&self, entity_id: &str) -> Result<Vec<EntityId>> {
        let mut out = BTreeSet::new();
        for number in self.numbers_of(entity_id)? {
            if let Some(parent) = parent_number(number) {
                if let Some(owner) = self.by_number.get(parent) {
                    out.insert(owner.clone());
                }
            }
        }
        Ok(out.into_iter().collect())
    }

    /// Entities owning a tree number that extends any of `entity_id`'s
    /// numbers by exactly one segment. Deduplicated, sorted by id.
    pub fn children(&self, entity_id: &str) -> Result<Vec<EntityId>> {
        let mut out = BTreeSet::new();
        for number in self.numbers_of(entity_id)?.clone() {
            for child in self.child_numbers(&number) {
                out.insert(self.by_number[child].clone());
            }
        }
        Ok(out.into_iter().collect())
    }

    /// Entities owning a tree number that shares a parent with any of
    /// `entity_id`'s numbers, excluding the entity itself.
    pub fn siblings(&self, entity_id: &str) -> Result<Vec<EntityId>> {
        let mut out = BTreeSet::new();
        for number in self.numbers_of(entity_id)? {
            let Some(parent) = parent_number(number) else {
                continue;
            };
            for sib in self.child_numbers(parent) {
                let owner = &self.by_number[sib];
                if owner != entity_id {
                    out.insert(owner.clone());
                }
            }
        }
        Ok(out.into_iter().collect())
    }

    /// All entities whose tree numbers sit strictly below any of
    /// `entity_id`'s numbers, at any depth.
    pub fn descendants(&self, entity_id: &str) -> Result<BTreeSet<EntityId>> {
        let mut out = BTreeSet::new();
        for number in self.numbers_of(entity_id)? {
            let prefix = format!("{number}.");
            let upper = format!("{number}/");
            for (_, owner) in self
                .by_number
                .range::<str, _>((Bound::Included(prefix.as_str()), Bound::Excluded(upper.as_str())))
            {
                if owner != entity_id {
                    out.insert(owner.clone());
                }
            }
        }
        Ok(out)
    }

    /// Serialized side-file lines, sorted by entity id.
    pub fn to_jsonl_lines(&self) -> Vec<String> {
        self.by_entity
            .iter()
            .map(|(entity_id, numbers)| {
                serde_json::to_string(&MeshLine {
                    entity_id: entity_id.clone(),
                    tree_numbers: numbers.iter().cloned().collect(),
                })
                .expect("mesh line serializes")
            })
            .collect()
    }
}
