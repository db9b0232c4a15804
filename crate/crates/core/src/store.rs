//! Per-actor mind-map blocks.
//!
//! Each actor gets one block on first appearance. Inside a block collocations
//! are filed under their verb, and every object entry keeps the ascending
//! vector of positions at which the full collocation occurred. The store also
//! keeps an append-only event log so any earlier state can be rebuilt.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collocation::{Collocation, CollocationKey};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StoreError {
    #[error("position {position} precedes stored position {latest}")]
    OutOfOrder { position: u64, latest: u64 },
    #[error("unknown collocation {0}")]
    UnknownKey(CollocationKey),
    #[error("unknown actor {0:?}")]
    UnknownActor(String),
    #[error("occurrence positions must be positive and strictly ascending: {0:?}")]
    InvalidOccurrences(Vec<u64>),
    #[error("inconsistent store document: {0}")]
    Inconsistent(String),
}

/// Strictly ascending sentence positions at which one collocation appeared.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct OccurrenceVector(Vec<u64>);

impl OccurrenceVector {
    pub fn new(positions: Vec<u64>) -> Result<Self, StoreError> {
        let ascending = positions.windows(2).all(|w| w[0] < w[1]);
        if !ascending || positions.first() == Some(&0) {
            return Err(StoreError::InvalidOccurrences(positions));
        }
        Ok(OccurrenceVector(positions))
    }

    /// Sorts and deduplicates arbitrary positions.
    pub fn from_unordered(positions: impl IntoIterator<Item = u64>) -> Result<Self, StoreError> {
        let mut positions: Vec<u64> = positions.into_iter().collect();
        positions.sort_unstable();
        positions.dedup();
        OccurrenceVector::new(positions)
    }

    pub fn positions(&self) -> &[u64] {
        &self.0
    }

    /// The dimension `d`, i.e. how many times the collocation occurred.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Most recent occurrence.
    pub fn last(&self) -> Option<u64> {
        self.0.last().copied()
    }

    /// Positions up to and including `c`.
    pub fn until(&self, c: u64) -> OccurrenceVector {
        let end = self.0.partition_point(|&p| p <= c);
        OccurrenceVector(self.0[..end].to_vec())
    }

    fn push(&mut self, position: u64) -> bool {
        match self.0.last() {
            Some(&last) if last >= position => false,
            _ => {
                self.0.push(position);
                true
            }
        }
    }
}

impl TryFrom<Vec<u64>> for OccurrenceVector {
    type Error = StoreError;

    fn try_from(positions: Vec<u64>) -> Result<Self, Self::Error> {
        OccurrenceVector::new(positions)
    }
}

impl From<OccurrenceVector> for Vec<u64> {
    fn from(v: OccurrenceVector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectEntry {
    pub object: Option<String>,
    pub positions: OccurrenceVector,
}

/// One actor's memory: verbs in first-appearance order, each with its object
/// entries in first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MindMapBlock {
    actor: String,
    verbs: IndexMap<String, Vec<ObjectEntry>>,
}

impl MindMapBlock {
    pub fn new(actor: &str) -> Self {
        MindMapBlock {
            actor: actor.to_string(),
            verbs: IndexMap::new(),
        }
    }

    pub fn actor(&self) -> &str {
        &self.actor
    }

    pub fn verbs(&self) -> impl Iterator<Item = (&str, &[ObjectEntry])> {
        self.verbs.iter().map(|(v, e)| (v.as_str(), e.as_slice()))
    }

    pub fn objects(&self, verb: &str) -> Option<&[ObjectEntry]> {
        self.verbs.get(verb).map(Vec::as_slice)
    }

    /// Every (key, occurrences) pair in block order.
    pub fn entries(&self) -> impl Iterator<Item = (CollocationKey, &OccurrenceVector)> + '_ {
        self.verbs.iter().flat_map(move |(verb, entries)| {
            entries.iter().map(move |e| {
                (
                    CollocationKey {
                        actor: self.actor.clone(),
                        verb: verb.clone(),
                        object: e.object.clone(),
                    },
                    &e.positions,
                )
            })
        })
    }

    pub fn occurrences(&self, verb: &str, object: Option<&str>) -> Option<&OccurrenceVector> {
        self.verbs
            .get(verb)?
            .iter()
            .find(|e| e.object.as_deref() == object)
            .map(|e| &e.positions)
    }

    pub fn is_empty(&self) -> bool {
        self.verbs.is_empty()
    }

    /// Files one occurrence. Returns `(existed_before, recorded)`.
    fn record(&mut self, verb: &str, object: Option<&str>, position: u64) -> (bool, bool) {
        let entries = self.verbs.entry(verb.to_string()).or_default();
        match entries.iter_mut().find(|e| e.object.as_deref() == object) {
            Some(entry) => (true, entry.positions.push(position)),
            None => {
                entries.push(ObjectEntry {
                    object: object.map(str::to_string),
                    positions: OccurrenceVector(vec![position]),
                });
                (false, true)
            }
        }
    }

    /// The block as it was at position `c`, with later occurrences removed.
    pub fn as_of(&self, c: u64) -> MindMapBlock {
        let mut verbs = IndexMap::new();
        for (verb, entries) in &self.verbs {
            let kept: Vec<ObjectEntry> = entries
                .iter()
                .map(|e| ObjectEntry {
                    object: e.object.clone(),
                    positions: e.positions.until(c),
                })
                .filter(|e| !e.positions.is_empty())
                .collect();
            if !kept.is_empty() {
                verbs.insert(verb.clone(), kept);
            }
        }
        MindMapBlock {
            actor: self.actor.clone(),
            verbs,
        }
    }

    /// Renders the block as `verb: [object [p, ...]], ...`, one verb per line.
    pub fn render(&self) -> String {
        self.verbs
            .iter()
            .map(|(verb, entries)| {
                let objects: Vec<String> = entries
                    .iter()
                    .map(|e| {
                        let positions: Vec<String> =
                            e.positions.positions().iter().map(u64::to_string).collect();
                        format!(
                            "[{} [{}]]",
                            e.object.as_deref().unwrap_or("-"),
                            positions.join(",")
                        )
                    })
                    .collect();
                format!("{verb}: {}", objects.join(", "))
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InsertReport {
    pub is_new_actor: bool,
    pub is_reoccurrence: bool,
    /// The same key was already recorded at this position; nothing changed.
    pub duplicate: bool,
}

/// Actor registry, blocks and event log.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MindMapStore {
    blocks: IndexMap<String, MindMapBlock>,
    log: Vec<Collocation>,
    latest: u64,
}

impl MindMapStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a store by replaying collocations in order.
    pub fn replay<'a>(log: impl IntoIterator<Item = &'a Collocation>) -> Result<Self, StoreError> {
        let mut store = MindMapStore::new();
        for c in log {
            store.insert(c)?;
        }
        Ok(store)
    }

    pub fn insert(&mut self, c: &Collocation) -> Result<InsertReport, StoreError> {
        let position = c.position();
        if position < self.latest {
            return Err(StoreError::OutOfOrder {
                position,
                latest: self.latest,
            });
        }
        let actor = c.actor().lemma();
        let is_new_actor = !self.blocks.contains_key(actor);
        let block = self
            .blocks
            .entry(actor.to_string())
            .or_insert_with(|| MindMapBlock::new(actor));
        let (existed, recorded) =
            block.record(c.verb().lemma(), c.object().map(|o| o.lemma()), position);
        if !recorded {
            log::warn!("duplicate collocation {} ignored", c);
            return Ok(InsertReport {
                is_new_actor: false,
                is_reoccurrence: false,
                duplicate: true,
            });
        }
        self.latest = position;
        self.log.push(c.clone());
        Ok(InsertReport {
            is_new_actor,
            is_reoccurrence: existed,
            duplicate: false,
        })
    }

    pub fn occurrences_of(&self, key: &CollocationKey) -> Result<&OccurrenceVector, StoreError> {
        self.blocks
            .get(&key.actor)
            .and_then(|b| b.occurrences(&key.verb, key.object.as_deref()))
            .ok_or_else(|| StoreError::UnknownKey(key.clone()))
    }

    pub fn block_of(&self, actor: &str) -> Result<&MindMapBlock, StoreError> {
        self.blocks
            .get(actor)
            .ok_or_else(|| StoreError::UnknownActor(actor.to_string()))
    }

    /// Actors in order of first appearance.
    pub fn actors(&self) -> Vec<&str> {
        self.blocks.keys().map(String::as_str).collect()
    }

    pub fn contains_actor(&self, actor: &str) -> bool {
        self.blocks.contains_key(actor)
    }

    pub fn event_log(&self) -> &[Collocation] {
        &self.log
    }

    /// Highest stored position, 0 when empty.
    pub fn latest_position(&self) -> u64 {
        self.latest
    }

    /// Actors that had appeared by position `c`, in first-appearance order.
    pub fn actors_as_of(&self, c: u64) -> Vec<&str> {
        let mut seen: Vec<&str> = Vec::new();
        for entry in self.log.iter().take_while(|e| e.position() <= c) {
            let actor = entry.actor().lemma();
            if !seen.contains(&actor) {
                seen.push(actor);
            }
        }
        seen
    }

    pub fn to_document(&self) -> StoreDocument {
        StoreDocument {
            actors: self.blocks.keys().cloned().collect(),
            blocks: self
                .blocks
                .iter()
                .map(|(actor, block)| (actor.clone(), block.verbs.clone()))
                .collect(),
            event_log: self.log.clone(),
            position_counter: self.latest,
        }
    }

    /// Rebuilds from the event log and checks the redundant sections agree.
    pub fn from_document(doc: StoreDocument) -> Result<Self, StoreError> {
        let store = MindMapStore::replay(&doc.event_log)?;
        if store.to_document() != doc {
            let detail = if store.actors().len() != doc.actors.len()
                || store.blocks.keys().ne(doc.actors.iter())
            {
                "actors do not match the event log"
            } else if store.latest != doc.position_counter {
                "position_counter does not match the event log"
            } else {
                "blocks do not match the event log"
            };
            return Err(StoreError::Inconsistent(detail.into()));
        }
        Ok(store)
    }
}

/// Serialized form of a store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreDocument {
    pub actors: Vec<String>,
    pub blocks: IndexMap<String, IndexMap<String, Vec<ObjectEntry>>>,
    pub event_log: Vec<Collocation>,
    pub position_counter: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collocation::Token;

    fn col(actor: &str, verb: &str, object: Option<&str>, position: i64) -> Collocation {
        Collocation::new(
            Token::noun(actor).unwrap(),
            Token::verb(verb).unwrap(),
            object.map(|o| Token::noun(o).unwrap()),
            position,
        )
        .unwrap()
    }

    #[test]
    fn first_insert_allocates_block() {
        let mut store = MindMapStore::new();
        let report = store.insert(&col("Wolf", "legen", Some("Bett"), 1)).unwrap();
        assert_eq!(
            report,
            InsertReport { is_new_actor: true, is_reoccurrence: false, duplicate: false }
        );
        let block = store.block_of("Wolf").unwrap();
        assert_eq!(block.verbs().count(), 1);
        assert_eq!(block.objects("legen").unwrap().len(), 1);
    }

    #[test]
    fn reoccurrence_extends_vector() {
        let mut store = MindMapStore::new();
        store.insert(&col("Wolf", "sein", Some("böse"), 5)).unwrap();
        let report = store.insert(&col("Wolf", "sein", Some("böse"), 15)).unwrap();
        assert!(!report.is_new_actor);
        assert!(report.is_reoccurrence);
        store.insert(&col("Wolf", "sein", Some("böse"), 17)).unwrap();
        let key = CollocationKey::new("Wolf", "sein", Some("böse"));
        assert_eq!(store.occurrences_of(&key).unwrap().positions(), &[5, 15, 17]);
    }

    #[test]
    fn out_of_order_rejected() {
        let mut store = MindMapStore::new();
        store.insert(&col("Wolf", "gehen", Some("Wald"), 3)).unwrap();
        assert_eq!(
            store.insert(&col("Wolf", "gehen", Some("Wald"), 2)).unwrap_err(),
            StoreError::OutOfOrder { position: 2, latest: 3 }
        );
    }

    #[test]
    fn shared_position_allowed_duplicate_is_noop() {
        let mut store = MindMapStore::new();
        store.insert(&col("Frau", "schnarchen", Some("laut"), 5)).unwrap();
        store.insert(&col("Frau", "sein", Some("alt"), 5)).unwrap();
        let dup = store.insert(&col("Frau", "sein", Some("alt"), 5)).unwrap();
        assert!(dup.duplicate);
        assert!(!dup.is_reoccurrence);
        assert_eq!(store.event_log().len(), 2);
    }

    #[test]
    fn unknown_lookups() {
        let store = MindMapStore::new();
        assert!(matches!(
            store.occurrences_of(&CollocationKey::new("Nobody", "tut", Some("nichts"))),
            Err(StoreError::UnknownKey(_))
        ));
        assert_eq!(
            store.block_of("Rumpelstilzchen").unwrap_err(),
            StoreError::UnknownActor("Rumpelstilzchen".into())
        );
        assert!(store.actors().is_empty());
        assert!(store.event_log().is_empty());
    }

    #[test]
    fn block_listing_keeps_first_appearance_order() {
        let mut store = MindMapStore::new();
        store.insert(&col("Wolf", "gehen", Some("Wald"), 10)).unwrap();
        store.insert(&col("Wolf", "gehen", Some("Wald"), 15)).unwrap();
        store.insert(&col("Wolf", "gehen", Some("Großmutter"), 18)).unwrap();
        let block = store.block_of("Wolf").unwrap();
        assert_eq!(block.render(), "gehen: [Wald [10,15]], [Großmutter [18]]");
    }

    #[test]
    fn as_of_filters_future_occurrences() {
        let mut store = MindMapStore::new();
        store.insert(&col("Wolf", "gehen", Some("Wald"), 10)).unwrap();
        store.insert(&col("Wolf", "fressen", Some("Großmutter"), 12)).unwrap();
        store.insert(&col("Wolf", "gehen", Some("Wald"), 15)).unwrap();
        let past = store.block_of("Wolf").unwrap().as_of(11);
        assert_eq!(past.render(), "gehen: [Wald [10]]");
        assert_eq!(store.actors_as_of(9), Vec::<&str>::new());
    }

    #[test]
    fn replay_reproduces_store() {
        let mut store = MindMapStore::new();
        for (i, (a, v, o)) in [
            ("Wolf", "legen", Some("Bett")),
            ("Wolf", "anfangen", Some("schnarchen")),
            ("Jäger", "gehen", Some("vorbei")),
        ]
        .into_iter()
        .enumerate()
        {
            store.insert(&col(a, v, o, i as i64 + 1)).unwrap();
        }
        assert_eq!(store.event_log().len(), 3);
        assert_eq!(MindMapStore::replay(store.event_log()).unwrap(), store);
        assert_eq!(store.actors(), vec!["Wolf", "Jäger"]);
    }

    #[test]
    fn document_round_trip_and_tamper_detection() {
        let mut store = MindMapStore::new();
        store.insert(&col("Wolf", "gehen", Some("Wald"), 10)).unwrap();
        store.insert(&col("Wolf", "gehen", None, 11)).unwrap();
        let doc = store.to_document();
        let json = serde_json::to_string(&doc).unwrap();
        let back: StoreDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(MindMapStore::from_document(back).unwrap(), store);

        let mut tampered = store.to_document();
        tampered.position_counter = 99;
        assert!(MindMapStore::from_document(tampered).is_err());
    }

    #[test]
    fn occurrence_vector_validation() {
        assert!(OccurrenceVector::new(vec![3, 2]).is_err());
        assert!(OccurrenceVector::new(vec![0, 2]).is_err());
        assert!(OccurrenceVector::new(vec![2, 2]).is_err());
        let v = OccurrenceVector::from_unordered([17, 5, 15]).unwrap();
        assert_eq!(v.positions(), &[5, 15, 17]);
        assert_eq!(v.until(15).positions(), &[5, 15]);
    }
}
