//! The incremental loop.
//!
//! A [`Session`] feeds each input through preprocessing, files emitted
//! collocations into the store and answers priority queries for any actor at
//! any sentence position up to the current one. Past states are rebuilt from
//! the event log, so a query for `c` gives the same answer no matter how far
//! the stream has advanced since.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collocation::Collocation;
use crate::preprocess::{
    DroppedFragment, Lexicon, Pipeline, PipelineConfig, PreprocessError, PreprocessOutcome,
    RawSentence, Resolution, ResolutionRequest, StreamIntake,
};
use crate::priority::{
    score_actor, select_output, PriorityError, PriorityFunction, PrioritySnapshot,
    DEFAULT_DELTA, DEFAULT_F1_BASE, DEFAULT_MIN_ENTRIES,
};
use crate::store::{MindMapBlock, MindMapStore, StoreDocument, StoreError};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("lexicon required in raw mode")]
    LexiconRequired,
    #[error("session is closed")]
    Closed,
    #[error("unknown actor {actor:?} at sentence {c}")]
    UnknownActor { actor: String, c: u64 },
    #[error("sentence {c} lies beyond the current position {current}")]
    FutureC { c: u64, current: u64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed session document at line {line}, column {column}: {message}")]
    Malformed { line: usize, column: usize, message: String },
    #[error("unsupported session format version {0}")]
    UnsupportedVersion(u32),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Priority(#[from] PriorityError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputMode {
    /// Running text through the rule pipeline and lexicon.
    Raw,
    /// Pre-annotated wire lines.
    Annotated,
}

impl std::str::FromStr for InputMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(InputMode::Raw),
            "annotated" => Ok(InputMode::Annotated),
            other => Err(format!("unknown mode {other:?}, expected raw or annotated")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub mode: InputMode,
    pub delta: f64,
    pub min_entries: usize,
    pub f1_base: f64,
    pub lexicon_path: Option<PathBuf>,
    #[serde(default)]
    pub pipeline: PipelineConfig,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            mode: InputMode::Annotated,
            delta: DEFAULT_DELTA,
            min_entries: DEFAULT_MIN_ENTRIES,
            f1_base: DEFAULT_F1_BASE,
            lexicon_path: None,
            pipeline: PipelineConfig::default(),
        }
    }
}

impl SessionConfig {
    pub fn annotated() -> Self {
        Self::default()
    }

    pub fn raw() -> Self {
        SessionConfig { mode: InputMode::Raw, ..Self::default() }
    }

    fn validate(&self) -> Result<(), SessionError> {
        if self.delta.is_nan() || self.delta < 0.0 {
            return Err(SessionError::InvalidConfig(format!("delta {} is negative", self.delta)));
        }
        if !(self.f1_base > 0.0 && self.f1_base < 1.0) {
            return Err(SessionError::InvalidConfig(format!(
                "f1_base {} outside (0, 1)",
                self.f1_base
            )));
        }
        Ok(())
    }
}

/// What one step or resolution changed.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SessionDelta {
    pub emitted: Vec<Collocation>,
    pub new_actors: Vec<String>,
    pub pending: Vec<ResolutionRequest>,
    pub dropped: Vec<DroppedFragment>,
    pub queued: Vec<RawSentence>,
}

#[derive(Default)]
struct Applied {
    outcome: PreprocessOutcome,
    new_actors: Vec<String>,
}

impl Applied {
    fn into_delta(self) -> SessionDelta {
        SessionDelta {
            emitted: self.outcome.emitted,
            new_actors: self.new_actors,
            pending: self.outcome.pending,
            dropped: self.outcome.dropped,
            queued: self.outcome.queued,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Session {
    config: SessionConfig,
    pipeline: Option<Pipeline>,
    store: MindMapStore,
    intake: StreamIntake,
    closed: bool,
}

#[derive(Serialize, Deserialize)]
struct SessionDocument {
    format_version: u32,
    config: SessionConfig,
    #[serde(flatten)]
    store: StoreDocument,
    stream: StreamIntake,
    #[serde(default)]
    closed: bool,
}

impl Session {
    pub fn new(config: SessionConfig) -> Result<Self, SessionError> {
        config.validate()?;
        Ok(Session {
            config,
            pipeline: None,
            store: MindMapStore::new(),
            intake: StreamIntake::new(),
            closed: false,
        })
    }

    pub fn with_lexicon(config: SessionConfig, lexicon: Lexicon) -> Result<Self, SessionError> {
        let mut session = Session::new(config)?;
        session.set_lexicon(lexicon);
        Ok(session)
    }

    /// Attaches a lexicon; it applies to future steps only.
    pub fn set_lexicon(&mut self, lexicon: Lexicon) {
        self.pipeline = Some(Pipeline::new(lexicon, self.config.pipeline.clone()));
    }

    pub fn has_lexicon(&self) -> bool {
        self.pipeline.is_some()
    }

    pub fn config(&self) -> &SessionConfig {
        &self.config
    }

    pub fn set_delta(&mut self, delta: f64) -> Result<(), SessionError> {
        let config = SessionConfig { delta, ..self.config.clone() };
        config.validate()?;
        self.config = config;
        Ok(())
    }

    pub fn close(&mut self) {
        self.closed = true;
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Current sentence number `c`: the highest emitted position.
    pub fn position_counter(&self) -> u64 {
        self.intake.position()
    }

    pub fn store(&self) -> &MindMapStore {
        &self.store
    }

    pub fn actors(&self) -> Vec<&str> {
        self.store.actors()
    }

    pub fn block_of(&self, actor: &str) -> Result<&MindMapBlock, SessionError> {
        Ok(self.store.block_of(actor)?)
    }

    pub fn event_log(&self) -> &[Collocation] {
        self.store.event_log()
    }

    pub fn pending(&self) -> Vec<&ResolutionRequest> {
        self.intake.pending()
    }

    pub fn dropped(&self) -> &[DroppedFragment] {
        self.intake.dropped()
    }

    /// Feeds one input: running text in raw mode, one or more wire lines in
    /// annotated mode.
    pub fn step(&mut self, input: &str) -> Result<SessionDelta, SessionError> {
        if self.closed {
            return Err(SessionError::Closed);
        }
        let outcome = match self.config.mode {
            InputMode::Raw => {
                let pipeline = self.pipeline.as_ref().ok_or(SessionError::LexiconRequired)?;
                self.intake.push_raw(pipeline, input)?
            }
            InputMode::Annotated => {
                let mut applied = Applied::default();
                for line in input.lines() {
                    let part = self.intake.push_annotated(line)?;
                    self.apply_into(&mut applied, part)?;
                }
                return Ok(applied.into_delta());
            }
        };
        let mut applied = Applied::default();
        self.apply_into(&mut applied, outcome)?;
        Ok(applied.into_delta())
    }

    pub fn resolve(
        &mut self,
        request_id: &str,
        resolution: Resolution,
    ) -> Result<SessionDelta, SessionError> {
        if self.closed {
            return Err(SessionError::Closed);
        }
        let outcome = self.intake.resolve(request_id, resolution)?;
        let mut applied = Applied::default();
        self.apply_into(&mut applied, outcome)?;
        Ok(applied.into_delta())
    }

    fn apply_into(
        &mut self,
        merged: &mut Applied,
        outcome: PreprocessOutcome,
    ) -> Result<(), SessionError> {
        for c in &outcome.emitted {
            if self.store.insert(c)?.is_new_actor {
                merged.new_actors.push(c.actor().lemma().to_string());
            }
        }
        merged.outcome.emitted.extend(outcome.emitted);
        merged.outcome.dropped.extend(outcome.dropped);
        merged.outcome.pending.extend(outcome.pending);
        merged.outcome.queued.extend(outcome.queued);
        Ok(())
    }

    fn resolve_c(&self, c: Option<u64>) -> Result<u64, SessionError> {
        let current = self.position_counter();
        let c = c.unwrap_or(current);
        if c > current {
            return Err(SessionError::FutureC { c, current });
        }
        Ok(c)
    }

    /// Priority list for `actor` as it stood at sentence `c` (default: now).
    pub fn snapshot(
        &self,
        actor: &str,
        function: PriorityFunction,
        c: Option<u64>,
        delta: Option<f64>,
    ) -> Result<PrioritySnapshot, SessionError> {
        let c = self.resolve_c(c)?;
        let delta = delta.unwrap_or(self.config.delta);
        let unknown = || SessionError::UnknownActor { actor: actor.to_string(), c };
        let block = self.store.block_of(actor).map_err(|_| unknown())?.as_of(c);
        if block.is_empty() {
            return Err(unknown());
        }
        let scored = score_actor(&block, function, c, self.config.f1_base)?;
        let entries = select_output(&scored, delta, self.config.min_entries)?;
        Ok(PrioritySnapshot { actor: actor.to_string(), function, c, delta, entries })
    }

    /// One snapshot per requested actor, in request order.
    pub fn story_line<S: AsRef<str>>(
        &self,
        actors: &[S],
        function: PriorityFunction,
        c: Option<u64>,
    ) -> Result<Vec<PrioritySnapshot>, SessionError> {
        actors
            .iter()
            .map(|a| self.snapshot(a.as_ref(), function, c, None))
            .collect()
    }

    pub fn to_json(&self) -> Result<String, SessionError> {
        let doc = SessionDocument {
            format_version: FORMAT_VERSION,
            config: self.config.clone(),
            store: self.store.to_document(),
            stream: self.intake.clone(),
            closed: self.closed,
        };
        serde_json::to_string_pretty(&doc).map_err(|e| SessionError::Malformed {
            line: 0,
            column: 0,
            message: e.to_string(),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, SessionError> {
        let doc: SessionDocument =
            serde_json::from_str(text).map_err(|e| SessionError::Malformed {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        if doc.format_version != FORMAT_VERSION {
            return Err(SessionError::UnsupportedVersion(doc.format_version));
        }
        doc.config.validate()?;
        let store = MindMapStore::from_document(doc.store)?;
        if store.latest_position() > doc.stream.position() {
            return Err(SessionError::Malformed {
                line: 0,
                column: 0,
                message: "stream position lags behind the event log".into(),
            });
        }
        Ok(Session {
            config: doc.config,
            pipeline: None,
            store,
            intake: doc.stream,
            closed: doc.closed,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), SessionError> {
        let path = path.as_ref();
        fs::write(path, self.to_json()? + "\n")
            .map_err(|source| SessionError::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, SessionError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|source| SessionError::Io { path: path.to_path_buf(), source })?;
        Session::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn annotated(lines: &str) -> Session {
        let mut s = Session::new(SessionConfig::annotated()).unwrap();
        s.step(lines).unwrap();
        s
    }

    #[test]
    fn step_annotated_line() {
        let mut s = Session::new(SessionConfig::annotated()).unwrap();
        let delta = s.step("Wolf|legen|Bett|-").unwrap();
        assert_eq!(delta.emitted.len(), 1);
        assert_eq!(delta.emitted[0].position(), 1);
        assert_eq!(delta.new_actors, ["Wolf"]);
        let delta = s.step("Wolf|legen|Bett|-").unwrap();
        assert!(delta.new_actors.is_empty());
    }

    #[test]
    fn raw_mode_needs_lexicon() {
        let mut s = Session::new(SessionConfig::raw()).unwrap();
        assert!(matches!(s.step("Der Wolf kam."), Err(SessionError::LexiconRequired)));
    }

    #[test]
    fn closed_session_rejects_steps() {
        let mut s = Session::new(SessionConfig::annotated()).unwrap();
        s.close();
        assert!(matches!(s.step("Wolf|legen|Bett"), Err(SessionError::Closed)));
    }

    #[test]
    fn snapshot_errors() {
        let s = annotated("Wolf|legen|Bett|3\nJäger|gehen|vorbei|5");
        assert!(matches!(
            s.snapshot("Jäger", PriorityFunction::F1, Some(4), None),
            Err(SessionError::UnknownActor { c: 4, .. })
        ));
        assert!(matches!(
            s.snapshot("Wolf", PriorityFunction::F1, Some(6), None),
            Err(SessionError::FutureC { c: 6, current: 5 })
        ));
        assert!(matches!(
            s.story_line(&["Wolf", "Unknown"], PriorityFunction::F3, None),
            Err(SessionError::UnknownActor { ref actor, .. }) if actor == "Unknown"
        ));
        assert!(s.story_line::<&str>(&[], PriorityFunction::F3, None).unwrap().is_empty());
    }

    #[test]
    fn wolf_example_snapshot() {
        let s = annotated("Wolf|sein|böse(ADJ)|5\nWolf|sein|böse(ADJ)|15\nWolf|sein|böse(ADJ)|17\nJäger|gehen|vorbei|20");
        let snap = s.snapshot("Wolf", PriorityFunction::F1, Some(20), None).unwrap();
        assert_eq!(snap.entries.len(), 1);
        assert!((snap.entries[0].priority - 0.156_28).abs() < 1e-5);
    }

    #[test]
    fn save_load_round_trip_and_corruption() {
        let s = annotated("Wolf|legen|Bett\nWolf|anfangen|schnarchen\nJäger|gehen|vorbei");
        let json = s.to_json().unwrap();
        let back = Session::from_json(&json).unwrap();
        assert_eq!(back.event_log(), s.event_log());
        assert_eq!(back.position_counter(), 3);

        let err = Session::from_json(&json[..json.len() / 2]).unwrap_err();
        assert!(matches!(err, SessionError::Malformed { line, .. } if line > 0));

        let empty = Session::new(SessionConfig::annotated()).unwrap();
        let back = Session::from_json(&empty.to_json().unwrap()).unwrap();
        assert!(back.actors().is_empty());
        assert_eq!(back.position_counter(), 0);
    }

    #[test]
    fn invalid_config_rejected() {
        let config = SessionConfig { delta: -1.0, ..SessionConfig::default() };
        assert!(Session::new(config).is_err());
        let config = SessionConfig { f1_base: 1.5, ..SessionConfig::default() };
        assert!(Session::new(config).is_err());
    }
}
