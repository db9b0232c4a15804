//! Incremental collocation engine.
//!
//! A text stream is reduced sentence by sentence to canonical
//! actor-verb-object collocations. Every actor owns a mind-map block keyed by
//! verb, and each stored collocation keeps the vector of sentence positions at
//! which it occurred. Three decay functions turn those vectors into priorities
//! so the most recent part of the story line can be read back for any actor at
//! any point of the stream.
//!
//! The crate is organised bottom-up:
//!
//! - [`collocation`]: tokens, collocations, keys and the line wire format.
//! - [`preprocess`]: segmentation, speech stripping, interrogative filtering,
//!   lexicon annotation and the supervisor resolution queue.
//! - [`store`]: actor registry, mind-map blocks and the append-only event log.
//! - [`priority`]: the three priority functions and output selection.
//! - [`session`]: the incremental loop, time-travel snapshots and persistence.

pub mod collocation;
pub mod preprocess;
pub mod priority;
pub mod session;
pub mod store;

pub use collocation::{Category, Collocation, CollocationError, CollocationKey, Token};
pub use preprocess::{
    DropReason, DroppedFragment, Lexicon, PipelineConfig, RawSentence, RequestKind,
    Resolution, ResolutionRequest,
};
pub use priority::{PriorityError, PriorityFunction, PrioritySnapshot, ScoredCollocation};
pub use session::{InputMode, Session, SessionConfig, SessionDelta, SessionError};
pub use store::{
    InsertReport, MindMapBlock, MindMapStore, ObjectEntry, OccurrenceVector, StoreError,
};
