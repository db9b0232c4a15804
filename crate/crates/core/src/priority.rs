//! Recency and repetition priority functions.
//!
//! All three functions decay geometrically with the distance between the
//! query sentence `c` and the occurrences of a collocation:
//!
//! - `F1(c, x) = Σ base^(c - x_i)` sums over every occurrence (base 0.5 by
//!   default), so repeated collocations accumulate weight.
//! - `F2(c, x) = â^(c - l)` with `â = Σ_{i=1..d} 0.5^i = 1 - 0.5^d` where `d`
//!   is the number of occurrences and `l` the latest one. More repetitions
//!   raise the coefficient and slow the decay.
//! - `F3(c, x) = 0.5^(c - l)` only looks at the latest occurrence.
//!
//! Values are `f64`. Gaps beyond about 1074 sentences underflow to zero and
//! `â` rounds to 1.0 from `d = 54` on.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collocation::CollocationKey;
use crate::store::MindMapBlock;
pub use crate::store::OccurrenceVector;

/// Default geometric base of F1.
pub const DEFAULT_F1_BASE: f64 = 0.5;
/// Default display threshold Δ.
pub const DEFAULT_DELTA: f64 = 0.05;
/// Minimum number of entries presented per actor.
pub const DEFAULT_MIN_ENTRIES: usize = 5;
/// Priorities below this render as `0.0`.
pub const DISPLAY_FLOOR: f64 = 5e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PriorityError {
    #[error("occurrence vector is empty")]
    EmptyOccurrences,
    #[error("occurrence {position} lies after the query sentence {c}")]
    FutureOccurrence { position: u64, c: u64 },
    #[error("repetition count must be positive")]
    NonPositiveCount,
    #[error("base must lie in (0, 1), got {0}")]
    InvalidBase(f64),
    #[error("threshold must be non-negative, got {0}")]
    NegativeDelta(f64),
    #[error("unknown priority function {0:?}")]
    UnknownFunction(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PriorityFunction {
    F1,
    F2,
    F3,
}

impl PriorityFunction {
    pub const ALL: [PriorityFunction; 3] =
        [PriorityFunction::F1, PriorityFunction::F2, PriorityFunction::F3];
}

impl fmt::Display for PriorityFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PriorityFunction::F1 => "F1",
            PriorityFunction::F2 => "F2",
            PriorityFunction::F3 => "F3",
        })
    }
}

impl FromStr for PriorityFunction {
    type Err = PriorityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "f1" => Ok(PriorityFunction::F1),
            "f2" => Ok(PriorityFunction::F2),
            "f3" => Ok(PriorityFunction::F3),
            _ => Err(PriorityError::UnknownFunction(s.to_string())),
        }
    }
}

fn latest_checked(c: u64, x: &OccurrenceVector) -> Result<u64, PriorityError> {
    let latest = x.last().ok_or(PriorityError::EmptyOccurrences)?;
    if latest > c {
        return Err(PriorityError::FutureOccurrence { position: latest, c });
    }
    Ok(latest)
}

fn geometric(base: f64, gap: u64) -> f64 {
    match i32::try_from(gap) {
        Ok(gap) => base.powi(gap),
        Err(_) => 0.0,
    }
}

/// `Σ base^(c - x_i)`, summed from the oldest occurrence (smallest term) on.
pub fn f1_with_base(c: u64, x: &OccurrenceVector, base: f64) -> Result<f64, PriorityError> {
    if !(base > 0.0 && base < 1.0) {
        return Err(PriorityError::InvalidBase(base));
    }
    latest_checked(c, x)?;
    Ok(x.positions().iter().map(|&p| geometric(base, c - p)).sum())
}

pub fn f1(c: u64, x: &OccurrenceVector) -> Result<f64, PriorityError> {
    f1_with_base(c, x, DEFAULT_F1_BASE)
}

/// F2 coefficient for `d` occurrences, `1 - 0.5^d`.
pub fn a_hat(d: u64) -> Result<f64, PriorityError> {
    if d == 0 {
        return Err(PriorityError::NonPositiveCount);
    }
    Ok(1.0 - geometric(0.5, d))
}

pub fn f2(c: u64, x: &OccurrenceVector) -> Result<f64, PriorityError> {
    let latest = latest_checked(c, x)?;
    let coefficient = a_hat(x.len() as u64)?;
    Ok(geometric(coefficient, c - latest))
}

pub fn f3(c: u64, x: &OccurrenceVector) -> Result<f64, PriorityError> {
    let latest = latest_checked(c, x)?;
    Ok(geometric(0.5, c - latest))
}

pub fn evaluate(
    function: PriorityFunction,
    c: u64,
    x: &OccurrenceVector,
    f1_base: f64,
) -> Result<f64, PriorityError> {
    match function {
        PriorityFunction::F1 => f1_with_base(c, x, f1_base),
        PriorityFunction::F2 => f2(c, x),
        PriorityFunction::F3 => f3(c, x),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCollocation {
    pub key: CollocationKey,
    pub priority: f64,
    pub occurrences: OccurrenceVector,
}

impl ScoredCollocation {
    pub fn display_priority(&self) -> String {
        display_value(self.priority)
    }
}

/// Three-decimal rendering, rounding halves up; values under the display
/// floor show as `0.0`.
pub fn display_value(priority: f64) -> String {
    if priority < DISPLAY_FLOOR {
        "0.0".to_string()
    } else {
        format!("{:.3}", (priority * 1000.0).round() / 1000.0)
    }
}

/// Priority descending, then latest occurrence descending, then
/// `(verb, object)` ascending.
fn presentation_order(a: &ScoredCollocation, b: &ScoredCollocation) -> Ordering {
    b.priority
        .total_cmp(&a.priority)
        .then_with(|| b.occurrences.last().cmp(&a.occurrences.last()))
        .then_with(|| a.key.verb.cmp(&b.key.verb))
        .then_with(|| a.key.object.cmp(&b.key.object))
}

/// Scores every `(verb, object)` entry of a block at sentence `c`.
pub fn score_actor(
    block: &MindMapBlock,
    function: PriorityFunction,
    c: u64,
    f1_base: f64,
) -> Result<Vec<ScoredCollocation>, PriorityError> {
    let mut scored = block
        .entries()
        .map(|(key, occurrences)| {
            Ok(ScoredCollocation {
                priority: evaluate(function, c, occurrences, f1_base)?,
                key,
                occurrences: occurrences.clone(),
            })
        })
        .collect::<Result<Vec<_>, PriorityError>>()?;
    scored.sort_by(presentation_order);
    Ok(scored)
}

/// Keeps entries at or above `delta`, but never fewer than `min_entries`
/// (or the whole list when it is shorter).
pub fn select_output(
    scored: &[ScoredCollocation],
    delta: f64,
    min_entries: usize,
) -> Result<Vec<ScoredCollocation>, PriorityError> {
    if delta.is_nan() || delta < 0.0 {
        return Err(PriorityError::NegativeDelta(delta));
    }
    let above = scored.iter().take_while(|s| s.priority >= delta).count();
    let keep = above.max(min_entries).min(scored.len());
    Ok(scored[..keep].to_vec())
}

/// Ordered, thresholded priority list for one actor at one time point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrioritySnapshot {
    pub actor: String,
    pub function: PriorityFunction,
    pub c: u64,
    pub delta: f64,
    pub entries: Vec<ScoredCollocation>,
}
