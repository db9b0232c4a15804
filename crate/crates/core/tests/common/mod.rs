#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use mindstream::{Lexicon, PriorityFunction, Session, SessionConfig};

#[allow(unused_imports)]
pub use strategies::*;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).expect("fixture readable")
}

pub fn annotated_session(name: &str) -> Session {
    let mut session = Session::new(SessionConfig::annotated()).unwrap();
    session.step(&fixture(name)).unwrap();
    session
}

pub fn raw_session() -> Session {
    let lexicon = Lexicon::from_file(fixture_path("passage.lex")).unwrap();
    Session::with_lexicon(SessionConfig::raw(), lexicon).unwrap()
}

/// Recomputes priorities straight from serialized event-log lines with the
/// literal formulas, without touching the store or the priority module.
/// Returns `(verb, object) -> value` for every key of `actor` seen by `c`.
pub fn brute_force(
    log_lines: &[String],
    actor: &str,
    function: PriorityFunction,
    c: u64,
) -> BTreeMap<(String, String), f64> {
    let mut occurrences: BTreeMap<(String, String), Vec<u64>> = BTreeMap::new();
    for line in log_lines {
        let fields: Vec<&str> = line.split('|').collect();
        let position: u64 = fields[3].parse().unwrap();
        if fields[0] != actor || position > c {
            continue;
        }
        let object = fields[2].trim_end_matches("(ADJ)").to_string();
        occurrences
            .entry((fields[1].to_string(), object))
            .or_default()
            .push(position);
    }
    occurrences
        .into_iter()
        .map(|(key, xs)| {
            let last = *xs.iter().max().unwrap();
            let value = match function {
                PriorityFunction::F1 => {
                    let mut sum = 0.0;
                    for &x in &xs {
                        sum += 0.5f64.powf((c - x) as f64);
                    }
                    sum
                }
                PriorityFunction::F2 => {
                    let mut coefficient = 0.0;
                    for i in 1..=xs.len() {
                        coefficient += 0.5f64.powf(i as f64);
                    }
                    coefficient.powf((c - last) as f64)
                }
                PriorityFunction::F3 => 0.5f64.powf((c - last) as f64),
            };
            (key, value)
        })
        .collect()
}

pub fn log_lines(session: &Session) -> Vec<String> {
    session.event_log().iter().map(|c| c.to_wire()).collect()
}

pub mod strategies {
    use proptest::prelude::*;

    const ACTORS: [&str; 6] = ["Wolf", "Jäger", "Frau", "Bett", "Großmutter", "Rotkäppchen"];
    const VERBS: [&str; 4] = ["gehen", "sein", "legen", "suchen"];
    const OBJECTS: [&str; 6] = ["-", "Wald", "Haus", "Bett", "Wolf", "alt(ADJ)"];

    /// Annotated wire lines with explicit, non-decreasing positions starting
    /// at 1. A step of 0 shares the previous position.
    pub fn stream(max_len: usize) -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec((0..ACTORS.len(), 0..VERBS.len(), 0..OBJECTS.len(), 0u64..=2), 0..=max_len)
            .prop_map(|items| {
                let mut position = 0;
                items
                    .into_iter()
                    .map(|(a, v, o, step)| {
                        position += if position == 0 { step.max(1) } else { step };
                        format!("{}|{}|{}|{}", ACTORS[a], VERBS[v], OBJECTS[o], position)
                    })
                    .collect()
            })
    }

    /// Distinct ascending positions inside a window of 30 sentences, plus a
    /// query sentence at most 20 sentences after the window.
    pub fn clustered_occurrences() -> impl Strategy<Value = (Vec<u64>, u64)> {
        (1u64..400, prop::collection::btree_set(0u64..30, 1..=20), 0u64..20).prop_map(
            |(base, offsets, extra)| {
                let positions: Vec<u64> = offsets.into_iter().map(|o| base + o).collect();
                let c = positions.last().unwrap() + extra;
                (positions, c)
            },
        )
    }

    /// Ascending positions with gaps up to a few hundred sentences.
    pub fn spread_occurrences() -> impl Strategy<Value = (Vec<u64>, u64)> {
        (prop::collection::btree_set(1u64..500, 1..=20), 0u64..400).prop_map(|(set, gap)| {
            let positions: Vec<u64> = set.into_iter().collect();
            let c = positions.last().unwrap() + gap;
            (positions, c)
        })
    }
}
