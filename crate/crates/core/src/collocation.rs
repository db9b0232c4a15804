//! Canonical collocation model.
//!
//! A collocation is the unit of stored knowledge: exactly one actor, the verb
//! that relates it to the rest of the sentence, an optional object and the
//! position of the sentence it came from.
//!
//! The line wire format is `actor|verb|object|position`. An absent object is
//! written as `-`, and so is an unassigned position. Any lemma may carry an
//! explicit category suffix such as `alt(ADJ)`; without one the slot default
//! applies (`N` for actor and object, `V` for the verb). Only adjective
//! objects and pronoun actors need the suffix to round-trip.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Lemma of the linking verb used for adjective facts.
pub const LINKING_VERB: &str = "sein";

/// Wire marker for an absent object or an unassigned position.
pub const ABSENT: &str = "-";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CollocationError {
    #[error("{slot} slot expects {expected}, found {found} ({lemma})")]
    CategoryMismatch {
        slot: Slot,
        expected: &'static str,
        found: Category,
        lemma: String,
    },
    #[error("position must be positive, got {0}")]
    NonPositivePosition(i64),
    #[error("invalid lemma {0:?}")]
    InvalidLemma(String),
    #[error("unknown category {0:?}")]
    UnknownCategory(String),
    #[error("malformed collocation line {line:?}: {reason}")]
    MalformedLine { line: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Slot {
    Actor,
    Verb,
    Object,
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Slot::Actor => "actor",
            Slot::Verb => "verb",
            Slot::Object => "object",
        })
    }
}

/// Word category assigned during annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "N")]
    Noun,
    #[serde(rename = "V")]
    Verb,
    #[serde(rename = "ADJ")]
    Adjective,
    #[serde(rename = "PRON")]
    Pronoun,
    #[serde(rename = "OTHER")]
    Other,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Noun => "N",
            Category::Verb => "V",
            Category::Adjective => "ADJ",
            Category::Pronoun => "PRON",
            Category::Other => "OTHER",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = CollocationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "N" => Ok(Category::Noun),
            "V" => Ok(Category::Verb),
            "ADJ" => Ok(Category::Adjective),
            "PRON" => Ok(Category::Pronoun),
            "OTHER" => Ok(Category::Other),
            other => Err(CollocationError::UnknownCategory(other.to_string())),
        }
    }
}

/// Normalizes a lemma to NFC so byte comparison is stable.
pub fn normalize_lemma(raw: &str) -> String {
    raw.nfc().collect()
}

fn is_separator(ch: char) -> bool {
    ch.is_whitespace() || ch == '|' || ch == '\t' || ch == '\n'
}

/// A lemma in its basic form together with its category.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "TokenRepr", into = "TokenRepr")]
pub struct Token {
    lemma: String,
    category: Category,
}

#[derive(Serialize, Deserialize)]
struct TokenRepr {
    lemma: String,
    category: Category,
}

impl TryFrom<TokenRepr> for Token {
    type Error = CollocationError;

    fn try_from(repr: TokenRepr) -> Result<Self, Self::Error> {
        Token::new(&repr.lemma, repr.category)
    }
}

impl From<Token> for TokenRepr {
    fn from(token: Token) -> Self {
        TokenRepr {
            lemma: token.lemma,
            category: token.category,
        }
    }
}

impl Token {
    pub fn new(lemma: &str, category: Category) -> Result<Self, CollocationError> {
        let lemma = normalize_lemma(lemma);
        if lemma.is_empty() || lemma == ABSENT || lemma.chars().any(is_separator) {
            return Err(CollocationError::InvalidLemma(lemma));
        }
        Ok(Token { lemma, category })
    }

    pub fn noun(lemma: &str) -> Result<Self, CollocationError> {
        Token::new(lemma, Category::Noun)
    }

    pub fn verb(lemma: &str) -> Result<Self, CollocationError> {
        Token::new(lemma, Category::Verb)
    }

    pub fn adjective(lemma: &str) -> Result<Self, CollocationError> {
        Token::new(lemma, Category::Adjective)
    }

    pub fn lemma(&self) -> &str {
        &self.lemma
    }

    pub fn category(&self) -> Category {
        self.category
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.lemma, self.category)
    }
}

fn expect_category(
    token: &Token,
    slot: Slot,
    allowed: &[Category],
    expected: &'static str,
) -> Result<(), CollocationError> {
    if allowed.contains(&token.category) {
        Ok(())
    } else {
        Err(CollocationError::CategoryMismatch {
            slot,
            expected,
            found: token.category,
            lemma: token.lemma.clone(),
        })
    }
}

/// One actor-verb-object unit anchored at a sentence position.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Collocation {
    actor: Token,
    verb: Token,
    object: Option<Token>,
    position: u64,
}

impl Collocation {
    /// Builds a collocation, checking slot categories and the position.
    pub fn new(
        actor: Token,
        verb: Token,
        object: Option<Token>,
        position: i64,
    ) -> Result<Self, CollocationError> {
        expect_category(&actor, Slot::Actor, &[Category::Noun], "N")?;
        expect_category(&verb, Slot::Verb, &[Category::Verb], "V")?;
        if let Some(object) = &object {
            expect_category(
                object,
                Slot::Object,
                &[Category::Noun, Category::Adjective],
                "N or ADJ",
            )?;
        }
        if position < 1 {
            return Err(CollocationError::NonPositivePosition(position));
        }
        Ok(Collocation {
            actor,
            verb,
            object,
            position: position as u64,
        })
    }

    pub fn actor(&self) -> &Token {
        &self.actor
    }

    pub fn verb(&self) -> &Token {
        &self.verb
    }

    pub fn object(&self) -> Option<&Token> {
        self.object.as_ref()
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn key(&self) -> CollocationKey {
        CollocationKey {
            actor: self.actor.lemma.clone(),
            verb: self.verb.lemma.clone(),
            object: self.object.as_ref().map(|o| o.lemma.clone()),
        }
    }

    /// Serializes to the line wire format.
    pub fn to_wire(&self) -> String {
        let object = match &self.object {
            Some(o) if o.category == Category::Adjective => format!("{}(ADJ)", o.lemma),
            Some(o) => o.lemma.clone(),
            None => ABSENT.to_string(),
        };
        format!(
            "{}|{}|{}|{}",
            self.actor.lemma, self.verb.lemma, object, self.position
        )
    }

    /// Parses a wire line that must carry a position.
    pub fn from_wire(line: &str) -> Result<Self, CollocationError> {
        let parsed = WireLine::parse(line)?;
        let position = parsed.position.ok_or_else(|| CollocationError::MalformedLine {
            line: line.to_string(),
            reason: "missing position".into(),
        })?;
        Collocation::new(parsed.actor, parsed.verb, parsed.object, position as i64)
    }
}

impl fmt::Display for Collocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_wire())
    }
}

impl Serialize for Collocation {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_wire())
    }
}

impl<'de> Deserialize<'de> for Collocation {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let line = String::deserialize(deserializer)?;
        Collocation::from_wire(&line).map_err(serde::de::Error::custom)
    }
}

/// Rewrites an attributive `adjective + noun` pair into the fact
/// `noun - sein - adjective` at the host sentence position.
pub fn rewrite_adjective_fact(
    noun: Token,
    adjective: Token,
    source_position: i64,
) -> Result<Collocation, CollocationError> {
    expect_category(&noun, Slot::Actor, &[Category::Noun], "N")?;
    expect_category(&adjective, Slot::Object, &[Category::Adjective], "ADJ")?;
    let verb = Token {
        lemma: LINKING_VERB.to_string(),
        category: Category::Verb,
    };
    Collocation::new(noun, verb, Some(adjective), source_position)
}

/// Identity of a collocation irrespective of its position.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CollocationKey {
    pub actor: String,
    pub verb: String,
    pub object: Option<String>,
}

impl CollocationKey {
    pub fn new(actor: &str, verb: &str, object: Option<&str>) -> Self {
        CollocationKey {
            actor: normalize_lemma(actor),
            verb: normalize_lemma(verb),
            object: object.map(normalize_lemma),
        }
    }

    pub fn object_display(&self) -> &str {
        self.object.as_deref().unwrap_or(ABSENT)
    }
}

impl fmt::Display for CollocationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}|{}", self.actor, self.verb, self.object_display())
    }
}

impl FromStr for CollocationKey {
    type Err = CollocationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('|').collect();
        if parts.len() != 3 || parts.iter().any(|p| p.trim().is_empty()) {
            return Err(CollocationError::MalformedLine {
                line: s.to_string(),
                reason: "expected actor|verb|object".into(),
            });
        }
        let object = match parts[2].trim() {
            ABSENT => None,
            o => Some(o),
        };
        Ok(CollocationKey::new(parts[0].trim(), parts[1].trim(), object))
    }
}

impl Serialize for CollocationKey {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CollocationKey {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A parsed wire line before position assignment.
///
/// The actor may be a pronoun here; such lines need a supervisor binding
/// before they become collocations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WireLine {
    pub actor: Token,
    pub verb: Token,
    pub object: Option<Token>,
    pub position: Option<u64>,
}

/// Parses one wire field such as `Haus` or `laut(ADJ)`; `default` applies
/// when no category suffix is given.
pub fn parse_field(field: &str, default: Category) -> Result<Token, CollocationError> {
    let field = field.trim();
    if let Some(open) = field.rfind('(') {
        if let Some(inner) = field[open + 1..].strip_suffix(')') {
            let category: Category = inner.parse()?;
            return Token::new(&field[..open], category);
        }
    }
    Token::new(field, default)
}

impl WireLine {
    pub fn parse(line: &str) -> Result<Self, CollocationError> {
        let malformed = |reason: &str| CollocationError::MalformedLine {
            line: line.to_string(),
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.trim().split('|').collect();
        if !(3..=4).contains(&fields.len()) {
            return Err(malformed("expected actor|verb|object|position"));
        }
        let actor = parse_field(fields[0], Category::Noun)?;
        if !matches!(actor.category, Category::Noun | Category::Pronoun) {
            return Err(CollocationError::CategoryMismatch {
                slot: Slot::Actor,
                expected: "N or PRON",
                found: actor.category,
                lemma: actor.lemma,
            });
        }
        let verb = parse_field(fields[1], Category::Verb)?;
        expect_category(&verb, Slot::Verb, &[Category::Verb], "V")?;
        let object = match fields[2].trim() {
            ABSENT => None,
            field => {
                let object = parse_field(field, Category::Noun)?;
                expect_category(
                    &object,
                    Slot::Object,
                    &[Category::Noun, Category::Adjective],
                    "N or ADJ",
                )?;
                Some(object)
            }
        };
        let position = match fields.get(3).map(|f| f.trim()) {
            None | Some(ABSENT) | Some("") => None,
            Some(raw) => {
                let value: i64 = raw.parse().map_err(|_| malformed("position is not an integer"))?;
                if value < 1 {
                    return Err(CollocationError::NonPositivePosition(value));
                }
                Some(value as u64)
            }
        };
        Ok(WireLine {
            actor,
            verb,
            object,
            position,
        })
    }
}
