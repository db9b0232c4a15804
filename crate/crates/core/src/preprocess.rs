//! Sentence preprocessing and the supervisor resolution queue.
//!
//! Raw text goes through a fixed chain per sentence:
//!
//! 1. [`Pipeline::segment`] splits on terminators outside quotation marks and
//!    dissolves clauses joined by a configured conjunction when both sides
//!    carry a verb. A right-hand clause without its own subject inherits the
//!    subject phrase of the left-hand clause.
//! 2. [`Pipeline::strip_speech`] removes quotation marks and a speaker clause
//!    such as `Er dachte,`.
//! 3. [`Pipeline::filter_interrogative`] drops questions.
//! 4. [`Pipeline::annotate`] lemmatizes through the lexicon and picks the
//!    actor, verb and object slots.
//!
//! Sentences whose actor slot holds a pronoun, or which have no subject at
//! all, are held back as [`ResolutionRequest`]s until a supervisor answers.
//! Positions are assigned only at emission, and nothing is emitted past an
//! unanswered request, so the position counter always follows stream order.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::collocation::{
    normalize_lemma, rewrite_adjective_fact, Category, Collocation, CollocationError, Token,
    WireLine,
};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("lexicon line {line}: {reason}")]
    Lexicon { line: usize, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Collocation(#[from] CollocationError),
    #[error("no verb in {0:?}")]
    NoVerb(String),
    #[error("unknown resolution request {0:?}")]
    UnknownRequest(String),
    #[error("resolution request {0:?} was already answered")]
    StaleRequest(String),
    #[error("{0:?} is not a known actor; confirm it explicitly to introduce a new one")]
    UnconfirmedActor(String),
    #[error("position {position} precedes position {latest}")]
    OutOfOrder { position: u64, latest: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexiconEntry {
    pub surface: String,
    pub lemma: String,
    pub category: Category,
}

/// Surface form to lemma and category lookup.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: HashMap<String, LexiconEntry>,
}

impl Lexicon {
    /// Parses `surface<TAB>lemma<TAB>category` lines. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self, PreprocessError> {
        let mut lexicon = Lexicon::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split('\t').collect();
            if fields.len() != 3 {
                return Err(PreprocessError::Lexicon {
                    line,
                    reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            let category: Category = fields[2].parse().map_err(|e: CollocationError| {
                PreprocessError::Lexicon { line, reason: e.to_string() }
            })?;
            let token = Token::new(fields[1].trim(), category).map_err(|e| {
                PreprocessError::Lexicon { line, reason: e.to_string() }
            })?;
            let entry = LexiconEntry {
                surface: normalize_lemma(fields[0].trim()),
                lemma: token.lemma().to_string(),
                category,
            };
            if entry.surface.is_empty() {
                return Err(PreprocessError::Lexicon { line, reason: "empty surface".into() });
            }
            if lexicon.entries.contains_key(&entry.surface) {
                return Err(PreprocessError::Lexicon {
                    line,
                    reason: format!("duplicate surface {:?}", entry.surface),
                });
            }
            lexicon.entries.insert(entry.surface.clone(), entry);
        }
        Ok(lexicon)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, PreprocessError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| PreprocessError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Lexicon::parse(&text)
    }

    pub fn insert(&mut self, surface: &str, lemma: &str, category: Category) {
        let surface = normalize_lemma(surface);
        self.entries.insert(
            surface.clone(),
            LexiconEntry { surface, lemma: normalize_lemma(lemma), category },
        );
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact match first, then the lower-cased and capitalized variants.
    pub fn lookup(&self, word: &str) -> Option<&LexiconEntry> {
        let word = normalize_lemma(word);
        if let Some(e) = self.entries.get(&word) {
            return Some(e);
        }
        let lower = word.to_lowercase();
        if let Some(e) = self.entries.get(&lower) {
            return Some(e);
        }
        let mut chars = lower.chars();
        let capitalized: String = {
            let first = chars.next()?;
            first.to_uppercase().chain(chars).collect()
        };
        self.entries.get(&capitalized)
    }

    /// Lemma and category for a word; unknown words become `OTHER` with the
    /// word itself as lemma.
    pub fn token(&self, word: &str) -> Option<Token> {
        match self.lookup(word) {
            Some(e) => Token::new(&e.lemma, e.category).ok(),
            None => Token::new(word, Category::Other).ok(),
        }
    }
}

/// Word lists that drive the rule pipeline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Surface forms that join dissolvable clauses.
    pub conjunctions: Vec<String>,
    /// Verb lemmas that introduce speech or thought.
    pub verba_dicendi: Vec<String>,
    /// Verb lemmas treated as auxiliaries when a later verb follows.
    pub auxiliaries: Vec<String>,
}

fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            conjunctions: strings(&["und", "aber", "denn", "oder"]),
            verba_dicendi: strings(&[
                "sagen", "denken", "fragen", "antworten", "meinen", "sprechen", "erwidern",
                "flüstern",
            ]),
            auxiliaries: strings(&[
                "haben", "sein", "werden", "müssen", "können", "wollen", "sollen", "dürfen",
                "mögen",
            ]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSentence {
    pub text: String,
    pub stream_index: u64,
}

impl RawSentence {
    pub fn new(text: &str, stream_index: u64) -> Self {
        RawSentence { text: text.to_string(), stream_index }
    }

    fn with_text(&self, text: String) -> Self {
        RawSentence { text, stream_index: self.stream_index }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DropReason {
    Interrogative,
    NoVerb,
    SpeechFrame,
    SupervisorDiscard,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DropReason::Interrogative => "INTERROGATIVE",
            DropReason::NoVerb => "NO_VERB",
            DropReason::SpeechFrame => "SPEECH_FRAME",
            DropReason::SupervisorDiscard => "SUPERVISOR_DISCARD",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DroppedFragment {
    /// Position counter at the time of the drop.
    pub position_context: u64,
    pub reason: DropReason,
    pub text: String,
}

impl DroppedFragment {
    /// `position-context<TAB>reason<TAB>text`
    pub fn to_line(&self) -> String {
        let text: String = self
            .text
            .chars()
            .map(|c| if c == '\t' || c == '\n' { ' ' } else { c })
            .collect();
        format!("{}\t{}\t{}", self.position_context, self.reason, text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RequestKind {
    /// The actor slot holds a pronoun.
    PronounBinding,
    /// A clause without any subject; the supervisor names its actor.
    SplitConfirm,
    /// A subjectless clause with no known actor to bind; the supervisor
    /// either introduces an actor or discards the sentence.
    DiscardConfirm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionRequest {
    pub request_id: String,
    pub kind: RequestKind,
    pub sentence: RawSentence,
    /// Known actors, most recent first.
    pub candidates: Vec<String>,
    pub proposed: Option<String>,
}

/// A supervisor answer to a [`ResolutionRequest`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Resolution {
    Bind {
        actor: String,
        /// Completes or replaces the object slot.
        object: Option<Token>,
        /// Required when `actor` has not been seen before.
        confirm_new: bool,
    },
    Discard,
}

impl Resolution {
    pub fn actor(actor: &str) -> Self {
        Resolution::Bind { actor: actor.to_string(), object: None, confirm_new: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjectivePair {
    pub noun: Token,
    pub adjective: Token,
}

/// An annotated sentence waiting for its position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Draft {
    pub sentence: RawSentence,
    pub actor: Option<Token>,
    pub verb: Token,
    pub object: Option<Token>,
    pub adjective_pairs: Vec<AdjectivePair>,
    /// Fixed position from an annotated line.
    pub position: Option<u64>,
    /// Lemmas occurring in the sentence, used to rank proposals.
    #[serde(default)]
    pub mentions: Vec<String>,
}

impl Draft {
    /// Main collocation followed by adjective facts, all at `position`.
    pub fn complete(&self, position: u64) -> Result<Vec<Collocation>, CollocationError> {
        let actor = self.actor.clone().ok_or_else(|| CollocationError::MalformedLine {
            line: self.sentence.text.clone(),
            reason: "actor unresolved".into(),
        })?;
        let mut out = vec![Collocation::new(
            actor,
            self.verb.clone(),
            self.object.clone(),
            position as i64,
        )?];
        for pair in &self.adjective_pairs {
            out.push(rewrite_adjective_fact(
                pair.noun.clone(),
                pair.adjective.clone(),
                position as i64,
            )?);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Annotation {
    Ready(Draft),
    NeedsActor { kind: RequestKind, draft: Draft },
}

fn adjective_pairs(tokens: &[Token]) -> Vec<AdjectivePair> {
    tokens
        .windows(2)
        .filter(|w| w[0].category() == Category::Adjective && w[1].category() == Category::Noun)
        .map(|w| AdjectivePair { noun: w[1].clone(), adjective: w[0].clone() })
        .collect()
}

/// Adjective facts for every adjective directly preceding a noun, in
/// document order, at the host sentence position.
pub fn expand_adjective_pairs(
    tokens: &[Token],
    position: i64,
) -> Result<Vec<Collocation>, CollocationError> {
    adjective_pairs(tokens)
        .into_iter()
        .map(|p| rewrite_adjective_fact(p.noun, p.adjective, position))
        .collect()
}

const OPENING_QUOTES: [char; 3] = ['„', '«', '“'];
const CLOSING_QUOTES: [char; 3] = ['“', '”', '»'];
const TERMINATORS: [char; 3] = ['.', '!', '?'];

fn is_quote(ch: char) -> bool {
    ch == '"' || OPENING_QUOTES.contains(&ch) || CLOSING_QUOTES.contains(&ch)
}

/// Tracks whether the scanner is inside a quotation.
#[derive(Default)]
struct QuoteState {
    open: bool,
}

impl QuoteState {
    /// Feeds one char, returning true when it is a quotation mark.
    fn feed(&mut self, ch: char) -> bool {
        if ch == '"' {
            self.open = !self.open;
            true
        } else if self.open && CLOSING_QUOTES.contains(&ch) {
            self.open = false;
            true
        } else if !self.open && OPENING_QUOTES.contains(&ch) {
            self.open = true;
            true
        } else {
            is_quote(ch)
        }
    }
}

fn clean_word(word: &str) -> &str {
    word.trim_matches(|c: char| !(c.is_alphanumeric() || c == '-'))
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Rule pipeline bound to a lexicon.
#[derive(Debug, Clone, Default)]
pub struct Pipeline {
    lexicon: Lexicon,
    config: PipelineConfig,
}

impl Pipeline {
    pub fn new(lexicon: Lexicon, config: PipelineConfig) -> Self {
        Pipeline { lexicon, config }
    }

    pub fn lexicon(&self) -> &Lexicon {
        &self.lexicon
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn tokens(&self, text: &str) -> Vec<Token> {
        text.split_whitespace()
            .map(clean_word)
            .filter(|w| !w.is_empty())
            .filter_map(|w| self.lexicon.token(w))
            .collect()
    }

    fn has_verb(&self, words: &[&str]) -> bool {
        self.tokens(&words.join(" ")).iter().any(|t| t.category() == Category::Verb)
    }

    /// Words up to and including the first noun or pronoun before the first
    /// verb, when there is one.
    fn subject_phrase<'a>(&self, words: &[&'a str]) -> Option<Vec<&'a str>> {
        for (i, word) in words.iter().enumerate() {
            match self.lexicon.token(clean_word(word)).map(|t| t.category()) {
                Some(Category::Verb) => return None,
                Some(Category::Noun | Category::Pronoun) => {
                    let mut phrase = words[..=i].to_vec();
                    if let Some(last) = phrase.last_mut() {
                        *last = last.trim_end_matches(',');
                    }
                    return Some(phrase);
                }
                _ => {}
            }
        }
        None
    }

    fn is_conjunction(&self, word: &str) -> bool {
        let word = clean_word(word).to_lowercase();
        self.config.conjunctions.iter().any(|c| c.to_lowercase() == word)
    }

    /// Splits text into sentences, then dissolves conjunction-joined clauses.
    /// Stream indices start at 1.
    pub fn segment(&self, text: &str) -> Vec<RawSentence> {
        let mut sentences = Vec::new();
        for sentence in split_sentences(text) {
            sentences.extend(self.dissolve(&sentence));
        }
        sentences
            .into_iter()
            .enumerate()
            .map(|(i, text)| RawSentence { text, stream_index: i as u64 + 1 })
            .collect()
    }

    fn dissolve(&self, sentence: &str) -> Vec<String> {
        let body = sentence.trim_end_matches(TERMINATORS);
        let terminator = &sentence[body.len()..];
        let words: Vec<&str> = body.split_whitespace().collect();

        let mut quotes = QuoteState::default();
        let mut split_at = None;
        for (i, word) in words.iter().enumerate() {
            let mut quoted = quotes.open;
            for ch in word.chars() {
                quotes.feed(ch);
                quoted |= quotes.open;
            }
            if quoted || i == 0 || i + 1 == words.len() || !self.is_conjunction(word) {
                continue;
            }
            if self.has_verb(&words[..i]) && self.has_verb(&words[i + 1..]) {
                split_at = Some(i);
                break;
            }
        }
        let Some(i) = split_at else {
            return vec![sentence.trim().to_string()];
        };

        let mut left: Vec<&str> = words[..i].to_vec();
        if let Some(last) = left.last_mut() {
            *last = last.trim_end_matches(',');
        }
        let right: Vec<&str> = words[i + 1..].to_vec();
        let mut right_words: Vec<&str> = Vec::new();
        if self.subject_phrase(&right).is_none() {
            if let Some(subject) = self.subject_phrase(&left) {
                right_words.extend(subject);
            }
        }
        right_words.extend(right);

        let mut out = vec![format!("{}{}", left.join(" "), terminator)];
        out.extend(self.dissolve(&format!("{}{}", right_words.join(" "), terminator)));
        out
    }

    /// Embeds quoted speech as a plain sentence, dropping a speaker clause.
    pub fn strip_speech(&self, s: &RawSentence) -> RawSentence {
        if !s.text.chars().any(is_quote) {
            return s.clone();
        }
        let mut quotes = QuoteState::default();
        let mut inside = String::new();
        let mut outside = String::new();
        let mut unquoted = String::new();
        for ch in s.text.chars() {
            let was_open = quotes.open;
            if quotes.feed(ch) {
                if was_open && !quotes.open {
                    inside.push(' ');
                }
                continue;
            }
            unquoted.push(ch);
            if quotes.open {
                inside.push(ch);
            } else {
                outside.push(ch);
            }
        }
        let outside_tokens = self.tokens(&outside);
        let speaker_clause = {
            let verbs: Vec<&Token> =
                outside_tokens.iter().filter(|t| t.category() == Category::Verb).collect();
            verbs.len() == 1 && self.config.verba_dicendi.iter().any(|v| v == verbs[0].lemma())
        };
        let text = if outside_tokens.is_empty() || speaker_clause {
            inside
        } else {
            unquoted
        };
        s.with_text(collapse_whitespace(&text))
    }

    pub fn filter_interrogative(&self, s: &RawSentence) -> Option<RawSentence> {
        let trimmed = s.text.trim_end().trim_end_matches(is_quote).trim_end();
        if trimmed.ends_with('?') {
            None
        } else {
            Some(s.clone())
        }
    }

    fn is_auxiliary(&self, token: &Token) -> bool {
        self.config.auxiliaries.iter().any(|a| a == token.lemma())
    }

    /// Picks actor, verb and object slots.
    ///
    /// The actor is the first noun or pronoun before the first verb; when
    /// none precedes it the first one after it is taken (inverted order).
    /// An auxiliary followed by another verb yields that later verb.
    /// The object is the first noun or adjective after the verb that is not
    /// the actor; an adjective directly before a noun defers to the noun.
    pub fn annotate(&self, s: &RawSentence) -> Result<Annotation, PreprocessError> {
        let tokens = self.tokens(&s.text);
        let is_nominal = |t: &Token| matches!(t.category(), Category::Noun | Category::Pronoun);
        let first_verb = tokens
            .iter()
            .position(|t| t.category() == Category::Verb)
            .ok_or_else(|| PreprocessError::NoVerb(s.text.clone()))?;

        let actor_idx = tokens[..first_verb]
            .iter()
            .position(is_nominal)
            .or_else(|| {
                tokens[first_verb + 1..]
                    .iter()
                    .position(is_nominal)
                    .map(|i| i + first_verb + 1)
            });
        // Either the actor precedes the first verb or it follows it (inversion).
        let verb_idx = first_verb;
        let main_verb_idx = if self.is_auxiliary(&tokens[verb_idx]) {
            tokens
                .iter()
                .rposition(|t| t.category() == Category::Verb)
                .filter(|&last| last > verb_idx)
                .unwrap_or(verb_idx)
        } else {
            verb_idx
        };

        let object = (verb_idx + 1..tokens.len())
            .filter(|&i| Some(i) != actor_idx && i != main_verb_idx)
            .find(|&i| match tokens[i].category() {
                Category::Noun => true,
                Category::Adjective => tokens
                    .get(i + 1)
                    .is_none_or(|next| next.category() != Category::Noun),
                _ => false,
            })
            .map(|i| tokens[i].clone());

        let mut draft = Draft {
            sentence: s.clone(),
            actor: None,
            verb: tokens[main_verb_idx].clone(),
            object,
            adjective_pairs: adjective_pairs(&tokens),
            position: None,
            mentions: tokens
                .iter()
                .filter(|t| t.category() == Category::Noun)
                .map(|t| t.lemma().to_string())
                .collect(),
        };
        Ok(match actor_idx.map(|i| &tokens[i]) {
            Some(actor) if actor.category() == Category::Noun => {
                draft.actor = Some(actor.clone());
                Annotation::Ready(draft)
            }
            Some(_) => Annotation::NeedsActor { kind: RequestKind::PronounBinding, draft },
            None => Annotation::NeedsActor { kind: RequestKind::SplitConfirm, draft },
        })
    }

    fn is_speech_frame(&self, original: &RawSentence, draft: &Draft) -> bool {
        draft.object.is_none()
            && !original.text.chars().any(is_quote)
            && self.config.verba_dicendi.iter().any(|v| v == draft.verb.lemma())
    }
}

fn split_sentences(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut quotes = QuoteState::default();
    let mut last_plain = ' ';
    let mut chars = text.chars().peekable();
    while let Some(ch) = chars.next() {
        let was_open = quotes.open;
        let is_mark = quotes.feed(ch);
        current.push(ch);
        if is_mark {
            // A quotation closing on a terminator ends the sentence unless the
            // text goes on in lower case (a trailing speaker clause).
            let closes_sentence = was_open
                && !quotes.open
                && TERMINATORS.contains(&last_plain)
                && chars
                    .clone()
                    .find(|c| !c.is_whitespace())
                    .is_none_or(|c| !c.is_lowercase());
            if closes_sentence {
                push_sentence(&mut out, &mut current);
            }
            continue;
        }
        if !ch.is_whitespace() {
            last_plain = ch;
        }
        if !quotes.open && TERMINATORS.contains(&ch) {
            while let Some(&next) = chars.peek() {
                if TERMINATORS.contains(&next) {
                    current.push(next);
                    chars.next();
                } else {
                    break;
                }
            }
            push_sentence(&mut out, &mut current);
        }
    }
    push_sentence(&mut out, &mut current);
    out
}

fn push_sentence(out: &mut Vec<String>, current: &mut String) {
    let text = collapse_whitespace(current);
    if text.chars().any(char::is_alphanumeric) {
        out.push(text);
    }
    current.clear();
}

/// Result of pushing input through the intake.
///
/// Each fragment lands in exactly one bucket: emitted (as one main
/// collocation plus adjective facts), dropped, pending, or queued behind an
/// earlier pending request.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct PreprocessOutcome {
    pub emitted: Vec<Collocation>,
    pub dropped: Vec<DroppedFragment>,
    pub pending: Vec<ResolutionRequest>,
    pub queued: Vec<RawSentence>,
}

impl PreprocessOutcome {
    fn absorb(&mut self, other: PreprocessOutcome) {
        self.emitted.extend(other.emitted);
        self.dropped.extend(other.dropped);
        self.pending.extend(other.pending);
        self.queued.extend(other.queued);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Held {
    request: Option<ResolutionRequest>,
    draft: Draft,
}

/// Stateful side of preprocessing: position counter, hold queue, pending
/// requests and the dropped log.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamIntake {
    position: u64,
    stream_index: u64,
    request_seq: u64,
    queue: VecDeque<Held>,
    answered: BTreeSet<String>,
    dropped: Vec<DroppedFragment>,
    /// Emitted actors, most recent first.
    recency: Vec<String>,
}

impl StreamIntake {
    pub fn new() -> Self {
        Self::default()
    }

    /// Highest emitted position, 0 when nothing was emitted.
    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn dropped(&self) -> &[DroppedFragment] {
        &self.dropped
    }

    pub fn pending(&self) -> Vec<&ResolutionRequest> {
        self.queue.iter().filter_map(|h| h.request.as_ref()).collect()
    }

    /// Sentences waiting for emission, pending or not.
    pub fn queued_len(&self) -> usize {
        self.queue.len()
    }

    fn next_index(&mut self) -> u64 {
        self.stream_index += 1;
        self.stream_index
    }

    fn drop_fragment(&mut self, text: &str, reason: DropReason) -> DroppedFragment {
        let fragment = DroppedFragment {
            position_context: self.position,
            reason,
            text: text.to_string(),
        };
        self.dropped.push(fragment.clone());
        fragment
    }

    /// Known actors, most recent first, counting ready sentences still queued.
    fn candidates(&self) -> Vec<String> {
        let mut ranked = self.recency.clone();
        for held in &self.queue {
            if let Some(actor) = &held.draft.actor {
                ranked.retain(|a| a != actor.lemma());
                ranked.insert(0, actor.lemma().to_string());
            }
        }
        ranked
    }

    fn projected_position(&self) -> u64 {
        self.queue
            .iter()
            .fold(self.position, |acc, h| h.draft.position.unwrap_or(acc + 1))
    }

    fn enqueue(&mut self, annotation: Annotation) -> Result<PreprocessOutcome, PreprocessError> {
        let (kind, draft) = match annotation {
            Annotation::Ready(draft) => (None, draft),
            Annotation::NeedsActor { kind, draft } => (Some(kind), draft),
        };
        if let Some(position) = draft.position {
            let latest = self.projected_position();
            if position < latest {
                return Err(PreprocessError::OutOfOrder { position, latest });
            }
        }
        let mut outcome = PreprocessOutcome::default();
        let request = kind.map(|kind| {
            let candidates = self.candidates();
            let (kind, proposed) = match kind {
                RequestKind::SplitConfirm if candidates.is_empty() => {
                    (RequestKind::DiscardConfirm, None)
                }
                RequestKind::DiscardConfirm => (kind, None),
                _ => (
                    kind,
                    candidates
                        .iter()
                        .find(|c| !draft.mentions.contains(c))
                        .or(candidates.first())
                        .cloned(),
                ),
            };
            self.request_seq += 1;
            ResolutionRequest {
                request_id: format!("req-{}", self.request_seq),
                kind,
                sentence: draft.sentence.clone(),
                candidates,
                proposed,
            }
        });
        match &request {
            Some(r) => outcome.pending.push(r.clone()),
            None if !self.queue.is_empty() => outcome.queued.push(draft.sentence.clone()),
            None => {}
        }
        self.queue.push_back(Held { request, draft });
        outcome.absorb(self.drain()?);
        Ok(outcome)
    }

    /// Emits every queued sentence up to the first unanswered request.
    fn drain(&mut self) -> Result<PreprocessOutcome, PreprocessError> {
        let mut outcome = PreprocessOutcome::default();
        while self.queue.front().is_some_and(|h| h.request.is_none()) {
            let held = self.queue.pop_front().expect("front checked");
            let position = held.draft.position.unwrap_or(self.position + 1);
            let collocations = held.draft.complete(position)?;
            for c in collocations.iter().skip(1).chain(collocations.first()) {
                let actor = c.actor().lemma();
                self.recency.retain(|a| a != actor);
                self.recency.insert(0, actor.to_string());
            }
            self.position = position;
            outcome.emitted.extend(collocations);
        }
        Ok(outcome)
    }

    /// Runs raw text through the full rule chain.
    pub fn push_raw(
        &mut self,
        pipeline: &Pipeline,
        text: &str,
    ) -> Result<PreprocessOutcome, PreprocessError> {
        let mut outcome = PreprocessOutcome::default();
        for segment in pipeline.segment(text) {
            let sentence = RawSentence::new(&segment.text, self.next_index());
            let stripped = pipeline.strip_speech(&sentence);
            let Some(declarative) = pipeline.filter_interrogative(&stripped) else {
                outcome.dropped.push(self.drop_fragment(&sentence.text, DropReason::Interrogative));
                continue;
            };
            let annotation = match pipeline.annotate(&declarative) {
                Ok(a) => a,
                Err(PreprocessError::NoVerb(_)) => {
                    outcome.dropped.push(self.drop_fragment(&sentence.text, DropReason::NoVerb));
                    continue;
                }
                Err(e) => return Err(e),
            };
            let draft = match &annotation {
                Annotation::Ready(d) | Annotation::NeedsActor { draft: d, .. } => d,
            };
            if pipeline.is_speech_frame(&sentence, draft) {
                outcome
                    .dropped
                    .push(self.drop_fragment(&sentence.text, DropReason::SpeechFrame));
                continue;
            }
            outcome.absorb(self.enqueue(annotation)?);
        }
        Ok(outcome)
    }

    /// Takes one pre-annotated wire line. A pronoun actor (`Er(PRON)`) is
    /// held for binding like in raw mode.
    pub fn push_annotated(&mut self, line: &str) -> Result<PreprocessOutcome, PreprocessError> {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            return Ok(PreprocessOutcome::default());
        }
        let wire = WireLine::parse(trimmed)?;
        let sentence = RawSentence::new(trimmed, self.next_index());
        let mut draft = Draft {
            sentence,
            actor: None,
            verb: wire.verb,
            object: wire.object,
            adjective_pairs: Vec::new(),
            position: wire.position,
            mentions: Vec::new(),
        };
        let annotation = if wire.actor.category() == Category::Pronoun {
            draft.mentions = draft.object.iter().map(|o| o.lemma().to_string()).collect();
            Annotation::NeedsActor { kind: RequestKind::PronounBinding, draft }
        } else {
            draft.actor = Some(wire.actor);
            Annotation::Ready(draft)
        };
        self.enqueue(annotation)
    }

    /// Applies a supervisor answer and emits whatever it unblocks.
    pub fn resolve(
        &mut self,
        request_id: &str,
        resolution: Resolution,
    ) -> Result<PreprocessOutcome, PreprocessError> {
        let Some(idx) = self
            .queue
            .iter()
            .position(|h| h.request.as_ref().is_some_and(|r| r.request_id == request_id))
        else {
            return Err(if self.answered.contains(request_id) {
                PreprocessError::StaleRequest(request_id.to_string())
            } else {
                PreprocessError::UnknownRequest(request_id.to_string())
            });
        };
        let mut outcome = PreprocessOutcome::default();
        match resolution {
            Resolution::Bind { actor, object, confirm_new } => {
                let actor = Token::noun(&actor)?;
                let held = &self.queue[idx];
                let request = held.request.as_ref().expect("located by request");
                let known = request.candidates.iter().any(|c| c == actor.lemma())
                    || self.recency.iter().any(|c| c == actor.lemma());
                if !known && !confirm_new {
                    return Err(PreprocessError::UnconfirmedActor(actor.lemma().to_string()));
                }
                let held = &mut self.queue[idx];
                held.draft.actor = Some(actor);
                if object.is_some() {
                    held.draft.object = object;
                }
                held.request = None;
            }
            Resolution::Discard => {
                let held = self.queue.remove(idx).expect("index located");
                outcome.dropped.push(
                    self.drop_fragment(&held.draft.sentence.text, DropReason::SupervisorDiscard),
                );
            }
        }
        self.answered.insert(request_id.to_string());
        outcome.absorb(self.drain()?);
        Ok(outcome)
    }
}
