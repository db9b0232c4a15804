use mindstream::preprocess::PreprocessError;
use mindstream::SessionError;

/// How an engine error surfaces: a stable code, an HTTP status and a process
/// exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Class {
    pub code: &'static str,
    pub http: u16,
    pub exit: i32,
}

const fn class(code: &'static str, http: u16, exit: i32) -> Class {
    Class { code, http, exit }
}

pub fn classify(err: &SessionError) -> Class {
    match err {
        SessionError::LexiconRequired => class("LEXICON_REQUIRED", 422, 2),
        SessionError::Io { .. } => class("IO", 500, 2),
        SessionError::Closed => class("SESSION_CLOSED", 409, 1),
        SessionError::UnknownActor { .. } => class("UNKNOWN_ACTOR", 404, 4),
        SessionError::FutureC { .. } => class("FUTURE_C", 422, 5),
        SessionError::InvalidConfig(_) => class("INVALID_CONFIG", 422, 3),
        SessionError::Malformed { .. } | SessionError::UnsupportedVersion(_) => {
            class("MALFORMED", 422, 3)
        }
        SessionError::Store(_) => class("STORE", 422, 3),
        SessionError::Priority(_) => class("PRIORITY", 422, 3),
        SessionError::Preprocess(e) => match e {
            PreprocessError::Io { .. } => class("IO", 500, 2),
            PreprocessError::UnknownRequest(_) => class("UNKNOWN_REQUEST", 404, 1),
            PreprocessError::StaleRequest(_) => class("STALE_REQUEST", 409, 1),
            PreprocessError::UnconfirmedActor(_) => class("UNCONFIRMED_ACTOR", 422, 1),
            PreprocessError::OutOfOrder { .. } => class("OUT_OF_ORDER", 422, 3),
            PreprocessError::Lexicon { .. }
            | PreprocessError::Collocation(_)
            | PreprocessError::NoVerb(_) => class("MALFORMED", 422, 3),
        },
    }
}
