//! Command-line front end and HTTP service for a mindstream session.

pub mod cli;
pub mod errors;
pub mod service;

pub use cli::{run, Cli, Failure};
pub use service::{router, AppState};
