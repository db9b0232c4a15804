use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use mindstream::{
    InputMode, Lexicon, PriorityFunction, PrioritySnapshot, Resolution, Session, SessionConfig,
    SessionDelta, SessionError,
};

use crate::errors::classify;
use crate::service::{self, resolution_from, AppState};

#[derive(Debug, Parser)]
#[command(name = "mindstream", version, about = "Per-actor mind-maps over a text stream")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stream a file through a session and write the session file.
    Ingest(IngestArgs),
    /// Print priority lists for one or more actors.
    Query(QueryArgs),
    /// List actors in order of first appearance.
    Actors(ActorsArgs),
    /// Answer a pending resolution request, or list them without --id.
    Resolve(ResolveArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Raw,
    Annotated,
}

impl From<Mode> for InputMode {
    fn from(mode: Mode) -> Self {
        match mode {
            Mode::Raw => InputMode::Raw,
            Mode::Annotated => InputMode::Annotated,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Function {
    F1,
    F2,
    F3,
}

impl From<Function> for PriorityFunction {
    fn from(f: Function) -> Self {
        match f {
            Function::F1 => PriorityFunction::F1,
            Function::F2 => PriorityFunction::F2,
            Function::F3 => PriorityFunction::F3,
        }
    }
}

#[derive(Debug, Args)]
pub struct SessionArg {
    #[arg(long, env = "MINDSTREAM_SESSION")]
    pub session: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "annotated")]
    pub mode: Mode,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[command(flatten)]
    pub session: SessionArg,
    /// Continue an existing session file instead of starting fresh.
    #[arg(long)]
    pub append: bool,
}

#[derive(Debug, Args)]
pub struct QueryArgs {
    #[command(flatten)]
    pub session: SessionArg,
    #[arg(long, required = true)]
    pub actor: Vec<String>,
    #[arg(long = "fn", value_enum, default_value = "f1")]
    pub function: Function,
    #[arg(long)]
    pub c: Option<u64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ActorsArgs {
    #[command(flatten)]
    pub session: SessionArg,
    #[arg(long)]
    pub c: Option<u64>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ResolveArgs {
    #[command(flatten)]
    pub session: SessionArg,
    #[arg(long)]
    pub id: Option<String>,
    #[arg(long, conflicts_with = "discard")]
    pub actor: Option<String>,
    /// Object to fill in, e.g. `Haus` or `laut(ADJ)`.
    #[arg(long, requires = "actor")]
    pub object: Option<String>,
    #[arg(long)]
    pub discard: bool,
    #[arg(long, requires = "actor")]
    pub confirm_new: bool,
    #[arg(long, value_enum, default_value = "text")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Session file to load (if present) and keep up to date.
    #[arg(long, env = "MINDSTREAM_SESSION")]
    pub session: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "raw")]
    pub mode: Mode,
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
}

/// A command failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub exit: i32,
    pub message: String,
}

impl From<SessionError> for Failure {
    fn from(err: SessionError) -> Self {
        Failure { exit: classify(&err).exit, message: err.to_string() }
    }
}

fn failure(exit: i32, message: impl Into<String>) -> Failure {
    Failure { exit, message: message.into() }
}

fn io_failure(path: &Path, err: std::io::Error) -> Failure {
    failure(2, format!("{}: {err}", path.display()))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), Failure> {
    match cli.command {
        Command::Ingest(args) => ingest(args, out),
        Command::Query(args) => query(args, out),
        Command::Actors(args) => actors(args, out),
        Command::Resolve(args) => resolve(args, out),
        Command::Serve(args) => serve(args),
    }
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes()).map_err(|e| failure(1, e.to_string()))
}

fn load_lexicon(path: &Path) -> Result<Lexicon, Failure> {
    Lexicon::from_file(path).map_err(|e| Failure::from(SessionError::from(e)))
}

/// Re-attaches the lexicon a raw-mode session was built with.
fn attach_lexicon(session: &mut Session, flag: Option<&Path>) -> Result<(), Failure> {
    let path = flag.map(Path::to_path_buf).or_else(|| session.config().lexicon_path.clone());
    if let Some(path) = path {
        session.set_lexicon(load_lexicon(&path)?);
    }
    Ok(())
}

fn ingest(args: IngestArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.input).map_err(|e| io_failure(&args.input, e))?;
    let mut session = if args.append && args.session.session.exists() {
        Session::load(&args.session.session)?
    } else {
        let config = SessionConfig {
            mode: args.mode.into(),
            lexicon_path: args.lexicon.clone(),
            ..SessionConfig::default()
        };
        Session::new(config)?
    };
    attach_lexicon(&mut session, args.lexicon.as_deref())?;
    if session.config().mode == InputMode::Raw && !session.has_lexicon() {
        return Err(failure(2, "lexicon required"));
    }

    let chunks: Vec<String> = match session.config().mode {
        InputMode::Annotated => text.lines().map(str::to_string).collect(),
        // Paragraphs keep sentences that wrap across lines together.
        InputMode::Raw => text
            .split("\n\n")
            .map(|p| p.split_whitespace().collect::<Vec<_>>().join(" "))
            .filter(|p| !p.is_empty())
            .collect(),
    };
    let mut emitted = 0;
    for chunk in chunks {
        let delta = session.step(&chunk)?;
        emitted += delta.emitted.len() + settle(&mut session)?;
    }
    session.save(&args.session.session)?;
    log::info!(
        "{emitted} collocations, {} actors, position {}",
        session.actors().len(),
        session.position_counter()
    );
    write_out(
        out,
        &format!(
            "emitted {emitted}, actors {}, position {}, dropped {}\n",
            session.actors().len(),
            session.position_counter(),
            session.dropped().len()
        ),
    )
}

/// Non-interactive policy: take the proposed binding, else discard.
fn settle(session: &mut Session) -> Result<usize, Failure> {
    let mut emitted = 0;
    while let Some(request) = session.pending().first().map(|r| (*r).clone()) {
        let resolution = match &request.proposed {
            Some(actor) => {
                log::info!("{}: binding {:?} to {actor}", request.request_id, request.sentence.text);
                Resolution::actor(actor)
            }
            None => {
                log::warn!("{}: no proposal, discarding {:?}", request.request_id, request.sentence.text);
                Resolution::Discard
            }
        };
        emitted += session.resolve(&request.request_id, resolution)?.emitted.len();
    }
    Ok(emitted)
}

pub fn render_snapshot(snapshot: &PrioritySnapshot) -> String {
    snapshot
        .entries
        .iter()
        .map(|e| format!("{}\t{}\t{}\n", e.key.verb, e.key.object_display(), e.display_priority()))
        .collect()
}

fn json<T: serde::Serialize + ?Sized>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| failure(1, e.to_string()))
}

fn query(args: QueryArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let mut session = Session::load(&args.session.session)?;
    if let Some(delta) = args.delta {
        session.set_delta(delta)?;
    }
    let snapshots = session.story_line(&args.actor, args.function.into(), args.c)?;
    let text = match args.format {
        Format::Json if snapshots.len() == 1 => json(&snapshots[0])?,
        Format::Json => json(&snapshots)?,
        Format::Text if snapshots.len() == 1 => render_snapshot(&snapshots[0]),
        Format::Text => snapshots
            .iter()
            .map(|s| format!("# {}\n{}", s.actor, render_snapshot(s)))
            .collect(),
    };
    write_out(out, &text)
}

fn actors(args: ActorsArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let session = Session::load(&args.session.session)?;
    if let Some(c) = args.c {
        if c > session.position_counter() {
            return Err(SessionError::FutureC { c, current: session.position_counter() }.into());
        }
    }
    let actors = match args.c {
        Some(c) => session.store().actors_as_of(c),
        None => session.actors(),
    };
    let text = match args.format {
        Format::Json => json(&actors)?,
        Format::Text => actors.iter().map(|a| format!("{a}\n")).collect(),
    };
    write_out(out, &text)
}

fn render_delta(delta: &SessionDelta) -> String {
    let mut text: String = delta.emitted.iter().map(|c| c.to_wire() + "\n").collect();
    for d in &delta.dropped {
        text += &format!("dropped\t{}\n", d.to_line());
    }
    for r in &delta.pending {
        text += &format!("pending\t{}\n", r.request_id);
    }
    text
}

fn resolve(args: ResolveArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let path = &args.session.session;
    let mut session = Session::load(path)?;
    let Some(id) = args.id else {
        let pending = session.pending();
        let text = match args.format {
            Format::Json => json(&pending)?,
            Format::Text => pending
                .iter()
                .map(|r| {
                    format!(
                        "{}\t{}\t{}\t{}\t{}\n",
                        r.request_id,
                        serde_json::to_value(r.kind).unwrap().as_str().unwrap_or_default(),
                        r.sentence.text,
                        r.candidates.join(","),
                        r.proposed.as_deref().unwrap_or("-")
                    )
                })
                .collect(),
        };
        return write_out(out, &text);
    };
    let resolution =
        resolution_from(args.actor, args.object.as_deref(), args.confirm_new, args.discard)
            .map_err(|m| failure(3, m))?;
    let delta = session.resolve(&id, resolution)?;
    session.save(path)?;
    let text = match args.format {
        Format::Json => json(&delta)?,
        Format::Text => render_delta(&delta),
    };
    write_out(out, &text)
}

fn serve(args: ServeArgs) -> Result<(), Failure> {
    let mut session = match &args.session {
        Some(path) if path.exists() => Session::load(path)?,
        _ => Session::new(SessionConfig {
            mode: args.mode.into(),
            lexicon_path: args.lexicon.clone(),
            ..SessionConfig::default()
        })?,
    };
    attach_lexicon(&mut session, args.lexicon.as_deref())?;
    if session.config().mode == InputMode::Raw && !session.has_lexicon() {
        return Err(failure(2, "lexicon required"));
    }
    let state = AppState::new(session, args.session);
    let runtime = tokio::runtime::Runtime::new().map_err(|e| failure(1, e.to_string()))?;
    runtime
        .block_on(service::serve(state, &args.bind))
        .map_err(|e| failure(2, format!("{e:#}")))
}
