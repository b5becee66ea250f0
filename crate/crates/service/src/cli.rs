use std::io::{Read, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use tutor_core::synth::Budget;
use tutor_core::tutor::{give_feedback, AuthoringError, FeedbackOptions, LoadError};

use crate::api::{router, AppState};
use crate::config::Config;
use crate::session_log::SessionLog;
use crate::store::{self, ExerciseStore, StoreError};
use crate::text;

/// Exit status for unreadable or invalid inputs.
pub const EXIT_INPUT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "tutor", version, about = "Feedback on partial functional programs")]
pub struct Cli {
    /// Print machine-readable JSON.
    #[arg(long, global = true)]
    pub json: bool,
    /// Synthesis time budget in milliseconds.
    #[arg(long, global = true)]
    pub budget_ms: Option<u64>,
    /// Directory of exercise documents.
    #[arg(long, global = true, env = "TUTOR_EXERCISES")]
    pub exercises: Option<PathBuf>,
    /// Seed for the random part of the generated inputs.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML configuration file.
    #[arg(long, global = true, env = "TUTOR_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Give feedback on a student program. Exit status: 0 correct,
    /// 1 on track, 2 off track, 3 too complex or inconclusive, 4 bad input.
    Check {
        /// Exercise document path, or exercise id.
        exercise: String,
        /// Student source file, or `-` for standard input.
        student: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "TUTOR_PORT")]
        port: Option<u16>,
    },
    /// Validate exercise documents (all in --exercises when none are given).
    Validate { files: Vec<PathBuf> },
    /// Print the generated examples of an exercise.
    GenExamples {
        /// Exercise document path, or exercise id.
        exercise: String,
    },
}

/// Runs a command other than `serve`, returning the exit status.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Check { exercise, student } => check(cli, exercise, student, out),
        Command::Validate { files } => validate(cli, files, out),
        Command::GenExamples { exercise } => gen_examples(cli, exercise, out),
        Command::Serve { .. } => Err("serve is asynchronous; use `serve`".into()),
    };
    match result {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(err, "error: {message}");
            EXIT_INPUT
        }
    }
}

fn check(cli: &Cli, exercise: &str, student: &Path, out: &mut dyn Write) -> Result<i32, String> {
    let config = Config::load(cli.config.as_deref()).map_err(|e| e.to_string())?;
    let ex = store::resolve(exercise, cli.exercises.as_deref(), cli.seed).map_err(|e| e.to_string())?;
    let source = if student == Path::new("-") {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| format!("cannot read standard input: {e}"))?;
        s
    } else {
        std::fs::read_to_string(student).map_err(|e| format!("cannot read {}: {e}", student.display()))?
    };
    let opts = FeedbackOptions {
        budget: Budget { time_ms: cli.budget_ms.unwrap_or(config.budget.time_ms), ..config.budget },
        fuel: config.fuel,
        recovery: true,
    };
    let fb = give_feedback(&ex, &source, &opts);
    let shown = if cli.json { serde_json::to_string(&fb).map_err(|e| e.to_string())? } else { text::render(&fb) };
    writeln!(out, "{}", shown.trim_end()).map_err(|e| e.to_string())?;
    Ok(fb.classification.exit_code())
}

#[derive(Serialize)]
struct Validation {
    path: String,
    id: Option<String>,
    examples: usize,
    errors: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    authoring: Vec<AuthoringError>,
}

fn validate(cli: &Cli, files: &[PathBuf], out: &mut dyn Write) -> Result<i32, String> {
    let mut paths: Vec<PathBuf> = files.to_vec();
    if paths.is_empty() {
        let dir = cli.exercises.as_ref().ok_or("no files given and no --exercises directory")?;
        paths = std::fs::read_dir(dir)
            .map_err(|e| format!("cannot read {}: {e}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        paths.sort();
    }
    let mut results = Vec::new();
    for path in &paths {
        let mut v =
            Validation { path: path.display().to_string(), id: None, examples: 0, errors: vec![], authoring: vec![] };
        match store::load_file(path, cli.seed) {
            Ok(ex) => {
                v.id = Some(ex.id.clone());
                v.examples = ex.examples.len();
            }
            Err(StoreError::Load { source: LoadError::Invalid { id, errors }, .. }) => {
                v.id = Some(id);
                v.errors = errors.iter().map(ToString::to_string).collect();
                v.authoring = errors;
            }
            Err(e) => v.errors.push(e.to_string()),
        }
        results.push(v);
    }
    let ok = results.iter().all(|v| v.errors.is_empty());
    let w = |e: std::io::Error| e.to_string();
    if cli.json {
        writeln!(out, "{}", serde_json::to_string(&results).map_err(|e| e.to_string())?).map_err(w)?;
    } else {
        for v in &results {
            if v.errors.is_empty() {
                writeln!(out, "ok {} ({}, {} examples)", v.path, v.id.as_deref().unwrap_or("?"), v.examples).map_err(w)?;
            } else {
                writeln!(out, "invalid {}", v.path).map_err(w)?;
                for e in &v.errors {
                    writeln!(out, "  {e}").map_err(w)?;
                }
            }
        }
    }
    Ok(if ok { 0 } else { EXIT_INPUT })
}

fn gen_examples(cli: &Cli, exercise: &str, out: &mut dyn Write) -> Result<i32, String> {
    let ex = store::resolve(exercise, cli.exercises.as_deref(), cli.seed).map_err(|e| e.to_string())?;
    let w = |e: std::io::Error| e.to_string();
    if cli.json {
        writeln!(out, "{}", serde_json::to_string(&ex.examples).map_err(|e| e.to_string())?).map_err(w)?;
    } else {
        for e in &ex.examples {
            writeln!(out, "{} {} == {}", ex.entry, e.input.atom(), e.output).map_err(w)?;
        }
    }
    Ok(0)
}

/// Settings, exercises and log for `serve`, with flags applied over the
/// config file.
pub fn prepare_server(cli: &Cli, port: Option<u16>) -> Result<AppState, String> {
    let mut config = Config::load(cli.config.as_deref()).map_err(|e| e.to_string())?;
    if let Some(p) = port {
        config.port = p;
    }
    if let Some(dir) = &cli.exercises {
        config.exercises = Some(dir.clone());
    }
    if let Some(ms) = cli.budget_ms {
        config.budget.time_ms = ms;
    }
    let store = match &config.exercises {
        Some(dir) => ExerciseStore::load_dir(dir, cli.seed).map_err(|e| format!("refusing to start: {e}"))?,
        None => ExerciseStore::bundled(),
    };
    let log = match &config.session_log {
        Some(path) => Some(SessionLog::open(path).map_err(|e| format!("cannot open {}: {e}", path.display()))?),
        None => None,
    };
    Ok(AppState::new(store, config, log))
}

/// Serves until interrupted.
pub async fn serve(state: AppState) -> std::io::Result<()> {
    let addr: SocketAddr = format!("{}:{}", state.config.bind, state.config.port)
        .parse()
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidInput, e))?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
