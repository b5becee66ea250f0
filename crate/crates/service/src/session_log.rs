use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use tutor_core::tutor::{Classification, Diagnostic, Feedback};

/// One feedback request, as written to the session log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionRecord {
    /// Milliseconds since the Unix epoch.
    pub timestamp_ms: u64,
    pub exercise: String,
    pub source: String,
    pub classification: Classification,
    pub evidence: String,
    pub latency_ms: u64,
}

impl SessionRecord {
    pub fn new(exercise: &str, source: &str, fb: &Feedback, latency_ms: u64) -> SessionRecord {
        let timestamp_ms = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_millis().try_into().unwrap_or(u64::MAX));
        SessionRecord {
            timestamp_ms,
            exercise: exercise.to_string(),
            source: source.to_string(),
            classification: fb.classification,
            evidence: evidence_digest(fb),
            latency_ms,
        }
    }
}

/// A one-line summary of the feedback's main evidence.
pub fn evidence_digest(fb: &Feedback) -> String {
    if let Some(d) = &fb.diagnostic {
        return match d {
            Diagnostic::Syntax { message, .. } => format!("syntax error: {message}"),
            Diagnostic::Type { message, .. } => format!("type error: {message}"),
        };
    }
    if let Some(c) = &fb.counterexample {
        return format!("counterexample: {}", c.text);
    }
    if let Some(c) = &fb.conflict {
        if let Some(p) = c.pairs.first() {
            return format!("conflict on ?{}: {} vs {}", c.hole, p.text[0], p.text[1]);
        }
    }
    if let Some(h) = fb.failed_hole {
        return format!("no filling for ?{h}");
    }
    if let Some(i) = &fb.inconclusive {
        return format!("inconclusive on {}: {}", i.input, i.reason);
    }
    if let Some(a) = &fb.advice {
        return format!("advice: {}", a.construct);
    }
    if !fb.hole_specs.is_empty() {
        return format!("{} hole specs", fb.hole_specs.len());
    }
    String::new()
}

/// Append-only JSONL file, one record per line.
#[derive(Debug)]
pub struct SessionLog {
    file: Mutex<File>,
}

impl SessionLog {
    pub fn open(path: &Path) -> std::io::Result<SessionLog> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(SessionLog { file: Mutex::new(file) })
    }

    pub fn append(&self, record: &SessionRecord) -> std::io::Result<()> {
        let mut line = serde_json::to_vec(record).map_err(std::io::Error::other)?;
        line.push(b'\n');
        let mut f = self.file.lock().unwrap_or_else(|e| e.into_inner());
        f.write_all(&line)?;
        f.flush()
    }
}
