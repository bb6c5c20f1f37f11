//! Append-only JSON-lines event log. Replaying it in order rebuilds every
//! session exactly.

use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use polyloop_core::preference::Rating;
use polyloop_core::sequence::VariantRecord;
use polyloop_core::session::{SessionConfig, TerminationReason};
use serde::{Deserialize, Serialize};

pub const LOG_FILE: &str = "events.jsonl";
pub const EVENT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Event {
    Created {
        session_id: String,
        mesh: String,
        config: SessionConfig,
        timestamp_ms: u64,
    },
    IterationComputed {
        session_id: String,
        index: usize,
        variants: Vec<VariantRecord>,
        timestamp_ms: u64,
    },
    Rated {
        session_id: String,
        index: usize,
        ratings: Vec<Rating>,
        timestamp_ms: u64,
    },
    Terminated {
        session_id: String,
        reason: TerminationReason,
        timestamp_ms: u64,
    },
}

impl Event {
    pub fn session_id(&self) -> &str {
        match self {
            Event::Created { session_id, .. }
            | Event::IterationComputed { session_id, .. }
            | Event::Rated { session_id, .. }
            | Event::Terminated { session_id, .. } => session_id,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LogLine {
    schema_version: u32,
    event: Event,
}

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path} line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    /// Opens (creating if needed) the log in `dir` and returns its events. A
    /// torn final line from an interrupted write is discarded.
    pub fn open(dir: &Path) -> Result<(Self, Vec<Event>), LogError> {
        let path = dir.join(LOG_FILE);
        let io_err = |source| LogError::Io {
            path: path.clone(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(io_err)?;
        let text = match std::fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(io_err(e)),
        };
        let mut events = Vec::new();
        let mut good_end = 0;
        let mut start = 0;
        let mut line_no = 0;
        while start < text.len() {
            line_no += 1;
            let (end, complete) = match text[start..].iter().position(|&b| b == b'\n') {
                Some(i) => (start + i, true),
                None => (text.len(), false),
            };
            let line = &text[start..end];
            if !line.iter().all(u8::is_ascii_whitespace) {
                match serde_json::from_slice::<LogLine>(line) {
                    Ok(l) if l.schema_version == EVENT_SCHEMA_VERSION => events.push(l.event),
                    Ok(l) => {
                        return Err(LogError::Corrupt {
                            path,
                            line: line_no,
                            message: format!("unsupported schema version {}", l.schema_version),
                        })
                    }
                    Err(_) if !complete => break,
                    Err(e) => {
                        return Err(LogError::Corrupt {
                            path,
                            line: line_no,
                            message: e.to_string(),
                        })
                    }
                }
            }
            if complete {
                good_end = end + 1;
            }
            start = end + 1;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err)?;
        if good_end < text.len() {
            tracing::warn!(path = %path.display(), "discarding torn final log line");
            file.set_len(good_end as u64).map_err(io_err)?;
        }
        Ok((Self { path, file }, events))
    }

    /// Writes one event and syncs it to disk before returning.
    pub fn append(&mut self, event: &Event) -> Result<(), LogError> {
        let mut line = serde_json::to_vec(&LogLine {
            schema_version: EVENT_SCHEMA_VERSION,
            event: event.clone(),
        })
        .expect("events serialize");
        line.push(b'\n');
        let io_err = |source| LogError::Io {
            path: self.path.clone(),
            source,
        };
        self.file.write_all(&line).map_err(io_err)?;
        self.file.sync_data().map_err(io_err)
    }
}
