//! Append-only JSON-lines journal of session events.
//!
//! Every accepted creation and over is written as one line before the
//! reply is sent. Replaying the file through the same session code rebuilds
//! the in-memory state after a restart.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::session::{CreateSession, OverEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum JournalEvent {
    Create {
        session_id: String,
        created_at: DateTime<Utc>,
        request: CreateSession,
    },
    Over {
        session_id: String,
        entry: OverEntry,
    },
}

#[derive(Debug)]
pub struct Journal {
    path: PathBuf,
    file: Mutex<File>,
}

impl Journal {
    pub fn open(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            path,
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn record(&self, ev: &JournalEvent) -> std::io::Result<()> {
        let mut line = serde_json::to_string(ev).expect("journal events serialise");
        line.push('\n');
        let mut f = self.file.lock().expect("journal lock");
        f.write_all(line.as_bytes())?;
        f.flush()
    }

    /// Reads every event; a torn final line from a crash is skipped.
    pub fn read(path: impl AsRef<Path>) -> std::io::Result<Vec<JournalEvent>> {
        let path = path.as_ref();
        if !path.exists() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        let lines: Vec<String> = BufReader::new(File::open(path)?).lines().collect::<Result<_, _>>()?;
        let n = lines.len();
        for (i, line) in lines.into_iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str(&line) {
                Ok(ev) => out.push(ev),
                Err(e) if i + 1 == n => {
                    tracing::warn!(error = %e, "ignoring torn final journal line");
                }
                Err(e) => {
                    return Err(std::io::Error::new(
                        std::io::ErrorKind::InvalidData,
                        format!("journal line {}: {e}", i + 1),
                    ))
                }
            }
        }
        Ok(out)
    }
}
