//! Newline-delimited JSON container for PI sequences.
//!
//! The first line is a header object carrying the schema name, version, a
//! SHA-256 over the sequence lines and free-form build information. Every
//! following line is one [`PiSequence`].

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{FilterSummary, PiSequence};

pub const CORPUS_SCHEMA: &str = "chasepi.corpus";
pub const CORPUS_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("corpus line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("unsupported corpus schema {schema} v{version}")]
    Version { schema: String, version: u32 },
    #[error("content hash mismatch: header {expected}, computed {actual}")]
    HashMismatch { expected: String, actual: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    schema: String,
    version: u32,
    n_sequences: usize,
    content_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    filter: Option<FilterSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    resource_table: Option<String>,
}

/// A collection of PI sequences plus the provenance of its build.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub sequences: Vec<PiSequence>,
    pub filter: Option<FilterSummary>,
    pub resource_table: Option<String>,
}

impl Corpus {
    pub fn new(sequences: Vec<PiSequence>) -> Self {
        Self {
            sequences,
            ..Default::default()
        }
    }

    fn body_lines(&self) -> Vec<String> {
        self.sequences
            .iter()
            .map(|s| serde_json::to_string(s).expect("sequence serialises"))
            .collect()
    }

    fn hash_lines(lines: &[String]) -> String {
        let mut h = Sha256::new();
        for l in lines {
            h.update(l.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    /// Hex SHA-256 over the serialised sequence lines.
    pub fn content_hash(&self) -> String {
        Self::hash_lines(&self.body_lines())
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<(), CorpusError> {
        let lines = self.body_lines();
        let header = Header {
            schema: CORPUS_SCHEMA.into(),
            version: CORPUS_VERSION,
            n_sequences: lines.len(),
            content_hash: Self::hash_lines(&lines),
            filter: self.filter.clone(),
            resource_table: self.resource_table.clone(),
        };
        writeln!(w, "{}", serde_json::to_string(&header).expect("header serialises"))?;
        for l in &lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    }

    pub fn read_from(r: impl Read) -> Result<Self, CorpusError> {
        let mut lines = BufReader::new(r).lines();
        let first = lines.next().ok_or(CorpusError::Format {
            line: 1,
            msg: "empty file".into(),
        })??;
        let header: Header = serde_json::from_str(&first).map_err(|e| CorpusError::Format {
            line: 1,
            msg: e.to_string(),
        })?;
        if header.schema != CORPUS_SCHEMA || header.version != CORPUS_VERSION {
            return Err(CorpusError::Version {
                schema: header.schema,
                version: header.version,
            });
        }
        let mut body = Vec::new();
        let mut sequences = Vec::new();
        for (i, l) in lines.enumerate() {
            let l = l?;
            if l.trim().is_empty() {
                continue;
            }
            let s: PiSequence = serde_json::from_str(&l).map_err(|e| CorpusError::Format {
                line: i + 2,
                msg: e.to_string(),
            })?;
            sequences.push(s);
            body.push(l);
        }
        let actual = Self::hash_lines(&body);
        if actual != header.content_hash {
            return Err(CorpusError::HashMismatch {
                expected: header.content_hash,
                actual,
            });
        }
        Ok(Self {
            sequences,
            filter: header.filter,
            resource_table: header.resource_table,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CorpusError> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        Self::read_from(std::fs::File::open(path)?)
    }
}
