//! Per-session JSONL event logs in one directory, plus `index.jsonl`.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{SessionError, SessionEvent, SessionSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub id: String,
    pub created_at: u64,
    pub spec: SessionSpec,
}

#[derive(Clone, Debug)]
pub struct SessionStore {
    dir: PathBuf,
}

fn io(e: impl std::fmt::Display) -> SessionError {
    SessionError::Io(e.to_string())
}

fn valid_id(id: &str) -> Result<(), SessionError> {
    if !id.is_empty() && id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
        Ok(())
    } else {
        Err(SessionError::Io(format!("bad session id `{id}`")))
    }
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, SessionError> {
    let f = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io(e)),
    };
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| SessionError::Io(format!("{}:{}: {e}", path.display(), n + 1)))?,
        );
    }
    Ok(out)
}

fn append_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), SessionError> {
    let mut buf = Vec::new();
    for it in items {
        serde_json::to_writer(&mut buf, it).map_err(io)?;
        buf.push(b'\n');
    }
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io)?;
    f.write_all(&buf).map_err(io)?;
    f.sync_data().map_err(io)
}

impl SessionStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, SessionError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(io)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn log_path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.jsonl"))
    }

    /// Appends events; a creation event also adds an index entry.
    pub fn append(&self, id: &str, events: &[SessionEvent]) -> Result<(), SessionError> {
        valid_id(id)?;
        if events.is_empty() {
            return Ok(());
        }
        append_jsonl(&self.log_path(id), events)?;
        let entries: Vec<IndexEntry> = events
            .iter()
            .filter_map(|e| match e {
                SessionEvent::Created { at_ms, id, spec } => Some(IndexEntry {
                    id: id.clone(),
                    created_at: *at_ms,
                    spec: *spec,
                }),
                _ => None,
            })
            .collect();
        if !entries.is_empty() {
            append_jsonl(&self.dir.join("index.jsonl"), &entries)?;
        }
        Ok(())
    }

    pub fn load(&self, id: &str) -> Result<Vec<SessionEvent>, SessionError> {
        valid_id(id)?;
        read_jsonl(&self.log_path(id))
    }

    pub fn index(&self) -> Result<Vec<IndexEntry>, SessionError> {
        read_jsonl(&self.dir.join("index.jsonl"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::human_conditions;
    use crate::harness::FunctionStudent;
    use crate::session::SessionPolicy;
    use crate::teachers::PolicyKind;

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let store = SessionStore::open(dir.path()).unwrap();
        let spec = SessionSpec {
            row: human_conditions()[0],
            student: FunctionStudent::FLearner,
            policy: SessionPolicy::Teacher {
                policy: PolicyKind::Atom,
            },
            seed: 1,
        };
        let evs = vec![
            SessionEvent::Created {
                at_ms: 5,
                id: "a1".into(),
                spec,
            },
            SessionEvent::Finished { at_ms: 9 },
        ];
        store.append("a1", &evs[..1]).unwrap();
        store.append("a1", &evs[1..]).unwrap();
        assert_eq!(store.load("a1").unwrap(), evs);
        assert_eq!(store.index().unwrap().len(), 1);
        assert!(store.load("../x").is_err());
        assert!(store.load("missing").unwrap().is_empty());
    }
}
