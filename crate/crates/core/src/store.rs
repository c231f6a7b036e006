//! Append-only session logs, one JSON line per event under
//! `<data dir>/sessions/<id>.log`.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use thiserror::Error;

use crate::event::{fold, FoldError, SessionEvent};
use crate::game::SessionState;
use crate::ids::SessionId;

const SESSIONS_DIR: &str = "sessions";
const SURVEYS_DIR: &str = "surveys";
const LOG_EXT: &str = "log";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("session {session} expects sequence {expected}, got {found}")]
    SequenceConflict { session: SessionId, expected: u64, found: u64 },
    #[error("session {0} not found")]
    NotFound(SessionId),
    #[error("session id {0:?} cannot be used as a file name")]
    InvalidId(String),
    #[error("{path}:{line}: {message}")]
    Corrupt { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Fold(#[from] FoldError),
    #[error("i/o error on {path}: {source}")]
    IoError { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> StoreError + '_ {
    move |source| StoreError::IoError { path: path.to_owned(), source }
}

/// Directory-backed event store. Tracks the next sequence number of every
/// session it has touched so appends need not reread the log.
#[derive(Debug)]
pub struct SessionStore {
    root: PathBuf,
    next: Mutex<HashMap<SessionId, u64>>,
}

impl SessionStore {
    /// Opens (creating if needed) a store rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        let sessions = root.join(SESSIONS_DIR);
        fs::create_dir_all(&sessions).map_err(io_err(&sessions))?;
        Ok(SessionStore { root, next: Mutex::new(HashMap::new()) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn surveys_dir(&self) -> PathBuf {
        self.root.join(SURVEYS_DIR)
    }

    pub fn log_path(&self, id: &SessionId) -> Result<PathBuf, StoreError> {
        if !id.is_file_safe() {
            return Err(StoreError::InvalidId(id.as_str().to_owned()));
        }
        Ok(self.root.join(SESSIONS_DIR).join(format!("{id}.{LOG_EXT}")))
    }

    pub fn exists(&self, id: &SessionId) -> bool {
        self.log_path(id).map(|p| p.is_file()).unwrap_or(false)
    }

    /// Appends one event. Its sequence must directly follow the last
    /// stored one; the line is synced to disk before returning.
    pub fn append_event(&self, event: &SessionEvent) -> Result<(), StoreError> {
        self.append_events(std::slice::from_ref(event))
    }

    /// Appends a batch of consecutive events with a single sync.
    pub fn append_events(&self, events: &[SessionEvent]) -> Result<(), StoreError> {
        let Some(first) = events.first() else {
            return Ok(());
        };
        let id = &first.session_id;
        let path = self.log_path(id)?;
        let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
        let expected = match next.get(id) {
            Some(n) => *n,
            None => self.count_lines(&path)?,
        };
        let mut buf = String::new();
        for (i, e) in events.iter().enumerate() {
            let want = expected + i as u64;
            if e.sequence != want || e.session_id != *id {
                return Err(StoreError::SequenceConflict {
                    session: e.session_id.clone(),
                    expected: want,
                    found: e.sequence,
                });
            }
            buf.push_str(&e.to_json_line());
            buf.push('\n');
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err(&path))?;
        file.write_all(buf.as_bytes()).map_err(io_err(&path))?;
        file.sync_data().map_err(io_err(&path))?;
        next.insert(id.clone(), expected + events.len() as u64);
        Ok(())
    }

    fn count_lines(&self, path: &Path) -> Result<u64, StoreError> {
        match File::open(path) {
            Ok(f) => {
                let mut n = 0;
                for line in BufReader::new(f).lines() {
                    if !line.map_err(io_err(path))?.trim().is_empty() {
                        n += 1;
                    }
                }
                Ok(n)
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(0),
            Err(e) => Err(StoreError::IoError { path: path.to_owned(), source: e }),
        }
    }

    /// All events of a session in sequence order.
    pub fn load_session_events(&self, id: &SessionId) -> Result<Vec<SessionEvent>, StoreError> {
        let path = self.log_path(id)?;
        let file = match File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Err(StoreError::NotFound(id.clone())),
            Err(e) => return Err(StoreError::IoError { path, source: e }),
        };
        read_log(BufReader::new(file), &path)
    }

    /// Rebuilds a session's state from its log.
    pub fn load_session(&self, id: &SessionId) -> Result<SessionState, StoreError> {
        Ok(fold(&self.load_session_events(id)?)?)
    }

    /// Ids of all stored sessions, sorted.
    pub fn list_sessions(&self) -> Result<Vec<SessionId>, StoreError> {
        let dir = self.root.join(SESSIONS_DIR);
        let mut ids = Vec::new();
        for entry in fs::read_dir(&dir).map_err(io_err(&dir))? {
            let path = entry.map_err(io_err(&dir))?.path();
            if path.extension().and_then(|e| e.to_str()) != Some(LOG_EXT) {
                continue;
            }
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.push(SessionId::from(stem));
            }
        }
        ids.sort_by(|a, b| a.as_str().cmp(b.as_str()));
        Ok(ids)
    }
}

/// Parses a log from any reader. Blank lines are skipped; events must be
/// in gapless sequence order.
pub fn read_log(reader: impl BufRead, path: &Path) -> Result<Vec<SessionEvent>, StoreError> {
    let mut events: Vec<SessionEvent> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let corrupt = |message: String| StoreError::Corrupt { path: path.to_owned(), line: i + 1, message };
        let event = SessionEvent::from_json_line(&line).map_err(|e| corrupt(e.to_string()))?;
        if event.sequence != events.len() as u64 {
            return Err(corrupt(format!("expected sequence {}, found {}", events.len(), event.sequence)));
        }
        events.push(event);
    }
    Ok(events)
}
