use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{Event, SessionId, StudyError, StudySession};

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub session: SessionId,
    pub event: Event,
}

#[derive(Default)]
struct Inner {
    sessions: BTreeMap<SessionId, StudySession>,
    records: Vec<LogRecord>,
    file: Option<File>,
}

/// Append-only event log with an in-memory snapshot of every session.
///
/// Each event is validated against a copy of its session and only written
/// (one complete line per event) and applied if valid, so the log never
/// holds an event that replay would reject.
#[derive(Default)]
pub struct SessionStore {
    inner: Mutex<Inner>,
}

impl SessionStore {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens or creates a log file, replaying whatever it already holds.
    /// A torn final line (no trailing newline) is cut off.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StudyError> {
        let path = path.as_ref();
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => String::new(),
            Err(e) => return Err(e.into()),
        };
        let complete = match text.rfind('\n') {
            Some(end) => end + 1,
            None => 0,
        };
        if complete < text.len() {
            tracing::warn!(path = %path.display(), bytes = text.len() - complete, "dropping torn final log line");
        }
        let records = parse_log(&text[..complete])?;
        let mut inner = Inner::default();
        for r in records {
            apply_record(&mut inner, r)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        file.set_len(complete as u64)?;
        inner.file = Some(file);
        Ok(SessionStore { inner: Mutex::new(inner) })
    }

    /// Allocates the next session id and stores the `Created` event built
    /// for it.
    pub fn create(
        &self,
        build: impl FnOnce(SessionId) -> Result<Event, StudyError>,
    ) -> Result<StudySession, StudyError> {
        let mut inner = self.inner.lock().expect("store lock");
        let id = SessionId(inner.sessions.keys().next_back().map_or(1, |s| s.0 + 1));
        let event = build(id)?;
        write_and_apply(&mut inner, LogRecord { session: id, event })
    }

    /// Validates and appends one event; returns the updated snapshot.
    pub fn append(&self, session: SessionId, event: Event) -> Result<StudySession, StudyError> {
        let mut inner = self.inner.lock().expect("store lock");
        if !inner.sessions.contains_key(&session) {
            return Err(StudyError::UnknownSession(session));
        }
        write_and_apply(&mut inner, LogRecord { session, event })
    }

    pub fn get(&self, session: SessionId) -> Option<StudySession> {
        self.inner.lock().expect("store lock").sessions.get(&session).cloned()
    }

    pub fn sessions(&self) -> Vec<StudySession> {
        self.inner.lock().expect("store lock").sessions.values().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("store lock").sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn records(&self) -> Vec<LogRecord> {
        self.inner.lock().expect("store lock").records.clone()
    }

    pub fn events(&self, session: SessionId) -> Vec<Event> {
        let inner = self.inner.lock().expect("store lock");
        inner.records.iter().filter(|r| r.session == session).map(|r| r.event.clone()).collect()
    }

    /// Writes the whole log to `w` in append order.
    pub fn write_log(&self, mut w: impl Write) -> Result<(), StudyError> {
        for r in self.records() {
            writeln!(w, "{}", serde_json::to_string(&r).expect("records serialize"))?;
        }
        Ok(())
    }

    pub fn flush(&self) -> Result<(), StudyError> {
        if let Some(f) = self.inner.lock().expect("store lock").file.as_mut() {
            f.sync_all()?;
        }
        Ok(())
    }
}

fn write_and_apply(inner: &mut Inner, record: LogRecord) -> Result<StudySession, StudyError> {
    let next = next_snapshot(inner, &record)?;
    if let Some(f) = inner.file.as_mut() {
        let mut line = serde_json::to_string(&record).expect("records serialize");
        line.push('\n');
        f.write_all(line.as_bytes())?;
    }
    inner.sessions.insert(record.session, next.clone());
    inner.records.push(record);
    Ok(next)
}

fn next_snapshot(inner: &Inner, record: &LogRecord) -> Result<StudySession, StudyError> {
    match inner.sessions.get(&record.session) {
        None => StudySession::create(record.session, &record.event),
        Some(s) => {
            let mut s = s.clone();
            s.apply(&record.event)?;
            Ok(s)
        }
    }
}

fn apply_record(inner: &mut Inner, record: LogRecord) -> Result<(), StudyError> {
    let next = next_snapshot(inner, &record)?;
    inner.sessions.insert(record.session, next);
    inner.records.push(record);
    Ok(())
}

/// Parses a complete log.
pub fn parse_log(text: &str) -> Result<Vec<LogRecord>, StudyError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            serde_json::from_str(l).map_err(|e| StudyError::Log { line: n + 1, message: e.to_string() })
        })
        .collect()
}

/// Rebuilds every session snapshot from a log.
pub fn replay_log(text: &str) -> Result<BTreeMap<SessionId, StudySession>, StudyError> {
    let mut inner = Inner::default();
    for r in parse_log(text)? {
        apply_record(&mut inner, r)?;
    }
    Ok(inner.sessions)
}

impl SessionStore {
    /// Replays a log file without opening it for writing.
    pub fn replay_file(path: impl AsRef<Path>) -> Result<BTreeMap<SessionId, StudySession>, StudyError> {
        replay_log(&std::fs::read_to_string(path)?)
    }
}
