//! The seven-step A/B protocol: participants select and rate movies, get a
//! top-5 list, rate it, read an explanation of the top two in their arm's
//! style, re-rate, watch trailers, re-rate again and fill in a short
//! questionnaire.
//!
//! Sessions change only through [`Event`]s, which are validated by
//! [`StudySession::apply`] and appended to a JSON Lines log by
//! [`SessionStore`]. [`Study`] adds the side effects (sampling, training,
//! explanation) on top.

mod engine;
mod session;
mod simulate;
mod store;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicI64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DataError, KgMode};
use crate::evalmetrics::MetricsError;
use crate::explain::{ExplainError, StyleTag};
use crate::semauto::ModelError;

pub use engine::{report_from_sessions, ModeSpace, Study, StudyConfig, StudyEngine};
pub use session::{
    Event, QuestionnaireForm, StarRating, StudySession, Transition, EXPLAINED_ITEMS, MIN_SELECTION, TOP_N,
};
pub use simulate::{simulate_cohort, PreferenceModel, SyntheticUser};
pub use store::{parse_log, replay_log, LogRecord, SessionStore};

#[derive(Debug, Error)]
pub enum StudyError {
    #[error("unknown session {0}")]
    UnknownSession(SessionId),
    #[error("session {session} is at step `{step}` and cannot accept `{event}`")]
    WrongStep { session: SessionId, step: Step, event: &'static str },
    #[error("{0}")]
    Rejected(String),
    #[error("recommendations for session {0} are still being computed")]
    Training(SessionId),
    #[error("invalid study configuration: {0}")]
    Config(String),
    #[error("event log line {line}: {message}")]
    Log { line: usize, message: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

impl StudyError {
    /// Client-side problem (bad step, bad payload) as opposed to a server fault.
    pub fn is_rejection(&self) -> bool {
        matches!(self, StudyError::WrongStep { .. } | StudyError::Rejected(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SessionId(pub u64);

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Select,
    Rate,
    /// Training runs here; the session waits until the list is stored.
    Recommend,
    PreRate,
    ExplainRerate,
    TrailerRerate,
    Questionnaire,
    Done,
}

impl Step {
    pub const ALL: [Step; 8] = [
        Step::Select,
        Step::Rate,
        Step::Recommend,
        Step::PreRate,
        Step::ExplainRerate,
        Step::TrailerRerate,
        Step::Questionnaire,
        Step::Done,
    ];

    pub fn next(self) -> Option<Step> {
        let i = Step::ALL.iter().position(|&s| s == self)?;
        Step::ALL.get(i + 1).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Step::Select => "select",
            Step::Rate => "rate",
            Step::Recommend => "recommend",
            Step::PreRate => "pre_rate",
            Step::ExplainRerate => "explain_rerate",
            Step::TrailerRerate => "trailer_rerate",
            Step::Questionnaire => "questionnaire",
            Step::Done => "done",
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One cell of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Arm {
    pub style: StyleTag,
    pub mode: KgMode,
}

impl Arm {
    pub fn new(style: StyleTag, mode: KgMode) -> Self {
        Arm { style, mode }
    }

    /// Every style crossed with every graph configuration (12 arms).
    pub fn full_grid() -> Vec<Arm> {
        Self::grid(&StyleTag::ALL, &KgMode::ALL)
    }

    pub fn grid(styles: &[StyleTag], modes: &[KgMode]) -> Vec<Arm> {
        styles.iter().flat_map(|&s| modes.iter().map(move |&m| Arm::new(s, m))).collect()
    }

    /// `pairwise/semantic`
    pub fn label(&self) -> String {
        format!("{}/{}", self.style, self.mode)
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Arm {
    type Err = StudyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (style, mode) = s
            .split_once('/')
            .ok_or_else(|| StudyError::Config(format!("arm `{s}` is not `style/mode`")))?;
        let style = style.parse().map_err(|e: ExplainError| StudyError::Config(e.to_string()))?;
        let mode = mode.parse().map_err(|e: DataError| StudyError::Config(e.to_string()))?;
        Ok(Arm::new(style, mode))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "policy", content = "arm")]
pub enum ArmPolicy {
    /// Uniform over the configured grid.
    Random,
    Forced(Arm),
}

/// Timestamps for transitions, in milliseconds.
pub trait Clock: Send + Sync {
    fn now(&self) -> i64;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> i64 {
        SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as i64)
    }
}

/// Counts up by one per reading; makes logs reproducible.
#[derive(Debug, Default)]
pub struct LogicalClock(AtomicI64);

impl Clock for LogicalClock {
    fn now(&self) -> i64 {
        self.0.fetch_add(1, Ordering::SeqCst)
    }
}
