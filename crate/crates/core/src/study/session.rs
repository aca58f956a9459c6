use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::data::{ItemId, UserId};
use crate::evalmetrics::{QuestionnaireAnswer, RatingTriplet, Satisfaction};
use crate::explain::ExplanationBundle;
use crate::profile::ScoredItem;

use super::{Arm, SessionId, Step, StudyError};

pub const MIN_SELECTION: usize = 15;
pub const TOP_N: usize = 5;
pub const EXPLAINED_ITEMS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StarRating {
    pub item: ItemId,
    pub stars: u8,
}

/// Answers as submitted; every field must be present.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireForm {
    pub transparency: Option<bool>,
    pub trust: Option<bool>,
    pub satisfaction: Option<Satisfaction>,
}

/// Everything that can happen to a session. The log stores these verbatim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Created { user: UserId, arm: Arm, seed: u64, candidates: Vec<ItemId>, at: i64 },
    Selected { items: Vec<ItemId>, at: i64 },
    Rated { ratings: Vec<StarRating>, at: i64 },
    Recommended { items: Vec<ScoredItem>, at: i64 },
    PreRated { stars: Vec<u8>, explanation: ExplanationBundle, at: i64 },
    PostExplanation { stars: Vec<u8>, at: i64 },
    PostTrailer { stars: Vec<u8>, at: i64 },
    Questionnaire { answers: QuestionnaireForm, at: i64 },
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Created { .. } => "created",
            Event::Selected { .. } => "selected",
            Event::Rated { .. } => "rated",
            Event::Recommended { .. } => "recommended",
            Event::PreRated { .. } => "pre_rated",
            Event::PostExplanation { .. } => "post_explanation",
            Event::PostTrailer { .. } => "post_trailer",
            Event::Questionnaire { .. } => "questionnaire",
        }
    }

    pub fn at(&self) -> i64 {
        match self {
            Event::Created { at, .. }
            | Event::Selected { at, .. }
            | Event::Rated { at, .. }
            | Event::Recommended { at, .. }
            | Event::PreRated { at, .. }
            | Event::PostExplanation { at, .. }
            | Event::PostTrailer { at, .. }
            | Event::Questionnaire { at, .. } => *at,
        }
    }

    /// The step a session must be at to accept this event.
    pub fn expected_step(&self) -> Option<Step> {
        match self {
            Event::Created { .. } => None,
            Event::Selected { .. } => Some(Step::Select),
            Event::Rated { .. } => Some(Step::Rate),
            Event::Recommended { .. } => Some(Step::Recommend),
            Event::PreRated { .. } => Some(Step::PreRate),
            Event::PostExplanation { .. } => Some(Step::ExplainRerate),
            Event::PostTrailer { .. } => Some(Step::TrailerRerate),
            Event::Questionnaire { .. } => Some(Step::Questionnaire),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub step: Step,
    pub at: i64,
}

/// One participant's pass through the protocol. Built only by replaying
/// events through [`StudySession::apply`], which holds every validation rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySession {
    pub id: SessionId,
    pub user: UserId,
    pub arm: Arm,
    pub seed: u64,
    pub step: Step,
    pub candidates: Vec<ItemId>,
    pub selected: Vec<ItemId>,
    pub initial_ratings: BTreeMap<ItemId, u8>,
    pub recommendations: Vec<ScoredItem>,
    /// Aligned with `recommendations`.
    pub pre_ratings: Vec<u8>,
    pub explanation: Option<ExplanationBundle>,
    /// Aligned with the first two recommendations.
    pub post_explanation: Vec<u8>,
    pub post_trailer: Vec<u8>,
    pub questionnaire: Option<QuestionnaireAnswer>,
    pub transitions: Vec<Transition>,
}

fn reject(msg: impl Into<String>) -> StudyError {
    StudyError::Rejected(msg.into())
}

fn check_stars(stars: &[u8]) -> Result<(), StudyError> {
    match stars.iter().find(|s| !(1..=5).contains(*s)) {
        Some(s) => Err(reject(format!("rating {s} is outside the 1-5 star scale"))),
        None => Ok(()),
    }
}

fn check_count(what: &str, found: usize, expected: usize) -> Result<(), StudyError> {
    if found != expected {
        return Err(reject(format!("{what}: expected {expected} ratings, got {found}")));
    }
    Ok(())
}

impl StudySession {
    /// Starts a session from its `Created` event.
    pub fn create(id: SessionId, event: &Event) -> Result<Self, StudyError> {
        let Event::Created { user, arm, seed, candidates, at } = event else {
            return Err(reject(format!("session {id} must start with `created`, got `{}`", event.kind())));
        };
        if candidates.len() < MIN_SELECTION {
            return Err(reject(format!(
                "candidate list has {} items, at least {MIN_SELECTION} required",
                candidates.len()
            )));
        }
        Ok(StudySession {
            id,
            user: *user,
            arm: *arm,
            seed: *seed,
            step: Step::Select,
            candidates: candidates.clone(),
            selected: Vec::new(),
            initial_ratings: BTreeMap::new(),
            recommendations: Vec::new(),
            pre_ratings: Vec::new(),
            explanation: None,
            post_explanation: Vec::new(),
            post_trailer: Vec::new(),
            questionnaire: None,
            transitions: vec![Transition { step: Step::Select, at: *at }],
        })
    }

    /// Applies one event. On error the session is left unchanged.
    pub fn apply(&mut self, event: &Event) -> Result<(), StudyError> {
        let Some(expected) = event.expected_step() else {
            return Err(reject(format!("session {} already exists", self.id)));
        };
        if self.step != expected {
            return Err(StudyError::WrongStep { session: self.id, step: self.step, event: event.kind() });
        }
        match event {
            Event::Created { .. } => unreachable!(),
            Event::Selected { items, .. } => {
                let distinct: BTreeSet<ItemId> = items.iter().copied().collect();
                if distinct.len() != items.len() {
                    return Err(reject("selection contains duplicate items"));
                }
                if items.len() < MIN_SELECTION {
                    return Err(reject(format!(
                        "select at least {MIN_SELECTION} movies (got {})",
                        items.len()
                    )));
                }
                if let Some(bad) = items.iter().find(|i| !self.candidates.contains(i)) {
                    return Err(reject(format!("item {bad} was not offered in this session")));
                }
                self.selected = items.clone();
            }
            Event::Rated { ratings, .. } => {
                let stars: Vec<u8> = ratings.iter().map(|r| r.stars).collect();
                check_stars(&stars)?;
                let rated: BTreeMap<ItemId, u8> = ratings.iter().map(|r| (r.item, r.stars)).collect();
                let selected: BTreeSet<ItemId> = self.selected.iter().copied().collect();
                if rated.len() != ratings.len() || rated.keys().copied().collect::<BTreeSet<_>>() != selected {
                    return Err(reject("rate every selected movie exactly once"));
                }
                self.initial_ratings = rated;
            }
            Event::Recommended { items, .. } => {
                if items.len() != TOP_N {
                    return Err(reject(format!("recommendation list must hold {TOP_N} items")));
                }
                if let Some(bad) = items.iter().find(|s| self.initial_ratings.contains_key(&s.item)) {
                    return Err(reject(format!("item {} is already rated", bad.item)));
                }
                self.recommendations = items.clone();
            }
            Event::PreRated { stars, explanation, .. } => {
                check_count("pre-ratings", stars.len(), self.recommendations.len())?;
                check_stars(stars)?;
                let position = |item| self.recommendations.iter().position(|r| r.item == item);
                let explained = explanation.item_j.and_then(position).zip(position(explanation.item_i));
                if !matches!(explained, Some((j, i)) if i != j) || explanation.style.tag != self.arm.style {
                    return Err(reject("explanation does not match this session"));
                }
                self.pre_ratings = stars.clone();
                self.explanation = Some(explanation.clone());
            }
            Event::PostExplanation { stars, .. } => {
                check_count("post-explanation ratings", stars.len(), EXPLAINED_ITEMS)?;
                check_stars(stars)?;
                self.post_explanation = stars.clone();
            }
            Event::PostTrailer { stars, .. } => {
                check_count("post-trailer ratings", stars.len(), EXPLAINED_ITEMS)?;
                check_stars(stars)?;
                self.post_trailer = stars.clone();
            }
            Event::Questionnaire { answers, .. } => {
                let (Some(transparency), Some(trust), Some(satisfaction)) =
                    (answers.transparency, answers.trust, answers.satisfaction)
                else {
                    return Err(reject("answer all three questionnaire items"));
                };
                self.questionnaire = Some(QuestionnaireAnswer { user: self.user, transparency, trust, satisfaction });
            }
        }
        self.step = self.step.next().expect("non-terminal step");
        self.transitions.push(Transition { step: self.step, at: event.at() });
        Ok(())
    }

    /// Rebuilds a session from its full event history.
    pub fn replay(id: SessionId, events: &[Event]) -> Result<Self, StudyError> {
        let (first, rest) = events.split_first().ok_or_else(|| reject("empty event history"))?;
        let mut s = Self::create(id, first)?;
        for e in rest {
            s.apply(e)?;
        }
        Ok(s)
    }

    pub fn is_done(&self) -> bool {
        self.step == Step::Done
    }

    /// Positions in the recommendation list of the two explained items, in
    /// the order they are re-rated.
    pub fn explained_positions(&self) -> Option<[usize; EXPLAINED_ITEMS]> {
        let bundle = self.explanation.as_ref()?;
        let position = |item| self.recommendations.iter().position(|r| r.item == item);
        Some([position(bundle.item_i)?, position(bundle.item_j?)?])
    }

    /// `(r, r_e, r_t)` for the two explained items of a finished session.
    pub fn triplets(&self) -> Option<Vec<RatingTriplet>> {
        if !self.is_done() {
            return None;
        }
        let positions = self.explained_positions()?;
        Some(
            positions
                .iter()
                .enumerate()
                .map(|(k, &p)| RatingTriplet {
                    user: self.user,
                    item: self.recommendations[p].item,
                    r: f64::from(self.pre_ratings[p]),
                    r_e: Some(f64::from(self.post_explanation[k])),
                    r_t: Some(f64::from(self.post_trailer[k])),
                })
                .collect(),
        )
    }
}
