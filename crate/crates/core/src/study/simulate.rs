//! Offline stand-in for human participants.
//!
//! Each synthetic user draws a standard-normal affinity for every feature
//! of the combined (`both`) space. An item's appeal is the scaled sum of the
//! affinities of its features and fixes the user's true star rating, which
//! is also what they report after the trailer.

use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ItemId, KgMode};
use crate::evalmetrics::Satisfaction;
use crate::explain::{ExplanationBundle, StyleTag};
use crate::seed::derive_seed;

use super::session::{QuestionnaireForm, StarRating, MIN_SELECTION};
use super::{Study, StudyError, StudyEngine};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceModel {
    /// Explanations pull the guessed rating toward the true one, more so
    /// for personalized styles; shown features the user likes add a nudge.
    #[default]
    Affinity,
    /// Pre-ratings capped at 4 and exactly +1 after a pointwise or pairwise
    /// explanation, unchanged otherwise.
    ProPersonalized,
}

impl FromStr for PreferenceModel {
    type Err = StudyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "affinity" => Ok(PreferenceModel::Affinity),
            "pro_personalized" => Ok(PreferenceModel::ProPersonalized),
            _ => Err(StudyError::Config(format!(
                "unknown preference model `{s}` (expected affinity or pro_personalized)"
            ))),
        }
    }
}

pub struct SyntheticUser {
    rng: ChaCha8Rng,
    affinity: Vec<f64>,
    /// True stars per catalog row.
    truth: Vec<u8>,
}

impl SyntheticUser {
    pub fn new(engine: &StudyEngine, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let both = engine.space(KgMode::Both).expect("engine always builds the combined space");
        let affinity: Vec<f64> = (0..both.space.len()).map(|_| rng.sample(StandardNormal)).collect();
        let truth = (0..engine.catalog().len())
            .map(|row| {
                let cols: Vec<usize> = both.mask.row_features(row).collect();
                let appeal = if cols.is_empty() {
                    0.0
                } else {
                    cols.iter().map(|&c| affinity[c]).sum::<f64>() / (cols.len() as f64).sqrt()
                };
                let noise: f64 = rng.sample::<f64, _>(StandardNormal) * 0.5;
                (3.0 + 1.5 * appeal.tanh() + noise).round().clamp(1.0, 5.0) as u8
            })
            .collect();
        SyntheticUser { rng, affinity, truth }
    }

    pub fn true_stars(&self, engine: &StudyEngine, item: ItemId) -> u8 {
        self.truth[engine.catalog().row_of(item).expect("catalog item")]
    }

    fn select(&mut self, candidates: &[ItemId]) -> Vec<ItemId> {
        let mut pool = candidates.to_vec();
        pool.shuffle(&mut self.rng);
        let extra = self.rng.random_range(0..=5usize);
        pool.truncate((MIN_SELECTION + extra).min(candidates.len()));
        pool
    }

    fn pre_rating(&mut self, model: PreferenceModel, truth: u8) -> u8 {
        match model {
            PreferenceModel::ProPersonalized => truth.min(4),
            PreferenceModel::Affinity => {
                let step: i8 = match self.rng.random_range(0..4u8) {
                    0 => -1,
                    3 => 1,
                    _ => 0,
                };
                (truth as i8 + step).clamp(1, 5) as u8
            }
        }
    }

    fn post_explanation(
        &mut self,
        model: PreferenceModel,
        engine: &StudyEngine,
        bundle: &ExplanationBundle,
        k: usize,
        r: u8,
        truth: u8,
    ) -> u8 {
        let style = bundle.style.tag;
        match model {
            PreferenceModel::ProPersonalized => {
                if style.is_personalized() {
                    r + 1
                } else {
                    r
                }
            }
            PreferenceModel::Affinity => {
                let pull = match style {
                    StyleTag::Popularity => 0.0,
                    StyleTag::NonPersonalized => 0.3,
                    StyleTag::Pointwise => 0.6,
                    StyleTag::Pairwise => 0.7,
                };
                let shown = match (style, k) {
                    (StyleTag::NonPersonalized, _) | (_, 0) => &bundle.features_i,
                    _ => &bundle.features_j,
                };
                let both = &engine.space(KgMode::Both).expect("combined space").space;
                let liked: Vec<f64> = shown
                    .iter()
                    .filter_map(|f| both.column(&f.iri, &f.predicate))
                    .map(|c| self.affinity[c])
                    .collect();
                let nudge = if liked.is_empty() { 0.0 } else { 0.5 * (liked.iter().sum::<f64>() / liked.len() as f64).tanh() };
                let v = f64::from(r) + pull * (f64::from(truth) - f64::from(r)) + nudge;
                v.round().clamp(1.0, 5.0) as u8
            }
        }
    }

    fn questionnaire(&mut self, model: PreferenceModel, style: StyleTag) -> QuestionnaireForm {
        let (p_transparency, p_trust, p_really) = match (model, style.is_personalized()) {
            (PreferenceModel::ProPersonalized, true) => (1.0, 1.0, 1.0),
            (PreferenceModel::ProPersonalized, false) => (0.0, 0.0, 0.0),
            (PreferenceModel::Affinity, _) => match style {
                StyleTag::Popularity => (0.3, 0.3, 0.15),
                StyleTag::NonPersonalized => (0.5, 0.45, 0.25),
                StyleTag::Pointwise => (0.75, 0.65, 0.4),
                StyleTag::Pairwise => (0.8, 0.7, 0.45),
            },
        };
        let transparency = self.rng.random_bool(p_transparency);
        let trust = self.rng.random_bool(p_trust);
        let satisfaction = if self.rng.random_bool(p_really) {
            Satisfaction::ReallyCaptures
        } else if self.rng.random_bool(0.6) {
            Satisfaction::PartiallyCaptures
        } else {
            Satisfaction::DoesNotCapture
        };
        QuestionnaireForm { transparency: Some(transparency), trust: Some(trust), satisfaction: Some(satisfaction) }
    }
}

/// Runs `per_arm` synthetic participants through every configured arm.
///
/// Sessions are created and advanced in a fixed order; only the model
/// training of step 3 runs on `jobs` threads, so the event log is the same
/// for every `jobs` value.
pub fn simulate_cohort(
    study: &Study,
    per_arm: usize,
    model: PreferenceModel,
    seed: u64,
    jobs: usize,
) -> Result<(), StudyError> {
    if per_arm == 0 {
        return Err(StudyError::Config("need at least one participant per arm".into()));
    }
    let engine = study.engine().clone();
    let arms = engine.config().arms.clone();
    let mut participants = Vec::with_capacity(arms.len() * per_arm);
    for arm in &arms {
        for _ in 0..per_arm {
            let s = study.create_session(Some(*arm))?;
            let mut user = SyntheticUser::new(&engine, derive_seed(seed, s.id.0));
            let items = user.select(&s.candidates);
            study.submit_selection(s.id, items.clone())?;
            let ratings = items.iter().map(|&item| StarRating { item, stars: user.true_stars(&engine, item) }).collect();
            let s = study.submit_ratings(s.id, ratings)?;
            participants.push((s, user));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| StudyError::Config(e.to_string()))?;
    let trained: Vec<_> =
        pool.install(|| participants.par_iter().map(|(s, _)| engine.compute_recommendations(s)).collect());

    for ((s, mut user), result) in participants.into_iter().zip(trained) {
        let (items, profile) = result?;
        let s = study.store_recommendations(s.id, items, profile)?;
        let truth: Vec<u8> = s.recommendations.iter().map(|r| user.true_stars(&engine, r.item)).collect();
        let pre: Vec<u8> = truth.iter().map(|&t| user.pre_rating(model, t)).collect();
        let s = study.submit_pre_ratings(s.id, pre.clone())?;
        let bundle = s.explanation.clone().expect("explanation stored with pre-ratings");
        let explained = s.explained_positions().expect("explanation names two listed items");
        let post: Vec<u8> = explained
            .iter()
            .enumerate()
            .map(|(k, &p)| user.post_explanation(model, &engine, &bundle, k, pre[p], truth[p]))
            .collect();
        study.submit_post_explanation(s.id, post)?;
        study.submit_post_trailer(s.id, explained.iter().map(|&p| truth[p]).collect())?;
        let form = user.questionnaire(model, s.arm.style);
        study.submit_questionnaire(s.id, form)?;
    }
    Ok(())
}
