use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{
    build_feature_space, Catalog, FeatureSpace, ItemId, KgConfig, KgMode, MaskMatrix, RatingsTable, Triple,
    UserId,
};
use crate::evalmetrics::{build_report, ArmRecords, MetricsReport};
use crate::explain::{explain_top_two, ExplanationBundle, ExplanationStyle, DEFAULT_K};
use crate::profile::{extract_profile, recommend, RecommendationList, ScoredItem, UserProfile};
use crate::seed::derive_seed;
use crate::semauto::{fit, RatingVector, TrainConfig};

use super::session::{Event, QuestionnaireForm, StarRating, StudySession, EXPLAINED_ITEMS, MIN_SELECTION, TOP_N};
use super::{Arm, ArmPolicy, Clock, SessionId, SessionStore, Step, StudyError, SystemClock};

const SALT_ARM: u64 = 1;
const SALT_CANDIDATES: u64 = 2;
const SALT_TRAIN: u64 = 3;
const SALT_EXPLAIN: u64 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub arms: Vec<Arm>,
    pub policy: ArmPolicy,
    /// Movies listed at the selection step.
    pub candidate_sample: usize,
    pub k: usize,
    pub train: TrainConfig,
    pub seed: u64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            arms: Arm::full_grid(),
            policy: ArmPolicy::Random,
            candidate_sample: 30,
            k: DEFAULT_K,
            train: TrainConfig::default(),
            seed: 42,
        }
    }
}

/// Feature space and mask for one graph configuration.
#[derive(Debug, Clone)]
pub struct ModeSpace {
    pub mode: KgMode,
    pub space: FeatureSpace,
    pub mask: Arc<MaskMatrix>,
}

/// Immutable study data: catalog, one feature space per configuration in
/// use, and the pool the selection step samples from.
#[derive(Debug)]
pub struct StudyEngine {
    catalog: Catalog,
    spaces: BTreeMap<KgMode, ModeSpace>,
    pool: Vec<ItemId>,
    config: StudyConfig,
}

impl StudyEngine {
    /// Builds a feature space for every mode the arms use (plus `both`,
    /// which the simulator reads).
    pub fn new(
        catalog: Catalog,
        ratings: &RatingsTable,
        triples: &[Triple],
        kg: &KgConfig,
        config: StudyConfig,
    ) -> Result<Self, StudyError> {
        let mut spaces = BTreeMap::new();
        let mut modes: Vec<KgMode> = config.arms.iter().map(|a| a.mode).collect();
        modes.push(KgMode::Both);
        for mode in modes {
            if spaces.contains_key(&mode) {
                continue;
            }
            let (space, mask) = build_feature_space(triples, &catalog, &kg.with_mode(mode))?;
            spaces.insert(mode, ModeSpace { mode, space, mask: Arc::new(mask) });
        }
        Self::from_spaces(catalog, &ratings.item_counts(), spaces, config)
    }

    pub fn from_spaces(
        catalog: Catalog,
        item_counts: &BTreeMap<ItemId, usize>,
        spaces: BTreeMap<KgMode, ModeSpace>,
        config: StudyConfig,
    ) -> Result<Self, StudyError> {
        let bad = |m: String| Err(StudyError::Config(m));
        if config.arms.is_empty() {
            return bad("no study arms configured".into());
        }
        if let ArmPolicy::Forced(arm) = config.policy {
            if !config.arms.contains(&arm) {
                return bad(format!("forced arm {arm} is not in the grid"));
            }
        }
        if config.candidate_sample < MIN_SELECTION {
            return bad(format!("candidate sample must list at least {MIN_SELECTION} movies"));
        }
        if catalog.len() < config.candidate_sample + TOP_N {
            return bad(format!(
                "catalog has {} items; the study needs at least {} (candidates + top-{TOP_N})",
                catalog.len(),
                config.candidate_sample + TOP_N
            ));
        }
        if config.k == 0 {
            return bad("k must be at least 1".into());
        }
        config.train.validate()?;
        for arm in &config.arms {
            match spaces.get(&arm.mode) {
                None => return bad(format!("no feature space for mode {}", arm.mode)),
                Some(s) if s.mask.rows() != catalog.len() => {
                    return bad(format!("mask for {} has {} rows, catalog {}", arm.mode, s.mask.rows(), catalog.len()))
                }
                Some(_) => {}
            }
        }
        // Most-rated items first, ties by id; keep the top quartile but
        // never fewer than the listed sample.
        let mut by_count: Vec<(usize, ItemId)> =
            catalog.items().iter().map(|it| (item_counts.get(&it.id).copied().unwrap_or(0), it.id)).collect();
        by_count.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let pool_size = catalog.len().div_ceil(4).max(config.candidate_sample);
        let pool = by_count.into_iter().take(pool_size).map(|(_, id)| id).collect();
        Ok(StudyEngine { catalog, spaces, pool, config })
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn config(&self) -> &StudyConfig {
        &self.config
    }

    pub fn space(&self, mode: KgMode) -> Option<&ModeSpace> {
        self.spaces.get(&mode)
    }

    pub fn candidate_pool(&self) -> &[ItemId] {
        &self.pool
    }

    pub fn session_seed(&self, id: SessionId) -> u64 {
        derive_seed(self.config.seed, id.0)
    }

    pub fn draw_arm(&self, session_seed: u64) -> Arm {
        match self.config.policy {
            ArmPolicy::Forced(arm) => arm,
            ArmPolicy::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(session_seed, SALT_ARM));
                self.config.arms[rng.random_range(0..self.config.arms.len())]
            }
        }
    }

    /// Uniform sample of the candidate pool, in draw order.
    pub fn draw_candidates(&self, session_seed: u64) -> Vec<ItemId> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(session_seed, SALT_CANDIDATES));
        sample(&mut rng, self.pool.len(), self.config.candidate_sample)
            .into_iter()
            .map(|i| self.pool[i])
            .collect()
    }

    fn mode_space(&self, mode: KgMode) -> Result<&ModeSpace, StudyError> {
        self.spaces.get(&mode).ok_or_else(|| StudyError::Config(format!("no feature space for mode {mode}")))
    }

    /// Trains the session's model on its initial ratings and returns the
    /// top-5 list with the profile. Pure: depends only on the session.
    pub fn compute_recommendations(
        &self,
        session: &StudySession,
    ) -> Result<(Vec<ScoredItem>, UserProfile), StudyError> {
        if session.step < Step::Recommend {
            return Err(StudyError::Rejected(format!("session {} has not submitted ratings", session.id)));
        }
        let ms = self.mode_space(session.arm.mode)?;
        let stars = session.initial_ratings.iter().map(|(item, &s)| {
            let row = self.catalog.row_of(*item).expect("selected items come from the catalog");
            (row, f64::from(s))
        });
        let x = RatingVector::from_stars(self.catalog.len(), stars)?;
        let cfg = self.config.train.with_seed(derive_seed(session.seed, SALT_TRAIN));
        let ae = fit(Arc::clone(&ms.mask), cfg, &x)?;
        tracing::debug!(session = %session.id, loss = ae.final_loss(), "trained session model");
        let profile = extract_profile(session.user, &ae, &x, &ms.space)?;
        let list = recommend(session.user, &ae, &x, &self.catalog, TOP_N)?;
        Ok((list.items, profile))
    }

    pub fn explain(&self, session: &StudySession, profile: &UserProfile) -> Result<ExplanationBundle, StudyError> {
        let ms = self.mode_space(session.arm.mode)?;
        let style = ExplanationStyle {
            tag: session.arm.style,
            k: self.config.k,
            seed: derive_seed(session.seed, SALT_EXPLAIN),
        };
        let list = RecommendationList {
            user: session.user,
            items: session.recommendations.clone(),
            n: TOP_N,
            short: false,
        };
        Ok(explain_top_two(style, profile, &list, &self.catalog, &ms.mask, &ms.space)?)
    }
}

/// The study service: engine plus session store plus clock.
pub struct Study {
    engine: Arc<StudyEngine>,
    store: SessionStore,
    clock: Box<dyn Clock>,
    profiles: Mutex<HashMap<SessionId, UserProfile>>,
}

impl Study {
    pub fn new(engine: Arc<StudyEngine>, store: SessionStore) -> Self {
        Self::with_clock(engine, store, Box::new(SystemClock))
    }

    pub fn with_clock(engine: Arc<StudyEngine>, store: SessionStore, clock: Box<dyn Clock>) -> Self {
        Study { engine, store, clock, profiles: Mutex::new(HashMap::new()) }
    }

    pub fn engine(&self) -> &Arc<StudyEngine> {
        &self.engine
    }

    pub fn store(&self) -> &SessionStore {
        &self.store
    }

    pub fn session(&self, id: SessionId) -> Result<StudySession, StudyError> {
        self.store.get(id).ok_or(StudyError::UnknownSession(id))
    }

    /// Step 1: a new participant with an arm and a list of candidates.
    /// `forced` overrides the configured arm policy.
    pub fn create_session(&self, forced: Option<Arm>) -> Result<StudySession, StudyError> {
        if let Some(arm) = forced {
            if !self.engine.config.arms.contains(&arm) {
                return Err(StudyError::Rejected(format!("arm {arm} is not part of this study")));
            }
        }
        self.store.create(|id| {
            let seed = self.engine.session_seed(id);
            Ok(Event::Created {
                user: UserId(u32::try_from(id.0).map_err(|_| StudyError::Config("session ids exhausted".into()))?),
                arm: forced.unwrap_or_else(|| self.engine.draw_arm(seed)),
                seed,
                candidates: self.engine.draw_candidates(seed),
                at: self.clock.now(),
            })
        })
    }

    pub fn submit_selection(&self, id: SessionId, items: Vec<ItemId>) -> Result<StudySession, StudyError> {
        self.store.append(id, Event::Selected { items, at: self.clock.now() })
    }

    /// Step 2. Leaves the session at `recommend`; call [`Study::run_training`]
    /// (typically on a worker) to produce the list.
    pub fn submit_ratings(&self, id: SessionId, ratings: Vec<StarRating>) -> Result<StudySession, StudyError> {
        self.store.append(id, Event::Rated { ratings, at: self.clock.now() })
    }

    /// Step 3: train, rank, store the top-5 list.
    pub fn run_training(&self, id: SessionId) -> Result<StudySession, StudyError> {
        let session = self.session(id)?;
        if session.step != Step::Recommend {
            return Err(StudyError::WrongStep { session: id, step: session.step, event: "recommended" });
        }
        let (items, profile) = self.engine.compute_recommendations(&session)?;
        self.store_recommendations(id, items, profile)
    }

    pub(crate) fn store_recommendations(
        &self,
        id: SessionId,
        items: Vec<ScoredItem>,
        profile: UserProfile,
    ) -> Result<StudySession, StudyError> {
        let s = self.store.append(id, Event::Recommended { items, at: self.clock.now() })?;
        self.profiles.lock().expect("profile cache").insert(id, profile);
        Ok(s)
    }

    pub fn recommendations(&self, id: SessionId) -> Result<Vec<ScoredItem>, StudyError> {
        let s = self.session(id)?;
        match s.step {
            Step::Select | Step::Rate => {
                Err(StudyError::Rejected(format!("session {id} has no recommendations yet (step `{}`)", s.step)))
            }
            Step::Recommend => Err(StudyError::Training(id)),
            _ => Ok(s.recommendations),
        }
    }

    /// Step 4: ratings for the five recommended items; attaches the
    /// explanation of the top two.
    pub fn submit_pre_ratings(&self, id: SessionId, stars: Vec<u8>) -> Result<StudySession, StudyError> {
        let session = self.session(id)?;
        if session.step != Step::PreRate {
            return Err(StudyError::WrongStep { session: id, step: session.step, event: "pre_rated" });
        }
        let cached = self.profiles.lock().expect("profile cache").get(&id).cloned();
        let profile = match cached {
            Some(p) => p,
            // After a restart the cache is empty; training is seeded, so
            // recomputing gives the same profile.
            None => self.engine.compute_recommendations(&session)?.1,
        };
        let explanation = self.engine.explain(&session, &profile)?;
        let s = self.store.append(id, Event::PreRated { stars, explanation, at: self.clock.now() })?;
        self.profiles.lock().expect("profile cache").remove(&id);
        Ok(s)
    }

    pub fn submit_post_explanation(&self, id: SessionId, stars: Vec<u8>) -> Result<StudySession, StudyError> {
        self.store.append(id, Event::PostExplanation { stars, at: self.clock.now() })
    }

    pub fn submit_post_trailer(&self, id: SessionId, stars: Vec<u8>) -> Result<StudySession, StudyError> {
        self.store.append(id, Event::PostTrailer { stars, at: self.clock.now() })
    }

    pub fn submit_questionnaire(&self, id: SessionId, answers: QuestionnaireForm) -> Result<StudySession, StudyError> {
        self.store.append(id, Event::Questionnaire { answers, at: self.clock.now() })
    }

    /// Metrics over finished sessions only, one block per configured arm.
    pub fn report(&self) -> Result<MetricsReport, StudyError> {
        report_from_sessions(&self.engine.config.arms, &self.store.sessions())
    }
}

pub fn report_from_sessions(arms: &[Arm], sessions: &[StudySession]) -> Result<MetricsReport, StudyError> {
    let mut order: Vec<Arm> = arms.to_vec();
    for s in sessions {
        if !order.contains(&s.arm) {
            order.push(s.arm);
        }
    }
    let mut records: Vec<ArmRecords> =
        order.iter().map(|a| ArmRecords { arm: a.label(), ..Default::default() }).collect();
    for s in sessions.iter().filter(|s| s.is_done()) {
        let idx = order.iter().position(|a| *a == s.arm).expect("all arms collected");
        records[idx].triplets.extend(s.triplets().expect("done session"));
        records[idx].answers.push(s.questionnaire.expect("done session"));
    }
    Ok(build_report(&records, EXPLAINED_ITEMS)?)
}
