//! Batch commands. Every output lands under the manifest's output
//! directory and depends only on the inputs and the manifest, so reruns
//! produce identical bytes.

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use semauto_core::data::{
    build_feature_space, load_item_mapping, load_ratings, load_triples, Feature, FeatureSpace, MaskMatrix,
};
use semauto_core::evalmetrics::MetricsReport;
use semauto_core::explain::{explain_top_two, write_bundles_jsonl, ExplanationBundle};
use semauto_core::profile::{extract_profile, recommend};
use semauto_core::seed::derive_seed;
use semauto_core::semauto::{read_model, train_users, write_model};
use semauto_core::study::{
    report_from_sessions, simulate_cohort, LogicalClock, PreferenceModel, SessionStore, Study, StudyEngine,
};
use semauto_core::{
    Catalog, ExplanationStyle, RatingVector, RatingsTable, RecommendationList, StyleTag, Triple, UserAutoencoder,
    UserId, UserProfile,
};

use crate::manifest::RunManifest;

pub const MASK_FILE: &str = "mask.txt";
pub const FEATURES_FILE: &str = "features.tsv";
pub const EVENTS_FILE: &str = "study/events.jsonl";
pub const REPORT_FILE: &str = "report.json";

pub struct Inputs {
    pub catalog: Catalog,
    pub ratings: RatingsTable,
}

pub fn load_catalog_and_ratings(m: &RunManifest) -> Result<Inputs> {
    let mapping = load_item_mapping(m.input("paths.mapping")?).context("loading item mapping")?;
    if mapping.excluded > 0 {
        tracing::warn!(rows = mapping.excluded, "mapping rows without an entity were excluded");
    }
    let ratings = load_ratings(m.input("paths.ratings")?).context("loading ratings")?;
    if ratings.rejected > 0 {
        tracing::warn!(rows = ratings.rejected, "ratings rejected during load");
    }
    Ok(Inputs { catalog: mapping.catalog, ratings: ratings.table })
}

pub fn load_graph(m: &RunManifest) -> Result<Vec<Triple>> {
    let loaded = load_triples(m.input("paths.triples")?, m.paths.triples_format).context("loading triples")?;
    tracing::info!(triples = loaded.len(), literals = loaded.skipped_literals, "graph loaded");
    Ok(loaded.triples)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).and_then(|_| w.flush()).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildSummary {
    pub rows: usize,
    pub cols: usize,
    pub nnz: usize,
}

/// Builds the feature space and mask for the configured graph mode.
pub fn build(m: &RunManifest) -> Result<BuildSummary> {
    m.validate()?;
    let inputs = load_catalog_and_ratings(m)?;
    let triples = load_graph(m)?;
    let (space, mask) = build_feature_space(&triples, &inputs.catalog, &m.kg).context("building feature space")?;
    write_file(&m.output_dir.join(MASK_FILE), |w| mask.write_coordinates(w))?;
    write_file(&m.output_dir.join(FEATURES_FILE), |w| write_features(w, &space))?;
    m.write_provenance()?;
    Ok(BuildSummary { rows: mask.rows(), cols: mask.cols(), nnz: mask.nnz() })
}

fn write_features(mut w: impl Write, space: &FeatureSpace) -> std::io::Result<()> {
    writeln!(w, "column\tpredicate\tfeature\tlabel")?;
    for (col, f) in space.features().iter().enumerate() {
        writeln!(w, "{col}\t{}\t{}\t{}", f.predicate, f.iri, f.label)?;
    }
    Ok(())
}

fn read_features(path: &Path) -> Result<FeatureSpace> {
    let file = File::open(path).with_context(|| format!("opening {}; run `semauto build` first", path.display()))?;
    let mut features = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate().skip(1) {
        let line = line?;
        let cols: Vec<&str> = line.split('\t').collect();
        let [col, predicate, iri, ..] = cols[..] else {
            bail!("{}:{}: expected column, predicate and feature", path.display(), n + 1);
        };
        if col.parse::<usize>().ok() != Some(features.len()) {
            bail!("{}:{}: columns must be numbered 0, 1, 2, ...", path.display(), n + 1);
        }
        features.push(Feature::new(predicate, iri));
    }
    let count = features.len();
    let space = FeatureSpace::from_features(features);
    if space.len() != count {
        bail!("{}: duplicate features", path.display());
    }
    Ok(space)
}

/// Build outputs plus the catalog and ratings they index.
pub struct Artifacts {
    pub catalog: Catalog,
    pub ratings: RatingsTable,
    pub space: FeatureSpace,
    pub mask: Arc<MaskMatrix>,
}

pub fn load_artifacts(m: &RunManifest) -> Result<Artifacts> {
    let Inputs { catalog, ratings } = load_catalog_and_ratings(m)?;
    let mask_path = m.output_dir.join(MASK_FILE);
    let file =
        File::open(&mask_path).with_context(|| format!("opening {}; run `semauto build` first", mask_path.display()))?;
    let mask = MaskMatrix::read_coordinates(BufReader::new(file))
        .with_context(|| format!("reading {}", mask_path.display()))?;
    let space = read_features(&m.output_dir.join(FEATURES_FILE))?;
    if mask.rows() != catalog.len() || mask.cols() != space.len() {
        bail!(
            "build artifacts ({}x{}) do not match the catalog ({} items) and feature index ({} features); rerun `semauto build`",
            mask.rows(),
            mask.cols(),
            catalog.len(),
            space.len()
        );
    }
    Ok(Artifacts { catalog, ratings, space, mask: Arc::new(mask) })
}

/// Which users a command applies to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UserSelection {
    All,
    Some(Vec<UserId>),
}

impl std::str::FromStr for UserSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "all" {
            return Ok(UserSelection::All);
        }
        s.split(',')
            .map(|u| u.trim().parse().map(UserId).map_err(|_| format!("`{u}` is not a user id")))
            .collect::<Result<BTreeSet<_>, _>>()
            .map(|set| UserSelection::Some(set.into_iter().collect()))
    }
}

fn model_path(m: &RunManifest, user: UserId) -> PathBuf {
    m.output_dir.join("models").join(format!("user_{user}.model"))
}

fn profile_path(m: &RunManifest, user: UserId) -> PathBuf {
    m.output_dir.join("profiles").join(format!("user_{user}.tsv"))
}

fn check_known(ratings: &RatingsTable, user: UserId) -> Result<()> {
    if !ratings.contains_user(user) {
        bail!("unknown user {user}");
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainSummary {
    pub trained: Vec<UserId>,
    pub skipped: Vec<UserId>,
}

/// Trains one model per selected user on `jobs` threads and writes the
/// model and profile files.
pub fn train(m: &RunManifest, users: &UserSelection, jobs: usize) -> Result<TrainSummary> {
    let art = load_artifacts(m)?;
    let selected: Vec<UserId> = match users {
        UserSelection::All => art.ratings.users().collect(),
        UserSelection::Some(list) => {
            for &u in list {
                check_known(&art.ratings, u)?;
            }
            list.clone()
        }
    };
    let cfg = m.train_config();
    tracing::info!("training config: {cfg}");
    let mut summary = TrainSummary::default();
    let mut inputs = Vec::with_capacity(selected.len());
    for user in selected {
        let (x, outside) = RatingVector::for_user(&art.catalog, &art.ratings, user);
        if outside > 0 {
            tracing::debug!(%user, outside, "ratings of items outside the catalog ignored");
        }
        if x.rated().is_empty() {
            tracing::warn!(%user, "user has no ratings in the catalog; skipped");
            summary.skipped.push(user);
            continue;
        }
        inputs.push((user, x));
    }
    tracing::info!(users = inputs.len(), jobs, "training");
    let fits = train_users(&art.mask, &cfg, jobs, &inputs)?;
    for ((user, x), fit) in inputs.iter().zip(fits) {
        let ae = fit.model.with_context(|| format!("training user {user}"))?;
        tracing::debug!(%user, final_loss = ae.final_loss(), "trained");
        write_file(&model_path(m, *user), |w| write_model(w, &ae))?;
        let profile = extract_profile(*user, &ae, x, &art.space)?;
        write_file(&profile_path(m, *user), |w| profile.write_tsv(w))?;
        summary.trained.push(*user);
    }
    m.write_provenance()?;
    Ok(summary)
}

/// A trained user ready for ranking and explanation.
pub struct TrainedUser {
    pub model: UserAutoencoder,
    pub input: RatingVector,
    pub profile: UserProfile,
}

pub fn load_trained(m: &RunManifest, art: &Artifacts, user: UserId) -> Result<TrainedUser> {
    check_known(&art.ratings, user)?;
    let path = model_path(m, user);
    let file = File::open(&path)
        .with_context(|| format!("no model for user {user} at {}; run `semauto train` first", path.display()))?;
    let model = read_model(BufReader::new(file), Arc::clone(&art.mask))
        .with_context(|| format!("reading {}", path.display()))?;
    let (input, _) = RatingVector::for_user(&art.catalog, &art.ratings, user);
    let profile = extract_profile(user, &model, &input, &art.space)?;
    Ok(TrainedUser { model, input, profile })
}

pub fn recommend_user(m: &RunManifest, art: &Artifacts, user: UserId, n: usize) -> Result<RecommendationList> {
    let t = load_trained(m, art, user)?;
    let list = recommend(user, &t.model, &t.input, &art.catalog, n)?;
    write_file(&m.output_dir.join("recs").join(format!("user_{user}.tsv")), |w| list.write_tsv(w))?;
    Ok(list)
}

/// Explains the top two recommendations of `user` in each style. Writes
/// the rendered text and the bundles.
pub fn explain_user(
    m: &RunManifest,
    art: &Artifacts,
    user: UserId,
    styles: &[StyleTag],
    k: usize,
) -> Result<(RecommendationList, Vec<ExplanationBundle>)> {
    let t = load_trained(m, art, user)?;
    let list = recommend(user, &t.model, &t.input, &art.catalog, m.n)?;
    let mut bundles = Vec::with_capacity(styles.len());
    for &tag in styles {
        let style = ExplanationStyle { k, ..ExplanationStyle::new(tag) }.with_seed(derive_seed(m.seed, u64::from(user.0)));
        let bundle = explain_top_two(style, &t.profile, &list, &art.catalog, &art.mask, &art.space)
            .with_context(|| format!("explaining for user {user} in style {tag}"))?;
        write_file(&m.output_dir.join("explanations").join(format!("user_{user}.{tag}.txt")), |w| {
            writeln!(w, "{}", bundle.rendered)
        })?;
        bundles.push(bundle);
    }
    write_file(&m.output_dir.join("explanations").join(format!("user_{user}.jsonl")), |w| {
        write_bundles_jsonl(w, &bundles)
    })?;
    Ok((list, bundles))
}

pub fn write_report(m: &RunManifest, report: &MetricsReport) -> Result<PathBuf> {
    let path = m.output_dir.join(REPORT_FILE);
    let text = serde_json::to_string_pretty(report)?;
    write_file(&path, |w| writeln!(w, "{text}"))?;
    Ok(path)
}

pub fn study_engine(m: &RunManifest) -> Result<Arc<StudyEngine>> {
    m.validate()?;
    let Inputs { catalog, ratings } = load_catalog_and_ratings(m)?;
    let triples = load_graph(m)?;
    let engine = StudyEngine::new(catalog, &ratings, &triples, &m.kg, m.study_config()?)?;
    Ok(Arc::new(engine))
}

/// Runs a synthetic cohort into a fresh event log and writes its report.
pub fn simulate(m: &RunManifest, per_arm: usize, model: PreferenceModel, jobs: usize) -> Result<MetricsReport> {
    if per_arm == 0 {
        bail!("--per-arm must be at least 1");
    }
    let engine = study_engine(m)?;
    tracing::info!("training config: {}", engine.config().train);
    let path = m.output_dir.join(EVENTS_FILE);
    match fs::remove_file(&path) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
        Err(e) => return Err(e).with_context(|| format!("removing {}", path.display())),
    }
    let store = SessionStore::open(&path)?;
    let study = Study::with_clock(engine, store, Box::new(LogicalClock::default()));
    simulate_cohort(&study, per_arm, model, m.seed, jobs)?;
    study.store().flush()?;
    let report = study.report()?;
    write_report(m, &report)?;
    m.write_provenance()?;
    Ok(report)
}

/// Rebuilds the report from the event log.
pub fn report(m: &RunManifest) -> Result<MetricsReport> {
    let path = m.output_dir.join(EVENTS_FILE);
    if !path.is_file() {
        return Err(anyhow!("no event log at {}; run `semauto simulate` or `semauto serve` first", path.display()));
    }
    let sessions = SessionStore::replay_file(&path)?;
    let sessions: Vec<_> = sessions.into_values().collect();
    let report = report_from_sessions(&m.arms()?, &sessions)?;
    write_report(m, &report)?;
    Ok(report)
}

/// Short text summary of a report for the terminal.
pub fn format_report(report: &MetricsReport) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
    let mut out = String::new();
    for a in &report.arms {
        out.push_str(&format!(
            "{:<28} n={:<4} persuasiveness={} effectiveness={} transparency={} trust={} satisfaction={} gate={}\n",
            a.arm,
            a.n,
            opt(a.persuasiveness),
            opt(a.effectiveness),
            opt(a.transparency),
            opt(a.trust),
            opt(a.satisfaction),
            if a.sample_size.pass { "pass" } else { "fail" },
        ));
    }
    for c in &report.comparisons {
        out.push_str(&format!("{} {} vs {}: U={} p={:.3e}\n", c.metric, c.arm_a, c.arm_b, c.u, c.p));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn user_selection_parsing() {
        assert_eq!("all".parse::<UserSelection>().unwrap(), UserSelection::All);
        assert_eq!(
            "3, 1,3".parse::<UserSelection>().unwrap(),
            UserSelection::Some(vec![UserId(1), UserId(3)])
        );
        assert!("1,x".parse::<UserSelection>().is_err());
    }

    #[test]
    fn feature_index_round_trips() {
        let space = FeatureSpace::from_features([
            Feature::new("dct:subject", "dbc:Robot_films"),
            Feature::new("dbo:starring", "dbr:Keanu_Reeves"),
        ]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(FEATURES_FILE);
        write_file(&path, |w| write_features(w, &space)).unwrap();
        assert_eq!(read_features(&path).unwrap(), space);
        fs::write(&path, "column\tpredicate\tfeature\tlabel\n1\tdct:subject\tdbc:X\tX\n").unwrap();
        assert!(read_features(&path).is_err());
    }
}
