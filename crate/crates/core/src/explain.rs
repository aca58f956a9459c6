//! Content-based explanations for the top two recommended items.
//!
//! Four styles: a fixed popularity sentence, a random sample of the two
//! items' features, the top-k profile features of each item (pointwise),
//! and the pairwise variant that keeps shared features with the
//! higher-ranked item only.
//!
//! Bundles export as JSON Lines, one object per line:
//!
//! ```text
//! {"style":{"tag":"pairwise","k":5,"seed":42},"item_i":589,"item_j":64508,
//!  "features_i":[{"column":3,"predicate":"dct:subject","iri":"dbc:Cyberpunk_films",
//!                 "label":"Cyberpunk films","weight":0.7}],
//!  "features_j":[...],"flags":[],"rendered":"We guess ..."}
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{local_label, Catalog, FeatureSpace, ItemId, MaskMatrix};
use crate::profile::{ProfileEntry, RecommendationList, UserProfile};

pub const DEFAULT_K: usize = 5;

pub const POPULARITY_TEXT: &str =
    "We suggest these items since they are very popular among people who like the same movies as you.";

#[derive(Debug, Error, PartialEq)]
pub enum ExplainError {
    #[error("unknown item {0}")]
    UnknownItem(ItemId),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("pairwise explanation needs score_i > score_j (got {score_i} <= {score_j})")]
    ScoreOrder { score_i: f64, score_j: f64 },
    #[error("no title for item {0}")]
    MissingTitle(ItemId),
    #[error("need two recommended items, got {0}")]
    NotEnoughItems(usize),
    #[error("unknown explanation style `{0}` (valid: popularity, non_personalized, pointwise, pairwise)")]
    UnknownStyle(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StyleTag {
    Popularity,
    NonPersonalized,
    Pointwise,
    Pairwise,
}

impl StyleTag {
    pub const ALL: [StyleTag; 4] =
        [StyleTag::Popularity, StyleTag::NonPersonalized, StyleTag::Pointwise, StyleTag::Pairwise];

    pub fn as_str(self) -> &'static str {
        match self {
            StyleTag::Popularity => "popularity",
            StyleTag::NonPersonalized => "non_personalized",
            StyleTag::Pointwise => "pointwise",
            StyleTag::Pairwise => "pairwise",
        }
    }

    /// Pointwise and pairwise read the user profile; the other two do not.
    pub fn is_personalized(self) -> bool {
        matches!(self, StyleTag::Pointwise | StyleTag::Pairwise)
    }
}

impl fmt::Display for StyleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StyleTag {
    type Err = ExplainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "popularity" => Ok(StyleTag::Popularity),
            "non_personalized" | "nonpersonalized" => Ok(StyleTag::NonPersonalized),
            "pointwise" => Ok(StyleTag::Pointwise),
            "pairwise" => Ok(StyleTag::Pairwise),
            _ => Err(ExplainError::UnknownStyle(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationStyle {
    pub tag: StyleTag,
    pub k: usize,
    /// Only the non-personalized sampler reads it.
    pub seed: u64,
}

impl ExplanationStyle {
    pub fn new(tag: StyleTag) -> Self {
        ExplanationStyle { tag, k: DEFAULT_K, seed: 0 }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        ExplanationStyle { seed, ..self }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRef {
    pub column: usize,
    pub predicate: String,
    pub iri: String,
    pub label: String,
    /// Profile weight; absent for the non-personalized sample.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
}

impl FeatureRef {
    fn from_entry(e: &ProfileEntry) -> Self {
        FeatureRef {
            column: e.column,
            predicate: e.predicate.clone(),
            iri: e.iri.clone(),
            label: e.label.clone(),
            weight: Some(e.weight),
        }
    }

    fn from_space(space: &FeatureSpace, column: usize) -> Self {
        let f = space.feature(column);
        FeatureRef {
            column,
            predicate: f.predicate.clone(),
            iri: f.iri.clone(),
            label: f.label.clone(),
            weight: None,
        }
    }

    /// `(subject) Cyberpunk films`
    pub fn line(&self) -> String {
        format!("({}) {}", local_label(&self.predicate), self.label)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationFlag {
    /// Item i has no features (or none survive selection).
    EmptyI,
    /// Item j has no features left to show.
    EmptyJ,
    /// Every feature of item j was already awarded to item i.
    PairwiseExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationBundle {
    pub style: ExplanationStyle,
    pub item_i: ItemId,
    pub item_j: Option<ItemId>,
    pub features_i: Vec<FeatureRef>,
    pub features_j: Vec<FeatureRef>,
    pub flags: Vec<ExplanationFlag>,
    pub rendered: String,
}

/// Feature columns of `item`: the support of its mask row.
pub fn item_features(item: ItemId, catalog: &Catalog, mask: &MaskMatrix) -> Result<Vec<usize>, ExplainError> {
    let row = catalog.row_of(item).ok_or(ExplainError::UnknownItem(item))?;
    if row >= mask.rows() {
        return Err(ExplainError::UnknownItem(item));
    }
    Ok(mask.row_features(row).collect())
}

/// `e1^k(i)`: the `k` highest-weighted profile features that belong to
/// `f_i`, in profile order (weight descending, ties by column).
pub fn pointwise(profile: &UserProfile, f_i: &[usize], k: usize) -> Result<Vec<ProfileEntry>, ExplainError> {
    if k == 0 {
        return Err(ExplainError::InvalidK);
    }
    Ok(top_k(profile, f_i, &BTreeSet::new(), k))
}

fn top_k(profile: &UserProfile, f: &[usize], exclude: &BTreeSet<usize>, k: usize) -> Vec<ProfileEntry> {
    let wanted: BTreeSet<usize> = f.iter().copied().filter(|c| !exclude.contains(c)).collect();
    profile
        .entries
        .iter()
        .filter(|e| wanted.contains(&e.column))
        .take(k)
        .cloned()
        .collect()
}

/// `e2^k(i, j)` for an item `i` ranked above `j`. Features shared by both
/// lists stay with `i`; `j`'s list is refilled from its next-ranked
/// features until it holds `k` or runs out.
pub fn pairwise(
    profile: &UserProfile,
    f_i: &[usize],
    score_i: f64,
    f_j: &[usize],
    score_j: f64,
    k: usize,
) -> Result<(Vec<ProfileEntry>, Vec<ProfileEntry>), ExplainError> {
    if !(score_i > score_j) {
        return Err(ExplainError::ScoreOrder { score_i, score_j });
    }
    pairwise_ranked(profile, f_i, f_j, k)
}

/// Same as [`pairwise`] with the order of `i` and `j` taken from the
/// recommendation list rather than the scores, so exact score ties are
/// resolved by the list's item-id tie-break.
pub fn pairwise_ranked(
    profile: &UserProfile,
    f_i: &[usize],
    f_j: &[usize],
    k: usize,
) -> Result<(Vec<ProfileEntry>, Vec<ProfileEntry>), ExplainError> {
    if k == 0 {
        return Err(ExplainError::InvalidK);
    }
    let list_i = top_k(profile, f_i, &BTreeSet::new(), k);
    let taken: BTreeSet<usize> = list_i.iter().map(|e| e.column).collect();
    let list_j = top_k(profile, f_j, &taken, k);
    Ok((list_i, list_j))
}

/// Uniform sample without replacement of `min(k, |F_i ∪ F_j|)` columns,
/// returned in column order.
pub fn non_personalized(f_i: &[usize], f_j: &[usize], k: usize, seed: u64) -> Result<Vec<usize>, ExplainError> {
    if k == 0 {
        return Err(ExplainError::InvalidK);
    }
    let union: Vec<usize> = f_i.iter().chain(f_j).copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = sample(&mut rng, union.len(), k.min(union.len()))
        .into_iter()
        .map(|idx| union[idx])
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

/// Builds and renders an explanation of the top two items of `list`.
///
/// Items without any feature are passed over when the list holds at least
/// two items that have some; otherwise the first two are explained and the
/// bundle is flagged. Popularity uses the first two as they are.
pub fn explain_top_two(
    style: ExplanationStyle,
    profile: &UserProfile,
    list: &RecommendationList,
    catalog: &Catalog,
    mask: &MaskMatrix,
    space: &FeatureSpace,
) -> Result<ExplanationBundle, ExplainError> {
    if style.k == 0 {
        return Err(ExplainError::InvalidK);
    }
    if list.items.len() < 2 {
        return Err(ExplainError::NotEnoughItems(list.items.len()));
    }
    let mut pair = (list.items[0].item, list.items[1].item);
    if style.tag != StyleTag::Popularity {
        let mut featured = list.items.iter().filter(|s| {
            catalog.row_of(s.item).is_some_and(|row| mask.row_features(row).next().is_some())
        });
        if let (Some(a), Some(b)) = (featured.next(), featured.next()) {
            pair = (a.item, b.item);
        }
    }
    let (item_i, item_j) = (pair.0, Some(pair.1));
    let mut bundle = ExplanationBundle {
        style,
        item_i,
        item_j,
        features_i: Vec::new(),
        features_j: Vec::new(),
        flags: Vec::new(),
        rendered: String::new(),
    };
    if style.tag != StyleTag::Popularity {
        let j = item_j.expect("checked above");
        let f_i = item_features(item_i, catalog, mask)?;
        let f_j = item_features(j, catalog, mask)?;
        match style.tag {
            StyleTag::Popularity => unreachable!(),
            StyleTag::NonPersonalized => {
                let cols = non_personalized(&f_i, &f_j, style.k, style.seed)?;
                bundle.features_i = cols.iter().map(|&c| FeatureRef::from_space(space, c)).collect();
            }
            StyleTag::Pointwise => {
                bundle.features_i = refs(&pointwise(profile, &f_i, style.k)?);
                bundle.features_j = refs(&pointwise(profile, &f_j, style.k)?);
            }
            StyleTag::Pairwise => {
                let (li, lj) = pairwise_ranked(profile, &f_i, &f_j, style.k)?;
                if !f_j.is_empty() && lj.is_empty() {
                    bundle.flags.push(ExplanationFlag::PairwiseExhausted);
                }
                bundle.features_i = refs(&li);
                bundle.features_j = refs(&lj);
            }
        }
        if bundle.features_i.is_empty() {
            bundle.flags.push(ExplanationFlag::EmptyI);
        }
        if style.tag != StyleTag::NonPersonalized && bundle.features_j.is_empty() {
            bundle.flags.push(ExplanationFlag::EmptyJ);
        }
        bundle.flags.sort();
    }
    bundle.rendered = render(&bundle, catalog)?;
    Ok(bundle)
}

fn refs(entries: &[ProfileEntry]) -> Vec<FeatureRef> {
    entries.iter().map(FeatureRef::from_entry).collect()
}

/// Fills the style's template. A pure function of the bundle and titles.
pub fn render(bundle: &ExplanationBundle, catalog: &Catalog) -> Result<String, ExplainError> {
    if bundle.style.tag == StyleTag::Popularity {
        return Ok(POPULARITY_TEXT.to_string());
    }
    let title = |id: ItemId| catalog.title(id).ok_or(ExplainError::MissingTitle(id));
    let ti = title(bundle.item_i)?;
    let tj = title(bundle.item_j.ok_or(ExplainError::NotEnoughItems(1))?)?;
    let mut out = match bundle.style.tag {
        StyleTag::Pairwise => format!("We guess you would like to watch {ti} more than {tj} because you may prefer:\n"),
        _ => format!("We guess you would like to watch {ti} and {tj} since they are about:\n"),
    };
    push_lines(&mut out, &bundle.features_i);
    match bundle.style.tag {
        StyleTag::Pairwise => {
            out.push_str("over:\n");
            push_lines(&mut out, &bundle.features_j);
        }
        StyleTag::Pointwise => {
            out.push_str("and:\n");
            push_lines(&mut out, &bundle.features_j);
        }
        _ => {}
    }
    Ok(out.trim_end().to_string())
}

fn push_lines(out: &mut String, features: &[FeatureRef]) {
    for f in features {
        out.push_str(&f.line());
        out.push('\n');
    }
}

pub fn write_bundles_jsonl<'a>(
    mut w: impl Write,
    bundles: impl IntoIterator<Item = &'a ExplanationBundle>,
) -> std::io::Result<()> {
    for b in bundles {
        serde_json::to_writer(&mut w, b)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::data::{CatalogItem, Feature, UserId};
    use crate::profile::ScoredItem;

    const SUBJECTS: [(&str, f64); 9] = [
        ("1990s_science_fiction_films", 0.95),
        ("Science_fiction_adventure_films", 0.90),
        ("Films_set_in_Egypt", 0.85),
        ("Drone_films", 0.80),
        ("Robot_films", 0.75),
        ("Cyberpunk_films", 0.70),
        ("Films_shot_in_Arizona", 0.65),
        ("Ancient_astronauts_in_fiction", 0.60),
        ("IMAX_films", 0.55),
    ];

    /// Two movies and a profile whose weights reproduce the reference
    /// pointwise and pairwise lists.
    struct Fixture {
        catalog: Catalog,
        space: FeatureSpace,
        mask: MaskMatrix,
        profile: UserProfile,
    }

    fn fixture() -> Fixture {
        let space =
            FeatureSpace::from_features(SUBJECTS.iter().map(|(s, _)| Feature::new("dct:subject", format!("dbc:{s}"))));
        let col = |s: &str| space.column(&format!("dbc:{s}"), "dct:subject").unwrap();
        let t2 = ["1990s_science_fiction_films", "Science_fiction_adventure_films", "Drone_films", "Cyberpunk_films"];
        let tf = [
            "Science_fiction_adventure_films",
            "Films_set_in_Egypt",
            "Robot_films",
            "Films_shot_in_Arizona",
            "Ancient_astronauts_in_fiction",
            "IMAX_films",
        ];
        let entries: Vec<(usize, usize)> =
            t2.iter().map(|s| (0, col(s))).chain(tf.iter().map(|s| (1, col(s)))).collect();
        let mask = MaskMatrix::from_entries(2, space.len(), entries).unwrap();
        let catalog = Catalog::new(vec![
            CatalogItem {
                id: ItemId(589),
                entity: "dbr:Terminator_2:_Judgment_Day".into(),
                title: "Terminator 2: Judgment Day (1991)".into(),
                trailer_url: None,
            },
            CatalogItem {
                id: ItemId(64508),
                entity: "dbr:Transformers:_Revenge_of_the_Fallen".into(),
                title: "Transformers: Revenge of the Fallen (2009)".into(),
                trailer_url: None,
            },
        ])
        .unwrap();
        let profile = profile_from(
            &space,
            &SUBJECTS.iter().map(|(s, w)| (col(s), *w)).collect::<Vec<_>>(),
        );
        Fixture { catalog, space, mask, profile }
    }

    fn profile_from(space: &FeatureSpace, weights: &[(usize, f64)]) -> UserProfile {
        let mut entries: Vec<ProfileEntry> = weights
            .iter()
            .map(|&(column, weight)| {
                let f = space.feature(column);
                ProfileEntry { column, predicate: f.predicate.clone(), iri: f.iri.clone(), label: f.label.clone(), weight }
            })
            .collect();
        entries.sort_by(|a, b| b.weight.partial_cmp(&a.weight).unwrap().then(a.column.cmp(&b.column)));
        UserProfile { user: UserId(1), entries }
    }

    fn labels(entries: &[ProfileEntry]) -> Vec<&str> {
        entries.iter().map(|e| e.label.as_str()).collect()
    }

    fn top_two() -> RecommendationList {
        RecommendationList {
            user: UserId(1),
            items: vec![
                ScoredItem { item: ItemId(589), row: 0, score: 0.9 },
                ScoredItem { item: ItemId(64508), row: 1, score: 0.8 },
            ],
            n: 5,
            short: true,
        }
    }

    #[test]
    fn reference_pointwise_lists() {
        let fx = fixture();
        let f_t2 = item_features(ItemId(589), &fx.catalog, &fx.mask).unwrap();
        let f_tf = item_features(ItemId(64508), &fx.catalog, &fx.mask).unwrap();
        assert_eq!(
            labels(&pointwise(&fx.profile, &f_t2, 5).unwrap()),
            ["1990s science fiction films", "Science fiction adventure films", "Drone films", "Cyberpunk films"]
        );
        assert_eq!(
            labels(&pointwise(&fx.profile, &f_tf, 5).unwrap()),
            [
                "Science fiction adventure films",
                "Films set in Egypt",
                "Robot films",
                "Films shot in Arizona",
                "Ancient astronauts in fiction"
            ]
        );
    }

    #[test]
    fn reference_pairwise_lists() {
        let fx = fixture();
        let f_t2 = item_features(ItemId(589), &fx.catalog, &fx.mask).unwrap();
        let f_tf = item_features(ItemId(64508), &fx.catalog, &fx.mask).unwrap();
        let (li, lj) = pairwise(&fx.profile, &f_t2, 0.9, &f_tf, 0.8, 5).unwrap();
        assert_eq!(
            labels(&li),
            ["1990s science fiction films", "Science fiction adventure films", "Drone films", "Cyberpunk films"]
        );
        assert_eq!(
            labels(&lj),
            ["Films set in Egypt", "Robot films", "Films shot in Arizona", "Ancient astronauts in fiction", "IMAX films"]
        );
        assert_eq!(
            pairwise(&fx.profile, &f_t2, 0.8, &f_tf, 0.8, 5),
            Err(ExplainError::ScoreOrder { score_i: 0.8, score_j: 0.8 })
        );
    }

    #[test]
    fn rendered_pairwise_text() {
        let fx = fixture();
        let style = ExplanationStyle::new(StyleTag::Pairwise);
        let b = explain_top_two(style, &fx.profile, &top_two(), &fx.catalog, &fx.mask, &fx.space).unwrap();
        let expected = "We guess you would like to watch Terminator 2: Judgment Day (1991) more than \
Transformers: Revenge of the Fallen (2009) because you may prefer:
(subject) 1990s science fiction films
(subject) Science fiction adventure films
(subject) Drone films
(subject) Cyberpunk films
over:
(subject) Films set in Egypt
(subject) Robot films
(subject) Films shot in Arizona
(subject) Ancient astronauts in fiction
(subject) IMAX films";
        assert_eq!(b.rendered, expected);
        assert_eq!(render(&b, &fx.catalog).unwrap(), b.rendered);
        assert!(b.flags.is_empty());
    }

    #[test]
    fn rendered_pointwise_and_popularity_text() {
        let fx = fixture();
        let b = explain_top_two(
            ExplanationStyle::new(StyleTag::Pointwise),
            &fx.profile,
            &top_two(),
            &fx.catalog,
            &fx.mask,
            &fx.space,
        )
        .unwrap();
        assert!(b.rendered.starts_with(
            "We guess you would like to watch Terminator 2: Judgment Day (1991) and \
Transformers: Revenge of the Fallen (2009) since they are about:\n(subject) 1990s science fiction films\n"
        ));
        assert!(b.rendered.contains("\nand:\n(subject) Science fiction adventure films\n"));

        let p = explain_top_two(
            ExplanationStyle::new(StyleTag::Popularity),
            &fx.profile,
            &top_two(),
            &fx.catalog,
            &fx.mask,
            &fx.space,
        )
        .unwrap();
        assert_eq!(p.rendered, POPULARITY_TEXT);
        assert!(p.features_i.is_empty() && p.features_j.is_empty());
    }

    #[test]
    fn featureless_items_are_passed_over() {
        let fx = fixture();
        let mut items = fx.catalog.items().to_vec();
        items.insert(0, CatalogItem { id: ItemId(7), entity: "dbr:Bare".into(), title: "Bare (2000)".into(), trailer_url: None });
        let catalog = Catalog::new(items).unwrap();
        let mut entries: Vec<(usize, usize)> = fx.mask.entries().iter().map(|&(i, j)| (i + 1, j)).collect();
        entries.sort_unstable();
        let mask = MaskMatrix::from_entries(3, fx.space.len(), entries).unwrap();
        let mut list = top_two();
        list.items.insert(0, ScoredItem { item: ItemId(7), row: 0, score: 0.95 });
        for (i, s) in list.items.iter_mut().enumerate() {
            s.row = i;
        }
        let b = explain_top_two(ExplanationStyle::new(StyleTag::Pairwise), &fx.profile, &list, &catalog, &mask, &fx.space)
            .unwrap();
        assert_eq!((b.item_i, b.item_j), (ItemId(589), Some(ItemId(64508))));
        let p = explain_top_two(ExplanationStyle::new(StyleTag::Popularity), &fx.profile, &list, &catalog, &mask, &fx.space)
            .unwrap();
        assert_eq!((p.item_i, p.item_j), (ItemId(7), Some(ItemId(589))));
    }

    #[test]
    fn missing_title_is_an_error() {
        let fx = fixture();
        let mut b = explain_top_two(
            ExplanationStyle::new(StyleTag::Pointwise),
            &fx.profile,
            &top_two(),
            &fx.catalog,
            &fx.mask,
            &fx.space,
        )
        .unwrap();
        b.item_j = Some(ItemId(1));
        assert_eq!(render(&b, &fx.catalog), Err(ExplainError::MissingTitle(ItemId(1))));
    }

    #[test]
    fn starring_line_prefix() {
        let f = FeatureRef::from_space(&FeatureSpace::from_features([Feature::new("dbo:starring", "dbr:Will_Smith")]), 0);
        assert_eq!(f.line(), "(starring) Will Smith");
    }

    #[test]
    fn small_pointwise_cases() {
        let space = FeatureSpace::from_features(["A", "B", "C", "D"].map(|s| Feature::new("dct:subject", s)));
        let p = profile_from(&space, &[(0, 0.9), (1, 0.8), (2, 0.7), (3, 0.1)]);
        assert_eq!(labels(&pointwise(&p, &[1, 3], 1).unwrap()), ["B"]);
        assert_eq!(labels(&pointwise(&p, &[3, 1], 10).unwrap()), ["B", "D"]);
        assert!(pointwise(&p, &[], 5).unwrap().is_empty());
        assert_eq!(pointwise(&p, &[1], 0), Err(ExplainError::InvalidK));
        // Disjoint sets: pairwise equals two pointwise calls.
        let (li, lj) = pairwise(&p, &[0, 2], 0.9, &[1, 3], 0.1, 5).unwrap();
        assert_eq!(li, pointwise(&p, &[0, 2], 5).unwrap());
        assert_eq!(lj, pointwise(&p, &[1, 3], 5).unwrap());
        // F_j inside list_i: exhausted.
        let (_, lj) = pairwise(&p, &[0, 1, 2], 0.9, &[1, 2], 0.1, 5).unwrap();
        assert!(lj.is_empty());
    }

    #[test]
    fn non_personalized_saturation_and_determinism() {
        assert_eq!(non_personalized(&[0, 1], &[1, 2], 5, 3).unwrap(), vec![0, 1, 2]);
        let a = non_personalized(&(0..10).collect::<Vec<_>>(), &[20, 21], 5, 7).unwrap();
        let b = non_personalized(&(0..10).collect::<Vec<_>>(), &[20, 21], 5, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(non_personalized(&[], &[], 5, 1).unwrap().is_empty());
    }

    #[test]
    fn non_personalized_inclusion_is_uniform() {
        let f_i: Vec<usize> = (0..6).collect();
        let f_j: Vec<usize> = (4..10).collect();
        let mut counts = [0usize; 10];
        for seed in 0..10_000 {
            for c in non_personalized(&f_i, &f_j, 5, seed).unwrap() {
                counts[c] += 1;
            }
        }
        for (c, n) in counts.iter().enumerate() {
            let freq = *n as f64 / 10_000.0;
            assert!((freq - 0.5).abs() <= 0.02, "feature {c}: {freq}");
        }
    }

    #[test]
    fn bundles_serialize_one_per_line() {
        let fx = fixture();
        let b = explain_top_two(
            ExplanationStyle::new(StyleTag::Pairwise),
            &fx.profile,
            &top_two(),
            &fx.catalog,
            &fx.mask,
            &fx.space,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_bundles_jsonl(&mut buf, [&b, &b]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let back: ExplanationBundle = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(back, b);
        assert!(text.starts_with("{\"style\":{\"tag\":\"pairwise\",\"k\":5,\"seed\":0},\"item_i\":589"));
    }

    fn arb_case() -> impl Strategy<Value = (Vec<f64>, Vec<usize>, Vec<usize>, usize)> {
        (1usize..16).prop_flat_map(|n| {
            (
                proptest::collection::vec(0.0f64..1.0, n),
                proptest::collection::btree_set(0..n, 0..=n).prop_map(|s| s.into_iter().collect()),
                proptest::collection::btree_set(0..n, 0..=n).prop_map(|s| s.into_iter().collect()),
                1usize..8,
            )
        })
    }

    fn space_n(n: usize) -> FeatureSpace {
        FeatureSpace::from_features((0..n).map(|j| Feature::new("dct:subject", format!("dbc:F{j:02}"))))
    }

    proptest! {
        #[test]
        fn pairwise_lists_are_disjoint((w, fi, fj, k) in arb_case()) {
            let space = space_n(w.len());
            let p = profile_from(&space, &w.iter().copied().enumerate().collect::<Vec<_>>());
            let (li, lj) = pairwise_ranked(&p, &fi, &fj, k).unwrap();
            let ci: BTreeSet<usize> = li.iter().map(|e| e.column).collect();
            prop_assert!(lj.iter().all(|e| !ci.contains(&e.column)));
            prop_assert_eq!(li.len(), k.min(fi.len()));
            let avail = fj.iter().filter(|c| !ci.contains(c)).count();
            prop_assert_eq!(lj.len(), k.min(avail));
        }

        #[test]
        fn pointwise_dominates_unselected((w, fi, _fj, k) in arb_case()) {
            let space = space_n(w.len());
            let p = profile_from(&space, &w.iter().copied().enumerate().collect::<Vec<_>>());
            let sel = pointwise(&p, &fi, k).unwrap();
            let chosen: BTreeSet<usize> = sel.iter().map(|e| e.column).collect();
            for &c in fi.iter().filter(|c| !chosen.contains(c)) {
                prop_assert!(sel.iter().all(|e| e.weight >= w[c]));
            }
            prop_assert!(sel.windows(2).all(|p| p[0].weight >= p[1].weight));
        }

        #[test]
        fn monotone_rescaling_keeps_selections((w, fi, fj, k) in arb_case()) {
            let space = space_n(w.len());
            let p = profile_from(&space, &w.iter().copied().enumerate().collect::<Vec<_>>());
            let q = profile_from(
                &space,
                &w.iter().map(|v| 3.0 * v.powi(3) + 0.1).enumerate().collect::<Vec<_>>(),
            );
            let cols = |l: &[ProfileEntry]| l.iter().map(|e| e.column).collect::<Vec<_>>();
            prop_assert_eq!(cols(&pointwise(&p, &fi, k).unwrap()), cols(&pointwise(&q, &fi, k).unwrap()));
            let (a, b) = pairwise_ranked(&p, &fi, &fj, k).unwrap();
            let (c, d) = pairwise_ranked(&q, &fi, &fj, k).unwrap();
            prop_assert_eq!(cols(&a), cols(&c));
            prop_assert_eq!(cols(&b), cols(&d));
        }
    }
}
