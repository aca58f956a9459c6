//! User profiles read off the hidden layer, and top-N ranking of unseen
//! items by reconstruction score.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::data::{Catalog, FeatureSpace, ItemId, UserId};
use crate::semauto::{ModelError, RatingVector, UserAutoencoder};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub column: usize,
    pub predicate: String,
    pub iri: String,
    pub label: String,
    pub weight: f64,
}

/// One weight per feature column: the hidden activation produced by the
/// user's own rating vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user: UserId,
    /// Descending by weight, ties by column (the `(predicate, iri)` order).
    pub entries: Vec<ProfileEntry>,
}

impl UserProfile {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Weights indexed by column.
    pub fn weights_by_column(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.entries.len()];
        for e in &self.entries {
            w[e.column] = e.weight;
        }
        w
    }

    /// `rank predicate featureIRI weight`, rank starting at 1.
    pub fn write_tsv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "rank\tpredicate\tfeatureIRI\tweight")?;
        for (rank, e) in self.entries.iter().enumerate() {
            writeln!(w, "{}\t{}\t{}\t{:.17}", rank + 1, e.predicate, e.iri, e.weight)?;
        }
        Ok(())
    }
}

pub fn extract_profile(
    user: UserId,
    ae: &UserAutoencoder,
    x: &RatingVector,
    space: &FeatureSpace,
) -> Result<UserProfile, ModelError> {
    if !ae.is_trained() {
        return Err(ModelError::NotTrained);
    }
    if space.len() != ae.mask().cols() {
        return Err(ModelError::Dimension { expected: ae.mask().cols(), found: space.len() });
    }
    let hidden = ae.forward(x)?.hidden;
    let mut entries: Vec<ProfileEntry> = hidden
        .into_iter()
        .enumerate()
        .map(|(column, weight)| {
            let f = space.feature(column);
            ProfileEntry {
                column,
                predicate: f.predicate.clone(),
                iri: f.iri.clone(),
                label: f.label.clone(),
                weight,
            }
        })
        .collect();
    entries.sort_by(|a, b| desc(a.weight, b.weight).then(a.column.cmp(&b.column)));
    Ok(UserProfile { user, entries })
}

fn desc(a: f64, b: f64) -> Ordering {
    b.partial_cmp(&a).unwrap_or(Ordering::Equal)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub item: ItemId,
    pub row: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationList {
    pub user: UserId,
    /// Descending by score, ties by item id.
    pub items: Vec<ScoredItem>,
    /// Requested length.
    pub n: usize,
    /// Fewer than `n` unrated items were available.
    pub short: bool,
}

impl RecommendationList {
    pub fn item_ids(&self) -> Vec<ItemId> {
        self.items.iter().map(|s| s.item).collect()
    }

    /// `rank itemId score`, rank starting at 1.
    pub fn write_tsv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "rank\titemId\tscore")?;
        for (rank, s) in self.items.iter().enumerate() {
            writeln!(w, "{}\t{}\t{:.17}", rank + 1, s.item, s.score)?;
        }
        Ok(())
    }
}

/// Ranks unrated catalog items by their reconstructed value `o_i`.
pub fn recommend(
    user: UserId,
    ae: &UserAutoencoder,
    x: &RatingVector,
    catalog: &Catalog,
    n: usize,
) -> Result<RecommendationList, ModelError> {
    if n == 0 {
        return Err(ModelError::InvalidConfig("N must be at least 1".into()));
    }
    if !ae.is_trained() {
        return Err(ModelError::NotTrained);
    }
    if catalog.len() != ae.mask().rows() {
        return Err(ModelError::Dimension { expected: ae.mask().rows(), found: catalog.len() });
    }
    let output = ae.forward(x)?.output;
    let scores = output
        .iter()
        .enumerate()
        .filter(|(row, _)| !x.is_rated(*row))
        .map(|(row, &score)| ScoredItem { item: catalog.item(row).id, row, score });
    Ok(rank_scores(user, scores, n))
}

pub(crate) fn rank_scores(
    user: UserId,
    scores: impl IntoIterator<Item = ScoredItem>,
    n: usize,
) -> RecommendationList {
    let mut items: Vec<ScoredItem> = scores.into_iter().collect();
    items.sort_by(|a, b| desc(a.score, b.score).then(a.item.cmp(&b.item)));
    let short = items.len() < n;
    items.truncate(n);
    RecommendationList { user, items, n, short }
}
