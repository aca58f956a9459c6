//! Seeded fixtures shared by the benchmarks.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semauto_core::data::{Feature, FeatureSpace, MaskMatrix, UserId};
use semauto_core::profile::ProfileEntry;
use semauto_core::{RatingVector, UserProfile};

/// `items x features` mask with each cell present with probability `density`.
pub fn mask(seed: u64, items: usize, features: usize, density: f64) -> Arc<MaskMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries: Vec<(usize, usize)> = (0..items)
        .flat_map(|i| (0..features).map(move |j| (i, j)))
        .filter(|_| rng.random_bool(density))
        .collect();
    Arc::new(MaskMatrix::from_entries(items, features, entries).expect("valid entries"))
}

/// A user who rated roughly a fifth of the catalog.
pub fn ratings(seed: u64, items: usize) -> RatingVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stars = Vec::new();
    for i in 0..items {
        if rng.random_bool(0.2) {
            stars.push((i, f64::from(rng.random_range(1..=5u8))));
        }
    }
    RatingVector::from_stars(items, stars).expect("valid stars")
}

/// A profile over `features` columns with random weights, sorted the way
/// extracted profiles are.
pub fn profile(seed: u64, features: usize) -> (FeatureSpace, UserProfile) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let space = FeatureSpace::from_features((0..features).map(|c| Feature::new("dct:subject", format!("dbc:F{c:05}"))));
    let mut entries: Vec<ProfileEntry> = space
        .features()
        .iter()
        .enumerate()
        .map(|(column, f)| ProfileEntry {
            column,
            predicate: f.predicate.clone(),
            iri: f.iri.clone(),
            label: f.label.clone(),
            weight: rng.random_range(0.0..1.0),
        })
        .collect();
    entries.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.column.cmp(&b.column)));
    (space, UserProfile { user: UserId(1), entries })
}

/// `n` uniform draws.
pub fn sample(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(0.0..1.0)).collect()
}
