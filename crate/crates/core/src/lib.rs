//! Knowledge-graph masked autoencoders for explainable recommendation.
//!
//! The pipeline: [`data`] builds an item-by-feature mask from graph
//! triples; [`semauto`] trains one masked autoencoder per user; [`profile`]
//! reads the hidden layer back as a labelled user profile and ranks unseen
//! items; [`explain`] turns profiles into pointwise, pairwise and baseline
//! explanations; [`study`] runs the seven-step A/B protocol and
//! [`evalmetrics`] scores it.

pub mod data;
pub mod evalmetrics;
pub mod explain;
pub mod profile;
pub mod seed;
pub mod semauto;
pub mod study;
pub mod synthetic;

pub use data::{
    Catalog, CatalogItem, Feature, FeatureSpace, ItemId, KgConfig, KgMode, MaskMatrix, RatingsTable,
    Triple, TripleFormat, UserId,
};
pub use explain::{ExplanationBundle, ExplanationStyle, StyleTag};
pub use profile::{RecommendationList, UserProfile};
pub use semauto::{RatingVector, TrainConfig, UserAutoencoder};
