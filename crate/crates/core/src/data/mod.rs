//! Ingestion of knowledge-graph triples, ratings and item mappings, and
//! construction of the item-by-feature mask for a chosen graph configuration.

mod catalog;
mod features;
mod iri;
mod ratings;
mod triples;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use catalog::{load_item_mapping, parse_item_mapping, Catalog, CatalogItem, MappingLoad};
pub use features::{
    build_feature_space, Feature, FeatureSpace, KgConfig, KgMode, MaskMatrix,
};
pub use iri::{compact_iri, expand_iri, local_label};
pub use ratings::{load_ratings, parse_ratings, Rating, RatingsLoad, RatingsTable};
pub use triples::{load_triples, parse_triples, LoadedTriples, Triple, TripleFormat};

/// External item identifier (MovieLens `movieId`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub u32);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// External user identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("missing column `{0}` in ratings header")]
    MissingColumn(&'static str),
    #[error("duplicate item id {0} in item mapping")]
    DuplicateItem(ItemId),
    #[error("catalog is empty")]
    EmptyCatalog,
    #[error("empty feature space: no catalog item is linked through the active predicates")]
    EmptyFeatureSpace,
    #[error("malformed mask: {0}")]
    Mask(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl DataError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        DataError::Parse {
            line,
            message: message.into(),
        }
    }
}
