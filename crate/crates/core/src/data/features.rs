use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::iri::{compact_iri, local_label};
use super::triples::Triple;
use super::{Catalog, DataError};

/// Which kind of graph information becomes hidden units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KgMode {
    /// Categorical data only (`dct:subject`).
    Semantic,
    /// Factual properties only.
    Factual,
    Both,
}

impl KgMode {
    pub const ALL: [KgMode; 3] = [KgMode::Semantic, KgMode::Factual, KgMode::Both];

    pub fn as_str(self) -> &'static str {
        match self {
            KgMode::Semantic => "semantic",
            KgMode::Factual => "factual",
            KgMode::Both => "both",
        }
    }
}

impl fmt::Display for KgMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KgMode {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "semantic" => Ok(KgMode::Semantic),
            "factual" => Ok(KgMode::Factual),
            "both" => Ok(KgMode::Both),
            other => Err(DataError::Config(format!(
                "unknown kg mode `{other}` (expected semantic, factual or both)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KgConfig {
    pub mode: KgMode,
    #[serde(default = "KgConfig::default_categorical")]
    pub categorical_predicates: BTreeSet<String>,
    #[serde(default = "KgConfig::default_factual")]
    pub factual_predicates: BTreeSet<String>,
}

impl Default for KgConfig {
    fn default() -> Self {
        KgConfig::new(KgMode::Both)
    }
}

impl KgConfig {
    pub fn new(mode: KgMode) -> Self {
        KgConfig {
            mode,
            categorical_predicates: Self::default_categorical(),
            factual_predicates: Self::default_factual(),
        }
    }

    fn default_categorical() -> BTreeSet<String> {
        BTreeSet::from(["dct:subject".to_string()])
    }

    fn default_factual() -> BTreeSet<String> {
        ["dbo:starring", "dbo:director", "dbo:writer"]
            .into_iter()
            .map(String::from)
            .collect()
    }

    pub fn with_mode(&self, mode: KgMode) -> Self {
        KgConfig {
            mode,
            ..self.clone()
        }
    }

    /// Predicates whose objects become features under the current mode.
    pub fn active_predicates(&self) -> BTreeSet<String> {
        let pick = |set: &BTreeSet<String>| set.iter().map(|p| compact_iri(p)).collect::<BTreeSet<_>>();
        match self.mode {
            KgMode::Semantic => pick(&self.categorical_predicates),
            KgMode::Factual => pick(&self.factual_predicates),
            KgMode::Both => {
                let mut all = pick(&self.categorical_predicates);
                all.extend(pick(&self.factual_predicates));
                all
            }
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let needs_cat = matches!(self.mode, KgMode::Semantic | KgMode::Both);
        let needs_fact = matches!(self.mode, KgMode::Factual | KgMode::Both);
        if needs_cat && self.categorical_predicates.is_empty() {
            return Err(DataError::Config(format!(
                "mode {} needs at least one categorical predicate",
                self.mode
            )));
        }
        if needs_fact && self.factual_predicates.is_empty() {
            return Err(DataError::Config(format!(
                "mode {} needs at least one factual predicate",
                self.mode
            )));
        }
        Ok(())
    }
}

/// One hidden unit: a graph entity reached through a specific predicate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Feature {
    pub predicate: String,
    pub iri: String,
    pub label: String,
}

impl Feature {
    pub fn new(predicate: impl Into<String>, iri: impl Into<String>) -> Self {
        let iri = iri.into();
        Feature {
            predicate: predicate.into(),
            label: local_label(&iri),
            iri,
        }
    }

    /// Short predicate name used as the line prefix in rendered text.
    pub fn predicate_label(&self) -> String {
        local_label(&self.predicate)
    }
}

/// Feature columns ordered by `(predicate, iri)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureSpace {
    features: Vec<Feature>,
    index: HashMap<(String, String), usize>,
}

impl FeatureSpace {
    /// Sorts and deduplicates the given features into column order.
    pub fn from_features(features: impl IntoIterator<Item = Feature>) -> Self {
        let mut features: Vec<Feature> = features.into_iter().collect();
        features.sort_by(|a, b| (&a.predicate, &a.iri).cmp(&(&b.predicate, &b.iri)));
        features.dedup_by(|a, b| a.predicate == b.predicate && a.iri == b.iri);
        let index = features
            .iter()
            .enumerate()
            .map(|(col, f)| ((f.iri.clone(), f.predicate.clone()), col))
            .collect();
        FeatureSpace { features, index }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    pub fn feature(&self, col: usize) -> &Feature {
        &self.features[col]
    }

    pub fn column(&self, iri: &str, predicate: &str) -> Option<usize> {
        self.index.get(&(iri.to_string(), predicate.to_string())).copied()
    }

    /// TSV `column<TAB>predicate<TAB>iri<TAB>label`.
    pub fn write_tsv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "column\tpredicate\tiri\tlabel")?;
        for (col, f) in self.features.iter().enumerate() {
            writeln!(w, "{col}\t{}\t{}\t{}", f.predicate, f.iri, f.label)?;
        }
        Ok(())
    }

    pub fn read_tsv(r: impl BufRead) -> Result<Self, DataError> {
        let mut features = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line.map_err(|e| DataError::parse(idx + 1, e.to_string()))?;
            if idx == 0 && line.starts_with("column\t") {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() < 4 {
                return Err(DataError::parse(idx + 1, "expected 4 columns"));
            }
            let col: usize = cols[0]
                .parse()
                .map_err(|e| DataError::parse(idx + 1, format!("column: {e}")))?;
            if col != features.len() {
                return Err(DataError::parse(idx + 1, "columns must be contiguous from 0"));
            }
            features.push(Feature {
                predicate: cols[1].to_string(),
                iri: cols[2].to_string(),
                label: cols[3].to_string(),
            });
        }
        let space = FeatureSpace::from_features(features.clone());
        if space.features != features {
            return Err(DataError::Config("feature file is not in (predicate, iri) order".into()));
        }
        Ok(space)
    }
}

/// Binary item-by-feature adjacency. Only the ones are stored, sorted
/// row-major; entry `e` is shared by `W1[i][j]` and `W2[j][i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize)>,
    row_offsets: Vec<usize>,
}

impl MaskMatrix {
    pub fn from_entries(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, DataError> {
        let mut entries: Vec<(usize, usize)> = entries.into_iter().collect();
        if let Some(&(i, j)) = entries.iter().find(|&&(i, j)| i >= rows || j >= cols) {
            return Err(DataError::Mask(format!(
                "entry ({i}, {j}) outside {rows}x{cols}"
            )));
        }
        entries.sort_unstable();
        entries.dedup();
        let mut row_offsets = vec![0; rows + 1];
        for &(i, _) in &entries {
            row_offsets[i + 1] += 1;
        }
        for i in 0..rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(MaskMatrix {
            rows,
            cols,
            entries,
            row_offsets,
        })
    }

    /// Builds a mask from a dense 0/1 matrix.
    pub fn from_dense(dense: &[Vec<u8>]) -> Result<Self, DataError> {
        let rows = dense.len();
        let cols = dense.first().map_or(0, Vec::len);
        if dense.iter().any(|r| r.len() != cols) {
            return Err(DataError::Mask("ragged dense mask".into()));
        }
        let entries = dense.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &v)| v != 0)
                .map(move |(j, _)| (i, j))
        });
        Self::from_entries(rows, cols, entries)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize)] {
        &self.entries
    }

    /// Entry range of row `i` within [`entries`](Self::entries).
    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.row_offsets[i]..self.row_offsets[i + 1]
    }

    pub fn row_features(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.entries[self.row_range(i)].iter().map(|&(_, j)| j)
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.entry_index(i, j).is_some()
    }

    /// Position of `(i, j)` within [`entries`](Self::entries).
    pub fn entry_index(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.rows {
            return None;
        }
        let range = self.row_range(i);
        let start = range.start;
        self.entries[range].binary_search(&(i, j)).ok().map(|k| start + k)
    }

    /// Rows with no feature at all.
    pub fn empty_rows(&self) -> Vec<usize> {
        (0..self.rows).filter(|&i| self.row_range(i).is_empty()).collect()
    }

    pub fn empty_cols(&self) -> Vec<usize> {
        let mut seen = vec![false; self.cols];
        for &(_, j) in &self.entries {
            seen[j] = true;
        }
        (0..self.cols).filter(|&j| !seen[j]).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<u8>> {
        let mut dense = vec![vec![0u8; self.cols]; self.rows];
        for &(i, j) in &self.entries {
            dense[i][j] = 1;
        }
        dense
    }

    /// Coordinate text format: `rows cols nnz` then one `i j` per line.
    pub fn write_coordinates(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.rows, self.cols, self.nnz())?;
        for &(i, j) in &self.entries {
            writeln!(w, "{i} {j}")?;
        }
        Ok(())
    }

    pub fn read_coordinates(r: impl BufRead) -> Result<Self, DataError> {
        let mut lines = r.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| DataError::Mask("missing header".into()))?;
        let header = header.map_err(|e| DataError::Mask(e.to_string()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| DataError::parse(1, format!("header: {e}")))?;
        let [rows, cols, nnz] = dims[..] else {
            return Err(DataError::parse(1, "header must be `rows cols nnz`"));
        };
        let mut entries = Vec::with_capacity(nnz);
        for (idx, line) in lines {
            let line = line.map_err(|e| DataError::Mask(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace().map(str::parse::<usize>);
            match (parts.next(), parts.next(), parts.next()) {
                (Some(Ok(i)), Some(Ok(j)), None) => entries.push((i, j)),
                _ => return Err(DataError::parse(idx + 1, "expected `i j`")),
            }
        }
        if entries.len() != nnz {
            return Err(DataError::Mask(format!(
                "header declares {nnz} entries, found {}",
                entries.len()
            )));
        }
        Self::from_entries(rows, cols, entries)
    }
}

/// Builds the feature space and mask for `config`: column `j` exists iff some
/// catalog item links to it, and `M[i][j] = 1` iff item `i` links to feature
/// `j` through an active predicate.
pub fn build_feature_space(
    triples: &[Triple],
    catalog: &Catalog,
    config: &KgConfig,
) -> Result<(FeatureSpace, MaskMatrix), DataError> {
    if catalog.is_empty() {
        return Err(DataError::EmptyCatalog);
    }
    config.validate()?;
    let active = config.active_predicates();

    let mut rows_by_entity: HashMap<&str, Vec<usize>> = HashMap::new();
    for (row, item) in catalog.items().iter().enumerate() {
        rows_by_entity.entry(item.entity.as_str()).or_default().push(row);
    }

    let mut links: BTreeMap<(&str, &str), Vec<usize>> = BTreeMap::new();
    for t in triples {
        if !active.contains(&t.predicate) {
            continue;
        }
        if let Some(rows) = rows_by_entity.get(t.subject.as_str()) {
            links
                .entry((t.predicate.as_str(), t.object.as_str()))
                .or_default()
                .extend(rows.iter().copied());
        }
    }
    if links.is_empty() {
        return Err(DataError::EmptyFeatureSpace);
    }

    // BTreeMap iteration is already (predicate, iri) order.
    let space = FeatureSpace::from_features(links.keys().map(|(p, o)| Feature::new(*p, *o)));
    let entries = links
        .values()
        .enumerate()
        .flat_map(|(col, rows)| rows.iter().map(move |&row| (row, col)));
    let mask = MaskMatrix::from_entries(catalog.len(), space.len(), entries)?;

    let featureless = mask.empty_rows();
    if !featureless.is_empty() {
        tracing::info!(
            mode = %config.mode,
            count = featureless.len(),
            "catalog items without features under this configuration"
        );
    }
    Ok((space, mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{CatalogItem, ItemId};

    fn catalog(n: u32) -> Catalog {
        Catalog::new(
            (1..=n)
                .map(|i| CatalogItem {
                    id: ItemId(i),
                    entity: format!("dbr:i{i}"),
                    title: format!("Item {i}"),
                    trailer_url: None,
                })
                .collect(),
        )
        .unwrap()
    }

    fn toy_triples() -> Vec<Triple> {
        vec![
            Triple::new("dbr:i1", "dct:subject", "dbc:c1"),
            Triple::new("dbr:i1", "dbo:starring", "dbr:p1"),
            Triple::new("dbr:i2", "dct:subject", "dbc:c1"),
        ]
    }

    #[test]
    fn semantic_mode() {
        let (space, mask) =
            build_feature_space(&toy_triples(), &catalog(2), &KgConfig::new(KgMode::Semantic)).unwrap();
        assert_eq!(space.len(), 1);
        assert_eq!(space.feature(0).iri, "dbc:c1");
        assert_eq!(mask.to_dense(), vec![vec![1], vec![1]]);
    }

    #[test]
    fn both_mode() {
        let (space, mask) =
            build_feature_space(&toy_triples(), &catalog(2), &KgConfig::new(KgMode::Both)).unwrap();
        let keys: Vec<_> = space.features().iter().map(|f| (f.predicate.as_str(), f.iri.as_str())).collect();
        assert_eq!(keys, vec![("dbo:starring", "dbr:p1"), ("dct:subject", "dbc:c1")]);
        assert_eq!(mask.nnz(), 3);
        assert_eq!(mask.to_dense(), vec![vec![1, 1], vec![0, 1]]);
    }

    #[test]
    fn factual_mode_reports_featureless_row() {
        let (space, mask) =
            build_feature_space(&toy_triples(), &catalog(2), &KgConfig::new(KgMode::Factual)).unwrap();
        assert_eq!(space.feature(0).iri, "dbr:p1");
        assert_eq!(mask.to_dense(), vec![vec![1], vec![0]]);
        assert_eq!(mask.empty_rows(), vec![1]);
        assert!(mask.empty_cols().is_empty());
    }

    #[test]
    fn empty_feature_space() {
        let triples = vec![Triple::new("dbr:i1", "rdf:type", "dbo:Film")];
        let err = build_feature_space(&triples, &catalog(1), &KgConfig::default()).unwrap_err();
        assert!(matches!(err, DataError::EmptyFeatureSpace));
        assert!(err.to_string().contains("empty feature space"));
    }

    #[test]
    fn empty_catalog() {
        let empty = Catalog::new(vec![]).unwrap();
        assert!(matches!(
            build_feature_space(&toy_triples(), &empty, &KgConfig::default()),
            Err(DataError::EmptyCatalog)
        ));
    }

    #[test]
    fn invalid_config() {
        let mut cfg = KgConfig::new(KgMode::Factual);
        cfg.factual_predicates.clear();
        assert!(matches!(cfg.validate(), Err(DataError::Config(_))));
        assert!(cfg.with_mode(KgMode::Semantic).validate().is_ok());
    }

    #[test]
    fn same_entity_via_two_predicates_is_two_features() {
        let triples = vec![
            Triple::new("dbr:i1", "dbo:starring", "dbr:Clint"),
            Triple::new("dbr:i1", "dbo:director", "dbr:Clint"),
        ];
        let (space, mask) = build_feature_space(&triples, &catalog(1), &KgConfig::new(KgMode::Factual)).unwrap();
        assert_eq!(space.len(), 2);
        assert_eq!(mask.nnz(), 2);
        assert_eq!(space.column("dbr:Clint", "dbo:director"), Some(0));
        assert_eq!(space.column("dbr:Clint", "dbo:starring"), Some(1));
    }

    #[test]
    fn coordinate_format() {
        let mask = MaskMatrix::from_dense(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
        let mut buf = Vec::new();
        mask.write_coordinates(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "2 3 4\n0 0\n0 1\n1 1\n1 2\n");
        assert_eq!(MaskMatrix::read_coordinates(&buf[..]).unwrap(), mask);
    }

    #[test]
    fn coordinate_nnz_mismatch() {
        assert!(MaskMatrix::read_coordinates("2 2 3\n0 0\n".as_bytes()).is_err());
        assert!(MaskMatrix::from_entries(1, 1, [(0, 1)]).is_err());
    }

    #[test]
    fn feature_tsv_round_trip() {
        let space = FeatureSpace::from_features([
            Feature::new("dct:subject", "dbc:Drone_films"),
            Feature::new("dbo:starring", "dbr:Will_Smith"),
        ]);
        let mut buf = Vec::new();
        space.write_tsv(&mut buf).unwrap();
        assert_eq!(FeatureSpace::read_tsv(&buf[..]).unwrap(), space);
        assert_eq!(space.feature(0).predicate_label(), "starring");
        assert_eq!(space.feature(0).label, "Will Smith");
    }
}
