use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::iri::compact_iri;
use super::{DataError, ItemId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogItem {
    pub id: ItemId,
    /// Graph entity the item is mapped to.
    pub entity: String,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trailer_url: Option<String>,
}

/// Items in row order. Row `i` of every item-indexed vector and of the mask
/// corresponds to `items[i]`.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    items: Vec<CatalogItem>,
    index: HashMap<ItemId, usize>,
}

impl Catalog {
    pub fn new(items: Vec<CatalogItem>) -> Result<Self, DataError> {
        let mut index = HashMap::with_capacity(items.len());
        for (row, item) in items.iter().enumerate() {
            if item.entity.is_empty() {
                return Err(DataError::Config(format!("item {} has no entity", item.id)));
            }
            if index.insert(item.id, row).is_some() {
                return Err(DataError::DuplicateItem(item.id));
            }
        }
        Ok(Catalog { items, index })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[CatalogItem] {
        &self.items
    }

    pub fn item(&self, row: usize) -> &CatalogItem {
        &self.items[row]
    }

    pub fn row_of(&self, id: ItemId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn get(&self, id: ItemId) -> Option<&CatalogItem> {
        self.row_of(id).map(|row| &self.items[row])
    }

    pub fn title(&self, id: ItemId) -> Option<&str> {
        self.get(id).map(|item| item.title.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct MappingLoad {
    pub catalog: Catalog,
    /// Rows dropped because their entity field was empty.
    pub excluded: usize,
}

/// Reads `itemId<TAB>entityIRI<TAB>title[<TAB>trailerURL]`.
pub fn load_item_mapping(path: impl AsRef<Path>) -> Result<MappingLoad, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    parse_item_mapping(&text)
}

pub fn parse_item_mapping(text: &str) -> Result<MappingLoad, DataError> {
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    let mut excluded = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if line_no == 1 && cols[0].trim().eq_ignore_ascii_case("itemId") {
            continue;
        }
        if cols.len() < 3 {
            return Err(DataError::parse(line_no, format!("expected at least 3 columns, found {}", cols.len())));
        }
        let id = cols[0]
            .trim()
            .parse::<u32>()
            .map(ItemId)
            .map_err(|e| DataError::parse(line_no, format!("bad item id `{}`: {e}", cols[0])))?;
        if !seen.insert(id) {
            return Err(DataError::DuplicateItem(id));
        }
        let entity = cols[1].trim();
        let entity = entity
            .strip_prefix('<')
            .and_then(|e| e.strip_suffix('>'))
            .unwrap_or(entity);
        if entity.is_empty() {
            excluded += 1;
            continue;
        }
        let trailer_url = cols
            .get(3)
            .map(|s| s.trim())
            .filter(|s| !s.is_empty())
            .map(str::to_string);
        items.push(CatalogItem {
            id,
            entity: compact_iri(entity),
            title: cols[2].trim().to_string(),
            trailer_url,
        });
    }
    Ok(MappingLoad {
        catalog: Catalog::new(items)?,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn terminator_row() {
        let load = parse_item_mapping("589\tdbr:Terminator_2:_Judgment_Day\tTerminator 2: Judgment Day (1991)\n").unwrap();
        let item = load.catalog.get(ItemId(589)).unwrap();
        assert_eq!(item.entity, "dbr:Terminator_2:_Judgment_Day");
        assert_eq!(item.title, "Terminator 2: Judgment Day (1991)");
        assert_eq!(load.catalog.row_of(ItemId(589)), Some(0));
    }

    #[test]
    fn empty_iri_is_excluded() {
        let load = parse_item_mapping("itemId\tentity\ttitle\n1\t\tNo entity\n2\tdbr:B\tB\n").unwrap();
        assert_eq!(load.excluded, 1);
        assert_eq!(load.catalog.len(), 1);
        assert_eq!(load.catalog.row_of(ItemId(2)), Some(0));
    }

    #[test]
    fn duplicate_id_is_an_error() {
        let err = parse_item_mapping("7\tdbr:A\tA\n7\tdbr:B\tB\n").unwrap_err();
        assert!(matches!(err, DataError::DuplicateItem(ItemId(7))));
        assert!(err.to_string().contains('7'));
    }

    #[test]
    fn optional_trailer_column() {
        let load = parse_item_mapping("1\tdbr:A\tA\thttps://example.org/t.mp4\n").unwrap();
        assert_eq!(
            load.catalog.item(0).trailer_url.as_deref(),
            Some("https://example.org/t.mp4")
        );
    }
}
