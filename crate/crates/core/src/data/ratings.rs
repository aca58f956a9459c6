use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DataError, ItemId, UserId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rating {
    pub user: UserId,
    pub item: ItemId,
    /// Stars on the MovieLens half-star scale `0.5..=5.0`.
    pub rating: f64,
    pub timestamp: i64,
}

/// At most one rating per `(user, item)`.
#[derive(Debug, Clone, Default)]
pub struct RatingsTable {
    by_user: BTreeMap<UserId, BTreeMap<ItemId, Rating>>,
    len: usize,
}

impl RatingsTable {
    pub fn from_records(records: impl IntoIterator<Item = Rating>) -> Self {
        let mut table = RatingsTable::default();
        for r in records {
            table.insert_latest(r);
        }
        table
    }

    fn insert_latest(&mut self, r: Rating) {
        match self.by_user.entry(r.user).or_default().entry(r.item) {
            Entry::Vacant(slot) => {
                slot.insert(r);
                self.len += 1;
            }
            Entry::Occupied(mut slot) => {
                if r.timestamp >= slot.get().timestamp {
                    slot.insert(r);
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.by_user.keys().copied()
    }

    /// Ratings of one user, ordered by item id.
    pub fn user_ratings(&self, user: UserId) -> impl Iterator<Item = &Rating> + '_ {
        self.by_user.get(&user).into_iter().flat_map(|m| m.values())
    }

    pub fn contains_user(&self, user: UserId) -> bool {
        self.by_user.contains_key(&user)
    }

    pub fn get(&self, user: UserId, item: ItemId) -> Option<&Rating> {
        self.by_user.get(&user)?.get(&item)
    }

    /// Number of ratings per item across all users.
    pub fn item_counts(&self) -> BTreeMap<ItemId, usize> {
        let mut counts = BTreeMap::new();
        for ratings in self.by_user.values() {
            for item in ratings.keys() {
                *counts.entry(*item).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn records(&self) -> impl Iterator<Item = &Rating> + '_ {
        self.by_user.values().flat_map(|m| m.values())
    }
}

#[derive(Debug, Clone)]
pub struct RatingsLoad {
    pub table: RatingsTable,
    /// Records dropped because the rating was outside the scale.
    pub rejected: usize,
}

pub fn is_valid_star_rating(r: f64) -> bool {
    (0.5..=5.0).contains(&r) && (r * 2.0).fract() == 0.0
}

/// Reads a MovieLens `userId,movieId,rating,timestamp` CSV.
pub fn load_ratings(path: impl AsRef<Path>) -> Result<RatingsLoad, DataError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    let load = parse_ratings(file)?;
    tracing::debug!(
        path = %path.display(),
        records = load.table.len(),
        rejected = load.rejected,
        "loaded ratings"
    );
    Ok(load)
}

pub fn parse_ratings(reader: impl Read) -> Result<RatingsLoad, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &'static str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(DataError::MissingColumn(name))
    };
    let (user_col, item_col, rating_col, ts_col) =
        (col("userId")?, col("movieId")?, col("rating")?, col("timestamp")?);

    let mut table = RatingsTable::default();
    let mut rejected = 0;
    for (idx, record) in rdr.records().enumerate() {
        let record = record?;
        let line = idx + 2;
        let field = |c: usize, name: &str| {
            record
                .get(c)
                .ok_or_else(|| DataError::parse(line, format!("missing {name}")))
        };
        let user = field(user_col, "userId")?
            .parse::<u32>()
            .map_err(|e| DataError::parse(line, format!("userId: {e}")))?;
        let item = field(item_col, "movieId")?
            .parse::<u32>()
            .map_err(|e| DataError::parse(line, format!("movieId: {e}")))?;
        let rating = field(rating_col, "rating")?
            .parse::<f64>()
            .map_err(|e| DataError::parse(line, format!("rating: {e}")))?;
        let timestamp = field(ts_col, "timestamp")?
            .parse::<i64>()
            .map_err(|e| DataError::parse(line, format!("timestamp: {e}")))?;
        if !is_valid_star_rating(rating) {
            rejected += 1;
            continue;
        }
        table.insert_latest(Rating {
            user: UserId(user),
            item: ItemId(item),
            rating,
            timestamp,
        });
    }
    if rejected > 0 {
        tracing::warn!(rejected, "ratings outside the 0.5..=5.0 scale were dropped");
    }
    Ok(RatingsLoad { table, rejected })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "userId,movieId,rating,timestamp\n";

    #[test]
    fn single_row() {
        let load = parse_ratings(format!("{HEADER}1,296,5.0,1147880044\n").as_bytes()).unwrap();
        let r = load.table.get(UserId(1), ItemId(296)).unwrap();
        assert_eq!(r.rating, 5.0);
        assert_eq!(load.table.len(), 1);
    }

    #[test]
    fn latest_timestamp_wins() {
        let text = format!("{HEADER}1,296,2.0,200\n1,296,4.5,100\n1,296,3.0,300\n");
        let load = parse_ratings(text.as_bytes()).unwrap();
        assert_eq!(load.table.len(), 1);
        assert_eq!(load.table.get(UserId(1), ItemId(296)).unwrap().rating, 3.0);
    }

    #[test]
    fn out_of_scale_is_dropped() {
        let text = format!("{HEADER}1,296,7.0,1\n1,297,4.0,1\n");
        let load = parse_ratings(text.as_bytes()).unwrap();
        assert_eq!(load.rejected, 1);
        assert_eq!(load.table.len(), 1);
    }

    #[test]
    fn missing_column() {
        let err = parse_ratings("userId,movieId,timestamp\n1,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, DataError::MissingColumn("rating")));
    }

    #[test]
    fn item_counts() {
        let text = format!("{HEADER}1,10,4,1\n2,10,3,1\n2,11,3,1\n");
        let counts = parse_ratings(text.as_bytes()).unwrap().table.item_counts();
        assert_eq!(counts[&ItemId(10)], 2);
        assert_eq!(counts[&ItemId(11)], 1);
    }
}
