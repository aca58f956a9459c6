//! Seeded generator for small movie worlds: graph triples, an item
//! mapping and a ratings table with the same shapes as the real inputs.
//! Used for the demo data set, tests and benchmarks.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{compact_iri, expand_iri, Catalog, CatalogItem, DataError, ItemId, Rating, RatingsTable, Triple, UserId};

const DBR: &str = "http://dbpedia.org/resource/";
const SUBJECT: &str = "http://purl.org/dc/terms/subject";
const DBO: &str = "http://dbpedia.org/ontology/";
const LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";

const GENRES: [&str; 12] = [
    "science_fiction", "crime", "comedy", "horror", "western", "war", "romance", "animated", "musical",
    "thriller", "fantasy", "sports",
];
const DECADES: [&str; 6] = ["1950s", "1960s", "1970s", "1980s", "1990s", "2000s"];
const PLACES: [&str; 10] =
    ["Egypt", "Arizona", "Paris", "Tokyo", "New_York_City", "London", "Mexico", "Alaska", "Rome", "Berlin"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldConfig {
    pub items: usize,
    pub users: usize,
    pub actors: usize,
    pub directors: usize,
    pub writers: usize,
    pub min_ratings: usize,
    pub max_ratings: usize,
    pub seed: u64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            items: 120,
            users: 40,
            actors: 60,
            directors: 20,
            writers: 25,
            min_ratings: 15,
            max_ratings: 40,
            seed: 7,
        }
    }
}

pub struct World {
    /// Entity triples in compact form, as the loader returns them.
    pub triples: Vec<Triple>,
    /// Literal-valued triples, written to the N-Triples file only.
    pub literals: Vec<(String, String, String)>,
    pub catalog: Catalog,
    pub ratings: RatingsTable,
}

fn person(kind: &str, n: usize) -> String {
    format!("{DBR}Synthetic_{kind}_{n}")
}

pub fn generate(cfg: &WorldConfig) -> Result<World, DataError> {
    if cfg.items == 0 || cfg.min_ratings > cfg.max_ratings || cfg.max_ratings > cfg.items {
        return Err(DataError::Config(format!("inconsistent world configuration {cfg:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut triples = Vec::new();
    let mut literals = Vec::new();
    let mut items = Vec::new();
    // Feature columns in the combined space, per item, for the rating model.
    let mut item_tags: Vec<Vec<String>> = Vec::new();

    for i in 0..cfg.items {
        let id = ItemId(1 + i as u32);
        let year = 1950 + rng.random_range(0..60);
        let entity = format!("{DBR}Synthetic_Film_{}", id.0);
        let title = format!("Synthetic Film {} ({year})", id.0);
        let mut tags = Vec::new();
        let mut link = |p: &str, o: String, tags: &mut Vec<String>| {
            tags.push(format!("{p} {o}"));
            triples.push(Triple::new(compact_iri(&entity), compact_iri(p), compact_iri(&o)));
        };
        let decade = DECADES[((year - 1950) / 10) as usize];
        let genre_count = rng.random_range(1..=2);
        for g in sample(&mut rng, GENRES.len(), genre_count) {
            link(SUBJECT, format!("{DBR}Category:{decade}_{}_films", GENRES[g]), &mut tags);
        }
        if rng.random_bool(0.4) {
            link(SUBJECT, format!("{DBR}Category:Films_set_in_{}", PLACES[rng.random_range(0..PLACES.len())]), &mut tags);
        }
        if rng.random_bool(0.25) {
            link(SUBJECT, format!("{DBR}Category:Films_shot_in_{}", PLACES[rng.random_range(0..PLACES.len())]), &mut tags);
        }
        let cast = rng.random_range(2..=4).min(cfg.actors);
        for a in sample(&mut rng, cfg.actors, cast) {
            link(&format!("{DBO}starring"), person("Actor", a), &mut tags);
        }
        if cfg.directors > 0 {
            link(&format!("{DBO}director"), person("Director", rng.random_range(0..cfg.directors)), &mut tags);
        }
        if cfg.writers > 0 {
            let count = rng.random_range(1..=2).min(cfg.writers);
            for w in sample(&mut rng, cfg.writers, count) {
                link(&format!("{DBO}writer"), person("Writer", w), &mut tags);
            }
        }
        literals.push((entity.clone(), LABEL.to_string(), title.clone()));
        items.push(CatalogItem {
            id,
            entity: format!("dbr:Synthetic_Film_{}", id.0),
            title,
            trailer_url: Some(format!("https://trailers.example.org/{}", id.0)),
        });
        item_tags.push(tags);
    }

    // Popularity falls off with item index so the most-rated quartile is
    // well defined.
    let weights: Vec<f64> = (0..cfg.items).map(|i| 1.0 / (i as f64 + 10.0)).collect();
    let mut tag_index = std::collections::BTreeMap::new();
    for tags in &item_tags {
        for t in tags {
            let n = tag_index.len();
            tag_index.entry(t.clone()).or_insert(n);
        }
    }
    let mut records = Vec::new();
    for u in 0..cfg.users {
        let user = UserId(1 + u as u32);
        let affinity: Vec<f64> = (0..tag_index.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        let count = rng.random_range(cfg.min_ratings..=cfg.max_ratings);
        let chosen = rand::seq::index::sample_weighted(&mut rng, cfg.items, |i| weights[i], count)
            .map_err(|e| DataError::Config(e.to_string()))?;
        for (k, i) in chosen.into_iter().enumerate() {
            let tags = &item_tags[i];
            let appeal =
                tags.iter().map(|t| affinity[tag_index[t]]).sum::<f64>() / (tags.len().max(1) as f64).sqrt();
            let noise: f64 = StandardNormal.sample(&mut rng);
            let stars = ((3.0 + 1.5 * appeal.tanh() + 0.5 * noise) * 2.0).round() / 2.0;
            records.push(Rating {
                user,
                item: ItemId(1 + i as u32),
                rating: stars.clamp(0.5, 5.0),
                timestamp: 1_400_000_000 + (u * 1000 + k) as i64,
            });
        }
    }
    Ok(World { triples, literals, catalog: Catalog::new(items)?, ratings: RatingsTable::from_records(records) })
}

impl World {
    /// Writes `triples.nt`, `mapping.tsv` and `ratings.csv` into `dir`.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<(), DataError> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| DataError::io(dir, e))?;
        let write = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> std::io::Result<()>| -> Result<(), DataError> {
            let mut buf = Vec::new();
            f(&mut buf).expect("writing to memory");
            let path = dir.join(name);
            fs::write(&path, buf).map_err(|e| DataError::io(&path, e))
        };
        write("triples.nt", &|w| {
            for t in &self.triples {
                writeln!(w, "<{}> <{}> <{}> .", expand_iri(&t.subject), expand_iri(&t.predicate), expand_iri(&t.object))?;
            }
            for (s, p, o) in &self.literals {
                writeln!(w, "<{s}> <{p}> \"{o}\"@en .")?;
            }
            Ok(())
        })?;
        write("mapping.tsv", &|w| {
            writeln!(w, "itemId\tentity\ttitle\ttrailer")?;
            for it in self.catalog.items() {
                writeln!(w, "{}\t{}\t{}\t{}", it.id, it.entity, it.title, it.trailer_url.as_deref().unwrap_or(""))?;
            }
            Ok(())
        })?;
        write("ratings.csv", &|w| {
            writeln!(w, "userId,movieId,rating,timestamp")?;
            for r in self.ratings.records() {
                writeln!(w, "{},{},{:.1},{}", r.user, r.item, r.rating, r.timestamp)?;
            }
            Ok(())
        })
    }
}
