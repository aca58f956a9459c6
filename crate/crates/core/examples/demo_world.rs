//! Writes a synthetic movie world (triples, mapping, ratings) to a directory.
//!
//! `cargo run -p semauto-core --example demo_world -- data/demo`

use semauto_core::synthetic::{generate, WorldConfig};

fn main() {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "data/demo".to_string());
    let world = generate(&WorldConfig::default()).expect("default world is consistent");
    world.write_to(&dir).expect("writing demo world");
    println!(
        "wrote {} items, {} ratings, {} triples to {dir}",
        world.catalog.len(),
        world.ratings.len(),
        world.triples.len() + world.literals.len()
    );
}
