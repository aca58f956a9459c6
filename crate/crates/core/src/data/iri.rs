// Longest namespace first so `dbc:` wins over `dbr:`.
const PREFIXES: &[(&str, &str)] = &[
    ("dbc:", "http://dbpedia.org/resource/Category:"),
    ("dbr:", "http://dbpedia.org/resource/"),
    ("dbo:", "http://dbpedia.org/ontology/"),
    ("dbp:", "http://dbpedia.org/property/"),
    ("dct:", "http://purl.org/dc/terms/"),
    ("rdfs:", "http://www.w3.org/2000/01/rdf-schema#"),
    ("rdf:", "http://www.w3.org/1999/02/22-rdf-syntax-ns#"),
    ("owl:", "http://www.w3.org/2002/07/owl#"),
];

/// Rewrites a full IRI in one of the well-known DBpedia namespaces to its
/// prefixed form, so that `http://purl.org/dc/terms/subject` and
/// `dct:subject` compare equal. Other strings are returned unchanged.
pub fn compact_iri(iri: &str) -> String {
    for (prefix, namespace) in PREFIXES {
        if let Some(rest) = iri.strip_prefix(namespace) {
            return format!("{prefix}{rest}");
        }
    }
    iri.to_string()
}

/// Inverse of [`compact_iri`].
pub fn expand_iri(iri: &str) -> String {
    for (prefix, namespace) in PREFIXES {
        if let Some(rest) = iri.strip_prefix(prefix) {
            return format!("{namespace}{rest}");
        }
    }
    iri.to_string()
}

/// Human label for an entity or predicate: the local name with underscores
/// turned into spaces (`dbc:Cyberpunk_films` -> `Cyberpunk films`).
pub fn local_label(iri: &str) -> String {
    let local = PREFIXES
        .iter()
        .find_map(|(prefix, _)| iri.strip_prefix(prefix))
        .unwrap_or_else(|| {
            if iri.contains("://") {
                iri.rsplit(['/', '#']).next().unwrap_or(iri)
            } else {
                iri.split_once(':').map_or(iri, |(_, rest)| rest)
            }
        });
    local.replace('_', " ")
}
