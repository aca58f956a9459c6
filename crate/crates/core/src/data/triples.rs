use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::iri::compact_iri;
use super::DataError;

/// A `(subject, predicate, object)` edge between two graph entities.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: String,
}

impl Triple {
    pub fn new(
        subject: impl Into<String>,
        predicate: impl Into<String>,
        object: impl Into<String>,
    ) -> Self {
        Triple {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripleFormat {
    NTriples,
    Tsv,
}

impl FromStr for TripleFormat {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ntriples" | "nt" | "n-triples" => Ok(TripleFormat::NTriples),
            "tsv" => Ok(TripleFormat::Tsv),
            other => Err(DataError::Config(format!(
                "unknown triple format `{other}` (expected ntriples or tsv)"
            ))),
        }
    }
}

/// Result of reading a triple file. Literal-valued statements cannot become
/// mask edges, so they are counted and dropped.
#[derive(Debug, Clone, Default)]
pub struct LoadedTriples {
    pub triples: Vec<Triple>,
    pub skipped_literals: usize,
}

impl LoadedTriples {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

pub fn load_triples(path: impl AsRef<Path>, format: TripleFormat) -> Result<LoadedTriples, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let loaded = parse_triples(&text, format)?;
    tracing::debug!(
        path = %path.display(),
        triples = loaded.len(),
        skipped_literals = loaded.skipped_literals,
        "loaded triples"
    );
    Ok(loaded)
}

pub fn parse_triples(text: &str, format: TripleFormat) -> Result<LoadedTriples, DataError> {
    let mut out = LoadedTriples::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let terms = match format {
            TripleFormat::NTriples => parse_ntriples_line(line).map_err(|m| DataError::parse(line_no, m))?,
            TripleFormat::Tsv => parse_tsv_line(raw).map_err(|m| DataError::parse(line_no, m))?,
        };
        let [s, p, o] = terms;
        let (Term::Entity(s), Term::Entity(p)) = (s, p) else {
            return Err(DataError::parse(line_no, "subject and predicate must be IRIs"));
        };
        match o {
            Term::Entity(o) => out.triples.push(Triple::new(s, p, o)),
            Term::Literal => out.skipped_literals += 1,
        }
    }
    Ok(out)
}

enum Term {
    Entity(String),
    Literal,
}

fn parse_ntriples_line(line: &str) -> Result<[Term; 3], String> {
    let mut rest = line;
    let mut terms = Vec::with_capacity(3);
    for _ in 0..3 {
        rest = rest.trim_start();
        let (term, tail) = next_nt_term(rest)?;
        terms.push(term);
        rest = tail;
    }
    let rest = rest.trim();
    if rest != "." {
        return Err(format!("expected terminating `.`, found `{rest}`"));
    }
    let o = terms.pop().unwrap();
    let p = terms.pop().unwrap();
    let s = terms.pop().unwrap();
    Ok([s, p, o])
}

fn next_nt_term(input: &str) -> Result<(Term, &str), String> {
    if let Some(body) = input.strip_prefix('<') {
        let end = body.find('>').ok_or("unterminated IRI")?;
        let iri = &body[..end];
        if iri.is_empty() {
            return Err("empty IRI".into());
        }
        Ok((Term::Entity(compact_iri(iri)), &body[end + 1..]))
    } else if input.starts_with("_:") {
        let end = input.find(char::is_whitespace).unwrap_or(input.len());
        Ok((Term::Entity(input[..end].to_string()), &input[end..]))
    } else if let Some(body) = input.strip_prefix('"') {
        let mut escaped = false;
        let mut close = None;
        for (i, c) in body.char_indices() {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => {
                    close = Some(i);
                    break;
                }
                _ => {}
            }
        }
        let close = close.ok_or("unterminated literal")?;
        let mut tail = &body[close + 1..];
        if let Some(t) = tail.strip_prefix("^^<") {
            let end = t.find('>').ok_or("unterminated datatype IRI")?;
            tail = &t[end + 1..];
        } else if let Some(t) = tail.strip_prefix('@') {
            let end = t.find(char::is_whitespace).unwrap_or(t.len());
            tail = &t[end..];
        }
        Ok((Term::Literal, tail))
    } else if input.is_empty() {
        Err("expected three terms".into())
    } else {
        Err(format!("unexpected token at `{}`", input.chars().take(20).collect::<String>()))
    }
}

fn parse_tsv_line(line: &str) -> Result<[Term; 3], String> {
    let cols: Vec<&str> = line.trim_end_matches(['\r', '\n']).split('\t').collect();
    if cols.len() != 3 {
        return Err(format!("expected 3 tab-separated columns, found {}", cols.len()));
    }
    let term = |raw: &str| -> Result<Term, String> {
        let raw = raw.trim();
        if raw.is_empty() {
            return Err("empty field".into());
        }
        if raw.starts_with('"') {
            return Ok(Term::Literal);
        }
        let iri = raw
            .strip_prefix('<')
            .and_then(|r| r.strip_suffix('>'))
            .unwrap_or(raw);
        Ok(Term::Entity(compact_iri(iri)))
    };
    Ok([term(cols[0])?, term(cols[1])?, term(cols[2])?])
}
