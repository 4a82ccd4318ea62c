//! Plain-text formats.
//!
//! * interactions: `user item item ...` per line
//! * knowledge graph: `head relation tail` per line
//! * noise labels: `head relation tail is_noise` per line

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{InteractionGraph, KnowledgeGraph, Triple};
use crate::{Error, Result};

/// A parsed file together with the number of duplicate records dropped.
#[derive(Clone, Debug)]
pub struct Loaded<T> {
    pub value: T,
    pub duplicates: usize,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_id(path: &Path, line: usize, token: &str) -> Result<usize> {
    let parse_err = |message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    match token.parse::<i64>() {
        Ok(v) if v < 0 => Err(parse_err(format!("negative id `{token}`"))),
        Ok(v) => usize::try_from(v).map_err(|_| parse_err(format!("id `{token}` out of range"))),
        Err(_) => Err(parse_err(format!("expected a non-negative integer, found `{token}`"))),
    }
}

/// Parses `user item item ...` lines into `(user, items)` rows. Blank lines
/// are skipped; a file without any row is an error.
pub fn read_interaction_rows(path: impl AsRef<Path>) -> Result<Vec<(usize, Vec<usize>)>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut rows = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let mut tokens = line.split_whitespace();
        let Some(first) = tokens.next() else { continue };
        let user = parse_id(path, n + 1, first)?;
        let items = tokens
            .map(|t| parse_id(path, n + 1, t))
            .collect::<Result<Vec<_>>>()?;
        rows.push((user, items));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile {
            path: path.to_path_buf(),
        });
    }
    Ok(rows)
}

/// Loads an interaction file. `num_users`/`num_items` are one past the
/// largest id seen.
pub fn load_interactions(path: impl AsRef<Path>) -> Result<Loaded<InteractionGraph>> {
    let rows = read_interaction_rows(path)?;
    let num_users = rows.iter().map(|r| r.0 + 1).max().unwrap_or(0);
    let num_items = rows
        .iter()
        .flat_map(|r| r.1.iter().map(|&i| i + 1))
        .max()
        .unwrap_or(0);
    let edges = rows
        .into_iter()
        .flat_map(|(u, items)| items.into_iter().map(move |i| (u, i)))
        .collect();
    let (value, duplicates) = InteractionGraph::from_edges(num_users, num_items, edges)?;
    if duplicates > 0 {
        log::warn!("dropped {duplicates} duplicate interactions");
    }
    Ok(Loaded { value, duplicates })
}

/// Loads `head relation tail` triples. Ids below `num_items` are items; the
/// entity vocabulary extends to the largest id seen.
pub fn load_kg(path: impl AsRef<Path>, num_items: usize) -> Result<Loaded<KnowledgeGraph>> {
    let path = path.as_ref();
    let text = read(path)?;
    let mut triples = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: n + 1,
                message: format!("expected `head relation tail`, found {} tokens", tokens.len()),
            });
        }
        triples.push(Triple::new(
            parse_id(path, n + 1, tokens[0])?,
            parse_id(path, n + 1, tokens[1])?,
            parse_id(path, n + 1, tokens[2])?,
        ));
    }
    let (value, duplicates) = KnowledgeGraph::new(num_items, num_items, 0, triples);
    if duplicates > 0 {
        log::warn!("dropped {duplicates} duplicate triples");
    }
    Ok(Loaded { value, duplicates })
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes one line per user that has at least one item.
pub fn write_interactions(path: impl AsRef<Path>, graph: &InteractionGraph) -> Result<()> {
    let lists: Vec<Vec<usize>> = (0..graph.num_users())
        .map(|u| graph.user_items(u).collect())
        .collect();
    write_user_lists(path, &lists)
}

/// Writes `user item item ...` for every non-empty list.
pub fn write_user_lists(path: impl AsRef<Path>, lists: &[Vec<usize>]) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    for (u, items) in lists.iter().enumerate() {
        if items.is_empty() {
            continue;
        }
        write!(out, "{u}").map_err(io)?;
        for i in items {
            write!(out, " {i}").map_err(io)?;
        }
        writeln!(out).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_kg(path: impl AsRef<Path>, kg: &KnowledgeGraph) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    for t in kg.triples() {
        writeln!(out, "{} {} {}", t.head, t.relation, t.tail).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_noise_labels(path: impl AsRef<Path>, kg: &KnowledgeGraph, is_noise: &[bool]) -> Result<()> {
    let path = path.as_ref();
    let mut out = create(path)?;
    let io = |e| Error::io(path, e);
    for (t, &noise) in kg.triples().iter().zip(is_noise) {
        writeln!(out, "{} {} {} {}", t.head, t.relation, t.tail, u8::from(noise)).map_err(io)?;
    }
    out.flush().map_err(io)
}
