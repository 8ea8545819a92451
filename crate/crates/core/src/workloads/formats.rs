//! Line-oriented text formats. Every format is tab-separated, one record per
//! line, newline-terminated, with base-10 numbers. Lines starting with `#`
//! are comments; the graph format uses one to carry the node count so that
//! isolated nodes survive a round trip.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::algorithms::{AnnotatedEdge, Document};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct FormatError {
    /// 1-based; 0 when the problem is not tied to one line.
    pub line: usize,
    pub message: String,
}

impl FormatError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        FormatError {
            line,
            message: message.into(),
        }
    }
}

/// Non-comment, non-blank lines with 1-based numbers.
fn records(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn fields<const N: usize>(line_no: usize, line: &str) -> Result<[&str; N], FormatError> {
    let parts: Vec<&str> = line.split('\t').collect();
    parts
        .try_into()
        .map_err(|p: Vec<&str>| FormatError::at(line_no, format!("expected {N} tab-separated fields, found {}", p.len())))
}

fn number<T: FromStr>(line_no: usize, what: &str, s: &str) -> Result<T, FormatError> {
    s.parse()
        .map_err(|_| FormatError::at(line_no, format!("{what} {s:?} is not a valid number")))
}

fn token_text<'a>(line_no: usize, token: &'a [u8]) -> Result<&'a str, FormatError> {
    let s = std::str::from_utf8(token).map_err(|_| FormatError::at(line_no, "token is not UTF-8"))?;
    if s.is_empty() || s.contains([' ', '\t', '\n', '\r']) {
        return Err(FormatError::at(line_no, format!("token {s:?} is empty or contains whitespace")));
    }
    Ok(s)
}

pub fn render_corpus(docs: &[Document]) -> Result<String, FormatError> {
    let mut out = String::new();
    for (i, d) in docs.iter().enumerate() {
        let tokens = d
            .tokens
            .iter()
            .map(|t| token_text(i + 1, t))
            .collect::<Result<Vec<_>, _>>()?;
        writeln!(out, "{}\t{}", d.doc_id, tokens.join(" ")).expect("writing to a String");
    }
    Ok(out)
}

pub fn parse_corpus(text: &str) -> Result<Vec<Document>, FormatError> {
    records(text)
        .map(|(n, line)| {
            let [id, body] = fields::<2>(n, line)?;
            Ok(Document::new(
                number(n, "doc_id", id)?,
                body.split(' ').filter(|t| !t.is_empty()),
            ))
        })
        .collect()
}

pub fn render_graph(num_nodes: u64, edges: &[AnnotatedEdge]) -> String {
    let mut out = format!("# nodes {num_nodes}\n");
    for e in edges {
        writeln!(out, "{}\t{}\t{}", e.src, e.dst, e.src_outdeg).expect("writing to a String");
    }
    out
}

/// Returns `(num_nodes, edges)`. The node count comes from a `# nodes N`
/// comment when present, otherwise from the largest id seen. Annotations
/// are checked against out-degrees recounted from the file.
pub fn parse_graph(text: &str) -> Result<(u64, Vec<AnnotatedEdge>), FormatError> {
    let mut declared = None;
    for (i, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix("# nodes ") {
            declared = Some(number::<u64>(i + 1, "node count", rest.trim())?);
        }
    }
    let mut edges = Vec::new();
    let mut lines = Vec::new();
    for (n, line) in records(text) {
        let [s, d, o] = fields::<3>(n, line)?;
        let e = AnnotatedEdge {
            src: number(n, "src", s)?,
            dst: number(n, "dst", d)?,
            src_outdeg: number(n, "src_outdeg", o)?,
        };
        if e.src_outdeg == 0 {
            return Err(FormatError::at(n, "src_outdeg must be at least 1"));
        }
        edges.push(e);
        lines.push(n);
    }
    let seen = edges.iter().map(|e| e.src.max(e.dst) + 1).max().unwrap_or(0);
    let num_nodes = match declared {
        Some(n) if n < seen => {
            return Err(FormatError::at(0, format!("node id {} outside declared node count {n}", seen - 1)))
        }
        Some(n) => n,
        None => seen,
    };
    let mut outdeg: BTreeMap<u64, u64> = BTreeMap::new();
    for e in &edges {
        *outdeg.entry(e.src).or_default() += 1;
    }
    for (e, &n) in edges.iter().zip(&lines) {
        let actual = outdeg[&e.src];
        if e.src_outdeg != actual {
            return Err(FormatError::at(
                n,
                format!("src_outdeg {} for node {} but it has {actual} out-edges", e.src_outdeg, e.src),
            ));
        }
    }
    Ok((num_nodes, edges))
}

pub fn render_ranks(ranks: &[f64]) -> String {
    let mut out = String::new();
    for (i, r) in ranks.iter().enumerate() {
        writeln!(out, "{i}\t{r}").expect("writing to a String");
    }
    out
}

/// Nodes may appear in any order but each of `0..n` exactly once.
pub fn parse_ranks(text: &str) -> Result<Vec<f64>, FormatError> {
    let mut by_node = BTreeMap::new();
    for (n, line) in records(text) {
        let [node, rank] = fields::<2>(n, line)?;
        let node: u64 = number(n, "node", node)?;
        let rank: f64 = number(n, "rank", rank)?;
        if !rank.is_finite() {
            return Err(FormatError::at(n, "rank must be finite"));
        }
        if by_node.insert(node, rank).is_some() {
            return Err(FormatError::at(n, format!("node {node} listed twice")));
        }
    }
    if let Some((missing, _)) = by_node.keys().enumerate().find(|&(i, &k)| i as u64 != k) {
        return Err(FormatError::at(0, format!("rank for node {missing} missing")));
    }
    Ok(by_node.into_values().collect())
}

pub fn render_numbers(values: &[i64]) -> String {
    values.iter().fold(String::new(), |mut out, v| {
        writeln!(out, "{v}").expect("writing to a String");
        out
    })
}

pub fn parse_numbers(text: &str) -> Result<Vec<i64>, FormatError> {
    records(text).map(|(n, line)| number(n, "value", line.trim())).collect()
}

pub fn render_word_counts(counts: &BTreeMap<Vec<u8>, u64>) -> Result<String, FormatError> {
    let mut out = String::new();
    for (i, (word, count)) in counts.iter().enumerate() {
        writeln!(out, "{}\t{count}", token_text(i + 1, word)?).expect("writing to a String");
    }
    Ok(out)
}

pub fn parse_word_counts(text: &str) -> Result<BTreeMap<Vec<u8>, u64>, FormatError> {
    let mut counts = BTreeMap::new();
    for (n, line) in records(text) {
        let [word, count] = fields::<2>(n, line)?;
        token_text(n, word.as_bytes())?;
        if counts.insert(word.as_bytes().to_vec(), number(n, "count", count)?).is_some() {
            return Err(FormatError::at(n, format!("word {word:?} listed twice")));
        }
    }
    Ok(counts)
}
