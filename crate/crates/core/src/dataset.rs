//! Graph and response ingestion from CSV.
//!
//! Edge lists hold one `src,dst` pair per line with 0-based ids; a header
//! row is optional. Dense matrices are headerless rows of numbers.
//! Responses are `id,response` lines, possibly covering only some nodes.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::rdpg::AdjacencyMatrix;

#[derive(Debug, Clone)]
pub struct Dataset {
    pub adjacency: AdjacencyMatrix,
    /// Recorded responses keyed by node id.
    pub responses: BTreeMap<usize, f64>,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.adjacency.n()
    }

    pub fn new(adjacency: AdjacencyMatrix, responses: BTreeMap<usize, f64>) -> Result<Self> {
        if let Some((&id, _)) = responses.iter().find(|(&id, _)| id >= adjacency.n()) {
            return Err(Error::invalid(format!(
                "response id {id} is not a node of the {}-node graph",
                adjacency.n()
            )));
        }
        Ok(Self { adjacency, responses })
    }

    pub fn labelled(&self) -> Vec<usize> {
        self.responses.keys().copied().collect()
    }

    pub fn unlabelled(&self) -> Vec<usize> {
        (0..self.n()).filter(|i| !self.responses.contains_key(i)).collect()
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

/// Parses `(key, value)` rows, skipping one leading header line.
fn pairs<A, B>(text: &str, what: &str) -> Result<Vec<(A, B)>>
where
    A: std::str::FromStr,
    B: std::str::FromStr,
{
    let mut out = Vec::new();
    for (line, record) in reader(text).records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(Error::invalid(format!(
                "{what} line {}: expected 2 fields, found {}",
                line + 1,
                record.len()
            )));
        }
        match (record[0].parse::<A>(), record[1].parse::<B>()) {
            (Ok(a), Ok(b)) => out.push((a, b)),
            _ if line == 0 => continue,
            _ => {
                return Err(Error::invalid(format!(
                    "{what} line {}: cannot parse {:?}",
                    line + 1,
                    record.iter().collect::<Vec<_>>()
                )))
            }
        }
    }
    Ok(out)
}

pub fn parse_edge_list(text: &str) -> Result<Vec<(usize, usize)>> {
    pairs(text, "edge list")
}

/// Id-to-value map; duplicate ids are rejected and non-finite values refused.
pub fn parse_id_values(text: &str, what: &str) -> Result<BTreeMap<usize, f64>> {
    let mut map = BTreeMap::new();
    for (id, value) in pairs::<usize, f64>(text, what)? {
        if !value.is_finite() {
            return Err(Error::invalid(format!("{what}: value for id {id} is not finite")));
        }
        if map.insert(id, value).is_some() {
            return Err(Error::invalid(format!("{what}: duplicate id {id}")));
        }
    }
    Ok(map)
}

pub fn parse_responses(text: &str) -> Result<BTreeMap<usize, f64>> {
    parse_id_values(text, "responses")
}

pub fn parse_dense_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader(text).records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let row = record
            .iter()
            .map(|cell| {
                cell.parse::<f64>()
                    .map_err(|_| Error::invalid(format!("matrix line {}: cannot parse {cell:?}", line + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::ShapeMismatch {
            expected: format!("{n} columns in every row"),
            found: "ragged or non-square rows".into(),
        });
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Adjacency from an edge list; the node count is `n_nodes` or one past the
/// largest id.
pub fn adjacency_from_edge_text(text: &str, n_nodes: Option<usize>, directed: bool) -> Result<AdjacencyMatrix> {
    let edges = parse_edge_list(text)?;
    let implied = edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(0);
    let n = n_nodes.unwrap_or(implied);
    if n == 0 {
        return Err(Error::Empty);
    }
    AdjacencyMatrix::from_edges(n, &edges, directed)
}

pub fn edge_list_text(a: &AdjacencyMatrix) -> String {
    let m = a.as_matrix();
    let mut out = String::from("src,dst\n");
    for i in 0..a.n() {
        let start = if a.is_directed() { 0 } else { i + 1 };
        for j in start..a.n() {
            if m[(i, j)] == 1.0 {
                out.push_str(&format!("{i},{j}\n"));
            }
        }
    }
    out
}

pub fn id_values_text(header: &str, values: impl IntoIterator<Item = (usize, f64)>) -> String {
    let mut out = format!("{header}\n");
    for (id, v) in values {
        out.push_str(&format!("{id},{v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_with_and_without_header() {
        let a = adjacency_from_edge_text("src,dst\n0,1\n1,2\n", None, false).unwrap();
        assert_eq!(a.n(), 3);
        assert_eq!(a.edge_count(), 2);
        let b = adjacency_from_edge_text("0,1\n1,2\n", Some(5), true).unwrap();
        assert_eq!((b.n(), b.edge_count()), (5, 2));
        assert!(adjacency_from_edge_text("0,1\nx,2\n", None, false).is_err());
        assert!(adjacency_from_edge_text("0,0\n", None, false).is_err());
    }

    #[test]
    fn round_trip_edges() {
        let a = adjacency_from_edge_text("0,2\n2,1\n3,0\n", None, true).unwrap();
        let back = adjacency_from_edge_text(&edge_list_text(&a), None, true).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn responses_partial_and_duplicates() {
        let r = parse_responses("id,response\n3,1.5\n0,-2\n").unwrap();
        assert_eq!(r.keys().copied().collect::<Vec<_>>(), vec![0, 3]);
        assert!(parse_responses("1,2\n1,3\n").is_err());
        assert!(parse_responses("1,NaN\n").is_err());
        let a = adjacency_from_edge_text("0,1\n", None, false).unwrap();
        assert!(Dataset::new(a, r).is_err());
    }

    #[test]
    fn dense_matrix() {
        let m = parse_dense_matrix("0,1\n1,0\n").unwrap();
        assert!(AdjacencyMatrix::from_dense(m, false).is_ok());
        assert!(parse_dense_matrix("0,1,0\n1,0\n").is_err());
    }
}
