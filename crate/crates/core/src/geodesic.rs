//! Localization graphs and shortest-path dissimilarities.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::LatentMatrix;

/// Epsilon-neighbourhood graph: `i ~ j` iff `||x_i - x_j|| < lambda`.
#[derive(Debug, Clone)]
pub struct LocalizationGraph {
    lambda: f64,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl LocalizationGraph {
    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn neighbours(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].iter().any(|&(k, _)| k == j)
    }
}

pub fn build_localization_graph(points: &LatentMatrix, lambda: f64) -> Result<LocalizationGraph> {
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!("lambda = {lambda} must be positive")));
    }
    let n = points.nrows();
    let rows: Vec<Vec<f64>> = (0..n).map(|i| points.row(i)).collect();
    let mut adjacency = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if dist < lambda {
                adjacency[i].push((j, dist));
                adjacency[j].push((i, dist));
            }
        }
    }
    Ok(LocalizationGraph { lambda, adjacency })
}

/// Symmetric, zero-diagonal matrix of nonnegative dissimilarities.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix(DMatrix<f64>);

impl DissimilarityMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let l = m.nrows();
        if m.ncols() != l {
            return Err(Error::ShapeMismatch {
                expected: "square dissimilarities".into(),
                found: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        for i in 0..l {
            if m[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("dissimilarity diagonal {i} is nonzero")));
            }
            for j in 0..l {
                let v = m[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(format!("dissimilarity ({i}, {j}) = {v}")));
                }
                if (v - m[(j, i)]).abs() > 1e-12 * v.abs().max(1.0) {
                    return Err(Error::NotSymmetric {
                        row: i,
                        col: j,
                        gap: (v - m[(j, i)]).abs(),
                    });
                }
            }
        }
        Ok(Self(m))
    }

    /// Pairwise absolute differences of scalar positions.
    pub fn from_line(z: &[f64]) -> Self {
        Self(DMatrix::from_fn(z.len(), z.len(), |i, j| (z[i] - z[j]).abs()))
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    dist: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source Dijkstra over the whole graph.
pub fn dijkstra(g: &LocalizationGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.n()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(State { dist: 0.0, node: source });
    while let Some(State { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, w) in g.neighbours(node) {
            let cand = d + w;
            if cand < dist[next] {
                dist[next] = cand;
                heap.push(State { dist: cand, node: next });
            }
        }
    }
    dist
}

/// Shortest-path distances among the first `l` nodes; paths may pass
/// through any node of the graph.
pub fn shortest_path_matrix(g: &LocalizationGraph, l: usize) -> Result<DissimilarityMatrix> {
    if l > g.n() {
        return Err(Error::invalid(format!("l = {l} exceeds graph size {}", g.n())));
    }
    let sources: Vec<usize> = (0..l).collect();
    shortest_path_matrix_among(g, &sources)
}

/// Shortest-path distances among an arbitrary node subset, in the given order.
pub fn shortest_path_matrix_among(g: &LocalizationGraph, nodes: &[usize]) -> Result<DissimilarityMatrix> {
    if let Some(&bad) = nodes.iter().find(|&&i| i >= g.n()) {
        return Err(Error::invalid(format!("node {bad} out of range")));
    }
    let rows: Vec<Vec<f64>> = nodes.par_iter().map(|&s| dijkstra(g, s)).collect();
    let l = nodes.len();
    let mut d = DMatrix::zeros(l, l);
    for a in 0..l {
        for b in 0..l {
            let v = rows[a][nodes[b]];
            if !v.is_finite() {
                let comps = connectivity_report(g);
                return Err(Error::Disconnected {
                    labels: nodes.iter().map(|&i| comps.label[i]).collect(),
                });
            }
            d[(a, b)] = if a == b { 0.0 } else { v };
        }
    }
    // Dijkstra from either endpoint may differ in the last bit.
    for a in 0..l {
        for b in (a + 1)..l {
            let v = d[(a, b)].min(d[(b, a)]);
            d[(a, b)] = v;
            d[(b, a)] = v;
        }
    }
    Ok(DissimilarityMatrix(d))
}

/// Connected components; labels are numbered in order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct Components {
    pub label: Vec<usize>,
    pub count: usize,
}

impl Components {
    pub fn members(&self, c: usize) -> Vec<usize> {
        (0..self.label.len()).filter(|&i| self.label[i] == c).collect()
    }

    /// The largest component, lowest label on ties.
    pub fn largest(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.count];
        for &c in &self.label {
            sizes[c] += 1;
        }
        let best = (0..self.count).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)));
        best.map(|c| self.members(c)).unwrap_or_default()
    }
}

pub fn connectivity_report(g: &LocalizationGraph) -> Components {
    let n = g.n();
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    let mut stack = Vec::new();
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        stack.push(start);
        while let Some(v) = stack.pop() {
            for &(w, _) in g.neighbours(v) {
                if label[w] == usize::MAX {
                    label[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    Components { label, count }
}
