//! Weighted undirected graphs, their edge matrix and Laplacian, exact cut
//! values, and the affine weight translation applied before release.
//!
//! Node indices are 0-based. Every unordered pair `{u, v}` with `u < v` owns a
//! slot in lexicographic order `(0,1), (0,2), ..., (0,n-1), (1,2), ...`; this
//! order fixes the rows of the edge matrix and the columns of the sketch.

use std::collections::HashSet;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{out_of_range, Error, Result};
use crate::linalg::{format_real, Matrix};

/// Number of unordered pairs on `n` nodes.
pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Lexicographic slot of the pair `{u, v}`, `u < v < n`.
pub fn pair_index(n: usize, u: usize, v: usize) -> usize {
    debug_assert!(u < v && v < n);
    // Pairs starting at nodes 0..u occupy (n-1) + (n-2) + ... + (n-u) slots.
    u * (2 * n - u - 1) / 2 + (v - u - 1)
}

/// Iterates all pairs `(u, v)`, `u < v`, in lexicographic order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |u| ((u + 1)..n).map(move |v| (u, v)))
}

/// Graph with symmetric edge weights in `[0, 1]`; absent pairs weigh zero.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    weights: Vec<f64>,
}

impl WeightedGraph {
    /// Empty graph on `n` nodes.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one node".into()));
        }
        Ok(WeightedGraph {
            n,
            weights: vec![0.0; pair_count(n)],
        })
    }

    /// Builds a graph from per-pair weights in lexicographic pair order.
    pub fn from_pair_weights(n: usize, weights: Vec<f64>) -> Result<Self> {
        let mut g = WeightedGraph::new(n)?;
        if weights.len() != g.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: g.weights.len(),
                actual: weights.len(),
            });
        }
        for (idx, &w) in weights.iter().enumerate() {
            check_weight(w).map_err(|e| Error::InvalidGraph(format!("pair slot {idx}: {e}")))?;
        }
        g.weights = weights;
        Ok(g)
    }

    /// Builds a graph from `(u, v, weight)` triples; repeated pairs are rejected.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut g = WeightedGraph::new(n)?;
        let mut seen = HashSet::new();
        for (u, v, w) in edges {
            let key = (u.min(v), u.max(v));
            if !seen.insert(key) {
                return Err(Error::InvalidGraph(format!("duplicate pair ({}, {})", key.0, key.1)));
            }
            g.set_weight(u, v, w)?;
        }
        Ok(g)
    }

    /// `K_n` with every pair weighted `w`.
    pub fn complete(n: usize, w: f64) -> Result<Self> {
        check_weight(w).map_err(Error::InvalidGraph)?;
        WeightedGraph::from_pair_weights(n, vec![w; pair_count(n)])
    }

    /// Unweighted Erdős–Rényi graph `G(n, p)`.
    pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(out_of_range(format!("edge probability {p} not in [0, 1]")));
        }
        let weights = (0..pair_count(n))
            .map(|_| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
            .collect();
        WeightedGraph::from_pair_weights(n, weights)
    }

    /// Graph with iid uniform `[0, 1]` weights on every pair.
    pub fn random_weighted<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self> {
        let weights = (0..pair_count(n)).map(|_| rng.random::<f64>()).collect();
        WeightedGraph::from_pair_weights(n, weights)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Weights in lexicographic pair order.
    pub fn pair_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, u: usize, v: usize) -> f64 {
        if u == v {
            return 0.0;
        }
        self.weights[pair_index(self.n, u.min(v), u.max(v))]
    }

    pub fn set_weight(&mut self, u: usize, v: usize, w: f64) -> Result<()> {
        if u == v {
            return Err(Error::InvalidGraph(format!("self-loop at node {u}")));
        }
        if u >= self.n || v >= self.n {
            return Err(Error::InvalidGraph(format!(
                "pair ({u}, {v}) out of range for {} nodes",
                self.n
            )));
        }
        check_weight(w).map_err(|e| Error::InvalidGraph(format!("pair ({u}, {v}): {e}")))?;
        let idx = pair_index(self.n, u.min(v), u.max(v));
        self.weights[idx] = w;
        Ok(())
    }

    /// Sum of all edge weights.
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Edge-list text: `n <count>` followed by `u v weight` for nonzero pairs.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for ((u, v), &w) in pairs(self.n).zip(&self.weights) {
            if w != 0.0 {
                let _ = writeln!(out, "{u} {v} {}", format_real(w));
            }
        }
        out
    }
}

fn check_weight(w: f64) -> std::result::Result<(), String> {
    if w.is_finite() && (0.0..=1.0).contains(&w) {
        Ok(())
    } else {
        Err(format!("weight {w} outside [0, 1]"))
    }
}

/// Parses the edge-list format into its header node count and
/// `(u, v, weight)` lines. Weights are not range-checked here.
pub fn parse_edge_lines(text: &str) -> Result<(usize, Vec<(usize, usize, f64)>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "missing `n <node_count>` header".into(),
    })?;
    let mut head = header.split_whitespace();
    let n = match (head.next(), head.next(), head.next()) {
        (Some("n"), Some(count), None) => count.parse::<usize>().map_err(|e| Error::Parse {
            line: hline,
            msg: format!("bad node count: {e}"),
        })?,
        _ => {
            return Err(Error::Parse {
                line: hline,
                msg: format!("expected `n <node_count>`, found {header:?}"),
            })
        }
    };
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    for (line, body) in lines {
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected `u v weight`, found {body:?}"),
            });
        }
        let parse_node = |t: &str| {
            t.parse::<usize>().map_err(|e| Error::Parse {
                line,
                msg: format!("bad node id {t:?}: {e}"),
            })
        };
        let u = parse_node(toks[0])?;
        let v = parse_node(toks[1])?;
        let w = toks[2].parse::<f64>().map_err(|e| Error::Parse {
            line,
            msg: format!("bad weight {:?}: {e}", toks[2]),
        })?;
        if u >= v || v >= n {
            return Err(Error::Parse {
                line,
                msg: format!("pair ({u}, {v}) must satisfy u < v < {n}"),
            });
        }
        if !seen.insert((u, v)) {
            return Err(Error::Parse {
                line,
                msg: format!("duplicate pair ({u}, {v})"),
            });
        }
        edges.push((u, v, w));
    }
    Ok((n, edges))
}

/// Parses a weighted graph from the edge-list format.
pub fn parse_edge_list(text: &str) -> Result<WeightedGraph> {
    let (n, edges) = parse_edge_lines(text)?;
    WeightedGraph::from_edges(n, edges)
}

/// A cut `(S, complement of S)` given by the members of `S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CutQuery {
    n: usize,
    members: Vec<usize>,
}

impl CutQuery {
    /// `members` must form a proper nonempty subset of `0..n`.
    pub fn new(n: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&bad) = members.iter().find(|&&m| m >= n) {
            return Err(Error::InvalidQuery(format!("node {bad} out of range for {n} nodes")));
        }
        if members.is_empty() || members.len() >= n {
            return Err(Error::InvalidQuery(format!(
                "cut side must be a proper nonempty subset, got {} of {n} nodes",
                members.len()
            )));
        }
        Ok(CutQuery { n, members })
    }

    /// Uniformly random subset of size `s`.
    pub fn random<R: Rng + ?Sized>(n: usize, s: usize, rng: &mut R) -> Result<Self> {
        if s == 0 || s >= n {
            return Err(Error::InvalidQuery(format!("cut size {s} not in 1..{n}")));
        }
        let members = rand::seq::index::sample(rng, n, s).into_vec();
        CutQuery::new(n, members)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.members.binary_search(&node).is_ok()
    }

    /// `0/1` indicator vector of `S`.
    pub fn indicator(&self) -> Vec<f64> {
        let mut ind = vec![0.0; self.n];
        for &m in &self.members {
            ind[m] = 1.0;
        }
        ind
    }

    pub fn complement(&self) -> CutQuery {
        let members = (0..self.n).filter(|v| !self.contains(*v)).collect();
        CutQuery { n: self.n, members }
    }

    /// `s (n - s)`, the number of pairs crossing the cut.
    pub fn crossing_pairs(&self) -> usize {
        self.size() * (self.n - self.size())
    }

    pub(crate) fn check_against(&self, n: usize) -> Result<()> {
        if self.n != n {
            return Err(Error::InvalidQuery(format!(
                "query built for {} nodes, graph has {n}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Two graphs that agree everywhere except on the weight of `edge`.
#[derive(Debug, Clone)]
pub struct NeighborPair {
    pub g: WeightedGraph,
    pub g_prime: WeightedGraph,
    pub edge: (usize, usize),
    pub delta: f64,
}

impl NeighborPair {
    pub fn new(g: WeightedGraph, g_prime: WeightedGraph) -> Result<Self> {
        if g.n != g_prime.n {
            return Err(Error::NotNeighbors("node counts differ".into()));
        }
        let diffs: Vec<(usize, usize)> = pairs(g.n)
            .zip(g.weights.iter().zip(&g_prime.weights))
            .filter(|(_, (a, b))| a != b)
            .map(|(p, _)| p)
            .collect();
        let edge = match diffs.as_slice() {
            [] => (0, 1.min(g.n.saturating_sub(1))),
            [one] => *one,
            _ => {
                return Err(Error::NotNeighbors(format!(
                    "graphs differ on {} pairs",
                    diffs.len()
                )))
            }
        };
        let delta = g_prime.weight(edge.0, edge.1) - g.weight(edge.0, edge.1);
        if delta.abs() > 1.0 {
            return Err(Error::NotNeighbors(format!("weight gap {delta} exceeds 1")));
        }
        Ok(NeighborPair {
            g,
            g_prime,
            edge,
            delta,
        })
    }

    /// Picks a uniform pair `(a, b)` of `base`; `g'` raises its weight `x` to
    /// `min(x + |delta|, 1)`.
    pub fn random<R: Rng + ?Sized>(base: &WeightedGraph, delta: f64, rng: &mut R) -> Result<Self> {
        if base.n < 2 {
            return Err(Error::InvalidGraph("need at least two nodes".into()));
        }
        let a = rng.random_range(0..base.n);
        let mut b = rng.random_range(0..base.n - 1);
        if b >= a {
            b += 1;
        }
        let (a, b) = (a.min(b), a.max(b));
        let mut g_prime = base.clone();
        g_prime.set_weight(a, b, (base.weight(a, b) + delta.abs()).min(1.0))?;
        let mut pair = NeighborPair::new(base.clone(), g_prime)?;
        pair.edge = (a, b);
        Ok(pair)
    }

    /// The extreme pair: `(a, b)` weighs `0` in `g` and `1` in `g'`, so that
    /// after translation it weighs `w/n` versus `1`.
    pub fn extreme(base: &WeightedGraph, a: usize, b: usize) -> Result<Self> {
        let mut g = base.clone();
        g.set_weight(a, b, 0.0)?;
        let mut g_prime = base.clone();
        g_prime.set_weight(a, b, 1.0)?;
        let mut pair = NeighborPair::new(g, g_prime)?;
        pair.edge = (a.min(b), a.max(b));
        Ok(pair)
    }
}

/// Edge matrix for arbitrary nonnegative pair weights (lexicographic order).
pub(crate) fn edge_matrix_from_pair_weights(n: usize, weights: &[f64]) -> DMatrix<f64> {
    let mut e = DMatrix::zeros(pair_count(n), n);
    for (row, ((u, v), &w)) in pairs(n).zip(weights).enumerate() {
        let s = w.sqrt();
        e[(row, u)] = s;
        e[(row, v)] = -s;
    }
    e
}

/// Laplacian for arbitrary nonnegative pair weights (lexicographic order).
pub(crate) fn laplacian_from_pair_weights(n: usize, weights: &[f64]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    for ((u, v), &w) in pairs(n).zip(weights) {
        l[(u, v)] -= w;
        l[(v, u)] -= w;
        l[(u, u)] += w;
        l[(v, v)] += w;
    }
    l
}

/// The `C(n,2) x n` signed square-root incidence matrix `E_G`.
pub fn edge_matrix(g: &WeightedGraph) -> Result<Matrix> {
    if g.n < 2 {
        return Err(Error::InvalidGraph(format!(
            "edge matrix needs at least two nodes, got {}",
            g.n
        )));
    }
    Ok(Matrix::wrap(edge_matrix_from_pair_weights(g.n, &g.weights)))
}

/// `L_G`: weighted degrees on the diagonal, `-w_{u,v}` off the diagonal.
pub fn laplacian(g: &WeightedGraph) -> Matrix {
    Matrix::wrap(laplacian_from_pair_weights(g.n, &g.weights))
}

/// Exact weight crossing the cut.
pub fn cut_value(g: &WeightedGraph, q: &CutQuery) -> Result<f64> {
    q.check_against(g.n)?;
    let mut total = 0.0;
    for &u in q.members() {
        for v in (0..g.n).filter(|v| !q.contains(*v)) {
            total += g.weight(u, v);
        }
    }
    Ok(total)
}

/// Maps every pair weight `x` to `w/n + (1 - w/n) x`.
pub fn translate_weights(g: &WeightedGraph, w_over_n: f64) -> Result<WeightedGraph> {
    if !(w_over_n > 0.0 && w_over_n < 0.5) {
        return Err(out_of_range(format!(
            "w/n = {w_over_n} must lie in (0, 1/2); the graph is too small for these privacy parameters"
        )));
    }
    let weights = g
        .weights
        .iter()
        .map(|&x| (w_over_n + (1.0 - w_over_n) * x).min(1.0))
        .collect();
    Ok(WeightedGraph { n: g.n, weights })
}
