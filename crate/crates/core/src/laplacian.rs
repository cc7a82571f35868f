//! Sanitized Laplacian release and cut-query answering.
//!
//! The release lifts every pair weight to at least `w/n`, projects the edge
//! matrix with an `r x C(n,2)` Gaussian sketch, and publishes
//! `L~ = (1/r) E_H^T M^T M E_H`. Cut queries are answered from `L~` and the
//! public parameters alone.

use nalgebra::{DMatrix, DVector};

use crate::error::{out_of_range, Error, Result};
use crate::graph::{pair_count, pairs, translate_weights, CutQuery, WeightedGraph};
use crate::linalg::Matrix;
use crate::sketch::{check_budget, sketch_rows, GaussianStream};

/// Parameters of a Laplacian release on `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplacianReleaseParams {
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    pub nu: f64,
    pub r: usize,
    pub w: f64,
    pub n: usize,
}

/// `w = sqrt(32 r ln(2/delta)) / eps * ln(4r/delta)`.
pub fn laplacian_shift(eps: f64, delta: f64, r: usize) -> f64 {
    let r = r as f64;
    (32.0 * r * (2.0 / delta).ln()).sqrt() / eps * (4.0 * r / delta).ln()
}

pub(crate) fn check_privacy_ranges(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(out_of_range(format!("eps = {eps} must be positive")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(out_of_range(format!("delta = {delta} must lie in (0, 1)")));
    }
    Ok(())
}

/// Sketch height for a release: `0 < eta <= 1/2`.
pub(crate) fn release_rows(eta: f64, nu: f64) -> Result<usize> {
    if !(eta > 0.0 && eta <= 0.5) {
        return Err(out_of_range(format!("eta = {eta} must lie in (0, 1/2]")));
    }
    sketch_rows(eta, nu)
}

/// Evaluates `r` and `w` and checks `w > 2` and `w/n < 1/2`.
pub fn compute_params(eps: f64, delta: f64, eta: f64, nu: f64, n: usize) -> Result<LaplacianReleaseParams> {
    let params = LaplacianReleaseParams::without_size_check(eps, delta, eta, nu, n)?;
    if params.w_over_n() >= 0.5 {
        return Err(Error::GraphTooSmall {
            n,
            min_n: params.min_nodes(),
            w_over_n: params.w_over_n(),
        });
    }
    Ok(params)
}

impl LaplacianReleaseParams {
    /// Same formulas as [`compute_params`] without the `w/n < 1/2` requirement.
    /// Audits on desk-scale graphs use this.
    pub fn without_size_check(eps: f64, delta: f64, eta: f64, nu: f64, n: usize) -> Result<Self> {
        check_privacy_ranges(eps, delta)?;
        if n < 2 {
            return Err(Error::InvalidGraph(format!("need at least two nodes, got {n}")));
        }
        let r = release_rows(eta, nu)?;
        let w = laplacian_shift(eps, delta, r);
        if w <= 2.0 {
            return Err(Error::ParametersTooWeak { w });
        }
        Ok(LaplacianReleaseParams {
            eps,
            delta,
            eta,
            nu,
            r,
            w,
            n,
        })
    }

    pub fn w_over_n(&self) -> f64 {
        self.w / self.n as f64
    }

    /// Smallest node count with `w/n < 1/2`.
    pub fn min_nodes(&self) -> usize {
        (2.0 * self.w).floor() as usize + 1
    }

    /// Per-row privacy budget `eps / sqrt(4 r ln(2/delta))`.
    pub fn epsilon0(&self) -> f64 {
        self.eps / (4.0 * self.r as f64 * (2.0 / self.delta).ln()).sqrt()
    }

    /// Per-row failure probability `delta / 2r`.
    pub fn delta0(&self) -> f64 {
        self.delta / (2.0 * self.r as f64)
    }

    /// Additive error bound `2 eta w s` for a cut side of size `s`.
    pub fn tau(&self, s: usize) -> f64 {
        2.0 * self.eta * self.w * s as f64
    }
}

/// A released Laplacian with the public parameters needed to query it.
#[derive(Debug, Clone)]
pub struct SanitizedLaplacian {
    l_tilde: Matrix,
    params: LaplacianReleaseParams,
    seed: u64,
}

impl SanitizedLaplacian {
    /// Validates a published matrix: `n x n`, symmetric, rows summing to zero.
    pub fn from_parts(l_tilde: Matrix, params: LaplacianReleaseParams, seed: u64) -> Result<Self> {
        if l_tilde.nrows() != params.n || l_tilde.ncols() != params.n {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                actual: l_tilde.nrows(),
            });
        }
        if !l_tilde.is_symmetric(1e-12) {
            return Err(Error::InvalidMatrix("released Laplacian is not symmetric".into()));
        }
        let scale = l_tilde.amax().max(1.0);
        let row_sums = l_tilde.as_dmatrix() * DVector::from_element(params.n, 1.0);
        if row_sums.amax() > 1e-8 * scale {
            return Err(Error::InvalidMatrix("released Laplacian does not annihilate 1".into()));
        }
        Ok(SanitizedLaplacian {
            l_tilde,
            params,
            seed,
        })
    }

    pub fn l_tilde(&self) -> &Matrix {
        &self.l_tilde
    }

    pub fn params(&self) -> &LaplacianReleaseParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.params.n
    }
}

/// Working-set size of a release: one sketch row, the projection and `L~`.
pub fn release_bytes(n: usize, r: usize) -> u64 {
    let n = n as u64;
    8 * (pair_count(n as usize) as u64 + (r as u64).saturating_mul(n) + n * n)
}

/// `O = M E_H` for the already-translated graph `h`, an `r x n` matrix.
///
/// Sketch rows are streamed from `seed` in the same order [`crate::sketch::sample_sketch`]
/// materializes them, and the product exploits the two nonzeros per row of `E_H`.
pub fn projected_edge_matrix(h: &WeightedGraph, r: usize, seed: u64) -> Matrix {
    let n = h.n();
    let coef: Vec<f64> = h.pair_weights().iter().map(|w| w.sqrt()).collect();
    let mut stream = GaussianStream::new(seed);
    let mut row_buf = vec![0.0; pair_count(n)];
    let mut o = DMatrix::zeros(r, n);
    for k in 0..r {
        stream.fill(&mut row_buf);
        for (((u, v), &y), &c) in pairs(n).zip(&row_buf).zip(&coef) {
            let t = y * c;
            o[(k, u)] += t;
            o[(k, v)] -= t;
        }
    }
    Matrix::wrap(o)
}

/// Releases `L~` for `g`. Deterministic in `seed`.
pub fn release_laplacian(g: &WeightedGraph, params: &LaplacianReleaseParams, seed: u64) -> Result<SanitizedLaplacian> {
    release_laplacian_within(g, params, seed, None)
}

/// [`release_laplacian`] that refuses working sets above `budget` bytes.
pub fn release_laplacian_within(
    g: &WeightedGraph,
    params: &LaplacianReleaseParams,
    seed: u64,
    budget: Option<u64>,
) -> Result<SanitizedLaplacian> {
    if g.n() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            actual: g.n(),
        });
    }
    check_budget(release_bytes(params.n, params.r), budget)?;
    let h = translate_weights(g, params.w_over_n())?;
    let o = projected_edge_matrix(&h, params.r, seed);
    let l_tilde = o.tr_mul(o.as_dmatrix()) / params.r as f64;
    Ok(SanitizedLaplacian {
        l_tilde: Matrix::wrap(l_tilde),
        params: *params,
        seed,
    })
}

/// `R(S) = (1_S^T L~ 1_S - w s(n-s)/n) / (1 - w/n)`.
pub fn answer_cut_query(sl: &SanitizedLaplacian, q: &CutQuery) -> Result<f64> {
    q.check_against(sl.n())?;
    let p = &sl.params;
    let quad = sl.l_tilde.quadratic_form(&q.indicator())?;
    let n = p.n as f64;
    let s = q.size() as f64;
    Ok((quad - p.w * s * (n - s) / n) / (1.0 - p.w_over_n()))
}

/// Outcome of simulating the per-node protocol for one sketch row.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolRun {
    /// Output published by each node.
    pub outputs: Vec<f64>,
    /// Fresh Gaussian samples drawn by each node.
    pub draws_per_node: Vec<usize>,
    /// Point-to-point messages sent.
    pub messages: usize,
}

struct Node {
    id: usize,
    drawn: Vec<f64>,
    inbox: Vec<(usize, f64)>,
}

/// Simulates the distributed computation of one row `Y^T E_H`.
///
/// Node `i` draws `n - i - 1` samples and sends its `j`-th sample to node
/// `i + j`; the sample on pair `{i, k}` is drawn by the lower endpoint, so the
/// draws follow the lexicographic pair order of the sketch stream. Each node
/// then outputs `sum_k sign * x_{ik} * sqrt(h_{ik})` with sign `-1` for
/// samples received from lower-indexed nodes.
pub fn distributed_release_row(
    g: &WeightedGraph,
    params: &LaplacianReleaseParams,
    seed: u64,
) -> Result<ProtocolRun> {
    if g.n() != params.n {
        return Err(Error::DimensionMismatch {
            expected: params.n,
            actual: g.n(),
        });
    }
    let h = translate_weights(g, params.w_over_n())?;
    let n = h.n();
    let mut stream = GaussianStream::new(seed);
    let mut nodes: Vec<Node> = (0..n)
        .map(|id| Node {
            id,
            drawn: Vec::new(),
            inbox: Vec::new(),
        })
        .collect();

    // Nodes draw in index order, which replays the shared stream.
    for node in nodes.iter_mut() {
        node.drawn = (0..n - node.id - 1).map(|_| stream.next_normal()).collect();
    }
    let mut messages = 0;
    for i in 0..n {
        for j in 1..n - i {
            let x = nodes[i].drawn[j - 1];
            nodes[i + j].inbox.push((i, x));
            messages += 1;
        }
    }
    for node in &nodes {
        if node.inbox.len() != node.id {
            return Err(out_of_range(format!(
                "node {} received {} values, expected {}",
                node.id,
                node.inbox.len(),
                node.id
            )));
        }
    }

    let outputs = nodes
        .iter()
        .map(|node| {
            let incoming: f64 = node
                .inbox
                .iter()
                .map(|&(from, x)| -x * h.weight(from, node.id).sqrt())
                .sum();
            let outgoing: f64 = node
                .drawn
                .iter()
                .enumerate()
                .map(|(j, &x)| x * h.weight(node.id, node.id + j + 1).sqrt())
                .sum();
            incoming + outgoing
        })
        .collect();
    Ok(ProtocolRun {
        outputs,
        draws_per_node: nodes.iter().map(|nd| nd.drawn.len()).collect(),
        messages,
    })
}
