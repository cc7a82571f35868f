//! Comparison mechanisms: Laplace noise on each cut answer, randomized
//! response on every pair, and the edge-density guess.

use rand::Rng;

use crate::error::{out_of_range, Error, Result};
use crate::graph::{pair_count, pairs, CutQuery, WeightedGraph};
use crate::linalg::format_real;
use crate::sketch::seeded_rng;

/// One `Laplace(0, scale)` sample by inverting the CDF.
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        if u.abs() < 0.5 {
            return -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln();
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(out_of_range(format!("eps = {eps} must be positive")));
    }
    Ok(())
}

/// `Phi_G(S) + Lap(1/eps)`.
pub fn laplace_cut(g: &WeightedGraph, q: &CutQuery, eps: f64, seed: u64) -> Result<f64> {
    check_eps(eps)?;
    let phi = crate::graph::cut_value(g, q)?;
    Ok(phi + sample_laplace(&mut seeded_rng(seed), 1.0 / eps))
}

/// Total edge weight plus `Lap(1/eps)`.
pub fn noisy_edge_total(g: &WeightedGraph, eps: f64, seed: u64) -> Result<f64> {
    check_eps(eps)?;
    Ok(g.total_weight() + sample_laplace(&mut seeded_rng(seed), 1.0 / eps))
}

/// `m / C(n,2) * s (n - s)`: the cut a graph with `m` uniformly spread edges
/// would have.
pub fn expected_cut_guess(m_noisy: f64, n: usize, q: &CutQuery) -> Result<f64> {
    q.check_against(n)?;
    let s = q.size() as f64;
    Ok(m_noisy / pair_count(n) as f64 * s * (n as f64 - s))
}

/// Every pair replaced by an independent sign with `Pr[+1] = (1 + eps w)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RrGraph {
    n: usize,
    signs: Vec<i8>,
    eps: f64,
}

impl RrGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Signs in lexicographic pair order.
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// Post-processing `{-1, +1} -> {0, 1}`.
    pub fn to_nonnegative(&self) -> WeightedGraph {
        let weights = self.signs.iter().map(|&s| f64::from((s + 1) / 2)).collect();
        WeightedGraph::from_pair_weights(self.n, weights).expect("0/1 weights are valid")
    }

    /// Edge-list text listing every pair with weight `-1` or `1`.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n {}\n", self.n);
        for ((u, v), &s) in pairs(self.n).zip(&self.signs) {
            out.push_str(&format!("{u} {v} {}\n", format_real(f64::from(s))));
        }
        out
    }

    /// Reads the format written by [`RrGraph::to_edge_list`]; every pair must
    /// be listed with weight `-1` or `1`.
    pub fn from_edge_list(text: &str, eps: f64) -> Result<Self> {
        let (n, lines) = crate::graph::parse_edge_lines(text)?;
        if lines.len() != pair_count(n) {
            return Err(Error::InvalidGraph(format!(
                "randomized response output lists {} pairs, expected {}",
                lines.len(),
                pair_count(n)
            )));
        }
        let mut signs = vec![0i8; pair_count(n)];
        for (u, v, w) in lines {
            let s = match w {
                x if x == 1.0 => 1,
                x if x == -1.0 => -1,
                other => {
                    return Err(Error::InvalidGraph(format!(
                        "pair ({u}, {v}) has weight {other}, expected -1 or 1"
                    )))
                }
            };
            signs[crate::graph::pair_index(n, u, v)] = s;
        }
        Ok(RrGraph { n, signs, eps })
    }
}

/// Requires `0 < eps <= 1` so that `(1 + eps w)/2` stays a probability.
pub fn randomized_response_release(g: &WeightedGraph, eps: f64, seed: u64) -> Result<RrGraph> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(out_of_range(format!("randomized response needs 0 < eps <= 1, got {eps}")));
    }
    let mut rng = seeded_rng(seed);
    let signs = g
        .pair_weights()
        .iter()
        .map(|&w| {
            let p = (1.0 + eps * w) / 2.0;
            if rng.random::<f64>() < p {
                1
            } else {
                -1
            }
        })
        .collect();
    Ok(RrGraph {
        n: g.n(),
        signs,
        eps,
    })
}

/// `(1/eps) * sum of signs across the cut`.
pub fn rr_cut_estimate(h: &RrGraph, q: &CutQuery) -> Result<f64> {
    q.check_against(h.n)?;
    let mut total = 0i64;
    for &u in q.members() {
        for v in (0..h.n).filter(|&v| !q.contains(v)) {
            let idx = crate::graph::pair_index(h.n, u.min(v), u.max(v));
            total += i64::from(h.signs[idx]);
        }
    }
    Ok(total as f64 / h.eps)
}

/// Error bound `sqrt(2 ln(1/nu) s(n-s)) / eps`.
pub fn rr_error_bound(n: usize, s: usize, eps: f64, nu: f64) -> f64 {
    (2.0 * (1.0 / nu).ln() * (s * (n - s)) as f64).sqrt() / eps
}
