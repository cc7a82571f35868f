//! Numerical checks of the privacy argument on desk-scale instances.
//!
//! Densities are degenerate Gaussians handled in log space. For graphs, the
//! released row `E_H^T y` is Gaussian with covariance `L_H`, so neighboring
//! graphs are compared through their lifted Laplacians; for matrices, `B^T y`
//! is Gaussian with covariance `B^T B` after the spectral shift.
//!
//! Desk-scale graphs have `w/n >= 1/2` for any meaningful `eps`, where the
//! affine translation is undefined. The audit then lifts additively,
//! `h = w/n + x`, which keeps every property the bounds rely on: the kernel
//! is `span{1}`, every other eigenvalue is at least `w`, and neighbors differ
//! by at most one on a single pair.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::covariance::{center_rows, spectral_shift, CovarianceReleaseParams, DataMatrix};
use crate::error::{Error, Result};
use crate::graph::{
    edge_matrix_from_pair_weights, laplacian_from_pair_weights, NeighborPair, WeightedGraph,
};
use crate::laplacian::{compute_params, LaplacianReleaseParams};
use crate::linalg::{format_real, svd, symmetric_eigenvalues, Matrix};
use crate::sketch::{mix_seed, seeded_rng, GaussianStream};

/// Relative tolerance for the spectral facts.
pub const FACT_TOLERANCE: f64 = 1e-8;
/// Relative tolerance for support membership in [`DegenerateGaussian::log_pdf`].
pub const SUPPORT_TOLERANCE: f64 = 1e-6;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Zero-mean Gaussian with a possibly singular covariance, restricted to the
/// orthogonal complement of its kernel.
#[derive(Debug, Clone)]
pub struct DegenerateGaussian {
    covariance: Matrix,
    rank: usize,
    log_pseudo_det: f64,
    pseudo_inv: Matrix,
    support_basis: DMatrix<f64>,
}

impl DegenerateGaussian {
    pub fn new(covariance: Matrix) -> Result<Self> {
        if !covariance.is_symmetric(1e-10 * covariance.amax().max(1.0)) {
            return Err(Error::InvalidMatrix("covariance is not symmetric".into()));
        }
        let f = svd(&covariance)?;
        if f.numeric_rank == 0 {
            return Err(Error::AuditPrecondition("covariance is zero".into()));
        }
        Ok(DegenerateGaussian {
            rank: f.numeric_rank,
            log_pseudo_det: crate::linalg::log_pseudo_determinant(&f),
            pseudo_inv: crate::linalg::pseudo_inverse(&f),
            support_basis: f.range_basis(),
            covariance,
        })
    }

    pub fn covariance(&self) -> &Matrix {
        &self.covariance
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn log_pseudo_det(&self) -> f64 {
        self.log_pseudo_det
    }

    pub fn pseudo_det(&self) -> f64 {
        self.log_pseudo_det.exp()
    }

    pub fn pseudo_inv(&self) -> &Matrix {
        &self.pseudo_inv
    }

    pub fn support_basis(&self) -> &DMatrix<f64> {
        &self.support_basis
    }

    /// `-1/2 [rank ln 2pi + ln pdet + x^T Sigma^+ x]`; errors when `x` leaves
    /// the support by more than the relative tolerance.
    pub fn log_pdf(&self, x: &[f64]) -> Result<f64> {
        let n = self.covariance.nrows();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: x.len(),
            });
        }
        let v = DVector::from_column_slice(x);
        let projected = &self.support_basis * (self.support_basis.tr_mul(&v));
        let residual = (&v - projected).norm();
        if residual > SUPPORT_TOLERANCE * v.norm() {
            return Err(Error::OutOfSupport { residual });
        }
        Ok(self.log_pdf_unchecked(&v))
    }

    fn log_pdf_unchecked(&self, v: &DVector<f64>) -> f64 {
        let quad = v.dot(&(self.pseudo_inv.as_dmatrix() * v));
        -0.5 * (self.rank as f64 * LN_2PI + self.log_pseudo_det + quad)
    }
}

/// Pair weights the audit feeds into the density: the affine translation
/// when `w/n < 1/2`, otherwise the additive lift `w/n + x`.
pub fn audit_pair_weights(g: &WeightedGraph, params: &LaplacianReleaseParams) -> Vec<f64> {
    let c = params.w / g.n() as f64;
    g.pair_weights()
        .iter()
        .map(|&x| if c < 0.5 { c + (1.0 - c) * x } else { c + x })
        .collect()
}

/// Which member of a neighbor pair the Monte Carlo samples come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// Lifted Laplacians of a neighbor pair, oriented so that `heavy` carries the
/// larger weight on the differing pair.
struct LiftedPair {
    n: usize,
    light_weights: Vec<f64>,
    heavy_weights: Vec<f64>,
    light: DegenerateGaussian,
    heavy: DegenerateGaussian,
    swapped: bool,
    edge: (usize, usize),
}

impl LiftedPair {
    fn new(pair: &NeighborPair, params: &LaplacianReleaseParams) -> Result<Self> {
        let n = pair.g.n();
        if params.n != n {
            return Err(Error::DimensionMismatch {
                expected: params.n,
                actual: n,
            });
        }
        let mut a = audit_pair_weights(&pair.g, params);
        let mut b = audit_pair_weights(&pair.g_prime, params);
        let swapped = pair.delta < 0.0;
        if swapped {
            std::mem::swap(&mut a, &mut b);
        }
        let light = DegenerateGaussian::new(Matrix::wrap(laplacian_from_pair_weights(n, &a)))?;
        let heavy = DegenerateGaussian::new(Matrix::wrap(laplacian_from_pair_weights(n, &b)))?;
        for dg in [&light, &heavy] {
            if dg.rank != n - 1 {
                return Err(Error::AuditPrecondition(format!(
                    "Laplacian kernel has dimension {}, expected 1",
                    n - dg.rank
                )));
            }
        }
        Ok(LiftedPair {
            n,
            light_weights: a,
            heavy_weights: b,
            light,
            heavy,
            swapped,
            edge: pair.edge,
        })
    }

    /// Densities as `(G, G')` in the caller's orientation.
    fn oriented(&self) -> (&DegenerateGaussian, &DegenerateGaussian, &[f64], &[f64]) {
        if self.swapped {
            (&self.heavy, &self.light, &self.heavy_weights, &self.light_weights)
        } else {
            (&self.light, &self.heavy, &self.light_weights, &self.heavy_weights)
        }
    }
}

/// `sqrt(pdet L_G' / pdet L_G)` and whether it is at most `e^{1/w} + 1e-9`.
pub fn pdf_ratio_upper_check(pair: &NeighborPair, params: &LaplacianReleaseParams) -> Result<(f64, bool)> {
    let lifted = LiftedPair::new(pair, params)?;
    let (g, gp, _, _) = lifted.oriented();
    let ratio = (0.5 * (gp.log_pseudo_det - g.log_pseudo_det)).exp();
    Ok((ratio, ratio <= (1.0 / params.w).exp() + 1e-9))
}

/// Outcome of a Monte Carlo event check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOutcome {
    pub violations: u64,
    pub trials: u64,
    pub empirical_delta: f64,
    /// `delta0 + 3 sqrt(delta0 (1 - delta0) / trials)`.
    pub threshold: f64,
    pub pass: bool,
    /// Smallest observed `log PDF_sampled(x) - log PDF_other(x) + eps0`.
    pub worst_margin: f64,
}

pub fn binomial_threshold(delta0: f64, trials: u64) -> f64 {
    delta0 + 3.0 * (delta0 * (1.0 - delta0) / trials as f64).sqrt()
}

fn mc_outcome(violations: u64, trials: u64, delta0: f64, worst_margin: f64) -> McOutcome {
    let empirical_delta = violations as f64 / trials as f64;
    let threshold = binomial_threshold(delta0, trials);
    McOutcome {
        violations,
        trials,
        empirical_delta,
        threshold,
        pass: empirical_delta <= threshold,
        worst_margin,
    }
}

/// Counts violations over `trials` seeded trials in parallel. Each trial
/// returns its margin; a negative margin is a violation.
fn count_violations<F>(trials: u64, seed: u64, trial: F) -> (u64, f64)
where
    F: Fn(&mut GaussianStream) -> f64 + Sync,
{
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut stream = GaussianStream::new(mix_seed(seed, t));
            let margin = trial(&mut stream);
            (u64::from(margin < 0.0), margin)
        })
        .reduce(|| (0, f64::INFINITY), |a, b| (a.0 + b.0, a.1.min(b.1)))
}

/// Samples `x = E^T y` from one side and counts draws where
/// `PDF_sampled(x) < e^{-eps0} PDF_other(x)`.
pub fn pdf_ratio_lower_mc(
    pair: &NeighborPair,
    params: &LaplacianReleaseParams,
    trials: u64,
    seed: u64,
    side: Side,
) -> Result<McOutcome> {
    if trials == 0 {
        return Err(Error::AuditPrecondition("need at least one trial".into()));
    }
    let lifted = LiftedPair::new(pair, params)?;
    let (g, gp, gw, gpw) = lifted.oriented();
    let (sampled, other, weights) = match side {
        Side::First => (g, gp, gw),
        Side::Second => (gp, g, gpw),
    };
    let e_t = edge_matrix_from_pair_weights(lifted.n, weights).transpose();
    let eps0 = params.epsilon0();
    let m = e_t.ncols();
    let (violations, worst) = count_violations(trials, seed, |stream| {
        let mut y = DVector::zeros(m);
        stream.fill(y.as_mut_slice());
        let x = &e_t * y;
        sampled.log_pdf_unchecked(&x) - other.log_pdf_unchecked(&x) + eps0
    });
    Ok(mc_outcome(violations, trials, params.delta0(), worst))
}

/// One spectral fact evaluated on a pair: `worst_margin >= -tolerance` passes.
#[derive(Debug, Clone, PartialEq)]
pub struct FactResult {
    pub name: String,
    pub pass: bool,
    pub worst_margin: f64,
}

impl FactResult {
    fn new(name: &str, margin: f64, scale: f64) -> Self {
        FactResult {
            name: name.to_string(),
            pass: margin >= -FACT_TOLERANCE * scale.max(1.0),
            worst_margin: margin,
        }
    }

    /// Keeps the worse of two results for the same fact.
    pub fn merge(&mut self, other: &FactResult) {
        self.pass &= other.pass;
        self.worst_margin = self.worst_margin.min(other.worst_margin);
    }
}

/// Names reported by [`spectral_facts_check`], in order.
pub const GRAPH_FACTS: [&str; 6] = [
    "weyl",
    "trace_gap",
    "inverse_order",
    "kernel_floor",
    "kernel_is_ones",
    "cross_term",
];

/// Evaluates the eigenvalue facts on the lifted pair, with `G'` the heavier
/// graph: `lambda_i^2 >= sigma_i^2`, trace gap at most 2, `L_G'^+ <= L_G^+`
/// on 100 sampled `x` orthogonal to `1`, every nonzero eigenvalue at least
/// `w`, `1` spanning the kernel, and `e_ab^T L_G'^+ e_ab <= 2/w`.
pub fn spectral_facts_check(
    pair: &NeighborPair,
    params: &LaplacianReleaseParams,
    seed: u64,
) -> Result<Vec<FactResult>> {
    let lifted = LiftedPair::new(pair, params)?;
    let n = lifted.n;
    let sigma2 = symmetric_eigenvalues(lifted.light.covariance())?;
    let lambda2 = symmetric_eigenvalues(lifted.heavy.covariance())?;
    let scale = lambda2[0];

    let weyl = sigma2
        .iter()
        .zip(&lambda2)
        .map(|(s, l)| l - s)
        .fold(f64::INFINITY, f64::min);
    let trace_gap: f64 = lambda2.iter().sum::<f64>() - sigma2.iter().sum::<f64>();

    let mut rng = seeded_rng(seed);
    let light_inv = lifted.light.pseudo_inv().as_dmatrix();
    let heavy_inv = lifted.heavy.pseudo_inv().as_dmatrix();
    let mut inverse_order = f64::INFINITY;
    for _ in 0..100 {
        let mut x = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mean = x.mean();
        x.add_scalar_mut(-mean);
        let norm2 = x.norm_squared();
        let gap = x.dot(&(light_inv * &x)) - x.dot(&(heavy_inv * &x));
        inverse_order = inverse_order.min(gap / norm2);
    }

    // Smallest nonzero eigenvalue of both lifted Laplacians against w.
    let floor = sigma2[n - 2].min(lambda2[n - 2]) - params.w;
    let ones = DVector::from_element(n, 1.0);
    let kernel_residual = (lifted.light.covariance().as_dmatrix() * &ones)
        .norm()
        .max((lifted.heavy.covariance().as_dmatrix() * &ones).norm());

    let (a, b) = lifted.edge;
    let mut e_ab = DVector::zeros(n);
    e_ab[a] = 1.0;
    e_ab[b] = -1.0;
    let cross = 2.0 / params.w - e_ab.dot(&(heavy_inv * &e_ab));

    Ok(vec![
        FactResult::new(GRAPH_FACTS[0], weyl, scale),
        FactResult::new(GRAPH_FACTS[1], 2.0 - trace_gap, scale),
        FactResult::new(GRAPH_FACTS[2], inverse_order, 1.0 / params.w),
        FactResult::new(GRAPH_FACTS[3], floor, params.w),
        FactResult::new(GRAPH_FACTS[4], -kernel_residual, scale),
        FactResult::new(GRAPH_FACTS[5], cross, 1.0 / params.w),
    ])
}

/// Checks that `a` and `a_prime` differ on at most one row, by a vector of
/// norm at most one, and returns that row index and difference.
pub fn row_difference(a: &DataMatrix, a_prime: &DataMatrix) -> Result<(usize, DVector<f64>)> {
    if a.n() != a_prime.n() || a.d() != a_prime.d() {
        return Err(Error::NotNeighbors("shapes differ".into()));
    }
    let diff = a_prime.matrix().as_dmatrix() - a.matrix().as_dmatrix();
    let rows: Vec<usize> = (0..a.n()).filter(|&i| diff.row(i).iter().any(|&v| v != 0.0)).collect();
    let i = match rows.as_slice() {
        [] => 0,
        [one] => *one,
        _ => return Err(Error::NotNeighbors(format!("matrices differ on {} rows", rows.len()))),
    };
    let v = diff.row(i).transpose();
    if v.norm() > 1.0 + 1e-12 {
        return Err(Error::NotNeighbors(format!("row difference has norm {}", v.norm())));
    }
    Ok((i, v))
}

/// A neighbor of `a`: one uniform row moved by `radius * u` with `u` uniform
/// on the sphere; `radius` is uniform on `[0, 1]` when not given.
pub fn random_row_neighbor<R: Rng + ?Sized>(a: &DataMatrix, radius: Option<f64>, rng: &mut R) -> Result<DataMatrix> {
    let d = a.d();
    let i = rng.random_range(0..a.n());
    let mut u = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
    u /= u.norm();
    let rho = radius.unwrap_or_else(|| rng.random::<f64>());
    let mut m = a.matrix().as_dmatrix().clone();
    let new_row = m.row(i) + (u * rho).transpose();
    m.set_row(i, &new_row);
    Ok(DataMatrix::new(Matrix::new(m)?))
}

/// Directed gap sums between the singular spectra of neighbors:
/// `sum over lambda_i > sigma_i of (lambda_i - sigma_i)` and the reverse.
pub fn lindskii_check(a: &DataMatrix, a_prime: &DataMatrix) -> Result<(f64, f64, bool)> {
    row_difference(a, a_prime)?;
    let sigma = svd(a.matrix())?.singular_values;
    let lambda = svd(a_prime.matrix())?.singular_values;
    let mut big = 0.0;
    let mut small = 0.0;
    for (s, l) in sigma.iter().zip(&lambda) {
        if l > s {
            big += l - s;
        } else {
            small += s - l;
        }
    }
    let ok = big <= 1.0 + FACT_TOLERANCE && small <= 1.0 + FACT_TOLERANCE;
    Ok((big, small, ok))
}

/// Shifted pair and its Gram matrices.
struct ShiftedPair {
    b: DMatrix<f64>,
    b_prime: DMatrix<f64>,
    a_c: DMatrix<f64>,
    a_prime_c: DMatrix<f64>,
    gram: DMatrix<f64>,
    gram_prime: DMatrix<f64>,
}

impl ShiftedPair {
    fn new(a: &DataMatrix, a_prime: &DataMatrix, w: f64) -> Result<Self> {
        row_difference(a, a_prime)?;
        let a_c = center_rows(a);
        let a_prime_c = center_rows(a_prime);
        let b = spectral_shift(&a_c, w)?.matrix().as_dmatrix().clone();
        let b_prime = spectral_shift(&a_prime_c, w)?.matrix().as_dmatrix().clone();
        let gram = b.tr_mul(&b);
        let gram_prime = b_prime.tr_mul(&b_prime);
        Ok(ShiftedPair {
            b,
            b_prime,
            a_c: a_c.matrix().as_dmatrix().clone(),
            a_prime_c: a_prime_c.matrix().as_dmatrix().clone(),
            gram,
            gram_prime,
        })
    }
}

fn full_rank_density(gram: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
    let chol = gram
        .clone()
        .cholesky()
        .ok_or_else(|| Error::AuditPrecondition("shifted Gram matrix is not positive definite".into()))?;
    let log_det = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    Ok((log_det, chol.inverse()))
}

/// Result of a covariance audit on one neighbor pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceAudit {
    /// `sqrt(det(B'^T B') / det(B^T B))`.
    pub det_ratio: f64,
    /// `eps0/2 - |ln det_ratio|`.
    pub det_margin: f64,
    pub det_ok: bool,
    pub first: McOutcome,
    pub second: McOutcome,
}

/// Two-sided determinant bound and the event `|log PDF_B - log PDF_B'| <= eps0`
/// sampled from both members of the shifted pair.
pub fn covariance_ratio_audit(
    a: &DataMatrix,
    a_prime: &DataMatrix,
    params: &CovarianceReleaseParams,
    trials: u64,
    seed: u64,
) -> Result<CovarianceAudit> {
    if trials == 0 {
        return Err(Error::AuditPrecondition("need at least one trial".into()));
    }
    let sp = ShiftedPair::new(a, a_prime, params.w)?;
    let (log_det, inv) = full_rank_density(&sp.gram)?;
    let (log_det_p, inv_p) = full_rank_density(&sp.gram_prime)?;
    let half_log_ratio = 0.5 * (log_det_p - log_det);
    let eps0 = params.epsilon0();
    let det_margin = eps0 / 2.0 - half_log_ratio.abs();

    // log PDF_B(x) - log PDF_B'(x) for x in R^d.
    let log_ratio = |x: &DVector<f64>| half_log_ratio - 0.5 * (x.dot(&(&inv * x)) - x.dot(&(&inv_p * x)));
    let run = |b: &DMatrix<f64>, salt: u64| {
        let bt = b.transpose();
        let n = b.nrows();
        let (violations, worst) = count_violations(trials, mix_seed(seed, salt), |stream| {
            let mut y = DVector::zeros(n);
            stream.fill(y.as_mut_slice());
            eps0 - log_ratio(&(&bt * y)).abs()
        });
        mc_outcome(violations, trials, params.delta0(), worst)
    };
    Ok(CovarianceAudit {
        det_ratio: half_log_ratio.exp(),
        det_margin,
        det_ok: det_margin >= 0.0,
        first: run(&sp.b, 0),
        second: run(&sp.b_prime, 1),
    })
}

/// Names reported by [`covariance_facts_check`], in order.
pub const COVARIANCE_FACTS: [&str; 4] = ["gram_gap", "norm_comparability", "lindskii_big", "lindskii_small"];

/// The Gram-gap identity `B'^T B' - B^T B = A'^T E + E^T A` on centered
/// inputs, `|Bz| <= (1 + 1/w)|B'z|` both ways on 100 sampled `z`, and both
/// Lindskii sums at most one.
pub fn covariance_facts_check(
    a: &DataMatrix,
    a_prime: &DataMatrix,
    w: f64,
    seed: u64,
) -> Result<Vec<FactResult>> {
    let sp = ShiftedPair::new(a, a_prime, w)?;
    let e = &sp.a_prime_c - &sp.a_c;
    let predicted = sp.a_prime_c.tr_mul(&e) + e.tr_mul(&sp.a_c);
    let actual = &sp.gram_prime - &sp.gram;
    let scale = sp.gram.amax();
    let gram_gap = -(actual - predicted).amax();

    let mut rng = seeded_rng(seed);
    let d = a.d();
    let factor = 1.0 + 1.0 / w;
    let mut comparability = f64::INFINITY;
    for _ in 0..100 {
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let bz = (&sp.b * &z).norm();
        let bpz = (&sp.b_prime * &z).norm();
        comparability = comparability.min((factor * bpz - bz) / bz).min((factor * bz - bpz) / bpz);
    }

    let (big, small, _) = lindskii_check(a, a_prime)?;
    Ok(vec![
        FactResult::new(COVARIANCE_FACTS[0], gram_gap, scale),
        FactResult::new(COVARIANCE_FACTS[1], comparability, 1.0),
        FactResult::new(COVARIANCE_FACTS[2], 1.0 - big, 1.0),
        FactResult::new(COVARIANCE_FACTS[3], 1.0 - small, 1.0),
    ])
}

/// `(norm - w) / (1 - w/n)`: the count of ones behind a translated bit
/// vector's squared norm.
pub fn invert_bit_norm(norm: f64, params: &LaplacianReleaseParams) -> f64 {
    (norm - params.w) / (1.0 - params.w_over_n())
}

/// Publishes `X = M d'` for the translated bits `d'` (`0 -> sqrt(w/n)`,
/// `1 -> 1`) and inverts `(1/r)|X|^2` into an estimate of the number of ones.
/// Returns `(estimate, true_count)`.
pub fn univariate_demo(bits: &[bool], eps: f64, delta: f64, eta: f64, nu: f64, seed: u64) -> Result<(f64, usize)> {
    let params = compute_params(eps, delta, eta, nu, bits.len())?;
    let low = params.w_over_n().sqrt();
    let d: Vec<f64> = bits.iter().map(|&b| if b { 1.0 } else { low }).collect();
    let mut stream = GaussianStream::new(seed);
    let mut row = vec![0.0; d.len()];
    let mut norm = 0.0;
    for _ in 0..params.r {
        stream.fill(&mut row);
        let x: f64 = row.iter().zip(&d).map(|(m, v)| m * v).sum();
        norm += x * x;
    }
    norm /= params.r as f64;
    Ok((invert_bit_norm(norm, &params), bits.iter().filter(|&&b| b).count()))
}

/// Aggregated audit findings.
#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub epsilon0: f64,
    pub delta0: f64,
    /// Largest determinant ratio seen.
    pub det_ratio: f64,
    pub upper_bound_ok: bool,
    /// Largest empirical violation rate over both sampling sides.
    pub empirical_delta: f64,
    pub delta_threshold: f64,
    pub lower_bound_ok: bool,
    pub trials: u64,
    pub pairs: usize,
    pub spectral_facts: Vec<FactResult>,
}

impl AuditReport {
    pub fn all_pass(&self) -> bool {
        self.upper_bound_ok && self.lower_bound_ok && self.spectral_facts.iter().all(|f| f.pass)
    }

    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "epsilon0={}", format_real(self.epsilon0));
        let _ = writeln!(out, "delta0={}", format_real(self.delta0));
        let _ = writeln!(out, "det_ratio={}", format_real(self.det_ratio));
        let _ = writeln!(out, "upper_bound_ok={}", self.upper_bound_ok);
        let _ = writeln!(out, "empirical_delta={}", format_real(self.empirical_delta));
        let _ = writeln!(out, "delta_threshold={}", format_real(self.delta_threshold));
        let _ = writeln!(out, "lower_bound_ok={}", self.lower_bound_ok);
        let _ = writeln!(out, "trials={}", self.trials);
        let _ = writeln!(out, "pairs={}", self.pairs);
        for f in &self.spectral_facts {
            let _ = writeln!(out, "fact.{}.pass={}", f.name, f.pass);
            let _ = writeln!(out, "fact.{}.worst_margin={}", f.name, format_real(f.worst_margin));
        }
        let _ = writeln!(out, "all_pass={}", self.all_pass());
        out
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec![
            "epsilon0", "delta0", "det_ratio", "upper_bound_ok", "empirical_delta", "delta_threshold",
            "lower_bound_ok", "trials", "pairs",
        ]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
        for f in &self.spectral_facts {
            cols.push(format!("{}_pass", f.name));
            cols.push(format!("{}_margin", f.name));
        }
        cols.join(",")
    }

    pub fn to_csv_row(&self) -> String {
        let mut cols = vec![
            format_real(self.epsilon0),
            format_real(self.delta0),
            format_real(self.det_ratio),
            self.upper_bound_ok.to_string(),
            format_real(self.empirical_delta),
            format_real(self.delta_threshold),
            self.lower_bound_ok.to_string(),
            self.trials.to_string(),
            self.pairs.to_string(),
        ];
        for f in &self.spectral_facts {
            cols.push(f.pass.to_string());
            cols.push(format_real(f.worst_margin));
        }
        cols.join(",")
    }
}

fn merge_facts(acc: &mut Vec<FactResult>, new: Vec<FactResult>) {
    if acc.is_empty() {
        *acc = new;
    } else {
        for (a, b) in acc.iter_mut().zip(&new) {
            a.merge(b);
        }
    }
}

/// Upper bound and spectral facts on `pairs` random neighbor pairs of random
/// weighted graphs on `params.n` nodes, plus the Monte Carlo event from both
/// sides of the extreme pair on an empty base graph.
pub fn audit_graph(params: &LaplacianReleaseParams, pairs: usize, trials: u64, seed: u64) -> Result<AuditReport> {
    let n = params.n;
    let mut rng = seeded_rng(seed);
    let mut det_ratio: f64 = 1.0;
    let mut upper_ok = true;
    let mut facts = Vec::new();
    for k in 0..pairs {
        let base = WeightedGraph::random_weighted(n, &mut rng)?;
        let pair = NeighborPair::random(&base, 1.0, &mut rng)?;
        let (ratio, ok) = pdf_ratio_upper_check(&pair, params)?;
        det_ratio = det_ratio.max(ratio);
        upper_ok &= ok;
        merge_facts(&mut facts, spectral_facts_check(&pair, params, mix_seed(seed, k as u64))?);
    }
    let extreme = NeighborPair::extreme(&WeightedGraph::new(n)?, 0, 1)?;
    let (ratio, ok) = pdf_ratio_upper_check(&extreme, params)?;
    det_ratio = det_ratio.max(ratio);
    upper_ok &= ok;
    let first = pdf_ratio_lower_mc(&extreme, params, trials, mix_seed(seed, u64::MAX - 1), Side::First)?;
    let second = pdf_ratio_lower_mc(&extreme, params, trials, mix_seed(seed, u64::MAX), Side::Second)?;
    Ok(AuditReport {
        epsilon0: params.epsilon0(),
        delta0: params.delta0(),
        det_ratio,
        upper_bound_ok: upper_ok,
        empirical_delta: first.empirical_delta.max(second.empirical_delta),
        delta_threshold: first.threshold,
        lower_bound_ok: first.pass && second.pass,
        trials,
        pairs: pairs + 1,
        spectral_facts: facts,
    })
}

/// Covariance audit over `pairs` random `n x d` neighbor pairs: determinant
/// bound and facts on every pair, Monte Carlo on the first.
pub fn audit_covariance(
    n: usize,
    d: usize,
    params: &CovarianceReleaseParams,
    pairs: usize,
    trials: u64,
    seed: u64,
) -> Result<AuditReport> {
    if pairs == 0 {
        return Err(Error::AuditPrecondition("need at least one pair".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut det_ratio: f64 = 1.0;
    let mut upper_ok = true;
    let mut facts = Vec::new();
    let mut mc = None;
    for k in 0..pairs {
        let a = DataMatrix::random(n, d, &mut rng)?;
        let a_prime = random_row_neighbor(&a, Some(1.0), &mut rng)?;
        let trials_here = if k == 0 { trials } else { 1 };
        let audit = covariance_ratio_audit(&a, &a_prime, params, trials_here, mix_seed(seed, k as u64))?;
        det_ratio = det_ratio.max(audit.det_ratio.max(1.0 / audit.det_ratio));
        upper_ok &= audit.det_ok;
        if k == 0 {
            mc = Some((audit.first, audit.second));
        }
        merge_facts(&mut facts, covariance_facts_check(&a, &a_prime, params.w, mix_seed(seed, k as u64))?);
    }
    let (first, second) = mc.expect("at least one pair");
    Ok(AuditReport {
        epsilon0: params.epsilon0(),
        delta0: params.delta0(),
        det_ratio,
        upper_bound_ok: upper_ok,
        empirical_delta: first.empirical_delta.max(second.empirical_delta),
        delta_threshold: first.threshold,
        lower_bound_ok: first.pass && second.pass,
        trials,
        pairs,
        spectral_facts: facts,
    })
}
