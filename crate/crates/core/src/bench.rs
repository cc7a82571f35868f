//! Error comparison of the cut-query mechanisms on random graphs.
//!
//! For every seed the harness draws fresh cuts of each requested size and
//! answers them with one sanitized Laplacian, one randomized-response graph,
//! per-query Laplace noise, and the edge-density guess. Randomized response
//! only exists for `eps <= 1`, so it runs at `min(eps, 1)`; the effective
//! value is reported in every row.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::baselines::{
    expected_cut_guess, laplace_cut, noisy_edge_total, randomized_response_release, rr_cut_estimate,
};
use crate::error::{out_of_range, Result};
use crate::graph::{cut_value, CutQuery, WeightedGraph};
use crate::laplacian::{answer_cut_query, compute_params, release_laplacian, LaplacianReleaseParams};
use crate::linalg::format_real;
use crate::sketch::{mix_seed, seeded_rng};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub n: usize,
    pub edge_prob: f64,
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    pub nu: f64,
    pub sizes: Vec<usize>,
    pub seeds: u64,
    /// Cuts per size per seed.
    pub queries: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mechanism {
    Jl,
    Rr,
    Laplace,
    EdgeGuess,
}

impl Mechanism {
    pub const ALL: [Mechanism; 4] = [Mechanism::Jl, Mechanism::Rr, Mechanism::Laplace, Mechanism::EdgeGuess];

    pub fn name(self) -> &'static str {
        match self {
            Mechanism::Jl => "jl",
            Mechanism::Rr => "rr",
            Mechanism::Laplace => "laplace",
            Mechanism::EdgeGuess => "edge_guess",
        }
    }
}

/// Error summary for one mechanism at one cut size.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub mechanism: Mechanism,
    pub s: usize,
    pub eps_effective: f64,
    pub samples: usize,
    pub mean_abs: f64,
    pub median_abs: f64,
    pub p95_abs: f64,
    pub mean_rel: f64,
    pub median_rel: f64,
    pub p95_rel: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub jl: LaplacianReleaseParams,
    pub rows: Vec<BenchRow>,
}

pub const CSV_HEADER: &str = "mechanism,s,n,eps,eps_effective,delta,seeds,samples,\
mean_abs_err,median_abs_err,p95_abs_err,mean_rel_err,median_rel_err,p95_rel_err";

impl BenchReport {
    pub fn row(&self, mechanism: Mechanism, s: usize) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.mechanism == mechanism && r.s == s)
    }

    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let mut out = String::new();
        let _ = writeln!(out, "{CSV_HEADER}");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.mechanism.name(),
                r.s,
                c.n,
                format_real(c.eps),
                format_real(r.eps_effective),
                format_real(c.delta),
                c.seeds,
                r.samples,
                format_real(r.mean_abs),
                format_real(r.median_abs),
                format_real(r.p95_abs),
                format_real(r.mean_rel),
                format_real(r.median_rel),
                format_real(r.p95_rel),
            );
        }
        out
    }
}

/// Nearest-rank quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

fn summarize(mechanism: Mechanism, s: usize, eps_effective: f64, errs: &[(f64, f64)]) -> BenchRow {
    let mut abs: Vec<f64> = errs.iter().map(|e| e.0).collect();
    let mut rel: Vec<f64> = errs.iter().filter(|e| e.1 > 0.0).map(|e| e.0 / e.1).collect();
    abs.sort_by(f64::total_cmp);
    rel.sort_by(f64::total_cmp);
    let mean = |v: &[f64]| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
    BenchRow {
        mechanism,
        s,
        eps_effective,
        samples: abs.len(),
        mean_abs: mean(&abs),
        median_abs: quantile(&abs, 0.5),
        p95_abs: quantile(&abs, 0.95),
        mean_rel: mean(&rel),
        median_rel: quantile(&rel, 0.5),
        p95_rel: quantile(&rel, 0.95),
    }
}

/// `(abs error, true cut)` per mechanism, size and query.
type SeedErrors = Vec<[Vec<(f64, f64)>; 4]>;

pub fn bench_sweep(config: &BenchConfig) -> Result<BenchReport> {
    if config.sizes.is_empty() || config.seeds == 0 || config.queries == 0 {
        return Err(out_of_range("bench needs at least one size, seed and query"));
    }
    if let Some(&bad) = config.sizes.iter().find(|&&s| s == 0 || s >= config.n) {
        return Err(out_of_range(format!("cut size {bad} must lie in [1, n)")));
    }
    let jl = compute_params(config.eps, config.delta, config.eta, config.nu, config.n)?;
    let rr_eps = config.eps.min(1.0);
    let graph = WeightedGraph::erdos_renyi(config.n, config.edge_prob, &mut seeded_rng(mix_seed(config.seed, 0)))?;

    let (query_master, jl_master, rr_master, lap_master, guess_master) = (
        mix_seed(config.seed, 1),
        mix_seed(config.seed, 2),
        mix_seed(config.seed, 3),
        mix_seed(config.seed, 4),
        mix_seed(config.seed, 5),
    );

    let per_seed: Vec<SeedErrors> = (0..config.seeds)
        .into_par_iter()
        .map(|t| -> Result<SeedErrors> {
            let mut qrng = seeded_rng(mix_seed(query_master, t));
            let released = release_laplacian(&graph, &jl, mix_seed(jl_master, t))?;
            let rr = randomized_response_release(&graph, rr_eps, mix_seed(rr_master, t))?;
            let m_noisy = noisy_edge_total(&graph, config.eps, mix_seed(guess_master, t))?;
            let lap_seeds = mix_seed(lap_master, t);
            let mut out = Vec::with_capacity(config.sizes.len());
            for (si, &s) in config.sizes.iter().enumerate() {
                let mut errs: [Vec<(f64, f64)>; 4] = Default::default();
                for k in 0..config.queries {
                    let q = CutQuery::random(config.n, s, &mut qrng)?;
                    let phi = cut_value(&graph, &q)?;
                    let lap_seed = mix_seed(lap_seeds, (si * config.queries + k) as u64);
                    let answers = [
                        answer_cut_query(&released, &q)?,
                        rr_cut_estimate(&rr, &q)?,
                        laplace_cut(&graph, &q, config.eps, lap_seed)?,
                        expected_cut_guess(m_noisy, config.n, &q)?,
                    ];
                    for (slot, a) in errs.iter_mut().zip(answers) {
                        slot.push(((a - phi).abs(), phi));
                    }
                }
                out.push(errs);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (mi, mech) in Mechanism::ALL.iter().enumerate() {
        for (si, &s) in config.sizes.iter().enumerate() {
            let errs: Vec<(f64, f64)> = per_seed.iter().flat_map(|seed| seed[si][mi].iter().copied()).collect();
            let eps_eff = if *mech == Mechanism::Rr { rr_eps } else { config.eps };
            rows.push(summarize(*mech, s, eps_eff, &errs));
        }
    }
    Ok(BenchReport {
        config: config.clone(),
        jl,
        rows,
    })
}

/// Least-squares line `y = slope x + intercept` with its `R^2`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, my - slope * mx, r2)
}
