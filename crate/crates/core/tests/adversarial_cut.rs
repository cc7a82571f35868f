//! Stress case: a perfect matching on `2m` nodes and a cut chosen after
//! looking at one projection row.
//!
//! Every matching edge sends `+x` to one endpoint and `-x` to the other, so
//! collecting the positive endpoints gives a cut whose projected value is
//! `(sum |x_i| + noise)^2`, of order `m^2`, while its translated weight is
//! `(1 - w/n) m + (w/n) m^2`. A cut fixed before the release sees no such
//! inflation. The guarantee covers non-adaptive queries only.

use jl_privacy::graph::{translate_weights, CutQuery, WeightedGraph};
use jl_privacy::laplacian::{compute_params, laplacian_shift, projected_edge_matrix};
use jl_privacy::sketch::{mix_seed, seeded_rng, sketch_rows};

const M: usize = 100;

fn matching() -> WeightedGraph {
    WeightedGraph::from_edges(2 * M, (0..M).map(|i| (i, M + i, 1.0))).unwrap()
}

#[test]
fn one_row_overestimates_an_adaptively_chosen_cut() {
    let n = 2 * M;
    let r = sketch_rows(0.5, 0.5).unwrap();
    // w = 3, so w/n = 0.015.
    let params = compute_params(laplacian_shift(1.0, 0.1, r) / 3.0, 0.1, 0.5, 0.5, n).unwrap();
    let c = params.w_over_n();
    let h = translate_weights(&matching(), c).unwrap();
    let phi_h = (1.0 - c) * M as f64 + c * (M * M) as f64;

    let mut rng = seeded_rng(5);
    let trials = 200u64;
    let (mut adaptive, mut fixed) = (0.0, 0.0);
    for t in 0..trials {
        let row = projected_edge_matrix(&h, 1, mix_seed(6, t));
        let positive = (0..M).map(|i| if row[(0, i)] > row[(0, M + i)] { i } else { M + i });
        let chosen = CutQuery::new(n, positive).unwrap();
        let blind = CutQuery::random(n, M, &mut rng).unwrap();
        let blind_phi_h: f64 = (0..n)
            .flat_map(|u| (0..n).map(move |v| (u, v)))
            .filter(|&(u, v)| blind.contains(u) && !blind.contains(v))
            .map(|(u, v)| h.weight(u, v))
            .sum();
        let proj = |q: &CutQuery| -> f64 { q.indicator().iter().enumerate().map(|(i, x)| x * row[(0, i)]).sum() };
        adaptive += proj(&chosen).powi(2) / phi_h;
        fixed += proj(&blind).powi(2) / blind_phi_h;
    }
    let (adaptive, fixed) = (adaptive / trials as f64, fixed / trials as f64);
    // E|x| = sqrt(2/pi), so the ratio is about (0.8 m)^2 / phi_h, near 25.
    assert!(adaptive > 10.0, "adaptive ratio {adaptive}");
    // A chi-square with one degree of freedom: mean 1, sd sqrt(2/200).
    assert!((fixed - 1.0).abs() < 0.35, "fixed ratio {fixed}");
}
