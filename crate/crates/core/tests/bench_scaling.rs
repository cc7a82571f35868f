//! Error growth of the projection release and randomized response over cut sizes.

use jl_privacy::bench::{bench_sweep, fit_line, BenchConfig, Mechanism};

#[test]
fn projection_error_grows_linearly_in_cut_size() {
    let config = BenchConfig {
        n: 200,
        edge_prob: 0.5,
        eps: 300.0,
        delta: 0.1,
        eta: 0.12,
        nu: 0.05,
        sizes: vec![5, 10, 20, 40],
        seeds: 20,
        queries: 5,
        seed: 31,
    };
    let report = bench_sweep(&config).unwrap();
    let xs: Vec<f64> = config.sizes.iter().map(|&s| s as f64).collect();
    let ys: Vec<f64> = config.sizes.iter().map(|&s| report.row(Mechanism::Jl, s).unwrap().mean_abs).collect();
    let (slope, _, r2) = fit_line(&xs, &ys);
    let two_eta_w = 2.0 * config.eta * report.jl.w;
    println!("slope={slope:.3} 2*eta*w={two_eta_w:.3} ratio={:.3} r2={r2:.4}", slope / two_eta_w);
    assert!(r2 > 0.95, "r2 = {r2}");
    assert!(slope > 0.0);
    for (&s, &mae) in config.sizes.iter().zip(&ys) {
        // Mean error stays inside the additive guarantee alone.
        assert!(mae < report.jl.tau(s), "s={s}: mae {mae} vs tau {}", report.jl.tau(s));
    }
}

#[test]
fn randomized_response_error_grows_like_root_cut_pairs() {
    let config = BenchConfig {
        n: 400,
        edge_prob: 0.5,
        eps: 10.0,
        delta: 0.1,
        eta: 0.5,
        nu: 0.5,
        sizes: vec![5, 10, 20, 40],
        seeds: 100,
        queries: 5,
        seed: 32,
    };
    let report = bench_sweep(&config).unwrap();
    assert_eq!(report.row(Mechanism::Rr, 5).unwrap().eps_effective, 1.0);
    let xs: Vec<f64> = config.sizes.iter().map(|&s| (s as f64).ln()).collect();
    let ys: Vec<f64> = config
        .sizes
        .iter()
        .map(|&s| report.row(Mechanism::Rr, s).unwrap().mean_abs.ln())
        .collect();
    let (exponent, _, r2) = fit_line(&xs, &ys);
    println!("exponent={exponent:.3} r2={r2:.4}");
    assert!((exponent - 0.5).abs() <= 0.1, "exponent = {exponent}");
}

#[test]
fn laplace_baseline_error_is_flat_and_tiny() {
    let config = BenchConfig {
        n: 60,
        edge_prob: 0.5,
        eps: 100.0,
        delta: 0.1,
        eta: 0.3,
        nu: 0.1,
        sizes: vec![3, 12],
        seeds: 10,
        queries: 10,
        seed: 33,
    };
    let report = bench_sweep(&config).unwrap();
    for &s in &config.sizes {
        // Lap(1/eps) has mean absolute value 1/eps.
        let mae = report.row(Mechanism::Laplace, s).unwrap().mean_abs;
        assert!(mae < 3.0 / config.eps, "s={s}: {mae}");
    }
}
