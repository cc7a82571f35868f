//! Sanitized covariance release, directional-variance queries and the noisy
//! mean.
//!
//! The data matrix is centered, every singular value is lifted to
//! `sqrt(sigma^2 + w^2)`, and the shifted matrix `B` is projected with an
//! `r x n` Gaussian sketch. The published `C~ = (1/r) B^T M^T M B` estimates
//! `A^T A + w^2 I`.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};

use crate::baselines::sample_laplace;
use crate::error::{out_of_range, Error, Result};
use crate::laplacian::{check_privacy_ranges, release_rows};
use crate::linalg::{svd, Matrix};
use crate::sketch::{check_budget, seeded_rng, GaussianStream};

/// An `n x d` data matrix: one row per individual.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    a: Matrix,
}

impl DataMatrix {
    pub fn new(a: Matrix) -> Self {
        DataMatrix { a }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Ok(DataMatrix {
            a: Matrix::from_rows(rows)?,
        })
    }

    /// Rows of iid `U(-1, 1)` entries.
    pub fn random<R: rand::Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<Self> {
        let values: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        Ok(DataMatrix {
            a: Matrix::from_row_slice(n, d, &values)?,
        })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn d(&self) -> usize {
        self.a.ncols()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }

    /// Column means `(1/n) A^T 1`.
    pub fn column_means(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.a.row_sum().iter().map(|s| s / n).collect()
    }

    /// `Phi_A(x) = x^T A^T A x` on the matrix as given (callers center first).
    pub fn directional_variance(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch {
                expected: self.d(),
                actual: x.len(),
            });
        }
        Ok((self.a.as_dmatrix() * DVector::from_column_slice(x)).norm_squared())
    }

    fn require_tall(&self) -> Result<()> {
        if self.n() < self.d() {
            return Err(Error::UnsupportedShape(format!(
                "need at least as many rows as columns, got {}x{}",
                self.n(),
                self.d()
            )));
        }
        Ok(())
    }
}

/// Parameters of a covariance release.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceReleaseParams {
    pub eps: f64,
    pub delta: f64,
    pub eta: f64,
    pub nu: f64,
    pub r: usize,
    pub w: f64,
}

/// `w = 16 sqrt(r ln(2/delta)) / eps * ln(16r/delta)`.
pub fn covariance_shift(eps: f64, delta: f64, r: usize) -> f64 {
    let r = r as f64;
    16.0 * (r * (2.0 / delta).ln()).sqrt() / eps * (16.0 * r / delta).ln()
}

pub fn compute_params_cov(eps: f64, delta: f64, eta: f64, nu: f64) -> Result<CovarianceReleaseParams> {
    check_privacy_ranges(eps, delta)?;
    let r = release_rows(eta, nu)?;
    let w = covariance_shift(eps, delta, r);
    if w <= 2.0 {
        return Err(Error::ParametersTooWeak { w });
    }
    Ok(CovarianceReleaseParams {
        eps,
        delta,
        eta,
        nu,
        r,
        w,
    })
}

impl CovarianceReleaseParams {
    pub fn epsilon0(&self) -> f64 {
        self.eps / (4.0 * self.r as f64 * (2.0 / self.delta).ln()).sqrt()
    }

    pub fn delta0(&self) -> f64 {
        self.delta / (2.0 * self.r as f64)
    }

    /// Additive error bound `eta w^2`.
    pub fn tau(&self) -> f64 {
        self.eta * self.w * self.w
    }
}

/// `A - (1/n) 1 1^T A`.
pub fn center_rows(a: &DataMatrix) -> DataMatrix {
    let means = DVector::from_vec(a.column_means());
    let mut out = a.a.as_dmatrix().clone();
    for mut row in out.row_iter_mut() {
        row -= means.transpose();
    }
    DataMatrix { a: Matrix::wrap(out) }
}

/// `U sqrt(Sigma^2 + w^2) V^T`, so that `B^T B = A^T A + w^2 I`.
pub fn spectral_shift(a: &DataMatrix, w: f64) -> Result<DataMatrix> {
    a.require_tall()?;
    if !(w >= 0.0 && w.is_finite()) {
        return Err(out_of_range(format!("shift w = {w} must be nonnegative")));
    }
    let f = svd(&a.a)?;
    let lifted: Vec<f64> = f.singular_values.iter().map(|s| (s * s + w * w).sqrt()).collect();
    let b = f.u.as_dmatrix() * DMatrix::from_diagonal(&DVector::from_vec(lifted)) * f.v.transpose();
    Ok(DataMatrix { a: Matrix::wrap(b) })
}

/// A released `C~` together with the public parameters.
#[derive(Debug, Clone)]
pub struct SanitizedCovariance {
    c_tilde: Matrix,
    params: CovarianceReleaseParams,
    seed: u64,
}

impl SanitizedCovariance {
    /// Validates a published `d x d` symmetric matrix.
    pub fn from_parts(c_tilde: Matrix, params: CovarianceReleaseParams, seed: u64) -> Result<Self> {
        if c_tilde.nrows() != c_tilde.ncols() {
            return Err(Error::InvalidMatrix("released covariance is not square".into()));
        }
        if !c_tilde.is_symmetric(1e-12 * c_tilde.amax().max(1.0)) {
            return Err(Error::InvalidMatrix("released covariance is not symmetric".into()));
        }
        Ok(SanitizedCovariance {
            c_tilde,
            params,
            seed,
        })
    }

    pub fn c_tilde(&self) -> &Matrix {
        &self.c_tilde
    }

    pub fn params(&self) -> &CovarianceReleaseParams {
        &self.params
    }

    pub fn d(&self) -> usize {
        self.c_tilde.nrows()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Working-set size: `B`, one sketch row, the projection and `C~`.
pub fn covariance_release_bytes(n: usize, d: usize, r: usize) -> u64 {
    let (n, d, r) = (n as u64, d as u64, r as u64);
    8 * (n * d + n + r.saturating_mul(d) + d * d)
}

/// `M B` for an `r x n` sketch streamed from `seed`.
pub(crate) fn project_rows(b: &DMatrix<f64>, r: usize, seed: u64) -> DMatrix<f64> {
    let (n, d) = b.shape();
    let mut stream = GaussianStream::new(seed);
    let mut y = DVector::zeros(n);
    let mut o = DMatrix::zeros(r, d);
    for k in 0..r {
        stream.fill(y.as_mut_slice());
        o.set_row(k, &(y.transpose() * b));
    }
    o
}

pub fn release_covariance(
    a: &DataMatrix,
    params: &CovarianceReleaseParams,
    seed: u64,
) -> Result<SanitizedCovariance> {
    release_covariance_within(a, params, seed, None)
}

/// [`release_covariance`] that refuses working sets above `budget` bytes.
pub fn release_covariance_within(
    a: &DataMatrix,
    params: &CovarianceReleaseParams,
    seed: u64,
    budget: Option<u64>,
) -> Result<SanitizedCovariance> {
    a.require_tall()?;
    check_budget(covariance_release_bytes(a.n(), a.d(), params.r), budget)?;
    let b = spectral_shift(&center_rows(a), params.w)?;
    let o = project_rows(b.a.as_dmatrix(), params.r, seed);
    let c = o.tr_mul(&o) / params.r as f64;
    Ok(SanitizedCovariance {
        c_tilde: Matrix::wrap(c),
        params: *params,
        seed,
    })
}

/// Tolerance on `|x| = 1` for direction queries.
pub const UNIT_TOLERANCE: f64 = 1e-8;

pub(crate) fn check_unit(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: x.len(),
        });
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(Error::InvalidQuery(format!("direction has norm {norm}, expected 1")));
    }
    Ok(())
}

/// `R(x) = x^T C~ x - w^2` for a unit vector `x`.
pub fn answer_direction_query(sc: &SanitizedCovariance, x: &[f64]) -> Result<f64> {
    check_unit(x, sc.d())?;
    Ok(sc.c_tilde.quadratic_form(x)? - sc.params.w * sc.params.w)
}

/// Column means plus `N(0, 4 ln(1/delta) / (n^2 eps^2))` per coordinate.
pub fn release_mean(a: &DataMatrix, eps: f64, delta: f64, seed: u64) -> Result<Vec<f64>> {
    check_privacy_ranges(eps, delta)?;
    let sd = mean_noise_variance(a.n(), eps, delta).sqrt();
    let normal = Normal::new(0.0, sd).map_err(|e| out_of_range(e.to_string()))?;
    let mut rng = seeded_rng(seed);
    Ok(a.column_means()
        .into_iter()
        .map(|m| m + normal.sample(&mut rng))
        .collect())
}

/// Per-coordinate variance of the mean noise.
pub fn mean_noise_variance(n: usize, eps: f64, delta: f64) -> f64 {
    4.0 * (1.0 / delta).ln() / ((n * n) as f64 * eps * eps)
}

/// Result of the large-gap experiment.
#[derive(Debug, Clone)]
pub enum AdaptiveShiftOutcome {
    /// The noisy smallest singular value cleared `10 w`; `(1/r) A^T M^T M A`
    /// was published without a shift. Answers are `x^T C~ x`.
    Unshifted { c_tilde: Matrix, noisy_sigma_min: f64 },
    /// The gap was too small; the regular shifted release was used.
    Shifted(SanitizedCovariance),
}

/// Experimental path for inputs whose smallest singular value is already
/// large: publish `sigma_d + Lap(1/eps)` and skip the shift when it is at
/// least `10 w`. The combined privacy accounting of this path is not
/// established, so it is exposed to audits only and never used by releases.
pub fn adaptive_shift_experiment(
    a: &DataMatrix,
    params: &CovarianceReleaseParams,
    seed: u64,
) -> Result<AdaptiveShiftOutcome> {
    a.require_tall()?;
    let centered = center_rows(a);
    let f = svd(&centered.a)?;
    let sigma_min = f.singular_values.last().copied().unwrap_or(0.0);
    let mut rng = seeded_rng(seed);
    let noisy = sigma_min + sample_laplace(&mut rng, 1.0 / params.eps);
    if noisy >= 10.0 * params.w {
        let o = project_rows(centered.a.as_dmatrix(), params.r, crate::sketch::mix_seed(seed, 0));
        return Ok(AdaptiveShiftOutcome::Unshifted {
            c_tilde: Matrix::wrap(o.tr_mul(&o) / params.r as f64),
            noisy_sigma_min: noisy,
        });
    }
    Ok(AdaptiveShiftOutcome::Shifted(release_covariance(
        a,
        params,
        crate::sketch::mix_seed(seed, 0),
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symmetric_eigenvalues;
    use crate::sketch::{mix_seed, sample_sketch};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn nu_e2() -> f64 {
        2.0 * (-2.0f64).exp()
    }

    fn unit<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Vec<f64> {
        let x: Vec<f64> = (0..d).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
        let norm = x.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
        x.into_iter().map(|v| v / norm).collect()
    }

    #[test]
    fn reference_parameters() {
        let p = compute_params_cov(1.0, 0.1, 0.5, nu_e2()).unwrap();
        assert_eq!(p.r, 64);
        // Independent high-precision evaluation: 2045.75685453838...
        assert_abs_diff_eq!(p.w, 2045.756_854_538_38, epsilon = 1e-8);
        let half = compute_params_cov(2.0, 0.1, 0.5, nu_e2()).unwrap();
        assert_eq!(half.w * 2.0, p.w);
        let lap = crate::laplacian::LaplacianReleaseParams::without_size_check(1.0, 0.1, 0.3, 0.07, 10).unwrap();
        assert_eq!(compute_params_cov(1.0, 0.1, 0.3, 0.07).unwrap().r, lap.r);
        assert!(compute_params_cov(-1.0, 0.1, 0.3, 0.1).is_err());
        assert!(matches!(
            compute_params_cov(1e7, 0.1, 0.3, 0.1),
            Err(Error::ParametersTooWeak { .. })
        ));
    }

    #[test]
    fn centering_examples() {
        let c = DataMatrix::from_rows(&[vec![2.0, -1.0], vec![2.0, -1.0], vec![2.0, -1.0]]).unwrap();
        assert!(center_rows(&c).matrix().iter().all(|&v| v == 0.0));

        let mut rng = seeded_rng(5);
        let a = DataMatrix::random(5, 3, &mut rng).unwrap();
        let once = center_rows(&a);
        assert!(once.column_means().iter().all(|m| m.abs() < 1e-10));
        let twice = center_rows(&once);
        assert!((twice.matrix().as_dmatrix() - once.matrix().as_dmatrix()).amax() < 1e-12);
    }

    #[test]
    fn shift_examples() {
        let mut rng = seeded_rng(6);
        let a = DataMatrix::random(6, 4, &mut rng).unwrap();
        let same = spectral_shift(&a, 0.0).unwrap();
        assert!((same.matrix().as_dmatrix() - a.matrix().as_dmatrix()).amax() < 1e-9);

        let zero = DataMatrix::new(Matrix::zeros(5, 3).unwrap());
        let lifted = svd(spectral_shift(&zero, 3.0).unwrap().matrix()).unwrap();
        for s in &lifted.singular_values {
            assert_abs_diff_eq!(*s, 3.0, epsilon = 1e-12);
        }

        // Compare against an SVD computed directly by nalgebra.
        let b = spectral_shift(&a, 5.0).unwrap();
        let mut want: Vec<f64> = nalgebra::SVD::new(a.matrix().as_dmatrix().clone(), false, false)
            .singular_values
            .iter()
            .map(|s| (s * s + 25.0).sqrt())
            .collect();
        want.sort_by(|x, y| y.total_cmp(x));
        let got = svd(b.matrix()).unwrap().singular_values;
        for (g, w) in got.iter().zip(&want) {
            assert_abs_diff_eq!(g, w, epsilon = 1e-9);
        }

        let wide = DataMatrix::random(2, 3, &mut rng).unwrap();
        assert!(matches!(spectral_shift(&wide, 1.0), Err(Error::UnsupportedShape(_))));
        assert!(spectral_shift(&a, -1.0).is_err());
    }

    #[test]
    fn streamed_projection_matches_dense_sketch() {
        let mut rng = seeded_rng(7);
        let b = DataMatrix::random(8, 3, &mut rng).unwrap();
        let m = sample_sketch(11, 8, 13).unwrap();
        let dense = m.entries().as_dmatrix() * b.matrix().as_dmatrix();
        assert!((dense - project_rows(b.matrix().as_dmatrix(), 11, 13)).amax() < 1e-12);
    }

    #[test]
    fn release_structure() {
        let mut rng = seeded_rng(8);
        let a = DataMatrix::random(9, 4, &mut rng).unwrap();
        let p = compute_params_cov(50.0, 0.1, 0.4, 0.1).unwrap();
        let sc = release_covariance(&a, &p, 1).unwrap();
        assert!(sc.c_tilde().is_symmetric(1e-9 * sc.c_tilde().amax()));
        let eig = symmetric_eigenvalues(sc.c_tilde()).unwrap();
        assert!(eig.iter().all(|&v| v >= -1e-9 * eig[0]));
        assert_eq!(sc.c_tilde(), release_covariance(&a, &p, 1).unwrap().c_tilde());
        assert_ne!(sc.c_tilde(), release_covariance(&a, &p, 2).unwrap().c_tilde());

        // Rank is capped by the sketch height.
        let short = CovarianceReleaseParams { r: 2, ..p };
        let f = svd(release_covariance(&a, &short, 1).unwrap().c_tilde()).unwrap();
        assert!(f.numeric_rank <= 2);

        assert!(matches!(
            release_covariance_within(&a, &p, 1, Some(8)),
            Err(Error::AllocationBudget { .. })
        ));
        let wide = DataMatrix::random(3, 4, &mut rng).unwrap();
        assert!(release_covariance(&wide, &p, 1).is_err());
    }

    #[test]
    fn release_is_unbiased() {
        let mut rng = seeded_rng(9);
        let a = DataMatrix::random(6, 3, &mut rng).unwrap();
        let p = compute_params_cov(200.0, 0.1, 0.45, 0.2).unwrap();
        let b = spectral_shift(&center_rows(&a), p.w).unwrap();
        let target = b.matrix().tr_mul(b.matrix().as_dmatrix());
        let trials = 10_000;
        let mut sum = DMatrix::<f64>::zeros(3, 3);
        let mut sum_sq = DMatrix::<f64>::zeros(3, 3);
        for t in 0..trials {
            let c = release_covariance(&a, &p, mix_seed(9, t)).unwrap().c_tilde().clone().into_inner();
            sum_sq += c.component_mul(&c);
            sum += c;
        }
        let t = trials as f64;
        for i in 0..3 {
            for j in 0..3 {
                let mean = sum[(i, j)] / t;
                let var = (sum_sq[(i, j)] / t - mean * mean) * t / (t - 1.0);
                let se = (var / t).sqrt();
                assert!((mean - target[(i, j)]).abs() <= 3.0 * se + 1e-9, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn exact_covariance_answers_exactly() {
        let mut rng = seeded_rng(10);
        let a = DataMatrix::random(7, 3, &mut rng).unwrap();
        let p = compute_params_cov(1.0, 0.1, 0.4, 0.1).unwrap();
        let centered = center_rows(&a);
        let b = spectral_shift(&centered, p.w).unwrap();
        let exact = SanitizedCovariance::from_parts(Matrix::wrap(b.matrix().tr_mul(b.matrix().as_dmatrix())), p, 0)
            .unwrap();
        for _ in 0..10 {
            let x = unit(3, &mut rng);
            let want = centered.directional_variance(&x).unwrap();
            let got = answer_direction_query(&exact, &x).unwrap();
            assert_abs_diff_eq!(got, want, epsilon = 1e-8 * p.w * p.w);
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            assert_eq!(got, answer_direction_query(&exact, &neg).unwrap());
        }
        assert!(matches!(
            answer_direction_query(&exact, &[1.0, 1.0, 0.0]),
            Err(Error::InvalidQuery(_))
        ));
        assert!(answer_direction_query(&exact, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn direction_utility_frequency() {
        let mut rng = seeded_rng(11);
        let a = DataMatrix::random(30, 4, &mut rng).unwrap();
        let p = compute_params_cov(1.0, 0.1, 0.35, 0.1).unwrap();
        let centered = center_rows(&a);
        let x = unit(4, &mut rng);
        let phi = centered.directional_variance(&x).unwrap();
        let trials = 1000;
        let hits = (0..trials)
            .filter(|&t| {
                let sc = release_covariance(&a, &p, mix_seed(11, t)).unwrap();
                let r = answer_direction_query(&sc, &x).unwrap();
                r >= (1.0 - p.eta) * phi - p.tau() && r <= (1.0 + p.eta) * phi + p.tau()
            })
            .count();
        let slack = 3.0 * (p.nu * (1.0 - p.nu) / trials as f64).sqrt();
        assert!(hits as f64 / trials as f64 >= 1.0 - p.nu - slack);
    }

    #[test]
    fn mean_release_moments() {
        let mut rng = seeded_rng(12);
        let a = DataMatrix::random(20, 3, &mut rng).unwrap();
        let (eps, delta) = (0.5, 0.05);
        let mu = a.column_means();
        let want_var = mean_noise_variance(20, eps, delta);
        let trials = 10_000;
        let draws: Vec<Vec<f64>> = (0..trials).map(|t| release_mean(&a, eps, delta, mix_seed(12, t)).unwrap()).collect();
        for j in 0..3 {
            let col: Vec<f64> = draws.iter().map(|v| v[j]).collect();
            let mean = col.iter().sum::<f64>() / trials as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
            assert!((mean - mu[j]).abs() <= 3.0 * (var / trials as f64).sqrt());
            assert!((var / want_var - 1.0).abs() < 0.1);
        }
        assert_eq!(release_mean(&a, eps, delta, 3).unwrap(), release_mean(&a, eps, delta, 3).unwrap());

        let zero = DataMatrix::new(Matrix::zeros(4, 2).unwrap());
        let noise: Vec<f64> = (0..2000).flat_map(|t| release_mean(&zero, 1.0, 0.1, t).unwrap()).collect();
        let m = noise.iter().sum::<f64>() / noise.len() as f64;
        assert!(m.abs() < 3.0 * (mean_noise_variance(4, 1.0, 0.1) / noise.len() as f64).sqrt());
    }

    #[test]
    fn adaptive_experiment_branches() {
        let mut rng = seeded_rng(13);
        let p = compute_params_cov(1.0, 0.1, 0.4, 0.1).unwrap();
        let small = DataMatrix::random(10, 2, &mut rng).unwrap();
        assert!(matches!(
            adaptive_shift_experiment(&small, &p, 1).unwrap(),
            AdaptiveShiftOutcome::Shifted(_)
        ));
        // Orthogonal columns with huge norm clear the 10 w gap.
        let big = 100.0 * p.w;
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|i| match i {
                0 => vec![big, 0.0],
                1 => vec![-big, 0.0],
                2 => vec![0.0, big],
                _ => vec![0.0, -big],
            })
            .collect();
        let tall = DataMatrix::from_rows(&rows).unwrap();
        assert!(matches!(
            adaptive_shift_experiment(&tall, &p, 1).unwrap(),
            AdaptiveShiftOutcome::Unshifted { .. }
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn shift_adds_w_squared_to_gram(seed in any::<u64>(), w in 0.0f64..20.0) {
            let mut rng = seeded_rng(seed);
            let a = DataMatrix::random(7, 4, &mut rng).unwrap();
            let b = spectral_shift(&a, w).unwrap();
            let lhs = b.matrix().tr_mul(b.matrix().as_dmatrix());
            let rhs = a.matrix().tr_mul(a.matrix().as_dmatrix()) + DMatrix::identity(4, 4) * (w * w);
            prop_assert!((lhs - rhs).amax() < 1e-8 * (1.0 + w * w));
        }

        #[test]
        fn centering_zeroes_column_sums(seed in any::<u64>(), n in 1usize..8, d in 1usize..5) {
            let mut rng = seeded_rng(seed);
            let a = DataMatrix::random(n, d, &mut rng).unwrap();
            let c = center_rows(&a);
            prop_assert!(c.matrix().row_sum().amax() < 1e-10);
        }
    }
}
