//! Seeded Gaussian sketches.
//!
//! All randomness flows from a ChaCha20 stream keyed by a 64-bit seed, with
//! standard normals drawn by the ziggurat method. A sketch is filled in
//! row-major order, so row `k` of an `r x m` sketch is the `k`-th block of `m`
//! consecutive draws from the stream.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{out_of_range, Error, Result};
use crate::linalg::Matrix;

/// Recorded in release metadata so audits can regenerate the randomness.
pub const GENERATOR_ID: &str = "chacha20/rand_chacha-0.9+ziggurat-normal/rand_distr-0.5";

/// SplitMix64 finalizer applied to `master + (index + 1) * golden`.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic random source keyed by a 64-bit seed.
pub fn seeded_rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Stream of iid `N(0, 1)` samples.
pub struct GaussianStream {
    rng: ChaCha20Rng,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        GaussianStream {
            rng: seeded_rng(seed),
        }
    }

    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn fill(&mut self, buf: &mut [f64]) {
        for slot in buf {
            *slot = self.next_normal();
        }
    }
}

/// `(eta, nu)` together with the sketch height they require.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JlParams {
    pub eta: f64,
    pub nu: f64,
    pub r: usize,
}

/// Sketch height `r = ceil(8 ln(2/nu) / eta^2)` for the JL range `0 < eta < 1/2`.
pub fn jl_dim(eta: f64, nu: f64) -> Result<JlParams> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(out_of_range(format!("eta = {eta} must lie in (0, 1/2)")));
    }
    Ok(JlParams {
        eta,
        nu,
        r: sketch_rows(eta, nu)?,
    })
}

/// The height formula alone, for any `eta > 0`.
///
/// Release parameters also accept `eta = 1/2`, where the privacy analysis
/// still applies but the JL guarantee no longer does.
pub fn sketch_rows(eta: f64, nu: f64) -> Result<usize> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(out_of_range(format!("eta = {eta} must be positive")));
    }
    if !(nu > 0.0 && nu < 1.0) {
        return Err(out_of_range(format!("nu = {nu} must lie in (0, 1)")));
    }
    let exact = 8.0 * (2.0 / nu).ln() / (eta * eta);
    // Absorb rounding noise so that exact integers (e.g. nu = 2e^-2) do not
    // round up to the next row.
    let r = (exact * (1.0 - 1e-12)).ceil().max(1.0);
    if r > usize::MAX as f64 / 2.0 {
        return Err(out_of_range(format!("sketch height {exact} is not representable")));
    }
    Ok(r as usize)
}

/// `r x m` matrix of iid standard normals generated from `seed`.
#[derive(Debug, Clone)]
pub struct GaussianSketch {
    r: usize,
    m: usize,
    seed: u64,
    entries: Matrix,
}

impl GaussianSketch {
    /// Wraps explicit entries; used by tests to force a known sketch.
    pub fn from_entries(entries: Matrix, seed: u64) -> Self {
        GaussianSketch {
            r: entries.nrows(),
            m: entries.ncols(),
            seed,
            entries,
        }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    /// `M x`. Callers apply any `1/r` scaling themselves.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                actual: x.len(),
            });
        }
        let v = DVector::from_column_slice(x);
        Ok((self.entries.as_dmatrix() * v).iter().copied().collect())
    }
}

pub fn sample_sketch(r: usize, m: usize, seed: u64) -> Result<GaussianSketch> {
    if r == 0 || m == 0 {
        return Err(out_of_range(format!("sketch shape {r}x{m} must be at least 1x1")));
    }
    let mut stream = GaussianStream::new(seed);
    let mut values = vec![0.0; r * m];
    stream.fill(&mut values);
    Ok(GaussianSketch {
        r,
        m,
        seed,
        entries: Matrix::wrap(DMatrix::from_row_slice(r, m, &values)),
    })
}

/// Bytes held by a materialized `r x m` sketch.
pub fn sketch_bytes(r: usize, m: usize) -> u64 {
    (r as u64).saturating_mul(m as u64).saturating_mul(8)
}

/// Fails when `needed` exceeds `budget`.
pub fn check_budget(needed: u64, budget: Option<u64>) -> Result<()> {
    match budget {
        Some(budget) if needed > budget => Err(Error::AllocationBudget { needed, budget }),
        _ => Ok(()),
    }
}
