//! Time grids, reproducible Brownian increments and path coarsening.
//!
//! Every path is drawn from its own ChaCha stream keyed by
//! `(master_seed, path_index)`, so an ensemble is the same whatever order
//! or worker count generates it.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub horizon: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("need at least one time step".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn tau(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    /// `t_n = n τ`, with `t_N = T` exactly.
    pub fn node(&self, n: usize) -> f64 {
        if n == self.steps {
            self.horizon
        } else {
            n as f64 * self.tau()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|n| self.node(n)).collect()
    }

    /// The grid with `steps / factor` steps over the same horizon.
    pub fn coarsened(&self, factor: usize) -> Result<TimeGrid> {
        if factor == 0 || !self.steps.is_multiple_of(factor) {
            return Err(Error::Coarsen {
                factor,
                steps: self.steps,
            });
        }
        TimeGrid::new(self.horizon, self.steps / factor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub path_index: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, path_index: u64) -> Self {
        Self {
            master_seed,
            path_index,
        }
    }
}

/// Increments `Δ_n W`, `n = 1..N`, stored zero-based: `increments[n-1] = Δ_n W`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPath {
    pub grid: TimeGrid,
    pub increments: Vec<f64>,
}

impl BrownianPath {
    /// `Δ_n W` with the one-based index used in the recursions.
    #[inline]
    pub fn dw(&self, n: usize) -> f64 {
        self.increments[n - 1]
    }

    /// `W(T) = Σ_n Δ_n W`.
    pub fn terminal_value(&self) -> f64 {
        self.increments.iter().sum()
    }

    /// All-zero path, useful for deterministic checks.
    pub fn zero(grid: TimeGrid) -> Self {
        Self {
            grid,
            increments: vec![0.0; grid.steps],
        }
    }
}

/// Open-interval uniform from the top 53 bits.
#[inline]
fn uniform_open(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Standard normal quantile.
#[inline]
pub fn normal_quantile(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

/// `N` standard-normal draws scaled by `sqrt(τ)` from the stream of `seed`.
pub fn sample_path(grid: TimeGrid, seed: SeedSpec) -> BrownianPath {
    let mut rng = ChaCha20Rng::seed_from_u64(seed.master_seed);
    rng.set_stream(seed.path_index);
    let scale = grid.tau().sqrt();
    let increments = (0..grid.steps)
        .map(|_| scale * normal_quantile(uniform_open(rng.next_u64())))
        .collect();
    BrownianPath { grid, increments }
}

/// `count` open-interval uniforms from the stream of `seed`.
pub fn sample_uniforms(seed: SeedSpec, count: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed.master_seed);
    rng.set_stream(seed.path_index);
    (0..count).map(|_| uniform_open(rng.next_u64())).collect()
}

/// Paths `first_index .. first_index + count` of one master seed, in index order.
pub fn sample_ensemble(
    grid: TimeGrid,
    master_seed: u64,
    first_index: u64,
    count: usize,
) -> Vec<BrownianPath> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| sample_path(grid, SeedSpec::new(master_seed, first_index + i)))
        .collect()
}

/// Block sums of `factor` consecutive increments.
pub fn coarsen(path: &BrownianPath, factor: usize) -> Result<BrownianPath> {
    let grid = path.grid.coarsened(factor)?;
    let increments = path
        .increments
        .chunks_exact(factor)
        .map(|block| block.iter().sum())
        .collect();
    Ok(BrownianPath { grid, increments })
}
