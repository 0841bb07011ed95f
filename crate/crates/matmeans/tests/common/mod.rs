//! Shared helpers for the integration suites: quadrature CDFs, KS distance,
//! and the synthetic-data protocol used by the nonmove benchmark.

#![allow(dead_code)]

use matmeans::model::ModelData;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Numeric CDF of an unnormalized log-density on a log-spaced grid.
pub struct QuadCdf {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl QuadCdf {
    pub fn build(log_density: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Self {
        let grid = matmeans::numeric::log_spaced(lo, hi, n);
        let w = matmeans::numeric::log_trapezoid_weights(&grid);
        let vals: Vec<f64> = grid.iter().map(|&v| log_density(v)).collect();
        let mx = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut cdf = Vec::with_capacity(n);
        let mut acc = 0.0;
        for i in 0..n {
            acc += w[i] * (vals[i] - mx).exp();
            cdf.push(acc);
        }
        let total = acc;
        for c in &mut cdf {
            *c /= total;
        }
        Self { grid, cdf }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.grid[0] {
            return 0.0;
        }
        if x >= *self.grid.last().unwrap() {
            return 1.0;
        }
        let idx = self.grid.partition_point(|&g| g < x);
        let (x0, x1) = (self.grid[idx - 1], self.grid[idx]);
        let (c0, c1) = (self.cdf[idx - 1], self.cdf[idx]);
        c0 + (c1 - c0) * (x - x0) / (x1 - x0)
    }

    /// Total mass above x, as a fraction (for acceptance-rate oracles).
    pub fn tail(&self, x: f64) -> f64 {
        1.0 - self.eval(x)
    }
}

/// Kolmogorov distance between a sample and a reference CDF.
pub fn ks_distance(draws: &mut [f64], cdf: &QuadCdf) -> f64 {
    draws.sort_by(|a, b| a.total_cmp(b));
    let n = draws.len() as f64;
    let mut ks: f64 = 0.0;
    for (i, &v) in draws.iter().enumerate() {
        let f = cdf.eval(v);
        ks = ks.max((f - i as f64 / n).abs());
        ks = ks.max((f - (i as f64 + 1.0) / n).abs());
    }
    ks
}

/// Generic synthetic data: theta_i ~ N(0, I), x_i ~ N(theta_i, I).
pub fn synth_blocks(m: usize, k: usize, rng: &mut impl Rng) -> ModelData {
    let x: DMatrix<f64> = DMatrix::from_fn(m, k, |_, _| {
        let t: f64 = StandardNormal.sample(rng);
        let e: f64 = StandardNormal.sample(rng);
        t + e
    });
    ModelData::new(x).expect("synthetic data is valid")
}

/// The nonmove-benchmark protocol: theta_i ~ N(0, V0) with the dyadic
/// spectrum V0 = diag(2^(k-1), ..., 2, 1), x_i ~ N(theta_i, I). A spread
/// spectrum is essential: with coincident true eigenvalues the repulsion
/// prior's full conditional concentrates near the degenerate manifold and
/// the independence sampler's acceptance degrades as m grows, inverting the
/// benchmark's ordering.
pub fn synth_blocks_dyadic(m: usize, k: usize, rng: &mut impl Rng) -> ModelData {
    let x: DMatrix<f64> = DMatrix::from_fn(m, k, |_, j| {
        let t: f64 = StandardNormal.sample(rng);
        let e: f64 = StandardNormal.sample(rng);
        2.0f64.powi((k - 1 - j) as i32).sqrt() * t + e
    });
    ModelData::new(x).expect("synthetic data is valid")
}

/// Mean of each entry of a sequence of matrices.
pub fn matrix_mean(ms: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut acc = DMatrix::zeros(ms[0].nrows(), ms[0].ncols());
    for m in ms {
        acc += m;
    }
    acc / ms.len() as f64
}
