//! Observation data and Markov-chain state for the matrix-of-means model.
//!
//! The model: m independent blocks, X_i ~ N_k(theta_i, I) with
//! theta_i ~ N_k(beta, V), so the unknowns are the block means theta (m x k),
//! the hyper-mean beta (k) and the hyper-covariance V (k x k).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// The m x k observation matrix: one row per block.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelData {
    x: DMatrix<f64>,
}

impl ModelData {
    /// Wraps an m x k matrix of observations. Requires k >= 2 (the model is
    /// about vector means) and finite entries.
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::InvalidInput("data must have at least one block".into()));
        }
        if x.ncols() < 2 {
            return Err(Error::InvalidInput(format!(
                "block dimension k must be >= 2, got {}",
                x.ncols()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("data contains non-finite entries".into()));
        }
        Ok(Self { x })
    }

    /// Number of blocks m.
    pub fn m(&self) -> usize {
        self.x.nrows()
    }

    /// Block dimension k.
    pub fn k(&self) -> usize {
        self.x.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.x
    }

    /// The i-th block X_i as a column vector.
    pub fn block(&self, i: usize) -> DVector<f64> {
        self.x.row(i).transpose()
    }

    /// Grand mean x_bar = (1/m) sum_i X_i.
    pub fn mean(&self) -> DVector<f64> {
        let mut s = DVector::zeros(self.k());
        for i in 0..self.m() {
            s += self.block(i);
        }
        s / self.m() as f64
    }

    /// Centered scatter matrix sum_i (X_i - x_bar)(X_i - x_bar)^t.
    pub fn scatter(&self) -> DMatrix<f64> {
        let xbar = self.mean();
        let k = self.k();
        let mut s = DMatrix::zeros(k, k);
        for i in 0..self.m() {
            let d = self.block(i) - &xbar;
            s += &d * d.transpose();
        }
        s
    }
}

/// Current state (theta, beta, V[, lambda]) of one MCMC chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    /// Block means, m x k (one row per block).
    pub theta: DMatrix<f64>,
    /// Hyper-mean, length k.
    pub beta: DVector<f64>,
    /// Hyper-covariance, k x k symmetric positive definite.
    pub v: DMatrix<f64>,
    /// Latent mixing scale of the hierarchical beta prior, when present.
    pub lambda: Option<f64>,
}

impl ChainState {
    pub fn m(&self) -> usize {
        self.theta.nrows()
    }

    pub fn k(&self) -> usize {
        self.theta.ncols()
    }

    /// Row mean of theta.
    pub fn theta_bar(&self) -> DVector<f64> {
        let mut s = DVector::zeros(self.k());
        for i in 0..self.m() {
            s += self.theta.row(i).transpose();
        }
        s / self.m() as f64
    }

    /// W(theta, beta) = sum_i (theta_i - beta)(theta_i - beta)^t.
    pub fn theta_scatter_about_beta(&self) -> DMatrix<f64> {
        let k = self.k();
        let mut s = DMatrix::zeros(k, k);
        for i in 0..self.m() {
            let d = self.theta.row(i).transpose() - &self.beta;
            s += &d * d.transpose();
        }
        s
    }
}
