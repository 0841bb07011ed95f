//! Random-matrix primitives: Haar-distributed orthogonal matrices,
//! Wishart/inverse-Wishart draws, and multivariate-normal helpers.
//!
//! Inverse-Wishart parameterization is pinned crate-wide:
//!
//! ```text
//! density(V | df, scale)  proportional to  |V|^-(df+k+1)/2 exp(-tr(V^-1 scale)/2)
//! ```
//!
//! so E[V] = scale / (df - k - 1) whenever df > k + 1, and a proper draw
//! needs df > k - 1.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, symmetrize};

/// A draw from the Haar (rotation-invariant) measure on the orthogonal group
/// O(k): QR of a standard Gaussian matrix with the Q columns re-signed by the
/// diagonal of R.
pub fn sample_haar_orthogonal<R: Rng + ?Sized>(k: usize, rng: &mut R) -> DMatrix<f64> {
    assert!(k >= 1, "k must be >= 1");
    let g: DMatrix<f64> = DMatrix::from_fn(k, k, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let r_diag = qr.r().diagonal();
    let mut q = qr.q();
    for j in 0..k {
        if r_diag[j] < 0.0 {
            for i in 0..k {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Lower-triangular Bartlett factor A: A_ii^2 ~ chi^2(df - i), A_ij ~ N(0,1)
/// below the diagonal. Needs df > k - 1 so every chi-square has positive
/// degrees of freedom.
fn bartlett_lower<R: Rng + ?Sized>(k: usize, df: f64, rng: &mut R) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(k, k);
    for i in 0..k {
        let chi = ChiSquared::new(df - i as f64).expect("validated dof");
        let c: f64 = chi.sample(rng);
        a[(i, i)] = c.sqrt();
        for j in 0..i {
            a[(i, j)] = StandardNormal.sample(rng);
        }
    }
    a
}

/// A Wishart(df, scale) draw under density |X|^(df-k-1)/2 exp(-tr(scale^-1 X)/2).
pub fn sample_wishart<R: Rng + ?Sized>(
    df: f64,
    scale: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let k = scale.nrows();
    if df <= k as f64 - 1.0 {
        return Err(Error::InvalidInput(format!(
            "Wishart needs df > k - 1 = {}, got df = {df}",
            k - 1
        )));
    }
    let l = cholesky(scale, "Wishart scale")?.unpack();
    let a = bartlett_lower(k, df, rng);
    let t = &l * a;
    let mut x = &t * t.transpose();
    symmetrize(&mut x);
    Ok(x)
}

/// An inverse-Wishart(df, scale) draw under the pinned density
/// |V|^-(df+k+1)/2 exp(-tr(V^-1 scale)/2): invert a Wishart(df, scale^-1)
/// draw, done with triangular solves only.
pub fn sample_inverse_wishart<R: Rng + ?Sized>(
    df: f64,
    scale: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let k = scale.nrows();
    if df <= k as f64 - 1.0 {
        return Err(Error::InvalidInput(format!(
            "inverse Wishart needs df > k - 1 = {}, got df = {df}",
            k - 1
        )));
    }
    let r = cholesky(scale, "inverse-Wishart scale")?.unpack();
    let a = bartlett_lower(k, df, rng);
    // V = (A^-1 R^t)^t (A^-1 R^t) has the inverse-Wishart law with scale RR^t.
    let t = a
        .solve_lower_triangular(&r.transpose())
        .ok_or_else(|| Error::NumericFailure("singular Bartlett factor".into()))?;
    let mut v = t.transpose() * t;
    symmetrize(&mut v);
    Ok(v)
}

/// N(mean, cov) draw via the Cholesky factor of the covariance.
pub fn sample_mvn_cov<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let l = cholesky(cov, "mvn covariance")?.unpack();
    let z = DVector::from_fn(mean.len(), |_, _| StandardNormal.sample(rng));
    Ok(mean + l * z)
}

/// Draw from N(P^-1 b, P^-1) given the precision P and the linear term b.
pub fn sample_mvn_precision<R: Rng + ?Sized>(
    precision: &DMatrix<f64>,
    b: &DVector<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let ch = cholesky(precision, "mvn precision")?;
    let mean = ch.solve(b);
    let lt = ch.l().transpose();
    let z = DVector::from_fn(b.len(), |_, _| StandardNormal.sample(rng));
    let shift = lt
        .solve_upper_triangular(&z)
        .ok_or_else(|| Error::NumericFailure("singular precision factor".into()))?;
    Ok(mean + shift)
}
