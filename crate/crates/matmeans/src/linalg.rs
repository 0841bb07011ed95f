//! Symmetric-matrix utilities: the (H, D) spectral coordinates and the small
//! positive-definite helpers everything else leans on.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative tolerance below which two eigenvalues count as coincident.
pub const EIGENVALUE_TIE_TOL: f64 = 1e-12;

/// Symmetry tolerance for inputs that must be exactly symmetric.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Spectral coordinates of a symmetric positive-definite matrix:
/// V = H^t D H with orthonormal H (rows are eigenvectors) and
/// D = diag(d), d strictly descending.
#[derive(Debug, Clone)]
pub struct Eigendecomp {
    /// k x k orthonormal matrix; row i is the eigenvector for d[i].
    pub h: DMatrix<f64>,
    /// Eigenvalues, strictly descending, all positive.
    pub d: DVector<f64>,
}

impl Eigendecomp {
    /// Rebuilds H^t D H.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let dm = DMatrix::from_diagonal(&self.d);
        let mut v = self.h.transpose() * dm * &self.h;
        symmetrize(&mut v);
        v
    }

    /// sum over i < j of log(d_i - d_j); the eigenvalue-repulsion term.
    pub fn log_gap_product(&self) -> f64 {
        log_gap_product(self.d.as_slice())
    }
}

/// sum over i < j of log(d_i - d_j) for a descending slice.
pub fn log_gap_product(d: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..d.len() {
        for j in (i + 1)..d.len() {
            s += (d[i] - d[j]).ln();
        }
    }
    s
}

/// Spectral decomposition with the crate's conventions: descending
/// eigenvalues, per-eigenvector sign fixed so its first non-negligible entry
/// is positive, ties rejected.
pub fn eigendecompose(v: &DMatrix<f64>) -> Result<Eigendecomp> {
    check_square_symmetric(v)?;
    let k = v.nrows();
    let eig = v.clone().symmetric_eigen();

    // Sort descending.
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let d = DVector::from_fn(k, |i, _| eig.eigenvalues[order[i]]);

    if d[k - 1] <= 0.0 {
        return Err(Error::NotPositiveDefinite(format!(
            "smallest eigenvalue {:.3e}",
            d[k - 1]
        )));
    }
    let tol = EIGENVALUE_TIE_TOL * d[0];
    for i in 0..k - 1 {
        let gap = d[i] - d[i + 1];
        if gap < tol {
            return Err(Error::DegenerateSpectrum { gap, tol });
        }
    }

    // Rows of H are the eigenvectors; fix each eigenvector's sign.
    let mut h = DMatrix::zeros(k, k);
    for (row, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let flip = match col.iter().find(|e| e.abs() > 1e-9) {
            Some(e) if *e < 0.0 => -1.0,
            _ => 1.0,
        };
        for j in 0..k {
            h[(row, j)] = flip * col[j];
        }
    }
    Ok(Eigendecomp { h, d })
}

/// Eigenvalues of a symmetric matrix, descending, without the tie check.
pub fn sym_eigenvalues_desc(v: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_square_symmetric(v)?;
    let mut ev: Vec<f64> = v.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    Ok(DVector::from_vec(ev))
}

pub(crate) fn check_square_symmetric(v: &DMatrix<f64>) -> Result<()> {
    if v.nrows() != v.ncols() {
        return Err(Error::InvalidInput(format!(
            "expected a square matrix, got {}x{}",
            v.nrows(),
            v.ncols()
        )));
    }
    let scale = 1.0 + v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    for i in 0..v.nrows() {
        for j in (i + 1)..v.ncols() {
            if (v[(i, j)] - v[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::InvalidInput(format!(
                    "matrix is not symmetric at ({i},{j}): {} vs {}",
                    v[(i, j)],
                    v[(j, i)]
                )));
            }
        }
    }
    Ok(())
}

/// Forces exact symmetry by averaging with the transpose (cleans up the last
/// few ulps after products of symmetric factors).
pub fn symmetrize(v: &mut DMatrix<f64>) {
    for i in 0..v.nrows() {
        for j in (i + 1)..v.ncols() {
            let a = 0.5 * (v[(i, j)] + v[(j, i)]);
            v[(i, j)] = a;
            v[(j, i)] = a;
        }
    }
}

/// Cholesky of a symmetric positive-definite matrix, with a typed error.
pub fn cholesky(v: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, Dyn>> {
    Cholesky::new(v.clone())
        .ok_or_else(|| Error::NotPositiveDefinite(format!("{what}: Cholesky failed")))
}

/// log det of a symmetric positive-definite matrix via Cholesky.
pub fn log_det_pd(v: &DMatrix<f64>, what: &str) -> Result<f64> {
    let ch = cholesky(v, what)?;
    Ok(2.0 * ch.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

/// Identity matrix shorthand.
pub fn eye(k: usize) -> DMatrix<f64> {
    DMatrix::identity(k, k)
}
