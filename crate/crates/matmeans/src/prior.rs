//! The hyperprior family on (beta, V).
//!
//! V-priors are the two-parameter-plus-repulsion family
//!
//! ```text
//! pi(V) = |I + V|^-(a2-a1) |V|^-a1 [prod_{i<j} (d_i - d_j)]^-(1-l),
//! ```
//!
//! with 0 <= l <= 1 and d_1 > ... > d_k the eigenvalues of V. All densities
//! here are unnormalized (the interesting members are improper); consumers
//! work with ratios and log-differences only.
//!
//! beta-priors come in three cases: flat, normal N_k(beta0, A), and the
//! normal-mixture hierarchy beta|lambda ~ N_k(beta0, lambda A) with
//! pi(lambda) proportional to lambda^-b exp(-c/lambda).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, eye, log_det_pd, log_gap_product, sym_eigenvalues_desc};
use crate::linalg::EIGENVALUE_TIE_TOL;

/// The named members of the V-prior family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VPriorName {
    /// pi(V) = 1.
    Constant,
    /// pi(V) = |V|^-(k+1)/2 (the usual Jeffreys prior for a covariance
    /// matrix with known mean; improper posterior in this hierarchy).
    NonhierJeffreys,
    /// pi(V) = |I + V|^-(k+1)/2.
    HierJeffreys,
    /// pi(V) = [|V| prod (d_i - d_j)]^-1.
    NonhierReference,
    /// pi(V) = [|I + V| prod (d_i - d_j)]^-1.
    HierReferenceA,
    /// pi(V) = [|V|^(2k-1)/(2k) prod (d_i - d_j)]^-1.
    HierReferenceB,
    /// Anything else, specified by raw (a1, a2, l).
    Custom,
}

/// Exponents of one member of the V-prior family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VPriorParams {
    pub a1: f64,
    pub a2: f64,
    /// Repulsion exponent: l = 1 keeps the prod (d_i - d_j) factor in the
    /// (H, D) coordinates, l = 0 removes it. Must lie in [0, 1].
    pub l: f64,
    pub name: VPriorName,
}

impl VPriorParams {
    pub fn custom(a1: f64, a2: f64, l: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&l) {
            return Err(Error::InvalidInput(format!("l must lie in [0, 1], got {l}")));
        }
        if !a1.is_finite() || !a2.is_finite() {
            return Err(Error::InvalidInput("a1, a2 must be finite".into()));
        }
        Ok(Self { a1, a2, l, name: VPriorName::Custom })
    }
}

/// The (a1, a2, l) triple for a named prior at block dimension k.
pub fn named_v_prior(name: VPriorName, k: usize) -> Result<VPriorParams> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("k must be >= 2, got {k}")));
    }
    let kf = k as f64;
    let (a1, a2, l) = match name {
        VPriorName::Constant => (0.0, 0.0, 1.0),
        VPriorName::NonhierJeffreys => ((kf + 1.0) / 2.0, (kf + 1.0) / 2.0, 1.0),
        VPriorName::HierJeffreys => (0.0, (kf + 1.0) / 2.0, 1.0),
        VPriorName::NonhierReference => (1.0, 1.0, 0.0),
        VPriorName::HierReferenceA => (0.0, 1.0, 0.0),
        VPriorName::HierReferenceB => {
            let a = (2.0 * kf - 1.0) / (2.0 * kf);
            (a, a, 0.0)
        }
        VPriorName::Custom => {
            return Err(Error::InvalidInput(
                "Custom has no table entry; build it with VPriorParams::custom".into(),
            ))
        }
    };
    Ok(VPriorParams { a1, a2, l, name })
}

/// Prior on the hyper-mean beta.
#[derive(Debug, Clone, PartialEq)]
pub enum BetaPriorSpec {
    /// Case 1: pi(beta) = 1.
    Flat,
    /// Case 2: beta ~ N_k(beta0, A).
    Normal { beta0: DVector<f64>, a: DMatrix<f64> },
    /// Case 3: beta|lambda ~ N_k(beta0, lambda A),
    /// pi(lambda) = lambda^-b exp(-c/lambda).
    Hierarchical { beta0: DVector<f64>, a: DMatrix<f64>, b: f64, c: f64 },
}

impl BetaPriorSpec {
    pub fn normal(beta0: DVector<f64>, a: DMatrix<f64>) -> Result<Self> {
        validate_scale_matrix(&beta0, &a)?;
        Ok(Self::Normal { beta0, a })
    }

    pub fn hierarchical(beta0: DVector<f64>, a: DMatrix<f64>, b: f64, c: f64) -> Result<Self> {
        validate_scale_matrix(&beta0, &a)?;
        if b < 0.0 {
            return Err(Error::InvalidInput(format!("b must be >= 0, got {b}")));
        }
        if c <= 0.0 {
            return Err(Error::InvalidInput(format!("c must be > 0, got {c}")));
        }
        Ok(Self::Hierarchical { beta0, a, b, c })
    }

    /// Case number as the docs speak of it: 1, 2 or 3.
    pub fn case(&self) -> u8 {
        match self {
            Self::Flat => 1,
            Self::Normal { .. } => 2,
            Self::Hierarchical { .. } => 3,
        }
    }
}

fn validate_scale_matrix(beta0: &DVector<f64>, a: &DMatrix<f64>) -> Result<()> {
    crate::linalg::check_square_symmetric(a)?;
    if a.nrows() != beta0.len() {
        return Err(Error::InvalidInput(format!(
            "beta0 has length {} but A is {}x{}",
            beta0.len(),
            a.nrows(),
            a.ncols()
        )));
    }
    cholesky(a, "beta prior scale A")?;
    Ok(())
}

/// The whole hyperprior: pi(beta, V) = pi(beta) pi(V).
#[derive(Debug, Clone, PartialEq)]
pub struct HyperpriorSpec {
    pub vprior: VPriorParams,
    pub bprior: BetaPriorSpec,
}

/// log pi(V) for the family above, constants dropped:
/// -(a2-a1) log|I+V| - a1 log|V| - (1-l) sum_{i<j} log(d_i - d_j).
///
/// With l < 1 the repulsion term requires a simple spectrum; coincident
/// eigenvalues raise `DegenerateSpectrum` rather than returning +-inf.
pub fn log_v_prior_density(v: &DMatrix<f64>, params: &VPriorParams) -> Result<f64> {
    let d = sym_eigenvalues_desc(v)?;
    let k = d.len();
    if d[k - 1] <= 0.0 {
        return Err(Error::NotPositiveDefinite(format!(
            "smallest eigenvalue {:.3e}",
            d[k - 1]
        )));
    }
    let log_det_v: f64 = d.iter().map(|x| x.ln()).sum();
    let log_det_iv: f64 = d.iter().map(|x| x.ln_1p()).sum();
    let mut out = -(params.a2 - params.a1) * log_det_iv - params.a1 * log_det_v;
    if params.l < 1.0 {
        let tol = EIGENVALUE_TIE_TOL * d[0];
        for i in 0..k - 1 {
            let gap = d[i] - d[i + 1];
            if gap < tol {
                return Err(Error::DegenerateSpectrum { gap, tol });
            }
        }
        out -= (1.0 - params.l) * log_gap_product(d.as_slice());
    }
    Ok(out)
}

/// log pi(V) expressed in the transformed (H, D) coordinates:
/// l * sum log(d_i - d_j) - (a2-a1) log|I+D| - a1 log|D|.
///
/// Relates to `log_v_prior_density` through the change-of-variables identity
/// pi(H, D) = pi(H^t D H) * prod (d_i - d_j).
pub fn log_v_prior_density_hd(d_desc: &[f64], params: &VPriorParams) -> f64 {
    let log_det_d: f64 = d_desc.iter().map(|x| x.ln()).sum();
    let log_det_id: f64 = d_desc.iter().map(|x| x.ln_1p()).sum();
    let mut out = -(params.a2 - params.a1) * log_det_id - params.a1 * log_det_d;
    if params.l > 0.0 {
        out += params.l * log_gap_product(d_desc);
    }
    out
}

/// log pi(beta), by case.
///
/// - Case 1: 0.
/// - Case 2: the (normalized) N_k(beta0, A) log-density.
/// - Case 3 with `lambda`: the N_k(beta0, lambda A) log-density.
/// - Case 3 without `lambda`: the marginal t form, unnormalized:
///   -(k/2 + b - 1) log[1 + (1/2c)(beta-beta0)^t A^-1 (beta-beta0)].
pub fn log_beta_prior_density(
    beta: &DVector<f64>,
    spec: &BetaPriorSpec,
    lambda: Option<f64>,
) -> Result<f64> {
    match spec {
        BetaPriorSpec::Flat => {
            if lambda.is_some() {
                return Err(Error::InvalidInput("lambda given for a flat beta prior".into()));
            }
            Ok(0.0)
        }
        BetaPriorSpec::Normal { beta0, a } => {
            if lambda.is_some() {
                return Err(Error::InvalidInput("lambda given for a Case 2 beta prior".into()));
            }
            log_normal_density(beta, beta0, a, 1.0)
        }
        BetaPriorSpec::Hierarchical { beta0, a, b, c } => match lambda {
            Some(lam) => {
                if lam <= 0.0 {
                    return Err(Error::InvalidInput(format!("lambda must be > 0, got {lam}")));
                }
                log_normal_density(beta, beta0, a, lam)
            }
            None => {
                let k = beta.len() as f64;
                let q = mahalanobis_sq(beta, beta0, a)?;
                Ok(-(k / 2.0 + b - 1.0) * (q / (2.0 * c)).ln_1p())
            }
        },
    }
}

fn log_normal_density(
    beta: &DVector<f64>,
    beta0: &DVector<f64>,
    a: &DMatrix<f64>,
    scale: f64,
) -> Result<f64> {
    let k = beta.len();
    if beta0.len() != k || a.nrows() != k {
        return Err(Error::InvalidInput("beta dimension mismatch".into()));
    }
    let log_det = log_det_pd(a, "beta prior scale A")? + k as f64 * scale.ln();
    let q = mahalanobis_sq(beta, beta0, a)? / scale;
    Ok(-0.5 * (k as f64 * (2.0 * PI).ln() + log_det + q))
}

fn mahalanobis_sq(beta: &DVector<f64>, beta0: &DVector<f64>, a: &DMatrix<f64>) -> Result<f64> {
    let ch = cholesky(a, "beta prior scale A")?;
    let d = beta - beta0;
    let s = ch.solve(&d);
    Ok(d.dot(&s))
}

/// log pi(lambda) = -b log(lambda) - c/lambda, constants dropped.
pub fn log_lambda_prior_density(lambda: f64, b: f64, c: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!("lambda must be > 0, got {lambda}")));
    }
    if b < 0.0 || c <= 0.0 {
        return Err(Error::InvalidInput(format!("need b >= 0 and c > 0, got b={b}, c={c}")));
    }
    Ok(-b * lambda.ln() - c / lambda)
}

/// Convenience: identity scale with zero center at dimension k.
pub fn default_case3_beta_prior(k: usize) -> BetaPriorSpec {
    BetaPriorSpec::Hierarchical {
        beta0: DVector::zeros(k),
        a: eye(k),
        b: 0.5,
        c: 0.5,
    }
}
