//! Posterior-mean estimation, quadratic loss, frequentist risk Monte Carlo,
//! and the shrinkage boundedness probe.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::analysis::{check_propriety, Propriety};
use crate::error::{Error, Result};
use crate::model::ModelData;
use crate::numeric::mean_se;
use crate::prior::HyperpriorSpec;
use crate::samplers::{default_updater_for, run_chain, ChainOutput, SamplerPlan};

/// Elementwise average of the theta draws.
pub fn posterior_mean(output: &ChainOutput) -> Result<DMatrix<f64>> {
    let first = output
        .draws
        .first()
        .ok_or_else(|| Error::InvalidInput("empty chain".into()))?;
    let mut acc = DMatrix::zeros(first.theta.nrows(), first.theta.ncols());
    for d in &output.draws {
        acc += &d.theta;
    }
    Ok(acc / output.draws.len() as f64)
}

/// (theta - delta)^t Q (theta - delta) on flattened mk-vectors.
pub fn quadratic_loss(theta: &DVector<f64>, delta: &DVector<f64>, q: &DMatrix<f64>) -> Result<f64> {
    let p = theta.len();
    if delta.len() != p || q.nrows() != p || q.ncols() != p {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: theta {p}, delta {}, Q {}x{}",
            delta.len(),
            q.nrows(),
            q.ncols()
        )));
    }
    let r = theta - delta;
    Ok(r.dot(&(q * &r)))
}

/// Row-major flattening of an m x k matrix into an mk-vector.
pub fn flatten(x: &DMatrix<f64>) -> DVector<f64> {
    let (m, k) = (x.nrows(), x.ncols());
    DVector::from_fn(m * k, |i, _| x[(i / k, i % k)])
}

/// A frequentist risk estimate for one estimator at one truth.
#[derive(Debug, Clone)]
pub struct RiskReport {
    pub estimator_name: String,
    pub theta_true: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub risk_estimate: f64,
    pub std_error: f64,
    pub n_rep: usize,
}

/// Monte Carlo estimate of R(theta, delta) = E[L(theta, delta(X))]: draws
/// X ~ N(theta_true, I) blockwise, applies the estimator, averages the loss.
/// The estimator receives the replicate index so chain-based estimators can
/// derive deterministic per-replicate seeds.
pub fn frequentist_risk_mc<R, F>(
    estimator_name: &str,
    theta_true: &DMatrix<f64>,
    mut estimator: F,
    q: &DMatrix<f64>,
    n_rep: usize,
    rng: &mut R,
) -> Result<RiskReport>
where
    R: Rng + ?Sized,
    F: FnMut(&ModelData, usize) -> Result<DMatrix<f64>>,
{
    if n_rep < 2 {
        return Err(Error::InvalidInput("need n_rep >= 2".into()));
    }
    let (m, k) = (theta_true.nrows(), theta_true.ncols());
    let theta_flat = flatten(theta_true);
    let mut losses = Vec::with_capacity(n_rep);
    for rep in 0..n_rep {
        let x = DMatrix::from_fn(m, k, |i, j| {
            theta_true[(i, j)] + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
        });
        let data = ModelData::new(x)?;
        let delta = estimator(&data, rep).map_err(|e| Error::EstimatorFailure {
            replicate: rep,
            source: Box::new(e),
        })?;
        losses.push(quadratic_loss(&theta_flat, &flatten(&delta), q)?);
    }
    let (risk_estimate, std_error) = mean_se(&losses);
    Ok(RiskReport {
        estimator_name: estimator_name.to_string(),
        theta_true: theta_true.clone(),
        q: q.clone(),
        risk_estimate,
        std_error,
        n_rep,
    })
}

/// Chain budget of one boundedness-probe evaluation point.
#[derive(Debug, Clone, Copy)]
pub struct ProbeBudget {
    pub n_iter: usize,
    pub n_burnin: usize,
    pub mh_inner_iters: usize,
    pub seed: u64,
}

impl Default for ProbeBudget {
    fn default() -> Self {
        // The resolution limit of the probe: 20k iterations, 5k burn-in.
        Self { n_iter: 20_000, n_burnin: 5_000, mh_inner_iters: 10, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BoundednessPoint {
    pub r: f64,
    /// max over probed directions of ||delta(x) - x||_F.
    pub max_deviation: f64,
    /// Chain failures at this radius (excluded from the max).
    pub failures: usize,
}

/// Probes sup-norm growth of the shrinkage delta(x) - x along rays: for each
/// radius r, evaluates ||delta(x) - x|| at `n_dir` random directions scaled
/// to radius r (the same directions at every radius) and records the max.
/// A bounded-shrinkage posterior mean shows no growth as r increases.
pub fn boundedness_probe<R: Rng + ?Sized>(
    spec: &HyperpriorSpec,
    m: usize,
    k: usize,
    r_grid: &[f64],
    n_dir: usize,
    budget: &ProbeBudget,
    rng: &mut R,
) -> Result<Vec<BoundednessPoint>> {
    if spec.vprior.l != 0.0 {
        return Err(Error::InvalidInput(
            "the boundedness results cover l = 0 priors only".into(),
        ));
    }
    let verdict = check_propriety(spec, m, k)?;
    if verdict.status == Propriety::Improper {
        return Err(Error::ImproperPosterior { rule: verdict.rule });
    }
    if n_dir == 0 || r_grid.is_empty() {
        return Err(Error::InvalidInput("need n_dir >= 1 and a nonempty r grid".into()));
    }
    let updater = default_updater_for(spec, k)?;

    // One set of directions, reused across radii so the growth comparison is
    // paired.
    let dirs: Vec<DMatrix<f64>> = (0..n_dir)
        .map(|_| {
            let g: DMatrix<f64> = DMatrix::from_fn(m, k, |_, _| {
                <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
            });
            let n = g.norm();
            g / n
        })
        .collect();

    let mut out = Vec::with_capacity(r_grid.len());
    for (ri, &r) in r_grid.iter().enumerate() {
        let mut max_dev: f64 = 0.0;
        let mut failures = 0usize;
        for (di, dir) in dirs.iter().enumerate() {
            let x = dir * r;
            let data = ModelData::new(x.clone())?;
            let mut plan = SamplerPlan::new(
                updater,
                budget.n_iter,
                budget.n_burnin,
                1,
                budget.seed.wrapping_add((ri * 1000 + di) as u64),
            );
            plan.mh_inner_iters = budget.mh_inner_iters;
            match run_chain(&data, spec, &plan).and_then(|o| posterior_mean(&o)) {
                Ok(delta) => max_dev = max_dev.max((delta - &x).norm()),
                Err(_) => failures += 1,
            }
        }
        out.push(BoundednessPoint { r, max_deviation: max_dev, failures });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::recommend_default;
    use crate::linalg::eye;
    use crate::model::ChainState;
    use crate::samplers::VUpdater;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn output_with_thetas(thetas: Vec<DMatrix<f64>>) -> ChainOutput {
        let draws = thetas
            .into_iter()
            .map(|theta| ChainState {
                theta,
                beta: DVector::zeros(2),
                v: eye(2),
                lambda: None,
            })
            .collect();
        ChainOutput {
            draws,
            v_attempt_counts: vec![],
            acceptance_rate: 1.0,
            v_updater: VUpdater::ConstantGibbs,
        }
    }

    #[test]
    fn posterior_mean_of_single_draw_is_that_draw() {
        let t = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let out = output_with_thetas(vec![t.clone()]);
        assert_eq!(posterior_mean(&out).unwrap(), t);
        let empty = output_with_thetas(vec![]);
        assert!(posterior_mean(&empty).is_err());
    }

    #[test]
    fn quadratic_loss_hand_values() {
        let q = eye(4);
        let theta = DVector::from_column_slice(&[3.0, 4.0, 0.0, 0.0]);
        let delta = DVector::zeros(4);
        assert_relative_eq!(quadratic_loss(&theta, &delta, &q).unwrap(), 25.0);
        assert_relative_eq!(quadratic_loss(&theta, &theta, &q).unwrap(), 0.0);
        assert_relative_eq!(
            quadratic_loss(&theta, &delta, &(q.clone() * 2.0)).unwrap(),
            50.0
        );
        let bad = DVector::zeros(3);
        assert!(quadratic_loss(&theta, &bad, &q).is_err());
    }

    #[test]
    fn loss_is_rotation_invariant_under_identity_q() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let q = eye(4);
        let theta = DVector::from_column_slice(&[1.0, -2.0, 0.5, 3.0]);
        let delta = DVector::from_column_slice(&[0.5, 0.0, 1.0, 2.0]);
        let base = quadratic_loss(&theta, &delta, &q).unwrap();
        for _ in 0..10 {
            let h = crate::randmat::sample_haar_orthogonal(4, &mut rng);
            let rotated =
                quadratic_loss(&(&h * &theta), &(&h * &delta), &q).unwrap();
            assert_relative_eq!(rotated, base, epsilon = 1e-10);
        }
    }

    #[test]
    fn mle_risk_is_the_dimension() {
        // E ||X - theta||^2 = mk for the identity estimator.
        let theta = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, -1.0, 0.0, 3.0, -2.0]);
        let q = eye(6);
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let report = frequentist_risk_mc(
            "mle",
            &theta,
            |data, _| Ok(data.matrix().clone()),
            &q,
            4000,
            &mut rng,
        )
        .unwrap();
        assert!(
            (report.risk_estimate - 6.0).abs() < 3.0 * report.std_error,
            "risk = {} +- {}",
            report.risk_estimate,
            report.std_error
        );
    }

    #[test]
    fn constant_truth_estimator_has_zero_risk() {
        let theta = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let q = eye(4);
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let report = frequentist_risk_mc(
            "oracle",
            &theta,
            |_, _| Ok(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0])),
            &q,
            100,
            &mut rng,
        )
        .unwrap();
        assert_eq!(report.risk_estimate, 0.0);
    }

    #[test]
    fn estimator_failures_carry_the_replicate() {
        let theta = DMatrix::from_row_slice(2, 2, &[0.0; 4]);
        let q = eye(4);
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let err = frequentist_risk_mc(
            "broken",
            &theta,
            |_, rep| {
                if rep == 3 {
                    Err(Error::NumericFailure("boom".into()))
                } else {
                    Ok(DMatrix::zeros(2, 2))
                }
            },
            &q,
            10,
            &mut rng,
        )
        .unwrap_err();
        assert!(matches!(err, Error::EstimatorFailure { replicate: 3, .. }));
    }

    #[test]
    fn shift_equivariance_under_flat_mean_prior() {
        // Shifting the data shifts the posterior mean by the same amount
        // (paired seeds make the comparison exact up to MC noise).
        use crate::prior::{named_v_prior, BetaPriorSpec, VPriorName};
        let base = DMatrix::from_row_slice(
            6,
            2,
            &[1.0, 0.3, -0.4, 0.8, 0.2, -1.1, 1.4, 0.0, -0.9, 0.5, 0.3, 0.2],
        );
        let shift = DVector::from_column_slice(&[10.0, -5.0]);
        let mut shifted = base.clone();
        for i in 0..6 {
            for j in 0..2 {
                shifted[(i, j)] += shift[j];
            }
        }
        let spec = HyperpriorSpec {
            vprior: named_v_prior(VPriorName::HierJeffreys, 2).unwrap(),
            bprior: BetaPriorSpec::Flat,
        };
        let plan = SamplerPlan::new(VUpdater::HierJeffreysAr, 4000, 1000, 1, 99);
        let d1 = posterior_mean(
            &run_chain(&ModelData::new(base).unwrap(), &spec, &plan).unwrap(),
        )
        .unwrap();
        let d2 = posterior_mean(
            &run_chain(&ModelData::new(shifted).unwrap(), &spec, &plan).unwrap(),
        )
        .unwrap();
        let mut expected = d1.clone();
        for i in 0..6 {
            for j in 0..2 {
                expected[(i, j)] += shift[j];
            }
        }
        assert!(
            (d2 - expected).norm() < 0.25,
            "equivariance violated beyond MC noise"
        );
    }

    #[test]
    fn probe_rejects_repulsive_priors() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let mut spec = recommend_default(2).unwrap();
        spec.vprior = crate::prior::named_v_prior(crate::prior::VPriorName::HierJeffreys, 2).unwrap();
        assert!(boundedness_probe(&spec, 3, 2, &[1.0], 2, &ProbeBudget::default(), &mut rng)
            .is_err());
    }
}
