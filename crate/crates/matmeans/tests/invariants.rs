//! Cross-module invariants: change-of-variables identities, matrix bounds as
//! numeric properties, sampler detailed balance and moment oracles, and
//! chain-output hygiene.

mod common;

use common::{matrix_mean, synth_blocks};
use matmeans::analysis::recommend_default;
use matmeans::linalg::{eigendecompose, eye, log_gap_product, sym_eigenvalues_desc};
use matmeans::marginal::{log_vlambda_marginal_target, mbar_munder_estimate, IntegrationConfig};
use matmeans::model::{ChainState, ModelData};
use matmeans::numeric::{batch_means_se, fit_slope, mean_se};
use matmeans::prior::{
    default_case3_beta_prior, log_v_prior_density, log_v_prior_density_hd, named_v_prior,
    BetaPriorSpec, HyperpriorSpec, VPriorName,
};
use matmeans::randmat::{sample_haar_orthogonal, sample_inverse_wishart};
use matmeans::samplers::{
    reference_mh_log_accept_ratio, run_chain, sample_v_lambda_marginal_hitrun,
    sample_v_reference_mh, ReferenceVariant, SamplerPlan, VUpdater,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn random_pd(k: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let g: DMatrix<f64> = DMatrix::from_fn(k, k, |_, _| StandardNormal.sample(rng));
    let mut v = &g * g.transpose() + eye(k) * 0.05;
    matmeans::linalg::symmetrize(&mut v);
    v
}

/// pi(H, D) = pi(H^t D H) prod (d_i - d_j): the change-of-variables identity,
/// for every named prior and k up to 8.
#[test]
fn jacobian_identity_for_named_priors() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for k in 2..=8usize {
        for (name, _) in [
            (VPriorName::Constant, ""),
            (VPriorName::NonhierJeffreys, ""),
            (VPriorName::HierJeffreys, ""),
            (VPriorName::NonhierReference, ""),
            (VPriorName::HierReferenceA, ""),
            (VPriorName::HierReferenceB, ""),
        ] {
            let params = named_v_prior(name, k).unwrap();
            for _ in 0..20 {
                let v = random_pd(k, &mut rng);
                let d = sym_eigenvalues_desc(&v).unwrap();
                let d: Vec<f64> = d.iter().copied().collect();
                let direct = log_v_prior_density(&v, &params).unwrap();
                let via_hd = log_v_prior_density_hd(&d, &params) - log_gap_product(&d);
                assert!(
                    (direct - via_hd).abs() < 1e-8,
                    "{name:?} k={k}: {direct} vs {via_hd}"
                );
            }
        }
    }
}

/// eigendecompose . reconstruct is the identity on 1000 random PD matrices.
#[test]
fn eigendecompose_reconstructs() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut count = 0;
    while count < 1000 {
        let k = 2 + (count % 7);
        let v = random_pd(k, &mut rng);
        match eigendecompose(&v) {
            Ok(e) => {
                let rel = (e.reconstruct() - &v).norm() / v.norm();
                assert!(rel < 1e-8, "k={k}: relative error {rel}");
                let orth = (e.h.transpose() * &e.h - eye(k)).norm();
                assert!(orth < 1e-10);
                for i in 0..k - 1 {
                    assert!(e.d[i] > e.d[i + 1]);
                }
                count += 1;
            }
            Err(_) => continue, // a tie; not counted
        }
    }
}

/// Haar draws are orthonormal to 1e-10 and mean-zero entrywise at 4 sigma
/// over 1e5 draws (k = 3).
#[test]
fn haar_mean_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    let n = 100_000usize;
    let k = 3;
    let mut sums = DMatrix::zeros(k, k);
    for _ in 0..n {
        let h = sample_haar_orthogonal(k, &mut rng);
        debug_assert!((h.transpose() * &h - eye(k)).norm() < 1e-10);
        sums += h;
    }
    // Each entry has variance 1/k, so SE of the mean is 1/sqrt(nk).
    let se = 1.0 / ((n * k) as f64).sqrt();
    for i in 0..k {
        for j in 0..k {
            let mean = sums[(i, j)] / n as f64;
            assert!(mean.abs() < 4.0 * se, "entry ({i},{j}) mean {mean} vs 4 sigma {}", 4.0 * se);
        }
    }
}

/// Inverse-Wishart sample mean matches scale/(df - k - 1) within 3 MC
/// standard errors for (k, df) in {(2, 6), (3, 8)}.
#[test]
fn inverse_wishart_mean_matches_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    for (k, df) in [(2usize, 6.0f64), (3, 8.0)] {
        let scale = random_pd(k, &mut rng) + eye(k);
        let want = &scale / (df - k as f64 - 1.0);
        let n = 100_000usize;
        let mut sums = vec![Vec::with_capacity(n); k * k];
        for _ in 0..n {
            let v = sample_inverse_wishart(df, &scale, &mut rng).unwrap();
            for i in 0..k {
                for j in 0..k {
                    sums[i * k + j].push(v[(i, j)]);
                }
            }
        }
        for i in 0..k {
            for j in 0..k {
                let (mean, se) = mean_se(&sums[i * k + j]);
                assert!(
                    (mean - want[(i, j)]).abs() < 3.0 * se,
                    "(k={k}, df={df}) entry ({i},{j}): {mean} vs {} +- {se}",
                    want[(i, j)]
                );
            }
        }
    }
}

/// Determinant sandwich and quadratic-form ordering for the mean-part matrix
/// I + D + m H A H^t, on 1000 random draws with k <= 4.
#[test]
fn mean_part_matrix_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(113);
    for trial in 0..1000 {
        let k = 2 + (trial % 3);
        let m = 1 + (trial % 7);
        let mf = m as f64;
        let h = sample_haar_orthogonal(k, &mut rng);
        let a = random_pd(k, &mut rng);
        let d_vals: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * 10.0).collect();
        let d = DMatrix::from_diagonal(&DVector::from_vec(d_vals));
        let rho = sym_eigenvalues_desc(&a).unwrap();
        let (rho1, rhok) = (rho[0], rho[k - 1]);

        let base = eye(k) + &d;
        let mid = &base + mf * (&h * &a * h.transpose());
        let lo = &base + (mf * rhok) * eye(k);
        let hi = &base + (mf * rho1) * eye(k);

        let det = |m: &DMatrix<f64>| m.determinant();
        let slack = 1.0 + 1e-12;
        assert!(det(&base) <= det(&lo) * slack);
        assert!(det(&lo) <= det(&mid) * slack);
        assert!(det(&mid) <= det(&hi) * slack);
        assert!(det(&hi) <= (1.0 + mf * rho1).powi(k as i32) * det(&base) * slack);

        let x: DVector<f64> = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
        let quad = |m: &DMatrix<f64>| x.dot(&(m.clone().try_inverse().unwrap() * &x));
        let (qlo, qmid, qhi) = (quad(&hi), quad(&mid), quad(&lo));
        assert!(qlo <= qmid * slack && qmid <= qhi * slack, "{qlo} {qmid} {qhi}");
    }
}

/// The exponential factor lies in (exp(-sum ||h_i||^2 / 2), 1] for any
/// orthonormal H and PSD A (the integrand bound behind the propriety proofs).
#[test]
fn exponential_factor_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(127);
    for trial in 0..500 {
        let k = 2 + (trial % 3);
        let m = 1 + (trial % 5);
        let h = sample_haar_orthogonal(k, &mut rng);
        let a = random_pd(k, &mut rng);
        let d = DMatrix::from_diagonal(&DVector::from_fn(k, |_, _| rng.random::<f64>() * 5.0));
        let mat = eye(k) + &d + &a;
        let inv = mat.try_inverse().unwrap();
        let mut qsum = 0.0;
        let mut nsum = 0.0;
        for _ in 0..m {
            let hi: DVector<f64> = DVector::from_fn(k, |_, _| StandardNormal.sample(&mut rng));
            let z = &h * &hi;
            qsum += z.dot(&(&inv * &z));
            nsum += hi.norm_squared();
        }
        let factor = (-0.5 * qsum).exp();
        let lower = (-0.5 * nsum).exp();
        assert!(factor <= 1.0 + 1e-12);
        assert!(factor > lower * (1.0 - 1e-12), "{factor} vs lower {lower}");
    }
}

/// The ordered spectral parameterization (angle, d1 > d2) with Jacobian
/// (d1 - d2) reproduces direct integrals over the PD cone: ratios of two
/// integrals agree between the routes (k = 2).
#[test]
fn spectral_change_of_variables_matches_direct_integral() {
    // Integrands: g1 weights the off-diagonal, g2 is a plain Gaussian decay.
    let g1 = |v: &DMatrix<f64>| (-(v[(0, 0)] + v[(1, 1)])).exp() * (1.0 + v[(0, 1)] * v[(0, 1)]);
    let g2 = |v: &DMatrix<f64>| (-(v[(0, 0)] + v[(1, 1)])).exp();

    // Route 1: direct integral over (v11, v22, v12) restricted to PD.
    let n = 160;
    let hmax = 12.0;
    let step = hmax / n as f64;
    let (mut d1a, mut d1b) = (0.0, 0.0);
    for i in 0..n {
        let v11 = (i as f64 + 0.5) * step;
        for j in 0..n {
            let v22 = (j as f64 + 0.5) * step;
            let lim = (v11 * v22).sqrt();
            let n12 = 80;
            let s12 = 2.0 * lim / n12 as f64;
            for l in 0..n12 {
                let v12: f64 = -lim + (l as f64 + 0.5) * s12;
                let v = DMatrix::from_row_slice(2, 2, &[v11, v12, v12, v22]);
                let w = step * step * s12;
                d1a += w * g1(&v);
                d1b += w * g2(&v);
            }
        }
    }

    // Route 2: (phi, d1 > d2) with Jacobian (d1 - d2).
    let nphi = 64;
    let nd = 200;
    let dstep = hmax / nd as f64;
    let (mut d2a, mut d2b) = (0.0, 0.0);
    for p in 0..nphi {
        let phi = std::f64::consts::PI * (p as f64 + 0.5) / nphi as f64;
        let (c, s) = (phi.cos(), phi.sin());
        for i in 0..nd {
            let d1 = (i as f64 + 0.5) * dstep;
            for j in 0..i {
                let d2 = (j as f64 + 0.5) * dstep;
                let v11 = c * c * d1 + s * s * d2;
                let v22 = s * s * d1 + c * c * d2;
                let v12 = c * s * (d1 - d2);
                let v = DMatrix::from_row_slice(2, 2, &[v11, v12, v12, v22]);
                let w = (d1 - d2) * dstep * dstep * (std::f64::consts::PI / nphi as f64);
                d2a += w * g1(&v);
                d2b += w * g2(&v);
            }
        }
    }

    let r1 = d1a / d1b;
    let r2 = d2a / d2b;
    assert!(
        (r1 - r2).abs() / r1 < 0.01,
        "ratio mismatch: direct {r1} vs spectral {r2}"
    );
}

/// Two-state restriction of the reference-prior MH step: the empirical
/// occupancy must match q(V) w(V) with w = target/proposal computed from
/// first principles. An inverted acceptance ratio fails this decisively.
#[test]
fn reference_mh_two_state_detailed_balance() {
    let mut rng = ChaCha8Rng::seed_from_u64(131);
    let k = 2usize;
    let m = 6usize;
    let w_mat = eye(k) * 4.0;

    let va = DMatrix::from_diagonal(&DVector::from_column_slice(&[2.0, 0.5]));
    let vb = DMatrix::from_diagonal(&DVector::from_column_slice(&[6.0, 1.5]));

    // First-principles log target/proposal for reference prior (a):
    // target = |I+V|^-1 prod(gaps)^-1 |V|^-m/2 exp(-tr(V^-1 W)/2),
    // proposal = |V|^-(m+k+1)/2 exp(-tr(V^-1 W)/2).
    let log_w = |v: &DMatrix<f64>| -> f64 {
        let d = sym_eigenvalues_desc(v).unwrap();
        let logdet: f64 = d.iter().map(|x| x.ln()).sum();
        let logdet1p: f64 = d.iter().map(|x| x.ln_1p()).sum();
        let gaps = log_gap_product(d.as_slice());
        let tr = (v.clone().try_inverse().unwrap() * &w_mat).trace();
        let target = -logdet1p - gaps - 0.5 * m as f64 * logdet - 0.5 * tr;
        let proposal = -0.5 * (m + k + 1) as f64 * logdet - 0.5 * tr;
        target - proposal
    };

    // The library's acceptance ratio must equal the weight difference.
    let lib_ratio = reference_mh_log_accept_ratio(&va, &vb, ReferenceVariant::A).unwrap();
    let test_ratio = log_w(&vb) - log_w(&va);
    assert!(
        (lib_ratio - test_ratio).abs() < 1e-10,
        "acceptance ratio direction: lib {lib_ratio} vs first-principles {test_ratio}"
    );

    // Empirical occupancy of the 2-state independence chain.
    let q_a = 0.6f64;
    let mut at_a = true;
    let mut occupancy_a = 0usize;
    let steps = 400_000usize;
    for _ in 0..steps {
        let prop_is_a = rng.random::<f64>() < q_a;
        if at_a != prop_is_a {
            let (from, to) = if at_a { (&va, &vb) } else { (&vb, &va) };
            let ratio = reference_mh_log_accept_ratio(from, to, ReferenceVariant::A).unwrap();
            if rng.random::<f64>().ln() < ratio {
                at_a = prop_is_a;
            }
        }
        if at_a {
            occupancy_a += 1;
        }
    }
    let frac_a = occupancy_a as f64 / steps as f64;
    // Stationary law of this chain: nu(V) proportional to q(V) w(V).
    let wa = log_w(&va).exp();
    let wb = log_w(&vb).exp();
    let want_a = q_a * wa / (q_a * wa + (1.0 - q_a) * wb);
    assert!(
        (frac_a - want_a).abs() < 0.01,
        "occupancy {frac_a:.4} vs stationary {want_a:.4}"
    );
}

/// Long-run reference-MH moments match a direct spectral quadrature of the
/// full conditional (k = 2, variant A).
#[test]
fn reference_mh_matches_quadrature_moments() {
    let m = 8usize;
    let w_mat = DMatrix::from_row_slice(2, 2, &[5.0, 1.0, 1.0, 3.0]);
    let theta = {
        // Build theta rows with scatter-about-zero equal to w_mat: use the
        // Cholesky rows scaled; beta = 0.
        let l = nalgebra::Cholesky::new(w_mat.clone()).unwrap().l();
        let mut t = DMatrix::zeros(m, 2);
        // Two rows carry the Cholesky columns, the rest are zero; the scatter
        // sum_i theta_i theta_i^t then equals L L^t = W.
        t.set_row(0, &l.column(0).transpose());
        t.set_row(1, &l.column(1).transpose());
        t
    };
    let state = ChainState {
        theta,
        beta: DVector::zeros(2),
        v: DMatrix::from_diagonal(&DVector::from_column_slice(&[2.0, 1.0])),
        lambda: None,
    };
    assert!((state.theta_scatter_about_beta() - &w_mat).norm() < 1e-12);

    // Quadrature of the target over (phi, d1 > d2): density in (H, D)
    // coordinates is |I+D|^-1 |D|^-m/2 exp(-tr(V^-1 W)/2) (the gap factors of
    // prior and Jacobian cancel for variant A).
    let nphi = 48;
    let nd = 220;
    let dmax = 30.0;
    let dstep = dmax / nd as f64;
    let mut mass = 0.0;
    let mut mean = DMatrix::zeros(2, 2);
    for p in 0..nphi {
        let phi = std::f64::consts::PI * (p as f64 + 0.5) / nphi as f64;
        let (c, s) = (phi.cos(), phi.sin());
        for i in 0..nd {
            let d1 = (i as f64 + 0.5) * dstep;
            for j in 0..i {
                let d2 = (j as f64 + 0.5) * dstep;
                let v = DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        c * c * d1 + s * s * d2,
                        c * s * (d1 - d2),
                        c * s * (d1 - d2),
                        s * s * d1 + c * c * d2,
                    ],
                );
                let tr = (v.clone().try_inverse().unwrap() * &w_mat).trace();
                let logf = -( (1.0 + d1) * (1.0 + d2) ).ln()
                    - 0.5 * m as f64 * (d1.ln() + d2.ln())
                    - 0.5 * tr;
                let f = logf.exp();
                mass += f;
                mean += &v * f;
            }
        }
    }
    mean /= mass;

    // Long MH run from the full conditional.
    let mut rng = ChaCha8Rng::seed_from_u64(137);
    let mut cur = state.clone();
    let mut draws: Vec<DMatrix<f64>> = Vec::with_capacity(40_000);
    for _ in 0..40_000 {
        let (v, _) = sample_v_reference_mh(&cur, ReferenceVariant::A, 2, &mut rng).unwrap();
        cur.v = v.clone();
        draws.push(v);
    }
    let emp = matrix_mean(&draws[2000..]);
    for i in 0..2 {
        for j in 0..2 {
            let xs: Vec<f64> = draws[2000..].iter().map(|v| v[(i, j)]).collect();
            let se = batch_means_se(&xs, 80);
            assert!(
                (emp[(i, j)] - mean[(i, j)]).abs() < 4.0 * se.max(0.01),
                "V[{i}{j}]: chain {} vs quadrature {} (se {se})",
                emp[(i, j)],
                mean[(i, j)]
            );
        }
    }
}

/// Posterior lambda moments from the random-direction walk match a direct
/// spectral-grid quadrature of the (V, lambda) marginal (k=2, m=3).
#[test]
fn hitrun_lambda_moment_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(139);
    let data = synth_blocks(3, 2, &mut rng);
    let spec = recommend_default(2).unwrap();

    // Quadrature over (phi, d1 > d2, lambda) of the marginal target.
    let nphi = 24;
    let nd = 90;
    let nl = 64;
    let dgrid = matmeans::numeric::log_spaced(1e-5, 3e3, nd);
    let dw = matmeans::numeric::log_trapezoid_weights(&dgrid);
    let lgrid = matmeans::numeric::log_spaced(1e-4, 1e4, nl);
    let lw = matmeans::numeric::log_trapezoid_weights(&lgrid);
    let mut mass = 0.0f64;
    let mut lam_mean = 0.0f64;
    for p in 0..nphi {
        let phi = std::f64::consts::PI * (p as f64 + 0.5) / nphi as f64;
        let (c, s) = (phi.cos(), phi.sin());
        for i in 0..nd {
            for j in 0..i {
                let (d1, d2) = (dgrid[i], dgrid[j]);
                let v = DMatrix::from_row_slice(
                    2,
                    2,
                    &[
                        c * c * d1 + s * s * d2,
                        c * s * (d1 - d2),
                        c * s * (d1 - d2),
                        s * s * d1 + c * c * d2,
                    ],
                );
                for (lam, lwt) in lgrid.iter().zip(&lw) {
                    let Ok(logf) = log_vlambda_marginal_target(&data, &spec, &v, *lam) else {
                        continue;
                    };
                    // V-space volume element: prod gaps * dD * dphi.
                    let f = (logf + (d1 - d2).ln()).exp() * dw[i] * dw[j] * lwt;
                    mass += f;
                    lam_mean += lam * f;
                }
            }
        }
    }
    lam_mean /= mass;

    let states =
        sample_v_lambda_marginal_hitrun(&data, &spec, 0.45, 60_000, None, &mut rng).unwrap();
    let lams: Vec<f64> = states[5000..].iter().map(|(_, l)| *l).collect();
    let (emp, _) = mean_se(&lams);
    let se = batch_means_se(&lams, 60);
    assert!(
        (emp - lam_mean).abs() < 4.0 * se.max(0.02),
        "E[lambda]: chain {emp} vs quadrature {lam_mean} (se {se})"
    );
}

/// Every saved state is clean: V symmetric PD, lambda positive, nothing
/// non-finite, across all updaters.
#[test]
fn chain_outputs_are_clean() {
    let mut rng = ChaCha8Rng::seed_from_u64(149);
    let data = synth_blocks(10, 2, &mut rng);
    let plans: Vec<(HyperpriorSpec, VUpdater)> = vec![
        (
            HyperpriorSpec {
                vprior: named_v_prior(VPriorName::HierJeffreys, 2).unwrap(),
                bprior: BetaPriorSpec::Flat,
            },
            VUpdater::HierJeffreysAr,
        ),
        (
            HyperpriorSpec {
                vprior: named_v_prior(VPriorName::HierJeffreys, 2).unwrap(),
                bprior: BetaPriorSpec::Flat,
            },
            VUpdater::MarginalRejection,
        ),
        (recommend_default(2).unwrap(), VUpdater::ReferenceMhA),
        (
            HyperpriorSpec {
                vprior: named_v_prior(VPriorName::HierReferenceB, 2).unwrap(),
                bprior: default_case3_beta_prior(2),
            },
            VUpdater::ReferenceMhB,
        ),
        (recommend_default(2).unwrap(), VUpdater::MarginalHitRun),
        (
            HyperpriorSpec {
                vprior: named_v_prior(VPriorName::Constant, 2).unwrap(),
                bprior: BetaPriorSpec::Flat,
            },
            VUpdater::ConstantGibbs,
        ),
    ];
    for (spec, updater) in plans {
        let plan = SamplerPlan::new(updater, 400, 100, 3, 150);
        let out = run_chain(&data, &spec, &plan).unwrap();
        assert_eq!(out.draws.len(), 100, "{updater:?}");
        assert_eq!(out.v_attempt_counts.len(), 100);
        for d in &out.draws {
            assert!(d.theta.iter().all(|x| x.is_finite()), "{updater:?}");
            assert!(d.beta.iter().all(|x| x.is_finite()));
            assert!(nalgebra::Cholesky::new(d.v.clone()).is_some(), "{updater:?}: V not PD");
            if let Some(l) = d.lambda {
                assert!(l > 0.0 && l.is_finite());
            }
        }
    }
}

/// With V frozen at the truth, the posterior mean of beta homes in on the
/// generating beta as m grows (average error over replicates halves from
/// m = 20 to m = 80, within noise).
#[test]
fn beta_recovery_improves_with_blocks() {
    let spec = HyperpriorSpec {
        vprior: named_v_prior(VPriorName::HierReferenceA, 2).unwrap(),
        bprior: BetaPriorSpec::Flat,
    };
    let beta_true = DVector::from_column_slice(&[1.0, -2.0]);
    let v_true = eye(2);
    let err_at = |m: usize, seed: u64| -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut errs = Vec::new();
        for _ in 0..20 {
            let x = DMatrix::from_fn(m, 2, |_, j| {
                let t: f64 = StandardNormal.sample(&mut rng);
                let e: f64 = StandardNormal.sample(&mut rng);
                beta_true[j] + t + e
            });
            let data = ModelData::new(x).unwrap();
            // V frozen at truth: Gibbs over (theta, beta) only.
            let mut state = ChainState {
                theta: data.matrix().clone(),
                beta: data.mean(),
                v: v_true.clone(),
                lambda: None,
            };
            let mut acc = DVector::zeros(2);
            let n = 600;
            for it in 0..n + 100 {
                state.theta =
                    matmeans::samplers::sample_theta_full_conditional(&state, &data, &mut rng)
                        .unwrap();
                state.beta =
                    matmeans::samplers::sample_beta_full_conditional(&state, &data, &spec, &mut rng)
                        .unwrap();
                if it >= 100 {
                    acc += &state.beta;
                }
            }
            errs.push((acc / n as f64 - &beta_true).norm());
        }
        errs.iter().sum::<f64>() / errs.len() as f64
    };
    let e20 = err_at(20, 1);
    let e80 = err_at(80, 2);
    assert!(
        e80 < 0.8 * e20,
        "posterior error should roughly halve: m=20 -> {e20}, m=80 -> {e80}"
    );
}

/// Full-chain shrinkage on the recommended default: the posterior mean pulls
/// the data toward the replicated grand mean.
#[test]
fn posterior_mean_shrinks_toward_grand_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(151);
    let data = synth_blocks(10, 2, &mut rng);
    let spec = recommend_default(2).unwrap();
    let plan = SamplerPlan::new(VUpdater::ReferenceMhA, 6000, 1000, 1, 152);
    let out = run_chain(&data, &spec, &plan).unwrap();
    let delta = matmeans::estimate::posterior_mean(&out).unwrap();
    let xbar = data.mean();
    let dist = |m: &DMatrix<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                s += (m[(i, j)] - xbar[j]).powi(2);
            }
        }
        s.sqrt()
    };
    assert!(
        dist(&delta) < dist(data.matrix()),
        "posterior mean should sit strictly inside the data's spread about the grand mean"
    );
    // And it actually moved.
    assert!((&delta - data.matrix()).norm() > 1e-3);
}

/// Spherical averages: the degenerate sphere at r = 0 reproduces m(0), and
/// doubling the point count shrinks the standard error like 1/sqrt(2).
#[test]
fn sphere_average_consistency() {
    let spec = HyperpriorSpec {
        vprior: named_v_prior(VPriorName::HierReferenceA, 2).unwrap(),
        bprior: BetaPriorSpec::normal(DVector::zeros(2), eye(2)).unwrap(),
    };
    let cfg = IntegrationConfig { n_haar: 12, quad_points: 48, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(157);
    let (mbar0, munder0) = mbar_munder_estimate(0.0, &spec, 2, 2, 16, &cfg, &mut rng).unwrap();
    // All sphere points coincide at the origin, so mbar = log m(0) and
    // munder = -log m(0) up to Haar noise.
    assert!(
        (mbar0.value + munder0.value).abs() < 3.0 * (mbar0.std_error + munder0.std_error).max(5e-3),
        "mbar(0) + munder(0) = {}",
        mbar0.value + munder0.value
    );
    let x0 = ModelData::new(DMatrix::zeros(2, 2)).unwrap();
    let m0 = matmeans::marginal::log_marginal_mc(&x0, &spec, &cfg, &mut rng).unwrap();
    assert!(
        (mbar0.value - m0.value).abs() < 3.0 * (mbar0.std_error + m0.std_error).max(5e-3),
        "mbar(0) {} vs m(0) {}",
        mbar0.value,
        m0.value
    );

    // Monte Carlo scaling of the sphere average.
    let ses: Vec<f64> = [24usize, 48]
        .iter()
        .map(|&n| {
            let mut rng = ChaCha8Rng::seed_from_u64(163);
            mbar_munder_estimate(3.0, &spec, 2, 2, n, &cfg, &mut rng).unwrap().0.std_error
        })
        .collect();
    let ratio = ses[1] / ses[0];
    assert!(
        (ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.2,
        "SE ratio {ratio} should be near 1/sqrt(2)"
    );
}

/// The spherical-average slope at a steep normal-mean prior matches the
/// predicted power -km + 2(1 - a2), stable across two grid resolutions.
#[test]
fn mbar_slope_matches_predicted_power() {
    let spec = {
        let vprior = matmeans::prior::VPriorParams::custom(0.0, 1.5, 0.0).unwrap();
        HyperpriorSpec {
            vprior,
            bprior: BetaPriorSpec::normal(DVector::zeros(2), eye(2)).unwrap(),
        }
    };
    let rs = [4.0, 8.0, 16.0, 32.0];
    let xs: Vec<f64> = rs.iter().map(|r: &f64| r.ln()).collect();
    let mut slopes = Vec::new();
    for quad in [56usize, 84] {
        let cfg = IntegrationConfig {
            n_haar: 16,
            quad_points: quad,
            d_max: 1e7,
            check_truncation: false,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(167);
        let ys: Vec<f64> = rs
            .iter()
            .map(|&r| {
                mbar_munder_estimate(r, &spec, 2, 2, 40, &cfg, &mut rng).unwrap().0.value
            })
            .collect();
        slopes.push(fit_slope(&xs, &ys));
    }
    // -km + 2(1 - a2) = -4 - 1 = -5.
    for s in &slopes {
        assert!((s - (-5.0)).abs() < 0.3, "slope {s} vs -5");
    }
    assert!((slopes[0] - slopes[1]).abs() < 0.15, "resolution instability: {slopes:?}");
}

/// The inadmissibility-side integral accumulates to a finite limit when the
/// normal-mean prior sits below the admissibility cut: partial sums over a
/// doubling radius grid flatten out.
#[test]
fn munder_partial_sums_converge_below_the_cut() {
    let spec = custom_case2(0.0, 0.25);
    let cfg = IntegrationConfig {
        n_haar: 12,
        quad_points: 64,
        d_max: 1e8,
        check_truncation: false,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(173);
    let rs: [f64; 6] = [4.0, 8.0, 16.0, 32.0, 64.0, 128.0];
    let mk = 4.0;
    let mut increments = Vec::new();
    for w in rs.windows(2) {
        // integrand r^(1-mk) munder(r), integrated over [r, 2r] by midpoint.
        let r_mid = (w[0] * w[1]).sqrt();
        let mu = mbar_munder_estimate(r_mid, &spec, 2, 2, 32, &cfg, &mut rng).unwrap().1;
        let val = (1.0 - mk) * r_mid.ln() + mu.value;
        increments.push(val.exp() * (w[1] - w[0]));
    }
    // Geometrically decaying increments: each under half its predecessor.
    for w in increments.windows(2) {
        assert!(w[1] < 0.6 * w[0], "increments not decaying: {increments:?}");
    }
}

fn custom_case2(a1: f64, a2: f64) -> HyperpriorSpec {
    HyperpriorSpec {
        vprior: matmeans::prior::VPriorParams::custom(a1, a2, 0.0).unwrap(),
        bprior: BetaPriorSpec::normal(DVector::zeros(2), eye(2)).unwrap(),
    }
}

/// At x = 0 the posterior under a zero-centered prior is sign-symmetric, so
/// the posterior mean vanishes up to chain noise.
#[test]
fn posterior_mean_vanishes_at_the_origin() {
    let data = ModelData::new(DMatrix::zeros(3, 2)).unwrap();
    let spec = recommend_default(2).unwrap();
    let plan = SamplerPlan::new(VUpdater::ReferenceMhA, 20_000, 5_000, 1, 177);
    let out = run_chain(&data, &spec, &plan).unwrap();
    let delta = matmeans::estimate::posterior_mean(&out).unwrap();
    assert!(
        delta.norm() < 0.2,
        "delta(0) = {delta} should vanish by symmetry"
    );
}

/// The recommended default is the reference-(a) V-prior plus the
/// heavy-tailed hierarchical mean prior at b = c = 1/2, beta0 = 0, A = I.
#[test]
fn recommended_default_structure() {
    use matmeans::prior::{BetaPriorSpec, VPriorName};
    for k in [2usize, 3, 7] {
        let spec = recommend_default(k).unwrap();
        assert_eq!(spec.vprior.name, VPriorName::HierReferenceA);
        assert_eq!((spec.vprior.a1, spec.vprior.a2, spec.vprior.l), (0.0, 1.0, 0.0));
        match spec.bprior {
            BetaPriorSpec::Hierarchical { beta0, a, b, c } => {
                assert_eq!(beta0, DVector::zeros(k));
                assert_eq!(a, eye(k));
                assert_eq!((b, c), (0.5, 0.5));
            }
            other => panic!("expected the hierarchical mean prior, got {other:?}"),
        }
    }
}

/// k = 1 reduction of the constant-prior Gibbs step: the full conditional is
/// v^-(m/2) exp(-w/(2v)), and the sample mean must match its quadrature mean.
#[test]
fn constant_gibbs_k1_matches_quadrature() {
    let m = 8usize;
    let w = 12.0f64;
    let theta = DMatrix::from_element(m, 1, (w / m as f64).sqrt());
    let state = ChainState {
        theta,
        beta: DVector::zeros(1),
        v: DMatrix::from_element(1, 1, 1.0),
        lambda: None,
    };
    // Quadrature mean of v under v^-4 e^{-w/(2v)} (m = 8): closed form w/4,
    // computed numerically anyway as the oracle.
    let f = |v: f64| (-4.0 * v.ln() - w / (2.0 * v)).exp();
    let grid = matmeans::numeric::log_spaced(1e-4, 1e6, 4000);
    let wts = matmeans::numeric::log_trapezoid_weights(&grid);
    let mass: f64 = grid.iter().zip(&wts).map(|(v, wt)| wt * f(*v)).sum();
    let mean_quad: f64 =
        grid.iter().zip(&wts).map(|(v, wt)| v * wt * f(*v)).sum::<f64>() / mass;
    assert!((mean_quad - w / 4.0).abs() < 1e-3 * mean_quad);

    let mut rng = ChaCha8Rng::seed_from_u64(181);
    let n = 200_000usize;
    let draws: Vec<f64> = (0..n)
        .map(|_| matmeans::samplers::sample_v_constant_gibbs(&state, &mut rng).unwrap()[(0, 0)])
        .collect();
    let (mean, se) = mean_se(&draws);
    assert!(
        (mean - mean_quad).abs() < 3.0 * se,
        "E[v] = {mean} +- {se} vs quadrature {mean_quad}"
    );
}

/// Flat-mean admissibility side at k = 2: the (A)-integral diverges right at
/// its critical exponent (the spherical average decays like r^-k(m-1)).
#[test]
fn brown_trend_flat_mean_admissible_side() {
    let spec = HyperpriorSpec {
        vprior: matmeans::prior::VPriorParams::custom(0.0, 1.5, 0.0).unwrap(),
        bprior: BetaPriorSpec::Flat,
    };
    let cfg = IntegrationConfig {
        n_haar: 24,
        quad_points: 72,
        d_max: 1e8,
        check_truncation: false,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(191);
    let r_grid = [4.0, 8.0, 16.0, 32.0, 64.0];
    let trend = matmeans::marginal::brown_condition_trend(&spec, 3, 2, &r_grid, 48, &cfg, &mut rng)
        .unwrap();
    assert!(
        trend.admissibility_integral_diverges,
        "exponent_a = {} should flag divergence",
        trend.exponent_a
    );
    // The fitted exponent sits above the critical -1 on this grid; the exact
    // asymptote is -1 but the min-cap transition still contributes O(1/r)
    // corrections at these radii.
    assert!(trend.exponent_a > -1.0, "exponent_a = {}", trend.exponent_a);
}
