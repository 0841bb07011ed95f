//! Posterior samplers: conjugate Gibbs steps for (theta, beta, lambda), four
//! update schemes for the hyper-covariance V, marginalized samplers that draw
//! V (and lambda) directly from their data marginal, and chain orchestration.
//!
//! All V proposals are the inverse Wishart of the pinned parameterization
//! (see [`crate::randmat`]); with df = m and scale W(theta, beta) its density
//! matches the likelihood part of every V full conditional, so acceptance
//! ratios reduce to prior ratios.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::analysis::{check_propriety, Propriety};
use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, eye, log_det_pd, symmetrize, sym_eigenvalues_desc, EIGENVALUE_TIE_TOL,
};
use crate::marginal::log_vlambda_marginal_target;
use crate::model::{ChainState, ModelData};
use crate::prior::{named_v_prior, BetaPriorSpec, HyperpriorSpec, VPriorName, VPriorParams};
use crate::randmat::{sample_inverse_wishart, sample_mvn_cov, sample_mvn_precision};

/// How V is updated inside the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VUpdater {
    /// Conjugate inverse-Wishart Gibbs step (constant V-prior only).
    ConstantGibbs,
    /// Exact accept-reject step for the hierarchical Jeffreys prior.
    HierJeffreysAr,
    /// Independence Metropolis-Hastings for reference prior (a).
    ReferenceMhA,
    /// Independence Metropolis-Hastings for reference prior (b).
    ReferenceMhB,
    /// Exact rejection sampler from the V | x marginal
    /// (flat mean + hierarchical Jeffreys prior only).
    MarginalRejection,
    /// Random-direction walk on (log V, log lambda) targeting the
    /// (V, lambda) | x marginal (hierarchical mean + reference priors).
    MarginalHitRun,
}

/// Variant selector for the reference-prior MH step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceVariant {
    A,
    B,
}

/// Full chain configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerPlan {
    pub v_updater: VUpdater,
    /// Inner Metropolis iterations per V update (MH and hit-run schemes).
    pub mh_inner_iters: usize,
    pub n_iter: usize,
    pub n_burnin: usize,
    pub thin: usize,
    pub seed: u64,
    /// Step scale of the random-direction walk.
    pub step_scale: f64,
    /// Attempt cap for the accept-reject and rejection samplers.
    pub attempt_cap: u64,
    /// Skip the propriety gate (diagnostics only: an improper target has no
    /// stationary distribution).
    pub force_improper: bool,
}

impl SamplerPlan {
    pub fn new(v_updater: VUpdater, n_iter: usize, n_burnin: usize, thin: usize, seed: u64) -> Self {
        Self {
            v_updater,
            mh_inner_iters: 10,
            n_iter,
            n_burnin,
            thin,
            seed,
            step_scale: 0.3,
            attempt_cap: 1_000_000,
            force_improper: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_iter == 0 || self.n_burnin >= self.n_iter {
            return Err(Error::InvalidInput("need n_burnin < n_iter".into()));
        }
        if self.thin == 0 || (self.n_iter - self.n_burnin) % self.thin != 0 {
            return Err(Error::InvalidInput(
                "thin must be >= 1 and divide n_iter - n_burnin".into(),
            ));
        }
        if self.mh_inner_iters == 0 {
            return Err(Error::InvalidInput("mh_inner_iters must be >= 1".into()));
        }
        if !(self.step_scale > 0.0) {
            return Err(Error::InvalidInput("step_scale must be > 0".into()));
        }
        Ok(())
    }
}

/// Saved draws plus the per-draw V-update effort counters.
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub draws: Vec<ChainState>,
    /// Per saved draw: accept-reject attempts consumed, or Metropolis
    /// nonmoves before the first accepted move (censored at the inner
    /// iteration count).
    pub v_attempt_counts: Vec<u64>,
    /// Accepted V proposals / total V proposals over the whole run.
    pub acceptance_rate: f64,
    pub v_updater: VUpdater,
}

/// theta_i | beta, V, x ~ N(S (x_i + V^-1 beta), S), S = (I + V^-1)^-1,
/// independently over blocks. Computed as S = V (I+V)^-1 and
/// S V^-1 = (I+V)^-1 to avoid inverting V.
pub fn sample_theta_full_conditional<R: Rng + ?Sized>(
    state: &ChainState,
    data: &ModelData,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let (m, k) = (data.m(), data.k());
    if state.k() != k || state.m() != m {
        return Err(Error::InvalidInput("state/data dimension mismatch".into()));
    }
    let iv = eye(k) + &state.v;
    let ch = cholesky(&iv, "I + V")?;
    let p = ch.solve(&eye(k)); // (I+V)^-1
    let mut cov = &state.v * &p;
    symmetrize(&mut cov);
    let l = cholesky(&cov, "theta conditional covariance")?.l();
    let pb = &p * &state.beta;
    let mut theta = DMatrix::zeros(m, k);
    for i in 0..m {
        let mean = &cov * data.block(i) + &pb;
        let z = DVector::from_fn(k, |_, _| StandardNormal.sample(rng));
        theta.set_row(i, &(mean + &l * z).transpose());
    }
    Ok(theta)
}

/// beta | theta, V[, lambda] — a normal full conditional:
/// flat prior: N(theta_bar, V/m); normal / hierarchical prior: precision
/// m V^-1 + (sA)^-1 with s = 1 or s = lambda.
pub fn sample_beta_full_conditional<R: Rng + ?Sized>(
    state: &ChainState,
    data: &ModelData,
    spec: &HyperpriorSpec,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let k = data.k();
    if state.k() != k {
        return Err(Error::InvalidInput("state/data dimension mismatch".into()));
    }
    let m = state.m() as f64;
    let tbar = state.theta_bar();
    match &spec.bprior {
        BetaPriorSpec::Flat => sample_mvn_cov(&tbar, &(&state.v / m), rng),
        BetaPriorSpec::Normal { beta0, a } | BetaPriorSpec::Hierarchical { beta0, a, .. } => {
            let s = match &spec.bprior {
                BetaPriorSpec::Normal { .. } => 1.0,
                _ => state.lambda.ok_or_else(|| {
                    Error::InvalidInput("hierarchical beta prior needs lambda in the state".into())
                })?,
            };
            let v_inv = cholesky(&state.v, "V")?.inverse();
            let a_inv = cholesky(a, "A")?.inverse() / s;
            let mut prec = &v_inv * m + &a_inv;
            symmetrize(&mut prec);
            let rhs = v_inv * &tbar * m + a_inv * beta0;
            sample_mvn_precision(&prec, &rhs, rng)
        }
    }
}

/// lambda | beta: 1/lambda ~ Gamma(b + k/2 - 1, rate c + q/2) with
/// q = (beta - beta0)^t A^-1 (beta - beta0).
pub fn sample_lambda_full_conditional<R: Rng + ?Sized>(
    beta: &DVector<f64>,
    spec: &BetaPriorSpec,
    rng: &mut R,
) -> Result<f64> {
    let BetaPriorSpec::Hierarchical { beta0, a, b, c } = spec else {
        return Err(Error::InvalidInput("lambda step needs the hierarchical beta prior".into()));
    };
    let k = beta.len() as f64;
    let shape = b + k / 2.0 - 1.0;
    if shape <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "1/lambda Gamma shape b + k/2 - 1 = {shape} is not positive; posterior \
             propriety needs b > 1 - k/2"
        )));
    }
    let d = beta - beta0;
    let q = d.dot(&cholesky(a, "A")?.solve(&d));
    let rate = c + 0.5 * q;
    let g = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::NumericFailure(format!("gamma sampler: {e}")))?;
    let x: f64 = g.sample(rng);
    if x <= 0.0 {
        return Err(Error::NumericFailure("gamma draw underflowed to zero".into()));
    }
    Ok(1.0 / x)
}

fn scatter_about_beta(state: &ChainState) -> DMatrix<f64> {
    state.theta_scatter_about_beta()
}

/// Conjugate V step for the constant prior: V | theta, beta is inverse
/// Wishart with density |V|^(-m/2) exp(-tr(V^-1 W)/2), i.e. df = m - k - 1
/// under the pinned parameterization. That distribution only exists for
/// m > 2k (and posterior propriety needs even more blocks: m >= 2k + 2 with
/// a flat mean, 2k + 1 otherwise).
pub fn sample_v_constant_gibbs<R: Rng + ?Sized>(
    state: &ChainState,
    rng: &mut R,
) -> Result<DMatrix<f64>> {
    let (m, k) = (state.m(), state.k());
    let df = m as f64 - k as f64 - 1.0;
    if df <= k as f64 - 1.0 {
        return Err(Error::InvalidInput(format!(
            "constant-prior Gibbs step needs m > 2k (df = m - k - 1 > k - 1); got m = {m}, \
             k = {k}; posterior propriety itself needs m >= 2k + 2 blocks with a flat mean \
             and m >= 2k + 1 otherwise"
        )));
    }
    sample_inverse_wishart(df, &scatter_about_beta(state), rng)
}

/// Exact accept-reject draw from the hierarchical-Jeffreys full conditional
/// pi(V | theta, beta) ~ |I+V|^-(k+1)/2 |V|^-m/2 exp(-tr(V^-1 W)/2):
/// propose inverse Wishart(m, W), accept with P = (|V|/|I+V|)^((k+1)/2).
/// Returns the draw and the number of proposals consumed.
pub fn sample_v_hier_jeffreys_ar<R: Rng + ?Sized>(
    state: &ChainState,
    attempt_cap: u64,
    rng: &mut R,
) -> Result<(DMatrix<f64>, u64)> {
    let (m, k) = (state.m(), state.k());
    let w = scatter_about_beta(state);
    let mut attempts = 0u64;
    loop {
        attempts += 1;
        if attempts > attempt_cap {
            return Err(Error::StuckSampler { attempts: attempt_cap });
        }
        let v = sample_inverse_wishart(m as f64, &w, rng)?;
        let lp = match hier_jeffreys_log_accept(&v, k) {
            Ok(lp) => lp,
            Err(Error::NotPositiveDefinite(_)) => continue,
            Err(e) => return Err(e),
        };
        if rng.random::<f64>().ln() < lp {
            return Ok((v, attempts));
        }
    }
}

/// log of the accept-reject probability (k+1)/2 (log|V| - log|I+V|).
pub fn hier_jeffreys_log_accept(v: &DMatrix<f64>, k: usize) -> Result<f64> {
    let ld_v = log_det_pd(v, "V")?;
    let ld_iv = log_det_pd(&(eye(k) + v), "I + V")?;
    Ok(0.5 * (k as f64 + 1.0) * (ld_v - ld_iv))
}

/// Eigenvalue summary a reference-MH acceptance ratio needs.
#[derive(Debug, Clone)]
struct SpectrumStats {
    log_det: f64,
    log_det_1p: f64,
    log_gaps: f64,
}

fn spectrum_stats(v: &DMatrix<f64>) -> Result<SpectrumStats> {
    let d = sym_eigenvalues_desc(v)?;
    let k = d.len();
    let tol = EIGENVALUE_TIE_TOL * d[0];
    // A smallest eigenvalue at rounding scale is indistinguishable from a
    // boundary state; treat it like a tie so the proposal is rejected rather
    // than poisoning downstream factorizations.
    if d[k - 1] <= tol {
        return Err(Error::DegenerateSpectrum { gap: d[k - 1], tol });
    }
    let mut log_gaps = 0.0;
    for i in 0..k - 1 {
        for j in (i + 1)..k {
            let gap = d[i] - d[j];
            if gap < tol {
                return Err(Error::DegenerateSpectrum { gap, tol });
            }
            log_gaps += gap.ln();
        }
    }
    Ok(SpectrumStats {
        log_det: d.iter().map(|x| x.ln()).sum(),
        log_det_1p: d.iter().map(|x| x.ln_1p()).sum(),
        log_gaps,
    })
}

/// log acceptance ratio of the independence MH step with inverse
/// Wishart(m, W) proposals, for the two reference priors. In terms of the
/// importance weight w(V) = pi(V | theta, beta) / proposal(V),
///
/// ```text
/// variant (a): log w(V) = (k+1)/2 log|V| - log|I+V| - log prod(d_i - d_j)
/// variant (b): log w(V) = (k-1+1/k)/2 log|V| - log prod(d_i - d_j)
/// ```
///
/// and the step accepts with min{1, w(proposal)/w(current)}.
fn reference_log_weight(stats: &SpectrumStats, variant: ReferenceVariant, k: usize) -> f64 {
    let kf = k as f64;
    match variant {
        ReferenceVariant::A => {
            0.5 * (kf + 1.0) * stats.log_det - stats.log_det_1p - stats.log_gaps
        }
        ReferenceVariant::B => {
            0.5 * (kf - 1.0 + 1.0 / kf) * stats.log_det - stats.log_gaps
        }
    }
}

/// log of the reference-MH acceptance ratio for a move current -> proposal
/// (before the min with 1); the inverse-Wishart proposal terms are folded in
/// through the importance weights.
pub fn reference_mh_log_accept_ratio(
    current: &DMatrix<f64>,
    proposal: &DMatrix<f64>,
    variant: ReferenceVariant,
) -> Result<f64> {
    let k = current.nrows();
    let cur = spectrum_stats(current)?;
    let prop = spectrum_stats(proposal)?;
    Ok(reference_log_weight(&prop, variant, k) - reference_log_weight(&cur, variant, k))
}

/// Outcome of one reference-MH invocation.
#[derive(Debug, Clone, Copy)]
pub struct MhOutcome {
    /// Rejections before the first accepted move, censored at the number of
    /// inner iterations when no move happened.
    pub nonmoves: u64,
    pub accepts: u64,
    pub proposals: u64,
}

/// `inner_iters` independence-MH steps on the V full conditional under
/// reference prior (a) or (b). Proposals with a degenerate spectrum are
/// rejected and counted as nonmoves.
pub fn sample_v_reference_mh<R: Rng + ?Sized>(
    state: &ChainState,
    variant: ReferenceVariant,
    inner_iters: usize,
    rng: &mut R,
) -> Result<(DMatrix<f64>, MhOutcome)> {
    let (m, k) = (state.m(), state.k());
    let w = scatter_about_beta(state);
    let mut current = state.v.clone();
    let mut cur_weight = reference_log_weight(&spectrum_stats(&current)?, variant, k);
    let mut nonmoves = 0u64;
    let mut moved = false;
    let mut accepts = 0u64;
    for _ in 0..inner_iters {
        let proposal = sample_inverse_wishart(m as f64, &w, rng)?;
        let prop_weight = match spectrum_stats(&proposal) {
            Ok(s) => reference_log_weight(&s, variant, k),
            Err(Error::DegenerateSpectrum { .. }) | Err(Error::NotPositiveDefinite(_)) => {
                if !moved {
                    nonmoves += 1;
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        if rng.random::<f64>().ln() < prop_weight - cur_weight {
            current = proposal;
            cur_weight = prop_weight;
            accepts += 1;
            moved = true;
        } else if !moved {
            nonmoves += 1;
        }
    }
    Ok((current, MhOutcome { nonmoves, accepts, proposals: inner_iters as u64 }))
}

/// Exact draw from the V | x marginal under the flat mean prior and the
/// hierarchical Jeffreys V-prior,
/// pi(V | x) ~ |I+V|^-(m+k)/2 exp(-tr((I+V)^-1 S)/2):
/// draw B inverse Wishart(m - 1, S) (so the density of B matches the target
/// in B = I + V exactly) and accept V = B - I when it is positive definite.
pub fn sample_v_marginal_rejection<R: Rng + ?Sized>(
    data: &ModelData,
    attempt_cap: u64,
    rng: &mut R,
) -> Result<(DMatrix<f64>, u64)> {
    sample_v_marginal_rejection_from_scatter(&data.scatter(), data.m(), attempt_cap, rng)
}

/// The same sampler given the centered scatter matrix directly (the marginal
/// depends on the data only through it).
pub fn sample_v_marginal_rejection_from_scatter<R: Rng + ?Sized>(
    scatter: &DMatrix<f64>,
    m: usize,
    attempt_cap: u64,
    rng: &mut R,
) -> Result<(DMatrix<f64>, u64)> {
    let k = scatter.nrows();
    if m < 2 {
        return Err(Error::InvalidInput("need m >= 2".into()));
    }
    if m as f64 - 1.0 <= k as f64 - 1.0 || cholesky(scatter, "scatter").is_err() {
        return Err(Error::InvalidInput(format!(
            "marginal rejection needs a positive-definite scatter matrix \
             (m >= k + 1 blocks in general position); got m = {m}, k = {k}"
        )));
    }
    let mut attempts = 0u64;
    loop {
        attempts += 1;
        if attempts > attempt_cap {
            return Err(Error::StuckSampler { attempts: attempt_cap });
        }
        let b = sample_inverse_wishart(m as f64 - 1.0, scatter, rng)?;
        let mut v = b - eye(k);
        symmetrize(&mut v);
        if nalgebra::Cholesky::new(v.clone()).is_some() {
            return Ok((v, attempts));
        }
    }
}

/// Random-direction walk state on the unconstrained coordinates
/// (S, t) with V = exp(S) and lambda = e^t.
struct HitRunChain {
    /// Symmetric matrix-log coordinates, packed lower triangle.
    coords: Vec<f64>,
    k: usize,
    log_target: f64,
    v: DMatrix<f64>,
    lambda: f64,
}

fn pack_symmetric(s: &DMatrix<f64>) -> Vec<f64> {
    let k = s.nrows();
    let mut out = Vec::with_capacity(k * (k + 1) / 2);
    for i in 0..k {
        for j in 0..=i {
            out.push(s[(i, j)]);
        }
    }
    out
}

fn unpack_symmetric(coords: &[f64], k: usize) -> DMatrix<f64> {
    let mut s = DMatrix::zeros(k, k);
    let mut idx = 0;
    for i in 0..k {
        for j in 0..=i {
            s[(i, j)] = coords[idx];
            s[(j, i)] = coords[idx];
            idx += 1;
        }
    }
    s
}

/// log((e^a - e^b)/(a - b)), stable near a = b.
fn log_diff_quotient(a: f64, b: f64) -> f64 {
    let h = 0.5 * (a - b);
    let mid = 0.5 * (a + b);
    if h.abs() < 1e-5 {
        // log(sinh(h)/h) = h^2/6 - h^4/180 + ...
        mid + h * h / 6.0
    } else {
        mid + (h.sinh() / h).ln()
    }
}

/// Target density in walk coordinates: the (V, lambda) marginal times the
/// Jacobians of V = exp(S) and lambda = e^t.
fn hitrun_log_target(
    data: &ModelData,
    spec: &HyperpriorSpec,
    coords: &[f64],
    k: usize,
) -> Result<(f64, DMatrix<f64>, f64)> {
    let (s_coords, t) = coords.split_at(k * (k + 1) / 2);
    let t = t[0];
    let s = unpack_symmetric(s_coords, k);
    let eig = s.symmetric_eigen();
    let mut v = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|x| x.exp()))
        * eig.eigenvectors.transpose();
    symmetrize(&mut v);
    let lambda = t.exp();
    let base = log_vlambda_marginal_target(data, spec, &v, lambda)?;
    // Jacobian of the symmetric exponential in the eigenvalues of S.
    let mut log_jac: f64 = eig.eigenvalues.iter().sum();
    let n = eig.eigenvalues.len();
    for i in 0..n {
        for j in (i + 1)..n {
            log_jac += log_diff_quotient(eig.eigenvalues[i], eig.eigenvalues[j]);
        }
    }
    Ok((base + log_jac + t, v, lambda))
}

impl HitRunChain {
    fn init(data: &ModelData, spec: &HyperpriorSpec, v0: &DMatrix<f64>, lambda0: f64) -> Result<Self> {
        let k = data.k();
        let eig = crate::linalg::eigendecompose(v0)?;
        let s = eig.h.transpose()
            * DMatrix::from_diagonal(&eig.d.map(|x| x.ln()))
            * &eig.h;
        let mut coords = pack_symmetric(&s);
        coords.push(lambda0.ln());
        let (log_target, v, lambda) = hitrun_log_target(data, spec, &coords, k)?;
        Ok(Self { coords, k, log_target, v, lambda })
    }

    /// One random-direction Gaussian step; returns whether it moved.
    fn step<R: Rng + ?Sized>(
        &mut self,
        data: &ModelData,
        spec: &HyperpriorSpec,
        step_scale: f64,
        rng: &mut R,
    ) -> bool {
        let dim = self.coords.len();
        let dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return false;
        }
        let z: f64 = StandardNormal.sample(rng);
        let scale = step_scale * z / norm;
        let proposal: Vec<f64> =
            self.coords.iter().zip(&dir).map(|(c, d)| c + scale * d).collect();
        match hitrun_log_target(data, spec, &proposal, self.k) {
            Ok((lt, v, lambda)) if rng.random::<f64>().ln() < lt - self.log_target => {
                self.coords = proposal;
                self.log_target = lt;
                self.v = v;
                self.lambda = lambda;
                true
            }
            _ => false,
        }
    }
}

/// Standalone random-direction walk on the (V, lambda) marginal; returns the
/// visited states (one per step, repeats on rejection).
pub fn sample_v_lambda_marginal_hitrun<R: Rng + ?Sized>(
    data: &ModelData,
    spec: &HyperpriorSpec,
    step_scale: f64,
    n_steps: usize,
    init: Option<(&DMatrix<f64>, f64)>,
    rng: &mut R,
) -> Result<Vec<(DMatrix<f64>, f64)>> {
    require_hitrun_spec(spec, data.k())?;
    if data.m() < 2 {
        return Err(Error::InvalidInput("need m >= 2".into()));
    }
    let (v0, l0) = match init {
        Some((v, l)) => (v.clone(), l),
        None => (default_initial_v(data), 1.0),
    };
    let mut chain = HitRunChain::init(data, spec, &v0, l0)?;
    let mut out = Vec::with_capacity(n_steps);
    for _ in 0..n_steps {
        chain.step(data, spec, step_scale, rng);
        out.push((chain.v.clone(), chain.lambda));
    }
    Ok(out)
}

fn require_hitrun_spec(spec: &HyperpriorSpec, k: usize) -> Result<()> {
    if !matches!(spec.bprior, BetaPriorSpec::Hierarchical { .. }) {
        return Err(Error::PlanIncompatible(
            "the (V, lambda) walk needs the hierarchical beta prior".into(),
        ));
    }
    if !(matches_named(&spec.vprior, VPriorName::HierReferenceA, k)
        || matches_named(&spec.vprior, VPriorName::HierReferenceB, k))
    {
        return Err(Error::PlanIncompatible(
            "the (V, lambda) walk is tuned for the reference V-priors".into(),
        ));
    }
    Ok(())
}

/// Does a parameter triple equal a named prior's, up to rounding?
pub fn matches_named(params: &VPriorParams, name: VPriorName, k: usize) -> bool {
    match named_v_prior(name, k) {
        Ok(p) => {
            (params.a1 - p.a1).abs() < 1e-12
                && (params.a2 - p.a2).abs() < 1e-12
                && (params.l - p.l).abs() < 1e-12
        }
        Err(_) => false,
    }
}

/// Starting V: scaled data scatter plus a staggered diagonal so the spectrum
/// is simple.
fn default_initial_v(data: &ModelData) -> DMatrix<f64> {
    let k = data.k();
    let mut v = data.scatter() / (data.m() as f64);
    for j in 0..k {
        v[(j, j)] += 1.0 + 0.07 * j as f64;
    }
    v
}

/// Gibbs-compatible V updater for a named prior.
pub fn default_updater_for(spec: &HyperpriorSpec, k: usize) -> Result<VUpdater> {
    for (name, upd) in [
        (VPriorName::Constant, VUpdater::ConstantGibbs),
        (VPriorName::HierJeffreys, VUpdater::HierJeffreysAr),
        (VPriorName::HierReferenceA, VUpdater::ReferenceMhA),
        (VPriorName::HierReferenceB, VUpdater::ReferenceMhB),
    ] {
        if matches_named(&spec.vprior, name, k) {
            return Ok(upd);
        }
    }
    Err(Error::PlanIncompatible(
        "no Gibbs-compatible V updater for this V-prior; use one of the named priors".into(),
    ))
}

fn plan_compatible(spec: &HyperpriorSpec, plan: &SamplerPlan, k: usize) -> Result<()> {
    let want = |name: VPriorName| -> Result<()> {
        if matches_named(&spec.vprior, name, k) {
            Ok(())
        } else {
            Err(Error::PlanIncompatible(format!(
                "{:?} requires the {name:?} V-prior",
                plan.v_updater
            )))
        }
    };
    match plan.v_updater {
        VUpdater::ConstantGibbs => want(VPriorName::Constant),
        VUpdater::HierJeffreysAr => want(VPriorName::HierJeffreys),
        VUpdater::ReferenceMhA => want(VPriorName::HierReferenceA),
        VUpdater::ReferenceMhB => want(VPriorName::HierReferenceB),
        VUpdater::MarginalRejection => {
            want(VPriorName::HierJeffreys)?;
            if !matches!(spec.bprior, BetaPriorSpec::Flat) {
                return Err(Error::PlanIncompatible(
                    "marginal rejection requires the flat beta prior".into(),
                ));
            }
            Ok(())
        }
        VUpdater::MarginalHitRun => require_hitrun_spec(spec, k),
    }
}

/// beta | V, x under the flat prior: N(x_bar, (I+V)/m).
fn sample_beta_given_v_flat<R: Rng + ?Sized>(
    data: &ModelData,
    v: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let cov = (eye(data.k()) + v) / data.m() as f64;
    sample_mvn_cov(&data.mean(), &cov, rng)
}

/// beta | V, lambda, x under the hierarchical prior: precision
/// m (I+V)^-1 + (lambda A)^-1, mean through the usual normal algebra.
fn sample_beta_given_v_hier<R: Rng + ?Sized>(
    data: &ModelData,
    spec: &HyperpriorSpec,
    v: &DMatrix<f64>,
    lambda: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let BetaPriorSpec::Hierarchical { beta0, a, .. } = &spec.bprior else {
        return Err(Error::InvalidInput("hierarchical beta prior required".into()));
    };
    let k = data.k();
    let m = data.m() as f64;
    let iv_inv = cholesky(&(eye(k) + v), "I + V")?.inverse();
    let a_inv = cholesky(a, "A")?.inverse() / lambda;
    let mut prec = &iv_inv * m + &a_inv;
    symmetrize(&mut prec);
    let rhs = iv_inv * data.mean() * m + a_inv * beta0;
    sample_mvn_precision(&prec, &rhs, rng)
}

/// Systematic-scan chain: theta, beta, (lambda,) V for the full-conditional
/// plans; (V[, lambda]) then beta then theta for the marginalized plans.
/// Deterministic given (data, spec, plan).
pub fn run_chain(data: &ModelData, spec: &HyperpriorSpec, plan: &SamplerPlan) -> Result<ChainOutput> {
    plan.validate()?;
    let (m, k) = (data.m(), data.k());
    let verdict = check_propriety(spec, m, k)?;
    if verdict.status == Propriety::Improper && !plan.force_improper {
        return Err(Error::ImproperPosterior { rule: verdict.rule });
    }
    plan_compatible(spec, plan, k)?;

    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let case3 = matches!(spec.bprior, BetaPriorSpec::Hierarchical { .. });
    let mut state = ChainState {
        theta: data.matrix().clone(),
        beta: data.mean(),
        v: default_initial_v(data),
        lambda: if case3 { Some(1.0) } else { None },
    };
    let mut hitrun = if plan.v_updater == VUpdater::MarginalHitRun {
        Some(HitRunChain::init(data, spec, &state.v, 1.0)?)
    } else {
        None
    };

    let n_saved = (plan.n_iter - plan.n_burnin) / plan.thin;
    let mut draws = Vec::with_capacity(n_saved);
    let mut v_attempt_counts = Vec::with_capacity(n_saved);
    let mut total_proposals = 0u64;
    let mut total_accepts = 0u64;

    for it in 0..plan.n_iter {
        let attempts_this_iter: u64;
        match plan.v_updater {
            VUpdater::ConstantGibbs
            | VUpdater::HierJeffreysAr
            | VUpdater::ReferenceMhA
            | VUpdater::ReferenceMhB => {
                state.theta = sample_theta_full_conditional(&state, data, &mut rng)?;
                state.beta = sample_beta_full_conditional(&state, data, spec, &mut rng)?;
                if case3 {
                    state.lambda =
                        Some(sample_lambda_full_conditional(&state.beta, &spec.bprior, &mut rng)?);
                }
                match plan.v_updater {
                    VUpdater::ConstantGibbs => {
                        state.v = sample_v_constant_gibbs(&state, &mut rng)?;
                        attempts_this_iter = 1;
                        total_proposals += 1;
                        total_accepts += 1;
                    }
                    VUpdater::HierJeffreysAr => {
                        let (v, attempts) =
                            sample_v_hier_jeffreys_ar(&state, plan.attempt_cap, &mut rng)?;
                        state.v = v;
                        attempts_this_iter = attempts;
                        total_proposals += attempts;
                        total_accepts += 1;
                    }
                    _ => {
                        let variant = if plan.v_updater == VUpdater::ReferenceMhA {
                            ReferenceVariant::A
                        } else {
                            ReferenceVariant::B
                        };
                        let (v, out) =
                            sample_v_reference_mh(&state, variant, plan.mh_inner_iters, &mut rng)?;
                        state.v = v;
                        attempts_this_iter = out.nonmoves;
                        total_proposals += out.proposals;
                        total_accepts += out.accepts;
                    }
                }
            }
            VUpdater::MarginalRejection => {
                let (v, attempts) = sample_v_marginal_rejection(data, plan.attempt_cap, &mut rng)?;
                state.v = v;
                state.beta = sample_beta_given_v_flat(data, &state.v, &mut rng)?;
                state.theta = sample_theta_full_conditional(&state, data, &mut rng)?;
                attempts_this_iter = attempts;
                total_proposals += attempts;
                total_accepts += 1;
            }
            VUpdater::MarginalHitRun => {
                let chain = hitrun.as_mut().expect("initialized above");
                let mut nonmoves = 0u64;
                let mut moved = false;
                for _ in 0..plan.mh_inner_iters {
                    let accepted = chain.step(data, spec, plan.step_scale, &mut rng);
                    total_proposals += 1;
                    if accepted {
                        total_accepts += 1;
                        moved = true;
                    } else if !moved {
                        nonmoves += 1;
                    }
                }
                state.v = chain.v.clone();
                state.lambda = Some(chain.lambda);
                state.beta =
                    sample_beta_given_v_hier(data, spec, &state.v, chain.lambda, &mut rng)?;
                state.theta = sample_theta_full_conditional(&state, data, &mut rng)?;
                attempts_this_iter = nonmoves;
            }
        }

        if it >= plan.n_burnin && (it - plan.n_burnin) % plan.thin == plan.thin - 1 {
            draws.push(state.clone());
            v_attempt_counts.push(attempts_this_iter);
        }
    }

    Ok(ChainOutput {
        draws,
        v_attempt_counts,
        acceptance_rate: if total_proposals > 0 {
            total_accepts as f64 / total_proposals as f64
        } else {
            1.0
        },
        v_updater: plan.v_updater,
    })
}

/// Average number of rejected proposals before a move, over saved draws.
/// Only meaningful for the Metropolis-based updaters.
pub fn nonmove_statistics(output: &ChainOutput) -> Result<f64> {
    match output.v_updater {
        VUpdater::ReferenceMhA | VUpdater::ReferenceMhB | VUpdater::MarginalHitRun => {}
        other => {
            return Err(Error::InvalidInput(format!(
                "nonmove statistics are defined for Metropolis updaters, not {other:?}"
            )))
        }
    }
    if output.v_attempt_counts.is_empty() {
        return Err(Error::InvalidInput("empty chain".into()));
    }
    Ok(output.v_attempt_counts.iter().sum::<u64>() as f64
        / output.v_attempt_counts.len() as f64)
}
