//! `risk`: frequentist risk comparison of the maximum-likelihood estimator
//! against the hierarchical Bayes posterior mean under the configured prior,
//! at a synthesized clustered truth.

use matmeans::estimate::{flatten, posterior_mean, quadratic_loss};
use matmeans::model::ModelData;
use matmeans::numeric::mean_se;
use matmeans::samplers::{default_updater_for, run_chain, SamplerPlan};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::commands::{model_shape, CliError};
use crate::config::RunConfig;
use crate::formats::{write_file, Record};

struct EstimatorRow {
    name: String,
    risk: f64,
    se: f64,
    failures: usize,
}

pub fn run(cfg: &RunConfig) -> Result<i32, CliError> {
    let (m, k) = model_shape(cfg)?;
    let spec = cfg.hyperprior(k)?;
    let n_rep = cfg.raw.get_usize("risk.n_rep")?.unwrap_or(500);
    let theta_sd = cfg.raw.get_f64("risk.theta_sd")?.unwrap_or(0.5f64.sqrt());
    let n_iter = cfg.raw.get_usize("risk.n_iter")?.unwrap_or(1500);
    let n_burnin = cfg.raw.get_usize("risk.n_burnin")?.unwrap_or(300);
    let inner = cfg.raw.get_usize("risk.inner_iters")?.unwrap_or(6);

    // Clustered truth: theta rows i.i.d. N(0, theta_sd^2 I), fixed by seed.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let theta_true: DMatrix<f64> = DMatrix::from_fn(m, k, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        theta_sd * z
    });
    let theta_flat = flatten(&theta_true);
    let q = DMatrix::identity(m * k, m * k);

    // Pre-draw the replicate datasets so worker count cannot change them.
    let datasets: Vec<ModelData> = (0..n_rep)
        .map(|_| {
            let x = DMatrix::from_fn(m, k, |i, j| {
                let z: f64 = StandardNormal.sample(&mut rng);
                theta_true[(i, j)] + z
            });
            ModelData::new(x).expect("finite data")
        })
        .collect();

    let updater = default_updater_for(&spec, k).map_err(CliError::from)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| CliError::Validation(e.to_string()))?;

    let bayes_losses: Vec<Result<f64, String>> = pool.install(|| {
        datasets
            .par_iter()
            .enumerate()
            .map(|(rep, data)| {
                let mut plan = SamplerPlan::new(
                    updater,
                    n_iter,
                    n_burnin,
                    1,
                    cfg.seed.wrapping_add(1).wrapping_add(rep as u64),
                );
                plan.mh_inner_iters = inner;
                run_chain(data, &spec, &plan)
                    .and_then(|out| posterior_mean(&out))
                    .and_then(|delta| quadratic_loss(&theta_flat, &flatten(&delta), &q))
                    .map_err(|e| format!("replicate {rep}: {e}"))
            })
            .collect()
    });

    let mle_losses: Vec<f64> = datasets
        .iter()
        .map(|d| quadratic_loss(&theta_flat, &flatten(d.matrix()), &q).expect("dims match"))
        .collect();

    let mut rows = Vec::new();
    let (mle_risk, mle_se) = mean_se(&mle_losses);
    rows.push(EstimatorRow { name: "mle".into(), risk: mle_risk, se: mle_se, failures: 0 });

    let ok: Vec<f64> = bayes_losses.iter().filter_map(|r| r.as_ref().ok().copied()).collect();
    let failures = bayes_losses.len() - ok.len();
    for e in bayes_losses.iter().filter_map(|r| r.as_ref().err()) {
        eprintln!("risk: bayes estimator failed: {e}");
    }
    if ok.len() >= 2 {
        let (risk, se) = mean_se(&ok);
        rows.push(EstimatorRow { name: "bayes".into(), risk, se, failures });
    } else {
        rows.push(EstimatorRow { name: "bayes".into(), risk: f64::NAN, se: f64::NAN, failures });
    }

    let mut rec = Record::new();
    rec.push("model.m", m);
    rec.push("model.k", k);
    rec.push("risk.n_rep", n_rep);
    rec.push("risk.theta_sd", theta_sd);
    rec.push("risk.q", "identity");
    let mut table = String::from("estimator,risk,se,failures\n");
    for r in &rows {
        table.push_str(&format!("{},{},{},{}\n", r.name, r.risk, r.se, r.failures));
        rec.push(&format!("risk.{}", r.name), format!("{} +- {}", r.risk, r.se));
        rec.push(&format!("failures.{}", r.name), r.failures);
    }
    if rows.len() == 2 && rows[1].risk.is_finite() {
        let gap = rows[0].risk - rows[1].risk;
        let gap_se = (rows[0].se.powi(2) + rows[1].se.powi(2)).sqrt();
        rec.push("gap.mle_minus_bayes", format!("{gap} +- {gap_se}"));
    }

    let text = rec.render();
    print!("{text}");
    println!("{table}");
    write_file(&cfg.out_dir.join("risk.csv"), &table)?;
    write_file(&cfg.out_dir.join("risk.txt"), &text)?;
    Ok(0)
}
