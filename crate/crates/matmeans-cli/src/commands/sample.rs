//! `sample`: run one chain on the configured data and persist the draws plus
//! a summary. Refuses improper posteriors unless --force (loudly).

use matmeans::analysis::{check_propriety, Propriety};
use matmeans::estimate::posterior_mean;
use matmeans::samplers::{nonmove_statistics, run_chain, VUpdater};

use crate::commands::CliError;
use crate::config::RunConfig;
use crate::data::ingest_csv;
use crate::formats::{write_chain, write_file, Record};

pub fn run(cfg: &RunConfig) -> Result<i32, CliError> {
    let path = cfg
        .data_path
        .as_ref()
        .ok_or_else(|| CliError::Validation("`sample` needs a `data` file".into()))?;
    let data = ingest_csv(path)?;
    let (m, k) = (data.m(), data.k());
    let spec = cfg.hyperprior(k)?;
    let mut plan = cfg.plan()?;

    let verdict = check_propriety(&spec, m, k)?;
    if verdict.status == Propriety::Improper {
        if cfg.force {
            eprintln!(
                "sample: WARNING: --force given; sampling against an improper posterior \
                 ({}); the chain has no stationary distribution and the output is a \
                 diagnostic artifact only",
                verdict.rule
            );
            plan.force_improper = true;
        } else {
            return Err(CliError::Propriety(verdict.rule));
        }
    }

    let output = run_chain(&data, &spec, &plan)?;

    let chain_text = write_chain(&output);
    write_file(&cfg.out_dir.join("chain.csv"), &chain_text)?;

    let delta = posterior_mean(&output)?;
    let mut rec = Record::new();
    rec.push("model.m", m);
    rec.push("model.k", k);
    rec.push("plan.v_updater", format!("{:?}", output.v_updater));
    rec.push("plan.n_iter", plan.n_iter);
    rec.push("plan.n_burnin", plan.n_burnin);
    rec.push("plan.thin", plan.thin);
    rec.push("seed", plan.seed);
    rec.push("draws", output.draws.len());
    rec.push("acceptance_rate", output.acceptance_rate);
    if matches!(
        output.v_updater,
        VUpdater::ReferenceMhA | VUpdater::ReferenceMhB | VUpdater::MarginalHitRun
    ) {
        rec.push("nonmove_mean", nonmove_statistics(&output)?);
    }
    for i in 0..m {
        for j in 0..k {
            rec.push(&format!("posterior_mean.theta_{}_{}", i + 1, j + 1), delta[(i, j)]);
        }
    }
    let last = output.draws.last().expect("draws nonempty");
    let mut beta_mean = nalgebra::DVector::zeros(k);
    let mut v_mean = nalgebra::DMatrix::zeros(k, k);
    let mut lambda_mean = 0.0;
    for d in &output.draws {
        beta_mean += &d.beta;
        v_mean += &d.v;
        lambda_mean += d.lambda.unwrap_or(0.0);
    }
    let n = output.draws.len() as f64;
    beta_mean /= n;
    v_mean /= n;
    lambda_mean /= n;
    for j in 0..k {
        rec.push(&format!("posterior_mean.beta_{}", j + 1), beta_mean[j]);
    }
    for i in 0..k {
        for j in 0..k {
            rec.push(&format!("posterior_mean.v_{}_{}", i + 1, j + 1), v_mean[(i, j)]);
        }
    }
    if last.lambda.is_some() {
        rec.push("posterior_mean.lambda", lambda_mean);
    }

    let text = rec.render();
    print!("{text}");
    write_file(&cfg.out_dir.join("summary.txt"), &text)?;
    Ok(0)
}
