//! End-to-end tests of the `matmeans` binary: exit codes, file outputs,
//! determinism, and the probe's agreement gate.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_matmeans"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn check_flags_improper_constant_prior_with_block_advice() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(
        &cfg,
        "model.m = 5\nmodel.k = 3\nprior.v.name = constant\nprior.beta.case = flat\n",
    );
    let out = run(&[
        "check",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "improper posterior exits 3");
    let report = std::fs::read_to_string(dir.path().join("out/check.txt")).unwrap();
    assert!(report.contains("propriety.status = Improper"));
    assert!(report.contains("m >= 8"), "advisory must name the minimal block count:\n{report}");
}

#[test]
fn check_passes_recommended_default_at_two_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(&cfg, "model.m = 2\nmodel.k = 6\n");
    let out = run(&[
        "check",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("out/check.txt")).unwrap();
    assert!(report.contains("propriety.status = Proper"));
}

#[test]
fn check_hier_jeffreys_needs_more_blocks_than_k() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(
        &cfg,
        "model.m = 4\nmodel.k = 4\nprior.v.name = hier-jeffreys\nprior.beta.case = flat\n",
    );
    let out = run(&[
        "check",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    let report = std::fs::read_to_string(dir.path().join("out/check.txt")).unwrap();
    assert!(report.contains("m >= 5"), "{report}");
}

#[test]
fn sample_is_byte_deterministic_and_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blocks.csv");
    write(
        &data,
        "1.2,0.3\n-0.5,0.8\n2.0,-1.0\n0.1,0.4\n-1.3,0.9\n0.7,-0.2\n",
    );
    let cfg = dir.path().join("run.cfg");
    write(
        &cfg,
        &format!(
            "data = {}\nseed = 11\nplan.v_updater = reference-mh-a\nplan.n_iter = 400\n\
             plan.n_burnin = 100\nplan.thin = 3\n",
            data.display()
        ),
    );
    let out1 = dir.path().join("out1");
    let out2 = dir.path().join("out2");
    for out in [&out1, &out2] {
        let o = run(&["sample", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    }
    let c1 = std::fs::read(out1.join("chain.csv")).unwrap();
    let c2 = std::fs::read(out2.join("chain.csv")).unwrap();
    assert_eq!(c1, c2, "same config + seed must give byte-identical chains");

    let summary = std::fs::read_to_string(out1.join("summary.txt")).unwrap();
    assert!(summary.contains("nonmove_mean"), "MH plan reports nonmoves:\n{summary}");
    assert!(summary.contains("posterior_mean.lambda"));

    // Round-trip: the written chain parses back to the same values.
    let text = std::fs::read_to_string(out1.join("chain.csv")).unwrap();
    let parsed = matmeans_cli::formats::read_chain(
        &text,
        matmeans::samplers::VUpdater::ReferenceMhA,
    )
    .unwrap();
    assert_eq!(parsed.draws.len(), 100);
    let rendered = matmeans_cli::formats::write_chain(&parsed);
    assert_eq!(rendered, text, "chain file must round-trip exactly");
}

#[test]
fn sample_rejects_improper_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blocks.csv");
    write(&data, "1.0,2.0\n3.0,4.0\n0.5,0.1\n");
    let cfg = dir.path().join("run.cfg");
    write(
        &cfg,
        &format!(
            "data = {}\nprior.v.name = constant\nprior.beta.case = flat\n\
             plan.v_updater = constant-gibbs\nplan.n_iter = 50\nplan.n_burnin = 10\n",
            data.display()
        ),
    );
    let o = run(&["sample", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 3);
}

#[test]
fn sample_rejects_incompatible_plan() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blocks.csv");
    write(&data, "1.0,2.0\n3.0,4.0\n0.5,0.1\n-1.0,0.3\n");
    let cfg = dir.path().join("run.cfg");
    // Normal-mean prior with the marginal rejection plan (needs flat mean).
    write(
        &cfg,
        &format!(
            "data = {}\nprior.v.name = hier-jeffreys\nprior.beta.case = normal\n\
             plan.v_updater = marginal-rejection\nplan.n_iter = 50\nplan.n_burnin = 10\n",
            data.display()
        ),
    );
    let o = run(&["sample", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2, "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn ingest_errors_name_the_location() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blocks.csv");
    write(&data, "1.0,2.0\n3.0,oops\n");
    let cfg = dir.path().join("run.cfg");
    write(&cfg, &format!("data = {}\n", data.display()));
    let o = run(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 2, column 2"), "{err}");
}

#[test]
fn probe_agrees_with_classifier_on_both_sides() {
    let dir = tempfile::tempdir().unwrap();
    // A divergent custom prior: a1 = 1 is exactly log-divergent at zero.
    let cfg = dir.path().join("diverging.cfg");
    write(
        &cfg,
        "model.m = 4\nmodel.k = 2\nprior.v.name = custom\nprior.v.a1 = 1\nprior.v.a2 = 2\n\
         prior.v.l = 0\nprior.beta.case = flat\n",
    );
    let o = run(&["probe", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o1").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "divergence agreeing with Improper is not a contradiction");
    let report = std::fs::read_to_string(dir.path().join("o1/probe.txt")).unwrap();
    assert!(report.contains("probe.status = Diverges"), "{report}");
    assert!(report.contains("analytic.status = Improper"));
    assert!(report.contains("tail.within_0.02 = true"));

    // The recommended default on a small model: proper, converging.
    let cfg = dir.path().join("default.cfg");
    write(&cfg, "model.m = 3\nmodel.k = 2\nprobe.n_sphere = 8\nprobe.n_haar = 6\nprobe.r_grid = 4,8,16\n");
    let o = run(&["probe", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o2").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let report = std::fs::read_to_string(dir.path().join("o2/probe.txt")).unwrap();
    assert!(report.contains("probe.status = Converges"), "{report}");
    assert!(report.contains("brown.exponent_a"));
}

#[test]
fn probe_rejects_large_k() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(&cfg, "model.m = 3\nmodel.k = 5\n");
    let o = run(&["probe", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn table1_emits_grid_with_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(
        &cfg,
        "seed = 5\ntable1.k = 3\ntable1.m = 20,50\ntable1.replicates = 2\n\
         table1.n_iter = 150\ntable1.n_burnin = 50\ntable1.inner_iters = 120\n",
    );
    let o = run(&["table1", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("o/table1.csv")).unwrap();
    assert!(table.starts_with("k,m,nonmoves,se\n"));
    assert_eq!(table.lines().count(), 3, "{table}");
    assert!(table.lines().skip(1).all(|l| !l.contains("missing")), "{table}");
}

#[test]
fn risk_reports_both_estimators() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    write(
        &cfg,
        "seed = 9\nmodel.m = 4\nmodel.k = 2\nrisk.n_rep = 40\nrisk.n_iter = 300\n\
         risk.n_burnin = 50\nrisk.inner_iters = 4\n",
    );
    let o = run(&["risk", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("o/risk.csv")).unwrap();
    let mle_line = table.lines().find(|l| l.starts_with("mle,")).unwrap();
    let risk: f64 = mle_line.split(',').nth(1).unwrap().parse().unwrap();
    // Calibration: E||X - theta||^2 = mk = 8; generous MC slack at 40 reps.
    assert!((risk - 8.0).abs() < 3.0, "MLE risk {risk} too far from 8");
    assert!(table.lines().any(|l| l.starts_with("bayes,")));
    let rec = std::fs::read_to_string(dir.path().join("o/risk.txt")).unwrap();
    assert!(rec.contains("gap.mle_minus_bayes"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("blocks.csv");
    write(&data, "1.2,0.3\n-0.5,0.8\n2.0,-1.0\n0.1,0.4\n");
    let cfg = dir.path().join("run.cfg");
    write(
        &cfg,
        &format!(
            "data = {}\nseed = 11\nplan.n_iter = 60\nplan.n_burnin = 20\n",
            data.display()
        ),
    );
    let o1 = dir.path().join("o1");
    let o2 = dir.path().join("o2");
    run(&["sample", "--config", cfg.to_str().unwrap(), "--out", o1.to_str().unwrap()]);
    run(&["sample", "--config", cfg.to_str().unwrap(), "--out", o2.to_str().unwrap(), "--seed", "99"]);
    let c1 = std::fs::read(o1.join("chain.csv")).unwrap();
    let c2 = std::fs::read(o2.join("chain.csv")).unwrap();
    assert_ne!(c1, c2, "different seed must change the chain");
}
