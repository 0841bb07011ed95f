//! `check`: classify the configured hyperprior — posterior propriety and
//! admissibility of the posterior mean — and advise on the block count when
//! the posterior is improper.

use matmeans::analysis::{
    check_propriety, classify_admissibility, minimal_proper_m, Propriety,
};

use crate::commands::{model_shape, CliError};
use crate::config::RunConfig;
use crate::formats::{write_file, Record};

pub fn run(cfg: &RunConfig) -> Result<i32, CliError> {
    let (m, k) = model_shape(cfg)?;
    let spec = cfg.hyperprior(k)?;

    let prop = check_propriety(&spec, m, k)?;
    let adm = classify_admissibility(&spec, m, k)?;

    let mut rec = Record::new();
    rec.push("model.m", m);
    rec.push("model.k", k);
    rec.push("prior.v.a1", spec.vprior.a1);
    rec.push("prior.v.a2", spec.vprior.a2);
    rec.push("prior.v.l", spec.vprior.l);
    rec.push("prior.beta.case", spec.bprior.case());
    rec.push("propriety.status", format!("{:?}", prop.status));
    rec.push("propriety.rule", &prop.rule);
    rec.push("propriety.boundary", prop.boundary);
    rec.push("admissibility.status", format!("{:?}", adm.status));
    rec.push("admissibility.rule", &adm.rule);
    rec.push("admissibility.boundary", adm.boundary);

    let mut advisory = String::new();
    if prop.status == Propriety::Improper {
        advisory = match minimal_proper_m(&spec, k)? {
            Some(min_m) => format!(
                "the posterior becomes proper at m >= {min_m} blocks (currently m = {m})"
            ),
            None => "no number of blocks makes this posterior proper; change the prior \
                     exponents (a1 < 1 is necessary)"
                .to_string(),
        };
        rec.push("advisory", &advisory);
    }

    let text = rec.render();
    print!("{text}");
    write_file(&cfg.out_dir.join("check.txt"), &text)?;

    if prop.status == Propriety::Improper {
        eprintln!("check: posterior improper: {}", prop.rule);
        if !advisory.is_empty() {
            eprintln!("check: {advisory}");
        }
        return Ok(3);
    }
    Ok(0)
}
