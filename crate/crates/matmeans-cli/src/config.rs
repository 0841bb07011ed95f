//! Run configuration: a flat key-value file with dotted sections, overridable
//! by command-line flags. One file fully reproduces one run.
//!
//! ```text
//! # comment
//! data = blocks.csv
//! seed = 42
//! prior.v.name = hier-reference-a
//! prior.beta.case = hierarchical
//! prior.beta.b = 0.5
//! prior.beta.c = 0.5
//! plan.v_updater = reference-mh-a
//! plan.n_iter = 20000
//! plan.n_burnin = 5000
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use matmeans::prior::{
    named_v_prior, BetaPriorSpec, HyperpriorSpec, VPriorName, VPriorParams,
};
use matmeans::samplers::{SamplerPlan, VUpdater};
use nalgebra::{DMatrix, DVector};

#[derive(Debug)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { field: field.to_string(), message: message.into() }
}

/// Parsed but uninterpreted key-value pairs.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    map: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(
                    &format!("line {}", lineno + 1),
                    format!("expected `key = value`, got `{line}`"),
                ));
            };
            map.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Self { map })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| err("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Later values win; used for flag overrides.
    pub fn set(&mut self, key: &str, value: String) {
        self.map.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    fn parse_with<T, F: FnOnce(&str) -> Option<T>>(
        &self,
        key: &str,
        parse: F,
    ) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(s) => parse(s)
                .map(Some)
                .ok_or_else(|| err(key, format!("cannot parse `{s}`"))),
        }
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.parse_with(key, |s| s.parse().ok())
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.parse_with(key, |s| s.parse().ok())
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, ConfigError> {
        self.parse_with(key, |s| s.parse().ok())
    }

    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.parse_with(key, |s| {
            s.split(',').map(|t| t.trim().parse::<f64>().ok()).collect::<Option<Vec<_>>>()
        })
    }

    pub fn get_usize_list(&self, key: &str) -> Result<Option<Vec<usize>>, ConfigError> {
        self.parse_with(key, |s| {
            s.split(',').map(|t| t.trim().parse::<usize>().ok()).collect::<Option<Vec<_>>>()
        })
    }
}

/// Everything a subcommand needs, resolved and validated.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub workers: usize,
    pub force: bool,
    pub model_m: Option<usize>,
    pub model_k: Option<usize>,
    pub raw: KeyValues,
}

impl RunConfig {
    pub fn resolve(raw: KeyValues) -> Result<Self, ConfigError> {
        Ok(Self {
            data_path: raw.get("data").map(PathBuf::from),
            out_dir: PathBuf::from(raw.get("out").unwrap_or("out")),
            seed: raw.get_u64("seed")?.unwrap_or(0),
            workers: raw.get_usize("workers")?.unwrap_or(1).max(1),
            force: matches!(raw.get("force"), Some("true") | Some("1")),
            model_m: raw.get_usize("model.m")?,
            model_k: raw.get_usize("model.k")?,
            raw,
        })
    }

    /// The hyperprior at block dimension k.
    pub fn hyperprior(&self, k: usize) -> Result<HyperpriorSpec, ConfigError> {
        let vprior = self.vprior(k)?;
        let bprior = self.bprior(k)?;
        Ok(HyperpriorSpec { vprior, bprior })
    }

    fn vprior(&self, k: usize) -> Result<VPriorParams, ConfigError> {
        let key = "prior.v.name";
        match self.raw.get(key) {
            Some(name) => {
                let named = match name {
                    "constant" => VPriorName::Constant,
                    "nonhier-jeffreys" => VPriorName::NonhierJeffreys,
                    "hier-jeffreys" => VPriorName::HierJeffreys,
                    "nonhier-reference" => VPriorName::NonhierReference,
                    "hier-reference-a" => VPriorName::HierReferenceA,
                    "hier-reference-b" => VPriorName::HierReferenceB,
                    "custom" => {
                        let a1 = self
                            .raw
                            .get_f64("prior.v.a1")?
                            .ok_or_else(|| err("prior.v.a1", "required for custom"))?;
                        let a2 = self
                            .raw
                            .get_f64("prior.v.a2")?
                            .ok_or_else(|| err("prior.v.a2", "required for custom"))?;
                        let l = self.raw.get_f64("prior.v.l")?.unwrap_or(0.0);
                        return VPriorParams::custom(a1, a2, l)
                            .map_err(|e| err("prior.v", e.to_string()));
                    }
                    other => {
                        return Err(err(
                            key,
                            format!(
                                "unknown prior `{other}`; expected constant, nonhier-jeffreys, \
                                 hier-jeffreys, nonhier-reference, hier-reference-a, \
                                 hier-reference-b or custom"
                            ),
                        ))
                    }
                };
                named_v_prior(named, k).map_err(|e| err(key, e.to_string()))
            }
            None => named_v_prior(VPriorName::HierReferenceA, k).map_err(|e| err(key, e.to_string())),
        }
    }

    fn beta0(&self, k: usize) -> Result<DVector<f64>, ConfigError> {
        match self.raw.get_f64_list("prior.beta.beta0")? {
            None => Ok(DVector::zeros(k)),
            Some(v) if v.len() == k => Ok(DVector::from_vec(v)),
            Some(v) => Err(err(
                "prior.beta.beta0",
                format!("expected {k} entries, got {}", v.len()),
            )),
        }
    }

    fn scale_matrix(&self, k: usize) -> Result<DMatrix<f64>, ConfigError> {
        let key = "prior.beta.a";
        match self.raw.get(key) {
            None => Ok(DMatrix::identity(k, k)),
            Some(s) if !s.contains(';') && !s.contains(',') => {
                let scale: f64 =
                    s.parse().map_err(|_| err(key, format!("cannot parse `{s}`")))?;
                Ok(DMatrix::identity(k, k) * scale)
            }
            Some(s) => {
                let rows: Vec<Vec<f64>> = s
                    .split(';')
                    .map(|row| {
                        row.split(',')
                            .map(|t| t.trim().parse::<f64>().map_err(|_| ()))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| err(key, "matrix rows must be `a,b;c,d`"))?;
                if rows.len() != k || rows.iter().any(|r| r.len() != k) {
                    return Err(err(key, format!("expected a {k}x{k} matrix")));
                }
                Ok(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
            }
        }
    }

    fn bprior(&self, k: usize) -> Result<BetaPriorSpec, ConfigError> {
        let case = self.raw.get("prior.beta.case").unwrap_or("hierarchical");
        match case {
            "flat" => Ok(BetaPriorSpec::Flat),
            "normal" => BetaPriorSpec::normal(self.beta0(k)?, self.scale_matrix(k)?)
                .map_err(|e| err("prior.beta", e.to_string())),
            "hierarchical" => {
                let b = self.raw.get_f64("prior.beta.b")?.unwrap_or(0.5);
                let c = self.raw.get_f64("prior.beta.c")?.unwrap_or(0.5);
                BetaPriorSpec::hierarchical(self.beta0(k)?, self.scale_matrix(k)?, b, c)
                    .map_err(|e| err("prior.beta", e.to_string()))
            }
            other => Err(err(
                "prior.beta.case",
                format!("unknown case `{other}`; expected flat, normal or hierarchical"),
            )),
        }
    }

    pub fn plan(&self) -> Result<SamplerPlan, ConfigError> {
        let key = "plan.v_updater";
        let updater = match self.raw.get(key).unwrap_or("reference-mh-a") {
            "constant-gibbs" => VUpdater::ConstantGibbs,
            "hier-jeffreys-ar" => VUpdater::HierJeffreysAr,
            "reference-mh-a" => VUpdater::ReferenceMhA,
            "reference-mh-b" => VUpdater::ReferenceMhB,
            "marginal-rejection" => VUpdater::MarginalRejection,
            "marginal-hit-run" => VUpdater::MarginalHitRun,
            other => {
                return Err(err(
                    key,
                    format!(
                        "unknown updater `{other}`; expected constant-gibbs, hier-jeffreys-ar, \
                         reference-mh-a, reference-mh-b, marginal-rejection or marginal-hit-run"
                    ),
                ))
            }
        };
        let n_iter = self.raw.get_usize("plan.n_iter")?.unwrap_or(20_000);
        let n_burnin = self.raw.get_usize("plan.n_burnin")?.unwrap_or(n_iter / 4);
        let thin = self.raw.get_usize("plan.thin")?.unwrap_or(1);
        let mut plan = SamplerPlan::new(updater, n_iter, n_burnin, thin, self.seed);
        if let Some(v) = self.raw.get_usize("plan.mh_inner_iters")? {
            plan.mh_inner_iters = v;
        }
        if let Some(v) = self.raw.get_f64("plan.step_scale")? {
            plan.step_scale = v;
        }
        if let Some(v) = self.raw.get_u64("plan.attempt_cap")? {
            plan.attempt_cap = v;
        }
        Ok(plan)
    }
}
