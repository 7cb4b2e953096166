//! Method dispatch shared by the CLI and the benchmark sweep.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::datagen::seeded_rng;
use crate::em::{em_fit, kmeanspp_init, EmConfig};
use crate::error::{GmmError, Result};
use crate::objective::{
    original_loglik, Dataset, GmmParams, ReparamObjective, UsualObjective, AUGMENTED_LOG_OFFSET,
};
use crate::optim::{cg_fit, lbfgs_fit, FitReport, OptimConfig, Termination};
use crate::product::ProductPoint;

/// Average log-likelihood of `g` on `data` in the original parametrization.
pub fn average_loglik(data: &Dataset, g: &GmmParams) -> Result<f64> {
    Ok(original_loglik(data, g)? / data.n() as f64)
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// RNG stream used for k-means++ (generation uses 0 and 1).
const INIT_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Em,
    Lbfgs,
    Cg,
    CgUsual,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Em, Method::Lbfgs, Method::Cg, Method::CgUsual];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Em => "em",
            Method::Lbfgs => "lbfgs",
            Method::Cg => "cg",
            Method::CgUsual => "cg-usual",
        }
    }

    /// Whether the method optimizes the augmented (reparametrized) form.
    pub fn reparametrized(self) -> bool {
        matches!(self, Method::Lbfgs | Method::Cg)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = GmmError;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| GmmError::InvalidArgument(format!("unknown method {s:?} (em|lbfgs|cg|cg-usual)")))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitSettings {
    pub optim: OptimConfig,
    pub em: EmConfig,
}

impl FitSettings {
    pub fn validate(&self) -> Result<()> {
        self.optim.validate()?;
        self.em.validate()
    }
}

/// k-means++ initialization drawn from the seed's init stream.
pub fn initialize(data: &Dataset, k: usize, settings: &FitSettings, seed: u64) -> Result<GmmParams> {
    kmeanspp_init(data, k, settings.em.cov_floor(data), &mut seeded_rng(seed, INIT_STREAM))
}

fn from_augmented(rep: FitReport<ProductPoint>) -> Result<FitReport<GmmParams>> {
    let g = GmmParams::from_reparam(&rep.final_point)?;
    let mut rep = rep.map_point(|_| g);
    rep.avg_ll_trace.iter_mut().for_each(|v| *v -= AUGMENTED_LOG_OFFSET);
    Ok(rep)
}

/// Fits `data` with `method` from `init`. The result is always expressed in
/// the original (weights, means, covariances) parametrization, and traces of
/// the augmented objective are shifted onto the original log-likelihood
/// scale (exact when every block has unit scale).
pub fn run_method(
    data: &Dataset,
    init: &GmmParams,
    method: Method,
    settings: &FitSettings,
) -> Result<FitReport<GmmParams>> {
    match method {
        Method::Em => em_fit(data, init.clone(), &settings.em),
        Method::Lbfgs => from_augmented(lbfgs_fit(
            &ReparamObjective::new(data),
            init.to_reparam()?,
            &settings.optim,
        )?),
        Method::Cg => from_augmented(cg_fit(&ReparamObjective::new(data), init.to_reparam()?, &settings.optim)?),
        Method::CgUsual => {
            let rep = cg_fit(&UsualObjective::new(data), init.to_usual()?, &settings.optim)?;
            let g = GmmParams::from_usual(&rep.final_point)?;
            Ok(rep.map_point(|_| g))
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of the model's canonical JSON encoding.
pub fn params_hash(g: &GmmParams) -> Result<String> {
    Ok(sha256_hex(g.to_json()?.as_bytes()))
}

pub fn termination_label(t: Termination) -> &'static str {
    match t {
        Termination::Tolerance => "tolerance",
        Termination::MaxIters => "max_iters",
        Termination::LineSearchFailure => "line_search_failure",
    }
}

/// Report document written next to a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub version: String,
    pub method: Method,
    pub reparametrized: bool,
    #[serde(rename = "K")]
    pub k: usize,
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    pub config: FitSettings,
    /// Absolute diagonal covariance floor; applied by EM and to the shared
    /// k-means++ initialization only.
    pub cov_floor: f64,
    pub init_hash: String,
    pub init_time_s: f64,
    pub fit_time_s: f64,
    pub iterations: usize,
    /// `tolerance`, `max_iters`, `line_search_failure`, or `failure`.
    pub termination: String,
    /// Average log-likelihood of the returned model.
    pub final_all: Option<f64>,
    pub avg_ll_trace: Vec<f64>,
    pub error: Option<String>,
}

/// Result of [`fit_dataset`]: the fitted model (absent on hard failure) and
/// its report.
pub struct FitRun {
    pub model: Option<GmmParams>,
    pub record: FitRecord,
}

impl FitRun {
    /// True when the run ended in an error or a line-search failure.
    pub fn failed(&self) -> bool {
        self.record.error.is_some() || self.record.termination == "line_search_failure"
    }
}

/// Initializes with k-means++ from `seed` and fits. Errors after a
/// successful initialization are captured in the record rather than
/// returned.
pub fn fit_dataset(data: &Dataset, method: Method, k: usize, seed: u64, settings: &FitSettings) -> Result<FitRun> {
    settings.validate()?;
    let t0 = Instant::now();
    let init = initialize(data, k, settings, seed)?;
    let init_time_s = t0.elapsed().as_secs_f64();
    let mut record = FitRecord {
        version: VERSION.into(),
        method,
        reparametrized: method.reparametrized(),
        k,
        d: data.d(),
        n: data.n(),
        seed,
        config: settings.clone(),
        cov_floor: settings.em.cov_floor(data),
        init_hash: params_hash(&init)?,
        init_time_s,
        fit_time_s: 0.0,
        iterations: 0,
        termination: "failure".into(),
        final_all: None,
        avg_ll_trace: Vec::new(),
        error: None,
    };
    let t1 = Instant::now();
    let model = match run_method(data, &init, method, settings) {
        Ok(rep) => {
            record.iterations = rep.iterations;
            record.termination = termination_label(rep.termination).into();
            record.avg_ll_trace = rep.avg_ll_trace.clone();
            match average_loglik(data, &rep.final_point) {
                Ok(v) => record.final_all = Some(v),
                Err(e) => record.error = Some(e.to_string()),
            }
            Some(rep.final_point)
        }
        Err(e) => {
            record.error = Some(e.to_string());
            None
        }
    };
    record.fit_time_s = t1.elapsed().as_secs_f64();
    Ok(FitRun { model, record })
}
