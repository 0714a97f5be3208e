//! Replicated simulation grids.
//!
//! Every `(K, replicate)` cell draws its data from a seed derived from the
//! master seed and the cell key, so methods are compared on the same draws
//! and any subset of the grid can be recomputed in isolation.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::estimators::{self, WeightVector};
use crate::metrics::subspace_error;
use crate::model::{
    synthesize_views, JiveGroundTruth, LoadingScheme, MultiViewData, RankSpec, SubspaceConstruction, TruthSpec,
};
use crate::seed::{derive_seed, rng_from_seed};
use crate::weighting::{self, ReweightConfig, WeightingProblem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseSpec {
    Fixed(f64),
    Uniform { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Heterojive,
    Ajive,
    Stacksvd,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Heterojive => "heterojive",
            Method::Ajive => "ajive",
            Method::Stacksvd => "stacksvd",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "heterojive" => Ok(Method::Heterojive),
            "ajive" => Ok(Method::Ajive),
            "stacksvd" => Ok(Method::Stacksvd),
            other => Err(format!("unknown method `{other}` (expected heterojive, ajive or stacksvd)")),
        }
    }
}

/// Where HeteroJIVE's weights come from. AJIVE and Stack-SVD always use
/// equal weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightSource {
    Oracle,
    DataDriven,
    Equal,
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub d: usize,
    pub r: usize,
    pub r_k: usize,
    pub k_grid: Vec<usize>,
    pub scheme: LoadingScheme,
    pub s: f64,
    pub gamma: f64,
    pub theta_target: f64,
    pub noise: NoiseSpec,
    pub replicates: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub weight_source: WeightSource,
    #[serde(default)]
    pub reweight: ReweightSettings,
}

/// Reweighting options as they appear in a config file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReweightSettings {
    pub t_max: usize,
    pub tol: f64,
    pub refresh_each_iter: bool,
}

impl Default for ReweightSettings {
    fn default() -> Self {
        let d = ReweightConfig::default();
        Self { t_max: d.t_max, tol: d.tol, refresh_each_iter: d.refresh_each_iter }
    }
}

impl From<ReweightSettings> for ReweightConfig {
    fn from(s: ReweightSettings) -> Self {
        ReweightConfig { t_max: s.t_max, tol: s.tol, refresh_each_iter: s.refresh_each_iter }
    }
}

impl ExperimentConfig {
    /// Field-level validation; the message names the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return invalid("replicates: must be at least 1");
        }
        if self.k_grid.is_empty() {
            return invalid("k_grid: must not be empty");
        }
        if self.k_grid.contains(&0) {
            return invalid("k_grid: view counts must be positive");
        }
        if self.k_grid.windows(2).any(|p| p[0] >= p[1]) {
            return invalid("k_grid: must be strictly ascending");
        }
        if self.r == 0 {
            return invalid("r: joint rank must be positive");
        }
        if self.r + 2 * self.r_k > self.n {
            return invalid(format!("r, r_k: r + 2 r_k = {} exceeds n = {}", self.r + 2 * self.r_k, self.n));
        }
        if self.r + self.r_k > self.d {
            return invalid(format!("d: r + r_k = {} exceeds d = {}", self.r + self.r_k, self.d));
        }
        if matches!(self.scheme, LoadingScheme::SharedOrthogonal | LoadingScheme::RandomOrthogonal)
            && self.r + self.r_k > self.d
        {
            return invalid("d: orthogonal schemes need r + r_k ≤ d");
        }
        if !(0.0..=1.0).contains(&self.theta_target) {
            return invalid("theta_target: must lie in [0, 1]");
        }
        if !(self.s.is_finite() && self.s > 0.0) {
            return invalid("s: must be positive");
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return invalid("gamma: must be nonnegative");
        }
        match self.noise {
            NoiseSpec::Fixed(s) if !(s.is_finite() && s >= 0.0) => return invalid("noise: σ must be nonnegative"),
            NoiseSpec::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) => {
                return invalid("noise: need 0 ≤ lo ≤ hi")
            }
            _ => {}
        }
        if self.methods.is_empty() {
            return invalid("methods: must list at least one method");
        }
        let mut seen = self.methods.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.methods.len() {
            return invalid("methods: duplicate entries");
        }
        if let WeightSource::Fixed(w) = &self.weight_source {
            if self.k_grid.iter().any(|&k| k != w.len()) {
                return invalid("weight_source: fixed weights need every k_grid entry to equal their length");
            }
            WeightVector::new(w.clone()).map_err(|e| crate::JiveError::InvalidInput(format!("weight_source: {e}")))?;
        }
        if self.reweight.t_max == 0 {
            return invalid("reweight.t_max: must be at least 1");
        }
        if !(self.reweight.tol.is_finite() && self.reweight.tol > 0.0) {
            return invalid("reweight.tol: must be positive");
        }
        Ok(())
    }

    pub fn ranks(&self, k: usize) -> Result<RankSpec> {
        RankSpec::uniform(self.r, self.r_k, k)
    }

    /// Ground truth and noisy views for grid cell `(k, replicate)`.
    pub fn draw(&self, k: usize, replicate: usize) -> Result<(JiveGroundTruth, MultiViewData)> {
        let seed = derive_seed(self.seed, "data", &[k as u64, replicate as u64]);
        let mut rng = rng_from_seed(seed);
        let sigma_k = match self.noise {
            NoiseSpec::Fixed(s) => vec![s; k],
            NoiseSpec::Uniform { lo, hi } => (0..k).map(|_| rng.random_range(lo..=hi)).collect(),
        };
        let spec = TruthSpec {
            n: self.n,
            widths: vec![self.d; k],
            ranks: self.ranks(k)?,
            scheme: self.scheme,
            construction: SubspaceConstruction::Aligned { theta: self.theta_target },
            s_k: vec![self.s; k],
            gamma: self.gamma,
            sigma_k,
        };
        let truth = spec.build(&mut rng)?;
        let data = synthesize_views(&mut rng, &truth)?;
        Ok((truth, data))
    }
}

/// One `(method, K, replicate)` outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub method: Method,
    pub k: usize,
    pub replicate: usize,
    /// NaN when the replicate failed.
    pub error: f64,
    /// `θ(w)` of the true individual subspaces at the weights used.
    pub theta_realized: f64,
    pub spectral_gap: f64,
    pub weights: Vec<f64>,
    pub wallclock_ms: f64,
    /// Empty on success.
    pub reason: String,
}

struct Outcome {
    error: f64,
    theta: f64,
    gap: f64,
    weights: Vec<f64>,
}

fn fit_method(
    cfg: &ExperimentConfig,
    method: Method,
    truth: &JiveGroundTruth,
    data: &MultiViewData,
) -> Result<Outcome> {
    let k = data.num_views();
    let ranks = cfg.ranks(k)?;
    let (agg, w) = match method {
        Method::Stacksvd => (estimators::stack_svd(data, cfg.r, None)?, WeightVector::uniform(k)),
        Method::Ajive => {
            let w = WeightVector::uniform(k);
            (estimators::estimate_joint(data, &ranks, &w)?, w)
        }
        Method::Heterojive => {
            let w = match &cfg.weight_source {
                WeightSource::Equal => WeightVector::uniform(k),
                WeightSource::Fixed(v) => WeightVector::new(v.clone())?,
                WeightSource::Oracle => {
                    let trace = WeightingProblem::oracle(truth)?.oracle_iterate(
                        &WeightVector::uniform(k),
                        cfg.reweight.t_max,
                        cfg.reweight.tol,
                    )?;
                    trace.last().clone()
                }
                WeightSource::DataDriven => weighting::data_driven_weights(data, &ranks, &cfg.reweight.into())?.0,
            };
            (estimators::estimate_joint(data, &ranks, &w)?, w)
        }
    };
    Ok(Outcome {
        error: subspace_error(&agg.basis, &truth.u)?,
        theta: weighting::theta_of_w(&truth.u_k, &w)?,
        gap: agg.gap,
        weights: w.as_slice().to_vec(),
    })
}

/// Runs one grid cell. Failures are recorded in the row, never raised.
pub fn run_replicate(cfg: &ExperimentConfig, method: Method, k: usize, replicate: usize) -> ResultRow {
    let start = Instant::now();
    let outcome = cfg.draw(k, replicate).and_then(|(truth, data)| fit_method(cfg, method, &truth, &data));
    let wallclock_ms = start.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(o) => ResultRow {
            method,
            k,
            replicate,
            error: o.error,
            theta_realized: o.theta,
            spectral_gap: o.gap,
            weights: o.weights,
            wallclock_ms,
            reason: String::new(),
        },
        Err(e) => ResultRow {
            method,
            k,
            replicate,
            error: f64::NAN,
            theta_realized: f64::NAN,
            spectral_gap: f64::NAN,
            weights: Vec::new(),
            wallclock_ms,
            reason: e.to_string(),
        },
    }
}

/// All rows of the grid, ordered by `(method, K, replicate)` in config order.
pub fn run_grid(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    let keys: Vec<(Method, usize, usize)> = cfg
        .methods
        .iter()
        .flat_map(|&m| cfg.k_grid.iter().flat_map(move |&k| (0..cfg.replicates).map(move |rep| (m, k, rep))))
        .collect();
    Ok(keys.into_par_iter().map(|(m, k, rep)| run_replicate(cfg, m, k, rep)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: Method,
    pub k: usize,
    pub sqrt_k: f64,
    pub mean_error: f64,
    pub std_error: f64,
    pub succeeded: usize,
    pub failed: usize,
}

/// Mean and standard error of the error per `(method, K)` over successful
/// replicates, in first-appearance order.
pub fn summarize(rows: &[ResultRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Method, usize)> = Vec::new();
    for row in rows {
        if !keys.contains(&(row.method, row.k)) {
            keys.push((row.method, row.k));
        }
    }
    keys.into_iter()
        .map(|(method, k)| {
            let cell: Vec<&ResultRow> = rows.iter().filter(|r| r.method == method && r.k == k).collect();
            let errs: Vec<f64> = cell.iter().map(|r| r.error).filter(|e| !e.is_nan()).collect();
            let (mean, se) = mean_and_se(&errs);
            SummaryRow {
                method,
                k,
                sqrt_k: (k as f64).sqrt(),
                mean_error: mean,
                std_error: se,
                succeeded: errs.len(),
                failed: cell.len() - errs.len(),
            }
        })
        .collect()
}

/// Sample mean and `s / √m` (NaN where undefined).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let m = xs.len();
    if m == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / m as f64;
    if m == 1 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
    (mean, (var / m as f64).sqrt())
}
