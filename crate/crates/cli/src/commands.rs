use std::fs;
use std::path::{Path, PathBuf};

use heterojive::estimators::{self, Components};
use heterojive::sim::{self, Method, ResultRow, SummaryRow};
use heterojive::weighting::{self, PluginDiagnostics, ReweightConfig, WeightTrace};
use heterojive::{MultiViewData, OrthonormalBasis, RankSpec, WeightVector};
use serde::Serialize;

use crate::cli::{EstimateArgs, GenerateArgs, ReweightArgs, SimulateArgs, WeightsArgs};
use crate::config::load_config;
use crate::error::{CliError, CliResult};
use crate::io::{create_dir, load_views, read_matrix, write_json, write_matrix};

pub const SEED_VAR: &str = "JIVE_SEED";

fn seed_override() -> Option<String> {
    std::env::var(SEED_VAR).ok()
}

fn parse_list<T: std::str::FromStr>(raw: &str, what: &str) -> CliResult<Vec<T>> {
    raw.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| CliError::Input(format!("{what}: `{s}` is not valid"))))
        .collect()
}

pub fn parse_ranks(raw: &str, num_views: usize) -> CliResult<RankSpec> {
    let values: Vec<usize> = parse_list(raw, "--ranks")?;
    if values.len() != num_views + 1 {
        return Err(CliError::Input(format!(
            "--ranks: expected a joint rank and {num_views} individual ranks, got {} values",
            values.len()
        )));
    }
    Ok(RankSpec::new(values[0], values[1..].to_vec())?)
}

pub fn parse_weights(raw: &str, num_views: usize) -> CliResult<WeightVector> {
    let values: Vec<f64> = parse_list(raw, "--weights")?;
    if values.len() != num_views {
        return Err(CliError::Input(format!("--weights: {} values for {num_views} views", values.len())));
    }
    WeightVector::new(values).map_err(|e| CliError::Input(format!("--weights: {e}")))
}

impl From<&ReweightArgs> for ReweightConfig {
    fn from(a: &ReweightArgs) -> Self {
        ReweightConfig { t_max: a.t_max, tol: a.tol, refresh_each_iter: a.refresh }
    }
}

// ---------------------------------------------------------------------------
// generate

#[derive(Serialize)]
struct GenerateManifest<'a> {
    seed: u64,
    config_hash: &'a str,
    num_views: usize,
    replicate: usize,
    n: usize,
    widths: Vec<usize>,
    joint_rank: usize,
    individual_ranks: &'a [usize],
    s_k: &'a [f64],
    gamma: f64,
    sigma_k: &'a [f64],
    theta_target: f64,
    theta_uniform: f64,
}

pub fn generate(args: &GenerateArgs) -> CliResult<()> {
    let loaded = load_config(&args.config, seed_override().as_deref())?;
    let cfg = &loaded.config;
    let k = args.num_views.unwrap_or(cfg.k_grid[0]);
    if k == 0 {
        return Err(CliError::Input("--num-views: must be positive".into()));
    }
    let (truth, data) = cfg.draw(k, args.replicate)?;
    let truth_dir = args.out.join("truth");
    create_dir(&truth_dir)?;
    for (i, view) in data.views().iter().enumerate() {
        write_matrix(&args.out.join(format!("view_{}.csv", i + 1)), view)?;
    }
    write_matrix(&truth_dir.join("U.csv"), truth.u.matrix())?;
    for i in 0..k {
        write_matrix(&truth_dir.join(format!("U_{}.csv", i + 1)), truth.u_k[i].matrix())?;
        write_matrix(&truth_dir.join(format!("V_{}.csv", i + 1)), &truth.v_k[i])?;
        write_matrix(&truth_dir.join(format!("W_{}.csv", i + 1)), &truth.w_k[i])?;
    }
    let ranks = truth.ranks();
    let manifest = GenerateManifest {
        seed: cfg.seed,
        config_hash: &loaded.hash,
        num_views: k,
        replicate: args.replicate,
        n: truth.n(),
        widths: truth.widths(),
        joint_rank: ranks.joint,
        individual_ranks: &ranks.individual,
        s_k: &truth.s_k,
        gamma: truth.gamma,
        sigma_k: &truth.sigma_k,
        theta_target: truth.theta_target,
        theta_uniform: weighting::theta_of_w(&truth.u_k, &WeightVector::uniform(k))?,
    };
    write_json(&args.out.join("manifest.json"), &manifest)
}

// ---------------------------------------------------------------------------
// estimate and weights

#[derive(Serialize)]
struct WeightsReport<'a> {
    method: &'static str,
    weights: &'a [f64],
    trace: Option<&'a WeightTrace>,
    /// Why the reweighting stopped early, if it did.
    aborted: Option<String>,
}

impl<'a> WeightsReport<'a> {
    fn new(method: Method, weights: &'a WeightVector, trace: Option<&'a WeightTrace>) -> Self {
        WeightsReport {
            method: method.name(),
            weights: weights.as_slice(),
            trace,
            aborted: trace.and_then(|t| t.aborted.as_ref()).map(|e| e.to_string()),
        }
    }
}

#[derive(Serialize)]
struct Diagnostics {
    method: &'static str,
    /// Absent when the ranks leave no residual degrees of freedom.
    plugin: Option<PluginDiagnostics>,
    theta_hat: f64,
    spectral_gap: f64,
    aggregate_eigenvalues: Vec<f64>,
}

struct Estimate {
    u_hat: OrthonormalBasis,
    components: Components,
    weights: WeightVector,
    trace: Option<WeightTrace>,
    gap: f64,
    eigenvalues: Vec<f64>,
}

fn run_estimate(data: &MultiViewData, ranks: &RankSpec, args: &EstimateArgs) -> CliResult<Estimate> {
    let k = data.num_views();
    let fixed = args.weights.as_deref().map(|raw| parse_weights(raw, k)).transpose()?;
    match args.method {
        Method::Heterojive | Method::Ajive => {
            let (weights, trace) = match (args.method, fixed) {
                (Method::Ajive, Some(_)) => {
                    return Err(CliError::Input("--weights: AJIVE always uses equal weights".into()))
                }
                (Method::Ajive, None) => (WeightVector::uniform(k), None),
                (_, Some(w)) => (w, None),
                (_, None) => {
                    let (w, trace, _) = weighting::data_driven_weights(data, ranks, &(&args.reweight).into())?;
                    (w, Some(trace))
                }
            };
            let fit = estimators::heterojive(data, ranks, &weights)?;
            Ok(Estimate {
                u_hat: fit.u_hat,
                components: fit.components,
                weights,
                trace,
                gap: fit.spectral_gap,
                eigenvalues: fit.aggregate_eigenvalues,
            })
        }
        Method::Stacksvd => {
            let weights = fixed.unwrap_or_else(|| WeightVector::uniform(k));
            let agg = estimators::stack_svd(data, ranks.joint, Some(&weights))?;
            let components = estimators::extract_components(data, &agg.basis, ranks)?;
            Ok(Estimate {
                u_hat: agg.basis,
                components,
                weights,
                trace: None,
                gap: agg.gap,
                eigenvalues: agg.eigenvalues,
            })
        }
    }
}

fn truth_basis(dir: &Path) -> CliResult<OrthonormalBasis> {
    let direct = dir.join("U.csv");
    let path = if direct.is_file() { direct } else { dir.join("truth").join("U.csv") };
    let m = read_matrix(&path)?;
    OrthonormalBasis::new(m).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn estimate(args: &EstimateArgs) -> CliResult<()> {
    let data = load_views(&args.input.views)?;
    let ranks = parse_ranks(&args.input.ranks, data.num_views())?;
    let truth = args.truth.as_deref().map(truth_basis).transpose()?;
    let est = run_estimate(&data, &ranks, args)?;

    let plugin = match weighting::plugin_diagnostics(&data, &est.u_hat, &est.components, &ranks) {
        Ok(p) => Some(p),
        Err(heterojive::JiveError::InvalidInput(msg)) => {
            log::warn!("plug-in diagnostics skipped: {msg}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let diagnostics = Diagnostics {
        method: args.method.name(),
        plugin,
        theta_hat: weighting::theta_of_w(&est.components.u_k_hat, &est.weights)?,
        spectral_gap: est.gap,
        aggregate_eigenvalues: est.eigenvalues,
    };

    create_dir(&args.out)?;
    write_matrix(&args.out.join("U_hat.csv"), est.u_hat.matrix())?;
    write_json(&args.out.join("weights.json"), &WeightsReport::new(args.method, &est.weights, est.trace.as_ref()))?;
    write_json(&args.out.join("diagnostics.json"), &diagnostics)?;
    if let Some(u) = truth {
        let err = heterojive::metrics::subspace_error(&est.u_hat, &u)
            .map_err(|e| CliError::Input(format!("--truth: {e}")))?;
        println!("subspace_error: {err:.16e}");
    }
    Ok(())
}

pub fn weights(args: &WeightsArgs) -> CliResult<()> {
    let data = load_views(&args.input.views)?;
    let ranks = parse_ranks(&args.input.ranks, data.num_views())?;
    let (w, trace, _) = weighting::data_driven_weights(&data, &ranks, &(&args.reweight).into())?;
    for (t, step) in trace.steps.iter().enumerate() {
        log::info!("iteration {}: l1 step {step:.3e}", t + 1);
    }
    if let Some(e) = &trace.aborted {
        log::warn!("reweighting stopped early: {e}");
    }
    create_dir(&args.out)?;
    write_json(&args.out.join("weights.json"), &WeightsReport::new(Method::Heterojive, &w, Some(&trace)))?;
    let line: Vec<String> = w.as_slice().iter().map(|x| format!("{x:.16e}")).collect();
    println!("weights: {}", line.join(","));
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    let file = fs::File::create(path).map_err(CliError::io(path))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(source) => CliError::Io { path: path.to_path_buf(), source },
        other => CliError::Input(format!("{}: {other:?}", path.display())),
    }
}

fn write_results(path: &Path, rows: &[ResultRow]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    w.write_record(["method", "k", "replicate", "error", "theta_realized", "spectral_gap", "weights", "reason"])
        .map_err(&err)?;
    for r in rows {
        let weights: Vec<String> = r.weights.iter().map(|&x| sci(x)).collect();
        w.write_record([
            r.method.name().to_string(),
            r.k.to_string(),
            r.replicate.to_string(),
            sci(r.error),
            sci(r.theta_realized),
            sci(r.spectral_gap),
            weights.join(";"),
            r.reason.clone(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(CliError::io(path))
}

fn write_summary(path: &Path, rows: &[SummaryRow]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    w.write_record(["method", "k", "sqrt_k", "mean_error", "std_error", "succeeded", "failed"]).map_err(&err)?;
    for r in rows {
        w.write_record([
            r.method.name().to_string(),
            r.k.to_string(),
            sci(r.sqrt_k),
            sci(r.mean_error),
            sci(r.std_error),
            r.succeeded.to_string(),
            r.failed.to_string(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(CliError::io(path))
}

fn write_timings(path: &Path, rows: &[ResultRow]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let err = csv_err(path);
    w.write_record(["method", "k", "replicate", "wallclock_ms"]).map_err(&err)?;
    for r in rows {
        w.write_record([
            r.method.name().to_string(),
            r.k.to_string(),
            r.replicate.to_string(),
            format!("{:.3}", r.wallclock_ms),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(CliError::io(path))
}

#[derive(Serialize)]
struct SimulateManifest<'a> {
    seed: u64,
    config_hash: &'a str,
    rows: usize,
    failed: usize,
}

/// Output files of `simulate`. Everything except the timings is a pure
/// function of the config.
pub struct SimulateOutputs {
    pub results: PathBuf,
    pub summary: PathBuf,
    pub timings: PathBuf,
    pub manifest: PathBuf,
}

impl SimulateOutputs {
    pub fn in_dir(dir: &Path) -> Self {
        SimulateOutputs {
            results: dir.join("results.csv"),
            summary: dir.join("summary.csv"),
            timings: dir.join("timings.csv"),
            manifest: dir.join("manifest.json"),
        }
    }
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let loaded = load_config(&args.config, seed_override().as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("--jobs: {e}")))?;
    let rows = pool.install(|| sim::run_grid(&loaded.config))?;
    let summary = sim::summarize(&rows);
    let failed = rows.iter().filter(|r| r.error.is_nan()).count();
    if failed > 0 {
        log::warn!("{failed} of {} replicates failed; see the reason column", rows.len());
    }

    create_dir(&args.out)?;
    let out = SimulateOutputs::in_dir(&args.out);
    write_results(&out.results, &rows)?;
    write_summary(&out.summary, &summary)?;
    write_timings(&out.timings, &rows)?;
    write_json(
        &out.manifest,
        &SimulateManifest { seed: loaded.config.seed, config_hash: &loaded.hash, rows: rows.len(), failed },
    )
}
