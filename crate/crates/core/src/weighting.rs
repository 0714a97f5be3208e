//! View weights for the aggregation step.
//!
//! Each view `k` is charged a cost
//!
//! ```text
//! c_k(w) = ε_k⁴ θ(w)⁻² + n⁻¹ ε_k² [tr M_k(w) + r̄_k ‖M_k(w)‖]
//! ```
//!
//! where `ε_k = √n/SNR_k + √(n d_k)/SNR_k²` is the per-view subspace error
//! scale, `θ(w) = 1 − ‖Σ w_k U_k U_kᵀ‖` the misalignment of the individual
//! subspaces, and `M_k(w) = Ū_{k⊥}ᵀ U_⊥ Λ⁻² U_⊥ᵀ Ū_{k⊥}` with
//! `U_⊥ Λ U_⊥ᵀ` the rank `n − r` part of `I − Σ w_k Ū_k Ū_kᵀ`.
//!
//! The reweighting map sets `w_k ∝ 1/c_k(w)`. Its interior fixed points are
//! approximately stationary for `J(w) = Σ w_k² c_k(w)` on the simplex.
//! The data-driven variant feeds the map with plug-in estimates taken from
//! an equal-weight fit.

use serde::Serialize;

use crate::error::{invalid, JiveError, Result};
use crate::estimators::{self, Components, JiveFit, WeightVector};
use crate::linalg::{self, Matrix, OrthonormalBasis};
use crate::model::{JiveGroundTruth, MultiViewData, RankSpec};

/// Below this misalignment the cost is treated as undefined.
pub const THETA_FLOOR: f64 = 1e-6;
/// Cap on plug-in SNR so noiseless views keep a finite, positive ε̂.
pub const SNR_CAP: f64 = 1e8;

/// `ε = √n / snr + √(n d) / snr²`.
pub fn epsilon_k(n: usize, d: usize, snr: f64) -> Result<f64> {
    if snr.is_nan() || snr <= 0.0 {
        return invalid(format!("SNR must be positive, got {snr}"));
    }
    let n = n as f64;
    let d = d as f64;
    Ok(n.sqrt() / snr + (n * d).sqrt() / (snr * snr))
}

/// Plug-in noise, signal and error-scale estimates per view.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PluginDiagnostics {
    pub sigma_hat: Vec<f64>,
    pub lambda_min_hat: Vec<f64>,
    pub snr_hat: Vec<f64>,
    pub eps_hat: Vec<f64>,
    pub kappa_hat: Vec<f64>,
}

/// Plug-in diagnostics from a fitted joint basis and its components.
///
/// `Â_k = Û V̂_kᵀ + Û_k Ŵ_kᵀ`; the noise level is the residual Frobenius norm
/// over the residual degrees of freedom `n d_k − r̄_k (n + d_k − r̄_k)`.
pub fn plugin_diagnostics(
    data: &MultiViewData,
    u_hat: &OrthonormalBasis,
    components: &Components,
    ranks: &RankSpec,
) -> Result<PluginDiagnostics> {
    let n = data.n();
    let k_views = data.num_views();
    let mut out = PluginDiagnostics {
        sigma_hat: Vec::with_capacity(k_views),
        lambda_min_hat: Vec::with_capacity(k_views),
        snr_hat: Vec::with_capacity(k_views),
        eps_hat: Vec::with_capacity(k_views),
        kappa_hat: Vec::with_capacity(k_views),
    };
    for k in 0..k_views {
        let a = data.view(k);
        let d = a.ncols();
        let total = ranks.total(k);
        let dof = (n * d) as f64 - (total * (n + d - total)) as f64;
        if dof <= 0.0 {
            return invalid(format!(
                "view {}: no residual degrees of freedom to estimate the noise (r + r_k = {total})",
                k + 1
            ));
        }
        let a_hat = components.reconstruct(u_hat, k);
        let sigma = (a - &a_hat).norm() / dof.sqrt();
        let s = linalg::singular_values(&a_hat)?;
        let lambda = s[total - 1];
        let snr = if sigma > 0.0 { (lambda / sigma).min(SNR_CAP) } else { SNR_CAP };
        // A view whose reconstruction collapsed has no usable signal.
        let snr = snr.max(f64::MIN_POSITIVE);
        out.sigma_hat.push(sigma);
        out.lambda_min_hat.push(lambda);
        out.snr_hat.push(snr);
        out.eps_hat.push(epsilon_k(n, d, snr)?);
        out.kappa_hat.push(if lambda > 0.0 { s[0] / lambda } else { f64::INFINITY });
    }
    Ok(out)
}

/// `θ(w) = 1 − ‖Σ w_k U_k U_kᵀ‖_op` over individual bases.
pub fn theta_of_w(individual: &[OrthonormalBasis], w: &WeightVector) -> Result<f64> {
    if individual.len() != w.len() {
        return invalid(format!("{} weights for {} views", w.len(), individual.len()));
    }
    if individual.is_empty() {
        return invalid("no views");
    }
    let s = estimators::weighted_projector_sum(individual, w)?;
    let top = linalg::sym_eigenvalues_desc(&s)?[0];
    Ok((1.0 - top).clamp(0.0, 1.0))
}

/// Subspace geometry entering `θ(·)` and `M_k(·)`: the joint basis and the
/// per-view `Ū_k = [U U_k]`, either true or estimated.
#[derive(Debug, Clone)]
pub struct DiagnosticMaps {
    r: usize,
    ubar_k: Vec<OrthonormalBasis>,
    individual: Vec<OrthonormalBasis>,
    ubar_proj: Vec<Matrix>,
    ind_proj: Vec<Matrix>,
}

impl DiagnosticMaps {
    pub fn new(u: &OrthonormalBasis, individual: &[OrthonormalBasis]) -> Result<Self> {
        if individual.is_empty() {
            return invalid("at least one view is required");
        }
        let ubar_k = individual.iter().map(|b| u.concat(b)).collect::<Result<Vec<_>>>()?;
        if ubar_k.iter().any(|b| b.rank() >= u.ambient_dim()) {
            return invalid("r + r_k must be smaller than n for the complement to exist");
        }
        Ok(Self {
            r: u.rank(),
            ubar_proj: ubar_k.iter().map(OrthonormalBasis::projector).collect(),
            ind_proj: individual.iter().map(OrthonormalBasis::projector).collect(),
            ubar_k,
            individual: individual.to_vec(),
        })
    }

    /// Maps built from the true subspaces.
    pub fn from_truth(truth: &JiveGroundTruth) -> Result<Self> {
        Self::new(&truth.u, &truth.u_k)
    }

    pub fn ubar_k(&self) -> &[OrthonormalBasis] {
        &self.ubar_k
    }

    pub fn individual(&self) -> &[OrthonormalBasis] {
        &self.individual
    }

    pub fn joint_rank(&self) -> usize {
        self.r
    }

    pub fn n(&self) -> usize {
        self.ubar_k[0].ambient_dim()
    }

    pub fn num_views(&self) -> usize {
        self.ubar_k.len()
    }

    fn check_weights(&self, w: &WeightVector) -> Result<()> {
        if w.len() != self.num_views() {
            return invalid(format!("{} weights for {} views", w.len(), self.num_views()));
        }
        Ok(())
    }

    pub fn theta(&self, w: &WeightVector) -> Result<f64> {
        self.check_weights(w)?;
        let n = self.n();
        let mut s = Matrix::zeros(n, n);
        for (p, &wk) in self.ind_proj.iter().zip(w.as_slice()) {
            if wk != 0.0 {
                s += p * wk;
            }
        }
        let top = linalg::sym_eigenvalues_desc(&s)?[0];
        Ok((1.0 - top).clamp(0.0, 1.0))
    }

    /// Eigendecomposition of `I − Σ w_k Ū_k Ū_kᵀ`, shared by every view's
    /// `M_k(w)`.
    pub fn geometry(&self, w: &WeightVector) -> Result<WeightGeometry> {
        let theta = self.theta(w)?;
        let n = self.n();
        let mut h = Matrix::identity(n, n);
        for (p, &wk) in self.ubar_proj.iter().zip(w.as_slice()) {
            if wk != 0.0 {
                h -= p * wk;
            }
        }
        let keep = n - self.r;
        let (vals, vecs) = linalg::sym_eigen_desc(&h)?;
        let mut clamped = false;
        let lambda: Vec<f64> = vals[..keep]
            .iter()
            .map(|&v| {
                if v < THETA_FLOOR {
                    clamped = true;
                    THETA_FLOOR
                } else {
                    v
                }
            })
            .collect();
        if clamped {
            log::warn!("eigenvalues of I - Σ w_k Ū_k Ū_kᵀ fell below {THETA_FLOOR:e} and were clamped");
        }
        // G = U_⊥ Λ⁻¹
        let mut scaled = vecs.columns(0, keep).into_owned();
        for (j, l) in lambda.iter().enumerate() {
            scaled.column_mut(j).scale_mut(1.0 / l);
        }
        Ok(WeightGeometry { theta, u_perp: vecs.columns(0, keep).into_owned(), lambda, scaled_perp: scaled, clamped })
    }

    /// `tr M_k(w)` and `‖M_k(w)‖_op`.
    ///
    /// Uses the `(n − r) × (n − r)` matrix `Λ⁻² − Λ⁻¹ U_⊥ᵀ Ū_k Ū_kᵀ U_⊥ Λ⁻¹`,
    /// which shares its nonzero spectrum with `M_k`.
    pub fn mk_stats(&self, geom: &WeightGeometry, k: usize) -> Result<MkStats> {
        let y = self.ubar_k[k].matrix().transpose() * &geom.scaled_perp;
        let mut x = -(y.transpose() * &y);
        for (j, l) in geom.lambda.iter().enumerate() {
            x[(j, j)] += 1.0 / (l * l);
        }
        let vals = linalg::sym_eigenvalues_desc(&x)?;
        Ok(MkStats {
            trace: vals.iter().sum::<f64>().max(0.0),
            opnorm: vals[0].max(0.0),
            theta: geom.theta,
            clamped: geom.clamped,
        })
    }

    /// `M_k(w)` assembled literally from a complement basis of `Ū_k`.
    pub fn mk_matrix(&self, w: &WeightVector, k: usize) -> Result<Matrix> {
        let geom = self.geometry(w)?;
        let comp = linalg::complement_basis(&self.ubar_k[k])?;
        let t = geom.scaled_perp.transpose() * comp.matrix();
        Ok(t.transpose() * t)
    }
}

/// Shared eigendecomposition of `I − Σ w_k Ū_k Ū_kᵀ` at one weight vector.
#[derive(Debug, Clone)]
pub struct WeightGeometry {
    pub theta: f64,
    /// Top `n − r` eigenvectors.
    pub u_perp: Matrix,
    /// Matching eigenvalues after clamping at [`THETA_FLOOR`].
    pub lambda: Vec<f64>,
    scaled_perp: Matrix,
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MkStats {
    pub trace: f64,
    pub opnorm: f64,
    pub theta: f64,
    pub clamped: bool,
}

/// `w_k ∝ 1/c_k`.
///
/// Zero costs take all the mass, split evenly, which is the limit of the
/// inverse-cost rule.
pub fn reweight_step(costs: &[f64]) -> Result<WeightVector> {
    if costs.is_empty() {
        return invalid("no costs");
    }
    if costs.iter().any(|c| c.is_nan() || *c < 0.0) {
        return invalid("costs must be nonnegative numbers");
    }
    let zeros = costs.iter().filter(|&&c| c == 0.0).count();
    if zeros > 0 {
        let share = 1.0 / zeros as f64;
        return WeightVector::new(costs.iter().map(|&c| if c == 0.0 { share } else { 0.0 }).collect());
    }
    let inv: Vec<f64> = costs.iter().map(|c| 1.0 / c).collect();
    WeightVector::normalized(inv)
}

/// Tuning for the reweighting iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct ReweightConfig {
    pub t_max: usize,
    pub tol: f64,
    /// Re-fit the estimator at every iterate and rebuild the plug-in maps
    /// from the new components, instead of freezing them at the initial
    /// equal-weight fit.
    pub refresh_each_iter: bool,
}

impl Default for ReweightConfig {
    fn default() -> Self {
        Self { t_max: 20, tol: 1e-8, refresh_each_iter: false }
    }
}

/// History of the reweighting iteration.
#[derive(Debug, Clone, Serialize)]
pub struct WeightTrace {
    /// `w⁰, w¹, …`; the last entry is the output.
    pub iterates: Vec<WeightVector>,
    /// `c(wᵗ)` for every iterate that fed an update.
    pub costs: Vec<Vec<f64>>,
    /// `‖wᵗ⁺¹ − wᵗ‖₁` per update.
    pub steps: Vec<f64>,
    pub converged: bool,
    pub iterations_used: usize,
    /// Set when an iterate left the region where costs are defined; the
    /// trace stops at the last valid iterate.
    #[serde(skip)]
    pub aborted: Option<JiveError>,
}

impl WeightTrace {
    pub fn last(&self) -> &WeightVector {
        self.iterates.last().expect("trace holds at least the initial iterate")
    }
}

/// Costs, objective and reweighting iteration for fixed `ε` and maps.
#[derive(Debug, Clone)]
pub struct WeightingProblem {
    pub eps: Vec<f64>,
    pub maps: DiagnosticMaps,
}

impl WeightingProblem {
    pub fn new(eps: Vec<f64>, maps: DiagnosticMaps) -> Result<Self> {
        if eps.len() != maps.num_views() {
            return invalid(format!("{} error scales for {} views", eps.len(), maps.num_views()));
        }
        if eps.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return invalid("error scales must be finite and nonnegative");
        }
        Ok(Self { eps, maps })
    }

    /// True `ε_k` and maps of a synthetic instance.
    pub fn oracle(truth: &JiveGroundTruth) -> Result<Self> {
        let n = truth.n();
        let widths = truth.widths();
        let eps = (0..truth.num_views()).map(|k| epsilon_k(n, widths[k], truth.snr(k))).collect::<Result<Vec<_>>>()?;
        Self::new(eps, DiagnosticMaps::from_truth(truth)?)
    }

    pub fn num_views(&self) -> usize {
        self.eps.len()
    }

    fn costs_at(&self, geom: &WeightGeometry) -> Result<Vec<f64>> {
        let n = self.maps.n() as f64;
        let theta = geom.theta;
        if theta <= THETA_FLOOR {
            return Err(JiveError::ThetaTooSmall { theta, floor: THETA_FLOOR });
        }
        (0..self.num_views())
            .map(|k| {
                let e = self.eps[k];
                if e == 0.0 {
                    return Ok(0.0);
                }
                let m = self.maps.mk_stats(geom, k)?;
                let rbar = self.maps.ubar_k[k].rank() as f64;
                Ok(e.powi(4) / (theta * theta) + e * e / n * (m.trace + rbar * m.opnorm))
            })
            .collect()
    }

    /// `c_k(w)` for every view.
    pub fn cost_vector(&self, w: &WeightVector) -> Result<Vec<f64>> {
        let geom = self.maps.geometry(w)?;
        self.costs_at(&geom)
    }

    /// `J(w) = Σ w_k² c_k(w)`.
    pub fn objective(&self, w: &WeightVector) -> Result<f64> {
        let c = self.cost_vector(w)?;
        Ok(w.as_slice().iter().zip(&c).map(|(wk, ck)| wk * wk * ck).sum())
    }

    /// `J` at an arbitrary point of `R^K` near the simplex (used for
    /// finite differences; no simplex check on `w`).
    fn objective_raw(&self, w: &[f64]) -> Result<f64> {
        // The maps only see w through linear combinations, so an
        // unnormalized vector is fine here.
        let wv = WeightVector(w.to_vec());
        let geom = self.maps.geometry(&wv)?;
        let c = self.costs_at(&geom)?;
        Ok(w.iter().zip(&c).map(|(wk, ck)| wk * wk * ck).sum())
    }

    /// Iterates `wᵗ⁺¹ = T(wᵗ)` with costs recomputed at every iterate.
    pub fn oracle_iterate(&self, w0: &WeightVector, t_max: usize, tol: f64) -> Result<WeightTrace> {
        let mut trace = WeightTrace {
            iterates: vec![w0.clone()],
            costs: Vec::new(),
            steps: Vec::new(),
            converged: false,
            iterations_used: 0,
            aborted: None,
        };
        if w0.len() != self.num_views() {
            return invalid(format!("{} weights for {} views", w0.len(), self.num_views()));
        }
        let mut costs = match self.cost_vector(w0) {
            Ok(c) => c,
            Err(e @ JiveError::ThetaTooSmall { .. }) => {
                log::warn!("costs undefined at the initial weights: {e}");
                trace.aborted = Some(e);
                return Ok(trace);
            }
            Err(e) => return Err(e),
        };
        for _ in 0..t_max {
            let next = reweight_step(&costs)?;
            let step = next.l1_distance(trace.last());
            trace.costs.push(costs);
            trace.steps.push(step);
            trace.iterates.push(next);
            trace.iterations_used += 1;
            if step < tol {
                trace.converged = true;
                break;
            }
            match self.cost_vector(trace.last()) {
                Ok(c) => costs = c,
                Err(e) => {
                    log::warn!("reweighting stopped after {} steps: {e}", trace.iterations_used);
                    trace.aborted = Some(e);
                    break;
                }
            }
        }
        Ok(trace)
    }

    /// Projected finite-difference gradient of `J` and the stationarity
    /// bound `L(θ₀) = 4 θ₀⁻³ max_k {ε_k⁴ + 3 n⁻¹ ε_k² r̄_k}` with `θ₀ = θ(w)/2`.
    ///
    /// Directional derivatives are taken along the tangent directions
    /// `e_k − e_K`, which determine the projection of `∇J` onto
    /// `{v : Σ v_k = 0}` exactly.
    pub fn stationarity_check(&self, w: &WeightVector, h: Option<f64>) -> Result<Stationarity> {
        let k_views = self.num_views();
        let wmax = w.as_slice().iter().cloned().fold(0.0_f64, f64::max);
        let h = h.unwrap_or(1e-5 * (1.0 + wmax));
        let wmin = w.as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
        if wmin <= h {
            return Err(JiveError::BoundaryPoint { min_weight: wmin, step: h });
        }
        let theta = self.maps.theta(w)?;
        if theta <= 2.0 * THETA_FLOOR {
            return Err(JiveError::ThetaTooSmall { theta, floor: 2.0 * THETA_FLOOR });
        }
        let last = k_views - 1;
        let mut dir = vec![0.0; k_views];
        for (k, slot) in dir.iter_mut().enumerate().take(last) {
            let mut plus = w.as_slice().to_vec();
            let mut minus = plus.clone();
            plus[k] += h;
            plus[last] -= h;
            minus[k] -= h;
            minus[last] += h;
            *slot = (self.objective_raw(&plus)? - self.objective_raw(&minus)?) / (2.0 * h);
        }
        // dir_k = g_k − g_K, so g_k − mean(g) = dir_k − mean(dir).
        let mean = dir.iter().sum::<f64>() / k_views as f64;
        let proj_grad_inf = dir.iter().map(|d| (d - mean).abs()).fold(0.0_f64, f64::max);

        let n = self.maps.n() as f64;
        let theta0 = theta / 2.0;
        let worst = (0..k_views)
            .map(|k| {
                let e = self.eps[k];
                let rbar = self.maps.ubar_k[k].rank() as f64;
                e.powi(4) + 3.0 / n * e * e * rbar
            })
            .fold(0.0_f64, f64::max);
        Ok(Stationarity { proj_grad_inf, bound: 4.0 * worst / theta0.powi(3), theta0, step: h })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stationarity {
    /// `‖Proj_T ∇J(w)‖_∞`.
    pub proj_grad_inf: f64,
    /// `L(θ₀)`.
    pub bound: f64,
    pub theta0: f64,
    pub step: f64,
}

/// Equal-weight fit with its plug-in diagnostics and maps.
#[derive(Debug, Clone)]
pub struct PluginFit {
    pub diagnostics: PluginDiagnostics,
    pub maps: DiagnosticMaps,
    pub initial: JiveFit,
}

impl PluginFit {
    pub fn problem(&self) -> Result<WeightingProblem> {
        WeightingProblem::new(self.diagnostics.eps_hat.clone(), self.maps.clone())
    }
}

fn plugin_from_fit(fit: JiveFit) -> Result<PluginFit> {
    let diagnostics = match &fit.diagnostics {
        Some(d) => d.clone(),
        None => return invalid("noise level cannot be estimated: r + r_k leaves no residual degrees of freedom"),
    };
    let maps = DiagnosticMaps::new(&fit.u_hat, fit.u_k_hat())?;
    Ok(PluginFit { diagnostics, maps, initial: fit })
}

/// Runs the equal-weight estimator and builds plug-in `ε̂_k`, `θ̂(·)`, `M̂_k(·)`.
pub fn plugin_fit(data: &MultiViewData, ranks: &RankSpec) -> Result<PluginFit> {
    plugin_from_fit(estimators::ajive(data, ranks)?)
}

/// Data-driven weights: plug-in maps from an equal-weight fit, then the
/// reweighting iteration from uniform weights.
///
/// When the initial equal-weight aggregation itself is degenerate (for
/// example, identical views) no costs can be formed: the weights stay
/// uniform, the trace records the reason and no fit is returned.
pub fn data_driven_weights(
    data: &MultiViewData,
    ranks: &RankSpec,
    config: &ReweightConfig,
) -> Result<(WeightVector, WeightTrace, Option<PluginFit>)> {
    let w0 = WeightVector::uniform(data.num_views());
    let mut trace = WeightTrace {
        iterates: vec![w0.clone()],
        costs: Vec::new(),
        steps: Vec::new(),
        converged: false,
        iterations_used: 0,
        aborted: None,
    };
    let plugin = match plugin_fit(data, ranks) {
        Ok(p) => p,
        Err(e @ JiveError::DegenerateAggregation { .. }) => {
            log::warn!("equal-weight fit failed, keeping uniform weights: {e}");
            trace.aborted = Some(e);
            return Ok((w0, trace, None));
        }
        Err(e) => return Err(e),
    };
    if !config.refresh_each_iter {
        let trace = plugin.problem()?.oracle_iterate(&w0, config.t_max, config.tol)?;
        return Ok((trace.last().clone(), trace, Some(plugin)));
    }

    let mut current = plugin.clone();
    for _ in 0..config.t_max {
        let costs = match current.problem()?.cost_vector(trace.last()) {
            Ok(c) => c,
            Err(e) if trace.iterations_used > 0 || matches!(e, JiveError::ThetaTooSmall { .. }) => {
                trace.aborted = Some(e);
                break;
            }
            Err(e) => return Err(e),
        };
        let next = reweight_step(&costs)?;
        let step = next.l1_distance(trace.last());
        trace.costs.push(costs);
        trace.steps.push(step);
        trace.iterates.push(next);
        trace.iterations_used += 1;
        if step < config.tol {
            trace.converged = true;
            break;
        }
        match estimators::heterojive(data, ranks, trace.last()).and_then(plugin_from_fit) {
            Ok(p) => current = p,
            Err(e) => {
                trace.aborted = Some(e);
                break;
            }
        }
    }
    Ok((trace.last().clone(), trace, Some(plugin)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::haar_orthonormal;
    use crate::model::{synthesize_views, LoadingScheme, SubspaceConstruction, TruthSpec};
    use crate::seed::rng_from_seed;
    use approx::assert_abs_diff_eq;

    fn unit(n: usize, i: usize) -> OrthonormalBasis {
        let mut m = Matrix::zeros(n, 1);
        m[(i, 0)] = 1.0;
        OrthonormalBasis::new(m).unwrap()
    }

    /// u_1 = … = u_{K−1} = v, u_K ⟂ v, joint direction e_0.
    fn example_two(k: usize, n: usize) -> (OrthonormalBasis, Vec<OrthonormalBasis>) {
        let mut ind = vec![unit(n, 1); k - 1];
        ind.push(unit(n, 2));
        (unit(n, 0), ind)
    }

    #[test]
    fn epsilon_formula() {
        assert_abs_diff_eq!(epsilon_k(100, 100, 10.0).unwrap(), 2.0, epsilon = 1e-14);
        assert!(epsilon_k(100, 100, 1e6).unwrap() < 2e-2);
        assert!(epsilon_k(100, 100, 1e6).unwrap() < epsilon_k(100, 100, 1e5).unwrap());
        let expected = 40f64.sqrt() / 20.0 + 2000f64.sqrt() / 400.0;
        assert_abs_diff_eq!(epsilon_k(40, 50, 20.0).unwrap(), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(expected, 0.4280, epsilon = 1e-4);
        assert!(epsilon_k(10, 10, 0.0).is_err());
        assert!(epsilon_k(10, 10, -1.0).is_err());
    }

    #[test]
    fn theta_example_two() {
        let (_, ind) = example_two(10, 12);
        let th = theta_of_w(&ind, &WeightVector::uniform(10)).unwrap();
        assert_abs_diff_eq!(th, 0.1, epsilon = 1e-10);
        let mut w = vec![0.0; 10];
        w[0] = 0.5;
        w[9] = 0.5;
        let th = theta_of_w(&ind, &WeightVector::new(w).unwrap()).unwrap();
        assert_abs_diff_eq!(th, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn theta_orthogonal_views() {
        let ind: Vec<_> = (0..4).map(|i| unit(6, i)).collect();
        let th = theta_of_w(&ind, &WeightVector::uniform(4)).unwrap();
        assert_abs_diff_eq!(th, 0.75, epsilon = 1e-12);
        assert!(theta_of_w(&ind, &WeightVector::uniform(3)).is_err());
    }

    #[test]
    fn mk_single_view_is_identity() {
        let mut rng = rng_from_seed(1);
        let u = haar_orthonormal(&mut rng, 9, 2).unwrap();
        let uk = crate::linalg::sample_in_complement(&mut rng, 9, std::slice::from_ref(&u), 2).unwrap();
        let maps = DiagnosticMaps::new(&u, &[uk]).unwrap();
        let lit = maps.mk_matrix(&WeightVector::uniform(1), 0).unwrap();
        assert!((lit - Matrix::identity(5, 5)).amax() < 1e-10);
    }

    #[test]
    fn mk_identical_views_match_single_view() {
        let mut rng = rng_from_seed(2);
        let u = haar_orthonormal(&mut rng, 9, 2).unwrap();
        let uk = crate::linalg::sample_in_complement(&mut rng, 9, std::slice::from_ref(&u), 2).unwrap();
        let three = DiagnosticMaps::new(&u, &[uk.clone(), uk.clone(), uk]).unwrap();
        let w = WeightVector::new(vec![0.2, 0.5, 0.3]).unwrap();
        let lit = three.mk_matrix(&w, 1).unwrap();
        assert!((lit - Matrix::identity(5, 5)).amax() < 1e-10);
    }

    fn random_maps(seed: u64, n: usize, k: usize) -> DiagnosticMaps {
        let ranks = RankSpec::uniform(2, 2, k).unwrap();
        let (u, ind) = crate::model::generate_subspaces(&mut rng_from_seed(seed), n, &ranks, 0.6).unwrap();
        DiagnosticMaps::new(&u, &ind).unwrap()
    }

    #[test]
    fn mk_stats_match_literal_definition() {
        let maps = random_maps(3, 20, 4);
        let w = WeightVector::new(vec![0.1, 0.4, 0.3, 0.2]).unwrap();
        let geom = maps.geometry(&w).unwrap();
        for k in 0..4 {
            let fast = maps.mk_stats(&geom, k).unwrap();
            let lit = maps.mk_matrix(&w, k).unwrap();
            let vals = crate::linalg::sym_eigenvalues_desc(&lit).unwrap();
            assert_abs_diff_eq!(fast.trace, lit.trace(), epsilon = 1e-8);
            assert_abs_diff_eq!(fast.opnorm, vals[0], epsilon = 1e-8);
            // trace-cyclicity oracle: tr(Λ⁻² U_⊥ᵀ (I − Ū_kŪ_kᵀ) U_⊥)
            let p = Matrix::identity(20, 20) - maps.ubar_k()[k].projector();
            let inner = geom.u_perp.transpose() * p * &geom.u_perp;
            let tr: f64 = (0..geom.lambda.len()).map(|j| inner[(j, j)] / geom.lambda[j].powi(2)).sum();
            assert_abs_diff_eq!(fast.trace, tr, epsilon = 1e-8);
        }
    }

    #[test]
    fn costs_hand_assembled() {
        let maps = random_maps(4, 20, 2);
        let eps = vec![0.3, 0.7];
        let prob = WeightingProblem::new(eps.clone(), maps.clone()).unwrap();
        let w = WeightVector::new(vec![0.35, 0.65]).unwrap();
        let c = prob.cost_vector(&w).unwrap();
        let theta = theta_of_w(maps.individual(), &w).unwrap();
        for k in 0..2 {
            let lit = maps.mk_matrix(&w, k).unwrap();
            let op = crate::linalg::sym_eigenvalues_desc(&lit).unwrap()[0];
            let expected = eps[k].powi(4) / theta.powi(2) + eps[k].powi(2) / 20.0 * (lit.trace() + 4.0 * op);
            assert_abs_diff_eq!(c[k], expected, epsilon = 1e-10 * expected.max(1.0));
        }
        let j = prob.objective(&w).unwrap();
        let direct: f64 = (0..2).map(|k| w[k] * w[k] * c[k]).sum();
        assert_abs_diff_eq!(j, direct, epsilon = 1e-12);
    }

    #[test]
    fn zero_error_costs_nothing() {
        let prob = WeightingProblem::new(vec![0.0, 0.0, 0.0], random_maps(5, 20, 3)).unwrap();
        let w = WeightVector::uniform(3);
        assert_eq!(prob.cost_vector(&w).unwrap(), vec![0.0; 3]);
        assert_eq!(prob.objective(&w).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_instance_has_equal_costs_and_fixed_uniform() {
        let (u, ind) = example_two(3, 8);
        let same = vec![ind[0].clone(); 3];
        let prob = WeightingProblem::new(vec![0.4; 3], DiagnosticMaps::new(&u, &same).unwrap()).unwrap();
        // identical Ū_k make θ vanish; use mutually orthogonal individual
        // directions instead, which is symmetric under permutation.
        assert!(prob.cost_vector(&WeightVector::uniform(3)).is_err());
        let stuck = prob.oracle_iterate(&WeightVector::uniform(3), 20, 1e-8).unwrap();
        assert_eq!((stuck.iterates.len(), stuck.converged), (1, false));
        let sym: Vec<_> = (1..4).map(|i| unit(8, i)).collect();
        let prob = WeightingProblem::new(vec![0.4; 3], DiagnosticMaps::new(&u, &sym).unwrap()).unwrap();
        let c = prob.cost_vector(&WeightVector::uniform(3)).unwrap();
        assert!(c.iter().all(|x| (x - c[0]).abs() < 1e-10));
        let trace = prob.oracle_iterate(&WeightVector::uniform(3), 20, 1e-8).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.iterations_used, 1);
        let st = prob.stationarity_check(&WeightVector::uniform(3), None).unwrap();
        assert!(st.proj_grad_inf < 1e-6);
    }

    #[test]
    fn reweight_cases() {
        let w = reweight_step(&[2.0, 2.0, 2.0]).unwrap();
        assert!(w.as_slice().iter().all(|x| (x - 1.0 / 3.0).abs() < 1e-15));
        let w = reweight_step(&[1.0, 3.0]).unwrap();
        assert_abs_diff_eq!(w[0], 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(w[1], 0.25, epsilon = 1e-15);
        let w = reweight_step(&[2.0, 4.0, 8.0]).unwrap();
        for (got, want) in w.as_slice().iter().zip([4.0 / 7.0, 2.0 / 7.0, 1.0 / 7.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        let w = reweight_step(&[0.0, 5.0, 0.0]).unwrap();
        assert_eq!(w.as_slice(), &[0.5, 0.0, 0.5]);
        assert!(reweight_step(&[1.0, -1.0]).is_err());
    }

    fn example_two_problem() -> WeightingProblem {
        // Ten views, nine sharing one individual direction; one of the aligned
        // views is noisier than the rest.
        let (u, ind) = example_two(10, 12);
        let mut eps = vec![0.3; 10];
        eps[3] = 0.6;
        WeightingProblem::new(eps, DiagnosticMaps::new(&u, &ind).unwrap()).unwrap()
    }

    #[test]
    fn example_two_objective_prefers_orthogonal_view() {
        let prob = example_two_problem();
        // Grid over the symmetric family: a on each of the eight equal aligned
        // views, b on the noisy aligned view, the rest on view K.
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let steps = 200;
        for i in 0..=steps {
            for j in 0..=(steps - i) {
                let a = i as f64 / steps as f64 / 8.0;
                let b = j as f64 / steps as f64;
                let c = (1.0 - 8.0 * a - b).max(0.0);
                let mut wv = vec![a; 10];
                wv[3] = b;
                wv[9] = c;
                let Ok(wv) = WeightVector::normalized(wv) else { continue };
                if let Ok(jv) = prob.objective(&wv) {
                    if jv < best.0 {
                        best = (jv, a, c);
                    }
                }
            }
        }
        assert!(best.2 > best.1, "grid optimum {best:?}");
        assert!(best.0 < prob.objective(&WeightVector::uniform(10)).unwrap());
    }

    #[test]
    fn example_two_iteration_reaches_fixed_point() {
        let prob = example_two_problem();
        let trace = prob.oracle_iterate(&WeightVector::uniform(10), 500, 1e-12).unwrap();
        assert!(trace.converged);
        let w = trace.last();
        let c = prob.cost_vector(w).unwrap();
        let prod: Vec<f64> = (0..10).map(|k| w[k] * c[k]).collect();
        let mean = prod.iter().sum::<f64>() / 10.0;
        let cmax = c.iter().cloned().fold(0.0, f64::max);
        assert!(prod.iter().all(|p| (p - mean).abs() / cmax < 1e-10));
        // the noisy aligned view ends with the smallest weight
        assert!((0..10).filter(|&k| k != 3).all(|k| w[3] < w[k]));
    }

    #[test]
    fn stationarity_rejects_boundary() {
        let (u, ind) = example_two(3, 8);
        let prob = WeightingProblem::new(vec![0.2; 3], DiagnosticMaps::new(&u, &ind).unwrap()).unwrap();
        let w = WeightVector::new(vec![0.0, 0.5, 0.5]).unwrap();
        assert!(matches!(prob.stationarity_check(&w, None), Err(JiveError::BoundaryPoint { .. })));
        let w = WeightVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let st = prob.stationarity_check(&w, None).unwrap();
        assert!(st.proj_grad_inf.is_finite() && st.bound > 0.0);
    }

    #[test]
    fn theta_floor_is_enforced() {
        let (u, ind) = example_two(3, 8);
        let prob = WeightingProblem::new(vec![0.2; 3], DiagnosticMaps::new(&u, &ind).unwrap()).unwrap();
        let w = WeightVector::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert!(matches!(prob.cost_vector(&w), Err(JiveError::ThetaTooSmall { .. })));
    }

    fn noisy(seed: u64, sigma: f64, k: usize) -> MultiViewData {
        let spec = TruthSpec {
            n: 30,
            widths: vec![30; k],
            ranks: RankSpec::uniform(1, 2, k).unwrap(),
            scheme: LoadingScheme::Random,
            construction: SubspaceConstruction::Aligned { theta: 0.6 },
            s_k: vec![10.0; k],
            gamma: 1.0,
            sigma_k: vec![sigma; k],
        };
        let mut rng = rng_from_seed(seed);
        let truth = spec.build(&mut rng).unwrap();
        synthesize_views(&mut rng, &truth).unwrap()
    }

    #[test]
    fn plugin_on_noiseless_data() {
        let data = noisy(6, 0.0, 3);
        let p = plugin_fit(&data, &RankSpec::uniform(1, 2, 3).unwrap()).unwrap();
        for k in 0..3 {
            assert!(p.diagnostics.sigma_hat[k] < 1e-8, "{:?}", p.diagnostics);
            assert!(p.diagnostics.eps_hat[k] < 1e-6);
        }
    }

    #[test]
    fn plugin_eps_is_recomputable() {
        let data = noisy(7, 0.5, 3);
        let p = plugin_fit(&data, &RankSpec::uniform(1, 2, 3).unwrap()).unwrap();
        let d = &p.diagnostics;
        for k in 0..3 {
            let snr = d.snr_hat[k];
            let expect = 30f64.sqrt() / snr + 900f64.sqrt() / (snr * snr);
            assert_eq!(d.eps_hat[k], epsilon_k(30, 30, snr).unwrap());
            assert_abs_diff_eq!(d.eps_hat[k], expect, epsilon = 1e-14);
            assert_abs_diff_eq!(d.snr_hat[k], d.lambda_min_hat[k] / d.sigma_hat[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn plugin_rejects_rank_without_residual_dof() {
        let spec = TruthSpec {
            n: 30,
            widths: vec![10; 2],
            ranks: RankSpec::uniform(1, 2, 2).unwrap(),
            scheme: LoadingScheme::Random,
            construction: SubspaceConstruction::Aligned { theta: 0.6 },
            s_k: vec![10.0; 2],
            gamma: 1.0,
            sigma_k: vec![0.5; 2],
        };
        let mut rng = rng_from_seed(8);
        let truth = spec.build(&mut rng).unwrap();
        let data = synthesize_views(&mut rng, &truth).unwrap();
        // d = 10 and r̄ = 10 leave n d − r̄ (n + d − r̄) = 0
        let r = plugin_fit(&data, &RankSpec::uniform(1, 9, 2).unwrap());
        assert!(matches!(r, Err(JiveError::InvalidInput(_))), "{r:?}");
    }

    #[test]
    fn identical_views_get_uniform_weights() {
        let data = noisy(9, 0.3, 1);
        let copies = MultiViewData::new(vec![data.view(0).clone(); 4]).unwrap();
        let ranks = RankSpec::uniform(1, 2, 4).unwrap();
        // identical views tie every aggregate eigenvalue, so no costs exist
        // and the weights stay at the uniform starting point
        let (w, trace, fit) = data_driven_weights(&copies, &ranks, &ReweightConfig::default()).unwrap();
        assert_eq!(w, WeightVector::uniform(4));
        assert_eq!(trace.iterations_used, 0);
        assert!(fit.is_none());
        assert!(matches!(trace.aborted, Some(JiveError::DegenerateAggregation { .. })));
    }

    #[test]
    fn refresh_mode_runs() {
        let data = noisy(10, 0.4, 4);
        let ranks = RankSpec::uniform(1, 2, 4).unwrap();
        let cfg = ReweightConfig { refresh_each_iter: true, ..ReweightConfig::default() };
        let (w, trace, _) = data_driven_weights(&data, &ranks, &cfg).unwrap();
        assert_eq!(w.len(), 4);
        assert!(trace.iterations_used >= 1);
    }
}
