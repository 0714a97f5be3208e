//! Two-stage spectral estimators of the joint subspace.
//!
//! Stage one keeps the top `r + r_k` left singular vectors `Ũ_k` of each
//! view. Stage two takes the top `r` eigenvectors of `Σ w_k Ũ_k Ũ_kᵀ`.
//! Equal weights give AJIVE. Stack-SVD instead eigendecomposes the pooled
//! covariance `Σ w_k A_k A_kᵀ`, which mixes strong individual directions
//! into the joint estimate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, JiveError, Result};
use crate::linalg::{self, Matrix, OrthonormalBasis, GAP_TOL};
use crate::model::{MultiViewData, RankSpec};
use crate::weighting::{self, PluginDiagnostics};

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(pub(crate) Vec<f64>);

/// Allowed drift of `Σ w_k` from one.
pub const SIMPLEX_TOL: f64 = 1e-12;

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return invalid("weight vector is empty");
        }
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return invalid("weights must be finite and nonnegative");
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return invalid(format!("weights sum to {sum}, expected 1"));
        }
        Ok(Self(w))
    }

    /// Rescales a nonnegative vector onto the simplex.
    pub fn normalized(w: Vec<f64>) -> Result<Self> {
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return invalid("weights must be finite and nonnegative");
        }
        let sum: f64 = w.iter().sum();
        if sum <= 0.0 {
            return invalid("weights sum to zero");
        }
        Self::new(w.into_iter().map(|x| x / sum).collect())
    }

    pub fn uniform(k: usize) -> Self {
        Self(vec![1.0 / k as f64; k])
    }

    /// All mass on view `j`.
    pub fn indicator(k: usize, j: usize) -> Self {
        let mut w = vec![0.0; k];
        w[j] = 1.0;
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1_distance(&self, other: &WeightVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = JiveError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        WeightVector::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(w: WeightVector) -> Self {
        w.0
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}

/// Per-view signal subspaces from stage one.
#[derive(Debug, Clone)]
pub struct StageOneResult {
    /// `Ũ_k`, of rank `r + r_k`.
    pub bases: Vec<OrthonormalBasis>,
    /// Full singular value sequence of each view.
    pub singvals: Vec<Vec<f64>>,
    /// View `k` had tied singular values at the truncation point.
    pub degenerate: Vec<bool>,
}

pub fn stage1_extract(data: &MultiViewData, ranks: &RankSpec) -> Result<StageOneResult> {
    ranks.check_dims(data.n(), &data.widths())?;
    let per_view: Vec<Result<(OrthonormalBasis, Vec<f64>)>> =
        data.views().par_iter().enumerate().map(|(k, a)| linalg::top_left_singular(a, ranks.total(k))).collect();
    let mut bases = Vec::with_capacity(per_view.len());
    let mut singvals = Vec::with_capacity(per_view.len());
    let mut degenerate = Vec::with_capacity(per_view.len());
    for (k, res) in per_view.into_iter().enumerate() {
        let (b, s) = res?;
        let q = ranks.total(k);
        let tied = q < s.len() && s[q - 1] - s[q] <= GAP_TOL * s[0].max(1.0);
        if tied {
            log::warn!("view {}: singular values tie at the truncation rank {q}", k + 1);
        }
        bases.push(b);
        singvals.push(s);
        degenerate.push(tied);
    }
    Ok(StageOneResult { bases, singvals, degenerate })
}

/// Top-`r` eigenspace of an aggregated symmetric matrix.
#[derive(Debug, Clone)]
pub struct Aggregate {
    pub basis: OrthonormalBasis,
    /// Leading `r` eigenvalues.
    pub eigenvalues: Vec<f64>,
    /// `λ_r − λ_{r+1}`.
    pub gap: f64,
}

fn top_r_or_degenerate(s: &Matrix, r: usize) -> Result<Aggregate> {
    let slice = linalg::top_r_eigvecs_sym(s, r)?;
    if slice.degenerate_gap {
        return Err(JiveError::DegenerateAggregation { gap: slice.gap, rank: r });
    }
    Ok(Aggregate { basis: slice.vectors, eigenvalues: slice.values, gap: slice.gap })
}

/// `Σ w_k B_k B_kᵀ`.
pub fn weighted_projector_sum(bases: &[OrthonormalBasis], weights: &WeightVector) -> Result<Matrix> {
    if bases.len() != weights.len() {
        return invalid(format!("{} weights for {} views", weights.len(), bases.len()));
    }
    let n = bases[0].ambient_dim();
    let mut s = Matrix::zeros(n, n);
    for (b, &w) in bases.iter().zip(weights.as_slice()) {
        if w == 0.0 || b.rank() == 0 {
            continue;
        }
        s.gemm(w, b.matrix(), &b.matrix().transpose(), 1.0);
    }
    Ok(s)
}

/// Top-`r` eigenvectors of `Σ w_k Ũ_k Ũ_kᵀ`.
pub fn aggregate_weighted(stage1: &StageOneResult, weights: &WeightVector, r: usize) -> Result<Aggregate> {
    let s = weighted_projector_sum(&stage1.bases, weights)?;
    top_r_or_degenerate(&s, r)
}

/// Individual components recovered around a joint estimate.
#[derive(Debug, Clone)]
pub struct Components {
    pub u_k_hat: Vec<OrthonormalBasis>,
    /// `A_kᵀ Û`, `d_k × r`.
    pub v_k_hat: Vec<Matrix>,
    /// `A_kᵀ Û_k`, `d_k × r_k`.
    pub w_k_hat: Vec<Matrix>,
}

impl Components {
    /// `Û V̂_kᵀ + Û_k Ŵ_kᵀ`.
    pub fn reconstruct(&self, u_hat: &OrthonormalBasis, k: usize) -> Matrix {
        let mut m = u_hat.matrix() * self.v_k_hat[k].transpose();
        if self.u_k_hat[k].rank() > 0 {
            m += self.u_k_hat[k].matrix() * self.w_k_hat[k].transpose();
        }
        m
    }
}

/// Projects `Û` out of every view and keeps the top `r_k` left singular
/// vectors of the remainder; loadings are back-projections of `A_k`.
pub fn extract_components(data: &MultiViewData, u_hat: &OrthonormalBasis, ranks: &RankSpec) -> Result<Components> {
    let n = data.n();
    if u_hat.ambient_dim() != n {
        return invalid("joint basis does not match the number of units");
    }
    if ranks.num_views() != data.num_views() {
        return invalid("rank spec and data disagree on the number of views");
    }
    let r = u_hat.rank();
    for (k, &rk) in ranks.individual.iter().enumerate() {
        let d = data.view(k).ncols();
        if rk > (n - r).min(d) {
            return invalid(format!("view {}: individual rank {rk} exceeds min(n - r, d_k)", k + 1));
        }
    }
    let u = u_hat.matrix();
    let per_view: Vec<Result<(OrthonormalBasis, Matrix, Matrix)>> = data
        .views()
        .par_iter()
        .zip(ranks.individual.par_iter())
        .map(|(a, &rk)| {
            let v_hat = a.transpose() * u;
            if rk == 0 {
                return Ok((OrthonormalBasis::empty(n), v_hat, Matrix::zeros(a.ncols(), 0)));
            }
            let resid = a - u * u.transpose() * a;
            let (left, _) = linalg::top_left_singular(&resid, rk)?;
            // Re-project and re-orthonormalize so Ûᵀ Û_k = 0 holds even when
            // the residual has (near-)zero singular values.
            let mut b = left.into_matrix();
            let coef = u.transpose() * &b;
            b -= u * coef;
            let b = b.qr().q();
            let u_k = OrthonormalBasis::new(b)?;
            let w_hat = a.transpose() * u_k.matrix();
            Ok((u_k, v_hat, w_hat))
        })
        .collect();
    let mut out = Components { u_k_hat: Vec::new(), v_k_hat: Vec::new(), w_k_hat: Vec::new() };
    for res in per_view {
        let (u_k, v, w) = res?;
        out.u_k_hat.push(u_k);
        out.v_k_hat.push(v);
        out.w_k_hat.push(w);
    }
    Ok(out)
}

/// Output of [`heterojive`].
#[derive(Debug, Clone)]
pub struct JiveFit {
    pub u_hat: OrthonormalBasis,
    pub components: Components,
    pub weights: WeightVector,
    /// Eigengap `λ_r − λ_{r+1}` of the aggregated projector.
    pub spectral_gap: f64,
    pub aggregate_eigenvalues: Vec<f64>,
    /// Plug-in noise and SNR estimates; `None` when the residual has no
    /// degrees of freedom left to estimate the noise level.
    pub diagnostics: Option<PluginDiagnostics>,
}

impl JiveFit {
    pub fn u_k_hat(&self) -> &[OrthonormalBasis] {
        &self.components.u_k_hat
    }
}

/// Joint basis only; skips component extraction and diagnostics.
pub fn estimate_joint(data: &MultiViewData, ranks: &RankSpec, weights: &WeightVector) -> Result<Aggregate> {
    if weights.len() != data.num_views() {
        return invalid(format!("{} weights for {} views", weights.len(), data.num_views()));
    }
    let stage1 = stage1_extract(data, ranks)?;
    aggregate_weighted(&stage1, weights, ranks.joint)
}

/// Weighted two-stage estimator with components and plug-in diagnostics.
pub fn heterojive(data: &MultiViewData, ranks: &RankSpec, weights: &WeightVector) -> Result<JiveFit> {
    let agg = estimate_joint(data, ranks, weights)?;
    let components = extract_components(data, &agg.basis, ranks)?;
    let diagnostics = match weighting::plugin_diagnostics(data, &agg.basis, &components, ranks) {
        Ok(d) => Some(d),
        Err(JiveError::InvalidInput(msg)) => {
            log::debug!("plug-in diagnostics unavailable: {msg}");
            None
        }
        Err(e) => return Err(e),
    };
    Ok(JiveFit {
        u_hat: agg.basis,
        components,
        weights: weights.clone(),
        spectral_gap: agg.gap,
        aggregate_eigenvalues: agg.eigenvalues,
        diagnostics,
    })
}

/// Equal-weight special case.
pub fn ajive(data: &MultiViewData, ranks: &RankSpec) -> Result<JiveFit> {
    heterojive(data, ranks, &WeightVector::uniform(data.num_views()))
}

/// Top-`r` eigenvectors of the pooled covariance `Σ w_k A_k A_kᵀ`
/// (equal weights by default).
pub fn stack_svd(data: &MultiViewData, r: usize, weights: Option<&WeightVector>) -> Result<Aggregate> {
    let k = data.num_views();
    let uniform = WeightVector::uniform(k);
    let w = weights.unwrap_or(&uniform);
    if w.len() != k {
        return invalid(format!("{} weights for {k} views", w.len()));
    }
    let n = data.n();
    if r == 0 || r > n {
        return invalid(format!("joint rank {r} is not in 1..={n}"));
    }
    let mut s = Matrix::zeros(n, n);
    for (a, &wk) in data.views().iter().zip(w.as_slice()) {
        if wk > 0.0 {
            s.gemm(wk, a, &a.transpose(), 1.0);
        }
    }
    let s = (&s + s.transpose()) * 0.5;
    top_r_or_degenerate(&s, r)
}
