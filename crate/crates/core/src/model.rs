//! JIVE ground truth and synthetic multi-view data.
//!
//! Views follow `A_k = s_k (U V_kᵀ + γ U_k W_kᵀ) + E_k` with `E_k` i.i.d.
//! `N(0, σ_k²)`, `U ⟂ U_k`, and individual subspaces built as
//! `U_k = √(1−θ) Z + √θ Z_k` around a common direction `Z`.

use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::linalg::{self, haar_orthonormal, sample_in_complement, Matrix, OrthonormalBasis};
use crate::seed::{derive_seed, rng_from_seed};

/// Joint rank and per-view individual ranks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankSpec {
    pub joint: usize,
    pub individual: Vec<usize>,
}

impl RankSpec {
    pub fn new(joint: usize, individual: Vec<usize>) -> Result<Self> {
        if joint == 0 {
            return invalid("joint rank must be at least 1");
        }
        if individual.is_empty() {
            return invalid("at least one view is required");
        }
        Ok(Self { joint, individual })
    }

    /// Same individual rank for all `k` views.
    pub fn uniform(joint: usize, individual: usize, k: usize) -> Result<Self> {
        Self::new(joint, vec![individual; k])
    }

    pub fn num_views(&self) -> usize {
        self.individual.len()
    }

    /// `r̄_k = r + r_k`.
    pub fn total(&self, k: usize) -> usize {
        self.joint + self.individual[k]
    }

    /// Checks `r + r_k ≤ min(n, d_k)` for every view.
    pub fn check_dims(&self, n: usize, widths: &[usize]) -> Result<()> {
        if widths.len() != self.num_views() {
            return invalid(format!("rank spec lists {} views but data has {}", self.num_views(), widths.len()));
        }
        for (k, &d) in widths.iter().enumerate() {
            let total = self.total(k);
            if total > n.min(d) {
                return invalid(format!("view {}: r + r_k = {total} exceeds min(n, d_k) = {}", k + 1, n.min(d)));
            }
        }
        Ok(())
    }
}

/// How the per-view loadings `V_k`, `W_k` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadingScheme {
    /// Independent Haar `V_k`, `W_k` for every view.
    Random,
    /// One Haar `V`, one Haar `W`, reused by every view.
    Shared,
    /// Disjoint column blocks of a single Haar `Q ∈ O_d`, reused by every view.
    SharedOrthogonal,
    /// Disjoint column blocks of an independent Haar `Q_k ∈ O_d` per view.
    RandomOrthogonal,
}

impl LoadingScheme {
    pub fn name(self) -> &'static str {
        match self {
            LoadingScheme::Random => "random",
            LoadingScheme::Shared => "shared",
            LoadingScheme::SharedOrthogonal => "shared_orthogonal",
            LoadingScheme::RandomOrthogonal => "random_orthogonal",
        }
    }
}

/// How individual subspaces are placed relative to each other.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SubspaceConstruction {
    /// `U_k = √(1−θ) Z + √θ Z_k`; requires equal individual ranks.
    Aligned { theta: f64 },
    /// Each `U_k` is an independent Haar frame in the complement of `U`.
    /// Works for unequal individual ranks; ignores θ.
    IndependentComplement,
}

#[derive(Debug, Clone)]
pub struct JiveGroundTruth {
    pub u: OrthonormalBasis,
    pub u_k: Vec<OrthonormalBasis>,
    pub v_k: Vec<Matrix>,
    pub w_k: Vec<Matrix>,
    pub sigma_k: Vec<f64>,
    pub s_k: Vec<f64>,
    pub gamma: f64,
    pub theta_target: f64,
}

impl JiveGroundTruth {
    /// Assembles a truth and checks its structural invariants.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        u: OrthonormalBasis,
        u_k: Vec<OrthonormalBasis>,
        v_k: Vec<Matrix>,
        w_k: Vec<Matrix>,
        sigma_k: Vec<f64>,
        s_k: Vec<f64>,
        gamma: f64,
        theta_target: f64,
    ) -> Result<Self> {
        let k = u_k.len();
        if k == 0 {
            return invalid("ground truth needs at least one view");
        }
        if v_k.len() != k || w_k.len() != k || sigma_k.len() != k || s_k.len() != k {
            return invalid("per-view lists in the ground truth must all have length K");
        }
        let n = u.ambient_dim();
        let r = u.rank();
        for j in 0..k {
            let uk = &u_k[j];
            if uk.ambient_dim() != n {
                return invalid(format!("U_{} lives in R^{}, expected R^{n}", j + 1, uk.ambient_dim()));
            }
            if uk.rank() > 0 {
                let cross = u.matrix().transpose() * uk.matrix();
                if cross.amax() > linalg::ORTHONORMAL_TOL {
                    return invalid(format!("U_{} is not orthogonal to U (max |UᵀU_k| = {:.3e})", j + 1, cross.amax()));
                }
            }
            let d = v_k[j].nrows();
            if v_k[j].ncols() != r || w_k[j].nrows() != d || w_k[j].ncols() != uk.rank() {
                return invalid(format!("loading shapes of view {} do not match the ranks", j + 1));
            }
            if !(sigma_k[j] >= 0.0 && sigma_k[j].is_finite()) {
                return invalid(format!("sigma_{} must be a nonnegative finite number", j + 1));
            }
            if !(s_k[j] >= 0.0 && s_k[j].is_finite()) {
                return invalid(format!("s_{} must be a nonnegative finite number", j + 1));
            }
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return invalid("gamma must be nonnegative");
        }
        Ok(Self { u, u_k, v_k, w_k, sigma_k, s_k, gamma, theta_target })
    }

    pub fn num_views(&self) -> usize {
        self.u_k.len()
    }

    pub fn n(&self) -> usize {
        self.u.ambient_dim()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.v_k.iter().map(|v| v.nrows()).collect()
    }

    pub fn ranks(&self) -> RankSpec {
        RankSpec { joint: self.u.rank(), individual: self.u_k.iter().map(|b| b.rank()).collect() }
    }

    /// Noiseless view `s_k (U V_kᵀ + γ U_k W_kᵀ)`.
    pub fn signal(&self, k: usize) -> Matrix {
        let mut m = self.u.matrix() * self.v_k[k].transpose();
        if self.u_k[k].rank() > 0 {
            m += self.u_k[k].matrix() * self.w_k[k].transpose() * self.gamma;
        }
        m * self.s_k[k]
    }

    /// `Ū_k = [U U_k]`.
    pub fn ubar(&self, k: usize) -> OrthonormalBasis {
        self.u.concat(&self.u_k[k]).expect("truth invariants guarantee orthogonality")
    }

    /// `r̄_k`-th singular value of the noiseless view.
    pub fn lambda_min(&self, k: usize) -> f64 {
        let total = self.u.rank() + self.u_k[k].rank();
        let s = linalg::singular_values(&self.signal(k)).expect("signal is finite");
        s.get(total - 1).copied().unwrap_or(0.0)
    }

    /// `λ_{k,min} / σ_k` (infinite when the view is noiseless).
    pub fn snr(&self, k: usize) -> f64 {
        let lam = self.lambda_min(k);
        if self.sigma_k[k] == 0.0 {
            f64::INFINITY
        } else {
            lam / self.sigma_k[k]
        }
    }

    /// Loading leakage `δ_k` between `V_k` and `W_k`; zero when `r_k = 0`.
    pub fn delta(&self, k: usize) -> Result<f64> {
        if self.w_k[k].ncols() == 0 {
            return Ok(0.0);
        }
        linalg::principal_angle_delta(&self.v_k[k], &self.w_k[k])
    }
}

/// Views on `n` shared units.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiViewData {
    views: Vec<Matrix>,
    labels: Option<Vec<usize>>,
}

impl MultiViewData {
    pub fn new(views: Vec<Matrix>) -> Result<Self> {
        if views.is_empty() {
            return invalid("at least one view is required");
        }
        let n = views[0].nrows();
        for (k, v) in views.iter().enumerate() {
            if v.nrows() != n {
                return invalid(format!("view {} has {} rows, expected {n}", k + 1, v.nrows()));
            }
            if v.nrows() == 0 || v.ncols() == 0 {
                return invalid(format!("view {} is empty", k + 1));
            }
            linalg::ensure_finite(v)?;
        }
        Ok(Self { views, labels: None })
    }

    pub fn with_labels(mut self, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != self.n() {
            return invalid(format!("{} labels for {} units", labels.len(), self.n()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn views(&self) -> &[Matrix] {
        &self.views
    }

    pub fn view(&self, k: usize) -> &Matrix {
        &self.views[k]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn n(&self) -> usize {
        self.views[0].nrows()
    }

    pub fn num_views(&self) -> usize {
        self.views.len()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.views.iter().map(|v| v.ncols()).collect()
    }
}

/// Joint basis `U` and individual bases `U_k` via the θ-aligned construction.
pub fn generate_subspaces<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    ranks: &RankSpec,
    theta: f64,
) -> Result<(OrthonormalBasis, Vec<OrthonormalBasis>)> {
    if !(0.0..=1.0).contains(&theta) {
        return invalid(format!("theta must lie in [0, 1], got {theta}"));
    }
    let width = ranks.individual[0];
    if ranks.individual.iter().any(|&rk| rk != width) {
        return invalid(
            "the aligned construction needs equal individual ranks; use the independent-complement construction",
        );
    }
    if ranks.joint + 2 * width > n {
        return invalid(format!("need r + 2 r_k = {} ≤ n = {n} to place Z and Z_k", ranks.joint + 2 * width));
    }
    let u = haar_orthonormal(rng, n, ranks.joint)?;
    let z = sample_in_complement(rng, n, std::slice::from_ref(&u), width)?;
    let (a, b) = ((1.0 - theta).sqrt(), theta.sqrt());
    let constraints = [u.clone(), z.clone()];
    let mut u_k = Vec::with_capacity(ranks.num_views());
    for _ in 0..ranks.num_views() {
        let zk = sample_in_complement(rng, n, &constraints, width)?;
        let m = z.matrix() * a + zk.matrix() * b;
        u_k.push(OrthonormalBasis::new(m)?);
    }
    Ok((u, u_k))
}

/// Joint basis plus independent individual frames in its complement.
pub fn generate_independent_subspaces<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    ranks: &RankSpec,
) -> Result<(OrthonormalBasis, Vec<OrthonormalBasis>)> {
    let widest = ranks.individual.iter().copied().max().unwrap_or(0);
    if ranks.joint + widest > n {
        return invalid(format!("r + max r_k = {} exceeds n = {n}", ranks.joint + widest));
    }
    let u = haar_orthonormal(rng, n, ranks.joint)?;
    let mut u_k = Vec::with_capacity(ranks.num_views());
    for &rk in &ranks.individual {
        u_k.push(sample_in_complement(rng, n, std::slice::from_ref(&u), rk)?);
    }
    Ok((u, u_k))
}

/// Loadings `(V_k, W_k)` of widths `(r, r_ind)` in `R^d` for `k` views.
pub fn generate_loadings<R: Rng + ?Sized>(
    rng: &mut R,
    scheme: LoadingScheme,
    d: usize,
    r: usize,
    r_ind: usize,
    k: usize,
) -> Result<(Vec<Matrix>, Vec<Matrix>)> {
    match scheme {
        LoadingScheme::Random | LoadingScheme::Shared => {
            if d < r.max(r_ind) {
                return invalid(format!("loading width d = {d} is smaller than the rank"));
            }
        }
        LoadingScheme::SharedOrthogonal | LoadingScheme::RandomOrthogonal => {
            if d < r + r_ind {
                return invalid(format!("orthogonal schemes need d ≥ r + r_k = {}, got {d}", r + r_ind));
            }
        }
    }
    let split = |q: &OrthonormalBasis| {
        let m = q.matrix();
        (m.columns(0, r).into_owned(), m.columns(r, r_ind).into_owned())
    };
    let mut v_k = Vec::with_capacity(k);
    let mut w_k = Vec::with_capacity(k);
    match scheme {
        LoadingScheme::Random => {
            for _ in 0..k {
                v_k.push(haar_orthonormal(rng, d, r)?.into_matrix());
                w_k.push(haar_orthonormal(rng, d, r_ind)?.into_matrix());
            }
        }
        LoadingScheme::Shared => {
            let v = haar_orthonormal(rng, d, r)?.into_matrix();
            let w = haar_orthonormal(rng, d, r_ind)?.into_matrix();
            v_k = vec![v; k];
            w_k = vec![w; k];
        }
        LoadingScheme::SharedOrthogonal => {
            let (v, w) = split(&haar_orthonormal(rng, d, d)?);
            v_k = vec![v; k];
            w_k = vec![w; k];
        }
        LoadingScheme::RandomOrthogonal => {
            for _ in 0..k {
                let (v, w) = split(&haar_orthonormal(rng, d, d)?);
                v_k.push(v);
                w_k.push(w);
            }
        }
    }
    Ok((v_k, w_k))
}

/// Draws the noisy views for a ground truth.
///
/// One base seed is taken from `rng`; view `k` then uses its own stream
/// derived from `(base, k)`, so the output does not depend on the order in
/// which views are evaluated.
pub fn synthesize_views<R: RngCore + ?Sized>(rng: &mut R, truth: &JiveGroundTruth) -> Result<MultiViewData> {
    let base = rng.next_u64();
    let views: Vec<Matrix> = (0..truth.num_views())
        .into_par_iter()
        .map(|k| {
            let mut view_rng = rng_from_seed(derive_seed(base, "view-noise", &[k as u64]));
            let sigma = truth.sigma_k[k];
            let mut a = truth.signal(k);
            if sigma > 0.0 {
                for x in a.iter_mut() {
                    *x += sigma * view_rng.sample::<f64, _>(StandardNormal);
                }
            }
            a
        })
        .collect();
    MultiViewData::new(views)
}

/// Everything needed to draw a [`JiveGroundTruth`].
#[derive(Debug, Clone)]
pub struct TruthSpec {
    pub n: usize,
    pub widths: Vec<usize>,
    pub ranks: RankSpec,
    pub scheme: LoadingScheme,
    pub construction: SubspaceConstruction,
    pub s_k: Vec<f64>,
    pub gamma: f64,
    pub sigma_k: Vec<f64>,
}

impl TruthSpec {
    pub fn build<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<JiveGroundTruth> {
        let k = self.ranks.num_views();
        if self.widths.len() != k || self.s_k.len() != k || self.sigma_k.len() != k {
            return invalid("widths, s_k and sigma_k must each list one entry per view");
        }
        self.ranks.check_dims(self.n, &self.widths)?;
        let (u, u_k, theta_target) = match self.construction {
            SubspaceConstruction::Aligned { theta } => {
                let (u, u_k) = generate_subspaces(rng, self.n, &self.ranks, theta)?;
                (u, u_k, theta)
            }
            SubspaceConstruction::IndependentComplement => {
                let (u, u_k) = generate_independent_subspaces(rng, self.n, &self.ranks)?;
                (u, u_k, f64::NAN)
            }
        };
        let (v_k, w_k) = if self.widths.iter().all(|&d| d == self.widths[0])
            && self.ranks.individual.iter().all(|&rk| rk == self.ranks.individual[0])
        {
            generate_loadings(rng, self.scheme, self.widths[0], self.ranks.joint, self.ranks.individual[0], k)?
        } else {
            if !matches!(self.scheme, LoadingScheme::Random | LoadingScheme::RandomOrthogonal) {
                return invalid("shared loading schemes need equal widths and individual ranks");
            }
            let mut v_k = Vec::with_capacity(k);
            let mut w_k = Vec::with_capacity(k);
            for j in 0..k {
                let (mut v, mut w) =
                    generate_loadings(rng, self.scheme, self.widths[j], self.ranks.joint, self.ranks.individual[j], 1)?;
                v_k.push(v.pop().expect("one view"));
                w_k.push(w.pop().expect("one view"));
            }
            (v_k, w_k)
        };
        JiveGroundTruth::new(u, u_k, v_k, w_k, self.sigma_k.clone(), self.s_k.clone(), self.gamma, theta_target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{orthonormality_defect, projector_distance};
    use crate::seed::rng_from_seed;

    #[test]
    fn aligned_construction_extremes() {
        let ranks = RankSpec::uniform(2, 2, 3).unwrap();
        let (_, u_k) = generate_subspaces(&mut rng_from_seed(1), 12, &ranks, 0.0).unwrap();
        assert!(projector_distance(&u_k[0], &u_k[1]).unwrap() < 1e-12);
        assert!(projector_distance(&u_k[0], &u_k[2]).unwrap() < 1e-12);

        let (u, u_k) = generate_subspaces(&mut rng_from_seed(2), 12, &ranks, 1.0).unwrap();
        for b in &u_k {
            assert!((u.matrix().transpose() * b.matrix()).amax() < 1e-10);
        }
        assert!(projector_distance(&u_k[0], &u_k[1]).unwrap() > 0.1);
    }

    #[test]
    fn aligned_construction_invariants() {
        let ranks = RankSpec::uniform(2, 2, 5).unwrap();
        let (u, u_k) = generate_subspaces(&mut rng_from_seed(3), 20, &ranks, 0.5).unwrap();
        for b in &u_k {
            assert!(orthonormality_defect(b.matrix()) < 1e-10);
            assert!((u.matrix().transpose() * b.matrix()).amax() < 1e-10);
        }
    }

    #[test]
    fn aligned_construction_rejects_bad_budgets() {
        let ranks = RankSpec::uniform(2, 2, 2).unwrap();
        assert!(generate_subspaces(&mut rng_from_seed(0), 5, &ranks, 0.5).is_err());
        let uneven = RankSpec::new(1, vec![1, 2]).unwrap();
        assert!(generate_subspaces(&mut rng_from_seed(0), 10, &uneven, 0.5).is_err());
        assert!(generate_independent_subspaces(&mut rng_from_seed(0), 10, &uneven).is_ok());
        assert!(generate_subspaces(&mut rng_from_seed(0), 10, &ranks, 1.5).is_err());
    }

    #[test]
    fn loading_schemes() {
        let mut rng = rng_from_seed(4);
        let (v, w) = generate_loadings(&mut rng, LoadingScheme::SharedOrthogonal, 10, 2, 2, 3).unwrap();
        for k in 0..3 {
            assert!(linalg::principal_angle_delta(&v[k], &w[k]).unwrap() < 1e-12);
        }
        let (v, w) = generate_loadings(&mut rng, LoadingScheme::Shared, 10, 2, 2, 4).unwrap();
        assert!(v.iter().all(|x| x == &v[0]));
        assert!(w.iter().all(|x| x == &w[0]));

        let (v, w) = generate_loadings(&mut rng, LoadingScheme::Random, 50, 3, 3, 10).unwrap();
        for m in v.iter().chain(w.iter()) {
            assert!(orthonormality_defect(m) < 1e-10);
        }
        assert!(v.windows(2).all(|p| (&p[0] - &p[1]).amax() > 1e-3));

        let (v, w) = generate_loadings(&mut rng, LoadingScheme::RandomOrthogonal, 10, 2, 3, 2).unwrap();
        assert_eq!(w[0].ncols(), 3);
        assert!((v[0].transpose() * &w[0]).amax() < 1e-12);
        assert!(generate_loadings(&mut rng, LoadingScheme::RandomOrthogonal, 4, 2, 3, 2).is_err());
    }

    fn spec(sigma: f64, gamma: f64) -> TruthSpec {
        TruthSpec {
            n: 20,
            widths: vec![30; 3],
            ranks: RankSpec::uniform(2, 2, 3).unwrap(),
            scheme: LoadingScheme::Random,
            construction: SubspaceConstruction::Aligned { theta: 0.5 },
            s_k: vec![1.0; 3],
            gamma,
            sigma_k: vec![sigma; 3],
        }
    }

    #[test]
    fn noiseless_views_have_exact_rank() {
        let truth = spec(0.0, 1.0).build(&mut rng_from_seed(5)).unwrap();
        let data = synthesize_views(&mut rng_from_seed(6), &truth).unwrap();
        for k in 0..3 {
            let s = linalg::singular_values(data.view(k)).unwrap();
            assert!(s[3] > 1e-3);
            assert!(s[4] < 1e-10 * s[0]);
        }
    }

    #[test]
    fn no_individual_signal_stays_in_joint_span() {
        let truth = spec(0.0, 0.0).build(&mut rng_from_seed(7)).unwrap();
        let data = synthesize_views(&mut rng_from_seed(8), &truth).unwrap();
        let p = truth.u.projector();
        for v in data.views() {
            assert!((v - &p * v).amax() < 1e-12);
        }
    }

    #[test]
    fn synthesis_is_deterministic() {
        let truth = spec(0.3, 1.0).build(&mut rng_from_seed(9)).unwrap();
        let a = synthesize_views(&mut rng_from_seed(10), &truth).unwrap();
        let b = synthesize_views(&mut rng_from_seed(10), &truth).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn noise_level_matches_sigma() {
        let truth = spec(0.5, 1.0).build(&mut rng_from_seed(11)).unwrap();
        let data = synthesize_views(&mut rng_from_seed(12), &truth).unwrap();
        let noise = data.view(1) - truth.signal(1);
        let sd = (noise.norm_squared() / (noise.len() as f64)).sqrt();
        assert!((sd - 0.5).abs() < 0.05, "empirical sd {sd}");
    }

    #[test]
    fn per_view_scale_is_applied() {
        let mut sp = spec(0.0, 2.0);
        sp.ranks = RankSpec::uniform(1, 1, 2).unwrap();
        sp.widths = vec![30; 2];
        sp.sigma_k = vec![0.0; 2];
        sp.scheme = LoadingScheme::Shared;
        sp.s_k = vec![1.0, 1.0];
        let base = synthesize_views(&mut rng_from_seed(14), &sp.build(&mut rng_from_seed(13)).unwrap()).unwrap();
        sp.s_k = vec![1.0, 100.0];
        let scaled = synthesize_views(&mut rng_from_seed(14), &sp.build(&mut rng_from_seed(13)).unwrap()).unwrap();
        assert_eq!(scaled.view(0), base.view(0));
        let ratio = scaled.view(1).abs().mean() / base.view(1).abs().mean();
        assert!((ratio - 100.0).abs() < 1e-8, "ratio {ratio}");
    }

    #[test]
    fn truth_rejects_non_orthogonal_individual() {
        let mut rng = rng_from_seed(15);
        let u = haar_orthonormal(&mut rng, 6, 1).unwrap();
        let bad = u.clone();
        let v = haar_orthonormal(&mut rng, 4, 1).unwrap().into_matrix();
        let r = JiveGroundTruth::new(u, vec![bad], vec![v.clone()], vec![v], vec![0.1], vec![1.0], 1.0, 0.5);
        assert!(r.is_err());
    }

    #[test]
    fn mismatched_rows_rejected() {
        assert!(MultiViewData::new(vec![Matrix::zeros(3, 2), Matrix::zeros(4, 2)]).is_err());
    }
}
