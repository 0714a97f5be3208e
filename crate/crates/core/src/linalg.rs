//! Dense matrix primitives: SVD, symmetric eigendecomposition, projector
//! algebra, Haar-uniform frames and principal angles.
//!
//! Everything here is a pure function over `nalgebra` dense matrices.
//! Eigenvector and singular-vector signs are arbitrary; callers compare
//! subspaces through their projectors.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, JiveError, Result};

pub type Matrix = DMatrix<f64>;

/// Tolerance on `BᵀB = I` for anything claiming to be orthonormal.
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Inputs to the symmetric eigensolver may deviate from symmetry by this
/// much (relative to their largest entry).
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Eigenvalues closer than this (relative to the spectral radius) are tied.
pub const GAP_TOL: f64 = 1e-12;

/// An `n × q` matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    matrix: Matrix,
}

impl OrthonormalBasis {
    /// Validates `matrixᵀ·matrix = I` to [`ORTHONORMAL_TOL`].
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.nrows() == 0 {
            return invalid("basis must have at least one row");
        }
        if matrix.ncols() > matrix.nrows() {
            return invalid(format!("basis has {} columns but ambient dimension {}", matrix.ncols(), matrix.nrows()));
        }
        ensure_finite(&matrix)?;
        let dev = orthonormality_defect(&matrix);
        if dev > ORTHONORMAL_TOL {
            return invalid(format!("columns are not orthonormal (max |BᵀB - I| = {dev:.3e})"));
        }
        Ok(Self { matrix })
    }

    /// Wraps a matrix the caller has produced by an orthonormalizing routine.
    pub(crate) fn from_trusted(matrix: Matrix) -> Self {
        debug_assert!(orthonormality_defect(&matrix) < 1e-8);
        Self { matrix }
    }

    /// Empty (rank-zero) basis in `R^n`.
    pub fn empty(n: usize) -> Self {
        Self { matrix: Matrix::zeros(n, 0) }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn ambient_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn rank(&self) -> usize {
        self.matrix.ncols()
    }

    /// `B·Bᵀ`.
    pub fn projector(&self) -> Matrix {
        &self.matrix * self.matrix.transpose()
    }

    /// Column concatenation `[self other]`; the result must stay orthonormal.
    pub fn concat(&self, other: &OrthonormalBasis) -> Result<OrthonormalBasis> {
        if self.ambient_dim() != other.ambient_dim() {
            return invalid("cannot concatenate bases of different ambient dimension");
        }
        let n = self.ambient_dim();
        let mut m = Matrix::zeros(n, self.rank() + other.rank());
        m.columns_mut(0, self.rank()).copy_from(&self.matrix);
        m.columns_mut(self.rank(), other.rank()).copy_from(&other.matrix);
        OrthonormalBasis::new(m)
    }

    /// Leading `q` columns.
    pub fn leading(&self, q: usize) -> OrthonormalBasis {
        Self { matrix: self.matrix.columns(0, q).into_owned() }
    }
}

/// Largest absolute entry of `BᵀB − I`.
pub fn orthonormality_defect(b: &Matrix) -> f64 {
    let gram = b.transpose() * b;
    let q = gram.nrows();
    let mut worst = 0.0_f64;
    for j in 0..q {
        for i in 0..q {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Top eigenpairs of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SpectrumSlice {
    /// Nonincreasing.
    pub values: Vec<f64>,
    pub vectors: OrthonormalBasis,
    /// `λ_r − λ_{r+1}`; `+∞` when `r = n`.
    pub gap: f64,
    /// Set when the gap is below [`GAP_TOL`], i.e. the returned eigenspace is
    /// one of several valid choices.
    pub degenerate_gap: bool,
}

/// Result of [`thin_svd`].
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub left: OrthonormalBasis,
    pub singvals: Vec<f64>,
    pub right: OrthonormalBasis,
}

impl ThinSvd {
    pub fn reconstruct(&self) -> Matrix {
        let mut scaled = self.left.matrix().clone();
        for (j, s) in self.singvals.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*s);
        }
        scaled * self.right.matrix().transpose()
    }
}

pub(crate) fn ensure_finite(a: &Matrix) -> Result<()> {
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        invalid("matrix contains non-finite entries")
    }
}

fn ensure_nonempty(a: &Matrix) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return invalid("matrix must have at least one row and one column");
    }
    Ok(())
}

fn to_faer(a: &Matrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>, cols: usize) -> Matrix {
    Matrix::from_fn(m.nrows(), cols, |i, j| m[(i, j)])
}

fn svd_failed(_: faer::linalg::svd::SvdError) -> JiveError {
    JiveError::DegenerateInput("singular value decomposition did not converge".into())
}

/// Thin SVD `a = U·diag(s)·Vᵀ` with singular values sorted descending.
pub fn thin_svd(a: &Matrix) -> Result<ThinSvd> {
    ensure_nonempty(a)?;
    ensure_finite(a)?;
    let k = a.nrows().min(a.ncols());
    let svd = to_faer(a).thin_svd().map_err(svd_failed)?;
    let singvals = svd.S().column_vector().iter().map(|s| s.max(0.0)).collect();
    Ok(ThinSvd {
        left: OrthonormalBasis::from_trusted(from_faer(svd.U(), k)),
        singvals,
        right: OrthonormalBasis::from_trusted(from_faer(svd.V(), k)),
    })
}

/// Leading `q` left singular vectors together with the full singular
/// value sequence (descending).
pub fn top_left_singular(a: &Matrix, q: usize) -> Result<(OrthonormalBasis, Vec<f64>)> {
    ensure_nonempty(a)?;
    ensure_finite(a)?;
    let k = a.nrows().min(a.ncols());
    if q > k {
        return invalid(format!("requested {q} singular vectors of a {}x{} matrix", a.nrows(), a.ncols()));
    }
    let svd = to_faer(a).thin_svd().map_err(svd_failed)?;
    let singvals = svd.S().column_vector().iter().map(|s| s.max(0.0)).collect();
    Ok((OrthonormalBasis::from_trusted(from_faer(svd.U(), q)), singvals))
}

/// Singular values only, descending.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    ensure_nonempty(a)?;
    ensure_finite(a)?;
    let s = to_faer(a).singular_values().map_err(svd_failed)?;
    Ok(s.into_iter().map(|x| x.max(0.0)).collect())
}

fn check_symmetric(s: &Matrix) -> Result<()> {
    if s.nrows() != s.ncols() {
        return invalid(format!("expected a square matrix, got {}x{}", s.nrows(), s.ncols()));
    }
    ensure_nonempty(s)?;
    ensure_finite(s)?;
    let scale = s.amax().max(1.0);
    let n = s.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            if (s[(i, j)] - s[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return invalid(format!("matrix is not symmetric at ({i}, {j})"));
            }
        }
    }
    Ok(())
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
/// The input is symmetrized first to absorb round-off.
pub fn sym_eigen_desc(s: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    check_symmetric(s)?;
    let sym = (s + s.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let vals = eig.eigenvalues;
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[j].total_cmp(&vals[i]));
    let n = s.nrows();
    let mut vecs = Matrix::zeros(n, n);
    let mut sorted = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
        sorted.push(vals[src]);
    }
    Ok((sorted, vecs))
}

/// Eigenvalues of a symmetric matrix, descending.
pub fn sym_eigenvalues_desc(s: &Matrix) -> Result<Vec<f64>> {
    check_symmetric(s)?;
    let sym = (s + s.transpose()) * 0.5;
    let mut vals: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    vals.sort_by(|x, y| y.total_cmp(x));
    Ok(vals)
}

/// The `r` largest eigenpairs of a symmetric matrix.
pub fn top_r_eigvecs_sym(s: &Matrix, r: usize) -> Result<SpectrumSlice> {
    let n = s.nrows();
    if r == 0 || r > n {
        return invalid(format!("requested {r} eigenvectors of a {n}x{n} matrix"));
    }
    let (vals, vecs) = sym_eigen_desc(s)?;
    let gap = if r < n { vals[r - 1] - vals[r] } else { f64::INFINITY };
    let scale = vals.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    Ok(SpectrumSlice {
        values: vals[..r].to_vec(),
        vectors: OrthonormalBasis::from_trusted(vecs.columns(0, r).into_owned()),
        gap,
        degenerate_gap: gap <= GAP_TOL * scale,
    })
}

/// Largest singular value.
pub fn operator_norm(a: &Matrix) -> Result<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0.0);
    }
    Ok(singular_values(a)?[0])
}

/// Spectral norm of a symmetric matrix, `max |λ_i|`.
pub fn sym_operator_norm(s: &Matrix) -> Result<f64> {
    let vals = sym_eigenvalues_desc(s)?;
    Ok(vals.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// `‖u1·u1ᵀ − u2·u2ᵀ‖_op`.
pub fn projector_distance(u1: &OrthonormalBasis, u2: &OrthonormalBasis) -> Result<f64> {
    if u1.ambient_dim() != u2.ambient_dim() {
        return invalid(format!("ambient dimensions differ: {} vs {}", u1.ambient_dim(), u2.ambient_dim()));
    }
    let diff = u1.projector() - u2.projector();
    Ok(sym_operator_norm(&diff)?.min(1.0))
}

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize, q: usize) -> Matrix {
    Matrix::from_fn(n, q, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Q factor of `g` with column `j` multiplied by `sign(R_jj)`.
fn sign_corrected_q(g: Matrix) -> Matrix {
    let q_cols = g.ncols();
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..q_cols {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Haar-uniform draw from the Stiefel manifold `O_{n,q}`.
pub fn haar_orthonormal<R: Rng + ?Sized>(rng: &mut R, n: usize, q: usize) -> Result<OrthonormalBasis> {
    if n == 0 {
        return invalid("ambient dimension must be positive");
    }
    if q > n {
        return invalid(format!("cannot draw {q} orthonormal columns in R^{n}"));
    }
    if q == 0 {
        return Ok(OrthonormalBasis::empty(n));
    }
    Ok(OrthonormalBasis::from_trusted(sign_corrected_q(gaussian_matrix(rng, n, q))))
}

/// Orthonormal basis of the orthogonal complement of `span(b)`.
pub fn complement_basis(b: &OrthonormalBasis) -> Result<OrthonormalBasis> {
    let n = b.ambient_dim();
    let q = b.rank();
    if q >= n {
        return invalid("basis already spans the ambient space; complement is empty");
    }
    let resid = Matrix::identity(n, n) - b.projector();
    let (_, vecs) = sym_eigen_desc(&resid)?;
    Ok(OrthonormalBasis::from_trusted(vecs.columns(0, n - q).into_owned()))
}

/// Orthonormal basis of the span of all constraint columns.
fn span_basis(constraints: &[OrthonormalBasis], n: usize) -> Result<Matrix> {
    let total: usize = constraints.iter().map(|c| c.rank()).sum();
    if total == 0 {
        return Ok(Matrix::zeros(n, 0));
    }
    let mut stacked = Matrix::zeros(n, total);
    let mut col = 0;
    for c in constraints {
        if c.ambient_dim() != n {
            return invalid("constraint bases must share the ambient dimension");
        }
        stacked.columns_mut(col, c.rank()).copy_from(c.matrix());
        col += c.rank();
    }
    let svd = thin_svd(&stacked)?;
    let cutoff = 1e-10 * svd.singvals[0].max(1.0);
    let rank = svd.singvals.iter().filter(|&&s| s > cutoff).count();
    Ok(svd.left.matrix().columns(0, rank).into_owned())
}

/// Haar-uniform `q`-frame orthogonal to every constraint basis.
pub fn sample_in_complement<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    constraints: &[OrthonormalBasis],
    q: usize,
) -> Result<OrthonormalBasis> {
    let span = span_basis(constraints, n)?;
    if span.ncols() + q > n {
        return invalid(format!(
            "only {} dimensions remain outside the constraints, {} requested",
            n - span.ncols(),
            q
        ));
    }
    if q == 0 {
        return Ok(OrthonormalBasis::empty(n));
    }
    let mut g = gaussian_matrix(rng, n, q);
    // Two passes of projection keep the frame orthogonal to ~1e-15.
    for _ in 0..2 {
        let coef = span.transpose() * &g;
        g -= &span * coef;
    }
    let mut q_mat = sign_corrected_q(g);
    let coef = span.transpose() * &q_mat;
    q_mat -= &span * coef;
    Ok(OrthonormalBasis::from_trusted(q_mat))
}

/// `(MᵀM)^{-1/2}` for a full-column-rank `M`.
fn inverse_sqrt_gram(m: &Matrix) -> Result<Matrix> {
    let (vals, vecs) = sym_eigen_desc(&(m.transpose() * m))?;
    let smallest = vals.last().copied().unwrap_or(0.0).max(0.0).sqrt();
    if smallest <= 1e-10 {
        return Err(JiveError::RankDeficient { smallest });
    }
    let mut scaled = vecs.clone();
    for (j, v) in vals.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / v.sqrt());
    }
    Ok(scaled * vecs.transpose())
}

/// Cosine of the smallest principal angle between `col(v)` and `col(w)`:
/// `‖(vᵀv)^{-1/2} vᵀw (wᵀw)^{-1/2}‖_op`.
pub fn principal_angle_delta(v: &Matrix, w: &Matrix) -> Result<f64> {
    if v.nrows() != w.nrows() {
        return invalid(format!("row dimensions differ: {} vs {}", v.nrows(), w.nrows()));
    }
    ensure_nonempty(v)?;
    ensure_nonempty(w)?;
    ensure_finite(v)?;
    ensure_finite(w)?;
    let core = inverse_sqrt_gram(v)? * v.transpose() * w * inverse_sqrt_gram(w)?;
    Ok(operator_norm(&core)?.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn basis(cols: &[&[f64]]) -> OrthonormalBasis {
        let n = cols[0].len();
        let m = Matrix::from_fn(n, cols.len(), |i, j| cols[j][i]);
        OrthonormalBasis::new(m).unwrap()
    }

    #[test]
    fn svd_of_identity_and_diagonal() {
        let s = thin_svd(&Matrix::identity(3, 3)).unwrap();
        assert_eq!(s.singvals, vec![1.0, 1.0, 1.0]);

        let d = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 3.0, 2.0]));
        let s = thin_svd(&d).unwrap();
        assert_eq!(s.singvals, vec![3.0, 2.0, 1.0]);
        // leading left vector is ±e2
        assert_abs_diff_eq!(s.left.matrix()[(1, 0)].abs(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn svd_reconstructs_random_matrix() {
        let a = gaussian_matrix(&mut rng(3), 5, 3);
        let s = thin_svd(&a).unwrap();
        let resid = (s.reconstruct() - &a).norm() / a.norm();
        assert!(resid < 1e-8, "residual {resid}");
        assert!(s.singvals.windows(2).all(|w| w[0] >= w[1]));
        let wide = gaussian_matrix(&mut rng(4), 3, 7);
        let s = thin_svd(&wide).unwrap();
        assert!((s.reconstruct() - &wide).norm() / wide.norm() < 1e-8);
    }

    #[test]
    fn svd_rejects_nan() {
        let mut a = Matrix::identity(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(thin_svd(&a), Err(JiveError::InvalidInput(_))));
    }

    #[test]
    fn top_eigvecs_diag_and_rank_one() {
        let d = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![5.0, 3.0, 1.0]));
        let sl = top_r_eigvecs_sym(&d, 2).unwrap();
        assert_eq!(sl.values, vec![5.0, 3.0]);
        assert!(!sl.degenerate_gap);

        let u = nalgebra::DVector::from_vec(vec![0.6, 0.0, 0.8]);
        let p = &u * u.transpose();
        let sl = top_r_eigvecs_sym(&p, 1).unwrap();
        assert_abs_diff_eq!(sl.values[0], 1.0, epsilon = 1e-12);
        let v = sl.vectors.matrix().column(0);
        assert_abs_diff_eq!(v.dot(&u).abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn top_eigvecs_match_full_decomposition() {
        let g = gaussian_matrix(&mut rng(11), 6, 6);
        let s = &g + g.transpose();
        let sl = top_r_eigvecs_sym(&s, 3).unwrap();
        // Oracle: nalgebra's unsorted full decomposition, sorted here.
        let full = s.clone().symmetric_eigen();
        let mut vals: Vec<f64> = full.eigenvalues.iter().copied().collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        for (i, &expected) in vals.iter().take(3).enumerate() {
            assert_abs_diff_eq!(sl.values[i], expected, epsilon = 1e-10);
            let v = sl.vectors.matrix().column(i).into_owned();
            let resid = (&s * &v - &v * sl.values[i]).norm();
            assert!(resid < 1e-8);
        }
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let mut s = Matrix::identity(3, 3);
        s[(0, 2)] = 1e-6;
        assert!(top_r_eigvecs_sym(&s, 1).is_err());
    }

    #[test]
    fn tied_eigenvalues_are_flagged() {
        let s = Matrix::identity(4, 4);
        let sl = top_r_eigvecs_sym(&s, 2).unwrap();
        assert!(sl.degenerate_gap);
    }

    #[test]
    fn projector_eigenvalues_are_one() {
        let b = haar_orthonormal(&mut rng(5), 7, 3).unwrap();
        let sl = top_r_eigvecs_sym(&b.projector(), 3).unwrap();
        for v in sl.values {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn operator_norm_cases() {
        assert_eq!(operator_norm(&Matrix::zeros(3, 2)).unwrap(), 0.0);
        let d = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 7.0, 1.0]));
        assert_abs_diff_eq!(operator_norm(&d).unwrap(), 7.0, epsilon = 1e-12);

        let x = nalgebra::DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let y = nalgebra::DVector::from_vec(vec![3.0, 1.0]);
        let expected = x.norm() * y.norm();
        let a = &x * y.transpose();
        assert_abs_diff_eq!(operator_norm(&a).unwrap(), expected, epsilon = 1e-12);
        assert_abs_diff_eq!(thin_svd(&a).unwrap().singvals[0], expected, epsilon = 1e-12);
    }

    #[test]
    fn projector_distance_cases() {
        let e1 = basis(&[&[1.0, 0.0]]);
        let e2 = basis(&[&[0.0, 1.0]]);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let diag = basis(&[&[h, h]]);
        assert_abs_diff_eq!(projector_distance(&e1, &e1).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(projector_distance(&e1, &e2).unwrap(), 1.0, epsilon = 1e-15);
        // [[1,0],[0,0]] - [[.5,.5],[.5,.5]] has eigenvalues ±√2/2
        assert_abs_diff_eq!(projector_distance(&e1, &diag).unwrap(), h, epsilon = 1e-12);

        let e3 = basis(&[&[1.0, 0.0, 0.0]]);
        assert!(projector_distance(&e1, &e3).is_err());
    }

    #[test]
    fn haar_small_cases() {
        let b = haar_orthonormal(&mut rng(0), 1, 1).unwrap();
        assert_abs_diff_eq!(b.matrix()[(0, 0)].abs(), 1.0, epsilon = 1e-15);
        let b = haar_orthonormal(&mut rng(1), 9, 4).unwrap();
        assert!(orthonormality_defect(b.matrix()) < 1e-10);
        assert!(haar_orthonormal(&mut rng(1), 3, 4).is_err());
    }

    #[test]
    fn haar_is_seed_deterministic() {
        let a = haar_orthonormal(&mut rng(77), 12, 5).unwrap();
        let b = haar_orthonormal(&mut rng(77), 12, 5).unwrap();
        assert_eq!(a.matrix().as_slice(), b.matrix().as_slice());
    }

    #[test]
    fn haar_second_moment_is_isotropic() {
        // E[BBᵀ] = (q/n) I for B Haar on O_{n,q}.
        let mut r = rng(2024);
        let draws = 10_000;
        let mut acc = Matrix::zeros(4, 4);
        for _ in 0..draws {
            acc += haar_orthonormal(&mut r, 4, 1).unwrap().projector();
        }
        acc /= draws as f64;
        for i in 0..4 {
            for j in 0..4 {
                let target = if i == j { 0.25 } else { 0.0 };
                assert!((acc[(i, j)] - target).abs() < 0.03, "entry ({i},{j}) = {}", acc[(i, j)]);
            }
        }
    }

    #[test]
    fn complement_of_e1() {
        let e1 = basis(&[&[1.0, 0.0]]);
        let c = complement_basis(&e1).unwrap();
        assert_eq!(c.rank(), 1);
        assert_abs_diff_eq!(c.matrix()[(1, 0)].abs(), 1.0, epsilon = 1e-14);
        assert!(complement_basis(&basis(&[&[1.0, 0.0], &[0.0, 1.0]])).is_err());
    }

    #[test]
    fn complement_completes_to_identity() {
        let full = haar_orthonormal(&mut rng(9), 5, 5).unwrap();
        let b = full.leading(2);
        let c = complement_basis(&b).unwrap();
        assert_eq!(c.rank(), 3);
        let cross = b.matrix().transpose() * c.matrix();
        assert!(cross.amax() < 1e-10);
        let both = b.concat(&c).unwrap();
        assert!(orthonormality_defect(both.matrix()) < 1e-10);
        let sum = b.projector() + c.projector();
        assert!((sum - Matrix::identity(5, 5)).amax() < 1e-10);
    }

    #[test]
    fn complement_sampling() {
        let e1 = basis(&[&[1.0, 0.0, 0.0]]);
        let s = sample_in_complement(&mut rng(1), 3, &[e1], 1).unwrap();
        assert!(s.matrix()[(0, 0)].abs() < 1e-15);

        let mut r = rng(8);
        let c1 = haar_orthonormal(&mut r, 8, 2).unwrap();
        let c2 = haar_orthonormal(&mut r, 8, 3).unwrap();
        let s = sample_in_complement(&mut r, 8, &[c1.clone(), c2.clone()], 3).unwrap();
        assert!(orthonormality_defect(s.matrix()) < 1e-10);
        assert!((c1.matrix().transpose() * s.matrix()).amax() < 1e-10);
        assert!((c2.matrix().transpose() * s.matrix()).amax() < 1e-10);

        assert!(sample_in_complement(&mut r, 8, &[c1, c2], 4).is_err());
        // no constraints behaves like a plain Haar draw
        let a = sample_in_complement(&mut rng(3), 6, &[], 2).unwrap();
        let b = haar_orthonormal(&mut rng(3), 6, 2).unwrap();
        assert_eq!(a.matrix(), b.matrix());
    }

    #[test]
    fn delta_cases() {
        let e1 = Matrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let e2 = Matrix::from_column_slice(2, 1, &[0.0, 3.0]);
        let diag = Matrix::from_column_slice(2, 1, &[1.0, 1.0]);
        assert_abs_diff_eq!(principal_angle_delta(&e1, &e2).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(principal_angle_delta(&e1, &e1).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            principal_angle_delta(&e1, &diag).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-12
        );
        let deficient = Matrix::from_column_slice(2, 2, &[1.0, 0.0, 2.0, 0.0]);
        assert!(matches!(principal_angle_delta(&deficient, &e1), Err(JiveError::RankDeficient { .. })));
    }

    #[test]
    fn svd_and_gram_spectra_agree() {
        let a = gaussian_matrix(&mut rng(21), 7, 4);
        let s = thin_svd(&a).unwrap().singvals;
        let g = a.transpose() * &a;
        let sl = top_r_eigvecs_sym(&g, 4).unwrap();
        for (sv, ev) in s.iter().zip(sl.values.iter()) {
            assert!((sv - ev.sqrt()).abs() / sv < 1e-8);
        }
    }
}
