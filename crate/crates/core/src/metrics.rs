//! Subspace recovery error and cluster separation.

use crate::error::{invalid, Result};
use crate::linalg::{self, Matrix, OrthonormalBasis};

/// `‖Û Ûᵀ − U Uᵀ‖_op`, in `[0, 1]`.
pub fn subspace_error(u_hat: &OrthonormalBasis, u_true: &OrthonormalBasis) -> Result<f64> {
    if u_hat.rank() != u_true.rank() {
        return invalid(format!("rank mismatch: estimate {} vs truth {}", u_hat.rank(), u_true.rank()));
    }
    linalg::projector_distance(u_hat, u_true)
}

/// Rows of an embedding with an integer class label each.
#[derive(Debug, Clone)]
pub struct LabeledEmbedding {
    points: Matrix,
    labels: Vec<usize>,
}

impl LabeledEmbedding {
    pub fn new(points: Matrix, labels: Vec<usize>) -> Result<Self> {
        if points.nrows() != labels.len() {
            return invalid(format!("{} points but {} labels", points.nrows(), labels.len()));
        }
        if points.nrows() == 0 {
            return invalid("embedding has no points");
        }
        linalg::ensure_finite(&points)?;
        Ok(Self { points, labels })
    }

    pub fn points(&self) -> &Matrix {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }
}

/// Within-class over total sum of squares; lower means tighter classes.
///
/// A cloud with zero total spread scores 0.
pub fn swiss_score(emb: &LabeledEmbedding) -> f64 {
    let x = &emb.points;
    let p = x.ncols();
    let grand = x.row_sum() / x.nrows() as f64;
    let total: f64 = x.row_iter().map(|r| (r - &grand).norm_squared()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let mut classes: Vec<usize> = emb.labels.clone();
    classes.sort_unstable();
    classes.dedup();
    let mut within = 0.0;
    for c in classes {
        let rows: Vec<usize> = (0..x.nrows()).filter(|&i| emb.labels[i] == c).collect();
        let mut centroid = nalgebra::RowDVector::<f64>::zeros(p);
        for &i in &rows {
            centroid += x.row(i);
        }
        centroid /= rows.len() as f64;
        within += rows.iter().map(|&i| (x.row(i) - &centroid).norm_squared()).sum::<f64>();
    }
    within / total
}
