//! Weighted two-stage spectral estimation of the joint subspace shared by
//! several data matrices observed on the same units.
//!
//! Each view `A_k` (`n × d_k`) is modelled as
//! `A_k = U V_kᵀ + U_k W_kᵀ + E_k` with `Uᵀ U_k = 0`. The estimator takes the
//! top `r + r_k` left singular vectors of every view, forms the weighted
//! projector average `Σ w_k Ũ_k Ũ_kᵀ`, and returns its top `r` eigenvectors.
//! Equal weights give AJIVE; [`weighting`] computes weights that adapt to
//! per-view noise and to how the individual subspaces overlap.
//!
//! ```
//! use heterojive::{estimators, model::*, seed::rng_from_seed, metrics::subspace_error};
//!
//! let spec = TruthSpec {
//!     n: 20,
//!     widths: vec![30; 4],
//!     ranks: RankSpec::uniform(2, 2, 4).unwrap(),
//!     scheme: LoadingScheme::Random,
//!     construction: SubspaceConstruction::Aligned { theta: 0.5 },
//!     s_k: vec![1.0; 4],
//!     gamma: 1.0,
//!     sigma_k: vec![0.0; 4],
//! };
//! let mut rng = rng_from_seed(1);
//! let truth = spec.build(&mut rng).unwrap();
//! let data = synthesize_views(&mut rng, &truth).unwrap();
//! let fit = estimators::ajive(&data, &truth.ranks()).unwrap();
//! assert!(subspace_error(&fit.u_hat, &truth.u).unwrap() < 1e-8);
//! ```

pub mod error;
pub mod estimators;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod seed;
pub mod sim;
pub mod weighting;

pub use error::{JiveError, Result};
pub use estimators::{ajive, heterojive, stack_svd, JiveFit, WeightVector};
pub use linalg::{Matrix, OrthonormalBasis};
pub use model::{JiveGroundTruth, MultiViewData, RankSpec};
