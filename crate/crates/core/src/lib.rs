//! Random-feature kernel machines.
//!
//! The crate approximates shift-invariant kernel regression and
//! classification with explicit randomized feature maps `z(x)` whose inner
//! products approximate an exact kernel, and solves the resulting ridge
//! problem in the primal (a `D x D` system) instead of the dual (`n x n`).
//!
//! * [`kernels`]: exact kernel functions and Gram matrices, used as oracles.
//! * [`features`]: Fourier, square-wave, Walsh, stump and binning feature maps.
//! * [`solvers`]: linear ridge, kernel ridge and random-feature ridge models.
//! * [`modelsel`]: k-fold cross-validated grid search.
//! * [`data`], [`rng`], [`standardize`]: shared containers and plumbing.

pub mod data;
pub mod error;
pub mod features;
pub mod kernels;
pub mod modelsel;
pub mod rng;
pub mod solvers;
pub mod standardize;

pub use data::{Dataset, DenseMatrix, Task};
pub use error::{Error, Result};
pub use features::{FeatureFamily, FeatureMapSpec, FittedFeatureMap};
pub use kernels::KernelSpec;
pub use modelsel::{cross_validate, kfold_split, CvReport, GridSpec, Method, Metric};
pub use rng::RngStream;
pub use solvers::{
    fit_krr, fit_lr, fit_rks, predict, predict_class, solve_spd, FitModel, FitOptions, ModelKind,
    SolveOptions,
};
pub use standardize::Standardizer;
