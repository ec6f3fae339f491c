//! Gaussian mixture maximum-likelihood estimation by monotone surrogate
//! ascent.
//!
//! The fitter maximizes the mixture log-likelihood through a sequence of
//! global lower bounds: at the current iterate, posterior component
//! probabilities (responsibilities) define a concave surrogate that touches
//! the log-likelihood there, and its exact maximizer gives the familiar
//! closed-form weight, mean, and covariance updates. Each step therefore
//! never decreases the log-likelihood.
//!
//! The [`verifier`] module makes that argument checkable at runtime: it
//! builds the surrogate explicitly and certifies minorization, tangency, and
//! monotone ascent numerically, plus the equivalence of the two published
//! responsibility formulations.
//!
//! All density work happens in log space through Cholesky factors; the
//! covariance inverse is never formed. Fitting and sampling are deterministic
//! functions of their seeds.

pub mod cli;
pub mod error;
pub mod fitter;
pub mod gaussian;
pub mod io;
pub mod linalg;
pub mod mixture;
pub mod sampler;
pub mod verifier;

pub use error::{Error, Result};
pub use fitter::{fit, mm_step, FitConfig, FitTrace, InitMethod, TerminationReason};
pub use gaussian::GaussianComponent;
pub use linalg::{SpdMatrix, SquareMat};
pub use mixture::{log_sum_exp, DataSet, MixtureModel, ResponsibilityMatrix};
pub use sampler::{sample_dataset, RandomSource};
pub use verifier::{check_ascent, check_minorization, check_update_equivalence, SurrogateReport};
