//! Least-squares fitting of fractional growth, cooling and epidemic models.
//!
//! Every model here is the solution of a linear differential equation whose
//! ordinary derivative has been replaced by a Caputo-type derivative taken
//! with respect to an increasing kernel function ψ. Fitting the order α and
//! the kernel alongside the rate parameters lets the classical model
//! (α = 1, ψ(x) = x) be compared against its fractional generalisations on
//! the same data.
//!
//! The crate is organised bottom-up:
//!
//! - [`specfun`]: Gamma and one-parameter Mittag-Leffler functions.
//! - [`kernels`]: the four kernel families and their domains.
//! - [`fracops`]: ψ-fractional integral and ψ-Caputo derivative by quadrature.
//! - [`models`]: closed-form and single-quadrature model solutions.
//! - [`fit`]: SSE objective, multi-start fitting, kernel selection, efficiency.
//! - [`dataio`]: CSV ingestion, dataset manifests, JSON result files.
//! - [`cli`]: the `fracfit` command line front end.

pub mod cli;
pub mod dataio;
pub mod fit;
pub mod fracops;
pub mod kernels;
pub mod models;
pub mod quadrature;
pub mod specfun;

pub use fit::{
    efficiency, fit, prediction_error, select_kernel, sse, FitConfig, FitError, FitResult,
    KernelCandidate, TimeSeries,
};
pub use fracops::{caputo_derivative, frac_integral, FractionalOrder, QuadratureConfig};
pub use kernels::{Kernel, KernelFamily};
pub use models::{model_eval, model_eval_series, ModelFamily, ModelParams, ModelSpec};
pub use specfun::{gamma, ln_gamma, mittag_leffler, MlEvalConfig};
