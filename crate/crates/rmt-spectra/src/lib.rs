//! Local spectral statistics of random matrices and neural-network
//! curvature.
//!
//! `rmt-spectra` samples classical random-matrix ensembles, computes
//! exact Hessian and Gauss-Newton matrices of small multilayer
//! perceptrons, reduces both to eigenvalue spectra with a dense
//! symmetric solver, and compares their local fluctuation statistics
//! (nearest-neighbour spacings after unfolding, consecutive spacing
//! ratios) against the Wigner-surmise, ratio-surmise, and Poisson
//! reference laws.
//!
//! The primary interface is the `examples/` directory; each example is
//! a runnable walkthrough of one capability.
//!
//! ## Directory structure
//!
//! ```text
//! examples/
//! ├── goe_spacings.rs           # GOE sampling, analytic unfolding, KS vs Wigner
//! ├── spacing_ratios.rs         # consecutive spacing ratios and the ratio surmise
//! ├── poisson_contrast.rs       # Poisson baseline vs GOE discrimination
//! ├── two_by_two_surmise.rs     # 2x2 GOE spacings reproduce the surmise exactly
//! ├── gp_hessian_sweep.rs       # Gaussian-process Hessian ensemble, padding, outliers
//! ├── hessian_autodiff_check.rs # exact MLP Hessians vs finite differences
//! └── bike_pipeline.rs          # CSV ingestion, SGD training, batch Hessian spectra
//! ```
//!
//! ## Ensemble examples
//!
//! - **`goe_spacings`** - sample Gaussian orthogonal ensemble matrices,
//!   unfold with the integrated semicircle law, test spacings against
//!   the Wigner surmise
//! - **`spacing_ratios`** - unfolding-free statistics: consecutive
//!   spacing ratios against the ratio surmise, with truncation
//! - **`poisson_contrast`** - uncorrelated spectra follow the
//!   exponential law and are far from Wigner
//! - **`two_by_two_surmise`** - the 2x2 ensemble where the surmise is
//!   exact, at large sample size
//!
//! ```bash
//! cargo run --release --example goe_spacings
//! cargo run --release --example spacing_ratios
//! cargo run --release --example poisson_contrast
//! cargo run --release --example two_by_two_surmise
//! ```
//!
//! ## Structured-ensemble examples
//!
//! - **`gp_hessian_sweep`** - the isotropic Gaussian-process Hessian
//!   ensemble across kernel settings, plus zero-padding and diagonal
//!   outliers, showing local statistics stay Wigner while the global
//!   density deforms
//!
//! ```bash
//! cargo run --release --example gp_hessian_sweep
//! ```
//!
//! ## Network-curvature examples
//!
//! - **`hessian_autodiff_check`** - exact Hessians by forward-over-
//!   reverse differentiation, validated against finite differences and
//!   closed forms
//! - **`bike_pipeline`** - end to end: CSV ingestion, SGD training of a
//!   regression MLP, per-batch Hessian spectra, ratio statistics
//!
//! ```bash
//! cargo run --release --example hessian_autodiff_check
//! cargo run --release --example bike_pipeline
//! ```
//!
//! ## Command-line interface
//!
//! The same pipelines are scriptable through the `rmt-spectra` binary
//! (`sample`, `analyze`, `experiment`, `train` subcommands); see the
//! repository README for flags and output formats.
//!
//! ## Determinism
//!
//! Every sampler and pipeline takes an explicit [`ensembles::RngSeed`];
//! identical seeds give bitwise-identical matrices, spectra, and output
//! files, including under the worker pool controlled by the
//! `RMT_SPECTRA_WORKERS` environment variable.

pub mod eigensolve;
pub mod ensembles;
pub mod error;
pub mod localstats;
pub mod matrix;
pub mod nets;
pub mod numeric;
pub mod report;
pub mod unfold;

pub use error::{Error, Result};
