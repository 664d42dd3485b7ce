//! Small fully connected networks with exact curvature: architecture
//! and flat parameter layout, reverse-mode gradients,
//! forward-over-reverse Hessian-vector products and dense Hessians,
//! Gauss-Newton spectra, an SGD trainer, and dataset ingestion.

pub mod autodiff;
pub mod data;
pub mod mlp;
pub mod train;

