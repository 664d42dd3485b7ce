//! Run configuration, spectrum serialization, analysis bundles, SVG
//! rendering, and the command implementations behind the CLI.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod spectra;
pub mod svg;
