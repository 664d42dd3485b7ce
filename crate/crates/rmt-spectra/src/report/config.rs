//! Serializable run configuration shared by every subcommand.
//!
//! A config file is a single JSON object. Which parts are required
//! depends on the command: `sample` and `experiment` need a `source`,
//! `analyze` needs an `input` pointing at a spectra file, and `train`
//! needs a network source. The `analysis` section always has usable
//! defaults and the seed-bearing fields can be overridden from the
//! command line.
//!
//! Sub-seeds for a network run derive from the source seed by fixed
//! offsets: +0 weight initialization, +1 training shuffles, +2 the
//! train/test split, +3 and up the per-pass batch partitions. A run is
//! therefore a pure function of its (echoed) config.

use crate::ensembles::RngSeed;
use crate::error::{Error, Result};
use crate::nets::data::CsvSchema;
use crate::nets::mlp::OutputHead;
use crate::nets::train::TrainConfig;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// Default degeneracy cutoff for near-zero eigenvalue removal.
pub const DEFAULT_DEGENERACY_CUTOFF: f64 = 1e-20;
/// Default number of histogram bins.
pub const DEFAULT_BINS: usize = 50;

/// Top-level configuration object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// What to sample or compute spectra from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceConfig>,
    /// Existing spectra file for `analyze`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    /// Output directory; the `--out-dir` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

/// Where spectra come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SourceConfig {
    Ensemble(EnsembleSource),
    Network(NetworkSource),
}

/// Random-matrix ensemble source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSource {
    pub kind: EnsembleKind,
    pub dim: usize,
    /// GOE scale; ignored by the other kinds. Defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Gaussian-process kernel offset (gp_hessian only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<f64>,
    /// Gaussian-process kernel scale (gp_hessian only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<f64>,
    /// Zero-pad each matrix up to this dimension before eigensolving.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pad_to: Option<usize>,
    /// Shift this many random diagonal entries by a fixed magnitude.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outliers: Option<OutlierConfig>,
    pub n_samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    Goe,
    GpHessian,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutlierConfig {
    pub count: usize,
    pub magnitude: f64,
}

/// Neural-network curvature source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSource {
    /// Layer widths, input and output included.
    pub architecture: Vec<usize>,
    pub head: OutputHead,
    pub dataset: DatasetSource,
    /// Train before computing curvature; `false` analyzes the freshly
    /// initialized network.
    #[serde(default = "default_true")]
    pub trained: bool,
    /// Overrides the standard training recipe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_config: Option<TrainConfig>,
    pub matrix: MatrixKind,
    /// Which split the curvature batches are drawn from.
    #[serde(default)]
    pub split: SplitKind,
    /// Rows per curvature batch; 0 uses the whole chosen split as one
    /// batch.
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    pub n_matrices: usize,
    /// Fraction of rows assigned to the training split.
    #[serde(default = "default_split_fraction")]
    pub split_fraction: f64,
    /// Standardize features with training-split statistics.
    #[serde(default = "default_true")]
    pub standardize: bool,
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

fn default_batch_size() -> usize {
    64
}

fn default_split_fraction() -> f64 {
    2.0 / 3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSource {
    /// Load an existing CSV file.
    Csv { path: PathBuf, schema: CsvSchema },
    /// Generate the synthetic hourly bike CSV into the output
    /// directory, then ingest it through the bike schema.
    SyntheticBike { rows: usize, seed: u64 },
    /// Multinomial-logit classification data.
    SyntheticSoftmax {
        n: usize,
        input_dim: usize,
        n_classes: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Hessian,
    GaussNewton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplitKind {
    Train,
    #[default]
    Test,
}

/// Statistics, reference laws, unfolding, and histogram parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    #[serde(default = "default_statistics")]
    pub statistics: Vec<Statistic>,
    #[serde(default)]
    pub unfolding: UnfoldingMode,
    #[serde(default = "default_cutoff")]
    pub degeneracy_cutoff: f64,
    /// Spacing ratios above this value are dropped.
    #[serde(default = "default_truncation")]
    pub truncation: f64,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Histogram range; defaults to (0, 4) for spacings and
    /// (0, truncation) for ratios.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<(f64, f64)>,
    /// Headline reference law; defaults to Wigner for spacings and the
    /// ratio surmise for ratios. Alternatives are always reported.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<Reference>,
}

fn default_statistics() -> Vec<Statistic> {
    vec![Statistic::Spacings]
}

fn default_cutoff() -> f64 {
    DEFAULT_DEGENERACY_CUTOFF
}

fn default_truncation() -> f64 {
    crate::localstats::DEFAULT_RATIO_TRUNCATION
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            statistics: default_statistics(),
            unfolding: UnfoldingMode::default(),
            degeneracy_cutoff: default_cutoff(),
            truncation: default_truncation(),
            bins: default_bins(),
            range: None,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Spacings,
    Ratios,
}

impl Statistic {
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Spacings => "spacings",
            Statistic::Ratios => "ratios",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum UnfoldingMode {
    /// Integrated semicircle law with the scale fitted from the pooled
    /// eigenvalues.
    Analytic,
    /// Pooled empirical counting function on a held-out fit split.
    Empirical { fit_fraction: f64, seed: u64 },
}

impl Default for UnfoldingMode {
    fn default() -> Self {
        UnfoldingMode::Empirical {
            fit_fraction: 2.0 / 3.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    Wigner,
    Poisson,
    RatioSurmise,
}

impl Reference {
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            Reference::Wigner => "wigner",
            Reference::Poisson => "poisson",
            Reference::RatioSurmise => "ratio_surmise",
        }
    }
}

impl ExperimentConfig {
    /// Reads and validates a config file.
    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    /// Structural checks that do not need data: positive dimensions,
    /// coherent kernel/outlier parameters, and enough spectra for the
    /// requested unfolding.
    pub fn validate(&self) -> Result<()> {
        if let Some(source) = &self.source {
            source.validate()?;
            if let UnfoldingMode::Empirical { .. } = self.analysis.unfolding {
                if source.n_matrices() < 3 {
                    return Err(Error::validation(format!(
                        "empirical unfolding needs at least 3 spectra, got {}",
                        source.n_matrices()
                    )));
                }
            }
        }
        self.analysis.validate()
    }

    /// Applies command-line overrides and re-validates.
    pub fn with_overrides(
        mut self,
        seed: Option<u64>,
        cutoff: Option<f64>,
        truncation: Option<f64>,
        bins: Option<usize>,
    ) -> Result<Self> {
        if let Some(seed) = seed {
            match &mut self.source {
                Some(SourceConfig::Ensemble(e)) => e.seed = seed,
                Some(SourceConfig::Network(n)) => n.seed = seed,
                None => {
                    return Err(Error::validation(
                        "--seed was given but the config has no source",
                    ))
                }
            }
        }
        if let Some(cutoff) = cutoff {
            self.analysis.degeneracy_cutoff = cutoff;
        }
        if let Some(truncation) = truncation {
            self.analysis.truncation = truncation;
        }
        if let Some(bins) = bins {
            self.analysis.bins = bins;
        }
        self.validate()?;
        Ok(self)
    }
}

impl SourceConfig {
    #[must_use]
    pub fn n_matrices(&self) -> usize {
        match self {
            SourceConfig::Ensemble(e) => e.n_samples,
            SourceConfig::Network(n) => n.n_matrices,
        }
    }

    #[must_use]
    pub fn seed(&self) -> RngSeed {
        match self {
            SourceConfig::Ensemble(e) => RngSeed(e.seed),
            SourceConfig::Network(n) => RngSeed(n.seed),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SourceConfig::Ensemble(e) => e.validate(),
            SourceConfig::Network(n) => n.validate(),
        }
    }
}

impl EnsembleSource {
    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::validation("ensemble dim must be at least 1"));
        }
        if self.n_samples == 0 {
            return Err(Error::validation("n_samples must be at least 1"));
        }
        match self.kind {
            EnsembleKind::Goe => {
                if self.k1.is_some() || self.k2.is_some() {
                    return Err(Error::validation("k1/k2 only apply to gp_hessian"));
                }
            }
            EnsembleKind::GpHessian => {
                if self.k1.is_none() || self.k2.is_none() {
                    return Err(Error::validation("gp_hessian needs both k1 and k2"));
                }
            }
            EnsembleKind::Poisson => {
                if self.sigma.is_some() || self.k1.is_some() || self.k2.is_some() {
                    return Err(Error::validation(
                        "poisson takes no sigma or kernel parameters",
                    ));
                }
                if self.pad_to.is_some() || self.outliers.is_some() {
                    return Err(Error::validation(
                        "padding and outliers apply to matrix ensembles only",
                    ));
                }
            }
        }
        if let Some(pad) = self.pad_to {
            if pad < self.dim {
                return Err(Error::validation(format!(
                    "pad_to {pad} is smaller than dim {}",
                    self.dim
                )));
            }
        }
        if let Some(out) = &self.outliers {
            if out.count > self.dim {
                return Err(Error::validation(format!(
                    "{} outliers exceed dim {}",
                    out.count, self.dim
                )));
            }
            if !out.magnitude.is_finite() {
                return Err(Error::validation("outlier magnitude must be finite"));
            }
        }
        Ok(())
    }
}

impl NetworkSource {
    fn validate(&self) -> Result<()> {
        if self.architecture.len() < 2 {
            return Err(Error::validation(
                "architecture needs at least input and output widths",
            ));
        }
        if self.n_matrices == 0 {
            return Err(Error::validation("n_matrices must be at least 1"));
        }
        if self.batch_size == 0 && self.n_matrices != 1 {
            return Err(Error::validation(
                "batch_size 0 (full split) implies a single matrix",
            ));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::validation(
                "split_fraction must lie strictly between 0 and 1",
            ));
        }
        match &self.dataset {
            DatasetSource::Csv { path, .. } => {
                if path.as_os_str().is_empty() {
                    return Err(Error::validation("dataset path is empty"));
                }
            }
            DatasetSource::SyntheticBike { rows, .. } => {
                if *rows < 3 {
                    return Err(Error::validation("synthetic bike needs at least 3 rows"));
                }
            }
            DatasetSource::SyntheticSoftmax {
                n,
                input_dim,
                n_classes,
                ..
            } => {
                if *n < 3 || *input_dim == 0 || *n_classes < 2 {
                    return Err(Error::validation(
                        "synthetic softmax needs n >= 3, input_dim >= 1, n_classes >= 2",
                    ));
                }
            }
        }
        Ok(())
    }
}

impl AnalysisConfig {
    fn validate(&self) -> Result<()> {
        if self.statistics.is_empty() {
            return Err(Error::validation("at least one statistic is required"));
        }
        if !(self.degeneracy_cutoff > 0.0) || !self.degeneracy_cutoff.is_finite() {
            return Err(Error::validation(
                "degeneracy_cutoff must be positive and finite",
            ));
        }
        if !(self.truncation > 0.0) || !self.truncation.is_finite() {
            return Err(Error::validation("truncation must be positive and finite"));
        }
        if self.bins == 0 {
            return Err(Error::validation("bins must be at least 1"));
        }
        if let Some((lo, hi)) = self.range {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::validation("histogram range must be finite with lo < hi"));
            }
        }
        if let UnfoldingMode::Empirical { fit_fraction, .. } = self.unfolding {
            if !(fit_fraction > 0.0 && fit_fraction < 1.0) {
                return Err(Error::validation(
                    "fit_fraction must lie strictly between 0 and 1",
                ));
            }
        }
        Ok(())
    }

    /// Headline reference for a statistic. An override only applies to
    /// the statistic it makes sense for; ratios always compare against
    /// the ratio surmise.
    #[must_use]
    pub fn reference_for(&self, statistic: Statistic) -> Reference {
        match (statistic, self.reference) {
            (Statistic::Spacings, Some(r @ (Reference::Wigner | Reference::Poisson))) => r,
            (Statistic::Spacings, _) => Reference::Wigner,
            (Statistic::Ratios, _) => Reference::RatioSurmise,
        }
    }

    /// Histogram range for a statistic, honoring the override.
    #[must_use]
    pub fn range_for(&self, statistic: Statistic) -> (f64, f64) {
        self.range.unwrap_or(match statistic {
            Statistic::Spacings => (0.0, 4.0),
            Statistic::Ratios => (0.0, self.truncation),
        })
    }
}
