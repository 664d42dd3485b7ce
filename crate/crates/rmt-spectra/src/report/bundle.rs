//! The shared analysis pipeline and its on-disk artifact bundle.
//!
//! Every command that analyzes spectra funnels through [`run_analysis`]:
//! degeneracy filtering, unfolding, statistic extraction, goodness of
//! fit, histograms, SVG overlays, and a single `summary.json` that
//! echoes the effective configuration. Sample values are written to
//! `samples_<statistic>.csv` with round-trippable formatting, so the
//! reported KS statistic can be recomputed exactly from the CSV alone.

use crate::eigensolve::Spectrum;
use crate::error::{Error, Result};
use crate::localstats::{
    self, histogram, ks_statistic, spacing_ratios_with_truncation, SpectralHistogram,
};
use crate::report::config::{AnalysisConfig, ExperimentConfig, Reference, Statistic, UnfoldingMode};
use crate::report::spectra::SpectrumRecord;
use crate::report::svg::{render_overlay, sample_curve, ReferenceCurve};
use crate::unfold::{
    build_empirical_cdf, filter_degenerate, split_pool, unfold, SpectrumPool, SplitConfig,
    UnfoldingMap,
};
use crate::ensembles::RngSeed;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

/// Per-statistic portion of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticSummary {
    pub statistic: String,
    pub n_samples: usize,
    /// Headline reference law.
    pub reference: String,
    pub ks_statistic: f64,
    /// KS against every applicable law, headline included.
    pub ks_alternatives: BTreeMap<String, f64>,
    pub mean: f64,
    /// Fraction of samples outside the histogram range.
    pub clipped_fraction: f64,
    /// Spectra that contributed no samples to this statistic.
    pub skipped_spectra: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dropped_ratios: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fraction_within_truncation: Option<f64>,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    pub n_spectra: usize,
    /// Pool-wide fraction of eigenvalues removed by the degeneracy
    /// filter.
    pub removed_degenerate_fraction: f64,
    pub statistics: Vec<StatisticSummary>,
    /// Effective configuration; rerunning it reproduces the bundle.
    pub config: ExperimentConfig,
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub extras: serde_json::Map<String, serde_json::Value>,
}

/// A completed bundle: the summary plus every file written.
#[derive(Debug, Clone)]
pub struct ReportBundle {
    pub summary: RunSummary,
    pub files: Vec<PathBuf>,
}

fn law_cdf(reference: Reference) -> impl Fn(f64) -> f64 {
    move |x| {
        let value = match reference {
            Reference::Wigner => localstats::wigner_surmise_cdf(x),
            Reference::Poisson => localstats::poisson_spacing_cdf(x),
            Reference::RatioSurmise => localstats::ratio_surmise_cdf(x),
        };
        value.unwrap_or(f64::NAN)
    }
}

fn law_pdf(reference: Reference) -> impl Fn(f64) -> f64 {
    move |x| {
        let value = match reference {
            Reference::Wigner => localstats::wigner_surmise_pdf(x),
            Reference::Poisson => localstats::poisson_spacing_pdf(x),
            Reference::RatioSurmise => localstats::ratio_surmise_pdf(x),
        };
        value.unwrap_or(f64::NAN)
    }
}

fn alternatives_for(statistic: Statistic) -> &'static [Reference] {
    match statistic {
        Statistic::Spacings => &[Reference::Wigner, Reference::Poisson],
        Statistic::Ratios => &[Reference::RatioSurmise],
    }
}

struct FilteredPool {
    spectra: Vec<Spectrum>,
    removed_fraction: f64,
    /// Records whose spectra were fully degenerate.
    empty: usize,
}

fn filter_records(records: &[SpectrumRecord], cutoff: f64) -> Result<FilteredPool> {
    let mut spectra = Vec::with_capacity(records.len());
    let mut removed = 0usize;
    let mut total = 0usize;
    let mut empty = 0usize;
    for record in records {
        let outcome = filter_degenerate(&record.spectrum()?, cutoff)?;
        removed += outcome.removed;
        total += outcome.total;
        if outcome.spectrum.is_empty() {
            eprintln!(
                "warning: spectrum {} is fully degenerate at cutoff {cutoff}; skipping",
                record.matrix_id
            );
            empty += 1;
            continue;
        }
        spectra.push(outcome.spectrum);
    }
    if spectra.is_empty() {
        return Err(Error::validation(
            "no spectra survive the degeneracy filter",
        ));
    }
    Ok(FilteredPool {
        spectra,
        removed_fraction: if total == 0 {
            0.0
        } else {
            removed as f64 / total as f64
        },
        empty,
    })
}

/// Pooled scale estimate for the analytic map: the root mean square
/// eigenvalue over the square root of the (average) matrix dimension.
fn pooled_sigma(spectra: &[Spectrum]) -> Result<f64> {
    let pooled: Vec<f64> = spectra
        .iter()
        .flat_map(|s| s.values().iter().copied())
        .collect();
    let mean_dim = (pooled.len() as f64 / spectra.len() as f64).round().max(1.0) as usize;
    localstats::fit_semicircle_sigma(&pooled, mean_dim)
}

/// Unfolded nearest-neighbour spacings pooled over the analysis
/// spectra, plus the count of spectra that yielded no spacings.
fn collect_spacings(pool: &FilteredPool, analysis: &AnalysisConfig) -> Result<(Vec<f64>, usize)> {
    let mut samples = Vec::new();
    let mut skipped = pool.empty;
    match analysis.unfolding {
        UnfoldingMode::Analytic => {
            let sigma = pooled_sigma(&pool.spectra)?;
            for spectrum in &pool.spectra {
                if spectrum.len() < 2 {
                    skipped += 1;
                    continue;
                }
                let map = UnfoldingMap::analytic_goe(spectrum.len(), sigma)?;
                samples.extend_from_slice(unfold(spectrum, &map)?.spacings());
            }
        }
        UnfoldingMode::Empirical { fit_fraction, seed } => {
            let input = SpectrumPool::with_provenance(
                pool.spectra.clone(),
                "analysis input".to_string(),
            )?;
            let split = SplitConfig {
                fit_fraction,
                seed: RngSeed(seed),
            };
            let (fit, rest) = split_pool(&input, &split)?;
            let map = build_empirical_cdf(&fit)?;
            for spectrum in rest.spectra() {
                if spectrum.len() < 2 {
                    skipped += 1;
                    continue;
                }
                samples.extend_from_slice(unfold(spectrum, &map)?.spacings());
            }
        }
    }
    Ok((samples, skipped))
}

struct RatioPool {
    samples: Vec<f64>,
    dropped: usize,
    skipped: usize,
}

fn collect_ratios(pool: &FilteredPool, truncation: f64) -> Result<RatioPool> {
    let mut samples = Vec::new();
    let mut dropped = 0usize;
    let mut skipped = pool.empty;
    for spectrum in &pool.spectra {
        if spectrum.len() < 3 {
            skipped += 1;
            continue;
        }
        let sample = spacing_ratios_with_truncation(spectrum, truncation)?;
        dropped += sample.dropped;
        samples.extend_from_slice(&sample.ratios);
    }
    Ok(RatioPool {
        samples,
        dropped,
        skipped,
    })
}

fn write_samples_csv(path: &Path, samples: &[f64]) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    out.write_all(b"value\n")?;
    for v in samples {
        writeln!(out, "{v}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads back a `samples_<statistic>.csv` file.
pub fn read_samples_csv(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("value") => {}
        other => {
            return Err(Error::schema(format!(
                "{}: expected a 'value' header, got {other:?}",
                path.display()
            )))
        }
    }
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let v: f64 = line.trim().parse().map_err(|_| {
            Error::schema(format!("{}: bad number on line {}", path.display(), i + 2))
        })?;
        samples.push(v);
    }
    Ok(samples)
}

fn write_histogram_csv(path: &Path, hist: &SpectralHistogram) -> Result<()> {
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    out.write_all(b"bin_left,bin_right,count,density\n")?;
    for i in 0..hist.counts.len() {
        writeln!(
            out,
            "{},{},{},{}",
            hist.bin_edges[i],
            hist.bin_edges[i + 1],
            hist.counts[i],
            hist.density[i]
        )?;
    }
    out.flush()?;
    Ok(())
}

fn analyze_statistic(
    statistic: Statistic,
    pool: &FilteredPool,
    analysis: &AnalysisConfig,
    out_dir: &Path,
    files: &mut Vec<PathBuf>,
) -> Result<StatisticSummary> {
    let (samples, skipped, dropped) = match statistic {
        Statistic::Spacings => {
            let (samples, skipped) = collect_spacings(pool, analysis)?;
            (samples, skipped, None)
        }
        Statistic::Ratios => {
            let ratios = collect_ratios(pool, analysis.truncation)?;
            (ratios.samples, ratios.skipped, Some(ratios.dropped))
        }
    };
    if samples.is_empty() {
        return Err(Error::validation(format!(
            "no {} samples survive filtering",
            statistic.name()
        )));
    }

    let headline = analysis.reference_for(statistic);
    let mut ks_alternatives = BTreeMap::new();
    for &law in alternatives_for(statistic) {
        let report = ks_statistic(&samples, law.name(), law_cdf(law))?;
        ks_alternatives.insert(law.name().to_string(), report.ks_statistic);
    }
    let ks = ks_alternatives[headline.name()];

    let range = analysis.range_for(statistic);
    let hist = histogram(&samples, analysis.bins, range)?;

    let samples_path = out_dir.join(format!("samples_{}.csv", statistic.name()));
    write_samples_csv(&samples_path, &samples)?;
    files.push(samples_path);

    let hist_path = out_dir.join(format!("histogram_{}.csv", statistic.name()));
    write_histogram_csv(&hist_path, &hist)?;
    files.push(hist_path);

    let mut curves = Vec::new();
    let mut laws: Vec<Reference> = vec![headline];
    for &law in alternatives_for(statistic) {
        if law != headline {
            laws.push(law);
        }
    }
    for law in &laws {
        curves.push(ReferenceCurve {
            label: law.name(),
            points: sample_curve(law_pdf(*law), range.0, range.1, 240),
        });
    }
    let svg = render_overlay(
        &hist,
        &curves,
        &format!("{} vs {}", statistic.name(), headline.name()),
        statistic.name(),
    );
    let svg_path = out_dir.join(format!("overlay_{}.svg", statistic.name()));
    std::fs::write(&svg_path, svg)?;
    files.push(svg_path);

    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let kept = samples.len();
    Ok(StatisticSummary {
        statistic: statistic.name().to_string(),
        n_samples: kept,
        reference: headline.name().to_string(),
        ks_statistic: ks,
        ks_alternatives,
        mean,
        clipped_fraction: hist.clipped_fraction(),
        skipped_spectra: skipped,
        dropped_ratios: dropped,
        fraction_within_truncation: dropped.map(|d| {
            if kept + d == 0 {
                0.0
            } else {
                kept as f64 / (kept + d) as f64
            }
        }),
    })
}

/// Runs the full analysis pipeline over `records` and writes the
/// artifact bundle into `out_dir`.
pub fn run_analysis(
    command: &str,
    records: &[SpectrumRecord],
    config: &ExperimentConfig,
    out_dir: &Path,
    extras: serde_json::Map<String, serde_json::Value>,
) -> Result<ReportBundle> {
    std::fs::create_dir_all(out_dir)?;
    let analysis = &config.analysis;
    let pool = filter_records(records, analysis.degeneracy_cutoff)?;

    let mut files = Vec::new();
    let mut statistics = Vec::new();
    for &statistic in &analysis.statistics {
        statistics.push(analyze_statistic(
            statistic, &pool, analysis, out_dir, &mut files,
        )?);
    }

    let summary = RunSummary {
        command: command.to_string(),
        n_spectra: records.len(),
        removed_degenerate_fraction: pool.removed_fraction,
        statistics,
        config: config.clone(),
        extras,
    };
    let summary_path = out_dir.join("summary.json");
    write_summary(&summary_path, &summary)?;
    files.push(summary_path);

    Ok(ReportBundle { summary, files })
}

/// Writes a summary as pretty-printed JSON with a trailing newline.
pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads a `summary.json` back.
pub fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes the pooled raw-eigenvalue density histogram with a fitted
/// semicircle overlay (`density.csv` and `density.svg`).
pub fn write_density_artifacts(
    records: &[SpectrumRecord],
    bins: usize,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let pooled: Vec<f64> = records
        .iter()
        .flat_map(|r| r.eigenvalues.iter().copied())
        .collect();
    if pooled.is_empty() {
        return Err(Error::validation("no eigenvalues to bin"));
    }
    let lo = pooled.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = pooled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo < hi { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
    let hist = histogram(&pooled, bins, (lo, hi))?;

    let dim = records.iter().map(|r| r.dim).max().unwrap_or(1);
    let sigma = localstats::fit_semicircle_sigma(&pooled, dim)?;
    let curve = ReferenceCurve {
        label: "semicircle fit",
        points: sample_curve(
            |x| localstats::semicircle_pdf(x, dim, sigma),
            lo,
            hi,
            240,
        ),
    };

    let csv_path = out_dir.join("density.csv");
    write_histogram_csv(&csv_path, &hist)?;
    let svg = render_overlay(
        &hist,
        &[curve],
        "mean spectral density",
        "eigenvalue",
    );
    let svg_path = out_dir.join("density.svg");
    std::fs::write(&svg_path, svg)?;
    Ok(vec![csv_path, svg_path])
}
