//! Implementations of the `sample`, `analyze`, `experiment`, and
//! `train` commands.
//!
//! Each command resolves its inputs from an [`ExperimentConfig`],
//! writes a complete artifact bundle into the output directory, and
//! returns the files it wrote. Matrix sampling and Hessian columns run
//! on the shared rayon pool, whose size can be bounded with the
//! `RMT_SPECTRA_WORKERS` environment variable; results are collected in
//! index order, so the artifacts do not depend on the worker count.

use crate::eigensolve::{eigvals_symmetric, Spectrum};
use crate::ensembles::{
    add_diagonal_outliers, pad_with_zeros, sample_goe, sample_gp_hessian,
    sample_poisson_spectrum, GoeParams, GpKernelParams, RngSeed,
};
use crate::error::{Error, Result};
use crate::nets::autodiff::{
    batch_loss, gauss_newton_spectrum, hessian_spectrum, DEFAULT_HESSIAN_CAP,
};
use crate::nets::data::{
    load_csv_dataset, rescale_targets_by_train_mean, split_dataset, synthetic_softmax_dataset,
    write_synthetic_bike_csv, BatchPlan, CsvSchema, Dataset, Standardization,
};
use crate::nets::mlp::{init_weights, MlpSpec, OutputHead, Weights};
use crate::nets::train::{train_sgd, TrainConfig, TrainReport};
use crate::report::bundle::{
    run_analysis, write_density_artifacts, write_summary, ReportBundle, RunSummary,
};
use crate::report::config::{
    DatasetSource, EnsembleKind, EnsembleSource, ExperimentConfig, MatrixKind, NetworkSource,
    SourceConfig, SplitKind,
};
use crate::report::spectra::{write_spectra, SpectrumRecord};
use rayon::prelude::*;
use serde_json::json;
use std::path::{Path, PathBuf};

/// Environment variable bounding the worker pool size.
pub const WORKERS_ENV: &str = "RMT_SPECTRA_WORKERS";

/// Sizes the global rayon pool from `RMT_SPECTRA_WORKERS` when set.
/// Call once at startup; a pool that is already running is left alone.
pub fn install_worker_pool() -> Result<()> {
    let Ok(text) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let workers: usize = text.trim().parse().map_err(|_| {
        Error::validation(format!("{WORKERS_ENV} must be a positive integer, got {text:?}"))
    })?;
    if workers == 0 {
        return Err(Error::validation(format!(
            "{WORKERS_ENV} must be a positive integer, got 0"
        )));
    }
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global();
    Ok(())
}

/// Output directory: the `--out-dir` flag wins over the config field.
pub fn resolve_out_dir(config: &ExperimentConfig, flag: Option<PathBuf>) -> Result<PathBuf> {
    flag.or_else(|| config.out_dir.clone()).ok_or_else(|| {
        Error::validation("no output directory: set out_dir in the config or pass --out-dir")
    })
}

fn kind_name(kind: EnsembleKind) -> &'static str {
    match kind {
        EnsembleKind::Goe => "goe",
        EnsembleKind::GpHessian => "gp_hessian",
        EnsembleKind::Poisson => "poisson",
    }
}

fn ensemble_meta(source: &EnsembleSource, sample_seed: RngSeed) -> serde_json::Value {
    let mut meta = serde_json::Map::new();
    meta.insert("kind".to_string(), json!(kind_name(source.kind)));
    meta.insert("dim".to_string(), json!(source.dim));
    meta.insert("seed".to_string(), json!(sample_seed.0));
    if let Some(sigma) = source.sigma {
        meta.insert("sigma".to_string(), json!(sigma));
    }
    if let Some(k1) = source.k1 {
        meta.insert("k1".to_string(), json!(k1));
    }
    if let Some(k2) = source.k2 {
        meta.insert("k2".to_string(), json!(k2));
    }
    if let Some(pad) = source.pad_to {
        meta.insert("pad_to".to_string(), json!(pad));
    }
    if let Some(out) = &source.outliers {
        meta.insert(
            "outliers".to_string(),
            json!({"count": out.count, "magnitude": out.magnitude}),
        );
    }
    serde_json::Value::Object(meta)
}

/// Samples `n_samples` spectra of the configured ensemble in parallel.
///
/// Sample `i` draws from sub-seed `seed + i`; outlier placement for
/// sample `i` uses sub-seed `seed + n_samples + i` so it is independent
/// of the matrix draw.
pub fn generate_ensemble_records(source: &EnsembleSource) -> Result<Vec<SpectrumRecord>> {
    let base = RngSeed(source.seed);
    let goe_params = match source.kind {
        EnsembleKind::Goe => Some(GoeParams::new(source.dim, source.sigma.unwrap_or(1.0))?),
        _ => None,
    };
    let gp_params = match source.kind {
        EnsembleKind::GpHessian => Some(GpKernelParams::new(
            source.dim,
            source.k1.unwrap_or(0.0),
            source.k2.unwrap_or(0.0),
        )?),
        _ => None,
    };

    (0..source.n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let sample_seed = base.for_sample(i);
            let spectrum = match source.kind {
                EnsembleKind::Poisson => sample_poisson_spectrum(source.dim, sample_seed)?,
                EnsembleKind::Goe | EnsembleKind::GpHessian => {
                    let mut matrix = match source.kind {
                        EnsembleKind::Goe => sample_goe(goe_params.as_ref().unwrap(), sample_seed),
                        _ => sample_gp_hessian(gp_params.as_ref().unwrap(), sample_seed),
                    };
                    if let Some(target) = source.pad_to {
                        matrix = pad_with_zeros(&matrix, target)?;
                    }
                    if let Some(out) = &source.outliers {
                        let outlier_seed = base.for_sample(source.n_samples as u64 + i);
                        matrix =
                            add_diagonal_outliers(&matrix, out.count, out.magnitude, outlier_seed)?;
                    }
                    eigvals_symmetric(&matrix)?
                }
            };
            SpectrumRecord::new(
                format!("{}-{i:06}", kind_name(source.kind)),
                &spectrum,
                ensemble_meta(source, sample_seed),
            )
        })
        .collect()
}

/// `sample`: draw an ensemble, eigendecompose, and write the spectra.
pub fn cmd_sample(config: &ExperimentConfig, out_dir: &Path) -> Result<ReportBundle> {
    let Some(SourceConfig::Ensemble(source)) = &config.source else {
        return Err(Error::validation("sample needs an ensemble source"));
    };
    std::fs::create_dir_all(out_dir)?;
    let mut records = generate_ensemble_records(source)?;
    let spectra_path = out_dir.join("spectra.jsonl");
    write_spectra(&spectra_path, &mut records)?;

    let summary = RunSummary {
        command: "sample".to_string(),
        n_spectra: records.len(),
        removed_degenerate_fraction: 0.0,
        statistics: Vec::new(),
        config: config.clone(),
        extras: serde_json::Map::new(),
    };
    let summary_path = out_dir.join("summary.json");
    write_summary(&summary_path, &summary)?;
    Ok(ReportBundle {
        summary,
        files: vec![spectra_path, summary_path],
    })
}

/// `analyze`: run the statistics pipeline over an existing spectra
/// file.
pub fn cmd_analyze(config: &ExperimentConfig, out_dir: &Path) -> Result<ReportBundle> {
    let input = config.input.as_ref().ok_or_else(|| {
        Error::validation("analyze needs an input spectra file (config key: input)")
    })?;
    let records = crate::report::spectra::read_spectra(input)?;
    run_analysis("analyze", &records, config, out_dir, serde_json::Map::new())
}

/// `experiment`: generate spectra from the configured source, then
/// analyze them. Also writes the pooled spectral-density histogram.
pub fn cmd_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ReportBundle> {
    let source = config
        .source
        .as_ref()
        .ok_or_else(|| Error::validation("experiment needs a source"))?;
    std::fs::create_dir_all(out_dir)?;
    let (mut records, extras) = match source {
        SourceConfig::Ensemble(e) => (generate_ensemble_records(e)?, serde_json::Map::new()),
        SourceConfig::Network(n) => network_records(n, out_dir)?,
    };
    let spectra_path = out_dir.join("spectra.jsonl");
    write_spectra(&spectra_path, &mut records)?;
    let mut density_files = write_density_artifacts(&records, config.analysis.bins, out_dir)?;

    let mut bundle = run_analysis("experiment", &records, config, out_dir, extras)?;
    let mut files = vec![spectra_path];
    files.append(&mut density_files);
    files.append(&mut bundle.files);
    bundle.files = files;
    Ok(bundle)
}

/// `train`: fit the configured network and write the loss trace and
/// final weights.
pub fn cmd_train(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let Some(SourceConfig::Network(net)) = &config.source else {
        return Err(Error::validation("train needs a network source"));
    };
    std::fs::create_dir_all(out_dir)?;
    let prepared = prepare_network(net, out_dir)?;
    let train_config = effective_train_config(net);
    let (weights, report) = train_sgd(
        &prepared.spec,
        prepared.init.clone(),
        &prepared.train,
        &train_config,
    )?;
    let test_loss = batch_loss(&prepared.spec, &weights, &prepared.test)?;

    let training = json!({
        "command": "train",
        "config": config,
        "train_config": train_config,
        "epoch_losses": report.epoch_losses,
        "final_train_loss": report.final_loss(),
        test_loss_key(net.head): test_loss,
    });
    let training_path = out_dir.join("training.json");
    write_pretty_json(&training_path, &training)?;

    let weights_doc = json!({
        "architecture": net.architecture,
        "head": net.head,
        "weights": weights.as_slice(),
    });
    let weights_path = out_dir.join("weights.json");
    write_pretty_json(&weights_path, &weights_doc)?;
    Ok(vec![training_path, weights_path])
}

fn write_pretty_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn test_loss_key(head: OutputHead) -> &'static str {
    match head {
        OutputHead::SquaredError => "test_mse",
        OutputHead::SoftmaxCrossEntropy => "test_cross_entropy",
    }
}

fn effective_train_config(net: &NetworkSource) -> TrainConfig {
    net.train_config
        .clone()
        .unwrap_or_else(|| TrainConfig::standard(RngSeed(net.seed).for_sample(1)))
}

struct PreparedNetwork {
    spec: MlpSpec,
    train: Dataset,
    test: Dataset,
    init: Weights,
}

/// Builds the dataset, splits it, applies train-fitted preprocessing,
/// and initializes weights. Sub-seed layout relative to the source
/// seed: +0 init, +1 training, +2 split, +3.. batch partitions.
fn prepare_network(net: &NetworkSource, out_dir: &Path) -> Result<PreparedNetwork> {
    let spec = MlpSpec::new(net.architecture.clone(), net.head)?;
    let (dataset, count_targets) = match &net.dataset {
        DatasetSource::Csv { path, schema } => (
            load_csv_dataset(path, *schema)?,
            matches!(schema, CsvSchema::BikePreproc),
        ),
        DatasetSource::SyntheticBike { rows, seed } => {
            let path = out_dir.join("bike_synthetic.csv");
            write_synthetic_bike_csv(&path, *rows, RngSeed(*seed))?;
            (load_csv_dataset(&path, CsvSchema::BikePreproc)?, true)
        }
        DatasetSource::SyntheticSoftmax {
            n,
            input_dim,
            n_classes,
            seed,
        } => (
            synthetic_softmax_dataset(*n, *input_dim, *n_classes, RngSeed(*seed))?,
            false,
        ),
    };
    if dataset.input_dim() != spec.input_dim() {
        return Err(Error::dimension(format!(
            "dataset has {} features but the network expects {}",
            dataset.input_dim(),
            spec.input_dim()
        )));
    }

    let (train, test) = split_dataset(&dataset, net.split_fraction, RngSeed(net.seed).for_sample(2))?;
    let (train, test) = if net.standardize {
        let stats = Standardization::fit(&train)?;
        (stats.apply(&train)?, stats.apply(&test)?)
    } else {
        (train, test)
    };
    // Count-style regressands are rescaled so the training targets have
    // mean 1; preprocessed CSV targets were scaled by the file mean, so
    // this corrects them to the training split.
    let (train, test) = if count_targets {
        let (train, test, _scale) = rescale_targets_by_train_mean(&train, &test)?;
        (train, test)
    } else {
        (train, test)
    };
    let init = init_weights(&spec, RngSeed(net.seed).for_sample(0));
    Ok(PreparedNetwork {
        spec,
        train,
        test,
        init,
    })
}

/// Disjoint batches within each shuffle pass; new passes reshuffle with
/// sub-seeds `seed + 3`, `seed + 4`, ... until enough full batches
/// exist. `batch_size` 0 means one batch holding the whole split.
fn curvature_batches(split_len: usize, net: &NetworkSource) -> Result<Vec<Vec<usize>>> {
    if net.batch_size == 0 {
        return Ok(vec![(0..split_len).collect()]);
    }
    if net.batch_size > split_len {
        return Err(Error::validation(format!(
            "batch_size {} exceeds the chosen split ({split_len} rows)",
            net.batch_size
        )));
    }
    let base = RngSeed(net.seed);
    let mut batches = Vec::with_capacity(net.n_matrices);
    let mut pass: u64 = 0;
    while batches.len() < net.n_matrices {
        let mut plan = BatchPlan::new(split_len, net.batch_size)?;
        plan.shuffle(&mut base.for_sample(3 + pass).rng());
        for chunk in plan.batches() {
            if chunk.len() == net.batch_size {
                batches.push(chunk.to_vec());
                if batches.len() == net.n_matrices {
                    break;
                }
            }
        }
        pass += 1;
    }
    Ok(batches)
}

fn network_records(
    net: &NetworkSource,
    out_dir: &Path,
) -> Result<(Vec<SpectrumRecord>, serde_json::Map<String, serde_json::Value>)> {
    let prepared = prepare_network(net, out_dir)?;
    let (weights, report): (Weights, Option<TrainReport>) = if net.trained {
        let train_config = effective_train_config(net);
        let (weights, report) = train_sgd(
            &prepared.spec,
            prepared.init.clone(),
            &prepared.train,
            &train_config,
        )?;
        (weights, Some(report))
    } else {
        (prepared.init.clone(), None)
    };

    let mut extras = serde_json::Map::new();
    extras.insert("trained".to_string(), json!(net.trained));
    if let Some(report) = &report {
        extras.insert("final_train_loss".to_string(), json!(report.final_loss()));
    }
    let test_loss = batch_loss(&prepared.spec, &weights, &prepared.test)?;
    extras.insert(test_loss_key(net.head).to_string(), json!(test_loss));

    let split_name = match net.split {
        SplitKind::Train => "train",
        SplitKind::Test => "test",
    };
    let split_data = match net.split {
        SplitKind::Train => &prepared.train,
        SplitKind::Test => &prepared.test,
    };
    let batches = curvature_batches(split_data.len(), net)?;
    let matrix_name = match net.matrix {
        MatrixKind::Hessian => "hessian",
        MatrixKind::GaussNewton => "gauss_newton",
    };

    let spectra: Vec<Spectrum> = batches
        .iter()
        .map(|rows| {
            let batch = split_data.gather(rows)?;
            match net.matrix {
                MatrixKind::Hessian => {
                    hessian_spectrum(&prepared.spec, &weights, &batch, DEFAULT_HESSIAN_CAP)
                }
                MatrixKind::GaussNewton => {
                    gauss_newton_spectrum(&prepared.spec, &weights, &batch)
                }
            }
        })
        .collect::<Result<_>>()?;

    let records = spectra
        .iter()
        .enumerate()
        .map(|(i, spectrum)| {
            let meta = json!({
                "kind": matrix_name,
                "dim": spectrum.len(),
                "batch_size": batches[i].len(),
                "split": split_name,
                "trained": net.trained,
                "seed": net.seed,
            });
            SpectrumRecord::new(format!("{matrix_name}-{i:06}"), spectrum, meta)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((records, extras))
}
