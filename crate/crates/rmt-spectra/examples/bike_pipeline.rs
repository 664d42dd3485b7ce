//! End-to-end network pipeline: CSV ingestion, SGD training, and
//! per-batch Hessian spectra.
//!
//! Writes a synthetic hourly bike-sharing CSV, ingests it through the
//! preprocessing schema, trains a small regression MLP with momentum
//! SGD, and then computes exact Hessians over held-out batches. The
//! consecutive spacing ratios of the Hessian eigenvalues are compared
//! against the ratio surmise, the same statistic used for the random
//! ensembles.
//!
//! ```bash
//! cargo run --release --example bike_pipeline
//! ```

use rmt_spectra::ensembles::RngSeed;
use rmt_spectra::localstats::{
    histogram, ks_statistic, ratio_surmise_cdf, ratio_surmise_pdf, spacing_ratios,
};
use rmt_spectra::nets::autodiff::{batch_loss, hessian_spectrum, DEFAULT_HESSIAN_CAP};
use rmt_spectra::nets::data::{
    load_csv_dataset, rescale_targets_by_train_mean, split_dataset, write_synthetic_bike_csv,
    BatchPlan, CsvSchema, Standardization,
};
use rmt_spectra::nets::mlp::{init_weights, MlpSpec, OutputHead};
use rmt_spectra::nets::train::{train_sgd, TrainConfig};
use rmt_spectra::report::svg::{render_overlay, sample_curve, ReferenceCurve};
use rmt_spectra::unfold::filter_degenerate;
use rmt_spectra::Result;

fn main() -> Result<()> {
    let out_dir = std::env::temp_dir().join("rmt_spectra_bike_pipeline");
    std::fs::create_dir_all(&out_dir)?;

    // Synthetic stand-in for the hourly bike-sharing file: same
    // columns, same kinds of structure (hour-of-day shapes, weather,
    // season, year growth, Poisson noise).
    let csv_path = out_dir.join("bike.csv");
    write_synthetic_bike_csv(&csv_path, 3000, RngSeed(5))?;
    let raw = load_csv_dataset(&csv_path, CsvSchema::BikePreproc)?;
    println!("ingested {} rows with {} features", raw.len(), raw.input_dim());

    // Train/test split, feature standardization fitted on the training
    // split, and count targets rescaled to train-split mean 1.
    let (train, test) = split_dataset(&raw, 2.0 / 3.0, RngSeed(100))?;
    let stats = Standardization::fit(&train)?;
    let (train, test) = (stats.apply(&train)?, stats.apply(&test)?);
    let (train, test, _) = rescale_targets_by_train_mean(&train, &test)?;
    println!("train {} rows, test {} rows", train.len(), test.len());

    let spec = MlpSpec::new(vec![13, 32, 16, 1], OutputHead::SquaredError)?;
    println!("architecture 13-32-16-1, {} parameters", spec.param_count());

    // A shortened version of the standard recipe keeps the example
    // fast while following the same schedule shape.
    let config = TrainConfig {
        epochs: 60,
        batch_size: 64,
        initial_lr: 3e-3,
        final_lr: 3e-5,
        decay_start_epoch: 30,
        decay_end_epoch: 54,
        momentum: 0.9,
        weight_decay: 5e-4,
        seed: RngSeed(201),
    };
    let init = init_weights(&spec, RngSeed(200));
    let baseline = batch_loss(&spec, &init, &test)?;
    let (weights, report) = train_sgd(&spec, init, &train, &config)?;
    let test_mse = batch_loss(&spec, &weights, &test)?;
    println!(
        "training loss {:.4} -> {:.4} over {} epochs",
        report.epoch_losses[0],
        report.final_loss(),
        config.epochs
    );
    println!("test MSE {test_mse:.4} (untrained network scored {baseline:.4})");
    assert!(test_mse < 0.5 * baseline, "training should beat the initialization");

    // Exact Hessians over disjoint held-out batches. Ratios need no
    // unfolding, so different batches pool directly.
    let n_hessians = 6;
    let batch_size = 64;
    let mut plan = BatchPlan::new(test.len(), batch_size)?;
    plan.shuffle(&mut RngSeed(300).rng());
    let batches: Vec<Vec<usize>> = plan
        .batches()
        .filter(|b| b.len() == batch_size)
        .take(n_hessians)
        .map(<[usize]>::to_vec)
        .collect();

    let mut ratios = Vec::new();
    for (i, rows) in batches.iter().enumerate() {
        let batch = test.gather(rows)?;
        let spectrum = hessian_spectrum(&spec, &weights, &batch, DEFAULT_HESSIAN_CAP)?;
        let filtered = filter_degenerate(&spectrum, 1e-10)?;
        let sample = spacing_ratios(&filtered.spectrum)?;
        println!(
            "batch {i}: {} eigenvalues, {} near zero removed, {} ratios",
            spectrum.len(),
            filtered.removed,
            sample.ratios.len()
        );
        ratios.extend_from_slice(&sample.ratios);
    }
    let report = ks_statistic(&ratios, "ratio surmise", |r| ratio_surmise_cdf(r).unwrap())?;
    println!(
        "pooled {} Hessian spacing ratios, KS vs ratio surmise {:.4}",
        report.n_samples, report.ks_statistic
    );
    assert!(report.ks_statistic < 0.06);

    // Render the comparison as an SVG overlay.
    let hist = histogram(&ratios, 50, (0.0, 10.0))?;
    let curve = ReferenceCurve {
        label: "ratio surmise",
        points: sample_curve(|r| ratio_surmise_pdf(r).unwrap(), 0.0, 10.0, 240),
    };
    let svg_path = out_dir.join("hessian_ratios.svg");
    std::fs::write(&svg_path, render_overlay(&hist, &[curve], "hessian spacing ratios", "r"))?;
    println!("wrote {}", svg_path.display());
    println!("ok: trained-network curvature shows Wigner-type level repulsion");
    Ok(())
}
