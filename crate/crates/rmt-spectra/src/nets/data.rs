//! Datasets for the network pipelines: in-memory storage, CSV
//! ingestion schemas, deterministic splits, feature standardization,
//! and synthetic data generators.

use crate::ensembles::RngSeed;
use crate::error::{Error, Result};
use chrono::{Datelike, NaiveDate};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Target values of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetValues {
    /// Row-major `n x width` regression targets.
    Regression { width: usize, values: Vec<f64> },
    /// Class labels in `0..n_classes`.
    Classes { n_classes: usize, labels: Vec<usize> },
}

/// Row-major feature matrix plus targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    input_dim: usize,
    inputs: Vec<f64>,
    targets: TargetValues,
}

impl Dataset {
    pub fn regression(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::validation("a dataset needs at least one row"));
        }
        if inputs.len() != targets.len() {
            return Err(Error::dimension(format!(
                "{} input rows vs {} target rows",
                inputs.len(),
                targets.len()
            )));
        }
        let input_dim = inputs[0].len();
        let width = targets[0].len();
        if input_dim == 0 || width == 0 {
            return Err(Error::validation("inputs and targets must be non-empty"));
        }
        let mut flat_x = Vec::with_capacity(inputs.len() * input_dim);
        let mut flat_y = Vec::with_capacity(targets.len() * width);
        for (row, (x, y)) in inputs.iter().zip(&targets).enumerate() {
            if x.len() != input_dim || y.len() != width {
                return Err(Error::dimension(format!("ragged row {row}")));
            }
            if !x.iter().all(|v| v.is_finite()) || !y.iter().all(|v| v.is_finite()) {
                return Err(Error::validation(format!("non-finite value in row {row}")));
            }
            flat_x.extend_from_slice(x);
            flat_y.extend_from_slice(y);
        }
        Ok(Dataset {
            n: inputs.len(),
            input_dim,
            inputs: flat_x,
            targets: TargetValues::Regression {
                width,
                values: flat_y,
            },
        })
    }

    pub fn classification(
        inputs: Vec<Vec<f64>>,
        labels: Vec<usize>,
        n_classes: usize,
    ) -> Result<Self> {
        if inputs.is_empty() {
            return Err(Error::validation("a dataset needs at least one row"));
        }
        if inputs.len() != labels.len() {
            return Err(Error::dimension(format!(
                "{} input rows vs {} labels",
                inputs.len(),
                labels.len()
            )));
        }
        if n_classes < 2 {
            return Err(Error::validation("classification needs at least 2 classes"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::validation(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        let input_dim = inputs[0].len();
        if input_dim == 0 {
            return Err(Error::validation("inputs must be non-empty"));
        }
        let mut flat_x = Vec::with_capacity(inputs.len() * input_dim);
        for (row, x) in inputs.iter().enumerate() {
            if x.len() != input_dim {
                return Err(Error::dimension(format!("ragged row {row}")));
            }
            if !x.iter().all(|v| v.is_finite()) {
                return Err(Error::validation(format!("non-finite value in row {row}")));
            }
            flat_x.extend_from_slice(x);
        }
        Ok(Dataset {
            n: inputs.len(),
            input_dim,
            inputs: flat_x,
            targets: TargetValues::Classes { n_classes, labels },
        })
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.n
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[must_use]
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    #[must_use]
    pub fn input(&self, row: usize) -> &[f64] {
        &self.inputs[row * self.input_dim..(row + 1) * self.input_dim]
    }

    #[must_use]
    pub fn targets(&self) -> &TargetValues {
        &self.targets
    }

    /// Regression target row, if this is a regression dataset.
    #[must_use]
    pub fn target_row(&self, row: usize) -> Option<&[f64]> {
        match &self.targets {
            TargetValues::Regression { width, values } => {
                Some(&values[row * width..(row + 1) * width])
            }
            TargetValues::Classes { .. } => None,
        }
    }

    /// Class label of a row, if this is a classification dataset.
    #[must_use]
    pub fn label(&self, row: usize) -> Option<usize> {
        match &self.targets {
            TargetValues::Classes { labels, .. } => Some(labels[row]),
            TargetValues::Regression { .. } => None,
        }
    }

    /// Copies the given rows into a new dataset (used for minibatches).
    pub fn gather(&self, rows: &[usize]) -> Result<Dataset> {
        if rows.is_empty() {
            return Err(Error::validation("cannot gather an empty batch"));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n) {
            return Err(Error::validation(format!(
                "row {bad} out of range for {} rows",
                self.n
            )));
        }
        let mut inputs = Vec::with_capacity(rows.len() * self.input_dim);
        for &r in rows {
            inputs.extend_from_slice(self.input(r));
        }
        let targets = match &self.targets {
            TargetValues::Regression { width, values } => {
                let mut out = Vec::with_capacity(rows.len() * width);
                for &r in rows {
                    out.extend_from_slice(&values[r * width..(r + 1) * width]);
                }
                TargetValues::Regression {
                    width: *width,
                    values: out,
                }
            }
            TargetValues::Classes { n_classes, labels } => TargetValues::Classes {
                n_classes: *n_classes,
                labels: rows.iter().map(|&r| labels[r]).collect(),
            },
        };
        Ok(Dataset {
            n: rows.len(),
            input_dim: self.input_dim,
            inputs,
            targets,
        })
    }

    /// Mean of all regression target entries.
    pub fn target_mean(&self) -> Result<f64> {
        match &self.targets {
            TargetValues::Regression { values, .. } => {
                Ok(values.iter().sum::<f64>() / values.len() as f64)
            }
            TargetValues::Classes { .. } => Err(Error::validation(
                "target mean is only defined for regression targets",
            )),
        }
    }
}

/// How to interpret a CSV file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsvSchema {
    /// The hourly bike-sharing layout: drops the record index and the
    /// `casual`/`registered` leakage columns, converts the date to an
    /// integer day index, and scales the `cnt` regressand by its mean
    /// over the ingested file.
    BikePreproc,
    /// All columns numeric; the last column is the regressand and every
    /// column is standardized to zero mean and unit variance.
    RawStandardize,
}

const BIKE_FEATURES: [&str; 13] = [
    "dteday",
    "season",
    "yr",
    "mnth",
    "hr",
    "holiday",
    "weekday",
    "workingday",
    "weathersit",
    "temp",
    "atemp",
    "hum",
    "windspeed",
];

/// Loads a CSV file under the given schema. Columns are located by
/// header name for [`CsvSchema::BikePreproc`], so column order does not
/// matter; [`CsvSchema::RawStandardize`] uses positional columns.
pub fn load_csv_dataset(path: &Path, schema: CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)?;
    match schema {
        CsvSchema::BikePreproc => load_bike(&mut reader),
        CsvSchema::RawStandardize => load_raw_standardize(&mut reader),
    }
}

fn load_bike<R: std::io::Read>(reader: &mut csv::Reader<R>) -> Result<Dataset> {
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::schema(format!("missing column '{name}'")))
    };
    let feature_cols: Vec<usize> = BIKE_FEATURES
        .iter()
        .map(|name| col(name))
        .collect::<Result<_>>()?;
    let cnt_col = col("cnt")?;
    let date_col = col("dteday")?;

    let mut dates = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut counts = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let field = |c: usize| -> Result<&str> {
            record
                .get(c)
                .ok_or_else(|| Error::schema(format!("row {line} is missing column {c}")))
        };
        let date = NaiveDate::parse_from_str(field(date_col)?, "%Y-%m-%d")
            .map_err(|e| Error::schema(format!("row {line}: bad date: {e}")))?;
        dates.push(date);
        let mut row = Vec::with_capacity(feature_cols.len());
        for &c in &feature_cols {
            if c == date_col {
                row.push(0.0);
            } else {
                let value: f64 = field(c)?
                    .parse()
                    .map_err(|e| Error::schema(format!("row {line}: {e}")))?;
                row.push(value);
            }
        }
        rows.push(row);
        let cnt: f64 = field(cnt_col)?
            .parse()
            .map_err(|e| Error::schema(format!("row {line}: {e}")))?;
        counts.push(cnt);
    }
    if rows.is_empty() {
        return Err(Error::schema("CSV file has no data rows"));
    }

    let earliest = *dates.iter().min().unwrap();
    for (row, date) in rows.iter_mut().zip(&dates) {
        row[0] = (*date - earliest).num_days() as f64;
    }

    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    if !(mean.abs() > 0.0) {
        return Err(Error::Numerical {
            index: 0,
            message: "regressand mean is zero, cannot scale".to_string(),
        });
    }
    let targets: Vec<Vec<f64>> = counts.iter().map(|&c| vec![c / mean]).collect();
    Dataset::regression(rows, targets)
}

fn load_raw_standardize<R: std::io::Read>(reader: &mut csv::Reader<R>) -> Result<Dataset> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        let row: Vec<f64> = record
            .iter()
            .map(|s| {
                s.parse()
                    .map_err(|e| Error::schema(format!("row {line}: {e}")))
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::schema(format!("row {line} has a different width")));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::schema("CSV file has no data rows"));
    }
    let width = rows[0].len();
    if width < 2 {
        return Err(Error::schema(
            "need at least one feature column and one target column",
        ));
    }
    // Standardize every column, target included.
    for c in 0..width {
        let mean = rows.iter().map(|r| r[c]).sum::<f64>() / rows.len() as f64;
        let var = rows.iter().map(|r| (r[c] - mean).powi(2)).sum::<f64>() / rows.len() as f64;
        let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        for row in &mut rows {
            row[c] = (row[c] - mean) / scale;
        }
    }
    let inputs: Vec<Vec<f64>> = rows.iter().map(|r| r[..width - 1].to_vec()).collect();
    let targets: Vec<Vec<f64>> = rows.iter().map(|r| vec![r[width - 1]]).collect();
    Dataset::regression(inputs, targets)
}

/// Splits into `(train, test)` with a seeded shuffle; the train half
/// receives `floor(fraction * n)` rows and both halves must be
/// non-empty.
pub fn split_dataset(data: &Dataset, fraction: f64, seed: RngSeed) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::validation(format!(
            "split fraction must lie strictly between 0 and 1, got {fraction}"
        )));
    }
    let n = data.len();
    let n_train = (fraction * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(Error::validation(format!(
            "split of {n} rows at fraction {fraction} leaves an empty half"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = seed.rng();
    for k in (1..n).rev() {
        let j = rng.random_range(0..=k);
        indices.swap(k, j);
    }
    Ok((
        data.gather(&indices[..n_train])?,
        data.gather(&indices[n_train..])?,
    ))
}

/// Per-feature affine transform fitted on one dataset and applied to
/// others, so test rows are scaled with training statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    means: Vec<f64>,
    scales: Vec<f64>,
}

impl Standardization {
    /// Per-feature mean and standard deviation; constant features get
    /// scale 1 so they map to zero instead of NaN.
    pub fn fit(data: &Dataset) -> Result<Standardization> {
        let d = data.input_dim();
        let n = data.len() as f64;
        let mut means = vec![0.0; d];
        for row in 0..data.len() {
            for (m, v) in means.iter_mut().zip(data.input(row)) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut vars = vec![0.0; d];
        for row in 0..data.len() {
            for c in 0..d {
                vars[c] += (data.input(row)[c] - means[c]).powi(2);
            }
        }
        let scales = vars
            .iter()
            .map(|&v| {
                let s = (v / n).sqrt();
                if s > 0.0 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Standardization { means, scales })
    }

    /// Returns a copy of `data` with standardized features; targets are
    /// untouched.
    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        if data.input_dim() != self.means.len() {
            return Err(Error::dimension(format!(
                "standardization fitted on {} features, dataset has {}",
                self.means.len(),
                data.input_dim()
            )));
        }
        let mut out = data.clone();
        let d = data.input_dim();
        for row in 0..out.n {
            for c in 0..d {
                let v = &mut out.inputs[row * d + c];
                *v = (*v - self.means[c]) / self.scales[c];
            }
        }
        Ok(out)
    }
}

/// Rescales regression targets of both splits by the train-split mean,
/// so the training targets have mean exactly 1. Returns the rescaled
/// splits and the scale that was divided out.
pub fn rescale_targets_by_train_mean(
    train: &Dataset,
    test: &Dataset,
) -> Result<(Dataset, Dataset, f64)> {
    let mean = train.target_mean()?;
    if !(mean.abs() > 1e-12) {
        return Err(Error::Numerical {
            index: 0,
            message: format!("train target mean {mean} is too close to zero to scale"),
        });
    }
    let rescale = |data: &Dataset| -> Result<Dataset> {
        let mut out = data.clone();
        match &mut out.targets {
            TargetValues::Regression { values, .. } => {
                for v in values.iter_mut() {
                    *v /= mean;
                }
                Ok(out)
            }
            TargetValues::Classes { .. } => {
                Err(Error::validation("cannot rescale classification targets"))
            }
        }
    };
    Ok((rescale(train)?, rescale(test)?, mean))
}

/// Writes a deterministic synthetic CSV in the hourly bike-sharing
/// layout: one row per hour, the usual 17 columns, and a count
/// regressand driven by hour-of-day, working-day, weather, temperature,
/// and year effects, with Poisson noise on top. Useful where the real
/// file is unavailable; the structure is rich enough for a regression
/// network to explain most of the variance.
pub fn write_synthetic_bike_csv(path: &Path, rows: usize, seed: RngSeed) -> Result<()> {
    if rows == 0 {
        return Err(Error::validation("need at least one row"));
    }
    let mut rng = seed.rng();
    let start = NaiveDate::from_ymd_opt(2011, 1, 1).unwrap();
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record([
        "instant",
        "dteday",
        "season",
        "yr",
        "mnth",
        "hr",
        "holiday",
        "weekday",
        "workingday",
        "weathersit",
        "temp",
        "atemp",
        "hum",
        "windspeed",
        "casual",
        "registered",
        "cnt",
    ])?;

    let mut weather = 1u32;
    for t in 0..rows {
        let day = t / 24;
        let hr = (t % 24) as f64;
        let date = start + chrono::Duration::days(day as i64);
        let yr = (date.year() - 2011).clamp(0, 1);
        let mnth = date.month() as f64;
        let season = ((date.month() % 12) / 3 + 1) as f64;
        let weekday = date.weekday().num_days_from_sunday() as f64;
        let holiday = if day % 97 == 53 { 1.0 } else { 0.0 };
        let workingday = if (1.0..=5.0).contains(&weekday) && holiday == 0.0 {
            1.0
        } else {
            0.0
        };

        // Weather follows a sticky 4-state chain; state 4 is rare.
        let u: f64 = rng.random();
        weather = match (weather, u) {
            (w, u) if u < 0.72 => w,
            (_, u) if u < 0.90 => 1,
            (_, u) if u < 0.97 => 2,
            (_, u) if u < 0.995 => 3,
            _ => 4,
        };

        let annual = (2.0 * std::f64::consts::PI * (day % 365) as f64 / 365.0
            - std::f64::consts::FRAC_PI_2)
            .sin();
        let daily = (2.0 * std::f64::consts::PI * (hr - 14.0) / 24.0).cos();
        let temp_noise: f64 = rng.sample::<f64, _>(StandardNormal) * 0.04;
        let temp = (0.5 + 0.28 * annual + 0.08 * daily + temp_noise).clamp(0.02, 0.99);
        let atemp_noise: f64 = rng.sample::<f64, _>(StandardNormal) * 0.03;
        let atemp = (0.95 * temp + 0.03 + atemp_noise).clamp(0.0, 1.0);
        let hum = (0.62 - 0.25 * daily + rng.sample::<f64, _>(StandardNormal) * 0.1)
            .clamp(0.05, 1.0);
        let windspeed = (0.19 + rng.sample::<f64, _>(StandardNormal) * 0.08).clamp(0.0, 0.85);

        // Demand profile: commuter peaks on working days, a midday hump
        // otherwise, suppressed by bad weather and low temperature.
        let hour_shape = if workingday == 1.0 {
            let morning = (-0.5 * ((hr - 8.0) / 1.6).powi(2)).exp();
            let evening = (-0.5 * ((hr - 17.5) / 1.9).powi(2)).exp();
            let base = (-0.5 * ((hr - 13.0) / 5.0).powi(2)).exp();
            1.9 * morning + 2.3 * evening + 0.55 * base
        } else {
            let midday = (-0.5 * ((hr - 14.0) / 3.4).powi(2)).exp();
            1.75 * midday + 0.18
        };
        let night = if hr < 5.0 { 0.12 } else { 1.0 };
        let weather_factor = match weather {
            1 => 1.0,
            2 => 0.82,
            3 => 0.44,
            _ => 0.14,
        };
        let temp_factor = 0.35 + 1.15 * temp;
        let year_factor = 1.0 + 0.62 * yr as f64;
        let lambda =
            165.0 * hour_shape * night * weather_factor * temp_factor * year_factor + 1.5;

        let cnt = rand_distr::Poisson::new(lambda)
            .map_err(|e| Error::validation(format!("bad Poisson rate: {e}")))?
            .sample(&mut rng) as u64;
        let casual_p = if workingday == 1.0 { 0.16 } else { 0.42 };
        let casual = rand_distr::Binomial::new(cnt, casual_p)
            .map_err(|e| Error::validation(format!("bad Binomial: {e}")))?
            .sample(&mut rng);
        let registered = cnt - casual;

        writer.write_record([
            (t + 1).to_string(),
            date.format("%Y-%m-%d").to_string(),
            format!("{season}"),
            yr.to_string(),
            format!("{mnth}"),
            format!("{hr}"),
            format!("{holiday}"),
            format!("{weekday}"),
            format!("{workingday}"),
            weather.to_string(),
            format!("{temp:.4}"),
            format!("{atemp:.4}"),
            format!("{hum:.4}"),
            format!("{windspeed:.4}"),
            casual.to_string(),
            registered.to_string(),
            cnt.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// Synthetic multinomial-logit classification data: standard normal
/// inputs, labels drawn from the softmax of a random ground-truth
/// affine map.
pub fn synthetic_softmax_dataset(
    n: usize,
    input_dim: usize,
    n_classes: usize,
    seed: RngSeed,
) -> Result<Dataset> {
    if n == 0 || input_dim == 0 || n_classes < 2 {
        return Err(Error::validation(
            "need n >= 1, input_dim >= 1, n_classes >= 2",
        ));
    }
    let mut rng = seed.rng();
    let scale = 2.0 / (input_dim as f64).sqrt();
    let w: Vec<f64> = (0..n_classes * input_dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * scale)
        .collect();
    let b: Vec<f64> = (0..n_classes)
        .map(|_| rng.sample::<f64, _>(StandardNormal) * 0.3)
        .collect();

    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..input_dim)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut logits: Vec<f64> = (0..n_classes)
            .map(|k| {
                b[k] + w[k * input_dim..(k + 1) * input_dim]
                    .iter()
                    .zip(&x)
                    .map(|(wv, xv)| wv * xv)
                    .sum::<f64>()
            })
            .collect();
        let max = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let mut total = 0.0;
        for l in &mut logits {
            *l = (*l - max).exp();
            total += *l;
        }
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut label = n_classes - 1;
        for (k, &p) in logits.iter().enumerate() {
            acc += p;
            if u < acc {
                label = k;
                break;
            }
        }
        inputs.push(x);
        labels.push(label);
    }
    Dataset::classification(inputs, labels, n_classes)
}

/// Deterministic minibatch index stream: each epoch reshuffles
/// `0..n` and yields consecutive chunks of `batch_size` (the trailing
/// partial chunk included).
pub struct BatchPlan {
    indices: Vec<usize>,
    batch_size: usize,
}

impl BatchPlan {
    pub fn new(n: usize, batch_size: usize) -> Result<Self> {
        if n == 0 || batch_size == 0 {
            return Err(Error::validation("need n >= 1 and batch_size >= 1"));
        }
        Ok(BatchPlan {
            indices: (0..n).collect(),
            batch_size,
        })
    }

    /// Reshuffles in place; call once per epoch with a live RNG.
    pub fn shuffle(&mut self, rng: &mut impl Rng) {
        for k in (1..self.indices.len()).rev() {
            let j = rng.random_range(0..=k);
            self.indices.swap(k, j);
        }
    }

    pub fn batches(&self) -> impl Iterator<Item = &[usize]> {
        self.indices.chunks(self.batch_size)
    }
}
