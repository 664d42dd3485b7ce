//! Spectrum serialization: one JSON record per line.
//!
//! Each line holds one matrix's full eigenvalue list in ascending
//! order plus a free-form `meta` object describing where it came from.
//! Records are written sorted by `matrix_id` so identical runs produce
//! byte-identical files.

use crate::eigensolve::Spectrum;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// One spectrum with its identity and provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub matrix_id: String,
    pub dim: usize,
    pub eigenvalues: Vec<f64>,
    pub meta: serde_json::Value,
}

impl SpectrumRecord {
    /// Wraps a computed spectrum, checking the length and ordering
    /// invariants.
    pub fn new(
        matrix_id: String,
        spectrum: &Spectrum,
        meta: serde_json::Value,
    ) -> Result<Self> {
        let record = SpectrumRecord {
            matrix_id,
            dim: spectrum.len(),
            eigenvalues: spectrum.values().to_vec(),
            meta,
        };
        record.check()?;
        Ok(record)
    }

    fn check(&self) -> Result<()> {
        if self.eigenvalues.len() != self.dim {
            return Err(Error::schema(format!(
                "record {}: dim {} but {} eigenvalues",
                self.matrix_id,
                self.dim,
                self.eigenvalues.len()
            )));
        }
        if self.eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::schema(format!(
                "record {}: non-finite eigenvalue",
                self.matrix_id
            )));
        }
        if self.eigenvalues.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::schema(format!(
                "record {}: eigenvalues not in ascending order",
                self.matrix_id
            )));
        }
        Ok(())
    }

    /// The eigenvalues as a standalone spectrum.
    pub fn spectrum(&self) -> Result<Spectrum> {
        Spectrum::new(self.eigenvalues.clone(), self.dim)
    }
}

/// Writes records as JSON lines, sorted by `matrix_id`.
pub fn write_spectra(path: &Path, records: &mut [SpectrumRecord]) -> Result<()> {
    records.sort_by(|a, b| a.matrix_id.cmp(&b.matrix_id));
    let file = std::fs::File::create(path)?;
    let mut out = BufWriter::new(file);
    for record in records.iter() {
        record.check()?;
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads and validates a spectra file.
pub fn read_spectra(path: &Path) -> Result<Vec<SpectrumRecord>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: SpectrumRecord = serde_json::from_str(&line).map_err(|err| {
            Error::schema(format!("line {}: {err}", lineno + 1))
        })?;
        record.check()?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::schema(format!(
            "{} contains no spectrum records",
            path.display()
        )));
    }
    Ok(records)
}
