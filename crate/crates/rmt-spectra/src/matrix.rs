//! Dense real symmetric matrices.
//!
//! [`SymmetricMatrix`] stores the full square matrix row-major but only
//! ever writes entries through symmetric constructors and setters, so
//! `m[i][j] == m[j][i]` holds exactly (bit-for-bit), not merely up to
//! rounding. Downstream code (the eigensolver in particular) relies on
//! that invariant instead of re-symmetrizing defensively.

use crate::error::{Error, Result};

/// Dense real symmetric matrix with exact entry-wise symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    /// Row-major `dim * dim` entries.
    data: Vec<f64>,
}

impl SymmetricMatrix {
    /// Zero matrix of side `dim`.
    pub fn zero(dim: usize) -> Self {
        SymmetricMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    /// Builds a matrix by evaluating `f(i, j)` for `i <= j` and mirroring
    /// the result, which makes symmetry exact by construction.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymmetricMatrix::zero(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    /// Builds a matrix from full rows, rejecting input that is not exactly
    /// symmetric (the check treats NaN as asymmetric).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::dimension(format!(
                    "row {i} has length {}, expected {dim}",
                    row.len()
                )));
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                let (a, b) = (rows[i][j], rows[j][i]);
                if !(a == b) {
                    return Err(Error::validation(format!(
                        "asymmetric input: entry ({i},{j}) = {a} but ({j},{i}) = {b}"
                    )));
                }
            }
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            data.extend_from_slice(row);
        }
        Ok(SymmetricMatrix { dim, data })
    }

    /// Matrix side length.
    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entry `(i, j)`.
    #[inline]
    #[must_use]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Sets `(i, j)` and `(j, i)` to the same value.
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    /// Adds `v` to the diagonal entry `(i, i)`.
    pub fn add_to_diagonal(&mut self, i: usize, v: f64) {
        self.data[i * self.dim + i] += v;
    }

    /// Row `i` as a slice.
    #[must_use]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Raw row-major storage.
    #[must_use]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Sum of diagonal entries.
    #[must_use]
    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Squared Frobenius norm, `sum_ij m[i][j]^2`.
    #[must_use]
    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    /// Matrix-vector product, used by oracle checks in tests.
    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::dimension(format!(
                "matvec: vector length {} vs matrix dim {}",
                v.len(),
                self.dim
            )));
        }
        Ok((0..self.dim)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }
}
