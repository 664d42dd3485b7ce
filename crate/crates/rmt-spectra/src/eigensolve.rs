//! Dense symmetric eigensolver, eigenvalues only.
//!
//! The solver is the classic two-stage scheme: Householder reduction to
//! symmetric tridiagonal form followed by the implicitly shifted QL
//! iteration. Eigenvectors are never accumulated, which keeps the
//! reduction at roughly `2n^3/3` flops and the QL stage at `O(n^2)`.
//!
//! Two properties matter beyond raw accuracy:
//!
//! * Rows scaled to zero are skipped rather than reflected, so a matrix
//!   whose trailing rows and columns are exactly zero (for example one
//!   produced by [`crate::ensembles::pad_with_zeros`]) keeps those
//!   eigenvalues at exactly `0.0` in the output. Degeneracy filters can
//!   then remove them with an arbitrarily small magnitude cutoff.
//! * Convergence of each off-diagonal entry is judged relative to the
//!   local tridiagonal scale, `|e| <= eps * (|d_m| + |d_m+1|)`, so the
//!   solver behaves the same for spectra of order `1e-3` and `1e3`.

use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;

/// QL sweeps allowed per eigenvalue before giving up.
const MAX_QL_SWEEPS: usize = 50;

/// Sorted eigenvalues together with the dimension of the matrix (or
/// ambient space) they came from.
///
/// `source_dim` can exceed `values.len()` after degeneracy filtering; it
/// is what unfolding and density formulas use for the matrix size.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
    source_dim: usize,
}

impl Spectrum {
    /// Wraps a sorted list of finite eigenvalues.
    pub fn new(values: Vec<f64>, source_dim: usize) -> Result<Self> {
        if values.len() > source_dim {
            return Err(Error::dimension(format!(
                "{} eigenvalues cannot come from a dim-{source_dim} matrix",
                values.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::validation(format!(
                    "eigenvalue {i} is not finite: {v}"
                )));
            }
        }
        if values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::validation(
                "eigenvalues must be sorted ascending",
            ));
        }
        Ok(Spectrum { values, source_dim })
    }

    /// Ascending eigenvalues.
    #[must_use]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Number of eigenvalues held.
    #[must_use]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Dimension of the originating matrix.
    #[must_use]
    pub fn source_dim(&self) -> usize {
        self.source_dim
    }
}

/// Computes all eigenvalues of `m`, sorted ascending.
///
/// Fails with a validation error on non-finite entries and with a
/// numerical error naming the offending eigenvalue index if the QL
/// iteration exceeds its sweep budget.
pub fn eigvals_symmetric(m: &SymmetricMatrix) -> Result<Spectrum> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::validation("cannot eigensolve an empty matrix"));
    }
    for i in 0..n {
        for j in i..n {
            if !m.get(i, j).is_finite() {
                return Err(Error::validation(format!(
                    "matrix entry ({i},{j}) is not finite: {}",
                    m.get(i, j)
                )));
            }
        }
    }

    let mut a = m.as_slice().to_vec();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut a, n, &mut d, &mut e);
    ql_implicit(&mut d, &mut e)?;
    d.sort_unstable_by(f64::total_cmp);
    Spectrum::new(d, n)
}

/// Householder reduction of the row-major matrix `a` to tridiagonal form.
///
/// On return `d` holds the diagonal and `e[1..]` the subdiagonal
/// (`e[i]` couples rows `i` and `i - 1`; `e[0]` is zero). `a` is
/// destroyed. Rows are processed from the bottom up and a row whose
/// off-diagonal part sums to zero is skipped, which is what preserves
/// exact zero blocks.
fn tridiagonalize(a: &mut [f64], n: usize, d: &mut [f64], e: &mut [f64]) {
    for i in (1..n).rev() {
        let l = i - 1;
        if l > 0 {
            let mut scale = 0.0;
            for k in 0..=l {
                scale += a[i * n + k].abs();
            }
            if scale == 0.0 {
                e[i] = a[i * n + l];
                continue;
            }
            let mut h = 0.0;
            for k in 0..=l {
                a[i * n + k] /= scale;
                h += a[i * n + k] * a[i * n + k];
            }
            let mut f = a[i * n + l];
            let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
            e[i] = scale * g;
            h -= f * g;
            a[i * n + l] = f - g;

            // w = A v / h, stored in e[0..=l] as workspace.
            f = 0.0;
            for j in 0..=l {
                let mut g = 0.0;
                for k in 0..=j {
                    g += a[j * n + k] * a[i * n + k];
                }
                for k in (j + 1)..=l {
                    g += a[k * n + j] * a[i * n + k];
                }
                e[j] = g / h;
                f += e[j] * a[i * n + j];
            }

            // Rank-2 update of the leading (l+1) x (l+1) block.
            let hh = f / (h + h);
            for j in 0..=l {
                let f = a[i * n + j];
                let g = e[j] - hh * f;
                e[j] = g;
                for k in 0..=j {
                    a[j * n + k] -= f * e[k] + g * a[i * n + k];
                }
            }
        } else {
            e[i] = a[i * n];
        }
    }
    e[0] = 0.0;
    for i in 0..n {
        d[i] = a[i * n + i];
    }
}

/// Implicitly shifted QL iteration on a symmetric tridiagonal matrix.
///
/// `d` is the diagonal, `e[1..]` the subdiagonal on entry; on success
/// `d` holds the (unsorted) eigenvalues.
fn ql_implicit(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 1 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            // Look for a negligible subdiagonal entry splitting the block.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(Error::Numerical {
                    index: l,
                    message: format!(
                        "QL iteration failed to converge within {MAX_QL_SWEEPS} sweeps"
                    ),
                });
            }

            // Wilkinson-style shift from the 2x2 block at l.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0, 1.0);
            let mut p = 0.0;

            let mut i = m - 1;
            let completed = loop {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // Deflate without finishing the sweep.
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break false;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if i == l {
                    break true;
                }
                i -= 1;
            };
            if completed {
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
    }
    Ok(())
}
