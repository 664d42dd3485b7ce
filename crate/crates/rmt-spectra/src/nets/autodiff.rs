//! Exact first- and second-order derivatives of the batch loss.
//!
//! Gradients are computed by reverse accumulation. Hessian-vector
//! products use forward-over-reverse: a tangent (directional) version
//! of the forward pass runs alongside the primal, and the reverse pass
//! propagates both the adjoint and its tangent. ReLU has zero second
//! derivative almost everywhere, so its contribution enters only
//! through the activation masks, which the tangent passes share with
//! the primal. Dense Hessians are assembled column by column from unit
//! vectors; columns are independent and computed in parallel, then
//! merged in index order so results do not depend on thread scheduling.
//!
//! For the squared-error head the Gauss-Newton matrix is
//! `G = (1/N) sum_n J_n^T J_n` with `J_n` the per-datum output
//! Jacobian. Its spectrum is computed through the Gram matrix
//! `(J J^T)/N` whenever the stacked Jacobian has fewer rows than
//! columns: the nonzero eigenvalues agree and the remaining
//! `P - rows` eigenvalues are exact zeros by construction.

use crate::eigensolve::{eigvals_symmetric, Spectrum};
use crate::error::{Error, Result};
use crate::matrix::SymmetricMatrix;
use crate::nets::data::{Dataset, TargetValues};
use crate::nets::mlp::{MlpSpec, OutputHead, Weights};
use rayon::prelude::*;

/// Largest parameter count for which dense Hessians are assembled.
pub const DEFAULT_HESSIAN_CAP: usize = 4000;

/// Relative asymmetry allowed in an assembled Hessian before it is
/// rejected as numerically unsound.
const HESSIAN_ASYMMETRY_TOL: f64 = 1e-8;

fn check_compatible(spec: &MlpSpec, weights: &Weights, data: &Dataset) -> Result<()> {
    if weights.len() != spec.param_count() {
        return Err(Error::dimension(format!(
            "weight vector has {} entries, architecture needs {}",
            weights.len(),
            spec.param_count()
        )));
    }
    if data.input_dim() != spec.input_dim() {
        return Err(Error::dimension(format!(
            "dataset feature dimension {} vs network input {}",
            data.input_dim(),
            spec.input_dim()
        )));
    }
    match (spec.head(), data.targets()) {
        (OutputHead::SquaredError, TargetValues::Regression { width, .. }) => {
            if *width != spec.output_dim() {
                return Err(Error::dimension(format!(
                    "target width {} vs network output {}",
                    width,
                    spec.output_dim()
                )));
            }
        }
        (OutputHead::SoftmaxCrossEntropy, TargetValues::Classes { n_classes, .. }) => {
            if *n_classes != spec.output_dim() {
                return Err(Error::dimension(format!(
                    "{} classes vs network output {}",
                    n_classes,
                    spec.output_dim()
                )));
            }
        }
        (OutputHead::SquaredError, TargetValues::Classes { .. }) => {
            return Err(Error::validation(
                "squared-error head needs regression targets",
            ));
        }
        (OutputHead::SoftmaxCrossEntropy, TargetValues::Regression { .. }) => {
            return Err(Error::validation(
                "softmax cross-entropy head needs class labels",
            ));
        }
    }
    Ok(())
}

/// Per-datum primal state shared by every Hessian-vector product.
struct DatumCache {
    /// Inputs to each affine layer: `a_0 = x` through `a_{L-1}`.
    activations: Vec<Vec<f64>>,
    /// ReLU derivative (0 or 1) at each hidden layer.
    masks: Vec<Vec<f64>>,
    /// Adjoints `dloss/dz_l` of the un-averaged per-datum loss.
    deltas: Vec<Vec<f64>>,
    /// Softmax probabilities (squared-error head leaves this empty).
    probs: Vec<f64>,
    loss: f64,
}

/// Primal forward and reverse state of one batch, reused across
/// Hessian columns.
pub struct HessianWorkspace<'a> {
    spec: &'a MlpSpec,
    weights: &'a Weights,
    data: Vec<DatumCache>,
}

impl<'a> HessianWorkspace<'a> {
    pub fn new(spec: &'a MlpSpec, weights: &'a Weights, batch: &Dataset) -> Result<Self> {
        check_compatible(spec, weights, batch)?;
        let flat = weights.as_slice();
        let n_layers = spec.n_layers();
        let mut data = Vec::with_capacity(batch.len());
        for row in 0..batch.len() {
            let mut activations = Vec::with_capacity(n_layers);
            let mut masks = Vec::with_capacity(n_layers.saturating_sub(1));
            let mut a = batch.input(row).to_vec();
            for layer in 0..n_layers {
                let (w_start, b_start, fan_in, fan_out) = spec.layer_offsets(layer);
                let mut z = vec![0.0; fan_out];
                for (j, zj) in z.iter_mut().enumerate() {
                    let w_row = &flat[w_start + j * fan_in..w_start + (j + 1) * fan_in];
                    let mut acc = flat[b_start + j];
                    for (wv, av) in w_row.iter().zip(&a) {
                        acc += wv * av;
                    }
                    *zj = acc;
                }
                activations.push(a);
                if layer + 1 < n_layers {
                    let mask: Vec<f64> =
                        z.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
                    for (v, m) in z.iter_mut().zip(&mask) {
                        *v *= m;
                    }
                    masks.push(mask);
                    a = z;
                } else {
                    a = z;
                }
            }
            let output = a;

            let (loss, delta_out, probs) = match spec.head() {
                OutputHead::SquaredError => {
                    let y = batch.target_row(row).expect("checked regression targets");
                    let mut loss = 0.0;
                    let delta: Vec<f64> = output
                        .iter()
                        .zip(y)
                        .map(|(&f, &t)| {
                            let r = f - t;
                            loss += r * r;
                            2.0 * r
                        })
                        .collect();
                    (loss, delta, Vec::new())
                }
                OutputHead::SoftmaxCrossEntropy => {
                    let label = batch.label(row).expect("checked class labels");
                    let max = output.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
                    let mut probs: Vec<f64> = output.iter().map(|&v| (v - max).exp()).collect();
                    let total: f64 = probs.iter().sum();
                    for p in &mut probs {
                        *p /= total;
                    }
                    let loss = -probs[label].ln();
                    let mut delta = probs.clone();
                    delta[label] -= 1.0;
                    (loss, delta, probs)
                }
            };

            // Reverse pass for the adjoints of every layer input.
            let mut deltas = vec![Vec::new(); n_layers];
            deltas[n_layers - 1] = delta_out;
            for layer in (1..n_layers).rev() {
                let (w_start, _, fan_in, fan_out) = spec.layer_offsets(layer);
                let upper = &deltas[layer];
                let mut lower = vec![0.0; fan_in];
                for j in 0..fan_out {
                    let w_row = &flat[w_start + j * fan_in..w_start + (j + 1) * fan_in];
                    let dj = upper[j];
                    for (l, wv) in lower.iter_mut().zip(w_row) {
                        *l += wv * dj;
                    }
                }
                for (l, m) in lower.iter_mut().zip(&masks[layer - 1]) {
                    *l *= m;
                }
                deltas[layer - 1] = lower;
            }

            data.push(DatumCache {
                activations,
                masks,
                deltas,
                probs,
                loss,
            });
        }
        Ok(HessianWorkspace {
            spec,
            weights,
            data,
        })
    }

    /// Batch loss (mean of per-datum losses).
    #[must_use]
    pub fn loss(&self) -> f64 {
        self.data.iter().map(|d| d.loss).sum::<f64>() / self.data.len() as f64
    }

    /// Batch gradient, assembled from the cached adjoints.
    #[must_use]
    pub fn gradient(&self) -> Vec<f64> {
        let spec = self.spec;
        let mut grad = vec![0.0; spec.param_count()];
        for datum in &self.data {
            for layer in 0..spec.n_layers() {
                let (w_start, b_start, fan_in, _) = spec.layer_offsets(layer);
                let a = &datum.activations[layer];
                let delta = &datum.deltas[layer];
                for (j, &dj) in delta.iter().enumerate() {
                    let row = &mut grad[w_start + j * fan_in..w_start + (j + 1) * fan_in];
                    for (g, &av) in row.iter_mut().zip(a) {
                        *g += dj * av;
                    }
                    grad[b_start + j] += dj;
                }
            }
        }
        let n = self.data.len() as f64;
        for g in &mut grad {
            *g /= n;
        }
        grad
    }

    /// Hessian-vector product `H v` of the batch loss.
    pub fn hvp(&self, v: &[f64]) -> Result<Vec<f64>> {
        let spec = self.spec;
        if v.len() != spec.param_count() {
            return Err(Error::dimension(format!(
                "direction has {} entries, architecture needs {}",
                v.len(),
                spec.param_count()
            )));
        }
        let flat = self.weights.as_slice();
        let n_layers = spec.n_layers();
        let mut out = vec![0.0; spec.param_count()];
        let mut adots: Vec<Vec<f64>> = (0..n_layers)
            .map(|l| vec![0.0; spec.layer_widths()[l]])
            .collect();

        for datum in &self.data {
            // Forward tangent: adot_0 = 0, and through each layer
            //   zdot = W adot + V a + c,  adot_next = mask .* zdot.
            for dot in &mut adots {
                dot.iter_mut().for_each(|x| *x = 0.0);
            }
            let mut fdot = Vec::new();
            for layer in 0..n_layers {
                let (w_start, b_start, fan_in, fan_out) = spec.layer_offsets(layer);
                let a = &datum.activations[layer];
                let mut zdot = vec![0.0; fan_out];
                for (j, zd) in zdot.iter_mut().enumerate() {
                    let w_row = &flat[w_start + j * fan_in..w_start + (j + 1) * fan_in];
                    let v_row = &v[w_start + j * fan_in..w_start + (j + 1) * fan_in];
                    let mut acc = v[b_start + j];
                    for i in 0..fan_in {
                        acc += w_row[i] * adots[layer][i] + v_row[i] * a[i];
                    }
                    *zd = acc;
                }
                if layer + 1 < n_layers {
                    for (zd, m) in zdot.iter_mut().zip(&datum.masks[layer]) {
                        *zd *= m;
                    }
                    adots[layer + 1].copy_from_slice(&zdot);
                } else {
                    fdot = zdot;
                }
            }

            // Head tangent: the derivative of the output adjoint along v.
            let mut deltadot = match spec.head() {
                OutputHead::SquaredError => {
                    let mut d = fdot;
                    for x in &mut d {
                        *x *= 2.0;
                    }
                    d
                }
                OutputHead::SoftmaxCrossEntropy => {
                    let p = &datum.probs;
                    let dot: f64 = p.iter().zip(&fdot).map(|(&pk, &fk)| pk * fk).sum();
                    p.iter()
                        .zip(&fdot)
                        .map(|(&pk, &fk)| pk * (fk - dot))
                        .collect()
                }
            };

            // Reverse tangent, accumulating the product as it descends:
            //   out_W += deltadot a^T + delta adot^T,  out_b += deltadot,
            //   deltadot_lower = mask .* (W^T deltadot + V^T delta).
            for layer in (0..n_layers).rev() {
                let (w_start, b_start, fan_in, fan_out) = spec.layer_offsets(layer);
                let a = &datum.activations[layer];
                let adot = &adots[layer];
                let delta = &datum.deltas[layer];
                for j in 0..fan_out {
                    let ddj = deltadot[j];
                    let dj = delta[j];
                    let row = &mut out[w_start + j * fan_in..w_start + (j + 1) * fan_in];
                    for i in 0..fan_in {
                        row[i] += ddj * a[i] + dj * adot[i];
                    }
                    out[b_start + j] += ddj;
                }
                if layer > 0 {
                    let mut lower = vec![0.0; fan_in];
                    for j in 0..fan_out {
                        let w_row = &flat[w_start + j * fan_in..w_start + (j + 1) * fan_in];
                        let v_row = &v[w_start + j * fan_in..w_start + (j + 1) * fan_in];
                        let (ddj, dj) = (deltadot[j], delta[j]);
                        for i in 0..fan_in {
                            lower[i] += w_row[i] * ddj + v_row[i] * dj;
                        }
                    }
                    for (l, m) in lower.iter_mut().zip(&datum.masks[layer - 1]) {
                        *l *= m;
                    }
                    deltadot = lower;
                }
            }
        }

        let n = self.data.len() as f64;
        for x in &mut out {
            *x /= n;
        }
        Ok(out)
    }
}

/// Batch loss under the architecture's output head.
pub fn batch_loss(spec: &MlpSpec, weights: &Weights, batch: &Dataset) -> Result<f64> {
    Ok(HessianWorkspace::new(spec, weights, batch)?.loss())
}

/// Batch loss and its gradient.
pub fn batch_gradient(spec: &MlpSpec, weights: &Weights, batch: &Dataset) -> Result<(f64, Vec<f64>)> {
    let ws = HessianWorkspace::new(spec, weights, batch)?;
    Ok((ws.loss(), ws.gradient()))
}

/// One Hessian-vector product; build a [`HessianWorkspace`] instead
/// when many products against the same batch are needed.
pub fn hvp(spec: &MlpSpec, weights: &Weights, batch: &Dataset, v: &[f64]) -> Result<Vec<f64>> {
    HessianWorkspace::new(spec, weights, batch)?.hvp(v)
}

/// Dense batch-loss Hessian, one column per unit direction.
///
/// Refuses architectures with more than `cap` parameters. The raw
/// column assembly is checked for relative asymmetry above 1e-8
/// (columns of an exact Hessian agree with rows up to roundoff) and
/// then symmetrized.
pub fn hessian_exact(
    spec: &MlpSpec,
    weights: &Weights,
    batch: &Dataset,
    cap: usize,
) -> Result<SymmetricMatrix> {
    let p = spec.param_count();
    if p > cap {
        return Err(Error::Resource(format!(
            "dense Hessian of {p} parameters exceeds the cap of {cap}"
        )));
    }
    let workspace = HessianWorkspace::new(spec, weights, batch)?;
    let columns: Vec<Vec<f64>> = (0..p)
        .into_par_iter()
        .map(|j| {
            let mut e = vec![0.0; p];
            e[j] = 1.0;
            workspace.hvp(&e).expect("direction length is correct")
        })
        .collect();

    let mut scale: f64 = 1.0;
    for col in &columns {
        for &x in col {
            scale = scale.max(x.abs());
        }
    }
    for j in 0..p {
        for i in 0..j {
            let asym = (columns[j][i] - columns[i][j]).abs();
            if asym > HESSIAN_ASYMMETRY_TOL * scale {
                return Err(Error::Numerical {
                    index: j,
                    message: format!(
                        "Hessian asymmetry {asym:e} at ({i}, {j}) exceeds {HESSIAN_ASYMMETRY_TOL:e} relative"
                    ),
                });
            }
        }
    }
    Ok(SymmetricMatrix::from_fn(p, |i, j| {
        0.5 * (columns[j][i] + columns[i][j])
    }))
}

/// Eigenvalues of the dense batch-loss Hessian.
pub fn hessian_spectrum(
    spec: &MlpSpec,
    weights: &Weights,
    batch: &Dataset,
    cap: usize,
) -> Result<Spectrum> {
    eigvals_symmetric(&hessian_exact(spec, weights, batch, cap)?)
}

/// Jacobian of the network output at one input, row-major
/// `output_dim x param_count`.
pub fn output_jacobian(spec: &MlpSpec, weights: &Weights, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != spec.input_dim() {
        return Err(Error::dimension(format!(
            "input has length {}, architecture expects {}",
            x.len(),
            spec.input_dim()
        )));
    }
    if weights.len() != spec.param_count() {
        return Err(Error::dimension(
            "weight vector does not match the architecture",
        ));
    }
    let flat = weights.as_slice();
    let n_layers = spec.n_layers();

    // Forward, caching layer inputs and masks.
    let mut activations = Vec::with_capacity(n_layers);
    let mut masks = Vec::with_capacity(n_layers.saturating_sub(1));
    let mut a = x.to_vec();
    for layer in 0..n_layers {
        let (w_start, b_start, fan_in, fan_out) = spec.layer_offsets(layer);
        let mut z = vec![0.0; fan_out];
        for (j, zj) in z.iter_mut().enumerate() {
            let w_row = &flat[w_start + j * fan_in..w_start + (j + 1) * fan_in];
            let mut acc = flat[b_start + j];
            for (wv, av) in w_row.iter().zip(&a) {
                acc += wv * av;
            }
            *zj = acc;
        }
        activations.push(a);
        if layer + 1 < n_layers {
            let mask: Vec<f64> = z.iter().map(|&v| if v > 0.0 { 1.0 } else { 0.0 }).collect();
            for (v, m) in z.iter_mut().zip(&mask) {
                *v *= m;
            }
            masks.push(mask);
        }
        a = z;
    }

    // One reverse pass per output component.
    let p = spec.param_count();
    let c = spec.output_dim();
    let mut jac = vec![0.0; c * p];
    for k in 0..c {
        let row = &mut jac[k * p..(k + 1) * p];
        let mut delta = vec![0.0; c];
        delta[k] = 1.0;
        for layer in (0..n_layers).rev() {
            let (w_start, b_start, fan_in, fan_out) = spec.layer_offsets(layer);
            let act = &activations[layer];
            for j in 0..fan_out {
                let dj = delta[j];
                if dj != 0.0 {
                    let out_row = &mut row[w_start + j * fan_in..w_start + (j + 1) * fan_in];
                    for (g, &av) in out_row.iter_mut().zip(act) {
                        *g += dj * av;
                    }
                    row[b_start + j] += dj;
                }
            }
            if layer > 0 {
                let mut lower = vec![0.0; fan_in];
                for j in 0..fan_out {
                    let w_row = &flat[w_start + j * fan_in..w_start + (j + 1) * fan_in];
                    let dj = delta[j];
                    if dj != 0.0 {
                        for (l, wv) in lower.iter_mut().zip(w_row) {
                            *l += wv * dj;
                        }
                    }
                }
                for (l, m) in lower.iter_mut().zip(&masks[layer - 1]) {
                    *l *= m;
                }
                delta = lower;
            }
        }
    }
    Ok(jac)
}

fn require_squared_error(spec: &MlpSpec) -> Result<()> {
    if spec.head() != OutputHead::SquaredError {
        return Err(Error::validation(
            "the Gauss-Newton matrix is defined here for the squared-error head only",
        ));
    }
    Ok(())
}

/// Stacked per-datum output Jacobians, `batch_len * output_dim` rows.
fn stacked_jacobian(spec: &MlpSpec, weights: &Weights, batch: &Dataset) -> Result<Vec<Vec<f64>>> {
    let c = spec.output_dim();
    let rows: Vec<Vec<f64>> = (0..batch.len())
        .into_par_iter()
        .map(|r| output_jacobian(spec, weights, batch.input(r)))
        .collect::<Result<Vec<_>>>()?
        .into_par_iter()
        .flat_map_iter(move |jac| {
            let p = jac.len() / c;
            (0..c)
                .map(|k| jac[k * p..(k + 1) * p].to_vec())
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(rows)
}

/// Dense Gauss-Newton matrix `(1/N) sum_n J_n^T J_n` for the
/// squared-error head.
pub fn gauss_newton(
    spec: &MlpSpec,
    weights: &Weights,
    batch: &Dataset,
    cap: usize,
) -> Result<SymmetricMatrix> {
    require_squared_error(spec)?;
    let p = spec.param_count();
    if p > cap {
        return Err(Error::Resource(format!(
            "dense Gauss-Newton matrix of {p} parameters exceeds the cap of {cap}"
        )));
    }
    let rows = stacked_jacobian(spec, weights, batch)?;
    let inv_n = 1.0 / batch.len() as f64;
    let mut g = vec![0.0; p * p];
    for row in &rows {
        for i in 0..p {
            let ri = row[i];
            if ri != 0.0 {
                let out = &mut g[i * p..(i + 1) * p];
                for (o, &rj) in out.iter_mut().zip(row) {
                    *o += ri * rj;
                }
            }
        }
    }
    Ok(SymmetricMatrix::from_fn(p, |i, j| g[i * p + j] * inv_n))
}

/// Eigenvalues of the Gauss-Newton matrix.
///
/// When the stacked Jacobian has fewer rows than parameters the
/// spectrum is computed from the small Gram matrix `(J J^T)/N` and
/// padded with `P - rows` exact zero eigenvalues; otherwise the dense
/// matrix is eigensolved directly.
pub fn gauss_newton_spectrum(
    spec: &MlpSpec,
    weights: &Weights,
    batch: &Dataset,
) -> Result<Spectrum> {
    require_squared_error(spec)?;
    let p = spec.param_count();
    let rows = stacked_jacobian(spec, weights, batch)?;
    let n_rows = rows.len();
    let inv_n = 1.0 / batch.len() as f64;
    if n_rows < p {
        let gram = SymmetricMatrix::from_fn(n_rows, |a, b| {
            rows[a].iter().zip(&rows[b]).map(|(x, y)| x * y).sum::<f64>() * inv_n
        });
        let nonzero = eigvals_symmetric(&gram)?;
        let mut values = vec![0.0; p - n_rows];
        values.extend_from_slice(nonzero.values());
        values.sort_unstable_by(f64::total_cmp);
        Spectrum::new(values, p)
    } else {
        eigvals_symmetric(&gauss_newton(spec, weights, batch, p)?)
    }
}
