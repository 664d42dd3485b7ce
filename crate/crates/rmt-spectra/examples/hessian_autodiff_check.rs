//! Exact MLP curvature, cross-checked four ways.
//!
//! The Hessian columns come from forward-over-reverse Hessian-vector
//! products. This example validates them against central finite
//! differences, against the closed-form Hessian of softmax regression,
//! against the identity `H = 2 G` for linear least squares, and checks
//! that the Gram-trick Gauss-Newton spectrum matches the dense one.
//!
//! ```bash
//! cargo run --release --example hessian_autodiff_check
//! ```

use rand_distr::StandardNormal;
use rmt_spectra::eigensolve::eigvals_symmetric;
use rmt_spectra::ensembles::RngSeed;
use rmt_spectra::matrix::SymmetricMatrix;
use rmt_spectra::nets::autodiff::{
    batch_gradient, batch_loss, gauss_newton, gauss_newton_spectrum, hessian_exact, hvp,
    DEFAULT_HESSIAN_CAP,
};
use rmt_spectra::nets::data::Dataset;
use rmt_spectra::nets::mlp::{init_weights, MlpSpec, OutputHead, Weights};
use rand::Rng;
use rmt_spectra::Result;

/// Random regression data plus jittered weights. The jitter moves all
/// pre-activations off the ReLU kinks, where finite differences of a
/// piecewise-smooth loss are meaningless.
fn regression_setup(
    widths: &[usize],
    n: usize,
    seed: RngSeed,
) -> Result<(MlpSpec, Weights, Dataset)> {
    let spec = MlpSpec::new(widths.to_vec(), OutputHead::SquaredError)?;
    let mut rng = seed.rng();
    let inputs: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..spec.input_dim()).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let targets: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..spec.output_dim()).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let data = Dataset::regression(inputs, targets)?;
    let mut weights = init_weights(&spec, seed);
    for w in weights.as_mut_slice() {
        *w += 0.05 * rng.sample::<f64, _>(StandardNormal);
    }
    Ok((spec, weights, data))
}

fn main() -> Result<()> {
    // 1. Directional curvature vs a central second difference of the
    // loss: v' H v should match (L(w+hv) - 2 L(w) + L(w-hv)) / h^2.
    let (spec, weights, data) = regression_setup(&[9, 7, 3], 24, RngSeed(41))?;
    let p = spec.param_count();
    let mut rng = RngSeed(42).rng();
    let v: Vec<f64> = (0..p).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let v: Vec<f64> = v.iter().map(|x| x / norm).collect();

    let hv = hvp(&spec, &weights, &data, &v)?;
    let vhv: f64 = v.iter().zip(&hv).map(|(a, b)| a * b).sum();
    let h = 1e-5;
    let shift = |t: f64| -> Result<f64> {
        let mut w = weights.clone();
        for (wi, vi) in w.as_mut_slice().iter_mut().zip(&v) {
            *wi += t * vi;
        }
        batch_loss(&spec, &w, &data)
    };
    let fd = (shift(h)? - 2.0 * shift(0.0)? + shift(-h)?) / (h * h);
    println!("directional curvature: hvp {vhv:.8}, finite difference {fd:.8}");
    assert!((vhv - fd).abs() <= 1e-4 * vhv.abs().max(1.0));

    // 2. Analytic gradient vs central finite differences, a sample of
    // coordinates.
    let (loss, grad) = batch_gradient(&spec, &weights, &data)?;
    let mut worst = 0.0_f64;
    for i in (0..p).step_by(11) {
        let mut plus = weights.clone();
        plus.as_mut_slice()[i] += h;
        let mut minus = weights.clone();
        minus.as_mut_slice()[i] -= h;
        let fd = (batch_loss(&spec, &plus, &data)? - batch_loss(&spec, &minus, &data)?) / (2.0 * h);
        worst = worst.max((grad[i] - fd).abs());
    }
    println!("loss {loss:.6}; max |gradient - finite difference| over sampled coords {worst:.2e}");
    assert!(worst < 1e-6);

    // 3. Softmax regression (single affine layer, cross-entropy) has
    // the closed form H = mean_n (diag(p) - p p') (x) xx', with the
    // bias folded in as an extra input coordinate.
    let d = 5;
    let c = 4;
    let n = 40;
    let spec_sm = MlpSpec::new(vec![d, c], OutputHead::SoftmaxCrossEntropy)?;
    let mut rng = RngSeed(7).rng();
    let inputs: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
    let data_sm = Dataset::classification(inputs.clone(), labels, c)?;
    let mut w_sm = init_weights(&spec_sm, RngSeed(8));
    for w in w_sm.as_mut_slice() {
        *w += 0.3 * rng.sample::<f64, _>(StandardNormal);
    }
    let hess = hessian_exact(&spec_sm, &w_sm, &data_sm, DEFAULT_HESSIAN_CAP)?;

    let param = |idx: usize| -> (usize, usize) {
        // (class, extended input coordinate); coordinate d is the bias.
        if idx < c * d {
            (idx / d, idx % d)
        } else {
            (idx - c * d, d)
        }
    };
    let probs: Vec<Vec<f64>> = (0..n)
        .map(|row| {
            let logits: Vec<f64> = (0..c)
                .map(|a| {
                    let mut z = w_sm.as_slice()[c * d + a];
                    for j in 0..d {
                        z += w_sm.as_slice()[a * d + j] * inputs[row][j];
                    }
                    z
                })
                .collect();
            let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
            let sum: f64 = exps.iter().sum();
            exps.iter().map(|e| e / sum).collect()
        })
        .collect();
    let xt = |row: usize, j: usize| if j == d { 1.0 } else { inputs[row][j] };
    let expected = SymmetricMatrix::from_fn(spec_sm.param_count(), |pi, pj| {
        let (a, i) = param(pi);
        let (b, j) = param(pj);
        (0..n)
            .map(|row| {
                let pa = probs[row][a];
                let pb = probs[row][b];
                let factor = if a == b { pa - pa * pb } else { -pa * pb };
                factor * xt(row, i) * xt(row, j)
            })
            .sum::<f64>()
            / n as f64
    });
    let mut max_diff = 0.0_f64;
    for i in 0..spec_sm.param_count() {
        for j in 0..spec_sm.param_count() {
            max_diff = max_diff.max((hess.get(i, j) - expected.get(i, j)).abs());
        }
    }
    println!("softmax regression: max |H - closed form| = {max_diff:.2e}");
    assert!(max_diff < 1e-8);

    // Logit shifts per input coordinate never change the softmax, so
    // the Hessian has exactly d + 1 null directions.
    let zeros = eigvals_symmetric(&hess)?
        .values()
        .iter()
        .filter(|v| v.abs() < 1e-12)
        .count();
    println!("null directions from shift invariance: expected {}, found {zeros}", d + 1);

    // 4. A linear network with squared error is a quadratic problem:
    // the Hessian equals twice the Gauss-Newton matrix exactly.
    let (spec_lin, w_lin, data_lin) = regression_setup(&[6, 2], 30, RngSeed(13))?;
    let h_lin = hessian_exact(&spec_lin, &w_lin, &data_lin, DEFAULT_HESSIAN_CAP)?;
    let g_lin = gauss_newton(&spec_lin, &w_lin, &data_lin, DEFAULT_HESSIAN_CAP)?;
    let mut worst = 0.0_f64;
    for i in 0..spec_lin.param_count() {
        for j in 0..spec_lin.param_count() {
            worst = worst.max((h_lin.get(i, j) - 2.0 * g_lin.get(i, j)).abs());
        }
    }
    println!("linear least squares: max |H - 2G| = {worst:.2e}");
    assert!(worst < 1e-10);

    // 5. With fewer batch rows than parameters the Gauss-Newton
    // spectrum comes from the small Gram matrix plus exact zeros; it
    // must agree with eigendecomposing the dense matrix.
    let (spec_gn, w_gn, data_gn) = regression_setup(&[7, 5, 1], 20, RngSeed(17))?;
    let gram = gauss_newton_spectrum(&spec_gn, &w_gn, &data_gn)?;
    let dense = eigvals_symmetric(&gauss_newton(&spec_gn, &w_gn, &data_gn, DEFAULT_HESSIAN_CAP)?)?;
    let p_gn = spec_gn.param_count();
    let exact_zeros = gram.values().iter().filter(|v| **v == 0.0).count();
    let top = gram.values()[p_gn - 1];
    let mut worst = 0.0_f64;
    for (a, b) in gram.values().iter().zip(dense.values()) {
        worst = worst.max((a - b).abs());
    }
    println!(
        "gauss-newton via gram trick: {exact_zeros} exact zeros (rank bound {}), \
         max spectrum difference {worst:.2e}",
        p_gn - 20
    );
    assert!(exact_zeros >= p_gn - 20);
    assert!(worst <= 1e-10 * top.max(1.0));

    println!("ok: all curvature cross-checks agree");
    Ok(())
}
