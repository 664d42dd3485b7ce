//! Small numerical helpers shared by the library and its test oracles.

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// Subdivides until the local Simpson error estimate is below `tol`
/// (with the usual 1/15 Richardson factor) or a depth cap of 60 is hit,
/// so integrable endpoint singularities such as the semicircle edge
/// still converge. Accuracy is limited by `tol`, not machine epsilon.
pub fn integrate(f: impl Fn(f64) -> f64 + Copy, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(a: f64, fa: f64, b: f64, fb: f64, fm: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: impl Fn(f64) -> f64 + Copy,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(a, fa, m, fm, flm);
        let right = simpson(m, fm, b, fb, frm);
        let delta = left + right - whole;
        if depth >= 60 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, flm, left, 0.5 * tol, depth + 1)
                + recurse(f, m, fm, b, fb, frm, right, 0.5 * tol, depth + 1)
        }
    }

    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(a, fa, b, fb, fm);
    recurse(f, a, fa, b, fb, fm, whole, tol, 0)
}
