//! Adaptive Simpson integration, used to check samplers against densities
//! without relying on closed-form CDFs.

/// `∫_a^b f` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb, m) = (f(a), f(b), (a + b) / 2.0);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    refine(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = (a + b) / 2.0;
    let (lm, rm) = ((a + m) / 2.0, (m + b) / 2.0);
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// `∫_a^∞ f` for `a >= 1`, by the substitution `t = 1/u`.
pub fn integrate_tail<F: Fn(f64) -> f64>(f: &F, a: f64, tol: f64) -> f64 {
    assert!(a >= 1.0, "tail integral starts at {a}");
    let g = |u: f64| if u == 0.0 { 0.0 } else { f(1.0 / u) / (u * u) };
    integrate(&g, 0.0, 1.0 / a, tol)
}

/// `∫_{-∞}^x f` for a density symmetric about zero.
pub fn symmetric_cdf<F: Fn(f64) -> f64>(f: &F, x: f64, tol: f64) -> f64 {
    let half = if x.abs() <= 1.0 {
        integrate(f, 0.0, x.abs(), tol)
    } else {
        let body = integrate(f, 0.0, 1.0, tol);
        let total = body + integrate_tail(f, 1.0, tol);
        total - integrate_tail(f, x.abs(), tol)
    };
    let half_mass = integrate(f, 0.0, 1.0, tol) + integrate_tail(f, 1.0, tol);
    if x >= 0.0 {
        half_mass + half
    } else {
        half_mass - half
    }
}
