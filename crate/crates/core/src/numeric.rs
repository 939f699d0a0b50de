//! Adaptive quadrature.

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
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
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `int_0^inf g(y) dy` via `y = exp(x)` over `x in [center - half_width, center + half_width]`.
///
/// Suited to integrands concentrated on a log scale around `exp(center)`.
pub fn integrate_log_scale<F: Fn(f64) -> f64>(g: F, center: f64, half_width: f64, tol: f64) -> f64 {
    // split into panels so the adaptive rule cannot skip a narrow peak
    let panels = 16;
    let lo = center - half_width;
    let width = 2.0 * half_width / panels as f64;
    (0..panels)
        .map(|i| {
            let a = lo + i as f64 * width;
            integrate(
                |x| {
                    let y = x.exp();
                    g(y) * y
                },
                a,
                a + width,
                tol / panels as f64,
            )
        })
        .sum()
}
