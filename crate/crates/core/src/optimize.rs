//! Derivative-free Nelder–Mead simplex minimization and central finite differences.

/// Settings for one simplex run.
#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Convergence on the spread `max f - min f` over the simplex.
    pub f_tol: f64,
    /// Convergence on the largest vertex distance from the best vertex (max-norm).
    pub x_tol: f64,
    pub max_evals: usize,
    /// Edge length of the initial axis-aligned simplex.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            f_tol: 1e-8,
            x_tol: 1e-7,
            max_evals: 20_000,
            initial_step: 0.25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimize `f` from `x0`. Non-finite values are treated as `+inf`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    vals.push(eval(x0, &mut evals));
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += opts.initial_step;
        vals.push(eval(&p, &mut evals));
        pts.push(p);
    }

    let (alpha, gamma, rho, shrink) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    let mut order: Vec<usize> = (0..=n).collect();

    while evals < opts.max_evals {
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        let spread = vals[worst] - vals[best];
        let diameter = pts
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&pts[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if vals[best].is_finite() && spread <= opts.f_tol && diameter <= opts.x_tol {
            converged = true;
            break;
        }

        let mut centroid = vec![0.0; n];
        for &i in order.iter().take(n) {
            for (c, v) in centroid.iter_mut().zip(&pts[i]) {
                *c += v / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&pts[worst])
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };

        let xr = along(-alpha);
        let fr = eval(&xr, &mut evals);
        if fr < vals[best] {
            let xe = along(-gamma);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                pts[worst] = xe;
                vals[worst] = fe;
            } else {
                pts[worst] = xr;
                vals[worst] = fr;
            }
            continue;
        }
        if fr < vals[second_worst] {
            pts[worst] = xr;
            vals[worst] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[worst] {
            let xc = along(-rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < vals[worst].min(fr) {
            pts[worst] = xc;
            vals[worst] = fc;
            continue;
        }
        let xb = pts[best].clone();
        for &i in order.iter().skip(1) {
            let p: Vec<f64> = xb
                .iter()
                .zip(&pts[i])
                .map(|(b, v)| b + shrink * (v - b))
                .collect();
            vals[i] = eval(&p, &mut evals);
            pts[i] = p;
        }
    }

    let best = (0..=n)
        .min_by(|&a, &b| vals[a].total_cmp(&vals[b]))
        .unwrap_or(0);
    SimplexResult {
        x: pts[best].clone(),
        fx: vals[best],
        evals,
        converged,
    }
}

/// Per-coordinate step `max(1e-4 |x_j|, 1e-5)`.
pub fn fd_steps(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| (1e-4 * v.abs()).max(1e-5)).collect()
}

/// Central-difference gradient. Returns `None` if any stencil value is non-finite.
pub fn central_gradient<F>(mut f: F, x: &[f64], steps: &[f64]) -> Option<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    let mut g = Vec::with_capacity(x.len());
    let mut p = x.to_vec();
    for j in 0..x.len() {
        p[j] = x[j] + steps[j];
        let up = f(&p);
        p[j] = x[j] - steps[j];
        let down = f(&p);
        p[j] = x[j];
        if !(up.is_finite() && down.is_finite()) {
            return None;
        }
        g.push((up - down) / (2.0 * steps[j]));
    }
    Some(g)
}

/// Central-difference Hessian. The mixed-partial stencil is symmetric in `(i, j)`,
/// so the result equals its symmetrization `(H + H^T) / 2`.
/// Returns `None` if any stencil value is non-finite.
pub fn central_hessian<F>(mut f: F, x: &[f64], steps: &[f64]) -> Option<Vec<Vec<f64>>>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x.len();
    let f0 = f(x);
    if !f0.is_finite() {
        return None;
    }
    let mut h = vec![vec![0.0; n]; n];
    let mut p = x.to_vec();
    let mut at = |p: &mut Vec<f64>, moves: &[(usize, f64)]| -> f64 {
        for &(j, d) in moves {
            p[j] = x[j] + d;
        }
        let v = f(p);
        for &(j, _) in moves {
            p[j] = x[j];
        }
        v
    };
    for i in 0..n {
        let hi = steps[i];
        let up = at(&mut p, &[(i, hi)]);
        let down = at(&mut p, &[(i, -hi)]);
        if !(up.is_finite() && down.is_finite()) {
            return None;
        }
        h[i][i] = (up - 2.0 * f0 + down) / (hi * hi);
        for j in 0..i {
            let hj = steps[j];
            let pp = at(&mut p, &[(i, hi), (j, hj)]);
            let pm = at(&mut p, &[(i, hi), (j, -hj)]);
            let mp = at(&mut p, &[(i, -hi), (j, hj)]);
            let mm = at(&mut p, &[(i, -hi), (j, -hj)]);
            if !(pp.is_finite() && pm.is_finite() && mp.is_finite() && mm.is_finite()) {
                return None;
            }
            let v = (pp - pm - mp + mm) / (4.0 * hi * hj);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    Some(h)
}
