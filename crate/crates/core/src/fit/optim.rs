//! Nelder–Mead, Levenberg–Marquardt and small bounded linear least squares.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder–Mead with the standard coefficients (1, 2, ½, ½).
///
/// Converges when the simplex spans at most `x_tol` in every coordinate and
/// the vertex values differ by at most `f_tol · (|f_best| + f_floor)`.
/// Non-finite objective values are treated as +∞.
pub(crate) fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    step: f64,
    max_iters: usize,
    x_tol: f64,
    f_tol: f64,
    f_floor: f64,
) -> Minimum {
    let n = x0.len();
    let mut eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    if n == 0 {
        return Minimum { x: Vec::new(), f: eval(x0), iterations: 0, converged: true };
    }
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iters {
        // order vertices by value; stable sort keeps ties deterministic
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = values[0];
        let worst = values[n];
        let spread_x = (1..=n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (simplex[i][j] - simplex[0][j]).abs())
            .fold(0.0, f64::max);
        if best.is_finite()
            && spread_x <= x_tol
            && (worst - best) <= f_tol * (best.abs() + f_floor)
        {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = along(1.0);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(2.0);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < values[n].min(fr) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=n {
            let shrunk: Vec<f64> =
                simplex[0].iter().zip(&simplex[i]).map(|(b, x)| b + 0.5 * (x - b)).collect();
            values[i] = eval(&shrunk);
            simplex[i] = shrunk;
        }
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b))).unwrap_or(0);
    Minimum { x: simplex[best].clone(), f: values[best], iterations, converged }
}

/// Box-constrained Levenberg–Marquardt on `residuals`, with a central
/// finite-difference Jacobian. Steps are clipped to `[lo, hi]`; only strict
/// improvements are accepted, so the result is never worse than `x0`.
pub(crate) fn levenberg_marquardt<R>(
    mut residuals: R,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    max_iters: usize,
) -> Minimum
where
    R: FnMut(&[f64]) -> Option<Vec<f64>>,
{
    let n = x0.len();
    let sse = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let Some(mut r) = residuals(x0) else {
        return Minimum { x: x0.to_vec(), f: f64::INFINITY, iterations: 0, converged: false };
    };
    let mut x = x0.to_vec();
    let mut f = sse(&r);
    if n == 0 || !f.is_finite() {
        return Minimum { x, f, iterations: 0, converged: n == 0 };
    }
    let clip = |v: f64, i: usize| v.clamp(lo[i], hi[i]);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;

    'outer: while iterations < max_iters {
        iterations += 1;
        let m = r.len();
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for j in 0..n {
            let h = 1e-6 * x[j].abs().max(1e-3);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] = clip(x[j] + h, j);
            xm[j] = clip(x[j] - h, j);
            let width = xp[j] - xm[j];
            if width <= 0.0 {
                continue;
            }
            let (Some(rp), Some(rm)) = (residuals(&xp), residuals(&xm)) else {
                continue;
            };
            for i in 0..m {
                jac[(i, j)] = (rp[i] - rm[i]) / width;
            }
        }
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * rv;
        let gradient_scale = jtr.amax();
        if gradient_scale == 0.0 || !gradient_scale.is_finite() {
            converged = true;
            break;
        }
        loop {
            let mut a = jtj.clone();
            for j in 0..n {
                a[(j, j)] += lambda * jtj[(j, j)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&jtr) else {
                lambda *= 10.0;
                if lambda > 1e16 {
                    break 'outer;
                }
                continue;
            };
            let trial: Vec<f64> = (0..n).map(|j| clip(x[j] - step[j], j)).collect();
            let moved = trial.iter().zip(&x).any(|(a, b)| a != b);
            if !moved {
                converged = true;
                break 'outer;
            }
            if let Some(rt) = residuals(&trial) {
                let ft = sse(&rt);
                if ft < f {
                    let small_gain = f - ft <= 1e-15 * f;
                    x = trial;
                    r = rt;
                    f = ft;
                    lambda = (lambda * 0.3).max(1e-12);
                    if small_gain {
                        converged = true;
                        break 'outer;
                    }
                    break;
                }
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                // no downhill step at any damping: stationary to working precision
                converged = true;
                break 'outer;
            }
        }
    }
    Minimum { x, f, iterations, converged }
}

/// Least squares `min ‖y − Σ c_j col_j‖²` with `c_j ∈ [lo_j, hi_j]`, for up
/// to two columns. The problem is a convex quadratic, so the optimum is the
/// unconstrained one when feasible and otherwise lies on a face of the box.
pub(crate) fn bounded_lstsq(cols: &[Vec<f64>], y: &[f64], lo: &[f64], hi: &[f64]) -> Option<(Vec<f64>, f64)> {
    let k = cols.len();
    let residual = |c: &[f64]| -> f64 {
        y.iter()
            .enumerate()
            .map(|(i, yi)| {
                let fit: f64 = cols.iter().zip(c).map(|(col, cj)| cj * col[i]).sum();
                (yi - fit).powi(2)
            })
            .sum()
    };
    match k {
        0 => Some((Vec::new(), residual(&[]))),
        1 => {
            let c = solve_one(&cols[0], y)?.clamp(lo[0], hi[0]);
            Some((vec![c], residual(&[c])))
        }
        2 => {
            let mut best: Option<(Vec<f64>, f64)> = None;
            let mut consider = |c: Vec<f64>| {
                if c.iter().all(|v| v.is_finite()) {
                    let r = residual(&c);
                    if best.as_ref().is_none_or(|(_, b)| r < *b) {
                        best = Some((c, r));
                    }
                }
            };
            if let Some(c) = solve_two(&cols[0], &cols[1], y) {
                if (0..2).all(|j| c[j] >= lo[j] && c[j] <= hi[j]) {
                    consider(c);
                    return best;
                }
            }
            for fixed in 0..2 {
                let free = 1 - fixed;
                for bound in [lo[fixed], hi[fixed]] {
                    if !bound.is_finite() {
                        continue;
                    }
                    let shifted: Vec<f64> =
                        y.iter().zip(&cols[fixed]).map(|(yi, ci)| yi - bound * ci).collect();
                    if let Some(cf) = solve_one(&cols[free], &shifted) {
                        let mut c = vec![0.0; 2];
                        c[fixed] = bound;
                        c[free] = cf.clamp(lo[free], hi[free]);
                        consider(c);
                    }
                }
            }
            best
        }
        _ => None,
    }
}

fn solve_one(col: &[f64], y: &[f64]) -> Option<f64> {
    let den: f64 = col.iter().map(|c| c * c).sum();
    if den == 0.0 || !den.is_finite() {
        return None;
    }
    let num: f64 = col.iter().zip(y).map(|(c, yi)| c * yi).sum();
    Some(num / den)
}

fn solve_two(c0: &[f64], c1: &[f64], y: &[f64]) -> Option<Vec<f64>> {
    let m = y.len();
    let a = DMatrix::from_fn(m, 2, |i, j| if j == 0 { c0[i] } else { c1[i] });
    let b = DVector::from_column_slice(y);
    let svd = a.svd(true, true);
    let sol = svd.solve(&b, 1e-13 * svd.singular_values.max()).ok()?;
    if svd.rank(1e-13 * svd.singular_values.max()) < 2 {
        return None;
    }
    Some(vec![sol[0], sol[1]])
}
