//! Small numerical optimizers: Nelder–Mead for the smooth fits and
//! Lawson–Hanson nonnegative least squares for delay solving.

use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    pub step: f64,
    pub xtol: f64,
    pub ftol: f64,
    pub max_iter: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { step: 0.1, xtol: 1e-10, ftol: 1e-14, max_iter: 20_000 }
    }
}

/// Downhill simplex minimization from `x0`.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], opts: NelderMeadOptions) -> Minimum {
    let d = x0.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for k in 0..d {
        let mut x = x0.to_vec();
        x[k] += opts.step;
        let fx = f(&x);
        simplex.push((x, fx));
    }
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[d].1);
        let spread = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (worst - best).abs() <= opts.ftol && spread <= opts.xtol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..d).map(|k| simplex[..d].iter().map(|(x, _)| x[k]).sum::<f64>() / d as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..d).map(|k| centroid[k] + t * (simplex[d].0[k] - centroid[k])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst {
            let x = along(-0.5);
            let fx = f(&x);
            (x, fx)
        } else {
            let x = along(0.5);
            let fx = f(&x);
            (x, fx)
        };
        if fc < worst.min(fr) {
            simplex[d] = (xc, fc);
            continue;
        }
        let x0 = simplex[0].0.clone();
        for (x, fx) in simplex.iter_mut().skip(1) {
            for k in 0..d {
                x[k] = x0[k] + 0.5 * (x[k] - x0[k]);
            }
            *fx = f(x);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    Minimum { x, f, iterations, converged }
}

/// Minimum-norm least-squares solution of `A x = b` on the given columns.
fn lstsq_columns(a: &DMatrix<f64>, b: &DVector<f64>, cols: &[usize]) -> Vec<f64> {
    let sub = DMatrix::from_fn(a.nrows(), cols.len(), |r, c| a[(r, cols[c])]);
    let svd = sub.svd(true, true);
    let eps = 1e-12 * svd.singular_values.max().max(1e-300);
    let z = svd.solve(b, eps).expect("U and V were requested");
    z.iter().copied().collect()
}

/// Lawson–Hanson: `argmin ‖A x − b‖₂` subject to `x ≥ 0`.
///
/// `a` is row-major with `cols` columns.
pub fn nnls(a: &[Vec<f64>], b: &[f64], cols: usize) -> Vec<f64> {
    let m = a.len();
    if m == 0 || cols == 0 {
        return vec![0.0; cols];
    }
    let am = DMatrix::from_fn(m, cols, |r, c| a[r][c]);
    let bv = DVector::from_column_slice(b);
    let scale = am.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0) * bv.amax().max(1.0);
    let tol = 1e-13 * scale * (m.max(cols) as f64);
    let mut x = vec![0.0; cols];
    let mut passive = vec![false; cols];
    let grad = |x: &[f64]| -> Vec<f64> {
        let r = &bv - &am * DVector::from_column_slice(x);
        (am.transpose() * r).iter().copied().collect()
    };
    for _outer in 0..(3 * cols + 10) {
        let w = grad(&x);
        let Some(j) = (0..cols).filter(|&j| !passive[j] && w[j] > tol).max_by(|&p, &q| w[p].total_cmp(&w[q])) else {
            break;
        };
        passive[j] = true;
        for _inner in 0..(3 * cols + 10) {
            let pcols: Vec<usize> = (0..cols).filter(|&k| passive[k]).collect();
            let zp = lstsq_columns(&am, &bv, &pcols);
            let mut z = vec![0.0; cols];
            for (k, &c) in pcols.iter().enumerate() {
                z[c] = zp[k];
            }
            if pcols.iter().all(|&c| z[c] > 0.0) {
                x = z;
                break;
            }
            let alpha = pcols
                .iter()
                .filter(|&&c| z[c] <= 0.0)
                .map(|&c| x[c] / (x[c] - z[c]))
                .fold(f64::INFINITY, f64::min);
            for c in 0..cols {
                x[c] += alpha * (z[c] - x[c]);
                if passive[c] && x[c] <= 1e-15 * scale {
                    x[c] = 0.0;
                    passive[c] = false;
                }
            }
        }
    }
    x
}
