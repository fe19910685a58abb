//! Lawson–Hanson nonnegative least squares and the least-distance program
//! built on top of it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// `min ‖E u − f‖₂` subject to `u ≥ 0`.
pub fn nnls(e: &DMatrix<f64>, f: &DVector<f64>) -> Result<DVector<f64>> {
    let n = e.ncols();
    let scale = e.amax().max(f.amax()).max(1.0);
    let tol = 1e-13 * scale * scale * (e.nrows().max(n) as f64);
    let max_outer = 3 * n + 10;

    let mut u = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];

    for _ in 0..max_outer {
        let w = e.transpose() * (f - e * &u);
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&a, &b| w[a].total_cmp(&w[b]));
        let Some(j) = candidate else {
            return Ok(u);
        };
        if w[j] <= tol {
            return Ok(u);
        }
        passive[j] = true;

        let mut inner = 0;
        loop {
            inner += 1;
            if inner > 3 * n + 10 {
                return Err(Error::Convergence {
                    what: "nnls inner loop",
                    iterations: inner,
                    residual: (e * &u - f).norm(),
                    last: u.iter().copied().collect(),
                });
            }
            let z = solve_passive(e, f, &passive);
            let blocked: Vec<usize> = (0..n).filter(|&k| passive[k] && z[k] <= 0.0).collect();
            if blocked.is_empty() {
                u = z;
                break;
            }
            let mut alpha = f64::INFINITY;
            for &k in &blocked {
                let denom = u[k] - z[k];
                if denom > 0.0 {
                    alpha = alpha.min(u[k] / denom);
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            u += alpha * (&z - &u);
            for k in 0..n {
                if passive[k] && u[k] <= 1e-15 * scale {
                    passive[k] = false;
                    u[k] = 0.0;
                }
            }
        }
    }
    Err(Error::Convergence {
        what: "nnls",
        iterations: max_outer,
        residual: (e * &u - f).norm(),
        last: u.iter().copied().collect(),
    })
}

fn solve_passive(e: &DMatrix<f64>, f: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..passive.len()).filter(|&k| passive[k]).collect();
    let mut z = DVector::<f64>::zeros(passive.len());
    if cols.is_empty() {
        return z;
    }
    let sub = e.select_columns(&cols);
    let svd = sub.svd(true, true);
    let eps = 1e-13 * svd.singular_values.max().max(1e-300);
    if let Ok(sol) = svd.solve(f, eps) {
        for (k, &c) in cols.iter().enumerate() {
            z[c] = sol[k];
        }
    }
    z
}

/// Least-distance program `min ‖x‖` subject to `G x ≥ h`, solved through the
/// equivalent NNLS problem. Returns `None` when the constraints are infeasible.
pub fn least_distance(g: &DMatrix<f64>, h: &DVector<f64>) -> Result<Option<DVector<f64>>> {
    let (m, n) = g.shape();
    // Rescale x = s·y so the right-hand side is O(1).
    let s = h.amax();
    if h.iter().all(|v| *v <= 0.0) {
        return Ok(Some(DVector::zeros(n)));
    }
    let h = h / s;
    let mut e = DMatrix::<f64>::zeros(n + 1, m);
    for i in 0..m {
        for j in 0..n {
            e[(j, i)] = g[(i, j)];
        }
        e[(n, i)] = h[i];
    }
    let mut f = DVector::<f64>::zeros(n + 1);
    f[n] = 1.0;
    let u = nnls(&e, &f)?;
    let r = &e * &u - &f;
    if r.norm() <= 1e-12 || r[n].abs() <= 1e-14 {
        return Ok(None);
    }
    Ok(Some(DVector::from_fn(n, |j, _| -s * r[j] / r[n])))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nnls_clips_negative_component() {
        // min ||u - (1, -1)|| with u >= 0 -> (1, 0)
        let e = DMatrix::<f64>::identity(2, 2);
        let f = DVector::from_vec(vec![1.0, -1.0]);
        let u = nnls(&e, &f).unwrap();
        assert!((u[0] - 1.0).abs() < 1e-14 && u[1].abs() < 1e-14);
    }

    #[test]
    fn least_distance_to_halfplane() {
        // min ||x|| s.t. x0 + x1 >= 1 -> (0.5, 0.5)
        let g = DMatrix::from_row_slice(1, 2, &[1.0, 1.0]);
        let h = DVector::from_vec(vec![1.0]);
        let x = least_distance(&g, &h).unwrap().unwrap();
        assert!((x[0] - 0.5).abs() < 1e-14 && (x[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn least_distance_detects_infeasibility() {
        // x0 >= 1 and -x0 >= 0
        let g = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let h = DVector::from_vec(vec![1.0, 0.0]);
        assert!(least_distance(&g, &h).unwrap().is_none());
    }
}
