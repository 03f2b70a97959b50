//! Lawson–Hanson non-negative least squares, `min ‖Ax − b‖₂` subject to `x ≥ 0`.

use nalgebra::{DMatrix, DVector};

/// Solution of an NNLS problem together with its residual norm.
#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub x: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// Active-set solver. Columns are rescaled internally to unit norm.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize) -> NnlsSolution {
    let (m, n) = a.shape();
    assert_eq!(m, b.len(), "row count of A must match b");
    let scale: Vec<f64> = (0..n)
        .map(|j| {
            let c = a.column(j).norm();
            if c > 0.0 {
                c
            } else {
                1.0
            }
        })
        .collect();
    let mut a_s = a.clone();
    for (j, s) in scale.iter().enumerate() {
        a_s.column_mut(j).scale_mut(1.0 / s);
    }

    let tol = 10.0 * f64::EPSILON * (m.max(n) as f64) * a_s.norm().max(1.0);
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let mut iterations = 0;

    loop {
        let r = b - &a_s * &x;
        let w = a_s.transpose() * &r;
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].partial_cmp(&w[j]).unwrap());
        let Some(t) = candidate else { break };
        if w[t] <= tol || iterations >= max_iter {
            break;
        }
        passive[t] = true;

        loop {
            iterations += 1;
            let idx: Vec<usize> = (0..n).filter(|&j| passive[j]).collect();
            let z_p = solve_subset(&a_s, b, &idx);
            if idx.iter().zip(z_p.iter()).all(|(_, &z)| z > 0.0) {
                for (k, &j) in idx.iter().enumerate() {
                    x[j] = z_p[k];
                }
                break;
            }
            // step back toward feasibility
            let mut alpha = f64::INFINITY;
            for (k, &j) in idx.iter().enumerate() {
                if z_p[k] <= 0.0 {
                    let denom = x[j] - z_p[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[j] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (k, &j) in idx.iter().enumerate() {
                x[j] += alpha * (z_p[k] - x[j]);
                if x[j] <= tol {
                    x[j] = 0.0;
                    passive[j] = false;
                }
            }
            if iterations >= max_iter {
                break;
            }
        }
        if iterations >= max_iter {
            break;
        }
    }

    let residual = (b - &a_s * &x).norm();
    for (j, s) in scale.iter().enumerate() {
        x[j] /= s;
    }
    NnlsSolution {
        x,
        residual,
        iterations,
    }
}

fn solve_subset(a: &DMatrix<f64>, b: &DVector<f64>, idx: &[usize]) -> Vec<f64> {
    let sub = a.select_columns(idx);
    let svd = sub.svd(true, true);
    let sol = svd
        .solve(b, 1e-14)
        .expect("SVD was computed with both factors");
    sol.iter().copied().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_nonnegative_solution() {
        let a = DMatrix::from_row_slice(4, 3, &[1., 0., 1., 0., 1., 1., 1., 1., 0., 2., 1., 1.]);
        let truth = DVector::from_vec(vec![0.5, 0.0, 2.0]);
        let b = &a * &truth;
        let sol = nnls(&a, &b, 100);
        assert!((sol.x - truth).norm() < 1e-10);
        assert!(sol.residual < 1e-10);
    }

    #[test]
    fn clamps_negative_unconstrained_solution() {
        // unconstrained optimum is x = -1
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let b = DVector::from_vec(vec![-1.0, -1.0]);
        let sol = nnls(&a, &b, 10);
        assert_eq!(sol.x[0], 0.0);
    }
}
