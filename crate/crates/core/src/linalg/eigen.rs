use super::DenseMatrix;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const OFF_DIAGONAL_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Full spectrum of a symmetric matrix.
///
/// `eigenvalues` are sorted descending and column `k` of `eigenvectors`
/// belongs to `eigenvalues[k]`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix,
}

impl EigenDecomposition {
    /// Algebraically largest eigenvalue.
    pub fn largest(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn vector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k)
    }

    /// `W diag(λ) Wᵀ`
    pub fn reconstruct(&self) -> DenseMatrix {
        let n = self.eigenvalues.len();
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = (0..n)
                    .map(|k| {
                        self.eigenvectors[(i, k)] * self.eigenvalues[k] * self.eigenvectors[(j, k)]
                    })
                    .sum();
            }
        }
        out
    }
}

fn off_diagonal_norm(a: &DenseMatrix) -> f64 {
    let n = a.dim();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum += a[(i, j)] * a[(i, j)];
            }
        }
    }
    sum.sqrt()
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
pub fn sym_eigen(a: &DenseMatrix) -> Result<EigenDecomposition> {
    let n = a.dim();
    if n == 0 {
        return Err(Error::Domain("empty matrix".into()));
    }
    if let Some((row, col, gap)) = a.symmetry_violation(SYMMETRY_TOL) {
        return Err(Error::NotSymmetric { row, col, gap });
    }

    let mut work = a.clone();
    let mut v = DenseMatrix::identity(n);
    let frob = a.rows().flatten().map(|x| x * x).sum::<f64>().sqrt();
    let tol = OFF_DIAGONAL_TOL * frob.max(1.0);

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&work) <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = work[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (work[(q, q)] - work[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = work[(k, p)];
                    let akq = work[(k, q)];
                    work[(k, p)] = c * akp - s * akq;
                    work[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = work[(p, k)];
                    let aqk = work[(q, k)];
                    work[(p, k)] = c * apk - s * aqk;
                    work[(q, k)] = s * apk + c * aqk;
                }
                work[(p, q)] = 0.0;
                work[(q, p)] = 0.0;

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| work[(j, j)].total_cmp(&work[(i, i)]));

    let eigenvalues = order.iter().map(|&k| work[(k, k)]).collect();
    let mut eigenvectors = DenseMatrix::zeros(n);
    for (col, &k) in order.iter().enumerate() {
        for row in 0..n {
            eigenvectors[(row, col)] = v[(row, k)];
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}
