use super::{scc_condensation, DenseMatrix};
use crate::error::{Error, Result};

/// Solves the overdetermined system `B x ≈ b` (rows ≥ cols) by Householder QR.
///
/// Returns `None` when `B` is numerically rank deficient.
fn least_squares(mut b_mat: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let rows = b_mat.len();
    let cols = b_mat[0].len();
    let scale = b_mat
        .iter()
        .flatten()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);

    for k in 0..cols {
        let norm = (k..rows).map(|i| b_mat[i][k].powi(2)).sum::<f64>().sqrt();
        if norm <= 1e-12 * scale {
            return None;
        }
        let alpha = if b_mat[k][k] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..rows).map(|i| b_mat[i][k]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for j in k..cols {
                let dot: f64 = (k..rows).map(|i| v[i - k] * b_mat[i][j]).sum();
                let f = 2.0 * dot / vnorm2;
                for i in k..rows {
                    b_mat[i][j] -= f * v[i - k];
                }
            }
            let dot: f64 = (k..rows).map(|i| v[i - k] * rhs[i]).sum();
            let f = 2.0 * dot / vnorm2;
            for i in k..rows {
                rhs[i] -= f * v[i - k];
            }
        }
    }

    let mut x = vec![0.0; cols];
    for k in (0..cols).rev() {
        let tail: f64 = (k + 1..cols).map(|j| b_mat[k][j] * x[j]).sum();
        x[k] = (rhs[k] - tail) / b_mat[k][k];
    }
    Some(x)
}

/// Left null vector `ξ` of a zero-row-sum matrix, normalized to `Σ ξᵢ = 1`.
///
/// Solves `{ξᵀ A = 0, Σ ξ = 1}` in the least-squares sense. For an irreducible
/// coupling matrix the solution is the positive Perron vector.
pub fn left_null_vector(a: &DenseMatrix, require_irreducible: bool) -> Result<Vec<f64>> {
    let m = a.dim();
    if m == 0 {
        return Err(Error::Domain("empty matrix".into()));
    }
    let row_tol = 1e-9 * a.inf_norm().max(1.0);
    if let Some((i, s)) = a
        .row_sums()
        .into_iter()
        .enumerate()
        .find(|(_, s)| s.abs() > row_tol)
    {
        return Err(Error::Domain(format!(
            "row {} sums to {} (zero row sums required)",
            i + 1,
            s
        )));
    }

    let condensation = scc_condensation(a);
    let irreducible = condensation.is_irreducible();
    if require_irreducible && !irreducible {
        return Err(Error::Reducible(condensation));
    }

    let mut system = Vec::with_capacity(m + 1);
    for j in 0..m {
        system.push(a.column(j));
    }
    system.push(vec![1.0; m]);
    let mut rhs = vec![0.0; m + 1];
    rhs[m] = 1.0;

    let mut xi = least_squares(system, rhs).ok_or_else(|| {
        Error::Domain("left null space is not one-dimensional (several root blocks)".into())
    })?;

    let total: f64 = xi.iter().sum();
    for v in &mut xi {
        *v /= total;
    }
    if irreducible && xi.iter().any(|&v| v <= 0.0) {
        return Err(Error::Domain(format!(
            "Perron vector of irreducible matrix has nonpositive entry: {xi:?}"
        )));
    }
    Ok(xi)
}
