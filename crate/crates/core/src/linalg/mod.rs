//! Small dense linear algebra and graph structure for coupling matrices.
//!
//! Everything here works on tiny square matrices (a few dozen nodes at most),
//! stored row-major in a flat `Vec<f64>`.

mod eigen;
mod graph;
mod null;

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use eigen::{sym_eigen, EigenDecomposition};
pub use graph::{scc_condensation, Condensation};
pub use null::left_null_vector;

/// Square real matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from nested rows, rejecting ragged or non-finite input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::Domain(format!(
                    "matrix is not square: row {} has {} entries, expected {}",
                    i + 1,
                    row.len(),
                    dim
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::Domain(format!(
                        "non-finite entry at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1)).take(self.dim)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch in matmul");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.dim, v.len(), "dimension mismatch in matvec");
        self.rows()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `vᵀ A`
    pub fn vecmat(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.dim, v.len(), "dimension mismatch in vecmat");
        let mut out = vec![0.0; self.dim];
        for (i, row) in self.rows().enumerate() {
            for (o, a) in out.iter_mut().zip(row) {
                *o += v[i] * a;
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        self.rows()
            .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows().map(|row| row.iter().sum()).collect()
    }

    /// First entry pair breaking symmetry by more than `tol`, if any.
    pub fn symmetry_violation(&self, tol: f64) -> Option<(usize, usize, f64)> {
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                let gap = (self[(i, j)] - self[(j, i)]).abs();
                if gap > tol {
                    return Some((i, j, gap));
                }
            }
        }
        None
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.symmetry_violation(tol).is_none()
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl fmt::Display for DenseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>10.4}")).collect();
            writeln!(f, "[{}]", cells.join(" "))?;
        }
        Ok(())
    }
}

impl TryFrom<Vec<Vec<f64>>> for DenseMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<DenseMatrix> for Vec<Vec<f64>> {
    fn from(m: DenseMatrix) -> Self {
        m.to_rows()
    }
}

/// `(Ξ Ã + Ãᵀ Ξ) / 2` with `Ξ = diag(ξ)`.
///
/// Entry `(i, j)` is `(ξᵢ ãᵢⱼ + ξⱼ ãⱼᵢ) / 2`, which is symmetric bit-for-bit
/// because floating-point addition commutes.
pub fn symmetrize_weighted(a_tilde: &DenseMatrix, xi: &[f64]) -> Result<DenseMatrix> {
    let m = a_tilde.dim();
    if xi.len() != m {
        return Err(Error::Domain(format!(
            "weight vector has length {}, matrix has dimension {}",
            xi.len(),
            m
        )));
    }
    if let Some((i, &w)) = xi.iter().enumerate().find(|(_, w)| !(**w > 0.0)) {
        return Err(Error::Domain(format!(
            "weight {} at node {} is not strictly positive",
            w,
            i + 1
        )));
    }
    let mut out = DenseMatrix::zeros(m);
    for i in 0..m {
        for j in 0..m {
            out[(i, j)] = (xi[i] * a_tilde[(i, j)] + xi[j] * a_tilde[(j, i)]) / 2.0;
        }
    }
    Ok(out)
}

/// Tolerance below which an eigenvalue is not considered negative.
pub fn negativity_tolerance(a: &DenseMatrix) -> f64 {
    1e-9 * (1.0 + a.inf_norm())
}
