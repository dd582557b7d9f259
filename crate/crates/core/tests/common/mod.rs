//! Independent oracles shared by the integration tests.
//!
//! None of these go through the crate's eigensolver: eigenvalues come from
//! the characteristic polynomial (Faddeev–LeVerrier) and bisection.

#![allow(dead_code, clippy::needless_range_loop)]

use pinning::model::Chua;

pub type Mat = Vec<Vec<f64>>;

pub fn reference_symmetric() -> Mat {
    vec![
        vec![-5.1, 5.0, 0.1],
        vec![5.0, -11.0, 6.0],
        vec![0.1, 6.0, -6.1],
    ]
}

pub fn reference_asymmetric() -> Mat {
    vec![
        vec![-2.0, 1.0, 1.0],
        vec![1.0, -2.0, 1.0],
        vec![0.0, 1.0, -1.0],
    ]
}

pub fn two_block() -> Mat {
    vec![
        vec![-1.0, 1.0, 0.0],
        vec![1.0, -1.0, 0.0],
        vec![1.0, 1.0, -2.0],
    ]
}

/// Subtracts `eps` from diagonal entry `node` (0-based).
pub fn pin(a: &Mat, node: usize, eps: f64) -> Mat {
    let mut out = a.clone();
    out[node][node] -= eps;
    out
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// Coefficients `c[0..=n]` of `det(λI − A) = Σ c[i] λ^i`, `c[n] = 1`.
pub fn char_poly(a: &Mat) -> Vec<f64> {
    let n = a.len();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut m = vec![vec![0.0; n]; n];
    for k in 1..=n {
        let mut next = matmul(a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += c[n - k + 1];
        }
        let am = matmul(a, &next);
        let trace: f64 = (0..n).map(|i| am[i][i]).sum();
        c[n - k] = -trace / k as f64;
        m = next;
    }
    c
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

/// Real roots of the characteristic polynomial of a symmetric matrix, descending.
///
/// Scans the Gershgorin interval for sign changes, then bisects each bracket.
pub fn sym_eigenvalues_oracle(a: &Mat) -> Vec<f64> {
    let n = a.len();
    let c = char_poly(a);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r: f64 = (0..n).filter(|&j| j != i).map(|j| a[i][j].abs()).sum();
        lo = lo.min(a[i][i] - r);
        hi = hi.max(a[i][i] + r);
    }
    lo -= 1.0;
    hi += 1.0;
    let steps = 200_000;
    let h = (hi - lo) / steps as f64;
    let mut roots = Vec::new();
    let mut x0 = lo;
    let mut p0 = horner(&c, x0);
    for s in 1..=steps {
        let x1 = lo + h * s as f64;
        let p1 = horner(&c, x1);
        if p0 == 0.0 {
            roots.push(x0);
        } else if p0 * p1 < 0.0 {
            let (mut a0, mut b0, mut pa) = (x0, x1, p0);
            for _ in 0..200 {
                let mid = 0.5 * (a0 + b0);
                let pm = horner(&c, mid);
                if pm == 0.0 {
                    a0 = mid;
                    b0 = mid;
                    break;
                }
                if pa * pm < 0.0 {
                    b0 = mid;
                } else {
                    a0 = mid;
                    pa = pm;
                }
            }
            roots.push(0.5 * (a0 + b0));
        }
        x0 = x1;
        p0 = p1;
    }
    roots.sort_by(|a, b| b.partial_cmp(a).unwrap());
    roots
}

pub fn lambda_max_oracle(a: &Mat) -> f64 {
    sym_eigenvalues_oracle(a)[0]
}

pub fn sym_part(a: &Mat) -> Mat {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (a[i][j] + a[j][i])).collect())
        .collect()
}

/// `(ΞA + AᵀΞ)/2` written out entrywise.
pub fn weighted_sym(a: &Mat, xi: &[f64]) -> Mat {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| 0.5 * (xi[i] * a[i][j] + xi[j] * a[j][i]))
                .collect()
        })
        .collect()
}

/// Jacobian of the Chua field at `x` by central differences.
pub fn chua_fd_jacobian(x: [f64; 3]) -> Mat {
    let chua = Chua::double_scroll();
    let h = 1e-6;
    let mut j = vec![vec![0.0; 3]; 3];
    for col in 0..3 {
        let (mut xp, mut xm) = (x, x);
        xp[col] += h;
        xm[col] -= h;
        let (fp, fm) = (chua.field(&xp), chua.field(&xm));
        for row in 0..3 {
            j[row][col] = (fp[row] - fm[row]) / (2.0 * h);
        }
    }
    j
}

/// Smallest QUAD quotient `−(x−y)ᵀ(f(x) − Δx − f(y) + Δy)/‖x−y‖²` over pairs
/// `y = x + r·e`, with `e` on a spherical grid and `x` at the given base points.
///
/// Uses only evaluations of the vector field.
pub fn chua_quad_grid_min(delta: f64, base_points: &[[f64; 3]], r: f64, grid: usize) -> f64 {
    let chua = Chua::double_scroll();
    let mut best = f64::INFINITY;
    for x in base_points {
        let fx = chua.field(x);
        for a in 0..grid {
            let theta = std::f64::consts::PI * (a as f64 + 0.5) / grid as f64;
            for b in 0..2 * grid {
                let phi = std::f64::consts::PI * b as f64 / grid as f64;
                let e = [
                    theta.sin() * phi.cos(),
                    theta.sin() * phi.sin(),
                    theta.cos(),
                ];
                let y = [x[0] + r * e[0], x[1] + r * e[1], x[2] + r * e[2]];
                let fy = chua.field(&y);
                let mut num = 0.0;
                let mut den = 0.0;
                for k in 0..3 {
                    let d = x[k] - y[k];
                    num += d * (fx[k] - fy[k] - delta * d);
                    den += d * d;
                }
                best = best.min(-num / den);
            }
        }
    }
    best
}
