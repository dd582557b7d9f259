#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use pinning::conditions::{
    min_coupling_strength, proposition1_holds, quad_certificate_chua, theorem1_margin,
    theorem2_check, theorem3_check, theorem4_check, QuadCertificate,
};
use pinning::linalg::{left_null_vector, sym_eigen, symmetrize_weighted, DenseMatrix};
use pinning::model::{validate_coupling, Chua, CouplingFunction, Dynamics, NetworkSystem, PinPlan};

fn dense(m: &Mat) -> DenseMatrix {
    DenseMatrix::from_rows(m).unwrap()
}

fn cert() -> QuadCertificate {
    QuadCertificate::new(vec![1.0; 3], vec![10.0; 3], 0.6218).unwrap()
}

#[test]
fn char_poly_oracle_sanity() {
    // diag(3, −1, 2): roots are the diagonal entries
    let a = vec![
        vec![3.0, 0.0, 0.0],
        vec![0.0, -1.0, 0.0],
        vec![0.0, 0.0, 2.0],
    ];
    let roots = sym_eigenvalues_oracle(&a);
    for (r, want) in roots.iter().zip([3.0, 2.0, -1.0]) {
        assert!((r - want).abs() < 1e-12, "{roots:?}");
    }
}

#[test]
fn symmetric_pinned_spectrum_matches_oracle() {
    let a_tilde = pin(&reference_symmetric(), 0, 4.9);
    let jacobi = sym_eigen(&dense(&a_tilde)).unwrap();
    let oracle = sym_eigenvalues_oracle(&a_tilde);
    assert_eq!(oracle.len(), 3);
    for (j, o) in jacobi.eigenvalues.iter().zip(&oracle) {
        assert!((j - o).abs() < 1e-9, "{j} vs {o}");
    }
    assert!((oracle[0] + 1.011_144_59).abs() < 1e-7);
    assert!((10.0 * oracle[0] + 10.11).abs() < 0.02);
}

#[test]
fn weighted_spectrum_matches_oracle() {
    let a = reference_asymmetric();
    let xi = left_null_vector(&dense(&a), true).unwrap();
    let a_tilde = pin(&a, 0, 2.0);
    let m = weighted_sym(&a_tilde, &xi);
    let ours = symmetrize_weighted(&dense(&a_tilde), &xi).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            assert!((ours[(i, j)] - m[i][j]).abs() < 1e-15);
        }
    }
    let mu1 = lambda_max_oracle(&m);
    let jacobi = sym_eigen(&ours).unwrap().largest();
    assert!((mu1 - jacobi).abs() < 1e-9);
    assert!((mu1 + 0.071_792_71).abs() < 1e-7, "{mu1}");
}

#[test]
fn left_null_vector_solves_the_linear_system() {
    let a = reference_asymmetric();
    let xi = left_null_vector(&dense(&a), true).unwrap();
    for j in 0..3 {
        let col: f64 = (0..3).map(|i| xi[i] * a[i][j]).sum();
        assert!(col.abs() < 1e-13);
    }
    for (got, want) in xi.iter().zip([1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0]) {
        assert!((got - want).abs() < 1e-10);
    }
}

#[test]
fn chua_region_jacobians_match_finite_differences() {
    let chua = Chua::double_scroll();
    let dynamics = Dynamics::Chua(chua);
    let pieces = dynamics.piecewise_jacobians().unwrap();
    let probes = [[-3.0, 0.2, 0.1], [0.3, -0.4, 0.5], [2.5, 1.0, -1.0]];
    for ((name, j), x) in pieces.iter().zip(probes) {
        let fd = chua_fd_jacobian(x);
        for r in 0..3 {
            for c in 0..3 {
                assert!((j[(r, c)] - fd[r][c]).abs() < 1e-6, "{name} ({r},{c})");
            }
        }
    }
}

#[test]
fn local_condition_matches_oracle_mu() {
    let sys = NetworkSystem::new(
        validate_coupling(&reference_symmetric()).unwrap(),
        Dynamics::Chua(Chua::double_scroll()),
        CouplingFunction::Identity,
        10.0,
    )
    .unwrap()
    .with_pin(1, 4.9)
    .unwrap();
    let lambda1 = lambda_max_oracle(&pin(&reference_symmetric(), 0, 4.9));
    let verdict = theorem1_margin(&sys, lambda1).unwrap();
    let oracle_mu = [[-3.0, 0.0, 0.0], [0.0, 0.0, 0.0], [3.0, 0.0, 0.0]]
        .iter()
        .map(|&x| lambda_max_oracle(&sym_part(&chua_fd_jacobian(x))))
        .fold(f64::NEG_INFINITY, f64::max);
    assert!((verdict.margin - (oracle_mu + 10.0 * lambda1)).abs() < 1e-5);
    let middle = verdict
        .detail
        .iter()
        .find(|(k, _)| k == "mu_middle")
        .unwrap()
        .1;
    let oracle_middle = lambda_max_oracle(&sym_part(&chua_fd_jacobian([0.0; 3])));
    assert!((middle - oracle_middle).abs() < 1e-5);
}

#[test]
fn quad_margin_matches_field_only_oracles() {
    let eta = quad_certificate_chua(&[1.0; 3], &[10.0; 3], &Chua::double_scroll()).unwrap();

    // Characteristic-polynomial route from finite-difference Jacobians.
    let poly = [[0.0; 3], [3.0, 0.0, 0.0]]
        .iter()
        .map(|&x| {
            let mut j = chua_fd_jacobian(x);
            for (i, row) in j.iter_mut().enumerate() {
                row[i] -= 10.0;
            }
            -lambda_max_oracle(&sym_part(&j))
        })
        .fold(f64::INFINITY, f64::min);
    assert!((eta - poly).abs() < 1e-5, "{eta} vs {poly}");

    // Direct minimization of the quotient over directions, using only f.
    let grid = chua_quad_grid_min(
        10.0,
        &[[0.0; 3], [5.0, 0.0, 0.0], [-5.0, 0.0, 0.0]],
        0.1,
        200,
    );
    assert!(grid >= eta - 1e-9, "grid {grid} below closed form {eta}");
    assert!(grid - eta < 1e-3, "grid {grid} vs {eta}");
}

#[test]
fn min_coupling_matches_arithmetic() {
    let lambda1 = lambda_max_oracle(&pin(&reference_symmetric(), 0, 4.9));
    let c_star = min_coupling_strength(&cert(), lambda1, 1.0, 1.0).unwrap();
    assert!((c_star - 10.0 / -lambda1).abs() < 1e-9);
    assert!(!theorem2_check(&cert(), c_star * (1.0 - 1e-3), lambda1).holds);
    assert!(theorem2_check(&cert(), c_star * (1.0 + 1e-3), lambda1).holds);

    let c_half = min_coupling_strength(&cert(), lambda1, 0.5, 1.0).unwrap();
    assert!((c_half - 2.0 * c_star).abs() < 1e-9);
}

#[test]
fn theorem2_margin_arithmetic() {
    let lambda1 = lambda_max_oracle(&pin(&reference_symmetric(), 0, 4.9));
    let v = theorem2_check(&cert(), 10.0, lambda1);
    assert!((v.margin - (10.0 + 10.0 * lambda1)).abs() < 1e-12);
    assert!(v.holds);
    let v3 = theorem3_check(&cert(), 10.0, lambda1, 1.0);
    assert_eq!(v.margin.to_bits(), v3.margin.to_bits());
}

#[test]
fn theorem4_margin_arithmetic() {
    let a = validate_coupling(&reference_asymmetric()).unwrap();
    let plan = PinPlan::new(1, 2.0, 72.0).unwrap();
    let (v, spec) = theorem4_check(&a, &plan, &cert()).unwrap();
    let mu1 = lambda_max_oracle(&weighted_sym(
        &pin(&reference_asymmetric(), 0, 2.0),
        &[1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0],
    ));
    assert!((spec.lambda1 - mu1).abs() < 1e-9);
    assert!((v.margin - (10.0 * 0.5 + 72.0 * mu1)).abs() < 1e-7);
    assert!((v.margin + 0.169).abs() < 1e-3);
}

#[test]
fn unpinned_symmetric_matrix_has_zero_mode() {
    let (v, spec) = proposition1_holds(&dense(&reference_symmetric())).unwrap();
    assert!(!v.holds);
    let oracle = sym_eigenvalues_oracle(&reference_symmetric());
    assert!(oracle[0].abs() < 1e-9 && spec.lambda1.abs() < 1e-9);
}
