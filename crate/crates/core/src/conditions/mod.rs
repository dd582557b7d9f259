//! Sufficient conditions for pinning a network with a single controller.
//!
//! Every checker returns a [`Verdict`] whose `margin` is the most binding
//! slack of a strict inequality: negative means satisfied.

mod quad;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    left_null_vector, negativity_tolerance, scc_condensation, sym_eigen, symmetrize_weighted,
    Condensation, DenseMatrix,
};
use crate::model::{pinned_matrix, CouplingMatrix, NetworkSystem, PinPlan};

pub use quad::{
    quad_certificate, quad_certificate_chua, quad_check_sampled, quad_eta_from_hull,
    QuadCertificate, SampledQuad, StateBox,
};

/// Relative tolerance separating a strict "< 0" from numerical zero.
pub const MARGIN_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub holds: bool,
    pub margin: f64,
    /// Magnitude of the binding combination; `holds ⇔ margin < −1e−9·scale`.
    pub scale: f64,
    /// Label of the binding component, if the condition has several.
    pub binding: Option<String>,
    pub detail: Vec<(String, f64)>,
}

impl Verdict {
    pub fn from_margin(margin: f64, scale: f64) -> Self {
        Self {
            holds: margin < -MARGIN_RTOL * scale,
            margin,
            scale,
            binding: None,
            detail: Vec::new(),
        }
    }

    fn with_binding(mut self, binding: impl Into<String>) -> Self {
        self.binding = Some(binding.into());
        self
    }

    fn with_detail(mut self, detail: Vec<(String, f64)>) -> Self {
        self.detail = detail;
        self
    }
}

/// Spectrum behind a condition: eigenvalues of `Ã` (symmetric case) or of
/// `(ΞÃ + ÃᵀΞ)/2` (asymmetric case), sorted descending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralReport {
    pub lambda: Vec<f64>,
    pub xi: Option<Vec<f64>>,
    pub lambda1: f64,
    pub xi_max: Option<f64>,
}

/// All eigenvalues of the symmetric pinned matrix are negative.
pub fn proposition1_holds(a_tilde: &DenseMatrix) -> Result<(Verdict, SpectralReport)> {
    let eig = sym_eigen(a_tilde).map_err(|e| match e {
        Error::NotSymmetric { .. } => Error::Unsupported(format!(
            "{e}; asymmetric coupling is handled by the weighted check"
        )),
        other => other,
    })?;
    let lambda1 = eig.largest();
    let scale = 1.0 + a_tilde.inf_norm();
    let verdict =
        Verdict::from_margin(lambda1, scale).with_detail(vec![("lambda1".into(), lambda1)]);
    debug_assert_eq!(verdict.holds, lambda1 < -negativity_tolerance(a_tilde));
    Ok((
        verdict,
        SpectralReport {
            lambda: eig.eigenvalues,
            xi: None,
            lambda1,
            xi_max: None,
        },
    ))
}

fn symmetric_part(m: &DenseMatrix) -> DenseMatrix {
    let n = m.dim();
    let mut s = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = (m[(i, j)] + m[(j, i)]) / 2.0;
        }
    }
    s
}

/// Largest eigenvalue of the symmetric part of a square matrix.
pub fn sym_part_max_eigenvalue(m: &DenseMatrix) -> f64 {
    sym_eigen(&symmetric_part(m))
        .expect("symmetric part is symmetric")
        .largest()
}

/// Local condition: `max_t μ(t) < −c·λ₁`, with `μ` the largest eigenvalue of
/// the symmetrized Jacobian along the reference.
///
/// For piecewise-linear dynamics the Jacobian takes finitely many values, so
/// the maximum over every linear piece bounds `μ(t)` for any reference.
pub fn theorem1_margin(sys: &NetworkSystem, lambda1: f64) -> Result<Verdict> {
    let pieces = sys.dynamics().piecewise_jacobians().ok_or_else(|| {
        Error::Unsupported(format!(
            "local condition needs piecewise-constant Jacobians; `{}` has none",
            sys.dynamics().kind()
        ))
    })?;
    let mut detail = Vec::with_capacity(pieces.len());
    let mut worst = (f64::NEG_INFINITY, "");
    for (name, j) in &pieces {
        let mu = sym_part_max_eigenvalue(j);
        detail.push((format!("mu_{name}"), mu));
        if mu > worst.0 {
            worst = (mu, name);
        }
    }
    let coupling = sys.c() * lambda1;
    detail.push(("c_lambda1".into(), coupling));
    Ok(
        Verdict::from_margin(worst.0 + coupling, worst.0.abs() + coupling.abs())
            .with_binding(worst.1)
            .with_detail(detail),
    )
}

/// `max_k (Δₖ·weight) + gain·extremal < 0`, shared by Theorems 2–4.
fn delta_condition(cert: &QuadCertificate, weight: f64, gain: f64, extremal: f64) -> Verdict {
    let coupling = gain * extremal;
    let mut detail = Vec::with_capacity(cert.delta().len());
    let mut worst: Option<(usize, f64)> = None;
    for (k, &d) in cert.delta().iter().enumerate() {
        let margin = d * weight + coupling;
        detail.push((format!("k={}", k + 1), margin));
        if worst.is_none_or(|(_, w)| margin > w) {
            worst = Some((k, margin));
        }
    }
    let (k, margin) = worst.expect("certificate has at least one component");
    let scale = (cert.delta()[k] * weight).abs() + coupling.abs();
    Verdict::from_margin(margin, scale)
        .with_binding(format!("k={}", k + 1))
        .with_detail(detail)
}

/// Global condition, linear symmetric coupling: `Δₖ + c·λ₁ < 0` for all `k`.
pub fn theorem2_check(cert: &QuadCertificate, c: f64, lambda1: f64) -> Verdict {
    delta_condition(cert, 1.0, c, lambda1)
}

/// Global condition, nonlinear coupling with slope bound `α`: `Δₖ + α·c·λ₁ < 0`.
pub fn theorem3_check(cert: &QuadCertificate, c: f64, lambda1: f64, alpha: f64) -> Verdict {
    delta_condition(cert, 1.0, alpha * c, lambda1)
}

/// Global condition, irreducible asymmetric coupling:
/// `Δₖ·max ξᵢ + c·μ₁ < 0` with `μ₁` the largest eigenvalue of `(ΞÃ + ÃᵀΞ)/2`.
pub fn theorem4_check(
    a: &CouplingMatrix,
    pin: &PinPlan,
    cert: &QuadCertificate,
) -> Result<(Verdict, SpectralReport)> {
    let xi = left_null_vector(a, true)?;
    let a_tilde = pinned_matrix(a, pin)?;
    let weighted = symmetrize_weighted(&a_tilde, &xi)?;
    let eig = sym_eigen(&weighted)?;
    let mu1 = eig.largest();
    let xi_max = xi.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let verdict = delta_condition(cert, xi_max, pin.c(), mu1);
    Ok((
        verdict,
        SpectralReport {
            lambda: eig.eigenvalues,
            xi: Some(xi),
            lambda1: mu1,
            xi_max: Some(xi_max),
        },
    ))
}

/// Smallest `c` with `max_k Δₖ·xi_max + α·c·λ₁ < 0`, i.e.
/// `c* = max_k Δₖ·xi_max / (−α·λ₁)`; `0` when no Δ is positive.
///
/// The condition is strict, so it holds for every `c > c*`, not at `c*` itself.
pub fn min_coupling_strength(
    cert: &QuadCertificate,
    lambda1: f64,
    alpha: f64,
    xi_max: f64,
) -> Result<f64> {
    if !(lambda1 < 0.0) {
        return Err(Error::NoFiniteCoupling(lambda1));
    }
    if !(alpha > 0.0) || !(xi_max > 0.0) {
        return Err(Error::Domain(format!(
            "alpha and xi_max must be positive, got {alpha} and {xi_max}"
        )));
    }
    let top = cert.max_delta() * xi_max;
    if top <= 0.0 {
        return Ok(0.0);
    }
    let c_star = top / (-alpha * lambda1);
    let probe = c_star * (1.0 + 1e-6);
    let check = delta_condition(cert, xi_max, alpha * probe, lambda1);
    if !check.holds {
        return Err(Error::Domain(format!(
            "closed-form coupling bound {c_star} failed re-verification (margin {})",
            check.margin
        )));
    }
    Ok(c_star)
}

/// Pinnability of a possibly reducible network from a single node (1-based).
///
/// Holds when the condensation has exactly one root block, the pin lies in
/// it, and every other block receives input from some earlier block.
pub fn reducible_pinnability(
    a: &CouplingMatrix,
    pin_node: usize,
) -> Result<(Verdict, Condensation)> {
    if pin_node == 0 || pin_node > a.dim() {
        return Err(Error::Domain(format!(
            "pin node {pin_node} out of range 1..={}",
            a.dim()
        )));
    }
    let cond = scc_condensation(a);
    let roots = cond.roots();
    let pin_block = cond
        .block_of(pin_node - 1)
        .expect("every node belongs to a block");

    let mut failures = Vec::new();
    if roots.len() != 1 {
        failures.push(format!("{} root blocks (need exactly one)", roots.len()));
    }
    if !roots.contains(&pin_block) {
        failures.push(format!(
            "pinned node {pin_node} lies in block {} which is not a root",
            pin_block + 1
        ));
    }
    let mut detail = Vec::with_capacity(cond.blocks.len());
    for q in 0..cond.blocks.len() {
        let fed = cond
            .block_edges
            .iter()
            .any(|&(to, from)| to == q && from < q);
        let is_root = roots.contains(&q);
        detail.push((
            format!("block {} {}", q + 1, if is_root { "root" } else { "slave" }),
            if is_root || fed { 1.0 } else { 0.0 },
        ));
        if !is_root && !fed {
            failures.push(format!("block {} receives no input", q + 1));
        }
    }

    let margin = if failures.is_empty() {
        -1.0
    } else {
        failures.len() as f64
    };
    let mut verdict = Verdict::from_margin(margin, 1.0).with_detail(detail);
    if !failures.is_empty() {
        verdict = verdict.with_binding(failures.join("; "));
    }
    Ok((verdict, cond))
}
