//! QUAD certificates: diagonal `P`, `Δ` and margin `η` with
//! `(x−y)ᵀ P (f(x) − Δx − f(y) + Δy) ≤ −η ‖x−y‖²` for all `x, y`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{sym_part_max_eigenvalue, Verdict};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::model::{Chua, Dynamics};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadCertificate {
    p: Vec<f64>,
    delta: Vec<f64>,
    eta: f64,
}

impl QuadCertificate {
    pub fn new(p: Vec<f64>, delta: Vec<f64>, eta: f64) -> Result<Self> {
        if p.is_empty() || p.len() != delta.len() {
            return Err(Error::Domain(format!(
                "P and Delta must be nonempty with equal length, got {} and {}",
                p.len(),
                delta.len()
            )));
        }
        if let Some(bad) = p.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!(
                "P entries must be positive, got {bad}"
            )));
        }
        if let Some(bad) = delta.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "Delta entries must be finite, got {bad}"
            )));
        }
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Domain(format!("eta must be positive, got {eta}")));
        }
        Ok(Self { p, delta, eta })
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn max_delta(&self) -> f64 {
        self.delta.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_p(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `P (J − Δ)` for diagonal `P` and `Δ`.
fn weighted_shift(p: &[f64], delta: &[f64], j: &DenseMatrix) -> DenseMatrix {
    let n = j.dim();
    let mut out = j.clone();
    for i in 0..n {
        out[(i, i)] -= delta[i];
        for k in 0..n {
            out[(i, k)] *= p[i];
        }
    }
    out
}

/// Largest `η` certified when every difference quotient of `f` lies in the
/// convex hull of `jacobians`: `η = −max_J λ_max(sym(P(J − Δ)))`.
///
/// `λ_max` of a symmetric matrix is convex in its entries, so the worst case
/// over the hull sits at one of the listed vertices.
pub fn quad_eta_from_hull(p: &[f64], delta: &[f64], jacobians: &[DenseMatrix]) -> Result<f64> {
    if jacobians.is_empty() {
        return Err(Error::Domain("no Jacobians supplied".into()));
    }
    let mut worst = f64::NEG_INFINITY;
    for j in jacobians {
        if j.dim() != p.len() || j.dim() != delta.len() {
            return Err(Error::Domain(format!(
                "Jacobian is {0}×{0}, certificate has dimension {1}",
                j.dim(),
                p.len()
            )));
        }
        worst = worst.max(sym_part_max_eigenvalue(&weighted_shift(p, delta, j)));
    }
    Ok(-worst)
}

/// Exact QUAD margin for Chua's circuit.
///
/// `f(x) − f(y)` is linear in `x − y` except for the `(1,1)` entry, which uses
/// the difference quotient of `h` between `x₁` and `y₁`; that quotient ranges
/// over `[−1/7, 2/7]`. A nonpositive result means no certificate exists for
/// this `(P, Δ)`.
pub fn quad_certificate_chua(p: &[f64], delta: &[f64], chua: &Chua) -> Result<f64> {
    if p.len() != 3 || delta.len() != 3 {
        return Err(Error::Domain("Chua certificates are 3-dimensional".into()));
    }
    let hull = Dynamics::Chua(*chua)
        .jacobian_hull()
        .expect("chua has a Jacobian hull");
    quad_eta_from_hull(p, delta, &hull)
}

/// Closed-form QUAD margin for dynamics with a known Jacobian hull.
pub fn quad_certificate(dynamics: &Dynamics, p: &[f64], delta: &[f64]) -> Result<Option<f64>> {
    match dynamics.jacobian_hull() {
        Some(hull) => quad_eta_from_hull(p, delta, &hull).map(Some),
        None => Ok(None),
    }
}

/// Axis-aligned sampling region.
#[derive(Debug, Clone, PartialEq)]
pub struct StateBox {
    bounds: Vec<(f64, f64)>,
}

impl StateBox {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Domain("sampling box has no dimensions".into()));
        }
        for (k, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::Domain(format!(
                    "degenerate sampling interval [{lo}, {hi}] in coordinate {}",
                    k + 1
                )));
            }
        }
        Ok(Self { bounds })
    }

    pub fn cube(dim: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![(-half_width, half_width); dim])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    fn sample(&self, rng: &mut impl Rng, out: &mut [f64]) {
        for (o, &(lo, hi)) in out.iter_mut().zip(&self.bounds) {
            *o = rng.gen_range(lo..hi);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampledQuad {
    /// `margin = η − min quotient`; holds when no sampled pair beats `η`.
    pub verdict: Verdict,
    pub min_quotient: f64,
    pub worst_x: Vec<f64>,
    pub worst_y: Vec<f64>,
    pub samples: usize,
}

/// Falsification search for a QUAD certificate over random pairs in a box.
///
/// Evaluates `−(x−y)ᵀP(f(x)−Δx−f(y)+Δy)/‖x−y‖²`. Sampling can only expose a
/// violation; "holds" means none was found.
pub fn quad_check_sampled(
    dynamics: &Dynamics,
    cert: &QuadCertificate,
    region: &StateBox,
    samples: usize,
    seed: u64,
) -> Result<SampledQuad> {
    let n = dynamics.dim();
    if cert.p().len() != n || region.dim() != n {
        return Err(Error::Domain(format!(
            "dimension mismatch: dynamics {n}, certificate {}, box {}",
            cert.p().len(),
            region.dim()
        )));
    }
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x, mut y) = (vec![0.0; n], vec![0.0; n]);
    let (mut fx, mut fy) = (vec![0.0; n], vec![0.0; n]);
    let mut best = (f64::INFINITY, Vec::new(), Vec::new());

    for _ in 0..samples {
        region.sample(&mut rng, &mut x);
        loop {
            region.sample(&mut rng, &mut y);
            if x != y {
                break;
            }
        }
        dynamics.eval(&x, 0.0, &mut fx);
        dynamics.eval(&y, 0.0, &mut fy);
        let mut num = 0.0;
        let mut den = 0.0;
        for k in 0..n {
            let e = x[k] - y[k];
            num += e * cert.p()[k] * (fx[k] - fy[k] - cert.delta()[k] * e);
            den += e * e;
        }
        let quotient = -num / den;
        if quotient < best.0 {
            best = (quotient, x.clone(), y.clone());
        }
    }

    let (min_quotient, worst_x, worst_y) = best;
    Ok(SampledQuad {
        verdict: Verdict::from_margin(cert.eta() - min_quotient, 0.0),
        min_quotient,
        worst_x,
        worst_y,
        samples,
    })
}
