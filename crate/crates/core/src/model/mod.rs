//! Network data model: coupling matrices, pin plans, node dynamics and the
//! right-hand side of the controlled network.

mod dynamics;

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub use dynamics::{
    Chua, ChuaRegion, Dynamics, DynamicsRegistry, LinearDecay, VectorField, CHUA_INNER_SLOPE,
    CHUA_OUTER_SLOPE,
};

const ROW_SUM_TOL: f64 = 1e-12;

/// Diffusive coupling matrix: nonnegative off-diagonals, zero row sums.
#[derive(Clone, PartialEq)]
pub struct CouplingMatrix {
    matrix: DenseMatrix,
    symmetric: bool,
}

impl fmt::Debug for CouplingMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CouplingMatrix")
            .field("matrix", &self.matrix)
            .field("symmetric", &self.symmetric)
            .finish()
    }
}

impl Deref for CouplingMatrix {
    type Target = DenseMatrix;

    fn deref(&self) -> &DenseMatrix {
        &self.matrix
    }
}

impl CouplingMatrix {
    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn as_dense(&self) -> &DenseMatrix {
        &self.matrix
    }

    /// Copy with `eps` subtracted from the diagonal entry of node `index` (0-based).
    pub fn with_gain(&self, index: usize, eps: f64) -> DenseMatrix {
        let mut out = self.matrix.clone();
        out[(index, index)] -= eps;
        out
    }
}

/// Validates a coupling matrix, naming the first offending entry or row.
pub fn validate_coupling<R: AsRef<[f64]>>(rows: &[R]) -> Result<CouplingMatrix> {
    let matrix = DenseMatrix::from_rows(rows).map_err(|e| Error::InvalidCoupling(e.to_string()))?;
    let m = matrix.dim();
    if m == 0 {
        return Err(Error::InvalidCoupling("matrix has no rows".into()));
    }
    for i in 0..m {
        for j in 0..m {
            if i != j && matrix[(i, j)] < 0.0 {
                return Err(Error::InvalidCoupling(format!(
                    "off-diagonal entry ({}, {}) = {} is negative",
                    i + 1,
                    j + 1,
                    matrix[(i, j)]
                )));
            }
        }
        let sum: f64 = matrix.row(i).iter().sum();
        if sum.abs() > ROW_SUM_TOL {
            return Err(Error::InvalidCoupling(format!(
                "row {} sums to {} (must be 0 within {ROW_SUM_TOL:e})",
                i + 1,
                sum
            )));
        }
    }
    let symmetric = matrix.is_symmetric(0.0);
    Ok(CouplingMatrix { matrix, symmetric })
}

/// A single feedback controller `−cε(x_pin − s)`.
///
/// `pin_node` is 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinPlan {
    pin_node: usize,
    epsilon: f64,
    c: f64,
}

impl PinPlan {
    pub fn new(pin_node: usize, epsilon: f64, c: f64) -> Result<Self> {
        if pin_node == 0 {
            return Err(Error::Domain("pin node indices are 1-based; got 0".into()));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Domain(format!(
                "feedback gain must be > 0, got {epsilon}"
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!(
                "coupling strength must be > 0, got {c}"
            )));
        }
        Ok(Self {
            pin_node,
            epsilon,
            c,
        })
    }

    pub fn pin_node(&self) -> usize {
        self.pin_node
    }

    /// 0-based node index.
    pub fn index(&self) -> usize {
        self.pin_node - 1
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn c(&self) -> f64 {
        self.c
    }
}

/// `Ã`: the coupling matrix with `ε` subtracted at the pinned diagonal entry.
pub fn pinned_matrix(a: &CouplingMatrix, pin: &PinPlan) -> Result<DenseMatrix> {
    if pin.pin_node() > a.dim() {
        return Err(Error::Domain(format!(
            "pin node {} out of range 1..={}",
            pin.pin_node(),
            a.dim()
        )));
    }
    Ok(a.with_gain(pin.index(), pin.epsilon()))
}

/// Scalar map applied componentwise to coupling and controller terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingFunction {
    Identity,
    /// `g(u) = u + amplitude·sin(u)`, slope in `[1 − amplitude, 1 + amplitude]`.
    Sine {
        amplitude: f64,
    },
}

impl CouplingFunction {
    pub fn sine(amplitude: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&amplitude) {
            return Err(Error::Domain(format!(
                "sine coupling amplitude must lie in [0, 1) to stay strictly monotone, got {amplitude}"
            )));
        }
        Ok(CouplingFunction::Sine { amplitude })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CouplingFunction::Identity => "identity",
            CouplingFunction::Sine { .. } => "sine",
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, CouplingFunction::Identity)
    }

    #[inline]
    pub fn apply(&self, u: f64) -> f64 {
        match *self {
            CouplingFunction::Identity => u,
            CouplingFunction::Sine { amplitude } => u + amplitude * u.sin(),
        }
    }

    /// Certified lower bound on every difference quotient `(g(u) − g(v))/(u − v)`.
    pub fn alpha_lower(&self) -> f64 {
        match *self {
            CouplingFunction::Identity => 1.0,
            CouplingFunction::Sine { amplitude } => 1.0 - amplitude,
        }
    }
}

/// The controlled network: `m` copies of the node dynamics coupled through `A`
/// with strength `c`, optionally pinned at one node.
#[derive(Debug, Clone)]
pub struct NetworkSystem {
    coupling: CouplingMatrix,
    c: f64,
    pin: Option<PinPlan>,
    dynamics: Dynamics,
    gfun: CouplingFunction,
}

impl NetworkSystem {
    pub fn new(
        coupling: CouplingMatrix,
        dynamics: Dynamics,
        gfun: CouplingFunction,
        c: f64,
    ) -> Result<Self> {
        if !c.is_finite() || c < 0.0 {
            return Err(Error::Domain(format!(
                "coupling strength must be ≥ 0, got {c}"
            )));
        }
        if dynamics.dim() == 0 {
            return Err(Error::Domain("node dynamics has dimension 0".into()));
        }
        Ok(Self {
            coupling,
            c,
            pin: None,
            dynamics,
            gfun,
        })
    }

    /// Adds a controller at `pin_node` (1-based) sharing the network's coupling strength.
    pub fn with_pin(mut self, pin_node: usize, epsilon: f64) -> Result<Self> {
        let pin = PinPlan::new(pin_node, epsilon, self.c)?;
        pinned_matrix(&self.coupling, &pin)?;
        self.pin = Some(pin);
        Ok(self)
    }

    pub fn nodes(&self) -> usize {
        self.coupling.dim()
    }

    pub fn node_dim(&self) -> usize {
        self.dynamics.dim()
    }

    pub fn coupling(&self) -> &CouplingMatrix {
        &self.coupling
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn pin(&self) -> Option<&PinPlan> {
        self.pin.as_ref()
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn gfun(&self) -> &CouplingFunction {
        &self.gfun
    }

    /// The pinned matrix `Ã`, or `A` itself when uncontrolled.
    pub fn effective_matrix(&self) -> DenseMatrix {
        match &self.pin {
            Some(pin) => self.coupling.with_gain(pin.index(), pin.epsilon()),
            None => self.coupling.as_dense().clone(),
        }
    }
}

/// Right-hand side of the controlled network.
///
/// `state` and `out` are `m × n` row-major (one row per node), `s` is the
/// reference state. The coupling is evaluated in diffusive form
/// `Σ_{j≠i} aᵢⱼ (g(xⱼ) − g(xᵢ))`, which equals `Σⱼ aᵢⱼ g(xⱼ)` for a zero-row-sum
/// matrix and vanishes exactly on the synchronization manifold.
pub fn system_rhs(
    sys: &NetworkSystem,
    state: &[f64],
    s: &[f64],
    t: f64,
    out: &mut [f64],
) -> Result<()> {
    let m = sys.nodes();
    let n = sys.node_dim();
    if state.len() != m * n || out.len() != m * n || s.len() != n {
        return Err(Error::Domain(format!(
            "dimension mismatch: expected state {m}×{n} and reference {n}, got {} and {}",
            state.len(),
            s.len()
        )));
    }

    for (x, dx) in state.chunks_exact(n).zip(out.chunks_exact_mut(n)) {
        sys.dynamics.eval(x, t, dx);
    }

    let g = &sys.gfun;
    let gx: Vec<f64> = match g {
        CouplingFunction::Identity => state.to_vec(),
        _ => state.iter().map(|&u| g.apply(u)).collect(),
    };
    let a = sys.coupling.as_dense();
    let c = sys.c;
    if c != 0.0 {
        for i in 0..m {
            for j in 0..m {
                let aij = a[(i, j)];
                if i == j || aij == 0.0 {
                    continue;
                }
                for k in 0..n {
                    out[i * n + k] += c * aij * (gx[j * n + k] - gx[i * n + k]);
                }
            }
        }
    }

    if let Some(pin) = &sys.pin {
        let p = pin.index();
        let gain = pin.c() * pin.epsilon();
        for k in 0..n {
            out[p * n + k] -= gain * (gx[p * n + k] - g.apply(s[k]));
        }
    }
    Ok(())
}
