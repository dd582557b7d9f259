use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Node dynamics `ẋ = f(x, t)` on `Rⁿ`.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], t: f64, dx: &mut [f64]);
}

/// Chua's circuit `ẋ₁ = k(x₂ − h(x₁)), ẋ₂ = x₁ − x₂ + x₃, ẋ₃ = −l x₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chua {
    pub k: f64,
    pub l: f64,
}

/// Linear region of Chua's nonlinearity, split at `x₁ = ±1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChuaRegion {
    Left,
    Middle,
    Right,
}

impl ChuaRegion {
    pub const ALL: [ChuaRegion; 3] = [ChuaRegion::Left, ChuaRegion::Middle, ChuaRegion::Right];

    pub fn of(x1: f64) -> Self {
        if x1 < -1.0 {
            ChuaRegion::Left
        } else if x1 > 1.0 {
            ChuaRegion::Right
        } else {
            ChuaRegion::Middle
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ChuaRegion::Left => "left",
            ChuaRegion::Middle => "middle",
            ChuaRegion::Right => "right",
        }
    }
}

/// Slope of `h` inside `|x| < 1`.
pub const CHUA_INNER_SLOPE: f64 = -1.0 / 7.0;
/// Slope of `h` outside `|x| > 1`.
pub const CHUA_OUTER_SLOPE: f64 = 2.0 / 7.0;

impl Chua {
    /// Double-scroll parameters `k = 9`, `l = 100/7`.
    pub fn double_scroll() -> Self {
        Self {
            k: 9.0,
            l: 100.0 / 7.0,
        }
    }

    /// `h(x) = (2/7)x − (3/14)(|x+1| − |x−1|)`
    pub fn h(x: f64) -> f64 {
        2.0 / 7.0 * x - 3.0 / 14.0 * ((x + 1.0).abs() - (x - 1.0).abs())
    }

    pub fn h_slope(region: ChuaRegion) -> f64 {
        match region {
            ChuaRegion::Middle => CHUA_INNER_SLOPE,
            ChuaRegion::Left | ChuaRegion::Right => CHUA_OUTER_SLOPE,
        }
    }

    pub fn field(&self, x: &[f64; 3]) -> [f64; 3] {
        [
            self.k * (x[1] - Self::h(x[0])),
            x[0] - x[1] + x[2],
            -self.l * x[1],
        ]
    }

    /// Jacobian with the `(1,1)` entry `−k·q` for an arbitrary slope `q` of `h`.
    pub fn jacobian_with_slope(&self, q: f64) -> DenseMatrix {
        let mut j = DenseMatrix::zeros(3);
        j[(0, 0)] = -self.k * q;
        j[(0, 1)] = self.k;
        j[(1, 0)] = 1.0;
        j[(1, 1)] = -1.0;
        j[(1, 2)] = 1.0;
        j[(2, 1)] = -self.l;
        j
    }

    pub fn region_jacobian(&self, region: ChuaRegion) -> DenseMatrix {
        self.jacobian_with_slope(Self::h_slope(region))
    }
}

impl VectorField for Chua {
    fn dim(&self) -> usize {
        3
    }

    fn eval(&self, x: &[f64], _t: f64, dx: &mut [f64]) {
        dx[0] = self.k * (x[1] - Self::h(x[0]));
        dx[1] = x[0] - x[1] + x[2];
        dx[2] = -self.l * x[1];
    }
}

/// `ẋ = −rate · x` in `dim` dimensions; `rate = 0` gives `ẋ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearDecay {
    pub rate: f64,
    pub dim: usize,
}

impl VectorField for LinearDecay {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64], _t: f64, dx: &mut [f64]) {
        for (d, v) in dx.iter_mut().zip(x) {
            *d = -self.rate * v;
        }
    }
}

/// Node dynamics: a built-in vector field or a user-registered one.
#[derive(Clone)]
pub enum Dynamics {
    Chua(Chua),
    LinearDecay(LinearDecay),
    Custom {
        kind: String,
        params: BTreeMap<String, f64>,
        field: Arc<dyn VectorField>,
    },
}

impl fmt::Debug for Dynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dynamics::Chua(c) => write!(f, "Chua(k={}, l={})", c.k, c.l),
            Dynamics::LinearDecay(d) => write!(f, "LinearDecay(rate={}, dim={})", d.rate, d.dim),
            Dynamics::Custom { kind, params, .. } => write!(f, "Custom({kind}, {params:?})"),
        }
    }
}

impl Dynamics {
    pub fn kind(&self) -> &str {
        match self {
            Dynamics::Chua(_) => "chua",
            Dynamics::LinearDecay(_) => "linear_decay",
            Dynamics::Custom { kind, .. } => kind,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Dynamics::Chua(c) => c.dim(),
            Dynamics::LinearDecay(d) => d.dim,
            Dynamics::Custom { field, .. } => field.dim(),
        }
    }

    pub fn eval(&self, x: &[f64], t: f64, dx: &mut [f64]) {
        match self {
            Dynamics::Chua(c) => c.eval(x, t, dx),
            Dynamics::LinearDecay(d) => d.eval(x, t, dx),
            Dynamics::Custom { field, .. } => field.eval(x, t, dx),
        }
    }

    /// Constant Jacobians whose convex hull contains every difference quotient
    /// `(f(x) − f(y))` / `(x − y)` of the field, when such a finite set is known.
    pub fn jacobian_hull(&self) -> Option<Vec<DenseMatrix>> {
        match self {
            Dynamics::Chua(c) => Some(vec![
                c.jacobian_with_slope(CHUA_INNER_SLOPE),
                c.jacobian_with_slope(CHUA_OUTER_SLOPE),
            ]),
            Dynamics::LinearDecay(d) => Some(vec![DenseMatrix::identity(d.dim).scale(-d.rate)]),
            Dynamics::Custom { .. } => None,
        }
    }

    /// Jacobians of every linear piece, labelled.
    pub fn piecewise_jacobians(&self) -> Option<Vec<(&'static str, DenseMatrix)>> {
        match self {
            Dynamics::Chua(c) => Some(
                ChuaRegion::ALL
                    .iter()
                    .map(|&r| (r.name(), c.region_jacobian(r)))
                    .collect(),
            ),
            Dynamics::LinearDecay(d) => Some(vec![(
                "global",
                DenseMatrix::identity(d.dim).scale(-d.rate),
            )]),
            Dynamics::Custom { .. } => None,
        }
    }

    pub fn params(&self) -> BTreeMap<String, f64> {
        match self {
            Dynamics::Chua(c) => BTreeMap::from([("k".into(), c.k), ("l".into(), c.l)]),
            Dynamics::LinearDecay(d) => BTreeMap::from([("rate".into(), d.rate)]),
            Dynamics::Custom { params, .. } => params.clone(),
        }
    }
}

type Builder = Arc<dyn Fn(&BTreeMap<String, f64>, usize) -> Result<Dynamics> + Send + Sync>;

/// Name → constructor table for node dynamics.
#[derive(Clone)]
pub struct DynamicsRegistry {
    builders: BTreeMap<String, Builder>,
}

fn param_or(params: &BTreeMap<String, f64>, name: &str, default: f64) -> Result<f64> {
    let v = params.get(name).copied().unwrap_or(default);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Scenario(format!(
            "parameter `{name}` must be finite"
        )))
    }
}

impl Default for DynamicsRegistry {
    fn default() -> Self {
        let mut reg = Self {
            builders: BTreeMap::new(),
        };
        reg.register("chua", |params, dim| {
            if dim != 3 {
                return Err(Error::Scenario(format!(
                    "chua dynamics has dimension 3, got {dim}"
                )));
            }
            let default = Chua::double_scroll();
            Ok(Dynamics::Chua(Chua {
                k: param_or(params, "k", default.k)?,
                l: param_or(params, "l", default.l)?,
            }))
        });
        reg.register("linear_decay", |params, dim| {
            if dim == 0 {
                return Err(Error::Scenario("linear_decay needs dimension ≥ 1".into()));
            }
            Ok(Dynamics::LinearDecay(LinearDecay {
                rate: param_or(params, "rate", 1.0)?,
                dim,
            }))
        });
        reg
    }
}

impl DynamicsRegistry {
    pub fn register<F>(&mut self, kind: &str, build: F)
    where
        F: Fn(&BTreeMap<String, f64>, usize) -> Result<Dynamics> + Send + Sync + 'static,
    {
        self.builders.insert(kind.to_string(), Arc::new(build));
    }

    /// Registers a fixed vector field under `kind`.
    pub fn register_field(&mut self, kind: &str, field: Arc<dyn VectorField>) {
        let name = kind.to_string();
        self.register(kind, move |params, dim| {
            if dim != field.dim() {
                return Err(Error::Scenario(format!(
                    "{name} dynamics has dimension {}, got {dim}",
                    field.dim()
                )));
            }
            Ok(Dynamics::Custom {
                kind: name.clone(),
                params: params.clone(),
                field: field.clone(),
            })
        });
    }

    pub fn kinds(&self) -> impl Iterator<Item = &str> {
        self.builders.keys().map(String::as_str)
    }

    pub fn build(
        &self,
        kind: &str,
        params: &BTreeMap<String, f64>,
        dim: usize,
    ) -> Result<Dynamics> {
        let build = self.builders.get(kind).ok_or_else(|| {
            let known: Vec<&str> = self.kinds().collect();
            Error::Scenario(format!(
                "unknown dynamics kind `{kind}` (known: {})",
                known.join(", ")
            ))
        })?;
        build(params, dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_equilibrium() {
        assert_eq!(
            Chua::double_scroll().field(&[0.0, 0.0, 0.0]),
            [0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn inner_region_value() {
        // h(1) = 2/7 - 3/7 = -1/7
        let dx = Chua::double_scroll().field(&[1.0, 0.0, 0.0]);
        assert!((Chua::h(1.0) + 1.0 / 7.0).abs() < 1e-15);
        assert!((dx[0] - 9.0 / 7.0).abs() < 1e-14);
        assert_eq!(dx[1], 1.0);
        assert_eq!(dx[2], 0.0);
    }

    #[test]
    fn outer_region_value() {
        // h(2) = 4/7 - 3/7 = 1/7
        let dx = Chua::double_scroll().field(&[2.0, 0.0, 0.0]);
        assert!((Chua::h(2.0) - 1.0 / 7.0).abs() < 1e-15);
        assert!((dx[0] + 9.0 / 7.0).abs() < 1e-14);
    }

    #[test]
    fn continuous_at_breakpoints() {
        for &b in &[-1.0f64, 1.0] {
            let inner = CHUA_INNER_SLOPE * b;
            let outer = CHUA_OUTER_SLOPE * b - b.signum() * 3.0 / 7.0;
            assert!((inner - outer).abs() < 1e-15);
            assert!((Chua::h(b) - inner).abs() < 1e-15);
            // one-sided limits of the closed form agree
            assert!((Chua::h(b - 1e-12) - Chua::h(b + 1e-12)).abs() < 1e-11);
        }
    }

    #[test]
    fn region_jacobians() {
        let c = Chua::double_scroll();
        let mid = c.region_jacobian(ChuaRegion::Middle);
        assert!((mid[(0, 0)] - 9.0 / 7.0).abs() < 1e-14);
        for r in [ChuaRegion::Left, ChuaRegion::Right] {
            let j = c.region_jacobian(r);
            assert!((j[(0, 0)] + 18.0 / 7.0).abs() < 1e-14);
        }
        assert_eq!(mid[(2, 1)], -100.0 / 7.0);
        assert_eq!(mid.row(1), &[1.0, -1.0, 1.0]);
        assert_eq!(mid.row(2), &[0.0, -100.0 / 7.0, 0.0]);
    }

    #[test]
    fn jacobian_matches_finite_difference_inside_regions() {
        let c = Chua::double_scroll();
        for &x1 in &[-3.0, 0.3, 2.5] {
            let j = c.region_jacobian(ChuaRegion::of(x1));
            let x = [x1, 0.7, -0.2];
            let h = 1e-6;
            for col in 0..3 {
                let mut xp = x;
                let mut xm = x;
                xp[col] += h;
                xm[col] -= h;
                let (fp, fm) = (c.field(&xp), c.field(&xm));
                for row in 0..3 {
                    let fd = (fp[row] - fm[row]) / (2.0 * h);
                    assert!((fd - j[(row, col)]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn registry_builds_and_rejects() {
        let reg = DynamicsRegistry::default();
        let d = reg.build("chua", &BTreeMap::new(), 3).unwrap();
        assert_eq!(d.kind(), "chua");
        assert!(reg.build("chua", &BTreeMap::new(), 2).is_err());
        let err = reg.build("lorenz", &BTreeMap::new(), 3).unwrap_err();
        assert!(err.to_string().contains("unknown dynamics kind `lorenz`"));
    }

    #[derive(Debug)]
    struct Rotation;

    impl VectorField for Rotation {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, x: &[f64], _t: f64, dx: &mut [f64]) {
            dx[0] = -x[1];
            dx[1] = x[0];
        }
    }

    #[test]
    fn user_registered_field() {
        let mut reg = DynamicsRegistry::default();
        reg.register_field("rotation", Arc::new(Rotation));
        let d = reg.build("rotation", &BTreeMap::new(), 2).unwrap();
        let mut dx = [0.0; 2];
        d.eval(&[1.0, 0.0], 0.0, &mut dx);
        assert_eq!(dx, [0.0, 1.0]);
        assert!(d.jacobian_hull().is_none());
    }
}
