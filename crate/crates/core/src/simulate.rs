//! Fixed-step integration of the controlled network and its error metrics.

use serde::Serialize;

use crate::conditions::QuadCertificate;
use crate::error::{Error, Result};
use crate::model::{system_rhs, NetworkSystem};

/// States beyond this Euclidean norm abort the integration.
pub const DIVERGENCE_NORM: f64 = 1e9;
/// Rate slack of the discrete Lyapunov check.
pub const DEFAULT_TOL_RATE: f64 = 1e-3;
/// Lyapunov values below this are at the subnormal edge and are not compared.
const LYAPUNOV_FLOOR: f64 = 1e-280;

/// Sampled solution on a uniform grid `tᵢ = i·dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub nodes: usize,
    pub node_dim: usize,
    pub dt: f64,
    pub times: Vec<f64>,
    /// Per sample, `nodes × node_dim` row-major.
    pub states: Vec<f64>,
    /// Per sample, the reference `s(t)`.
    pub reference: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, sample: usize) -> &[f64] {
        let w = self.nodes * self.node_dim;
        &self.states[sample * w..(sample + 1) * w]
    }

    pub fn node(&self, sample: usize, node: usize) -> &[f64] {
        let n = self.node_dim;
        &self.state(sample)[node * n..(node + 1) * n]
    }

    pub fn reference(&self, sample: usize) -> &[f64] {
        let n = self.node_dim;
        &self.reference[sample * n..(sample + 1) * n]
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    fn push(&mut self, t: f64, x: &[f64], s: &[f64]) {
        self.times.push(t);
        self.states.extend_from_slice(x);
        self.reference.extend_from_slice(s);
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Combined right-hand side for `[x₁ … x_m, s]`.
fn augmented_rhs(sys: &NetworkSystem, y: &[f64], t: f64, dy: &mut [f64]) -> Result<()> {
    let w = sys.nodes() * sys.node_dim();
    let (x, s) = y.split_at(w);
    let (dx, ds) = dy.split_at_mut(w);
    system_rhs(sys, x, s, t, dx)?;
    sys.dynamics().eval(s, t, ds);
    if let Some(k) = dy.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "non-finite derivative in component {k} at t = {t}"
        )));
    }
    Ok(())
}

/// Classical RK4 on the network and the reference together.
///
/// The reference is integrated with the uncoupled dynamics rather than assumed.
/// Runs `round(t_max / dt)` steps.
pub fn integrate(
    sys: &NetworkSystem,
    x0: &[f64],
    s0: &[f64],
    dt: f64,
    t_max: f64,
) -> Result<Trajectory> {
    let m = sys.nodes();
    let n = sys.node_dim();
    let w = m * n;
    if x0.len() != w || s0.len() != n {
        return Err(Error::Domain(format!(
            "initial data must be {m}×{n} states and a {n}-vector reference, got {} and {}",
            x0.len(),
            s0.len()
        )));
    }
    if !(dt > 0.0 && dt.is_finite()) || !(t_max >= dt && t_max.is_finite()) {
        return Err(Error::Domain(format!(
            "need 0 < dt ≤ t_max, got dt = {dt}, t_max = {t_max}"
        )));
    }
    if x0.iter().chain(s0).any(|v| !v.is_finite()) {
        return Err(Error::Domain("initial data must be finite".into()));
    }

    let steps = (t_max / dt).round() as usize;
    let mut traj = Trajectory {
        nodes: m,
        node_dim: n,
        dt,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity((steps + 1) * w),
        reference: Vec::with_capacity((steps + 1) * n),
    };
    traj.push(0.0, x0, s0);

    let mut y: Vec<f64> = x0.iter().chain(s0).copied().collect();
    let len = y.len();
    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
        vec![0.0; len],
    );
    let mut tmp = vec![0.0; len];

    for step in 0..steps {
        let t = step as f64 * dt;
        augmented_rhs(sys, &y, t, &mut k1)?;
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * dt * k1[i];
        }
        augmented_rhs(sys, &tmp, t + 0.5 * dt, &mut k2)?;
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * dt * k2[i];
        }
        augmented_rhs(sys, &tmp, t + 0.5 * dt, &mut k3)?;
        for i in 0..len {
            tmp[i] = y[i] + dt * k3[i];
        }
        augmented_rhs(sys, &tmp, t + dt, &mut k4)?;
        for i in 0..len {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }

        let t_next = (step + 1) as f64 * dt;
        traj.push(t_next, &y[..w], &y[w..]);

        let worst = y.chunks_exact(n).map(norm).fold(0.0, f64::max);
        if !(worst <= DIVERGENCE_NORM) {
            return Err(Error::Divergence {
                time: t_next,
                norm: worst,
                partial: Box::new(traj),
            });
        }
    }
    Ok(traj)
}

/// Relative endpoint difference between runs at `dt` and `dt/2` over `horizon`.
pub fn step_halving_check(
    sys: &NetworkSystem,
    x0: &[f64],
    s0: &[f64],
    dt: f64,
    horizon: f64,
) -> Result<f64> {
    let coarse = integrate(sys, x0, s0, dt, horizon)?;
    let fine = integrate(sys, x0, s0, dt / 2.0, horizon)?;
    let a = coarse.final_state();
    let b = fine.final_state();
    let scale = norm(b).max(norm(x0)).max(f64::MIN_POSITIVE);
    Ok(dist(a, b) / scale)
}

/// Normalized error series.
///
/// A ratio whose `t = 0` denominator vanishes is `None` (undefined).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricSeries {
    pub times: Vec<f64>,
    /// `Σᵢ‖xᵢ − x̄‖ / Σᵢ‖xᵢ(0) − x̄(0)‖`, `x̄` the unweighted node mean.
    pub sync_ratio: Option<Vec<f64>>,
    /// `Σᵢ‖xᵢ − s‖ / Σᵢ‖xᵢ(0) − s(0)‖`.
    pub pin_ratio: Option<Vec<f64>>,
    /// `V = ½ Σᵢ wᵢ δxᵢᵀ P δxᵢ`.
    pub lyapunov: Vec<f64>,
}

fn lyapunov_value(traj: &Trajectory, sample: usize, weights: Option<&[f64]>, p: &[f64]) -> f64 {
    let s = traj.reference(sample);
    let mut v = 0.0;
    for i in 0..traj.nodes {
        let w = weights.map_or(1.0, |w| w[i]);
        let x = traj.node(sample, i);
        let quad: f64 = x
            .iter()
            .zip(s)
            .zip(p)
            .map(|((xi, si), pk)| pk * (xi - si) * (xi - si))
            .sum();
        v += w * quad;
    }
    0.5 * v
}

fn check_weights(traj: &Trajectory, weights: Option<&[f64]>, p: &[f64]) -> Result<()> {
    if p.len() != traj.node_dim {
        return Err(Error::Domain(format!(
            "P has {} entries, nodes have dimension {}",
            p.len(),
            traj.node_dim
        )));
    }
    if let Some(w) = weights {
        if w.len() != traj.nodes {
            return Err(Error::Domain(format!(
                "{} weights for {} nodes",
                w.len(),
                traj.nodes
            )));
        }
    }
    Ok(())
}

pub fn metrics(traj: &Trajectory, weights: Option<&[f64]>, p: &[f64]) -> Result<MetricSeries> {
    check_weights(traj, weights, p)?;
    let (m, n) = (traj.nodes, traj.node_dim);
    let mut sync = Vec::with_capacity(traj.len());
    let mut pin = Vec::with_capacity(traj.len());
    let mut mean = vec![0.0; n];
    for sample in 0..traj.len() {
        mean.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..m {
            for (acc, x) in mean.iter_mut().zip(traj.node(sample, i)) {
                *acc += x;
            }
        }
        mean.iter_mut().for_each(|v| *v /= m as f64);
        let s = traj.reference(sample);
        sync.push(
            (0..m)
                .map(|i| dist(traj.node(sample, i), &mean))
                .sum::<f64>(),
        );
        pin.push((0..m).map(|i| dist(traj.node(sample, i), s)).sum::<f64>());
    }

    let normalize = |raw: Vec<f64>| -> Option<Vec<f64>> {
        let d0 = raw[0];
        (d0 > 0.0).then(|| raw.into_iter().map(|v| v / d0).collect())
    };
    Ok(MetricSeries {
        times: traj.times.clone(),
        sync_ratio: normalize(sync),
        pin_ratio: normalize(pin),
        lyapunov: (0..traj.len())
            .map(|k| lyapunov_value(traj, k, weights, p))
            .collect(),
    })
}

/// Least-squares slope of `ln(pin_ratio)` over `[t_a, t_b]`.
pub fn decay_rate_fit(series: &MetricSeries, window: (f64, f64)) -> Result<f64> {
    let ratio = series
        .pin_ratio
        .as_ref()
        .ok_or_else(|| Error::Domain("pin ratio is undefined for this trajectory".into()))?;
    let (ta, tb) = window;
    let mut pts = Vec::new();
    for (&t, &r) in series.times.iter().zip(ratio) {
        if t < ta || t > tb {
            continue;
        }
        if !(r > 0.0) {
            return Err(Error::Domain(format!(
                "pin ratio {r} at t = {t} is not positive; cannot take its logarithm"
            )));
        }
        pts.push((t, r.ln()));
    }
    if pts.len() < 2 {
        return Err(Error::Domain(format!(
            "window [{ta}, {tb}] holds fewer than two samples"
        )));
    }
    let k = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|(t, y)| (t - tm) * (y - ym)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - tm) * (t - tm)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovViolation {
    pub t: f64,
    pub v_before: f64,
    pub v_after: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LyapunovReport {
    /// Guaranteed decay rate `η / min pᵢ`.
    pub rate: f64,
    pub tol_rate: f64,
    pub checked: usize,
    pub violations: usize,
    pub first_violation: Option<LyapunovViolation>,
}

/// Checks `V(t+dt) ≤ V(t)·exp(−(η/min pᵢ − tol_rate)·dt)` along a trajectory.
///
/// Report-only: a violation means the certificate's decay bound does not
/// describe this run, not an error.
pub fn lyapunov_monitor(
    traj: &Trajectory,
    cert: &QuadCertificate,
    weights: Option<&[f64]>,
    tol_rate: f64,
) -> Result<LyapunovReport> {
    check_weights(traj, weights, cert.p())?;
    let rate = cert.eta() / cert.min_p();
    let factor = (-(rate - tol_rate) * traj.dt).exp();
    let mut report = LyapunovReport {
        rate,
        tol_rate,
        checked: 0,
        violations: 0,
        first_violation: None,
    };
    let mut prev = lyapunov_value(traj, 0, weights, cert.p());
    for k in 1..traj.len() {
        let next = lyapunov_value(traj, k, weights, cert.p());
        if prev >= LYAPUNOV_FLOOR {
            report.checked += 1;
            let allowed = prev * factor;
            if next > allowed {
                report.violations += 1;
                report.first_violation.get_or_insert(LyapunovViolation {
                    t: traj.times[k - 1],
                    v_before: prev,
                    v_after: next,
                    allowed,
                });
            }
        }
        prev = next;
    }
    Ok(report)
}
