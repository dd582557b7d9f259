//! Condition reports, simulation runs and their file outputs.

use std::fmt::{self, Write as _};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::conditions::{
    min_coupling_strength, proposition1_holds, quad_certificate, quad_check_sampled,
    reducible_pinnability, theorem1_margin, theorem2_check, theorem3_check, theorem4_check,
    SampledQuad, SpectralReport, StateBox, Verdict,
};
use crate::error::{Error, Result};
use crate::linalg::{scc_condensation, Condensation};
use crate::model::{pinned_matrix, DynamicsRegistry};
use crate::scenario::{Resolved, ScenarioConfig, DEFAULT_QUAD_SAMPLES};
use crate::simulate::{
    decay_rate_fit, integrate, lyapunov_monitor, metrics, step_halving_check, LyapunovReport,
    MetricSeries, Trajectory, DEFAULT_TOL_RATE,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONDITIONS: i32 = 2;
pub const EXIT_DIVERGENCE: i32 = 3;

/// Horizon of the step-halving self-check.
const SELF_CHECK_HORIZON: f64 = 1.0;
/// Ratio below which a network counts as synchronized or pinned at the end of a run.
const CONVERGED_RATIO: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedVerdict {
    pub name: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuadSummary {
    pub stated_eta: f64,
    /// Exact margin from the Jacobian hull, when the dynamics have one.
    pub closed_form_eta: Option<f64>,
    pub sampled: Option<SampledQuad>,
    pub seed: Option<u64>,
    /// The stated margin is backed by the closed form, or by sampling when no closed form exists.
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub scenario: String,
    pub c: f64,
    pub structure: String,
    pub pin: Option<(usize, f64)>,
    pub spectral: Option<SpectralReport>,
    pub c_lambda1: Option<f64>,
    pub verdicts: Vec<NamedVerdict>,
    /// Condition that decides [`CheckReport::conditions_hold`].
    pub global: Option<String>,
    pub min_c: Option<f64>,
    pub quad: Option<QuadSummary>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts
            .iter()
            .find(|v| v.name == name)
            .map(|v| &v.verdict)
    }

    pub fn global_verdict(&self) -> Option<&Verdict> {
        self.global.as_deref().and_then(|g| self.verdict(g))
    }

    /// The applicable global condition holds under a valid certificate.
    pub fn conditions_hold(&self) -> bool {
        let global = self.global_verdict().is_some_and(|v| v.holds);
        let quad = self.quad.as_ref().is_none_or(|q| q.valid);
        global && quad
    }
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.6}")).collect();
    format!("({})", parts.join(", "))
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "scenario: {}", self.scenario)?;
        writeln!(f, "coupling strength c = {}", self.c)?;
        writeln!(f, "structure: {}", self.structure)?;
        match self.pin {
            Some((node, eps)) => writeln!(f, "pin: node {node}, epsilon = {eps}")?,
            None => writeln!(f, "pin: none (uncontrolled)")?,
        }
        if let Some(s) = &self.spectral {
            let label = if s.xi.is_some() { "mu1" } else { "lambda1" };
            writeln!(f, "{label} = {:.6}", s.lambda1)?;
            writeln!(f, "spectrum = {}", fmt_vec(&s.lambda))?;
            if let Some(xi) = &s.xi {
                writeln!(f, "xi = {}", fmt_vec(xi))?;
            }
        }
        if let Some(cl) = self.c_lambda1 {
            writeln!(f, "c * lambda1 = {cl:.6}")?;
        }
        if let Some(q) = &self.quad {
            write!(f, "QUAD: stated eta = {}", q.stated_eta)?;
            if let Some(e) = q.closed_form_eta {
                write!(f, ", closed-form eta = {e:.6}")?;
            }
            if let Some(s) = &q.sampled {
                write!(
                    f,
                    ", sampled min quotient = {:.6} over {} pairs (seed {})",
                    s.min_quotient,
                    s.samples,
                    q.seed.unwrap_or_default()
                )?;
            }
            writeln!(f, " -> {}", if q.valid { "valid" } else { "NOT valid" })?;
        }
        for nv in &self.verdicts {
            let v = &nv.verdict;
            write!(
                f,
                "{}: {} (margin {:.6}",
                nv.name,
                if v.holds { "holds" } else { "fails" },
                v.margin
            )?;
            if let Some(b) = &v.binding {
                write!(f, ", binding {b}")?;
            }
            writeln!(f, ")")?;
        }
        if let Some(c) = self.min_c {
            writeln!(
                f,
                "minimal coupling strength c* = {c:.6} (condition holds for c > c*)"
            )?;
        }
        for note in &self.notes {
            writeln!(f, "note: {note}")?;
        }
        write!(
            f,
            "overall: {}",
            if self.conditions_hold() {
                "sufficient conditions hold"
            } else {
                "sufficient conditions not established"
            }
        )
    }
}

fn resolve(cfg: &ScenarioConfig) -> Result<Resolved> {
    cfg.resolve(&DynamicsRegistry::default())
}

fn quad_summary(r: &Resolved, seed: Option<u64>) -> Result<Option<QuadSummary>> {
    let Some(cert) = &r.certificate else {
        return Ok(None);
    };
    let dynamics = r.system.dynamics();
    let closed = quad_certificate(dynamics, cert.p(), cert.delta())?;
    let samples = match (r.quad_samples, closed, seed) {
        (0, None, _) => DEFAULT_QUAD_SAMPLES,
        (0, Some(_), Some(_)) => DEFAULT_QUAD_SAMPLES,
        (n, _, _) => n,
    };
    let sampled = if samples > 0 {
        let region = StateBox::cube(cert.p().len(), r.quad_box)?;
        Some(quad_check_sampled(
            dynamics,
            cert,
            &region,
            samples,
            seed.unwrap_or(0),
        )?)
    } else {
        None
    };
    let valid = match closed {
        Some(eta) => eta >= cert.eta(),
        None => sampled.as_ref().is_some_and(|s| s.verdict.holds),
    };
    Ok(Some(QuadSummary {
        stated_eta: cert.eta(),
        closed_form_eta: closed,
        seed: sampled.as_ref().map(|_| seed.unwrap_or(0)),
        sampled,
        valid,
    }))
}

fn describe_structure(cfg: &ScenarioConfig, symmetric: bool, cond: &Condensation) -> String {
    let shape = if symmetric { "symmetric" } else { "asymmetric" };
    let conn = if cond.is_irreducible() {
        "irreducible".to_string()
    } else {
        format!("reducible, {cond}")
    };
    format!(
        "{} nodes, {shape}, {conn}; dynamics {}, coupling function {}",
        cfg.initial_states.len(),
        cfg.dynamics.kind,
        cfg.coupling_function.kind
    )
}

/// Runs the applicable chain of sufficient conditions.
///
/// `seed` forces a sampled QUAD check; without it sampling only runs when no
/// closed form exists or the scenario asks for it.
pub fn check_scenario(cfg: &ScenarioConfig, seed: Option<u64>) -> Result<CheckReport> {
    let r = resolve(cfg)?;
    let sys = &r.system;
    let a = sys.coupling();
    let cond = scc_condensation(a);
    let mut report = CheckReport {
        scenario: cfg.name.clone(),
        c: sys.c(),
        structure: describe_structure(cfg, a.symmetric(), &cond),
        pin: sys.pin().map(|p| (p.pin_node(), p.epsilon())),
        spectral: None,
        c_lambda1: None,
        verdicts: Vec::new(),
        global: None,
        min_c: None,
        quad: quad_summary(&r, seed)?,
        notes: Vec::new(),
    };
    if let Some(q) = &report.quad {
        if let Some(eta) = q.closed_form_eta {
            if eta < q.stated_eta {
                report.notes.push(format!(
                    "stated eta {} exceeds the exact margin {eta:.6} for this (P, Delta)",
                    q.stated_eta
                ));
            }
        }
    }

    let Some(pin) = sys.pin() else {
        report
            .notes
            .push("no controller: pinning conditions do not apply".into());
        if a.symmetric() {
            // The unpinned matrix has a zero eigenvalue (consensus direction).
            let (v, s) = proposition1_holds(a)?;
            report.c_lambda1 = Some(sys.c() * s.lambda1);
            report.spectral = Some(s);
            report.verdicts.push(NamedVerdict {
                name: "negative spectrum".into(),
                verdict: v,
            });
        }
        return Ok(report);
    };

    if !cond.is_irreducible() {
        let (v, _) = reducible_pinnability(a, pin.pin_node())?;
        report.verdicts.push(NamedVerdict {
            name: "reducible criterion".into(),
            verdict: v,
        });
        report.global = Some("reducible criterion".into());
        report.notes.push(
            "reducible coupling: structural single-pin criterion on the block condensation".into(),
        );
        return Ok(report);
    }

    if a.symmetric() {
        let a_tilde = pinned_matrix(a, pin)?;
        let (v, s) = proposition1_holds(&a_tilde)?;
        let lambda1 = s.lambda1;
        report.c_lambda1 = Some(sys.c() * lambda1);
        report.spectral = Some(s);
        report.verdicts.push(NamedVerdict {
            name: "negative spectrum".into(),
            verdict: v,
        });
        match theorem1_margin(sys, lambda1) {
            Ok(v) => report.verdicts.push(NamedVerdict {
                name: "local condition".into(),
                verdict: v,
            }),
            Err(Error::Unsupported(msg)) => report.notes.push(msg),
            Err(e) => return Err(e),
        }
        let Some(cert) = &r.certificate else {
            report
                .notes
                .push("no QUAD certificate: global condition not evaluated".into());
            return Ok(report);
        };
        let (name, verdict, alpha) = if sys.gfun().is_identity() {
            ("global linear", theorem2_check(cert, sys.c(), lambda1), 1.0)
        } else {
            (
                "global nonlinear",
                theorem3_check(cert, sys.c(), lambda1, r.alpha),
                r.alpha,
            )
        };
        report.verdicts.push(NamedVerdict {
            name: name.into(),
            verdict,
        });
        report.global = Some(name.into());
        match min_coupling_strength(cert, lambda1, alpha, 1.0) {
            Ok(c) => report.min_c = Some(c),
            Err(Error::NoFiniteCoupling(l)) => report
                .notes
                .push(format!("lambda1 = {l} is not negative: no finite c works")),
            Err(e) => return Err(e),
        }
        return Ok(report);
    }

    if !sys.gfun().is_identity() {
        report.notes.push(
            "nonlinear coupling with an asymmetric matrix is not covered by any implemented condition"
                .into(),
        );
        return Ok(report);
    }
    let Some(cert) = &r.certificate else {
        report
            .notes
            .push("no QUAD certificate: global condition not evaluated".into());
        return Ok(report);
    };
    let (verdict, s) = theorem4_check(a, pin, cert)?;
    let (mu1, xi_max) = (s.lambda1, s.xi_max.unwrap_or(1.0));
    report.c_lambda1 = Some(sys.c() * mu1);
    report.spectral = Some(s);
    report.verdicts.push(NamedVerdict {
        name: "global weighted".into(),
        verdict,
    });
    report.global = Some("global weighted".into());
    match min_coupling_strength(cert, mu1, 1.0, xi_max) {
        Ok(c) => report.min_c = Some(c),
        Err(Error::NoFiniteCoupling(l)) => report
            .notes
            .push(format!("mu1 = {l} is not negative: no finite c works")),
        Err(e) => return Err(e),
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub scenario: String,
    pub check: CheckReport,
    pub completed: bool,
    /// Time at which the divergence guard fired.
    pub diverged_at: Option<f64>,
    pub final_time: f64,
    pub final_sync_ratio: Option<f64>,
    pub final_pin_ratio: Option<f64>,
    pub fit_window: (f64, f64),
    pub decay_rate: Option<f64>,
    pub lyapunov: Option<LyapunovReport>,
    pub self_check: Option<f64>,
    pub classification: String,
    pub files: Vec<PathBuf>,
}

impl RunSummary {
    pub fn exit_code(&self) -> i32 {
        if self.completed {
            EXIT_OK
        } else {
            EXIT_DIVERGENCE
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |x| format!("{x:.6e}"))
}

impl fmt::Display for RunSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.check)?;
        writeln!(f)?;
        if let Some(t) = self.diverged_at {
            writeln!(
                f,
                "DIVERGED at t = {t}; outputs are partial (up to t = {})",
                self.final_time
            )?;
        } else {
            writeln!(f, "simulated to t = {}", self.final_time)?;
        }
        writeln!(f, "final sync_ratio = {}", opt(self.final_sync_ratio))?;
        writeln!(f, "final pin_ratio = {}", opt(self.final_pin_ratio))?;
        writeln!(
            f,
            "fitted decay rate of pin_ratio on [{}, {}] = {}",
            self.fit_window.0,
            self.fit_window.1,
            self.decay_rate
                .map_or_else(|| "unavailable".into(), |r| format!("{r:.6}"))
        )?;
        if let Some(l) = &self.lyapunov {
            write!(
                f,
                "Lyapunov monitor: rate {:.6}, {} of {} steps violate the bound",
                l.rate, l.violations, l.checked
            )?;
            if let Some(v) = &l.first_violation {
                write!(f, " (first at t = {})", v.t)?;
            }
            writeln!(f)?;
        }
        if let Some(s) = self.self_check {
            writeln!(f, "step-halving self-check: relative difference {s:.3e}")?;
        }
        writeln!(f, "classification: {}", self.classification)?;
        for file in &self.files {
            writeln!(f, "wrote {}", file.display())?;
        }
        Ok(())
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.16e}"))
}

pub fn write_metrics_csv(path: &Path, series: &MetricSeries, stride: usize) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "t,sync_ratio,pin_ratio,lyapunov")?;
    for k in (0..series.times.len()).step_by(stride.max(1)) {
        writeln!(
            w,
            "{:.16e},{},{},{:.16e}",
            series.times[k],
            cell(series.sync_ratio.as_ref().map(|r| r[k])),
            cell(series.pin_ratio.as_ref().map(|r| r[k])),
            series.lyapunov[k]
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Long-form trajectory; node `0` is the reference `s(t)`.
pub fn write_trajectory_csv(path: &Path, traj: &Trajectory, stride: usize) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    let mut header = String::from("t,node");
    for k in 1..=traj.node_dim {
        write!(header, ",x{k}").expect("writing to a String");
    }
    writeln!(w, "{header}")?;
    let mut row = String::new();
    for k in (0..traj.len()).step_by(stride.max(1)) {
        let t = traj.times[k];
        for node in 0..=traj.nodes {
            let x = if node == 0 {
                traj.reference(k)
            } else {
                traj.node(k, node - 1)
            };
            row.clear();
            write!(row, "{t:.16e},{node}").expect("writing to a String");
            for v in x {
                write!(row, ",{v:.16e}").expect("writing to a String");
            }
            writeln!(w, "{row}")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn classify(sync: Option<f64>, pin: Option<f64>, diverged: bool) -> String {
    if diverged {
        return "diverged".into();
    }
    let small = |v: Option<f64>| v.is_some_and(|x| x < CONVERGED_RATIO);
    match (small(sync), small(pin)) {
        (_, true) => "pinned".into(),
        (true, false) => "synchronized but not pinned".into(),
        (false, false) => "neither synchronized nor pinned".into(),
    }
}

/// Output of a completed or diverged simulation, kept in memory for callers.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub trajectory: Trajectory,
    pub metrics: MetricSeries,
}

/// Integrates a scenario, writes `metrics.csv`, `trajectory.csv` and
/// `summary.txt` into `out_dir`, and returns the summary.
///
/// Divergence is not an error here: the partial trajectory is written and
/// the summary is flagged.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: &Path) -> Result<RunOutput> {
    run_scenario_seeded(cfg, out_dir, None)
}

/// [`run_scenario`] with a seed for the sampled QUAD check in the report.
pub fn run_scenario_seeded(
    cfg: &ScenarioConfig,
    out_dir: &Path,
    seed: Option<u64>,
) -> Result<RunOutput> {
    let r = resolve(cfg)?;
    let check = check_scenario(cfg, seed)?;
    let sys = &r.system;

    let (traj, diverged_at) = match integrate(sys, &r.x0, &r.s0, r.dt, r.t_max) {
        Ok(t) => (t, None),
        Err(Error::Divergence { time, partial, .. }) => (*partial, Some(time)),
        Err(e) => return Err(e),
    };

    // Asymmetric irreducible networks weight the Lyapunov function by ξ.
    let weights = check.spectral.as_ref().and_then(|s| s.xi.clone());
    let p = r
        .certificate
        .as_ref()
        .map_or_else(|| vec![1.0; sys.node_dim()], |c| c.p().to_vec());
    let series = metrics(&traj, weights.as_deref(), &p)?;

    let decay_rate = decay_rate_fit(&series, r.fit_window).ok();
    let lyapunov = r
        .certificate
        .as_ref()
        .map(|cert| lyapunov_monitor(&traj, cert, weights.as_deref(), DEFAULT_TOL_RATE))
        .transpose()?;
    let self_check = if diverged_at.is_none() {
        let horizon = r.t_max.min(SELF_CHECK_HORIZON).max(r.dt);
        Some(step_halving_check(sys, &r.x0, &r.s0, r.dt, horizon)?)
    } else {
        None
    };

    let last = series.times.len() - 1;
    let final_sync_ratio = series.sync_ratio.as_ref().map(|v| v[last]);
    let final_pin_ratio = series.pin_ratio.as_ref().map(|v| v[last]);

    fs::create_dir_all(out_dir)?;
    let metrics_path = out_dir.join("metrics.csv");
    let traj_path = out_dir.join("trajectory.csv");
    let summary_path = out_dir.join("summary.txt");
    write_metrics_csv(&metrics_path, &series, r.stride)?;
    write_trajectory_csv(&traj_path, &traj, r.stride)?;

    let summary = RunSummary {
        scenario: cfg.name.clone(),
        check,
        completed: diverged_at.is_none(),
        diverged_at,
        final_time: series.times[last],
        final_sync_ratio,
        final_pin_ratio,
        fit_window: r.fit_window,
        decay_rate,
        lyapunov,
        self_check,
        classification: classify(final_sync_ratio, final_pin_ratio, diverged_at.is_some()),
        files: vec![metrics_path, traj_path, summary_path.clone()],
    };
    fs::write(&summary_path, format!("{summary}"))?;
    Ok(RunOutput {
        summary,
        trajectory: traj,
        metrics: series,
    })
}

/// Parses `c=<a>:<b>:<n>` into `n` evenly spaced values from `a` to `b`.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Scenario(format!("sweep `{spec}` is not of the form c=<a>:<b>:<n>"));
    let body = spec.strip_prefix("c=").ok_or_else(bad)?;
    let parts: Vec<&str> = body.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(bad());
    };
    let a: f64 = a.parse().map_err(|_| bad())?;
    let b: f64 = b.parse().map_err(|_| bad())?;
    let n: usize = n.parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() || (n == 1 && a != b) {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub c: f64,
    pub conditions_hold: bool,
    pub margin: Option<f64>,
    pub final_pin_ratio: Option<f64>,
    pub decay_rate: Option<f64>,
    pub diverged: bool,
}

/// Runs the scenario at every `c`, in parallel, each into `out_dir/c_<k>`,
/// and writes `out_dir/sweep.csv`.
pub fn run_sweep(
    cfg: &ScenarioConfig,
    cs: &[f64],
    out_dir: &Path,
    seed: Option<u64>,
) -> Result<Vec<SweepPoint>> {
    let points: Vec<Result<SweepPoint>> = cs
        .par_iter()
        .enumerate()
        .map(|(k, &c)| {
            let mut point_cfg = cfg.clone();
            point_cfg.c = c;
            let out = run_scenario_seeded(&point_cfg, &out_dir.join(format!("c_{k:03}")), seed)?;
            let s = out.summary;
            Ok(SweepPoint {
                c,
                conditions_hold: s.check.conditions_hold(),
                margin: s.check.global_verdict().map(|v| v.margin),
                final_pin_ratio: s.final_pin_ratio,
                decay_rate: s.decay_rate,
                diverged: !s.completed,
            })
        })
        .collect();
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;

    fs::create_dir_all(out_dir)?;
    let mut w = BufWriter::new(fs::File::create(out_dir.join("sweep.csv"))?);
    writeln!(
        w,
        "c,conditions_hold,margin,final_pin_ratio,decay_rate,diverged"
    )?;
    for p in &points {
        writeln!(
            w,
            "{:.16e},{},{},{},{},{}",
            p.c,
            p.conditions_hold,
            cell(p.margin),
            cell(p.final_pin_ratio),
            cell(p.decay_rate),
            p.diverged
        )?;
    }
    w.flush()?;
    Ok(points)
}
