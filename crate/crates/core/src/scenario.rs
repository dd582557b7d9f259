//! Scenario files: JSON descriptions of a network, its controller, a QUAD
//! certificate and integration settings, plus the built-in experiments.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conditions::QuadCertificate;
use crate::error::{Error, Result};
use crate::model::{
    validate_coupling, CouplingFunction, CouplingMatrix, DynamicsRegistry, NetworkSystem,
};

pub const BUILTIN_SCENARIOS: [&str; 5] = [
    "fig2-sym-uncontrolled",
    "fig4-sym-pinned",
    "fig5-asym-pinned",
    "nonlinear-pinned",
    "reducible-pinned",
];

pub const BUILTIN_MATRICES: [&str; 3] = ["symmetric-3", "asymmetric-3", "two-block"];

/// Half-width of the default QUAD sampling cube.
pub const DEFAULT_QUAD_BOX: f64 = 30.0;
pub const DEFAULT_QUAD_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CouplingSpec {
    Builtin(String),
    Inline(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingFunctionConfig {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// Slope lower bound used by the nonlinear condition; defaults to the certified one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl Default for CouplingFunctionConfig {
    fn default() -> Self {
        Self {
            kind: "identity".into(),
            amplitude: None,
            alpha: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinConfig {
    /// 1-based.
    pub node: usize,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    pub p: Vec<f64>,
    pub delta: Vec<f64>,
    pub eta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationConfig {
    pub dt: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Window for the exponential decay fit; defaults to `[0, min(5, t_max)]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<(f64, f64)>,
    /// Sampled QUAD check size; 0 or absent uses the closed form when available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_box: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Defaults to `out/<name>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// Write every `stride`-th sample to the CSVs; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub coupling: CouplingSpec,
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub coupling_function: CouplingFunctionConfig,
    /// Coupling strength; the controller gain is `c·ε`.
    pub c: f64,
    #[serde(default)]
    pub pin: Option<PinConfig>,
    #[serde(default)]
    pub certificate: Option<CertificateConfig>,
    pub initial_states: Vec<Vec<f64>>,
    pub reference_initial: Vec<f64>,
    pub integration: IntegrationConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

/// A validated scenario ready to check or simulate.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub system: NetworkSystem,
    pub alpha: f64,
    pub certificate: Option<QuadCertificate>,
    /// Flat `m × n` initial states.
    pub x0: Vec<f64>,
    pub s0: Vec<f64>,
    pub dt: f64,
    pub t_max: f64,
    pub fit_window: (f64, f64),
    pub quad_samples: usize,
    pub quad_box: f64,
    pub out_dir: PathBuf,
    pub stride: usize,
}

pub fn builtin_matrix(id: &str) -> Option<Vec<Vec<f64>>> {
    let rows: &[&[f64]] = match id {
        "symmetric-3" => &[&[-5.1, 5.0, 0.1], &[5.0, -11.0, 6.0], &[0.1, 6.0, -6.1]],
        "asymmetric-3" => &[&[-2.0, 1.0, 1.0], &[1.0, -2.0, 1.0], &[0.0, 1.0, -1.0]],
        "two-block" => &[&[-1.0, 1.0, 0.0], &[1.0, -1.0, 0.0], &[1.0, 1.0, -2.0]],
        _ => return None,
    };
    Some(rows.iter().map(|r| r.to_vec()).collect())
}

fn default_initial_states() -> Vec<Vec<f64>> {
    vec![
        vec![40.1, 20.2, 30.3],
        vec![20.4, 30.5, 10.6],
        vec![60.7, 40.8, 50.9],
    ]
}

fn chua_certificate() -> CertificateConfig {
    CertificateConfig {
        p: vec![1.0; 3],
        delta: vec![10.0; 3],
        eta: 0.6218,
    }
}

fn chua_config() -> DynamicsConfig {
    DynamicsConfig {
        kind: "chua".into(),
        params: BTreeMap::from([("k".into(), 9.0), ("l".into(), 100.0 / 7.0)]),
    }
}

/// One of the built-in experiments, by id.
pub fn builtin(id: &str) -> Option<ScenarioConfig> {
    let base = |name: &str, coupling: &str, c: f64, pin: Option<PinConfig>| ScenarioConfig {
        name: name.into(),
        description: None,
        coupling: CouplingSpec::Builtin(coupling.into()),
        dynamics: chua_config(),
        coupling_function: CouplingFunctionConfig::default(),
        c,
        pin,
        certificate: Some(chua_certificate()),
        initial_states: default_initial_states(),
        reference_initial: vec![0.0; 3],
        integration: IntegrationConfig {
            dt: 1e-3,
            t_max: 20.0,
        },
        analysis: AnalysisConfig::default(),
        outputs: OutputConfig::default(),
        metadata: BTreeMap::new(),
    };

    let cfg = match id {
        "fig2-sym-uncontrolled" => {
            let mut cfg = base(id, "symmetric-3", 10.0, None);
            cfg.description = Some(
                "Three Chua circuits, symmetric coupling, no controller: synchronized but not pinned"
                    .into(),
            );
            cfg.integration.t_max = 50.0;
            cfg
        }
        "fig4-sym-pinned" => {
            let mut cfg = base(
                id,
                "symmetric-3",
                10.0,
                Some(PinConfig {
                    node: 1,
                    epsilon: 4.9,
                }),
            );
            cfg.description =
                Some("Symmetric coupling pinned at node 1 with epsilon = 4.9, c = 10".into());
            cfg
        }
        "fig5-asym-pinned" => {
            let mut cfg = base(
                id,
                "asymmetric-3",
                72.0,
                Some(PinConfig {
                    node: 1,
                    epsilon: 2.0,
                }),
            );
            cfg.description = Some(
                "Asymmetric irreducible coupling pinned at node 1 with epsilon = 2, c = 72".into(),
            );
            cfg.integration.dt = 2e-4;
            cfg.outputs.stride = Some(5);
            cfg.metadata.insert(
                "initial_states".into(),
                "reused from the symmetric experiment (not specified for this case)".into(),
            );
            cfg
        }
        "nonlinear-pinned" => {
            let mut cfg = base(
                id,
                "symmetric-3",
                20.0,
                Some(PinConfig {
                    node: 1,
                    epsilon: 4.9,
                }),
            );
            cfg.description = Some(
                "Nonlinear coupling g(u) = u + 0.5 sin(u) (slope >= 0.5) pinned at node 1, c = 20"
                    .into(),
            );
            cfg.coupling_function = CouplingFunctionConfig {
                kind: "sine".into(),
                amplitude: Some(0.5),
                alpha: Some(0.5),
            };
            cfg.integration.t_max = 30.0;
            cfg
        }
        "reducible-pinned" => {
            let mut cfg = base(
                id,
                "two-block",
                20.0,
                Some(PinConfig {
                    node: 1,
                    epsilon: 2.0,
                }),
            );
            cfg.description = Some(
                "Reducible coupling: root block {1,2} pinned at node 1, block {3} listens to it"
                    .into(),
            );
            cfg.integration.t_max = 30.0;
            cfg
        }
        _ => return None,
    };
    Some(cfg)
}

/// Parses and validates a scenario file.
pub fn parse_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::Scenario(format!("cannot read scenario file {}: {e}", path.display()))
    })?;
    let cfg: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
    cfg.resolve(&DynamicsRegistry::default())
        .map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

/// A built-in id or a path to a scenario file.
pub fn load(spec: &str) -> Result<ScenarioConfig> {
    match builtin(spec) {
        Some(cfg) => Ok(cfg),
        None => {
            let path = Path::new(spec);
            if !path.exists() {
                return Err(Error::Scenario(format!(
                    "`{spec}` is neither a built-in scenario ({}) nor an existing file",
                    BUILTIN_SCENARIOS.join(", ")
                )));
            }
            parse_scenario(path)
        }
    }
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Scenario(format!("field `{field}`: {msg}"))
}

impl ScenarioConfig {
    pub fn coupling_rows(&self) -> Result<Vec<Vec<f64>>> {
        match &self.coupling {
            CouplingSpec::Inline(rows) => Ok(rows.clone()),
            CouplingSpec::Builtin(id) => builtin_matrix(id).ok_or_else(|| {
                field_err(
                    "coupling",
                    format!(
                        "unknown built-in matrix `{id}` (known: {})",
                        BUILTIN_MATRICES.join(", ")
                    ),
                )
            }),
        }
    }

    pub fn coupling_matrix(&self) -> Result<CouplingMatrix> {
        validate_coupling(&self.coupling_rows()?).map_err(|e| field_err("coupling", e))
    }

    fn coupling_function(&self) -> Result<(CouplingFunction, f64)> {
        let cfg = &self.coupling_function;
        let g = match cfg.kind.as_str() {
            "identity" => {
                if cfg.amplitude.is_some() {
                    return Err(field_err(
                        "coupling_function.amplitude",
                        "identity coupling takes no amplitude",
                    ));
                }
                CouplingFunction::Identity
            }
            "sine" => CouplingFunction::sine(cfg.amplitude.unwrap_or(0.5))
                .map_err(|e| field_err("coupling_function.amplitude", e))?,
            other => {
                return Err(field_err(
                    "coupling_function.kind",
                    format!("unknown coupling function `{other}` (known: identity, sine)"),
                ))
            }
        };
        let alpha = match cfg.alpha {
            None => g.alpha_lower(),
            Some(a) if a > 0.0 && a <= g.alpha_lower() => a,
            Some(a) => {
                return Err(field_err(
                    "coupling_function.alpha",
                    format!(
                        "{a} is not a valid slope bound; must lie in (0, {}]",
                        g.alpha_lower()
                    ),
                ))
            }
        };
        Ok((g, alpha))
    }

    /// Validates every field and builds the network.
    pub fn resolve(&self, registry: &DynamicsRegistry) -> Result<Resolved> {
        if self.name.trim().is_empty() {
            return Err(field_err("name", "must not be empty"));
        }
        let coupling = self.coupling_matrix()?;
        let m = coupling.dim();
        let n = self.reference_initial.len();
        if n == 0 {
            return Err(field_err("reference_initial", "must not be empty"));
        }
        let dynamics = registry
            .build(&self.dynamics.kind, &self.dynamics.params, n)
            .map_err(|e| field_err("dynamics", e))?;

        if self.initial_states.len() != m {
            return Err(field_err(
                "initial_states",
                format!(
                    "dimension mismatch: {} node states for a {m}-node coupling matrix",
                    self.initial_states.len()
                ),
            ));
        }
        for (i, row) in self.initial_states.iter().enumerate() {
            if row.len() != n {
                return Err(field_err(
                    "initial_states",
                    format!(
                        "dimension mismatch: node {} has {} components, reference has {n}",
                        i + 1,
                        row.len()
                    ),
                ));
            }
        }
        let x0: Vec<f64> = self.initial_states.iter().flatten().copied().collect();
        if x0
            .iter()
            .chain(&self.reference_initial)
            .any(|v| !v.is_finite())
        {
            return Err(field_err("initial_states", "values must be finite"));
        }

        let (gfun, alpha) = self.coupling_function()?;
        let mut system =
            NetworkSystem::new(coupling, dynamics, gfun, self.c).map_err(|e| field_err("c", e))?;
        if let Some(pin) = self.pin {
            if pin.node == 0 || pin.node > m {
                return Err(field_err(
                    "pin.node",
                    format!(
                        "{} is out of range; node indices are 1-based in 1..={m}",
                        pin.node
                    ),
                ));
            }
            system = system
                .with_pin(pin.node, pin.epsilon)
                .map_err(|e| field_err("pin", e))?;
        }

        let certificate = match &self.certificate {
            Some(c) => {
                if c.p.len() != n || c.delta.len() != n {
                    return Err(field_err(
                        "certificate",
                        format!(
                            "dimension mismatch: P has {} and Delta {} entries, nodes have dimension {n}",
                            c.p.len(),
                            c.delta.len()
                        ),
                    ));
                }
                Some(
                    QuadCertificate::new(c.p.clone(), c.delta.clone(), c.eta)
                        .map_err(|e| field_err("certificate", e))?,
                )
            }
            None => None,
        };

        let IntegrationConfig { dt, t_max } = self.integration;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(field_err(
                "integration.dt",
                format!("must be positive, got {dt}"),
            ));
        }
        if !(t_max >= dt && t_max.is_finite()) {
            return Err(field_err(
                "integration.t_max",
                format!("must be at least dt = {dt}, got {t_max}"),
            ));
        }

        let fit_window = self.analysis.fit_window.unwrap_or((0.0, t_max.min(5.0)));
        if !(fit_window.0 < fit_window.1) {
            return Err(field_err(
                "analysis.fit_window",
                format!("empty window [{}, {}]", fit_window.0, fit_window.1),
            ));
        }
        let quad_box = self.analysis.quad_box.unwrap_or(DEFAULT_QUAD_BOX);
        if !(quad_box > 0.0 && quad_box.is_finite()) {
            return Err(field_err("analysis.quad_box", "must be positive"));
        }
        let stride = self.outputs.stride.unwrap_or(1);
        if stride == 0 {
            return Err(field_err("outputs.stride", "must be at least 1"));
        }

        Ok(Resolved {
            system,
            alpha,
            certificate,
            x0,
            s0: self.reference_initial.clone(),
            dt,
            t_max,
            fit_window,
            quad_samples: self.analysis.quad_samples.unwrap_or(0),
            quad_box,
            out_dir: PathBuf::from(
                self.outputs
                    .dir
                    .clone()
                    .unwrap_or_else(|| format!("out/{}", self.name)),
            ),
            stride,
        })
    }
}
