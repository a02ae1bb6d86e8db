//! Experiment configuration: a single declarative TOML file describing the
//! model, topology, dynamics, seeds, perturbation schedule, probe, and
//! output/analysis settings.
//!
//! Validation is separated from execution: [`validate_config_file`] runs
//! every structural and invariant check without simulating anything and
//! reports each violation with the offending field.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{OmegaSpec, PerturbationSpec, TopologyKind, TopologySpec};
use crate::kuramoto::Integrator;
use crate::probe::ProbeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Kuramoto,
    Pulse,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyConfig {
    pub kind: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub coupling: Option<f64>,
    /// Ring only: neighbors per side.
    #[serde(default)]
    pub k: Option<usize>,
    /// Erdos-Renyi only: edge probability.
    #[serde(default)]
    pub p: Option<f64>,
    /// Custom only: network file to load.
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub mean_field: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaConfig {
    pub kind: String,
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub lo: Option<f64>,
    #[serde(default)]
    pub hi: Option<f64>,
    #[serde(default)]
    pub mean: Option<f64>,
    #[serde(default)]
    pub sd: Option<f64>,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        OmegaConfig {
            kind: "normal".into(),
            value: None,
            lo: None,
            hi: None,
            mean: Some(0.0),
            sd: Some(1.0),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsConfig {
    /// Integration step (continuous model only).
    #[serde(default)]
    pub dt: Option<f64>,
    pub t_max: f64,
    #[serde(default)]
    pub integrator: Option<Integrator>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseConfig {
    pub p_send: f64,
    pub alpha: f64,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn default_threshold() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttenuationConfig {
    pub beta0: f64,
    pub gamma: f64,
    pub m: f64,
    #[serde(default)]
    pub cutoff: Option<f64>,
    /// "euclidean" (node positions) or "graph" (hop counts).
    #[serde(default = "default_distance")]
    pub distance: String,
}

fn default_distance() -> String {
    "euclidean".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Which raw files each seed directory receives. Defaults to all that
    /// apply to the model.
    #[serde(default)]
    pub formats: Option<Vec<String>>,
    /// Parallel seed workers.
    #[serde(default)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub regime: bool,
    #[serde(default = "default_regime_tolerance")]
    pub regime_tolerance: f64,
    #[serde(default)]
    pub qoppa: bool,
    /// Fit window (t_start, t_end); defaults to the whole run.
    #[serde(default)]
    pub qoppa_window: Option<(f64, f64)>,
    #[serde(default)]
    pub trajectory_embed: bool,
    /// Window for the pulse firing-rate estimate; defaults to 10 mean
    /// periods.
    #[serde(default)]
    pub signaling_window: Option<f64>,
}

fn default_regime_tolerance() -> f64 {
    0.02
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            regime: false,
            regime_tolerance: default_regime_tolerance(),
            qoppa: false,
            qoppa_window: None,
            trajectory_embed: false,
            signaling_window: None,
        }
    }
}

pub const KNOWN_FORMATS: &[&str] = &[
    "trajectory",
    "nodes",
    "network",
    "events",
    "signaling",
    "probe",
];

/// The full declarative experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub model: Model,
    pub seeds: Vec<u64>,
    pub topology: TopologyConfig,
    #[serde(default)]
    pub omega: OmegaConfig,
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub pulse: Option<PulseConfig>,
    #[serde(default)]
    pub perturbations: Vec<PerturbationSpec>,
    #[serde(default)]
    pub probe: Option<ProbeConfig>,
    #[serde(default)]
    pub attenuation: Option<AttenuationConfig>,
    pub output: OutputConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

fn default_schema_version() -> u32 {
    1
}

impl ExperimentConfig {
    /// Every violated constraint, one message per violation, each naming
    /// the field it concerns. Empty means the config is runnable.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.schema_version != 1 {
            out.push(format!(
                "schema_version {} is not supported (expected 1)",
                self.schema_version
            ));
        }
        if self.seeds.is_empty() {
            out.push("seeds must be nonempty".into());
        }

        // Topology.
        match self.topology.kind.as_str() {
            "complete" | "ring" | "erdos-renyi" => {
                match self.topology.n {
                    None => out.push("topology.n is required for built-in topologies".into()),
                    Some(0) => out.push("topology.n must be >= 1".into()),
                    Some(_) => {}
                }
                match self.topology.coupling {
                    None => {
                        out.push("topology.coupling is required for built-in topologies".into())
                    }
                    Some(c) if !(c >= 0.0) || !c.is_finite() => out.push(format!(
                        "topology.coupling must be finite and >= 0, got {c}"
                    )),
                    Some(_) => {}
                }
                if self.topology.kind == "ring" {
                    match (self.topology.k, self.topology.n) {
                        (None, _) => out.push("topology.k is required for ring topologies".into()),
                        (Some(k), Some(n)) if k >= n.max(1) => {
                            out.push(format!("topology.k = {k} must be < topology.n = {n}"))
                        }
                        _ => {}
                    }
                }
                if self.topology.kind == "erdos-renyi" {
                    match self.topology.p {
                        None => out.push("topology.p is required for erdos-renyi".into()),
                        Some(p) if !(0.0..=1.0).contains(&p) => {
                            out.push(format!("topology.p must lie in [0, 1], got {p}"))
                        }
                        _ => {}
                    }
                }
            }
            "custom" => {
                if self.topology.path.is_none() {
                    out.push("topology.path is required for custom topologies".into());
                }
            }
            other => out.push(format!(
                "topology.kind `{other}` is not one of complete|ring|erdos-renyi|custom"
            )),
        }

        // Omega distribution.
        match self.omega.kind.as_str() {
            "constant" => {
                if self.omega.value.is_none() {
                    out.push("omega.value is required for constant omega".into());
                }
            }
            "uniform" => match (self.omega.lo, self.omega.hi) {
                (Some(lo), Some(hi)) if !(lo <= hi) => {
                    out.push(format!("omega.lo {lo} must be <= omega.hi {hi}"))
                }
                (Some(_), Some(_)) => {}
                _ => out.push("omega.lo and omega.hi are required for uniform omega".into()),
            },
            "normal" => match (self.omega.mean, self.omega.sd) {
                (Some(_), Some(sd)) if !(sd >= 0.0) => {
                    out.push(format!("omega.sd must be >= 0, got {sd}"))
                }
                (Some(_), Some(_)) => {}
                _ => out.push("omega.mean and omega.sd are required for normal omega".into()),
            },
            other => out.push(format!(
                "omega.kind `{other}` is not one of constant|uniform|normal"
            )),
        }

        // Dynamics.
        if !(self.dynamics.t_max > 0.0) {
            out.push(format!(
                "dynamics.t_max must be > 0, got {}",
                self.dynamics.t_max
            ));
        }
        match self.model {
            Model::Kuramoto => match self.dynamics.dt {
                None => out.push("dynamics.dt is required for the kuramoto model".into()),
                Some(dt) if !(dt > 0.0) => out.push(format!("dynamics.dt must be > 0, got {dt}")),
                Some(_) => {}
            },
            Model::Pulse => match &self.pulse {
                None => out.push("a [pulse] section is required for the pulse model".into()),
                Some(p) => {
                    if !(0.0..=1.0).contains(&p.p_send) {
                        out.push(format!("pulse.p_send must lie in [0, 1], got {}", p.p_send));
                    }
                    if !(p.alpha >= 0.0) {
                        out.push(format!("pulse.alpha must be >= 0, got {}", p.alpha));
                    }
                    if !(p.threshold > 0.0 && p.threshold <= 1.0) {
                        out.push(format!(
                            "pulse.threshold must lie in (0, 1], got {}",
                            p.threshold
                        ));
                    }
                }
            },
        }

        // Perturbations.
        for (k, spec) in self.perturbations.iter().enumerate() {
            if !(spec.at_time >= 0.0) {
                out.push(format!(
                    "perturbations[{k}].at_time must be >= 0, got {}",
                    spec.at_time
                ));
            }
            if spec.at_time > self.dynamics.t_max {
                out.push(format!(
                    "perturbations[{k}].at_time {} is after dynamics.t_max {}",
                    spec.at_time, self.dynamics.t_max
                ));
            }
        }

        // Probe.
        if let Some(probe) = &self.probe {
            if let Err(e) = probe.validate() {
                out.push(e.to_string());
            }
            if self.model == Model::Pulse {
                out.push("probe requires the kuramoto model".into());
            }
        }

        // Attenuation.
        if let Some(att) = &self.attenuation {
            if !(att.beta0 > 0.0) {
                out.push(format!("attenuation.beta0 must be > 0, got {}", att.beta0));
            }
            if !(att.gamma >= 0.0) {
                out.push(format!("attenuation.gamma must be >= 0, got {}", att.gamma));
            }
            if !(att.m > 0.0) {
                out.push(format!("attenuation.m must be > 0, got {}", att.m));
            }
            if let Some(c) = att.cutoff {
                if !(c > 0.0) {
                    out.push(format!("attenuation.cutoff must be > 0, got {c}"));
                }
            }
            match att.distance.as_str() {
                "euclidean" => {
                    if self.topology.kind != "custom" {
                        out.push(
                            "attenuation.distance = \"euclidean\" needs a custom topology \
                             with node positions"
                                .into(),
                        );
                    }
                }
                "graph" => {}
                other => out.push(format!(
                    "attenuation.distance `{other}` is not one of euclidean|graph"
                )),
            }
        }

        // Output.
        if self.output.directory.as_os_str().is_empty() {
            out.push("output.directory must not be empty".into());
        }
        if let Some(formats) = &self.output.formats {
            for f in formats {
                if !KNOWN_FORMATS.contains(&f.as_str()) {
                    out.push(format!(
                        "output.formats contains unknown `{f}` (known: {})",
                        KNOWN_FORMATS.join(", ")
                    ));
                }
            }
        }
        if self.output.workers == Some(0) {
            out.push("output.workers must be >= 1".into());
        }

        // Analysis.
        if !(self.analysis.regime_tolerance > 0.0) {
            out.push(format!(
                "analysis.regime_tolerance must be > 0, got {}",
                self.analysis.regime_tolerance
            ));
        }
        if let Some((a, b)) = self.analysis.qoppa_window {
            if !(a < b) {
                out.push(format!("analysis.qoppa_window start {a} must be < end {b}"));
            }
        }
        if let Some(w) = self.analysis.signaling_window {
            if !(w > 0.0) {
                out.push(format!("analysis.signaling_window must be > 0, got {w}"));
            }
        }
        if self.model == Model::Pulse
            && (self.analysis.regime || self.analysis.qoppa || self.analysis.trajectory_embed)
        {
            out.push(
                "analysis.regime / qoppa / trajectory_embed apply to the kuramoto model only"
                    .into(),
            );
        }

        out
    }

    /// Whether a given raw output file family is enabled.
    pub fn format_enabled(&self, name: &str) -> bool {
        match &self.output.formats {
            None => true,
            Some(list) => list.iter().any(|f| f == name),
        }
    }

    /// The resolved topology recipe for one seed (built-in kinds only;
    /// custom topologies load from file instead).
    pub fn topology_spec(&self, seed: u64) -> Result<TopologySpec> {
        let n = self
            .topology
            .n
            .ok_or_else(|| Error::Config("topology.n missing".into()))?;
        let coupling = self
            .topology
            .coupling
            .ok_or_else(|| Error::Config("topology.coupling missing".into()))?;
        let kind = match self.topology.kind.as_str() {
            "complete" => TopologyKind::Complete,
            "ring" => TopologyKind::Ring {
                k: self
                    .topology
                    .k
                    .ok_or_else(|| Error::Config("topology.k missing".into()))?,
            },
            "erdos-renyi" => TopologyKind::ErdosRenyi {
                p: self
                    .topology
                    .p
                    .ok_or_else(|| Error::Config("topology.p missing".into()))?,
            },
            other => {
                return Err(Error::Config(format!(
                    "topology.kind `{other}` cannot be built directly"
                )))
            }
        };
        Ok(TopologySpec {
            kind,
            n,
            coupling,
            omega: self.omega_spec()?,
            seed,
            mean_field: self.topology.mean_field,
        })
    }

    pub fn omega_spec(&self) -> Result<OmegaSpec> {
        match self.omega.kind.as_str() {
            "constant" => {
                Ok(OmegaSpec::Constant(self.omega.value.ok_or_else(|| {
                    Error::Config("omega.value missing".into())
                })?))
            }
            "uniform" => Ok(OmegaSpec::Uniform {
                lo: self
                    .omega
                    .lo
                    .ok_or_else(|| Error::Config("omega.lo missing".into()))?,
                hi: self
                    .omega
                    .hi
                    .ok_or_else(|| Error::Config("omega.hi missing".into()))?,
            }),
            "normal" => Ok(OmegaSpec::Normal {
                mean: self
                    .omega
                    .mean
                    .ok_or_else(|| Error::Config("omega.mean missing".into()))?,
                sd: self
                    .omega
                    .sd
                    .ok_or_else(|| Error::Config("omega.sd missing".into()))?,
            }),
            other => Err(Error::Config(format!("omega.kind `{other}` unknown"))),
        }
    }
}

/// Outcome of validating a config file without running it.
#[derive(Debug)]
pub struct ConfigValidation {
    /// Present when the file at least parsed.
    pub config: Option<ExperimentConfig>,
    pub violations: Vec<String>,
}

impl ConfigValidation {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Parse and validate a config file. Unreadable files are IO errors; parse
/// failures and invariant violations come back as the violation list.
pub fn validate_config_file(path: impl AsRef<Path>) -> Result<ConfigValidation> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    match toml::from_str::<ExperimentConfig>(&text) {
        Ok(config) => {
            let violations = config.violations();
            Ok(ConfigValidation {
                config: Some(config),
                violations,
            })
        }
        Err(e) => Ok(ConfigValidation {
            config: None,
            violations: vec![format!("config does not parse: {e}")],
        }),
    }
}

/// Load a config for running; any violation is an error.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let validation = validate_config_file(&path)?;
    if !validation.is_ok() {
        return Err(Error::Config(validation.violations.join("; ")));
    }
    validation
        .config
        .ok_or_else(|| Error::Config("config missing after validation".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_kuramoto() -> String {
        r#"
            model = "kuramoto"
            seeds = [0]

            [topology]
            kind = "complete"
            n = 10
            coupling = 2.0

            [dynamics]
            dt = 0.01
            t_max = 5.0

            [output]
            directory = "out"
        "#
        .to_string()
    }

    fn parse(text: &str) -> ExperimentConfig {
        toml::from_str(text).unwrap()
    }

    #[test]
    fn minimal_config_is_valid() {
        let config = parse(&minimal_kuramoto());
        assert!(config.violations().is_empty(), "{:?}", config.violations());
        assert_eq!(config.schema_version, 1);
    }

    #[test]
    fn zero_dt_is_a_named_violation() {
        let text = minimal_kuramoto().replace("dt = 0.01", "dt = 0.0");
        let v = parse(&text).violations();
        assert!(
            v.iter()
                .any(|m| m.contains("dynamics.dt") && m.contains("> 0")),
            "{v:?}"
        );
    }

    #[test]
    fn out_of_range_probability_is_a_named_violation() {
        let text =
            minimal_kuramoto().replace("kind = \"complete\"", "kind = \"erdos-renyi\"\np = 1.5");
        let v = parse(&text).violations();
        assert!(
            v.iter()
                .any(|m| m.contains("topology.p") && m.contains("[0, 1]")),
            "{v:?}"
        );
    }

    #[test]
    fn pulse_model_requires_pulse_section() {
        let text = minimal_kuramoto().replace("\"kuramoto\"", "\"pulse\"");
        let v = parse(&text).violations();
        assert!(v.iter().any(|m| m.contains("[pulse]")), "{v:?}");
    }

    #[test]
    fn empty_seeds_are_rejected() {
        let text = minimal_kuramoto().replace("seeds = [0]", "seeds = []");
        let v = parse(&text).violations();
        assert!(v.iter().any(|m| m.contains("seeds")), "{v:?}");
    }

    #[test]
    fn unknown_keys_fail_the_parse() {
        let text = minimal_kuramoto() + "\nbogus_key = 1\n";
        assert!(toml::from_str::<ExperimentConfig>(&text).is_err());
    }

    #[test]
    fn unparseable_file_reports_a_violation_not_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "model = ").unwrap();
        let validation = validate_config_file(&path).unwrap();
        assert!(!validation.is_ok());
        assert!(validation.config.is_none());
        assert!(validation.violations[0].contains("parse"));
    }

    #[test]
    fn perturbation_specs_deserialize_from_kebab_kinds() {
        let text = minimal_kuramoto()
            + r#"
            [[perturbations]]
            at_time = 1.0
            kind = "frequency-shift"
            node = 2
            delta_omega = 0.5

            [[perturbations]]
            at_time = 2.0
            kind = "edge-remove"
            i = 0
            j = 1
        "#;
        let config = parse(&text);
        assert!(config.violations().is_empty(), "{:?}", config.violations());
        assert_eq!(config.perturbations.len(), 2);
    }

    #[test]
    fn late_perturbations_are_flagged() {
        let text = minimal_kuramoto()
            + r#"
            [[perturbations]]
            at_time = 99.0
            kind = "node-silence"
            node = 0
        "#;
        let v = parse(&text).violations();
        assert!(
            v.iter().any(|m| m.contains("after dynamics.t_max")),
            "{v:?}"
        );
    }
}
