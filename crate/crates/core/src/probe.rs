//! Minimally disturbing observation tools.
//!
//! Three classical analogs of weak measurement over oscillator trajectories:
//!
//! - [`kernel_observable`]: a trailing-kernel smoothing
//!   `M(t) = integral from run start to t of K(t - s) O(s) ds`, the memory
//!   of past observations that fades with the kernel;
//! - [`conditioned_average`]: ensemble means conditioned on pre- and
//!   post-selection predicates, with the empty-selection singularity
//!   surfaced as an error;
//! - [`attach_probe`]: one extra listener oscillator weakly coupled into
//!   the network, either purely one-way (ideal) or with back-action.
//!
//! The kernel integral truncates the trailing window at the run start; for
//! exponential kernels the truncation error decays like
//! `exp(-gamma * (t - t0))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Network;

/// Shape of the smoothing kernel K(lag).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum KernelShape {
    /// `K(lag) = exp(-gamma * lag)`, gamma > 0.
    Exponential { gamma: f64 },
    /// `K(lag) = 1` for lag < width, else 0.
    Box { width: f64 },
    /// Piecewise-linear table over lags; zero outside the table range.
    Custom { lags: Vec<f64>, weights: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    None,
    /// Scale so the kernel integrates to one over its support.
    UnitArea,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub shape: KernelShape,
    pub normalization: Normalization,
}

impl KernelSpec {
    pub fn exponential(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::Parameter {
                name: "kernel.gamma",
                reason: format!("must be > 0, got {gamma}"),
            });
        }
        Ok(KernelSpec {
            shape: KernelShape::Exponential { gamma },
            normalization: Normalization::None,
        })
    }

    pub fn boxcar(width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::Parameter {
                name: "kernel.width",
                reason: format!("must be > 0, got {width}"),
            });
        }
        Ok(KernelSpec {
            shape: KernelShape::Box { width },
            normalization: Normalization::None,
        })
    }

    pub fn custom(lags: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if lags.len() != weights.len() || lags.len() < 2 {
            return Err(Error::Parameter {
                name: "kernel.table",
                reason: "lags and weights must have equal length >= 2".into(),
            });
        }
        if lags.windows(2).any(|w| !(w[1] > w[0])) || lags[0] < 0.0 {
            return Err(Error::Parameter {
                name: "kernel.lags",
                reason: "must be nonnegative and strictly increasing".into(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Parameter {
                name: "kernel.weights",
                reason: "must be nonnegative".into(),
            });
        }
        Ok(KernelSpec {
            shape: KernelShape::Custom { lags, weights },
            normalization: Normalization::None,
        })
    }

    pub fn unit_area(mut self) -> Self {
        self.normalization = Normalization::UnitArea;
        self
    }

    fn scale(&self) -> f64 {
        match self.normalization {
            Normalization::None => 1.0,
            Normalization::UnitArea => match &self.shape {
                KernelShape::Exponential { gamma } => *gamma,
                KernelShape::Box { width } => 1.0 / width,
                KernelShape::Custom { lags, weights } => {
                    let mut area = 0.0;
                    for k in 1..lags.len() {
                        area += 0.5 * (lags[k] - lags[k - 1]) * (weights[k] + weights[k - 1]);
                    }
                    if area > 0.0 {
                        1.0 / area
                    } else {
                        1.0
                    }
                }
            },
        }
    }

    /// Kernel value at a nonnegative lag.
    pub fn evaluate(&self, lag: f64) -> f64 {
        let raw = match &self.shape {
            KernelShape::Exponential { gamma } => (-gamma * lag).exp(),
            KernelShape::Box { width } => {
                if lag < *width {
                    1.0
                } else {
                    0.0
                }
            }
            KernelShape::Custom { lags, weights } => {
                if lag < lags[0] || lag > *lags.last().unwrap() {
                    0.0
                } else {
                    match lags.binary_search_by(|l| l.partial_cmp(&lag).unwrap()) {
                        Ok(k) => weights[k],
                        Err(k) => {
                            let f = (lag - lags[k - 1]) / (lags[k] - lags[k - 1]);
                            weights[k - 1] + f * (weights[k] - weights[k - 1])
                        }
                    }
                }
            }
        };
        raw * self.scale()
    }
}

/// Kernel-smoothed observable `M(t_k) = integral of K(t_k - s) O(s) ds`
/// over `[t_0, t_k]`, trapezoid rule on the sample grid.
pub fn kernel_observable(
    observable: &[f64],
    times: &[f64],
    kernel: &KernelSpec,
) -> Result<Vec<f64>> {
    if observable.len() != times.len() {
        return Err(Error::Dimension {
            context: "observable vs times",
            expected: times.len(),
            got: observable.len(),
        });
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter {
            name: "times",
            reason: "must be strictly increasing".into(),
        });
    }
    let m = times.len();
    let mut out = Vec::with_capacity(m);
    for k in 0..m {
        let t = times[k];
        let mut acc = 0.0;
        for i in 1..=k {
            let f0 = kernel.evaluate(t - times[i - 1]) * observable[i - 1];
            let f1 = kernel.evaluate(t - times[i]) * observable[i];
            acc += 0.5 * (times[i] - times[i - 1]) * (f0 + f1);
        }
        out.push(acc);
    }
    Ok(out)
}

/// Result of a pre/post-selected ensemble average.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionedAverage {
    /// Pointwise mean of the observable over the selected trajectories.
    pub mean_series: Vec<f64>,
    pub selected: usize,
    pub total: usize,
}

/// Average an observable over the trajectories that satisfy both the
/// pre-selection and post-selection predicates.
///
/// Zero selected trajectories is an error: the conditioning becomes
/// singular exactly where the selection empties out, and that is surfaced
/// rather than smoothed over. Reduction runs in input order, so the result
/// is deterministic.
pub fn conditioned_average<T>(
    trajectories: &[T],
    observables: &[Vec<f64>],
    pre_select: impl Fn(&T) -> bool,
    post_select: impl Fn(&T) -> bool,
) -> Result<ConditionedAverage> {
    if trajectories.is_empty() {
        return Err(Error::InsufficientData("ensemble is empty".into()));
    }
    if observables.len() != trajectories.len() {
        return Err(Error::Dimension {
            context: "observables vs trajectories",
            expected: trajectories.len(),
            got: observables.len(),
        });
    }
    let len = observables[0].len();
    for series in observables {
        if series.len() != len {
            return Err(Error::Dimension {
                context: "observable series lengths",
                expected: len,
                got: series.len(),
            });
        }
    }
    let mut mean = vec![0.0; len];
    let mut selected = 0usize;
    for (traj, series) in trajectories.iter().zip(observables) {
        if pre_select(traj) && post_select(traj) {
            selected += 1;
            for (m, x) in mean.iter_mut().zip(series) {
                *m += x;
            }
        }
    }
    if selected == 0 {
        return Err(Error::EmptySelection);
    }
    for m in &mut mean {
        *m /= selected as f64;
    }
    Ok(ConditionedAverage {
        mean_series: mean,
        selected,
        total: trajectories.len(),
    })
}

/// On-disk form of a conditioned-average result: the predicates echoed as
/// text, the selection counts, and a pointer to the mean-series CSV
/// written next to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionedReport {
    pub schema_version: u32,
    pub pre_select: String,
    pub post_select: String,
    pub selected: usize,
    pub total: usize,
    /// File name of the mean-series CSV, relative to the report.
    pub mean_series_csv: String,
}

/// Write a conditioned average as a JSON report plus a `t,mean` CSV
/// sidecar in the same directory.
pub fn write_conditioned_report(
    average: &ConditionedAverage,
    times: &[f64],
    pre_select: &str,
    post_select: &str,
    report_path: &std::path::Path,
) -> Result<ConditionedReport> {
    if times.len() != average.mean_series.len() {
        return Err(Error::Dimension {
            context: "times vs mean series",
            expected: average.mean_series.len(),
            got: times.len(),
        });
    }
    let csv_name = report_path
        .file_stem()
        .map(|s| format!("{}.csv", s.to_string_lossy()))
        .unwrap_or_else(|| "conditioned.csv".to_string());
    let csv_path = report_path.with_file_name(&csv_name);

    let mut csv = String::from("# schema_version=1\nt,mean\n");
    for (t, m) in times.iter().zip(&average.mean_series) {
        use std::fmt::Write as _;
        writeln!(csv, "{t},{m}").expect("string write");
    }
    std::fs::write(&csv_path, csv).map_err(|e| Error::io(csv_path.display().to_string(), e))?;

    let report = ConditionedReport {
        schema_version: 1,
        pre_select: pre_select.to_string(),
        post_select: post_select.to_string(),
        selected: average.selected,
        total: average.total,
        mean_series_csv: csv_name,
    };
    let text = serde_json::to_string_pretty(&report)?;
    std::fs::write(report_path, text)
        .map_err(|e| Error::io(report_path.display().to_string(), e))?;
    Ok(report)
}

/// Coupling direction of the attached probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProbeMode {
    /// One-way listening: the probe hears the network, the network never
    /// sees the probe. Network trajectories are bit-identical to an
    /// unprobed run.
    Ideal,
    /// The probe couples back with the same epsilon, disturbing the
    /// network by O(epsilon).
    BackAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttachTo {
    All,
    Nodes(Vec<usize>),
}

/// Weakly coupled listener oscillator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Probe coupling strength; small values disturb the network little
    /// even in back-action mode.
    pub epsilon: f64,
    /// Natural frequency of the probe oscillator.
    pub omega_probe: f64,
    pub attach_to: AttachTo,
    pub mode: ProbeMode,
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Parameter {
                name: "probe.epsilon",
                reason: format!("must be finite and >= 0, got {}", self.epsilon),
            });
        }
        if !self.omega_probe.is_finite() {
            return Err(Error::Parameter {
                name: "probe.omega_probe",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }
}

/// Extend a network with one probe oscillator at index n.
///
/// The probe receives coupling epsilon from every attached node; in ideal
/// mode its column stays zero (pure listener), in back-action mode it
/// couples back with epsilon. The probe keeps the regular phase dynamics,
/// so it integrates with the same machinery as the network it watches.
/// Positions are dropped (the probe has no physical location); labels gain
/// a `"probe"` entry.
pub fn attach_probe(net: &Network, config: &ProbeConfig) -> Result<Network> {
    config.validate()?;
    let n = net.n();
    let attached: Vec<usize> = match &config.attach_to {
        AttachTo::All => (0..n).collect(),
        AttachTo::Nodes(nodes) => {
            for &node in nodes {
                net.check_node("probe attachment", node)?;
            }
            nodes.clone()
        }
    };
    let mut omega = net.omega().to_vec();
    omega.push(config.omega_probe);

    let m = n + 1;
    let mut coupling = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            coupling[i * m + j] = net.coupling(i, j);
        }
    }
    for &j in &attached {
        coupling[n * m + j] = config.epsilon; // probe listens to j
        if config.mode == ProbeMode::BackAction {
            coupling[j * m + n] = config.epsilon; // j hears the probe
        }
    }

    let labels = net.labels().map(|labels| {
        let mut out = labels.to_vec();
        out.push("probe".to_string());
        out
    });
    Network::from_flat(omega, coupling, None, labels)
}

/// Time-averaged phase velocity of the probe: the estimate of the locked
/// network frequency it has entrained to.
///
/// Phases must be unwrapped; the trajectory must span more than five probe
/// periods (`2*pi / omega_probe`).
pub fn probe_estimate(probe_theta: &[f64], times: &[f64], omega_probe: f64) -> Result<f64> {
    if !(omega_probe > 0.0) {
        return Err(Error::Parameter {
            name: "omega_probe",
            reason: format!("estimate needs a positive probe frequency, got {omega_probe}"),
        });
    }
    if probe_theta.len() != times.len() {
        return Err(Error::Dimension {
            context: "probe trajectory vs times",
            expected: times.len(),
            got: probe_theta.len(),
        });
    }
    if times.len() < 2 {
        return Err(Error::InsufficientData(
            "probe estimate needs at least 2 samples".into(),
        ));
    }
    let span = times[times.len() - 1] - times[0];
    let period = std::f64::consts::TAU / omega_probe;
    if !(span > 5.0 * period) {
        return Err(Error::InsufficientData(format!(
            "probe trajectory spans {span:.3} but needs more than 5 probe periods ({:.3})",
            5.0 * period
        )));
    }
    Ok((probe_theta[probe_theta.len() - 1] - probe_theta[0]) / span)
}
