//! Weighted oscillator networks: construction, persistence, perturbation.
//!
//! A network is a directed weighted graph. `coupling[i][j]` is the strength
//! with which node j drives node i (row i holds the incoming couplings of i).
//! All built-in topologies emit symmetric matrices; nothing downstream
//! requires symmetry.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kuramoto::PhaseState;

/// A network of coupled oscillators.
///
/// Invariants, enforced at every construction site:
/// - `coupling[i][i] == 0`
/// - all couplings are finite and nonnegative
/// - `omega.len() == n`, `coupling` is n x n, `positions`/`labels` have n rows
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    omega: Vec<f64>,
    /// Row-major n x n matrix; row i = incoming couplings of node i.
    coupling: Vec<f64>,
    positions: Option<Vec<Vec<f64>>>,
    labels: Option<Vec<String>>,
}

impl Network {
    pub fn new(
        omega: Vec<f64>,
        coupling: Vec<Vec<f64>>,
        positions: Option<Vec<Vec<f64>>>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = omega.len();
        if coupling.len() != n {
            return Err(Error::Dimension {
                context: "coupling row count vs omega length",
                expected: n,
                got: coupling.len(),
            });
        }
        let mut flat = Vec::with_capacity(n * n);
        for row in &coupling {
            if row.len() != n {
                return Err(Error::Dimension {
                    context: "coupling row length",
                    expected: n,
                    got: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(omega, flat, positions, labels)
    }

    /// Construct from a row-major flat matrix.
    pub fn from_flat(
        omega: Vec<f64>,
        coupling: Vec<f64>,
        positions: Option<Vec<Vec<f64>>>,
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = omega.len();
        if coupling.len() != n * n {
            return Err(Error::Dimension {
                context: "flat coupling length",
                expected: n * n,
                got: coupling.len(),
            });
        }
        if let Some(w) = omega.iter().find(|w| !w.is_finite()) {
            return Err(Error::Parameter {
                name: "omega",
                reason: format!("non-finite entry {w}"),
            });
        }
        for i in 0..n {
            for j in 0..n {
                let x = coupling[i * n + j];
                if !x.is_finite() {
                    return Err(Error::Parameter {
                        name: "coupling",
                        reason: format!("non-finite entry at ({i}, {j})"),
                    });
                }
                if x < 0.0 {
                    return Err(Error::Parameter {
                        name: "coupling",
                        reason: format!("negative entry {x} at ({i}, {j})"),
                    });
                }
                if i == j && x != 0.0 {
                    return Err(Error::Parameter {
                        name: "coupling",
                        reason: format!("nonzero diagonal entry {x} at ({i}, {i})"),
                    });
                }
            }
        }
        if let Some(pos) = &positions {
            if pos.len() != n {
                return Err(Error::Dimension {
                    context: "positions row count",
                    expected: n,
                    got: pos.len(),
                });
            }
            let d = pos.first().map_or(0, Vec::len);
            for (i, row) in pos.iter().enumerate() {
                if row.len() != d {
                    return Err(Error::Dimension {
                        context: "positions row length",
                        expected: d,
                        got: row.len(),
                    });
                }
                if row.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Parameter {
                        name: "positions",
                        reason: format!("non-finite coordinate in row {i}"),
                    });
                }
            }
        }
        if let Some(lab) = &labels {
            if lab.len() != n {
                return Err(Error::Dimension {
                    context: "labels length",
                    expected: n,
                    got: lab.len(),
                });
            }
        }
        Ok(Network {
            omega,
            coupling,
            positions,
            labels,
        })
    }

    /// Number of oscillators.
    pub fn n(&self) -> usize {
        self.omega.len()
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Strength with which node `j` drives node `i`.
    #[inline]
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.coupling[i * self.n() + j]
    }

    /// Row i of the coupling matrix (incoming couplings of node i).
    #[inline]
    pub fn coupling_row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.coupling[i * n..(i + 1) * n]
    }

    pub fn coupling_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| self.coupling_row(i).to_vec())
            .collect()
    }

    pub fn positions(&self) -> Option<&[Vec<f64>]> {
        self.positions.as_deref()
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Out-neighbors of `source`: nodes that receive a signal from it.
    pub fn receivers_of(&self, source: usize) -> Vec<usize> {
        (0..self.n())
            .filter(|&j| j != source && self.coupling(j, source) > 0.0)
            .collect()
    }

    /// In-degree strength of node i (sum of row i).
    pub fn node_strength(&self, i: usize) -> f64 {
        self.coupling_row(i).iter().sum()
    }

    /// Mean node strength over the whole network.
    pub fn mean_node_strength(&self) -> f64 {
        if self.n() == 0 {
            return 0.0;
        }
        (0..self.n()).map(|i| self.node_strength(i)).sum::<f64>() / self.n() as f64
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.n();
        (0..n).all(|i| (0..i).all(|j| self.coupling(i, j) == self.coupling(j, i)))
    }

    pub(crate) fn check_node(&self, what: &'static str, index: usize) -> Result<()> {
        if index >= self.n() {
            Err(Error::Index {
                what,
                index,
                n: self.n(),
            })
        } else {
            Ok(())
        }
    }

    fn set_coupling(&mut self, i: usize, j: usize, x: f64) {
        let n = self.n();
        self.coupling[i * n + j] = x;
    }
}

/// Distance-attenuation parameters for the extinction law
/// `beta = beta0 * exp(-gamma * r^m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttenuationParams {
    /// Initial signal strength, > 0.
    pub beta0: f64,
    /// Decay constant, >= 0.
    pub gamma: f64,
    /// Power-law exponent on distance, > 0.
    pub m: f64,
}

impl AttenuationParams {
    pub fn new(beta0: f64, gamma: f64, m: f64) -> Result<Self> {
        if !(beta0 > 0.0) || !beta0.is_finite() {
            return Err(Error::Parameter {
                name: "beta0",
                reason: format!("must be > 0, got {beta0}"),
            });
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::Parameter {
                name: "gamma",
                reason: format!("must be >= 0, got {gamma}"),
            });
        }
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Parameter {
                name: "m",
                reason: format!("must be > 0, got {m}"),
            });
        }
        Ok(AttenuationParams { beta0, gamma, m })
    }

    /// Signal strength surviving after distance `r`.
    pub fn strength_at(&self, r: f64) -> f64 {
        self.beta0 * (-self.gamma * r.powf(self.m)).exp()
    }
}

/// A scheduled structural disturbance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    /// Simulation time at which the disturbance is applied, >= 0.
    pub at_time: f64,
    #[serde(flatten)]
    pub kind: PerturbationKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PerturbationKind {
    /// Shift the natural frequency of one node by `delta_omega`.
    FrequencyShift { node: usize, delta_omega: f64 },
    /// Multiply the coupling on edge (i, j) by `factor` (and (j, i) when the
    /// network is symmetric).
    EdgeRescale { i: usize, j: usize, factor: f64 },
    /// Remove edge (i, j) (both directions when the network is symmetric).
    EdgeRemove { i: usize, j: usize },
    /// Zero out all couplings into and out of one node.
    NodeSilence { node: usize },
}

impl PerturbationSpec {
    pub fn validate(&self, net: &Network) -> Result<()> {
        if !(self.at_time >= 0.0) {
            return Err(Error::Parameter {
                name: "at_time",
                reason: format!("must be >= 0, got {}", self.at_time),
            });
        }
        match self.kind {
            PerturbationKind::FrequencyShift { node, .. }
            | PerturbationKind::NodeSilence { node } => net.check_node("node", node),
            PerturbationKind::EdgeRescale { i, j, factor } => {
                net.check_node("edge endpoint", i)?;
                net.check_node("edge endpoint", j)?;
                if !(factor >= 0.0) || !factor.is_finite() {
                    return Err(Error::Parameter {
                        name: "factor",
                        reason: format!("must be finite and >= 0, got {factor}"),
                    });
                }
                Ok(())
            }
            PerturbationKind::EdgeRemove { i, j } => {
                net.check_node("edge endpoint", i)?;
                net.check_node("edge endpoint", j)
            }
        }
    }

    pub fn describe(&self) -> String {
        match self.kind {
            PerturbationKind::FrequencyShift { node, delta_omega } => {
                format!("frequency-shift node {node} by {delta_omega}")
            }
            PerturbationKind::EdgeRescale { i, j, factor } => {
                format!("edge-rescale ({i}, {j}) by {factor}")
            }
            PerturbationKind::EdgeRemove { i, j } => format!("edge-remove ({i}, {j})"),
            PerturbationKind::NodeSilence { node } => format!("node-silence {node}"),
        }
    }
}

/// Apply a perturbation, returning modified copies of both arguments.
///
/// The current perturbation kinds only alter the network; the state is
/// passed through so that future kinds may kick phases. Edge removal and
/// rescaling act on both directions only when the matrix was symmetric.
pub fn apply_perturbation(
    net: &Network,
    state: &PhaseState,
    spec: &PerturbationSpec,
) -> Result<(Network, PhaseState)> {
    Ok((perturb_network(net, spec)?, state.clone()))
}

/// The network side of [`apply_perturbation`], for callers whose state
/// lives in another representation (the pulse model's circle phases).
pub fn perturb_network(net: &Network, spec: &PerturbationSpec) -> Result<Network> {
    spec.validate(net)?;
    let mut out = net.clone();
    let symmetric = net.is_symmetric();
    match spec.kind {
        PerturbationKind::FrequencyShift { node, delta_omega } => {
            out.omega[node] += delta_omega;
        }
        PerturbationKind::EdgeRescale { i, j, factor } => {
            out.set_coupling(i, j, net.coupling(i, j) * factor);
            if symmetric && i != j {
                out.set_coupling(j, i, net.coupling(j, i) * factor);
            }
        }
        PerturbationKind::EdgeRemove { i, j } => {
            out.set_coupling(i, j, 0.0);
            if symmetric && i != j {
                out.set_coupling(j, i, 0.0);
            }
        }
        PerturbationKind::NodeSilence { node } => {
            for k in 0..net.n() {
                out.set_coupling(node, k, 0.0);
                out.set_coupling(k, node, 0.0);
            }
        }
    }
    Ok(out)
}

/// Built-in topology menu.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologyKind {
    /// All-to-all coupling.
    Complete,
    /// Each node coupled to its k nearest neighbors on each side of a ring.
    Ring { k: usize },
    /// Independent edge probability p.
    ErdosRenyi { p: f64 },
    /// Caller-supplied coupling matrix, used as given.
    Custom { coupling: Vec<Vec<f64>> },
}

/// Natural-frequency distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OmegaSpec {
    Constant(f64),
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, sd: f64 },
}

impl OmegaSpec {
    fn sample(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        match *self {
            OmegaSpec::Constant(c) => Ok(vec![c; n]),
            OmegaSpec::Uniform { lo, hi } => {
                if !(lo <= hi) {
                    return Err(Error::Parameter {
                        name: "omega.uniform",
                        reason: format!("lo {lo} must be <= hi {hi}"),
                    });
                }
                Ok((0..n).map(|_| rng.random_range(lo..=hi)).collect())
            }
            OmegaSpec::Normal { mean, sd } => {
                let dist = Normal::new(mean, sd).map_err(|e| Error::Parameter {
                    name: "omega.normal",
                    reason: e.to_string(),
                })?;
                Ok((0..n).map(|_| dist.sample(rng)).collect())
            }
        }
    }
}

/// Full recipe for a built topology.
#[derive(Debug, Clone)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub n: usize,
    /// Uniform coupling strength K placed on every built edge.
    pub coupling: f64,
    pub omega: OmegaSpec,
    pub seed: u64,
    /// Scale K by 1/n so the interaction stays bounded as n grows.
    /// `None` resolves to true for complete graphs, false otherwise.
    pub mean_field: Option<bool>,
}

impl TopologySpec {
    pub fn mean_field_resolved(&self) -> bool {
        self.mean_field
            .unwrap_or(matches!(self.kind, TopologyKind::Complete))
    }
}

/// Construct a network from a topology recipe. Deterministic: equal specs
/// (including the seed) give bitwise-equal networks.
pub fn build_topology(spec: &TopologySpec) -> Result<Network> {
    let n = spec.n;
    if n < 1 {
        return Err(Error::Parameter {
            name: "n",
            reason: "must be >= 1".into(),
        });
    }
    if !spec.coupling.is_finite() || spec.coupling < 0.0 {
        return Err(Error::Parameter {
            name: "coupling",
            reason: format!("must be finite and >= 0, got {}", spec.coupling),
        });
    }
    let k_eff = if spec.mean_field_resolved() {
        spec.coupling / n as f64
    } else {
        spec.coupling
    };

    // Stream 0 builds edges, stream 1 draws omegas, so the two never alias.
    let mut edge_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    edge_rng.set_stream(0);
    let mut omega_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    omega_rng.set_stream(1);

    let mut coupling = vec![0.0; n * n];
    match &spec.kind {
        TopologyKind::Complete => {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        coupling[i * n + j] = k_eff;
                    }
                }
            }
        }
        TopologyKind::Ring { k } => {
            if *k >= n {
                return Err(Error::Parameter {
                    name: "ring.k",
                    reason: format!("k = {k} must be < n = {n}"),
                });
            }
            for i in 0..n {
                for step in 1..=*k {
                    let fwd = (i + step) % n;
                    let bwd = (i + n - step % n) % n;
                    coupling[i * n + fwd] = k_eff;
                    coupling[i * n + bwd] = k_eff;
                }
            }
            for i in 0..n {
                coupling[i * n + i] = 0.0;
            }
        }
        TopologyKind::ErdosRenyi { p } => {
            if !(0.0..=1.0).contains(p) {
                return Err(Error::Parameter {
                    name: "erdos_renyi.p",
                    reason: format!("probability must lie in [0, 1], got {p}"),
                });
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    if edge_rng.random::<f64>() < *p {
                        coupling[i * n + j] = k_eff;
                        coupling[j * n + i] = k_eff;
                    }
                }
            }
        }
        TopologyKind::Custom { coupling: given } => {
            let omega = spec.omega.sample(n, &mut omega_rng)?;
            return Network::new(omega, given.clone(), None, None);
        }
    }

    let omega = spec.omega.sample(n, &mut omega_rng)?;
    Network::from_flat(omega, coupling, None, None)
}

/// Euclidean distance between two coordinate rows.
fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Coupling matrix from node positions under the extinction law.
///
/// `X_ij = beta0 * exp(-gamma * r_ij^m)` with Euclidean `r_ij`; entries
/// beyond `cutoff` are zeroed; the diagonal is zero; the result is
/// symmetric. Coincident nodes get the full `beta0`.
pub fn coupling_from_distance(
    positions: &[Vec<f64>],
    params: &AttenuationParams,
    cutoff: Option<f64>,
) -> Result<Vec<Vec<f64>>> {
    if let Some(c) = cutoff {
        if !(c > 0.0) {
            return Err(Error::Parameter {
                name: "cutoff",
                reason: format!("must be > 0 when given, got {c}"),
            });
        }
    }
    let n = positions.len();
    let d = positions.first().map_or(0, Vec::len);
    for (i, row) in positions.iter().enumerate() {
        if row.len() != d {
            return Err(Error::Dimension {
                context: "positions row length",
                expected: d,
                got: row.len(),
            });
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parameter {
                name: "positions",
                reason: format!("non-finite coordinate in row {i}"),
            });
        }
    }
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let r = euclidean(&positions[i], &positions[j]);
            let x = match cutoff {
                Some(c) if r > c => 0.0,
                _ => params.strength_at(r),
            };
            out[i][j] = x;
            out[j][i] = x;
        }
    }
    Ok(out)
}

/// Same extinction law, with hop-count (BFS) distance on the existing graph
/// in place of the Euclidean embedding. Unreachable pairs get coupling 0.
pub fn coupling_from_graph_distance(
    net: &Network,
    params: &AttenuationParams,
    cutoff: Option<f64>,
) -> Result<Vec<Vec<f64>>> {
    if let Some(c) = cutoff {
        if !(c > 0.0) {
            return Err(Error::Parameter {
                name: "cutoff",
                reason: format!("must be > 0 when given, got {c}"),
            });
        }
    }
    let n = net.n();
    let mut out = vec![vec![0.0; n]; n];
    for start in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                // Follow influence edges out of u: u drives v when X[v][u] > 0.
                if net.coupling(v, u) > 0.0 && dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for (j, &hops) in dist.iter().enumerate() {
            if j == start || hops == usize::MAX {
                continue;
            }
            let r = hops as f64;
            out[j][start] = match cutoff {
                Some(c) if r > c => 0.0,
                _ => params.strength_at(r),
            };
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct NetworkJson {
    n: usize,
    omega: Vec<f64>,
    coupling: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    positions: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

/// Read a network from disk.
///
/// `.json` files must match the documented JSON schema. Any other extension
/// is parsed as whitespace-delimited edge-list text (`i j X_ij` per line,
/// `#` comments allowed) with natural frequencies in a sidecar
/// `<path>.omega` file, one value per line.
pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "json") {
        load_network_json(path)
    } else {
        load_network_edges(path)
    }
}

fn load_network_json(path: &Path) -> Result<Network> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let parsed: NetworkJson = serde_json::from_str(&text).map_err(|e| {
        Error::NetworkFile(format!("{} (line {}, column {})", e, e.line(), e.column()))
    })?;
    if parsed.omega.len() != parsed.n {
        return Err(Error::NetworkFile(format!(
            "field \"omega\" has {} entries but \"n\" is {}",
            parsed.omega.len(),
            parsed.n
        )));
    }
    if parsed.coupling.len() != parsed.n {
        return Err(Error::NetworkFile(format!(
            "field \"coupling\" has {} rows but \"n\" is {}",
            parsed.coupling.len(),
            parsed.n
        )));
    }
    Network::new(
        parsed.omega,
        parsed.coupling,
        parsed.positions,
        parsed.labels,
    )
    .map_err(|e| Error::NetworkFile(e.to_string()))
}

fn load_network_edges(path: &Path) -> Result<Network> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut edges = Vec::new();
    let mut max_index = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::NetworkFile(format!(
                "{}:{}: expected `i j X_ij`, got {} fields",
                path.display(),
                lineno + 1,
                fields.len()
            )));
        }
        let parse = |s: &str, what: &str| -> Result<usize> {
            s.parse().map_err(|_| {
                Error::NetworkFile(format!(
                    "{}:{}: invalid {what} `{s}`",
                    path.display(),
                    lineno + 1
                ))
            })
        };
        let i = parse(fields[0], "node index")?;
        let j = parse(fields[1], "node index")?;
        let x: f64 = fields[2].parse().map_err(|_| {
            Error::NetworkFile(format!(
                "{}:{}: invalid coupling `{}`",
                path.display(),
                lineno + 1,
                fields[2]
            ))
        })?;
        max_index = max_index.max(i).max(j);
        edges.push((i, j, x));
    }

    let omega_path = {
        let mut p = path.as_os_str().to_owned();
        p.push(".omega");
        std::path::PathBuf::from(p)
    };
    let omega_text = std::fs::read_to_string(&omega_path).map_err(|e| {
        Error::NetworkFile(format!(
            "missing sidecar omega file {}: {e}",
            omega_path.display()
        ))
    })?;
    let omega: Vec<f64> = omega_text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse().map_err(|_| {
                Error::NetworkFile(format!(
                    "{}: invalid omega value `{l}`",
                    omega_path.display()
                ))
            })
        })
        .collect::<Result<_>>()?;

    let n = omega.len();
    if !edges.is_empty() && max_index >= n {
        return Err(Error::NetworkFile(format!(
            "edge references node {max_index} but sidecar omega defines only {n} nodes"
        )));
    }
    let mut coupling = vec![0.0; n * n];
    for (i, j, x) in edges {
        coupling[i * n + j] = x;
    }
    Network::from_flat(omega, coupling, None, None).map_err(|e| Error::NetworkFile(e.to_string()))
}

/// Write a network to disk.
///
/// `.json` destinations get the JSON schema; anything else gets edge-list
/// text plus the `<path>.omega` sidecar (positions and labels are not
/// representable there and are dropped).
pub fn save_network(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if path.extension().is_some_and(|e| e == "json") {
        let json = NetworkJson {
            n: net.n(),
            omega: net.omega.clone(),
            coupling: net.coupling_matrix(),
            positions: net.positions.clone(),
            labels: net.labels.clone(),
        };
        let text = serde_json::to_string_pretty(&json)?;
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    } else {
        let n = net.n();
        let mut text = String::new();
        for i in 0..n {
            for j in 0..n {
                let x = net.coupling(i, j);
                if x != 0.0 {
                    writeln!(text, "{i} {j} {x}").expect("string write");
                }
            }
        }
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut omega_path = path.as_os_str().to_owned();
        omega_path.push(".omega");
        let omega_text: String = net.omega.iter().map(|w| format!("{w}\n")).collect();
        std::fs::write(&omega_path, omega_text)
            .map_err(|e| Error::io(format!("{}", Path::new(&omega_path).display()), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn complete(n: usize, k: f64) -> Network {
        build_topology(&TopologySpec {
            kind: TopologyKind::Complete,
            n,
            coupling: k,
            omega: OmegaSpec::Constant(0.0),
            seed: 0,
            mean_field: Some(false),
        })
        .unwrap()
    }

    #[test]
    fn complete_graph_has_uniform_offdiagonal() {
        let net = complete(3, 1.0);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.0 } else { 1.0 };
                assert_eq!(net.coupling(i, j), expect);
            }
        }
    }

    #[test]
    fn ring_one_couples_two_neighbors() {
        let net = build_topology(&TopologySpec {
            kind: TopologyKind::Ring { k: 1 },
            n: 4,
            coupling: 2.0,
            omega: OmegaSpec::Constant(1.0),
            seed: 0,
            mean_field: None,
        })
        .unwrap();
        for i in 0..4 {
            let row = net.coupling_row(i);
            let neighbors = row.iter().filter(|&&x| x > 0.0).count();
            assert_eq!(neighbors, 2, "node {i}");
            assert!(row.iter().all(|&x| x == 0.0 || x == 2.0));
            assert_eq!(net.omega()[i], 1.0);
        }
    }

    #[test]
    fn erdos_renyi_is_deterministic_per_seed() {
        let spec = TopologySpec {
            kind: TopologyKind::ErdosRenyi { p: 0.5 },
            n: 20,
            coupling: 1.0,
            omega: OmegaSpec::Normal { mean: 0.0, sd: 1.0 },
            seed: 7,
            mean_field: None,
        };
        let a = build_topology(&spec).unwrap();
        let b = build_topology(&spec).unwrap();
        assert_eq!(a, b);

        let c = build_topology(&TopologySpec { seed: 8, ..spec }).unwrap();
        // Different seeds should differ with overwhelming probability; flag
        // rather than hard-fail per the graph module contract.
        if a == c {
            eprintln!("warning: seeds 7 and 8 built identical erdos-renyi networks");
        }
    }

    #[test]
    fn mean_field_scaling_divides_by_n() {
        let net = build_topology(&TopologySpec {
            kind: TopologyKind::Complete,
            n: 10,
            coupling: 4.0,
            omega: OmegaSpec::Constant(0.0),
            seed: 0,
            mean_field: None, // defaults on for complete graphs
        })
        .unwrap();
        assert!((net.coupling(0, 1) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn invalid_probability_is_rejected() {
        let err = build_topology(&TopologySpec {
            kind: TopologyKind::ErdosRenyi { p: 1.5 },
            n: 5,
            coupling: 1.0,
            omega: OmegaSpec::Constant(0.0),
            seed: 0,
            mean_field: None,
        })
        .unwrap_err();
        assert!(matches!(
            err,
            Error::Parameter {
                name: "erdos_renyi.p",
                ..
            }
        ));
    }

    #[test]
    fn ring_degree_bound_is_rejected() {
        let err = build_topology(&TopologySpec {
            kind: TopologyKind::Ring { k: 4 },
            n: 4,
            coupling: 1.0,
            omega: OmegaSpec::Constant(0.0),
            seed: 0,
            mean_field: None,
        })
        .unwrap_err();
        assert!(matches!(err, Error::Parameter { name: "ring.k", .. }));
    }

    #[test]
    fn attenuation_at_zero_distance_is_beta0() {
        let params = AttenuationParams::new(1.0, 2.0, 1.0).unwrap();
        let x = coupling_from_distance(&[vec![0.0, 0.0], vec![0.0, 0.0]], &params, None).unwrap();
        assert_eq!(x[0][1], 1.0);
        assert_eq!(x[1][0], 1.0);
        assert_eq!(x[0][0], 0.0);
    }

    #[test]
    fn attenuation_matches_closed_form() {
        let params = AttenuationParams::new(1.0, 2.0, 1.0).unwrap();
        let x = coupling_from_distance(&[vec![0.0], vec![1.0]], &params, None).unwrap();
        let expect = (-2.0f64).exp(); // ~0.1353
        assert!((x[0][1] - expect).abs() < 1e-15);
    }

    #[test]
    fn zero_gamma_ignores_distance() {
        let params = AttenuationParams::new(3.5, 0.0, 2.0).unwrap();
        let pos = vec![vec![0.0], vec![10.0], vec![-4.0]];
        let x = coupling_from_distance(&pos, &params, None).unwrap();
        for (i, row) in x.iter().enumerate() {
            for (j, &value) in row.iter().enumerate() {
                if i != j {
                    assert_eq!(value, 3.5);
                }
            }
        }
    }

    #[test]
    fn cutoff_zeroes_distant_pairs() {
        let params = AttenuationParams::new(1.0, 0.1, 1.0).unwrap();
        let pos = vec![vec![0.0], vec![1.0], vec![5.0]];
        let x = coupling_from_distance(&pos, &params, Some(2.0)).unwrap();
        assert!(x[0][1] > 0.0);
        assert_eq!(x[0][2], 0.0);
        assert_eq!(x[1][2], 0.0);
    }

    #[test]
    fn graph_distance_attenuation_uses_hops() {
        // Path graph 0 - 1 - 2.
        let net = Network::new(
            vec![0.0; 3],
            vec![
                vec![0.0, 1.0, 0.0],
                vec![1.0, 0.0, 1.0],
                vec![0.0, 1.0, 0.0],
            ],
            None,
            None,
        )
        .unwrap();
        let params = AttenuationParams::new(1.0, 1.0, 1.0).unwrap();
        let x = coupling_from_graph_distance(&net, &params, None).unwrap();
        assert!((x[0][1] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((x[0][2] - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn edge_rescale_touches_one_directed_pair() {
        let net = complete(3, 1.0);
        let state = PhaseState::new(vec![0.0; 3], 0.0);
        let spec = PerturbationSpec {
            at_time: 0.0,
            kind: PerturbationKind::EdgeRescale {
                i: 0,
                j: 1,
                factor: 0.0,
            },
        };
        let (out, _) = apply_perturbation(&net, &state, &spec).unwrap();
        assert_eq!(out.coupling(0, 1), 0.0);
        // Symmetric input, so the mirror edge is rescaled too.
        assert_eq!(out.coupling(1, 0), 0.0);
        for i in 0..3 {
            for j in 0..3 {
                if (i, j) != (0, 1) && (i, j) != (1, 0) {
                    assert_eq!(out.coupling(i, j), net.coupling(i, j));
                }
            }
        }
    }

    #[test]
    fn edge_remove_on_asymmetric_network_is_one_way() {
        let net = Network::new(
            vec![0.0; 2],
            vec![vec![0.0, 1.0], vec![2.0, 0.0]],
            None,
            None,
        )
        .unwrap();
        let state = PhaseState::new(vec![0.0; 2], 0.0);
        let spec = PerturbationSpec {
            at_time: 0.0,
            kind: PerturbationKind::EdgeRemove { i: 0, j: 1 },
        };
        let (out, _) = apply_perturbation(&net, &state, &spec).unwrap();
        assert_eq!(out.coupling(0, 1), 0.0);
        assert_eq!(out.coupling(1, 0), 2.0);
    }

    #[test]
    fn frequency_shift_adds_exactly() {
        let net = complete(4, 1.0);
        let state = PhaseState::new(vec![0.0; 4], 0.0);
        let spec = PerturbationSpec {
            at_time: 1.0,
            kind: PerturbationKind::FrequencyShift {
                node: 2,
                delta_omega: 0.5,
            },
        };
        let (out, _) = apply_perturbation(&net, &state, &spec).unwrap();
        assert_eq!(out.omega()[2], 0.5);
        for i in [0, 1, 3] {
            assert_eq!(out.omega()[i], 0.0);
        }
    }

    #[test]
    fn node_silence_clears_row_and_column() {
        let net = build_topology(&TopologySpec {
            kind: TopologyKind::Ring { k: 1 },
            n: 4,
            coupling: 1.0,
            omega: OmegaSpec::Constant(0.0),
            seed: 0,
            mean_field: None,
        })
        .unwrap();
        let state = PhaseState::new(vec![0.0; 4], 0.0);
        let spec = PerturbationSpec {
            at_time: 0.0,
            kind: PerturbationKind::NodeSilence { node: 1 },
        };
        let (out, _) = apply_perturbation(&net, &state, &spec).unwrap();
        for k in 0..4 {
            assert_eq!(out.coupling(1, k), 0.0);
            assert_eq!(out.coupling(k, 1), 0.0);
        }
    }

    #[test]
    fn perturbation_out_of_range_is_an_index_error() {
        let net = complete(3, 1.0);
        let state = PhaseState::new(vec![0.0; 3], 0.0);
        let spec = PerturbationSpec {
            at_time: 0.0,
            kind: PerturbationKind::NodeSilence { node: 9 },
        };
        assert!(matches!(
            apply_perturbation(&net, &state, &spec),
            Err(Error::Index { .. })
        ));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        let net = build_topology(&TopologySpec {
            kind: TopologyKind::ErdosRenyi { p: 0.4 },
            n: 9,
            coupling: 0.37,
            omega: OmegaSpec::Normal { mean: 0.0, sd: 1.0 },
            seed: 3,
            mean_field: None,
        })
        .unwrap();
        save_network(&net, &path).unwrap();
        let back = load_network(&path).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn edge_list_round_trip_preserves_structure() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.edges");
        let net = complete(3, 0.25);
        save_network(&net, &path).unwrap();
        let back = load_network(&path).unwrap();
        assert_eq!(net, back);
    }

    #[test]
    fn negative_coupling_in_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{"n": 2, "omega": [0.0, 0.0], "coupling": [[0.0, -1.0], [1.0, 0.0]]}"#,
        )
        .unwrap();
        let err = load_network(&path).unwrap_err();
        assert!(err.to_string().contains("negative"), "{err}");
    }

    #[test]
    fn missing_omega_field_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"n": 1, "coupling": [[0.0]]}"#).unwrap();
        let err = load_network(&path).unwrap_err();
        assert!(err.to_string().contains("omega"), "{err}");
    }

    #[test]
    fn nan_in_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"n": 1, "omega": [NaN], "coupling": [[0.0]]}"#).unwrap();
        assert!(load_network(&path).is_err());
    }

    prop_compose! {
        fn arb_network()(n in 1usize..8)(
            n in Just(n),
            omega in proptest::collection::vec(-5.0f64..5.0, n),
            weights in proptest::collection::vec(0.0f64..3.0, n * n),
            with_positions in any::<bool>(),
            coords in proptest::collection::vec(-10.0f64..10.0, n * 2),
        ) -> Network {
            let mut coupling = weights;
            for i in 0..n {
                coupling[i * n + i] = 0.0;
            }
            let positions = with_positions.then(|| {
                coords.chunks(2).map(<[f64]>::to_vec).collect::<Vec<_>>()
            });
            Network::from_flat(omega, coupling, positions, None).unwrap()
        }
    }

    proptest! {
        #[test]
        fn prop_json_round_trip(net in arb_network()) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("net.json");
            save_network(&net, &path).unwrap();
            let back = load_network(&path).unwrap();
            prop_assert_eq!(net, back);
        }

        #[test]
        fn prop_attenuation_is_monotone_in_distance(
            coords in proptest::collection::vec(-5.0f64..5.0, 8),
            gamma in 0.0f64..3.0,
            m in 0.2f64..3.0,
        ) {
            let positions: Vec<Vec<f64>> =
                coords.chunks(2).map(<[f64]>::to_vec).collect();
            let params = AttenuationParams::new(2.0, gamma, m).unwrap();
            let x = coupling_from_distance(&positions, &params, None).unwrap();
            let n = positions.len();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            if i == j || k == l { continue; }
                            let rij = euclidean(&positions[i], &positions[j]);
                            let rkl = euclidean(&positions[k], &positions[l]);
                            if rij <= rkl {
                                prop_assert!(x[i][j] >= x[k][l]);
                            }
                        }
                    }
                }
            }
        }

        #[test]
        fn prop_perturbation_touches_only_named_entries(
            net in arb_network(),
            factor in 0.0f64..2.0,
        ) {
            let n = net.n();
            let state = PhaseState::new(vec![0.0; n], 0.0);
            let spec = PerturbationSpec {
                at_time: 0.0,
                kind: PerturbationKind::EdgeRescale { i: 0, j: n - 1, factor },
            };
            let (out, _) = apply_perturbation(&net, &state, &spec).unwrap();
            let symmetric = net.is_symmetric();
            for i in 0..n {
                for j in 0..n {
                    let named = (i, j) == (0, n - 1)
                        || (symmetric && (i, j) == (n - 1, 0));
                    if !named {
                        prop_assert_eq!(out.coupling(i, j), net.coupling(i, j));
                    }
                }
            }
            prop_assert_eq!(out.omega(), net.omega());
        }
    }
}
