//! Continuous-phase dynamics of coupled oscillators:
//!
//! ```text
//! dtheta_i/dt = omega_i + sum_j X_ij * sin(theta_j - theta_i)
//! ```
//!
//! plus the synchronization order parameter and graph-level coupling
//! diagnostics (neighbor-weighted effective coupling, simple-path sums,
//! amplitude ratios).

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Network;

/// Instantaneous phases of every oscillator.
///
/// Phases are stored unwrapped (cumulative) so that velocities and drifts
/// survive long runs; [`PhaseState::wrapped`] gives the view into [0, 2pi).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub theta: Vec<f64>,
    pub t: f64,
}

impl PhaseState {
    pub fn new(theta: Vec<f64>, t: f64) -> Self {
        PhaseState { theta, t }
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    /// Phases mapped into [0, 2pi).
    pub fn wrapped(&self) -> Vec<f64> {
        self.theta.iter().map(|th| th.rem_euclid(TAU)).collect()
    }
}

/// Magnitude and angle of the mean phasor (1/N) sum_j exp(i theta_j).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderParameter {
    /// Coherence in [0, 1]; 1 is full phase alignment.
    pub r: f64,
    /// Mean phase in [0, 2pi).
    pub psi: f64,
}

/// Integration schemes for [`integrate_step`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Euler,
    #[default]
    Rk4,
}

fn derivative_into(theta: &[f64], net: &Network, out: &mut [f64]) {
    let n = theta.len();
    for i in 0..n {
        let row = net.coupling_row(i);
        let mut acc = net.omega()[i];
        for (j, &x) in row.iter().enumerate() {
            // Skipping zero couplings keeps absent edges bit-invisible.
            if x > 0.0 {
                acc += x * (theta[j] - theta[i]).sin();
            }
        }
        out[i] = acc;
    }
}

/// Phase velocities at the given state.
pub fn kuramoto_derivative(state: &PhaseState, net: &Network) -> Result<Vec<f64>> {
    if state.n() != net.n() {
        return Err(Error::Dimension {
            context: "state length vs network size",
            expected: net.n(),
            got: state.n(),
        });
    }
    let mut out = vec![0.0; state.n()];
    derivative_into(&state.theta, net, &mut out);
    Ok(out)
}

/// Advance the state by one step of `dt`. Deterministic; errors with a
/// numeric-blowup diagnosis if any phase leaves the finite range.
pub fn integrate_step(
    state: &PhaseState,
    net: &Network,
    dt: f64,
    method: Integrator,
) -> Result<PhaseState> {
    if !(dt > 0.0) {
        return Err(Error::Parameter {
            name: "dt",
            reason: format!("must be > 0, got {dt}"),
        });
    }
    if state.n() != net.n() {
        return Err(Error::Dimension {
            context: "state length vs network size",
            expected: net.n(),
            got: state.n(),
        });
    }
    let n = state.n();
    let mut next = vec![0.0; n];
    match method {
        Integrator::Euler => {
            let mut k1 = vec![0.0; n];
            derivative_into(&state.theta, net, &mut k1);
            for i in 0..n {
                next[i] = state.theta[i] + dt * k1[i];
            }
        }
        Integrator::Rk4 => {
            let mut k1 = vec![0.0; n];
            let mut k2 = vec![0.0; n];
            let mut k3 = vec![0.0; n];
            let mut k4 = vec![0.0; n];
            let mut stage = vec![0.0; n];

            derivative_into(&state.theta, net, &mut k1);
            for i in 0..n {
                stage[i] = state.theta[i] + 0.5 * dt * k1[i];
            }
            derivative_into(&stage, net, &mut k2);
            for i in 0..n {
                stage[i] = state.theta[i] + 0.5 * dt * k2[i];
            }
            derivative_into(&stage, net, &mut k3);
            for i in 0..n {
                stage[i] = state.theta[i] + dt * k3[i];
            }
            derivative_into(&stage, net, &mut k4);
            for i in 0..n {
                next[i] = state.theta[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }
    if next.iter().any(|th| !th.is_finite()) {
        return Err(Error::NumericBlowup { t: state.t });
    }
    Ok(PhaseState::new(next, state.t + dt))
}

/// Coherence (r, psi) of the current phase configuration.
pub fn order_parameter(state: &PhaseState) -> OrderParameter {
    let n = state.n().max(1) as f64;
    let (mut sum_cos, mut sum_sin) = (0.0, 0.0);
    for &th in &state.theta {
        sum_cos += th.cos();
        sum_sin += th.sin();
    }
    let re = sum_cos / n;
    let im = sum_sin / n;
    OrderParameter {
        r: (re * re + im * im).sqrt(),
        psi: im.atan2(re).rem_euclid(TAU),
    }
}

/// Per-node coherence over each node's in-neighborhood (node included):
/// raw data for neighborhood-resolved synchronization views. Isolated
/// nodes report 1 (a single phasor is trivially coherent).
pub fn local_order_parameters(net: &Network, state: &PhaseState) -> Result<Vec<f64>> {
    if state.n() != net.n() {
        return Err(Error::Dimension {
            context: "state length vs network size",
            expected: net.n(),
            got: state.n(),
        });
    }
    let n = net.n();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let row = net.coupling_row(i);
        let (mut sum_cos, mut sum_sin) = (state.theta[i].cos(), state.theta[i].sin());
        let mut count = 1usize;
        for (j, &x) in row.iter().enumerate() {
            if x > 0.0 {
                sum_cos += state.theta[j].cos();
                sum_sin += state.theta[j].sin();
                count += 1;
            }
        }
        let m = count as f64;
        out.push(((sum_cos / m).powi(2) + (sum_sin / m).powi(2)).sqrt());
    }
    Ok(out)
}

/// Neighbor-weighted effective coupling at node `i`:
/// `sum over k in N(i) of X_ik * contributions[k]`, where N(i) is the set of
/// in-neighbors with positive coupling.
pub fn effective_coupling(net: &Network, i: usize, contributions: &[f64]) -> Result<f64> {
    net.check_node("node", i)?;
    if contributions.len() != net.n() {
        return Err(Error::Dimension {
            context: "contributions length",
            expected: net.n(),
            got: contributions.len(),
        });
    }
    let row = net.coupling_row(i);
    Ok(row
        .iter()
        .zip(contributions)
        .filter(|(&x, _)| x > 0.0)
        .map(|(&x, &c)| x * c)
        .sum())
}

/// [`effective_coupling`] with the default contribution profile
/// `C_k = sin(theta_k - theta_j)`, mirroring the interaction kernel of the
/// phase dynamics with node `j` as the reference.
pub fn effective_coupling_default(
    net: &Network,
    state: &PhaseState,
    i: usize,
    j: usize,
) -> Result<f64> {
    net.check_node("node", j)?;
    if state.n() != net.n() {
        return Err(Error::Dimension {
            context: "state length vs network size",
            expected: net.n(),
            got: state.n(),
        });
    }
    let contributions: Vec<f64> = state
        .theta
        .iter()
        .map(|&th| (th - state.theta[j]).sin())
        .collect();
    effective_coupling(net, i, &contributions)
}

/// Result of a simple-path coupling sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSum {
    pub value: f64,
    /// Set when `a == b`; the empty path is excluded and the value is 0.
    pub degenerate: bool,
}

/// Sum over simple paths from `a` to `b` of at most `max_len` hops of the
/// product of edge couplings along the path, each path weighted by
/// `amplitude(path)` where `path` is the full node sequence (a ... b).
///
/// Paths follow influence direction: the hop u -> v carries weight
/// `coupling(v, u)`, i.e. the strength with which u drives v.
pub fn path_sum_coupling_with(
    net: &Network,
    a: usize,
    b: usize,
    max_len: usize,
    amplitude: &dyn Fn(&[usize]) -> f64,
) -> Result<PathSum> {
    net.check_node("path endpoint", a)?;
    net.check_node("path endpoint", b)?;
    if max_len < 1 {
        return Err(Error::Parameter {
            name: "max_len",
            reason: "must be >= 1".into(),
        });
    }
    if a == b {
        return Ok(PathSum {
            value: 0.0,
            degenerate: true,
        });
    }

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        net: &Network,
        current: usize,
        target: usize,
        remaining: usize,
        product: f64,
        path: &mut Vec<usize>,
        visited: &mut Vec<bool>,
        amplitude: &dyn Fn(&[usize]) -> f64,
        total: &mut f64,
    ) {
        if remaining == 0 {
            return;
        }
        for next in 0..net.n() {
            let x = net.coupling(next, current);
            if x <= 0.0 || visited[next] {
                continue;
            }
            path.push(next);
            if next == target {
                *total += product * x * amplitude(path);
            } else {
                visited[next] = true;
                dfs(
                    net,
                    next,
                    target,
                    remaining - 1,
                    product * x,
                    path,
                    visited,
                    amplitude,
                    total,
                );
                visited[next] = false;
            }
            path.pop();
        }
    }

    let mut visited = vec![false; net.n()];
    visited[a] = true;
    let mut path = vec![a];
    let mut total = 0.0;
    dfs(
        net,
        a,
        b,
        max_len,
        1.0,
        &mut path,
        &mut visited,
        amplitude,
        &mut total,
    );
    Ok(PathSum {
        value: total,
        degenerate: false,
    })
}

/// [`path_sum_coupling_with`] with unit amplitude on every path.
pub fn path_sum_coupling(net: &Network, a: usize, b: usize, max_len: usize) -> Result<PathSum> {
    path_sum_coupling_with(net, a, b, max_len, &|_| 1.0)
}

/// RMS deviation of sin(theta_a) from its window mean: the oscillation
/// amplitude of node `a` over a trajectory window.
pub fn node_oscillation_rms(window: &[PhaseState], a: usize) -> Result<f64> {
    if window.is_empty() {
        return Err(Error::InsufficientData("amplitude window is empty".into()));
    }
    if a >= window[0].n() {
        return Err(Error::Index {
            what: "node",
            index: a,
            n: window[0].n(),
        });
    }
    let samples: Vec<f64> = window.iter().map(|s| s.theta[a].sin()).collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / samples.len() as f64;
    Ok(var.sqrt())
}

/// Amplitude-ratio diagnostic: oscillation amplitude of node `a` over the
/// window divided by the mean node strength of the network. The `b`
/// argument names the far endpoint of the pair under observation; the
/// amplitude side of the ratio is measured at `a`.
pub fn amplitude_ratio(net: &Network, window: &[PhaseState], a: usize, b: usize) -> Result<f64> {
    net.check_node("node", a)?;
    net.check_node("node", b)?;
    let strength = net.mean_node_strength();
    if strength == 0.0 {
        return Err(Error::DivisionUndefined(
            "mean node strength is zero; the amplitude ratio needs a coupled network",
        ));
    }
    Ok(node_oscillation_rms(window, a)? / strength)
}
