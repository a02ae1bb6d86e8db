//! Action-based diagnostics over simulated trajectories.
//!
//! The Lagrangian of a phase configuration is
//!
//! ```text
//! L = sum_i (1/2) * thetadot_i^2 + sum_{i<j} Xbar_ij * cos(theta_j - theta_i)
//! ```
//!
//! with unit masses and the symmetrized coupling Xbar; the accumulated
//! action is `S(t) = integral of L` (trapezoid rule) and its time
//! derivative recovers L to second order. On top of this sit the damping-
//! regime classifier for dS/dt, per-node frequency shifts, the
//! frequency-shift/action-rate regression (the qoppa fit), the singular
//! wavelength-shift proxy, and the 2-D principal projection of the
//! configuration-space trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::pulse::PulseEvent;

/// Everything recorded along one continuous-model run.
///
/// All series share the same length; `thetas`, `theta_dots` and
/// `freq_shift_series` are step-major (one row per sample, one column per
/// node), with phases unwrapped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
    pub theta_dots: Vec<Vec<f64>>,
    pub r_series: Vec<f64>,
    pub psi_series: Vec<f64>,
    pub lagrangian_series: Vec<f64>,
    pub action_series: Vec<f64>,
    pub action_derivative_series: Vec<f64>,
    pub freq_shift_series: Vec<Vec<f64>>,
}

impl TrajectoryRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Number of oscillators recorded.
    pub fn n(&self) -> usize {
        self.thetas.first().map_or(0, Vec::len)
    }
}

fn check_aligned(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            got,
        })
    }
}

fn check_times_increasing(times: &[f64]) -> Result<()> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Parameter {
            name: "times",
            reason: "must be strictly increasing".into(),
        });
    }
    Ok(())
}

/// Instantaneous Lagrangian of a phase configuration: unit-mass kinetic
/// term minus the coupling potential `V = -sum_{i<j} Xbar_ij cos(theta_j -
/// theta_i)`. Depends on phase differences only, so a global phase shift
/// leaves it unchanged.
pub fn lagrangian(theta: &[f64], theta_dot: &[f64], net: &Network) -> Result<f64> {
    let n = net.n();
    check_aligned("theta length vs network size", n, theta.len())?;
    check_aligned("theta_dot length vs network size", n, theta_dot.len())?;
    let kinetic: f64 = theta_dot.iter().map(|v| 0.5 * v * v).sum();
    let mut minus_potential = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let xbar = 0.5 * (net.coupling(i, j) + net.coupling(j, i));
            if xbar > 0.0 {
                minus_potential += xbar * (theta[j] - theta[i]).cos();
            }
        }
    }
    Ok(kinetic + minus_potential)
}

/// Cumulative trapezoid integral of the Lagrangian series; `S[0] = 0`.
pub fn accumulate_action(lagrangian_series: &[f64], times: &[f64]) -> Result<Vec<f64>> {
    check_aligned(
        "lagrangian series vs times",
        times.len(),
        lagrangian_series.len(),
    )?;
    check_times_increasing(times)?;
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    for k in 0..times.len() {
        if k > 0 {
            acc +=
                0.5 * (times[k] - times[k - 1]) * (lagrangian_series[k] + lagrangian_series[k - 1]);
        }
        out.push(acc);
    }
    Ok(out)
}

/// Signaling action `S_f(t)`: cumulative trapezoid integral of the
/// signaling term series (a probability, rate, or any exported P_send
/// reading) over time.
pub fn signaling_action(p_send_series: &[f64], times: &[f64]) -> Result<Vec<f64>> {
    accumulate_action(p_send_series, times)
}

/// Windowed firing-rate estimate of P_send(t) from a pulse-event log:
/// pulses actually sent (suppressed crossings excluded) inside the trailing
/// window `(t - window, t]`, divided by the window length.
pub fn firing_rate_series(events: &[PulseEvent], times: &[f64], window: f64) -> Result<Vec<f64>> {
    if !(window > 0.0) {
        return Err(Error::Parameter {
            name: "window",
            reason: format!("must be > 0, got {window}"),
        });
    }
    check_times_increasing(times)?;
    let sent: Vec<f64> = events
        .iter()
        .filter(|e| !e.suppressed)
        .map(|e| e.t)
        .collect();
    let mut lo = 0usize;
    let mut hi = 0usize;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while hi < sent.len() && sent[hi] <= t {
            hi += 1;
        }
        while lo < hi && sent[lo] <= t - window {
            lo += 1;
        }
        out.push((hi - lo) as f64 / window);
    }
    Ok(out)
}

/// Attenuation form of the signaling action: `ln(I(t)/I0) = -gamma * t`.
pub fn attenuation_action(gamma: f64, t: f64) -> f64 {
    -gamma * t
}

/// Surviving intensity fraction `I(t)/I0 = exp(-gamma * t)`; its logarithm
/// is [`attenuation_action`] identically.
pub fn intensity_ratio(gamma: f64, t: f64) -> f64 {
    (-gamma * t).exp()
}

/// Time derivative of a sampled series by three-point stencils: central
/// differences in the interior, one-sided second-order stencils at the
/// ends. Exact on quadratics, also on non-uniform grids.
pub fn action_derivative(series: &[f64], times: &[f64]) -> Result<Vec<f64>> {
    check_aligned("series vs times", times.len(), series.len())?;
    check_times_increasing(times)?;
    let m = series.len();
    if m < 3 {
        return Err(Error::InsufficientData(format!(
            "derivative needs at least 3 samples, got {m}"
        )));
    }
    // Derivative of the Lagrange parabola through (t0,f0),(t1,f1),(t2,f2)
    // evaluated at `at`.
    let stencil = |t0: f64, t1: f64, t2: f64, f0: f64, f1: f64, f2: f64, at: f64| -> f64 {
        f0 * (2.0 * at - t1 - t2) / ((t0 - t1) * (t0 - t2))
            + f1 * (2.0 * at - t0 - t2) / ((t1 - t0) * (t1 - t2))
            + f2 * (2.0 * at - t0 - t1) / ((t2 - t0) * (t2 - t1))
    };
    let mut out = Vec::with_capacity(m);
    out.push(stencil(
        times[0], times[1], times[2], series[0], series[1], series[2], times[0],
    ));
    for k in 1..m - 1 {
        out.push(stencil(
            times[k - 1],
            times[k],
            times[k + 1],
            series[k - 1],
            series[k],
            series[k + 1],
            times[k],
        ));
    }
    out.push(stencil(
        times[m - 3],
        times[m - 2],
        times[m - 1],
        series[m - 3],
        series[m - 2],
        series[m - 1],
        times[m - 1],
    ));
    Ok(out)
}

/// Damping regimes of the action-derivative series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "underdamped")]
    Underdamped,
    #[serde(rename = "critically-damped")]
    CriticallyDamped,
    #[serde(rename = "steady-state")]
    SteadyState,
    #[serde(rename = "chaotic/unsettled")]
    ChaoticUnsettled,
}

/// Classification of a dS/dt series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub regime: Regime,
    /// Time from which the series stays within tolerance of the asymptote,
    /// if that point exists inside the run.
    pub settle_time: Option<f64>,
    /// Oscillations of the series about the asymptote before settling.
    pub zero_crossings: usize,
    /// Exponential decay rate fitted to the pre-settle envelope peaks, when
    /// at least two peaks exist.
    pub envelope_rate: Option<f64>,
    /// Mean of the final tenth of the series.
    pub asymptote: f64,
}

/// Classify the damping regime of a dS/dt series.
///
/// The asymptote is the mean of the final 10% of samples; the settle
/// tolerance is `tol` relative to `max(|asymptote|, peak deviation)`. A
/// series that settles with two or more prior crossings and a positive
/// envelope decay rate is underdamped. Otherwise, settling inside the
/// first fifth of the run (the plateau dominates) is steady-state;
/// settling later with at most one crossing is critically damped; anything
/// else, including a final fifth that never holds inside tolerance, is
/// chaotic/unsettled.
pub fn classify_regime(ds_dt: &[f64], times: &[f64], tol: f64) -> Result<RegimeReport> {
    check_aligned("ds_dt vs times", times.len(), ds_dt.len())?;
    check_times_increasing(times)?;
    if ds_dt.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "regime classification needs at least 10 samples, got {}",
            ds_dt.len()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::Parameter {
            name: "tol",
            reason: format!("must be > 0, got {tol}"),
        });
    }
    let m = ds_dt.len();
    let tail_start = m - (m / 10).max(1);
    let asymptote = ds_dt[tail_start..].iter().sum::<f64>() / (m - tail_start) as f64;

    let dev: Vec<f64> = ds_dt.iter().map(|s| (s - asymptote).abs()).collect();
    let peak_dev = dev.iter().copied().fold(0.0, f64::max);
    let threshold = tol * asymptote.abs().max(peak_dev);

    // First index from which the deviation never exceeds the tolerance.
    let settle_idx = dev
        .iter()
        .rposition(|&d| d > threshold)
        .map_or(0, |last| last + 1);
    let settle_time = (settle_idx < m).then(|| times[settle_idx]);
    // Settled for classification purposes: at latest by the 80% mark, so
    // the final fifth of the run demonstrates persistence.
    let settled = settle_idx <= (4 * m) / 5;

    let crossing_range = if settle_idx < m { settle_idx } else { m };
    let mut zero_crossings = 0usize;
    let mut last_sign = 0i8;
    for s in &ds_dt[..crossing_range] {
        let sign = if *s > asymptote {
            1
        } else if *s < asymptote {
            -1
        } else {
            0
        };
        if sign != 0 {
            if last_sign != 0 && sign != last_sign {
                zero_crossings += 1;
            }
            last_sign = sign;
        }
    }

    // Envelope: local maxima of the deviation before the settle point.
    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for k in 1..crossing_range.saturating_sub(1) {
        if dev[k] > dev[k - 1] && dev[k] >= dev[k + 1] && dev[k] > 0.0 {
            peaks.push((times[k], dev[k]));
        }
    }
    let envelope_rate = if peaks.len() >= 2 {
        let pts: Vec<(f64, f64)> = peaks.iter().map(|&(t, d)| (t, d.ln())).collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sxx - sx * sx;
        (denom != 0.0).then(|| -(n * sxy - sx * sy) / denom)
    } else {
        None
    };

    let regime = if !settled {
        Regime::ChaoticUnsettled
    } else if zero_crossings >= 2 && envelope_rate.is_some_and(|r| r > 0.0) {
        Regime::Underdamped
    } else if settle_idx <= m / 5 {
        Regime::SteadyState
    } else if zero_crossings <= 1 {
        Regime::CriticallyDamped
    } else {
        Regime::ChaoticUnsettled
    };

    Ok(RegimeReport {
        regime,
        settle_time,
        zero_crossings,
        envelope_rate,
        asymptote,
    })
}

/// Per-node frequency shifts `delta_omega_i(t) = thetadot_i(t) - omega_i`.
pub fn frequency_shifts(theta_dots: &[Vec<f64>], omega: &[f64]) -> Result<Vec<Vec<f64>>> {
    theta_dots
        .iter()
        .map(|row| {
            check_aligned("theta_dot row vs omega", omega.len(), row.len())?;
            Ok(row.iter().zip(omega).map(|(v, w)| v - w).collect())
        })
        .collect()
}

/// Per-step RMS over nodes of the frequency-shift matrix: the aggregate
/// |delta omega| fed into the qoppa regression.
pub fn freq_shift_rms(freq_shifts: &[Vec<f64>]) -> Vec<f64> {
    freq_shifts
        .iter()
        .map(|row| {
            if row.is_empty() {
                0.0
            } else {
                (row.iter().map(|d| d * d).sum::<f64>() / row.len() as f64).sqrt()
            }
        })
        .collect()
}

/// Fitted proportionality between frequency shift and action rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QoppaFit {
    /// Zero-intercept least-squares slope of |delta omega| against dS/dt.
    pub qoppa: f64,
    /// Goodness of fit in [0, 1] (uncentered, matching the zero intercept).
    pub r_squared: f64,
    /// Time window the fit was taken over.
    pub window: (f64, f64),
}

/// Regress the aggregate frequency shift on the action derivative over a
/// time window, through the origin.
pub fn fit_qoppa(
    delta_omega_aggregate: &[f64],
    ds_dt: &[f64],
    times: &[f64],
    window: (f64, f64),
) -> Result<QoppaFit> {
    check_aligned(
        "aggregate vs times",
        times.len(),
        delta_omega_aggregate.len(),
    )?;
    check_aligned("ds_dt vs times", times.len(), ds_dt.len())?;
    check_times_increasing(times)?;
    let (w0, w1) = window;
    if !(w0 < w1) {
        return Err(Error::Parameter {
            name: "window",
            reason: format!("start {w0} must be < end {w1}"),
        });
    }
    let idx: Vec<usize> = (0..times.len())
        .filter(|&k| times[k] >= w0 && times[k] <= w1)
        .collect();
    if idx.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "qoppa window [{w0}, {w1}] contains {} samples, need >= 2",
            idx.len()
        )));
    }
    let sxx: f64 = idx.iter().map(|&k| ds_dt[k] * ds_dt[k]).sum();
    if sxx == 0.0 {
        return Err(Error::FitUndefined(
            "dS/dt is identically zero on the window",
        ));
    }
    let sxy: f64 = idx
        .iter()
        .map(|&k| ds_dt[k] * delta_omega_aggregate[k])
        .sum();
    let qoppa = sxy / sxx;
    let syy: f64 = idx
        .iter()
        .map(|&k| delta_omega_aggregate[k] * delta_omega_aggregate[k])
        .sum();
    let ss_res: f64 = idx
        .iter()
        .map(|&k| {
            let e = delta_omega_aggregate[k] - qoppa * ds_dt[k];
            e * e
        })
        .sum();
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(QoppaFit {
        qoppa,
        r_squared,
        window,
    })
}

/// Wavelength-shift proxy `-(1/(2*pi)) / (qoppa * ds_dt)`.
///
/// The formula is singular as the action rate vanishes; a zero product is
/// surfaced as an error rather than hidden. Dimensionless proxy units.
pub fn wavelength_shift(ds_dt: f64, qoppa: f64) -> Result<f64> {
    let x = qoppa * ds_dt;
    if x == 0.0 || !x.is_finite() {
        return Err(Error::UndefinedShift);
    }
    Ok(-(1.0 / std::f64::consts::TAU) / x)
}

/// One projected configuration-space sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedPoint {
    pub x: f64,
    pub y: f64,
    /// Coloring value carried along (the action derivative in the built-in
    /// pipeline).
    pub color: f64,
}

/// Project the phase trajectory into 2-D for plotting.
///
/// Each configuration embeds on the torus as the 2n-vector
/// `(cos theta_1 .. cos theta_n, sin theta_1 .. sin theta_n)`; the cloud is
/// centered and projected onto its own top two principal axes, and each
/// point carries the matching `color` sample. A trajectory may legitimately
/// self-intersect in this view.
pub fn config_trajectory(thetas: &[Vec<f64>], color: &[f64]) -> Result<Vec<EmbeddedPoint>> {
    let steps = thetas.len();
    if steps < 2 {
        return Err(Error::InsufficientData(format!(
            "trajectory embedding needs at least 2 steps, got {steps}"
        )));
    }
    check_aligned("color series vs steps", steps, color.len())?;
    let n = thetas[0].len();
    for row in thetas {
        check_aligned("theta row length", n, row.len())?;
    }
    let dim = 2 * n;

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(steps);
    for theta in thetas {
        let mut row = Vec::with_capacity(dim);
        row.extend(theta.iter().map(|t| t.cos()));
        row.extend(theta.iter().map(|t| t.sin()));
        rows.push(row);
    }
    let mut mean = vec![0.0; dim];
    for row in &rows {
        for (m, x) in mean.iter_mut().zip(row) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= steps as f64;
    }
    for row in &mut rows {
        for (x, m) in row.iter_mut().zip(&mean) {
            *x -= m;
        }
    }

    let mut cov = vec![0.0; dim * dim];
    for row in &rows {
        for i in 0..dim {
            let ri = row[i];
            if ri == 0.0 {
                continue;
            }
            for j in 0..dim {
                cov[i * dim + j] += ri * row[j];
            }
        }
    }
    for c in &mut cov {
        *c /= steps as f64;
    }

    let axis1 = dominant_eigenvector(&cov, dim, None);
    let axis2 = dominant_eigenvector(&cov, dim, Some(&axis1));

    Ok(rows
        .iter()
        .zip(color)
        .map(|(row, &c)| EmbeddedPoint {
            x: dot(row, &axis1),
            y: dot(row, &axis2),
            color: c,
        })
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Power iteration with a fixed deterministic start, constrained to the
/// subspace orthogonal to `orthogonal_to` when given. Returns a unit
/// vector (sign-canonicalized), or the zero vector when the matrix has no
/// mass in the allowed subspace (projections vanish there anyway).
fn dominant_eigenvector(mat: &[f64], dim: usize, orthogonal_to: Option<&[f64]>) -> Vec<f64> {
    use rand::Rng;
    use rand::SeedableRng;
    let reject = |v: &mut Vec<f64>| {
        if let Some(prev) = orthogonal_to {
            let overlap = dot(v, prev);
            for (x, p) in v.iter_mut().zip(prev) {
                *x -= overlap * p;
            }
        }
    };

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x0501_ca11);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
    reject(&mut v);
    normalize(&mut v);
    let mut next = vec![0.0; dim];
    for _ in 0..500 {
        for i in 0..dim {
            next[i] = dot(&mat[i * dim..(i + 1) * dim], &v);
        }
        reject(&mut next);
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-300 {
            // No variance left in the allowed subspace.
            v.fill(0.0);
            break;
        }
        for x in &mut next {
            *x /= norm;
        }
        let drift: f64 = next
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut v, &mut next);
        if drift < 1e-13 {
            break;
        }
    }
    reject(&mut v);
    normalize(&mut v);
    // Canonical sign: first component of nonnegligible magnitude positive.
    if let Some(lead) = v.iter().find(|x| x.abs() > 1e-12) {
        if *lead < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
    }
    v
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Network;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn pair_network(x: f64) -> Network {
        Network::new(vec![0.0, 0.0], vec![vec![0.0, x], vec![x, 0.0]], None, None).unwrap()
    }

    #[test]
    fn lagrangian_of_aligned_pair_is_the_coupling() {
        let net = pair_network(1.0);
        let l = lagrangian(&[0.7, 0.7], &[0.0, 0.0], &net).unwrap();
        assert!((l - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lagrangian_of_free_motion_is_kinetic() {
        let net = Network::new(vec![0.0; 2], vec![vec![0.0; 2]; 2], None, None).unwrap();
        let l = lagrangian(&[0.3, 9.0], &[1.0, 2.0], &net).unwrap();
        assert!((l - 2.5).abs() < 1e-15);
    }

    #[test]
    fn lagrangian_ignores_global_phase() {
        let net = pair_network(0.8);
        let a = lagrangian(&[0.1, 1.4], &[0.5, -0.5], &net).unwrap();
        let b = lagrangian(&[0.1 + 3.3, 1.4 + 3.3], &[0.5, -0.5], &net).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn constant_lagrangian_integrates_to_rectangle() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let l = vec![3.0; 11];
        let s = accumulate_action(&l, &times).unwrap();
        assert_eq!(s[0], 0.0);
        assert!((s[10] - 30.0).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_is_exact_for_linear_series() {
        let times = vec![0.0, 0.25, 0.5, 0.75, 1.0];
        let l = times.clone();
        let s = accumulate_action(&l, &times).unwrap();
        assert_eq!(s[4], 0.5);
    }

    #[test]
    fn action_is_linear_in_the_lagrangian() {
        let times: Vec<f64> = (0..20).map(|k| 0.1 * k as f64).collect();
        let l: Vec<f64> = times.iter().map(|t| (3.0 * t).sin()).collect();
        let neg: Vec<f64> = l.iter().map(|x| -x).collect();
        let s = accumulate_action(&l, &times).unwrap();
        let s_neg = accumulate_action(&neg, &times).unwrap();
        for (a, b) in s.iter().zip(&s_neg) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn non_monotone_times_are_rejected() {
        assert!(accumulate_action(&[0.0, 1.0], &[1.0, 1.0]).is_err());
        assert!(accumulate_action(&[0.0, 1.0, 2.0], &[0.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn constant_p_send_integrates_to_rate_times_time() {
        let times: Vec<f64> = (0..=100).map(|k| 0.1 * k as f64).collect();
        let p = vec![0.5; 101];
        let sf = signaling_action(&p, &times).unwrap();
        assert!((sf[100] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn empty_event_log_has_zero_signaling_action() {
        let times: Vec<f64> = (0..=50).map(|k| k as f64).collect();
        let rate = firing_rate_series(&[], &times, 10.0).unwrap();
        assert!(rate.iter().all(|&r| r == 0.0));
        let sf = signaling_action(&rate, &times).unwrap();
        assert!(sf.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn rate_integral_approximates_event_count() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let mut events = Vec::new();
        let mut t = 0.0;
        while t < 100.0 {
            t += -((1.0 - rng.random::<f64>()).ln()); // mean gap 1
            if t < 100.0 {
                events.push(PulseEvent {
                    t,
                    source: 0,
                    suppressed: false,
                    deltas: BTreeMap::new(),
                });
            }
        }
        let count = events.len() as f64;
        assert!(count > 70.0 && count < 130.0, "count = {count}");
        let times: Vec<f64> = (0..=1000).map(|k| 0.1 * k as f64).collect();
        let rate = firing_rate_series(&events, &times, 10.0).unwrap();
        let sf = signaling_action(&rate, &times).unwrap();
        let total = sf.last().unwrap();
        assert!(
            (total - count).abs() <= 0.1 * count,
            "S_f(100) = {total} vs {count} events"
        );
    }

    #[test]
    fn attenuation_action_is_minus_gamma_t() {
        assert_eq!(attenuation_action(0.0, 7.0), 0.0);
        let a = attenuation_action(0.3, 2.0);
        assert!((a + 0.6).abs() < 1e-15);
        assert!((intensity_ratio(0.3, 2.0).ln() - a).abs() < 1e-15);
    }

    #[test]
    fn attenuation_action_is_additive_in_time() {
        let g = 1.7;
        let whole = attenuation_action(g, 5.0);
        let parts = attenuation_action(g, 2.0) + attenuation_action(g, 3.0);
        assert!((whole - parts).abs() < 1e-12);
    }

    #[test]
    fn derivative_of_linear_action_is_constant() {
        let times: Vec<f64> = (0..40).map(|k| 0.05 * k as f64).collect();
        let s: Vec<f64> = times.iter().map(|t| 2.5 * t).collect();
        let d = action_derivative(&s, &times).unwrap();
        for v in d {
            assert!((v - 2.5).abs() < 1e-10);
        }
    }

    #[test]
    fn derivative_of_constant_action_is_zero() {
        let times: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let d = action_derivative(&[4.0; 10], &times).unwrap();
        assert!(d.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn derivative_accumulate_round_trip_is_second_order() {
        let smooth = |t: f64| (2.0 * t).sin() + 0.3 * t * t;
        let max_err = |dt: f64| -> f64 {
            let steps = (2.0 / dt).round() as usize;
            let times: Vec<f64> = (0..=steps).map(|k| dt * k as f64).collect();
            let l: Vec<f64> = times.iter().map(|&t| smooth(t)).collect();
            let s = accumulate_action(&l, &times).unwrap();
            let back = action_derivative(&s, &times).unwrap();
            back.iter()
                .zip(&l)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let coarse = max_err(0.02);
        let fine = max_err(0.01);
        let ratio = coarse / fine;
        assert!(
            (3.5..=4.5).contains(&ratio),
            "dt-halving error ratio {ratio} not ~4 (coarse {coarse}, fine {fine})"
        );
    }

    #[test]
    fn damped_oscillation_classifies_underdamped() {
        let times: Vec<f64> = (0..=1000).map(|k| 0.01 * k as f64).collect();
        let s: Vec<f64> = times
            .iter()
            .map(|&t| (-t).exp() * (10.0 * t).cos() + 1.0)
            .collect();
        let report = classify_regime(&s, &times, 0.02).unwrap();
        assert_eq!(report.regime, Regime::Underdamped);
        assert!(report.zero_crossings >= 10, "{}", report.zero_crossings);
        assert!(report.settle_time.is_some());
        let rate = report.envelope_rate.unwrap();
        assert!((rate - 1.0).abs() < 0.3, "envelope rate {rate}");
    }

    #[test]
    fn constant_series_classifies_steady_state() {
        let times: Vec<f64> = (0..=100).map(|k| 0.1 * k as f64).collect();
        let s = vec![5.0; 101];
        let report = classify_regime(&s, &times, 0.02).unwrap();
        assert_eq!(report.regime, Regime::SteadyState);
        assert_eq!(report.settle_time, Some(0.0));
        assert_eq!(report.zero_crossings, 0);
    }

    #[test]
    fn monotone_settle_classifies_critically_damped() {
        let times: Vec<f64> = (0..=1000).map(|k| 0.01 * k as f64).collect();
        let s: Vec<f64> = times.iter().map(|&t| (-t).exp() + 1.0).collect();
        let report = classify_regime(&s, &times, 0.02).unwrap();
        assert_eq!(report.regime, Regime::CriticallyDamped);
        let settle = report.settle_time.unwrap();
        assert!(settle > 1.0 && settle < 6.0, "settle at {settle}");
    }

    #[test]
    fn early_settle_classifies_steady_state() {
        // Settles by ~8% of the run; the plateau dominates.
        let times: Vec<f64> = (0..=1000).map(|k| 0.01 * k as f64).collect();
        let s: Vec<f64> = times.iter().map(|&t| (-5.0 * t).exp() + 1.0).collect();
        let report = classify_regime(&s, &times, 0.02).unwrap();
        assert_eq!(report.regime, Regime::SteadyState);
        assert!(report.settle_time.unwrap() < 2.0);
    }

    #[test]
    fn persistent_oscillation_is_unsettled() {
        let times: Vec<f64> = (0..=500).map(|k| 0.02 * k as f64).collect();
        let s: Vec<f64> = times.iter().map(|&t| (5.0 * t).sin()).collect();
        let report = classify_regime(&s, &times, 0.02).unwrap();
        assert_eq!(report.regime, Regime::ChaoticUnsettled);
    }

    #[test]
    fn uncoupled_shifts_are_zero() {
        let omega = vec![1.0, -2.0, 0.5];
        let dots = vec![omega.clone(), omega.clone()];
        let shifts = frequency_shifts(&dots, &omega).unwrap();
        for row in shifts {
            assert!(row.iter().all(|&d| d == 0.0));
        }
    }

    #[test]
    fn locked_state_shift_is_constant_offset() {
        let omega = vec![0.4, -0.4];
        let big_omega = 0.0; // symmetric pair locks at the mean frequency
        let dots = vec![vec![big_omega; 2]; 5];
        let shifts = frequency_shifts(&dots, &omega).unwrap();
        for row in &shifts {
            assert!((row[0] - (big_omega - 0.4)).abs() < 1e-15);
            assert!((row[1] - (big_omega + 0.4)).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_proportionality_recovers_slope_one_fit() {
        let times: Vec<f64> = (0..100).map(|k| 0.1 * k as f64).collect();
        let x: Vec<f64> = times.iter().map(|t| (t * 0.7).sin() + 1.5).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let fit = fit_qoppa(&y, &x, &times, (0.0, 10.0)).unwrap();
        assert!((fit.qoppa - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_shift_gives_zero_qoppa() {
        let times: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let x: Vec<f64> = times.iter().map(|t| t + 1.0).collect();
        let fit = fit_qoppa(&vec![0.0; 50], &x, &times, (0.0, 49.0)).unwrap();
        assert_eq!(fit.qoppa, 0.0);
    }

    #[test]
    fn degenerate_regressor_is_an_error() {
        let times: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let err = fit_qoppa(&vec![1.0; 50], &vec![0.0; 50], &times, (0.0, 49.0)).unwrap_err();
        assert!(matches!(err, Error::FitUndefined(_)));
    }

    #[test]
    fn noisy_proportionality_recovers_slope() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let times: Vec<f64> = (0..500).map(|k| 0.02 * k as f64).collect();
        let x: Vec<f64> = times.iter().map(|t| (0.9 * t).sin() + 2.0).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| v + 0.01 * v * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        let fit = fit_qoppa(&y, &x, &times, (0.0, 10.0)).unwrap();
        assert!(
            fit.qoppa > 0.95 && fit.qoppa < 1.05,
            "qoppa = {}",
            fit.qoppa
        );
        assert!(fit.r_squared > 0.99, "r^2 = {}", fit.r_squared);
    }

    #[test]
    fn wavelength_shift_closed_form() {
        let w = wavelength_shift(1.0, 1.0).unwrap();
        assert!((w + 1.0 / std::f64::consts::TAU).abs() < 1e-15);
    }

    #[test]
    fn wavelength_shift_is_inverse_in_the_rate() {
        let w1 = wavelength_shift(1.0, 1.0).unwrap();
        let w2 = wavelength_shift(2.0, 1.0).unwrap();
        assert!((w1 / w2 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_rate_is_surfaced_as_error() {
        assert!(matches!(
            wavelength_shift(0.0, 3.0),
            Err(Error::UndefinedShift)
        ));
        assert!(matches!(
            wavelength_shift(1.0, 0.0),
            Err(Error::UndefinedShift)
        ));
    }

    #[test]
    fn frozen_configuration_embeds_to_a_single_point() {
        let thetas = vec![vec![0.4, 1.1, 2.2]; 6];
        let pts = config_trajectory(&thetas, &[0.0; 6]).unwrap();
        for p in &pts {
            assert!(p.x.abs() < 1e-9 && p.y.abs() < 1e-9);
        }
    }

    #[test]
    fn two_step_trajectory_spreads_along_the_difference() {
        let thetas = vec![vec![0.0, 0.0], vec![1.0, -0.5]];
        let pts = config_trajectory(&thetas, &[1.0, 2.0]).unwrap();
        assert_eq!(pts.len(), 2);
        // Symmetric about the mean on the first axis, nothing on the second.
        assert!((pts[0].x + pts[1].x).abs() < 1e-9);
        assert!(pts[0].x.abs() > 1e-3);
        assert!(pts[0].y.abs() < 1e-9 && pts[1].y.abs() < 1e-9);
        assert_eq!(pts[0].color, 1.0);
        assert_eq!(pts[1].color, 2.0);
    }

    #[test]
    fn single_oscillator_embeds_on_its_circle() {
        // n = 1 degenerates to the (cos, sin) plane itself; a quarter turn
        // spreads points along both principal axes of the arc.
        let steps = 32;
        let thetas: Vec<Vec<f64>> = (0..steps)
            .map(|k| vec![std::f64::consts::FRAC_PI_2 * k as f64 / steps as f64])
            .collect();
        let pts = config_trajectory(&thetas, &vec![0.0; steps]).unwrap();
        assert_eq!(pts.len(), steps);
        // All points sit on the unit circle around the cloud centroid.
        let cx = thetas.iter().map(|t| t[0].cos()).sum::<f64>() / steps as f64;
        let cy = thetas.iter().map(|t| t[0].sin()).sum::<f64>() / steps as f64;
        for (p, theta) in pts.iter().zip(&thetas) {
            let radius2 = p.x * p.x + p.y * p.y;
            let want = (theta[0].cos() - cx).powi(2) + (theta[0].sin() - cy).powi(2);
            assert!((radius2 - want).abs() < 1e-9);
        }
    }

    #[test]
    fn periodic_orbit_closes_in_the_projection() {
        let steps_per_lap = 64;
        let mut thetas = Vec::new();
        for _lap in 0..2 {
            for k in 0..steps_per_lap {
                let ph = std::f64::consts::TAU * k as f64 / steps_per_lap as f64;
                thetas.push(vec![ph, -ph, 0.0]);
            }
        }
        let color = vec![0.0; thetas.len()];
        let pts = config_trajectory(&thetas, &color).unwrap();
        for k in 0..steps_per_lap {
            let a = &pts[k];
            let b = &pts[k + steps_per_lap];
            assert!((a.x - b.x).abs() < 1e-6 && (a.y - b.y).abs() < 1e-6);
        }
    }

    proptest! {
        #[test]
        fn prop_wavelength_identity(x in -1e3f64..1e3) {
            prop_assume!(x != 0.0);
            let w = wavelength_shift(x, 1.0).unwrap();
            let product = w * x;
            let expected = -1.0 / std::f64::consts::TAU;
            prop_assert!(((product - expected) / expected).abs() < 1e-15);
        }

        #[test]
        fn prop_lagrangian_shift_invariance(
            c in -10.0f64..10.0,
            theta in proptest::collection::vec(-3.0f64..3.0, 3),
            dots in proptest::collection::vec(-2.0f64..2.0, 3),
        ) {
            let net = Network::new(
                vec![0.0; 3],
                vec![
                    vec![0.0, 0.5, 1.0],
                    vec![0.5, 0.0, 0.2],
                    vec![1.0, 0.2, 0.0],
                ],
                None,
                None,
            )
            .unwrap();
            let shifted: Vec<f64> = theta.iter().map(|t| t + c).collect();
            let a = lagrangian(&theta, &dots, &net).unwrap();
            let b = lagrangian(&shifted, &dots, &net).unwrap();
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}
