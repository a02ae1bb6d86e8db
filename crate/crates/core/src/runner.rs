//! Experiment execution: seeded simulation pipelines, record persistence,
//! campaign orchestration, and figure-data export.
//!
//! A campaign runs one pipeline per seed (in parallel up to a worker
//! count), writes one output directory per seed plus a `summary.json` at
//! the campaign root, and never embeds timestamps, so identical config and
//! seed produce byte-identical outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{
    accumulate_action, action_derivative, classify_regime, config_trajectory, firing_rate_series,
    fit_qoppa, freq_shift_rms, lagrangian, signaling_action, EmbeddedPoint, QoppaFit, RegimeReport,
    TrajectoryRecord,
};
use crate::config::{AttenuationConfig, ExperimentConfig, Model};
use crate::error::{Error, Result};
use crate::graph::{
    build_topology, coupling_from_distance, coupling_from_graph_distance, load_network,
    perturb_network, save_network, AttenuationParams, Network, PerturbationKind, PerturbationSpec,
};
use crate::kuramoto::{
    integrate_step, kuramoto_derivative, order_parameter, Integrator, PhaseState,
};
use crate::probe::{attach_probe, probe_estimate};
use crate::pulse::{
    advance_phases, fire_and_propagate, periods_from_omega, write_event_csv,
    write_event_deltas_json, CircleState, PulseEvent, PulseParams,
};

/// A perturbation that actually fired during a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppliedPerturbation {
    pub requested_at: f64,
    pub applied_at: f64,
    pub description: String,
}

/// Inputs of one continuous-model run.
pub struct KuramotoRunSpec<'a> {
    pub net: &'a Network,
    pub init: &'a PhaseState,
    pub dt: f64,
    pub t_max: f64,
    pub integrator: Integrator,
    pub schedule: &'a [PerturbationSpec],
    /// Restrict the recorded diagnostics to the first k nodes (used when a
    /// probe oscillator is appended); defaults to every node.
    pub record_nodes: Option<usize>,
}

/// Outputs of one continuous-model run.
pub struct KuramotoRunOutput {
    pub record: TrajectoryRecord,
    pub applied: Vec<AppliedPerturbation>,
    pub final_net: Network,
    /// Unwrapped phase series of the first node beyond `record_nodes`
    /// (the probe), when the run carried one.
    pub extra_theta: Option<Vec<f64>>,
}

/// Network restricted to its first k nodes (drops a trailing probe).
fn restrict_network(net: &Network, k: usize) -> Result<Network> {
    let coupling: Vec<Vec<f64>> = (0..k).map(|i| net.coupling_row(i)[..k].to_vec()).collect();
    Network::new(net.omega()[..k].to_vec(), coupling, None, None)
}

/// Integrate the continuous model on a uniform grid, recording every
/// sample, applying scheduled perturbations on the grid point at or after
/// their requested time.
pub fn run_kuramoto(spec: &KuramotoRunSpec) -> Result<KuramotoRunOutput> {
    if !(spec.t_max > 0.0) {
        return Err(Error::Parameter {
            name: "t_max",
            reason: format!("must be > 0, got {}", spec.t_max),
        });
    }
    if !(spec.dt > 0.0) || !spec.dt.is_finite() {
        return Err(Error::Parameter {
            name: "dt",
            reason: format!("must be finite and > 0, got {}", spec.dt),
        });
    }
    let total = spec.net.n();
    let recorded = spec.record_nodes.unwrap_or(total);
    if recorded == 0 || recorded > total {
        return Err(Error::Parameter {
            name: "record_nodes",
            reason: format!("must lie in [1, {total}], got {recorded}"),
        });
    }
    let steps = (spec.t_max / spec.dt).round().max(1.0) as usize;

    let mut schedule: Vec<&PerturbationSpec> = spec.schedule.iter().collect();
    schedule.sort_by(|a, b| a.at_time.partial_cmp(&b.at_time).unwrap());
    let mut next_spec = 0usize;
    let mut applied = Vec::new();

    let mut net = spec.net.clone();
    let mut diag_net = restrict_network(&net, recorded)?;
    let mut state = spec.init.clone();

    let mut times = Vec::with_capacity(steps + 1);
    let mut thetas = Vec::with_capacity(steps + 1);
    let mut theta_dots = Vec::with_capacity(steps + 1);
    let mut lagrangians = Vec::with_capacity(steps + 1);
    let mut freq_shift_rows = Vec::with_capacity(steps + 1);
    let mut extra_theta = (recorded < total).then(Vec::new);

    for step in 0..=steps {
        // Perturbations due by now take effect before this sample.
        while next_spec < schedule.len() && schedule[next_spec].at_time <= state.t {
            let p = schedule[next_spec];
            net = perturb_network(&net, p)?;
            diag_net = restrict_network(&net, recorded)?;
            applied.push(AppliedPerturbation {
                requested_at: p.at_time,
                applied_at: state.t,
                description: p.describe(),
            });
            next_spec += 1;
        }

        let dot_full = kuramoto_derivative(&state, &net)?;
        let theta_row = state.theta[..recorded].to_vec();
        let dot_row = dot_full[..recorded].to_vec();
        let shift_row: Vec<f64> = dot_row
            .iter()
            .zip(&diag_net.omega()[..recorded])
            .map(|(v, w)| v - w)
            .collect();
        lagrangians.push(lagrangian(&theta_row, &dot_row, &diag_net)?);
        times.push(state.t);
        thetas.push(theta_row);
        theta_dots.push(dot_row);
        freq_shift_rows.push(shift_row);
        if let Some(extra) = extra_theta.as_mut() {
            extra.push(state.theta[recorded]);
        }

        if step < steps {
            state = integrate_step(&state, &net, spec.dt, spec.integrator)?;
        }
    }

    let mut r_series = Vec::with_capacity(times.len());
    let mut psi_series = Vec::with_capacity(times.len());
    for row in &thetas {
        let op = order_parameter(&PhaseState::new(row.clone(), 0.0));
        r_series.push(op.r);
        psi_series.push(op.psi);
    }
    let action_series = accumulate_action(&lagrangians, &times)?;
    // The three-point stencil needs three samples; a minimal two-sample
    // run gets the plain slope at both points.
    let action_derivative_series = if times.len() >= 3 {
        action_derivative(&action_series, &times)?
    } else {
        let slope = (action_series[1] - action_series[0]) / (times[1] - times[0]);
        vec![slope; 2]
    };

    Ok(KuramotoRunOutput {
        record: TrajectoryRecord {
            times,
            thetas,
            theta_dots,
            r_series,
            psi_series,
            lagrangian_series: lagrangians,
            action_series,
            action_derivative_series,
            freq_shift_series: freq_shift_rows,
        },
        applied,
        final_net: net,
        extra_theta,
    })
}

/// Plain continuous-model run: no perturbations, every node recorded.
pub fn simulate_kuramoto(
    net: &Network,
    init: &PhaseState,
    dt: f64,
    t_max: f64,
    integrator: Integrator,
) -> Result<TrajectoryRecord> {
    run_kuramoto(&KuramotoRunSpec {
        net,
        init,
        dt,
        t_max,
        integrator,
        schedule: &[],
        record_nodes: None,
    })
    .map(|out| out.record)
}

/// Outputs of one pulse-model run with a perturbation schedule.
pub struct PulseRunOutput {
    pub events: Vec<PulseEvent>,
    pub final_state: CircleState,
    pub sync_time: Option<f64>,
    pub applied: Vec<AppliedPerturbation>,
    pub final_net: Network,
}

/// Event-driven pulse run honoring a perturbation schedule: the loop stops
/// exactly at each requested time, applies the disturbance, and refreshes
/// the affected period when a frequency shift lands.
pub fn run_pulse_scheduled(
    net: &Network,
    params: &PulseParams,
    init: &CircleState,
    t_max: f64,
    seed: u64,
    schedule: &[PerturbationSpec],
) -> Result<PulseRunOutput> {
    if !(t_max > 0.0) {
        return Err(Error::Parameter {
            name: "t_max",
            reason: format!("must be > 0, got {t_max}"),
        });
    }
    params.validated()?;
    let n = net.n();
    let threshold = params.threshold;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);

    let mut pending: Vec<&PerturbationSpec> = schedule.iter().collect();
    pending.sort_by(|a, b| a.at_time.partial_cmp(&b.at_time).unwrap());
    let mut next_spec = 0usize;
    let mut applied = Vec::new();

    let mut net = net.clone();
    let mut state = init.clone();
    let mut events = Vec::new();
    let mut sync_time = None;

    loop {
        let dt_cross = (0..n)
            .map(|i| (threshold - state.phi[i]) * state.period[i])
            .fold(f64::INFINITY, f64::min);
        let t_cross = state.t + dt_cross;

        // A scheduled perturbation due before the next crossing wins.
        if next_spec < pending.len() && pending[next_spec].at_time <= t_cross.min(t_max) {
            let p = pending[next_spec];
            let dt = (p.at_time - state.t).max(0.0);
            if dt > 0.0 {
                state = advance_phases(&state, dt)?;
            }
            net = perturb_network(&net, p)?;
            if let PerturbationKind::FrequencyShift { node, .. } = p.kind {
                let w = net.omega()[node];
                if !(w > 0.0) {
                    return Err(Error::Parameter {
                        name: "delta_omega",
                        reason: format!(
                            "frequency shift drove omega[{node}] to {w}; pulse periods \
                             require positive frequencies"
                        ),
                    });
                }
                state.period[node] = std::f64::consts::TAU / w;
            }
            applied.push(AppliedPerturbation {
                requested_at: p.at_time,
                applied_at: state.t,
                description: p.describe(),
            });
            next_spec += 1;
            continue;
        }

        if !(t_cross <= t_max) {
            let remaining = t_max - state.t;
            if remaining > 0.0 {
                state = advance_phases(&state, remaining)?;
            }
            break;
        }

        let crossers: Vec<usize> = (0..n)
            .filter(|&i| (threshold - state.phi[i]) * state.period[i] == dt_cross)
            .collect();
        state = advance_phases(&state, dt_cross)?;
        for &i in &crossers {
            state.phi[i] = threshold;
        }
        let (next_state, cascade) = fire_and_propagate(&state, &net, params, &mut rng)?;
        state = next_state;
        if sync_time.is_none() && cascade.len() == n {
            sync_time = Some(t_cross);
        }
        events.extend(cascade);
    }

    Ok(PulseRunOutput {
        events,
        final_state: state,
        sync_time,
        applied,
        final_net: net,
    })
}

// ---------------------------------------------------------------------------
// Record persistence
// ---------------------------------------------------------------------------

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

/// Write the scalar trajectory series: `t,r,psi,L,S,dSdt`.
pub fn write_trajectory_csv(record: &TrajectoryRecord, path: impl AsRef<Path>) -> Result<()> {
    let mut text = String::from("# schema_version=1\nt,r,psi,L,S,dSdt\n");
    for k in 0..record.len() {
        writeln!(
            text,
            "{},{},{},{},{},{}",
            record.times[k],
            record.r_series[k],
            record.psi_series[k],
            record.lagrangian_series[k],
            record.action_series[k],
            record.action_derivative_series[k],
        )
        .expect("string write");
    }
    write_file(path.as_ref(), &text)
}

/// Write the per-node matrices: `t,theta_0..theta_{n-1},domega_0..domega_{n-1}`.
pub fn write_nodes_csv(record: &TrajectoryRecord, path: impl AsRef<Path>) -> Result<()> {
    let n = record.n();
    let mut text = String::from("# schema_version=1\nt");
    for i in 0..n {
        write!(text, ",theta_{i}").expect("string write");
    }
    for i in 0..n {
        write!(text, ",domega_{i}").expect("string write");
    }
    text.push('\n');
    for k in 0..record.len() {
        write!(text, "{}", record.times[k]).expect("string write");
        for v in &record.thetas[k] {
            write!(text, ",{v}").expect("string write");
        }
        for v in &record.freq_shift_series[k] {
            write!(text, ",{v}").expect("string write");
        }
        text.push('\n');
    }
    write_file(path.as_ref(), &text)
}

fn parse_csv(path: &Path, expected_prefix: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = read_file(path)?;
    let mut lines = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::MissingData(format!("{} is empty", path.display())))?;
    if !header.starts_with(expected_prefix) {
        return Err(Error::MissingData(format!(
            "{} does not look like the expected table (header `{header}`)",
            path.display()
        )));
    }
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|f| {
                f.parse().map_err(|_| {
                    Error::MissingData(format!(
                        "{}:{}: unparseable number `{f}`",
                        path.display(),
                        lineno + 3
                    ))
                })
            })
            .collect::<Result<_>>()?;
        if row.len() != columns.len() {
            return Err(Error::MissingData(format!(
                "{}:{}: {} fields, header has {}",
                path.display(),
                lineno + 3,
                row.len(),
                columns.len()
            )));
        }
        rows.push(row);
    }
    Ok((columns, rows))
}

/// Scalar series read back from `trajectory.csv`.
pub struct TrajectoryTable {
    pub times: Vec<f64>,
    pub r: Vec<f64>,
    pub psi: Vec<f64>,
    pub lagrangian: Vec<f64>,
    pub action: Vec<f64>,
    pub ds_dt: Vec<f64>,
}

pub fn read_trajectory_csv(path: impl AsRef<Path>) -> Result<TrajectoryTable> {
    let (_, rows) = parse_csv(path.as_ref(), "t,r,psi,L,S,dSdt")?;
    let col = |k: usize| -> Vec<f64> { rows.iter().map(|r| r[k]).collect() };
    Ok(TrajectoryTable {
        times: col(0),
        r: col(1),
        psi: col(2),
        lagrangian: col(3),
        action: col(4),
        ds_dt: col(5),
    })
}

/// Per-node matrices read back from `nodes.csv`.
pub struct NodesTable {
    pub times: Vec<f64>,
    pub thetas: Vec<Vec<f64>>,
    pub freq_shifts: Vec<Vec<f64>>,
}

pub fn read_nodes_csv(path: impl AsRef<Path>) -> Result<NodesTable> {
    let (columns, rows) = parse_csv(path.as_ref(), "t,theta_0")?;
    let n = (columns.len() - 1) / 2;
    Ok(NodesTable {
        times: rows.iter().map(|r| r[0]).collect(),
        thetas: rows.iter().map(|r| r[1..1 + n].to_vec()).collect(),
        freq_shifts: rows.iter().map(|r| r[1 + n..1 + 2 * n].to_vec()).collect(),
    })
}

fn write_embedding_csv(points: &[EmbeddedPoint], path: &Path) -> Result<()> {
    let mut text = String::from("# schema_version=1\nx,y,color\n");
    for p in points {
        writeln!(text, "{},{},{}", p.x, p.y, p.color).expect("string write");
    }
    write_file(path, &text)
}

fn read_embedding_csv(path: &Path) -> Result<Vec<EmbeddedPoint>> {
    let (_, rows) = parse_csv(path, "x,y,color")?;
    Ok(rows
        .iter()
        .map(|r| EmbeddedPoint {
            x: r[0],
            y: r[1],
            color: r[2],
        })
        .collect())
}

#[derive(Serialize)]
struct VersionedReport<T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    report: T,
}

fn write_report_json<T: Serialize>(report: T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(&VersionedReport {
        schema_version: 1,
        report,
    })?;
    write_file(path, &text)
}

// ---------------------------------------------------------------------------
// Campaign execution
// ---------------------------------------------------------------------------

/// Per-seed summary, listed in the exit report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeedOutcome {
    pub seed: u64,
    /// Seed output directory, relative to the campaign root.
    pub dir: String,
    pub files: Vec<String>,
    /// Order parameter at the final sample (for the pulse model, the
    /// coherence of the circle phases mapped onto angles).
    pub final_r: f64,
    /// Time-averaged order parameter over the final fifth of the run
    /// (continuous model only).
    pub r_tail_mean: Option<f64>,
    pub regime: Option<RegimeReport>,
    pub qoppa: Option<QoppaFit>,
    pub sync_time: Option<f64>,
    pub probe_estimate: Option<f64>,
    pub perturbations: Vec<AppliedPerturbation>,
}

/// Campaign-level result, also written as `summary.json`.
///
/// The output root is not serialized, so summaries are byte-identical
/// across campaign locations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExitReport {
    pub schema_version: u32,
    #[serde(skip, default)]
    pub output_root: PathBuf,
    pub seeds: Vec<SeedOutcome>,
}

/// Overrides from the environment/CLI.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Replaces `output.directory`.
    pub output_root: Option<PathBuf>,
    /// Replaces `output.workers`.
    pub workers: Option<usize>,
    /// Base directory for resolving relative paths inside the config
    /// (usually the config file's parent).
    pub config_dir: Option<PathBuf>,
}

/// Run every seed of a campaign and write all declared outputs.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExitReport> {
    let violations = config.violations();
    if !violations.is_empty() {
        return Err(Error::Config(violations.join("; ")));
    }
    let output_root = opts
        .output_root
        .clone()
        .unwrap_or_else(|| config.output.directory.clone());
    std::fs::create_dir_all(&output_root)
        .map_err(|e| Error::io(output_root.display().to_string(), e))?;

    let workers = opts
        .workers
        .or(config.output.workers)
        .unwrap_or_else(|| config.seeds.len().min(4))
        .max(1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    let outcomes: Result<Vec<SeedOutcome>> = pool.install(|| {
        use rayon::prelude::*;
        config
            .seeds
            .par_iter()
            .map(|&seed| run_seed(config, opts, &output_root, seed))
            .collect()
    });
    let report = ExitReport {
        schema_version: 1,
        output_root: output_root.clone(),
        seeds: outcomes?,
    };
    let text = serde_json::to_string_pretty(&report)?;
    write_file(&output_root.join("summary.json"), &text)?;
    Ok(report)
}

fn build_seed_network(config: &ExperimentConfig, opts: &RunOptions, seed: u64) -> Result<Network> {
    let net = if config.topology.kind == "custom" {
        let raw = config
            .topology
            .path
            .as_ref()
            .ok_or_else(|| Error::Config("topology.path missing".into()))?;
        let path = match &opts.config_dir {
            Some(base) if raw.is_relative() => base.join(raw),
            _ => raw.clone(),
        };
        load_network(path)?
    } else {
        build_topology(&config.topology_spec(seed)?)?
    };
    match &config.attenuation {
        None => Ok(net),
        Some(att) => apply_attenuation(&net, att),
    }
}

fn apply_attenuation(net: &Network, att: &AttenuationConfig) -> Result<Network> {
    let params = AttenuationParams::new(att.beta0, att.gamma, att.m)?;
    let coupling = match att.distance.as_str() {
        "euclidean" => {
            let positions = net.positions().ok_or_else(|| {
                Error::Config(
                    "attenuation.distance = \"euclidean\" needs node positions in the network"
                        .into(),
                )
            })?;
            coupling_from_distance(positions, &params, att.cutoff)?
        }
        "graph" => coupling_from_graph_distance(net, &params, att.cutoff)?,
        other => {
            return Err(Error::Config(format!(
                "attenuation.distance `{other}` unknown"
            )))
        }
    };
    Network::new(
        net.omega().to_vec(),
        coupling,
        net.positions().map(<[Vec<f64>]>::to_vec),
        net.labels().map(<[String]>::to_vec),
    )
}

fn run_seed(
    config: &ExperimentConfig,
    opts: &RunOptions,
    output_root: &Path,
    seed: u64,
) -> Result<SeedOutcome> {
    let dir_name = format!("seed-{seed}");
    let seed_dir = output_root.join(&dir_name);
    std::fs::create_dir_all(&seed_dir).map_err(|e| Error::io(seed_dir.display().to_string(), e))?;

    let net = build_seed_network(config, opts, seed)?;
    let mut files = Vec::new();
    if config.format_enabled("network") {
        save_network(&net, seed_dir.join("network.json"))?;
        files.push("network.json".to_string());
    }

    let outcome = match config.model {
        Model::Kuramoto => run_seed_kuramoto(config, &net, seed, &seed_dir, &mut files)?,
        Model::Pulse => run_seed_pulse(config, &net, seed, &seed_dir, &mut files)?,
    };

    Ok(SeedOutcome {
        seed,
        dir: dir_name,
        files,
        ..outcome
    })
}

// Draw order per run: stream 3 holds the initial phases ("chaos" start);
// streams 0/1 built the network, stream 2 feeds pulse firing draws.
fn initial_phase_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    rng
}

fn run_seed_kuramoto(
    config: &ExperimentConfig,
    net: &Network,
    seed: u64,
    seed_dir: &Path,
    files: &mut Vec<String>,
) -> Result<SeedOutcome> {
    let n = net.n();
    let dt = config
        .dynamics
        .dt
        .ok_or_else(|| Error::Config("dynamics.dt missing".into()))?;
    let integrator = config.dynamics.integrator.unwrap_or(Integrator::Rk4);

    let mut rng = initial_phase_rng(seed);
    let mut theta: Vec<f64> = (0..n)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect();

    let (sim_net, record_nodes) = match &config.probe {
        None => (net.clone(), None),
        Some(probe) => {
            theta.push(0.0); // probe starts at phase zero
            (attach_probe(net, probe)?, Some(n))
        }
    };
    let init = PhaseState::new(theta, 0.0);

    let out = run_kuramoto(&KuramotoRunSpec {
        net: &sim_net,
        init: &init,
        dt,
        t_max: config.dynamics.t_max,
        integrator,
        schedule: &config.perturbations,
        record_nodes,
    })?;
    let record = &out.record;

    if config.format_enabled("trajectory") {
        write_trajectory_csv(record, seed_dir.join("trajectory.csv"))?;
        files.push("trajectory.csv".to_string());
    }
    if config.format_enabled("nodes") {
        write_nodes_csv(record, seed_dir.join("nodes.csv"))?;
        files.push("nodes.csv".to_string());
    }

    let mut probe_est = None;
    if let (Some(extra), Some(probe)) = (&out.extra_theta, &config.probe) {
        if config.format_enabled("probe") {
            let mut text = String::from("# schema_version=1\nt,theta_probe\n");
            for (t, th) in record.times.iter().zip(extra) {
                writeln!(text, "{t},{th}").expect("string write");
            }
            write_file(&seed_dir.join("probe.csv"), &text)?;
            files.push("probe.csv".to_string());
        }
        if probe.omega_probe > 0.0 {
            probe_est = probe_estimate(extra, &record.times, probe.omega_probe).ok();
        }
    }

    let regime = if config.analysis.regime {
        let report = classify_regime(
            &record.action_derivative_series,
            &record.times,
            config.analysis.regime_tolerance,
        )?;
        write_report_json(&report, &seed_dir.join("regime.json"))?;
        files.push("regime.json".to_string());
        Some(report)
    } else {
        None
    };

    let qoppa = if config.analysis.qoppa {
        let window = config
            .analysis
            .qoppa_window
            .unwrap_or((record.times[0], *record.times.last().unwrap()));
        let aggregate = freq_shift_rms(&record.freq_shift_series);
        let fit = fit_qoppa(
            &aggregate,
            &record.action_derivative_series,
            &record.times,
            window,
        )?;
        write_report_json(fit, &seed_dir.join("qoppa.json"))?;
        files.push("qoppa.json".to_string());
        Some(fit)
    } else {
        None
    };

    if config.analysis.trajectory_embed {
        let points = config_trajectory(&record.thetas, &record.action_derivative_series)?;
        write_embedding_csv(&points, &seed_dir.join("embedding.csv"))?;
        files.push("embedding.csv".to_string());
    }

    let tail_len = (record.len() / 5).max(1);
    let tail_start = record.len() - tail_len;
    let r_tail_mean = record.r_series[tail_start..].iter().sum::<f64>() / tail_len as f64;

    Ok(SeedOutcome {
        seed,
        dir: String::new(),
        files: Vec::new(),
        final_r: *record.r_series.last().unwrap(),
        r_tail_mean: Some(r_tail_mean),
        regime,
        qoppa,
        sync_time: None,
        probe_estimate: probe_est,
        perturbations: out.applied,
    })
}

fn run_seed_pulse(
    config: &ExperimentConfig,
    net: &Network,
    seed: u64,
    seed_dir: &Path,
    files: &mut Vec<String>,
) -> Result<SeedOutcome> {
    let n = net.n();
    let pulse_cfg = config
        .pulse
        .as_ref()
        .ok_or_else(|| Error::Config("[pulse] section missing".into()))?;
    let params = PulseParams {
        p_send: pulse_cfg.p_send,
        alpha: pulse_cfg.alpha,
        threshold: pulse_cfg.threshold,
    }
    .validated()?;

    let periods = periods_from_omega(net.omega())?;
    let mut rng = initial_phase_rng(seed);
    let phi: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let init = CircleState::new(phi, periods, 0.0)?;

    let out = run_pulse_scheduled(
        net,
        &params,
        &init,
        config.dynamics.t_max,
        seed,
        &config.perturbations,
    )?;

    if config.format_enabled("events") {
        write_event_csv(&out.events, seed_dir.join("events.csv"))?;
        files.push("events.csv".to_string());
        write_event_deltas_json(&out.events, seed_dir.join("event_deltas.json"))?;
        files.push("event_deltas.json".to_string());
    }

    if config.format_enabled("signaling") {
        let t_max = config.dynamics.t_max;
        let mean_period = init.period.iter().sum::<f64>() / n as f64;
        let window = config
            .analysis
            .signaling_window
            .unwrap_or(10.0 * mean_period)
            .min(t_max);
        let grid: Vec<f64> = (0..=1000).map(|k| t_max * k as f64 / 1000.0).collect();
        let rate = firing_rate_series(&out.events, &grid, window)?;
        let s_f = signaling_action(&rate, &grid)?;
        let mut text = String::from("# schema_version=1\nt,p_send_rate,S_f\n");
        for k in 0..grid.len() {
            writeln!(text, "{},{},{}", grid[k], rate[k], s_f[k]).expect("string write");
        }
        write_file(&seed_dir.join("signaling.csv"), &text)?;
        files.push("signaling.csv".to_string());
    }

    // Coherence of the final circle phases, mapped onto angles.
    let angles: Vec<f64> = out
        .final_state
        .phi
        .iter()
        .map(|p| p * std::f64::consts::TAU)
        .collect();
    let final_r = order_parameter(&PhaseState::new(angles, 0.0)).r;

    Ok(SeedOutcome {
        seed,
        dir: String::new(),
        files: Vec::new(),
        final_r,
        r_tail_mean: None,
        regime: None,
        qoppa: None,
        sync_time: out.sync_time,
        probe_estimate: None,
        perturbations: out.applied,
    })
}

// ---------------------------------------------------------------------------
// Figure export
// ---------------------------------------------------------------------------

/// Plot-ready exports from a recorded seed directory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Action derivative over time: `t,dSdt`.
    Fig6,
    /// Per-node frequency shifts over time: `t,domega_0..`.
    Fig7,
    /// Configuration-space trajectory projection: `x,y,color`.
    Fig8,
    /// Final phase snapshot on the unit circle: `cos_theta,sin_theta`.
    PhaseCircle,
}

impl std::str::FromStr for Figure {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig6" => Ok(Figure::Fig6),
            "fig7" => Ok(Figure::Fig7),
            "fig8" => Ok(Figure::Fig8),
            "phase-circle" => Ok(Figure::PhaseCircle),
            other => Err(Error::Parameter {
                name: "figure",
                reason: format!("`{other}` is not one of fig6|fig7|fig8|phase-circle"),
            }),
        }
    }
}

/// Write one figure's plot data from a seed directory.
pub fn export_figure_data(
    record_dir: impl AsRef<Path>,
    figure: Figure,
    out_path: impl AsRef<Path>,
) -> Result<()> {
    let dir = record_dir.as_ref();
    let out_path = out_path.as_ref();
    match figure {
        Figure::Fig6 => {
            let table = read_trajectory_csv(existing(dir.join("trajectory.csv"), "trajectory")?)?;
            let mut text = String::from("# schema_version=1\nt,dSdt\n");
            for (t, d) in table.times.iter().zip(&table.ds_dt) {
                writeln!(text, "{t},{d}").expect("string write");
            }
            write_file(out_path, &text)
        }
        Figure::Fig7 => {
            let table = read_nodes_csv(existing(dir.join("nodes.csv"), "nodes")?)?;
            let n = table.freq_shifts.first().map_or(0, Vec::len);
            let mut text = String::from("# schema_version=1\nt");
            for i in 0..n {
                write!(text, ",domega_{i}").expect("string write");
            }
            text.push('\n');
            for (t, row) in table.times.iter().zip(&table.freq_shifts) {
                write!(text, "{t}").expect("string write");
                for v in row {
                    write!(text, ",{v}").expect("string write");
                }
                text.push('\n');
            }
            write_file(out_path, &text)
        }
        Figure::Fig8 => {
            let path = dir.join("embedding.csv");
            if !path.exists() {
                return Err(Error::MissingData(
                    "embedding.csv not found; enable analysis.trajectory_embed and rerun".into(),
                ));
            }
            let points = read_embedding_csv(&path)?;
            write_embedding_csv(&points, out_path)
        }
        Figure::PhaseCircle => {
            let table = read_nodes_csv(existing(dir.join("nodes.csv"), "nodes")?)?;
            let last = table
                .thetas
                .last()
                .ok_or_else(|| Error::MissingData("nodes.csv has no rows".into()))?;
            let mut text = String::from("# schema_version=1\ncos_theta,sin_theta\n");
            for th in last {
                writeln!(text, "{},{}", th.cos(), th.sin()).expect("string write");
            }
            write_file(out_path, &text)
        }
    }
}

fn existing(path: PathBuf, format: &str) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingData(format!(
            "{} not found; enable the `{format}` entry in output.formats and rerun",
            path.display()
        )))
    }
}
