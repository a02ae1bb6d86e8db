//! C ABI for the oscnet simulator.
//!
//! Conventions:
//! - Opaque handles (`OscnetNetwork`, `OscnetRecord`, `OscnetPulseRun`) own
//!   their Rust values; release them with the matching `*_free` function.
//! - Every fallible call returns an [`OscnetStatus`]; on failure the
//!   thread-local message from [`oscnet_last_error_message`] explains it.
//! - Output buffers are caller-allocated; lengths are element counts.
//!
//! The header `include/oscnet.h` is generated at build time by cbindgen.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::PathBuf;

use oscnet::action::{wavelength_shift, TrajectoryRecord};
use oscnet::graph::{
    build_topology, load_network, save_network, Network, OmegaSpec, TopologyKind, TopologySpec,
};
use oscnet::kuramoto::{order_parameter, Integrator, PhaseState};
use oscnet::pulse::{periods_from_omega, run_pulse_sim, CircleState, PulseParams, PulseRun};
use oscnet::runner::simulate_kuramoto;
use rand::Rng;
use rand::SeedableRng;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(message: impl Into<String>) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message.into());
}

fn clear_error() {
    LAST_ERROR.with(|slot| slot.borrow_mut().clear());
}

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscnetStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    IoError = 4,
    NumericError = 5,
    InsufficientData = 6,
}

fn status_of(err: &oscnet::Error) -> OscnetStatus {
    use oscnet::Error as E;
    match err {
        E::Parameter { .. } | E::Index { .. } | E::Dimension { .. } | E::Config(_) => {
            OscnetStatus::InvalidArgument
        }
        E::NetworkFile(_) | E::Json(_) => OscnetStatus::ParseError,
        E::Io { .. } | E::MissingData(_) => OscnetStatus::IoError,
        E::NumericBlowup { .. }
        | E::DivisionUndefined(_)
        | E::FitUndefined(_)
        | E::UndefinedShift => OscnetStatus::NumericError,
        E::EmptySelection | E::InsufficientData(_) => OscnetStatus::InsufficientData,
    }
}

fn fail(err: oscnet::Error) -> OscnetStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

/// Opaque oscillator network.
pub struct OscnetNetwork(Network);

/// Opaque continuous-model trajectory record.
pub struct OscnetRecord(TrajectoryRecord);

/// Opaque pulse-model run (event log + outcome).
pub struct OscnetPulseRun(PulseRun);

/// Built-in topology kinds.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscnetTopology {
    /// All-to-all; `param` unused.
    Complete = 0,
    /// Ring with `param` neighbors per side (rounded to an integer).
    Ring = 1,
    /// Independent edge probability `param`.
    ErdosRenyi = 2,
}

/// Natural-frequency distributions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscnetOmega {
    /// omega_i = a for all i; `b` unused.
    Constant = 0,
    /// omega_i uniform on [a, b].
    Uniform = 1,
    /// omega_i normal with mean a, standard deviation b.
    Normal = 2,
}

/// Integration schemes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscnetIntegrator {
    Euler = 0,
    Rk4 = 1,
}

/// Scalar series recorded along a continuous-model run.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscnetSeries {
    Times = 0,
    OrderParameter = 1,
    MeanPhase = 2,
    Lagrangian = 3,
    Action = 4,
    ActionDerivative = 5,
}

/// Mean-field switch for [`oscnet_network_build`]: scale the uniform
/// coupling by 1/n.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscnetMeanField {
    /// On for complete graphs, off otherwise.
    Default = 0,
    Off = 1,
    On = 2,
}

unsafe fn path_from(ptr: *const c_char) -> Result<PathBuf, OscnetStatus> {
    if ptr.is_null() {
        set_error("path is null");
        return Err(OscnetStatus::NullPointer);
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(OscnetStatus::InvalidArgument)
        }
    }
}

/// Build a seeded network. `param` is the ring degree or edge probability
/// depending on the topology; `omega_a`/`omega_b` parameterize the
/// frequency distribution. On success `*out` owns the network.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn oscnet_network_build(
    topology: OscnetTopology,
    n: usize,
    coupling: f64,
    param: f64,
    omega: OscnetOmega,
    omega_a: f64,
    omega_b: f64,
    seed: u64,
    mean_field: OscnetMeanField,
    out: *mut *mut OscnetNetwork,
) -> OscnetStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return OscnetStatus::NullPointer;
    }
    clear_error();
    let kind = match topology {
        OscnetTopology::Complete => TopologyKind::Complete,
        OscnetTopology::Ring => TopologyKind::Ring {
            k: param.round().max(0.0) as usize,
        },
        OscnetTopology::ErdosRenyi => TopologyKind::ErdosRenyi { p: param },
    };
    let omega_spec = match omega {
        OscnetOmega::Constant => OmegaSpec::Constant(omega_a),
        OscnetOmega::Uniform => OmegaSpec::Uniform {
            lo: omega_a,
            hi: omega_b,
        },
        OscnetOmega::Normal => OmegaSpec::Normal {
            mean: omega_a,
            sd: omega_b,
        },
    };
    let spec = TopologySpec {
        kind,
        n,
        coupling,
        omega: omega_spec,
        seed,
        mean_field: match mean_field {
            OscnetMeanField::Default => None,
            OscnetMeanField::Off => Some(false),
            OscnetMeanField::On => Some(true),
        },
    };
    match build_topology(&spec) {
        Ok(net) => {
            unsafe { *out = Box::into_raw(Box::new(OscnetNetwork(net))) };
            OscnetStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Load a network from a `.json` schema file or edge-list text.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oscnet_network_load(
    path: *const c_char,
    out: *mut *mut OscnetNetwork,
) -> OscnetStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return OscnetStatus::NullPointer;
    }
    clear_error();
    let path = match unsafe { path_from(path) } {
        Ok(p) => p,
        Err(status) => return status,
    };
    match load_network(&path) {
        Ok(net) => {
            unsafe { *out = Box::into_raw(Box::new(OscnetNetwork(net))) };
            OscnetStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Save a network (`.json` schema, or edge list plus `.omega` sidecar).
///
/// # Safety
/// `net` must be a live handle from this library; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn oscnet_network_save(
    net: *const OscnetNetwork,
    path: *const c_char,
) -> OscnetStatus {
    let Some(net) = (unsafe { net.as_ref() }) else {
        set_error("network handle is null");
        return OscnetStatus::NullPointer;
    };
    clear_error();
    let path = match unsafe { path_from(path) } {
        Ok(p) => p,
        Err(status) => return status,
    };
    match save_network(&net.0, &path) {
        Ok(()) => OscnetStatus::Ok,
        Err(e) => fail(e),
    }
}

/// Number of oscillators, or 0 for a null handle.
///
/// # Safety
/// `net` must be null or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn oscnet_network_size(net: *const OscnetNetwork) -> usize {
    unsafe { net.as_ref() }.map_or(0, |n| n.0.n())
}

/// Read one coupling entry (strength with which `j` drives `i`).
///
/// # Safety
/// `net` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oscnet_network_coupling(
    net: *const OscnetNetwork,
    i: usize,
    j: usize,
    out: *mut f64,
) -> OscnetStatus {
    let Some(net) = (unsafe { net.as_ref() }) else {
        set_error("network handle is null");
        return OscnetStatus::NullPointer;
    };
    if out.is_null() {
        set_error("out pointer is null");
        return OscnetStatus::NullPointer;
    }
    if i >= net.0.n() || j >= net.0.n() {
        set_error(format!(
            "index ({i}, {j}) out of range for n = {}",
            net.0.n()
        ));
        return OscnetStatus::InvalidArgument;
    }
    unsafe { *out = net.0.coupling(i, j) };
    OscnetStatus::Ok
}

/// Release a network handle (null is a no-op).
///
/// # Safety
/// `net` must be null or an unreleased handle from this library.
#[no_mangle]
pub unsafe extern "C" fn oscnet_network_free(net: *mut OscnetNetwork) {
    if !net.is_null() {
        drop(unsafe { Box::from_raw(net) });
    }
}

/// Simulate the continuous model. `init_thetas` may be null, in which case
/// initial phases are drawn uniformly from the seeded stream (matching the
/// CLI); otherwise it must hold `n` values.
///
/// # Safety
/// `net` must be a live handle; `init_thetas` null or `n` readable
/// doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oscnet_run_kuramoto(
    net: *const OscnetNetwork,
    init_thetas: *const f64,
    dt: f64,
    t_max: f64,
    integrator: OscnetIntegrator,
    seed: u64,
    out: *mut *mut OscnetRecord,
) -> OscnetStatus {
    let Some(net) = (unsafe { net.as_ref() }) else {
        set_error("network handle is null");
        return OscnetStatus::NullPointer;
    };
    if out.is_null() {
        set_error("out pointer is null");
        return OscnetStatus::NullPointer;
    }
    clear_error();
    let n = net.0.n();
    let theta = if init_thetas.is_null() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(3);
        (0..n)
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect()
    } else {
        unsafe { std::slice::from_raw_parts(init_thetas, n) }.to_vec()
    };
    let method = match integrator {
        OscnetIntegrator::Euler => Integrator::Euler,
        OscnetIntegrator::Rk4 => Integrator::Rk4,
    };
    match simulate_kuramoto(&net.0, &PhaseState::new(theta, 0.0), dt, t_max, method) {
        Ok(record) => {
            unsafe { *out = Box::into_raw(Box::new(OscnetRecord(record))) };
            OscnetStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Number of samples in a record (0 for null).
///
/// # Safety
/// `record` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn oscnet_record_len(record: *const OscnetRecord) -> usize {
    unsafe { record.as_ref() }.map_or(0, |r| r.0.len())
}

/// Number of oscillators in a record (0 for null).
///
/// # Safety
/// `record` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn oscnet_record_nodes(record: *const OscnetRecord) -> usize {
    unsafe { record.as_ref() }.map_or(0, |r| r.0.n())
}

/// Copy one scalar series into `buf` (up to `len` elements); the record
/// length gives the full size.
///
/// # Safety
/// `record` must be a live handle; `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn oscnet_record_series(
    record: *const OscnetRecord,
    which: OscnetSeries,
    buf: *mut f64,
    len: usize,
) -> OscnetStatus {
    let Some(record) = (unsafe { record.as_ref() }) else {
        set_error("record handle is null");
        return OscnetStatus::NullPointer;
    };
    if buf.is_null() {
        set_error("buffer is null");
        return OscnetStatus::NullPointer;
    }
    let series: &[f64] = match which {
        OscnetSeries::Times => &record.0.times,
        OscnetSeries::OrderParameter => &record.0.r_series,
        OscnetSeries::MeanPhase => &record.0.psi_series,
        OscnetSeries::Lagrangian => &record.0.lagrangian_series,
        OscnetSeries::Action => &record.0.action_series,
        OscnetSeries::ActionDerivative => &record.0.action_derivative_series,
    };
    let count = series.len().min(len);
    unsafe { std::ptr::copy_nonoverlapping(series.as_ptr(), buf, count) };
    OscnetStatus::Ok
}

/// Copy one node's unwrapped phase series into `buf`.
///
/// # Safety
/// `record` must be a live handle; `buf` must hold `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn oscnet_record_theta(
    record: *const OscnetRecord,
    node: usize,
    buf: *mut f64,
    len: usize,
) -> OscnetStatus {
    let Some(record) = (unsafe { record.as_ref() }) else {
        set_error("record handle is null");
        return OscnetStatus::NullPointer;
    };
    if buf.is_null() {
        set_error("buffer is null");
        return OscnetStatus::NullPointer;
    }
    if node >= record.0.n() {
        set_error(format!("node {node} out of range for n = {}", record.0.n()));
        return OscnetStatus::InvalidArgument;
    }
    let count = record.0.len().min(len);
    for (k, row) in record.0.thetas.iter().take(count).enumerate() {
        unsafe { *buf.add(k) = row[node] };
    }
    OscnetStatus::Ok
}

/// Release a record handle (null is a no-op).
///
/// # Safety
/// `record` must be null or an unreleased handle.
#[no_mangle]
pub unsafe extern "C" fn oscnet_record_free(record: *mut OscnetRecord) {
    if !record.is_null() {
        drop(unsafe { Box::from_raw(record) });
    }
}

/// Simulate the pulse model with phases drawn from the seeded stream and
/// periods `2*pi / omega_i` (all frequencies must be positive).
///
/// # Safety
/// `net` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn oscnet_run_pulse(
    net: *const OscnetNetwork,
    p_send: f64,
    alpha: f64,
    threshold: f64,
    t_max: f64,
    seed: u64,
    out: *mut *mut OscnetPulseRun,
) -> OscnetStatus {
    let Some(net) = (unsafe { net.as_ref() }) else {
        set_error("network handle is null");
        return OscnetStatus::NullPointer;
    };
    if out.is_null() {
        set_error("out pointer is null");
        return OscnetStatus::NullPointer;
    }
    clear_error();
    let run = (|| -> oscnet::Result<PulseRun> {
        let params = PulseParams {
            p_send,
            alpha,
            threshold,
        }
        .validated()?;
        let periods = periods_from_omega(net.0.omega())?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(3);
        let phi: Vec<f64> = (0..net.0.n()).map(|_| rng.random::<f64>()).collect();
        let init = CircleState::new(phi, periods, 0.0)?;
        run_pulse_sim(&net.0, &params, &init, t_max, seed)
    })();
    match run {
        Ok(run) => {
            unsafe { *out = Box::into_raw(Box::new(OscnetPulseRun(run))) };
            OscnetStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Number of logged events (0 for null).
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn oscnet_pulse_event_count(run: *const OscnetPulseRun) -> usize {
    unsafe { run.as_ref() }.map_or(0, |r| r.0.events.len())
}

/// Read one event from the log.
///
/// # Safety
/// `run` must be a live handle; the three out pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn oscnet_pulse_event(
    run: *const OscnetPulseRun,
    index: usize,
    out_time: *mut f64,
    out_source: *mut usize,
    out_suppressed: *mut bool,
) -> OscnetStatus {
    let Some(run) = (unsafe { run.as_ref() }) else {
        set_error("pulse run handle is null");
        return OscnetStatus::NullPointer;
    };
    if out_time.is_null() || out_source.is_null() || out_suppressed.is_null() {
        set_error("out pointer is null");
        return OscnetStatus::NullPointer;
    }
    let Some(event) = run.0.events.get(index) else {
        set_error(format!(
            "event index {index} out of range for {} events",
            run.0.events.len()
        ));
        return OscnetStatus::InvalidArgument;
    };
    unsafe {
        *out_time = event.t;
        *out_source = event.source;
        *out_suppressed = event.suppressed;
    }
    OscnetStatus::Ok
}

/// Fetch the synchronization time; `*out_synced` reports whether one
/// exists (in which case `*out_time` holds it, otherwise NaN).
///
/// # Safety
/// `run` must be a live handle; both out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn oscnet_pulse_sync_time(
    run: *const OscnetPulseRun,
    out_time: *mut f64,
    out_synced: *mut bool,
) -> OscnetStatus {
    let Some(run) = (unsafe { run.as_ref() }) else {
        set_error("pulse run handle is null");
        return OscnetStatus::NullPointer;
    };
    if out_time.is_null() || out_synced.is_null() {
        set_error("out pointer is null");
        return OscnetStatus::NullPointer;
    }
    unsafe {
        match run.0.sync_time {
            Some(t) => {
                *out_time = t;
                *out_synced = true;
            }
            None => {
                *out_time = f64::NAN;
                *out_synced = false;
            }
        }
    }
    OscnetStatus::Ok
}

/// Release a pulse-run handle (null is a no-op).
///
/// # Safety
/// `run` must be null or an unreleased handle.
#[no_mangle]
pub unsafe extern "C" fn oscnet_pulse_free(run: *mut OscnetPulseRun) {
    if !run.is_null() {
        drop(unsafe { Box::from_raw(run) });
    }
}

/// Order parameter of a phase vector.
///
/// # Safety
/// `thetas` must hold `n` readable doubles; `out_r`/`out_psi` writable.
#[no_mangle]
pub unsafe extern "C" fn oscnet_order_parameter(
    thetas: *const f64,
    n: usize,
    out_r: *mut f64,
    out_psi: *mut f64,
) -> OscnetStatus {
    if thetas.is_null() || out_r.is_null() || out_psi.is_null() {
        set_error("pointer argument is null");
        return OscnetStatus::NullPointer;
    }
    if n == 0 {
        set_error("n must be >= 1");
        return OscnetStatus::InvalidArgument;
    }
    let theta = unsafe { std::slice::from_raw_parts(thetas, n) };
    let op = order_parameter(&PhaseState::new(theta.to_vec(), 0.0));
    unsafe {
        *out_r = op.r;
        *out_psi = op.psi;
    }
    OscnetStatus::Ok
}

/// Attenuation action `-gamma * t`.
#[no_mangle]
pub extern "C" fn oscnet_attenuation_action(gamma: f64, t: f64) -> f64 {
    oscnet::action::attenuation_action(gamma, t)
}

/// Surviving intensity fraction `exp(-gamma * t)`.
#[no_mangle]
pub extern "C" fn oscnet_intensity_ratio(gamma: f64, t: f64) -> f64 {
    oscnet::action::intensity_ratio(gamma, t)
}

/// Wavelength-shift proxy; errors when `qoppa * ds_dt` is zero.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn oscnet_wavelength_shift(
    ds_dt: f64,
    qoppa: f64,
    out: *mut f64,
) -> OscnetStatus {
    if out.is_null() {
        set_error("out pointer is null");
        return OscnetStatus::NullPointer;
    }
    match wavelength_shift(ds_dt, qoppa) {
        Ok(w) => {
            unsafe { *out = w };
            OscnetStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// The last error message on this thread as a newly allocated string;
/// free it with [`oscnet_string_free`]. Empty when no error is pending.
#[no_mangle]
pub extern "C" fn oscnet_last_error_message() -> *mut c_char {
    let message = LAST_ERROR.with(|slot| slot.borrow().clone());
    CString::new(message).map_or(std::ptr::null_mut(), CString::into_raw)
}

/// Free a string returned by this library (null is a no-op).
///
/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn oscnet_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Library version as a static string (do not free).
#[no_mangle]
pub extern "C" fn oscnet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
