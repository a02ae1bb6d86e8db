#ifndef OSCNET_H
#define OSCNET_H

/* Generated by cbindgen from the oscnet-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum {
  OSCNET_STATUS_OK = 0,
  OSCNET_STATUS_NULL_POINTER = 1,
  OSCNET_STATUS_INVALID_ARGUMENT = 2,
  OSCNET_STATUS_PARSE_ERROR = 3,
  OSCNET_STATUS_IO_ERROR = 4,
  OSCNET_STATUS_NUMERIC_ERROR = 5,
  OSCNET_STATUS_INSUFFICIENT_DATA = 6,
} OscnetStatus;

/**
 * Built-in topology kinds.
 */
typedef enum {
  /**
   * All-to-all; `param` unused.
   */
  OSCNET_TOPOLOGY_COMPLETE = 0,
  /**
   * Ring with `param` neighbors per side (rounded to an integer).
   */
  OSCNET_TOPOLOGY_RING = 1,
  /**
   * Independent edge probability `param`.
   */
  OSCNET_TOPOLOGY_ERDOS_RENYI = 2,
} OscnetTopology;

/**
 * Natural-frequency distributions.
 */
typedef enum {
  /**
   * omega_i = a for all i; `b` unused.
   */
  OSCNET_OMEGA_CONSTANT = 0,
  /**
   * omega_i uniform on [a, b].
   */
  OSCNET_OMEGA_UNIFORM = 1,
  /**
   * omega_i normal with mean a, standard deviation b.
   */
  OSCNET_OMEGA_NORMAL = 2,
} OscnetOmega;

/**
 * Mean-field switch for [`oscnet_network_build`]: scale the uniform
 * coupling by 1/n.
 */
typedef enum {
  /**
   * On for complete graphs, off otherwise.
   */
  OSCNET_MEAN_FIELD_DEFAULT = 0,
  OSCNET_MEAN_FIELD_OFF = 1,
  OSCNET_MEAN_FIELD_ON = 2,
} OscnetMeanField;

/**
 * Integration schemes.
 */
typedef enum {
  OSCNET_INTEGRATOR_EULER = 0,
  OSCNET_INTEGRATOR_RK4 = 1,
} OscnetIntegrator;

/**
 * Scalar series recorded along a continuous-model run.
 */
typedef enum {
  OSCNET_SERIES_TIMES = 0,
  OSCNET_SERIES_ORDER_PARAMETER = 1,
  OSCNET_SERIES_MEAN_PHASE = 2,
  OSCNET_SERIES_LAGRANGIAN = 3,
  OSCNET_SERIES_ACTION = 4,
  OSCNET_SERIES_ACTION_DERIVATIVE = 5,
} OscnetSeries;

/**
 * Opaque oscillator network.
 */
typedef struct OscnetNetwork OscnetNetwork;

/**
 * Opaque pulse-model run (event log + outcome).
 */
typedef struct OscnetPulseRun OscnetPulseRun;

/**
 * Opaque continuous-model trajectory record.
 */
typedef struct OscnetRecord OscnetRecord;

/**
 * Build a seeded network. `param` is the ring degree or edge probability
 * depending on the topology; `omega_a`/`omega_b` parameterize the
 * frequency distribution. On success `*out` owns the network.
 *
 * # Safety
 * `out` must point to writable storage for one pointer.
 */
OscnetStatus oscnet_network_build(OscnetTopology topology,
                                  uintptr_t n,
                                  double coupling,
                                  double param,
                                  OscnetOmega omega,
                                  double omega_a,
                                  double omega_b,
                                  uint64_t seed,
                                  OscnetMeanField mean_field,
                                  OscnetNetwork **out);

/**
 * Load a network from a `.json` schema file or edge-list text.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
OscnetStatus oscnet_network_load(const char *path, OscnetNetwork **out);

/**
 * Save a network (`.json` schema, or edge list plus `.omega` sidecar).
 *
 * # Safety
 * `net` must be a live handle from this library; `path` NUL-terminated.
 */
OscnetStatus oscnet_network_save(const OscnetNetwork *net, const char *path);

/**
 * Number of oscillators, or 0 for a null handle.
 *
 * # Safety
 * `net` must be null or a live handle from this library.
 */
uintptr_t oscnet_network_size(const OscnetNetwork *net);

/**
 * Read one coupling entry (strength with which `j` drives `i`).
 *
 * # Safety
 * `net` must be a live handle; `out` writable.
 */
OscnetStatus oscnet_network_coupling(const OscnetNetwork *net,
                                     uintptr_t i,
                                     uintptr_t j,
                                     double *out);

/**
 * Release a network handle (null is a no-op).
 *
 * # Safety
 * `net` must be null or an unreleased handle from this library.
 */
void oscnet_network_free(OscnetNetwork *net);

/**
 * Simulate the continuous model. `init_thetas` may be null, in which case
 * initial phases are drawn uniformly from the seeded stream (matching the
 * CLI); otherwise it must hold `n` values.
 *
 * # Safety
 * `net` must be a live handle; `init_thetas` null or `n` readable
 * doubles; `out` writable.
 */
OscnetStatus oscnet_run_kuramoto(const OscnetNetwork *net,
                                 const double *init_thetas,
                                 double dt,
                                 double t_max,
                                 OscnetIntegrator integrator,
                                 uint64_t seed,
                                 OscnetRecord **out);

/**
 * Number of samples in a record (0 for null).
 *
 * # Safety
 * `record` must be null or a live handle.
 */
uintptr_t oscnet_record_len(const OscnetRecord *record);

/**
 * Number of oscillators in a record (0 for null).
 *
 * # Safety
 * `record` must be null or a live handle.
 */
uintptr_t oscnet_record_nodes(const OscnetRecord *record);

/**
 * Copy one scalar series into `buf` (up to `len` elements); the record
 * length gives the full size.
 *
 * # Safety
 * `record` must be a live handle; `buf` must hold `len` writable doubles.
 */
OscnetStatus oscnet_record_series(const OscnetRecord *record,
                                  OscnetSeries which,
                                  double *buf,
                                  uintptr_t len);

/**
 * Copy one node's unwrapped phase series into `buf`.
 *
 * # Safety
 * `record` must be a live handle; `buf` must hold `len` writable doubles.
 */
OscnetStatus oscnet_record_theta(const OscnetRecord *record,
                                 uintptr_t node,
                                 double *buf,
                                 uintptr_t len);

/**
 * Release a record handle (null is a no-op).
 *
 * # Safety
 * `record` must be null or an unreleased handle.
 */
void oscnet_record_free(OscnetRecord *record);

/**
 * Simulate the pulse model with phases drawn from the seeded stream and
 * periods `2*pi / omega_i` (all frequencies must be positive).
 *
 * # Safety
 * `net` must be a live handle; `out` writable.
 */
OscnetStatus oscnet_run_pulse(const OscnetNetwork *net,
                              double p_send,
                              double alpha,
                              double threshold,
                              double t_max,
                              uint64_t seed,
                              OscnetPulseRun **out);

/**
 * Number of logged events (0 for null).
 *
 * # Safety
 * `run` must be null or a live handle.
 */
uintptr_t oscnet_pulse_event_count(const OscnetPulseRun *run);

/**
 * Read one event from the log.
 *
 * # Safety
 * `run` must be a live handle; the three out pointers must be writable.
 */
OscnetStatus oscnet_pulse_event(const OscnetPulseRun *run,
                                uintptr_t index,
                                double *out_time,
                                uintptr_t *out_source,
                                bool *out_suppressed);

/**
 * Fetch the synchronization time; `*out_synced` reports whether one
 * exists (in which case `*out_time` holds it, otherwise NaN).
 *
 * # Safety
 * `run` must be a live handle; both out pointers writable.
 */
OscnetStatus oscnet_pulse_sync_time(const OscnetPulseRun *run, double *out_time, bool *out_synced);

/**
 * Release a pulse-run handle (null is a no-op).
 *
 * # Safety
 * `run` must be null or an unreleased handle.
 */
void oscnet_pulse_free(OscnetPulseRun *run);

/**
 * Order parameter of a phase vector.
 *
 * # Safety
 * `thetas` must hold `n` readable doubles; `out_r`/`out_psi` writable.
 */
OscnetStatus oscnet_order_parameter(const double *thetas,
                                    uintptr_t n,
                                    double *out_r,
                                    double *out_psi);

/**
 * Attenuation action `-gamma * t`.
 */
double oscnet_attenuation_action(double gamma, double t);

/**
 * Surviving intensity fraction `exp(-gamma * t)`.
 */
double oscnet_intensity_ratio(double gamma, double t);

/**
 * Wavelength-shift proxy; errors when `qoppa * ds_dt` is zero.
 *
 * # Safety
 * `out` must be writable.
 */
OscnetStatus oscnet_wavelength_shift(double ds_dt, double qoppa, double *out);

/**
 * The last error message on this thread as a newly allocated string;
 * free it with [`oscnet_string_free`]. Empty when no error is pending.
 */
char *oscnet_last_error_message(void);

/**
 * Free a string returned by this library (null is a no-op).
 *
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void oscnet_string_free(char *s);

/**
 * Library version as a static string (do not free).
 */
const char *oscnet_version(void);

#endif  /* OSCNET_H */
