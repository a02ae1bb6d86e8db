//! Deterministic simulator for synchronization in networks of coupled
//! oscillators.
//!
//! Two dynamical models run over the same weighted directed networks:
//!
//! - continuous phase dynamics ([`kuramoto`]), integrated with Euler or RK4;
//! - an event-driven pulse model ([`pulse`]) in which oscillators ramp to a
//!   threshold, fire probabilistic signal pulses, reset, and shift their
//!   receivers' phases.
//!
//! On top of the trajectories sits an action-based diagnostic layer
//! ([`action`]): Lagrangian and accumulated action along a run, the action
//! derivative and its damping-regime classification, per-node frequency
//! shifts, the frequency-shift/action-rate regression, and a 2-D principal
//! projection of the configuration-space trajectory. The [`probe`] module
//! adds minimally disturbing observation tools: kernel-smoothed observables,
//! pre/post-selected ensemble averages, and a weakly coupled listener
//! oscillator.
//!
//! The [`config`] and [`runner`] modules bind everything into seeded,
//! reproducible experiment campaigns driven by a TOML config file; the
//! `oscnet` binary exposes them as `run`, `validate`, and `export`
//! subcommands. Identical config and seed always produce byte-identical
//! outputs.

// Validation deliberately writes `!(x > 0.0)` so that NaN fails the check;
// the suggested `x <= 0.0` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod config;
pub mod error;
pub mod graph;
pub mod kuramoto;
pub mod probe;
pub mod pulse;
pub mod runner;

pub use error::{Error, Result};
