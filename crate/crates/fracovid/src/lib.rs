//! Fractional-order modeling toolkit for the eight-compartment SEIPAHRF
//! COVID-19 model with Caputo derivatives.
//!
//! The crate provides:
//!
//! - [`solver`] — an Adams–Bashforth–Moulton PECE scheme for Caputo
//!   fractional initial value problems, forward and time-reversed, plus a
//!   Mittag–Leffler evaluator used as a verification oracle.
//! - [`model`] — the dimension-consistent SEIPAHRF right-hand sides, basic
//!   and controlled reproduction numbers, and the Portugal third-wave
//!   initial conditions.
//! - [`sensitivity`] — normalized forward sensitivity indices of `R0` with
//!   respect to each parameter and to the derivative order.
//! - [`data`] / [`fit`] — reported-case ingestion with 5-day trailing means
//!   and least-squares fitting of the derivative order and reporting scale.
//! - [`focp`] — the vaccination + preventive-measures optimal control
//!   problem solved by a forward-backward PECE sweep.
//! - [`report`] — post-optimal cost-effectiveness measures (averted cases,
//!   effectiveness, total cost, ACER).
//! - [`config`] — the TOML run configuration shared by the `fracovid` CLI.

pub mod config;
pub mod data;
pub mod error;
pub mod fit;
pub mod focp;
pub mod model;
pub mod nelder_mead;
pub mod report;
pub mod sensitivity;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use model::{CompartmentState, ContactReductionSchedule, ModelParams};
pub use solver::{FractionalOrder, TimeGrid, Trajectory};
