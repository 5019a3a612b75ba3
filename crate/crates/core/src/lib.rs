//! Numerical laboratory for the axisymmetric Hall-MHD system without
//! resistivity, written in the variables `Omega = omega_theta / r` and
//! `Pi = b_theta / r`.
//!
//! The pieces are layered bottom-up: [`grid`] (mesh and discrete calculus),
//! [`elliptic`] (stream function and velocity), [`dynamics`] (time stepping),
//! [`tracker`] (on-axis characteristic and blow-up estimate), [`monitors`]
//! (a priori estimates as runtime checks), [`initdata`], [`oracle1d`] (exact
//! 1-D reference) and [`io`] (configuration, outputs and subcommands).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod elliptic;
pub mod error;
pub mod grid;
pub mod initdata;
pub mod io;
pub mod monitors;
pub mod oracle1d;
pub mod tracker;

pub use error::{Error, Result};
