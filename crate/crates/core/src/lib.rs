//! Energy versus thermal-comfort optimization for centralized air-conditioning
//! and mechanical ventilation (ACMV) plants.
//!
//! The crate is organized bottom-up:
//!
//! * [`nnmodel`]: one-hidden-layer sigmoid networks, used for plant surrogates
//!   and the skin-temperature comfort classifier.
//! * [`plant`]: the synthetic ground-truth plant (energy, air temperature, air
//!   velocity as functions of the three motor frequencies).
//! * [`comfort`]: Fanger PMV and the skin-temperature based predictive thermal
//!   state (PTS) classifier.
//! * [`objective`]: the λ-weighted normalized objective, energy saving rate and
//!   economics.
//! * [`bgpo`] and [`afa`]: the two black-box optimizers.
//! * [`regression`]: λ sweeps and cubic regression of the optima.
//! * [`harness`]: scenarios, seeded experiment runs, group statistics, reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod afa;
pub mod bgpo;
pub mod comfort;
mod error;
pub mod harness;
pub mod nnmodel;
pub mod objective;
pub mod plant;
pub mod regression;
pub mod rng;

pub use error::{Error, Result};
pub use plant::{Bounds, OperatingPoint};
