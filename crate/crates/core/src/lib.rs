//! Tick-level price volatility from bivariate (marked) Hawkes processes.
//!
//! The crate covers the whole pipeline: mid-price filtering of quote
//! streams ([`marketdata`]), maximum-likelihood fitting and diagnostics
//! ([`estimate`]), closed-form stationary moments and count variances
//! ([`moments`]), an Ogata-thinning simulator used as a Monte Carlo oracle
//! ([`simulate`]), and the downstream daily analyses ([`econometrics`]).

pub mod econometrics;
pub mod error;
pub mod events;
pub mod marketdata;
pub mod mat2;
pub mod model;
pub mod estimate;
pub mod moments;
pub mod optim;
pub mod par;
pub mod simulate;

pub use error::{Error, Result};
pub use mat2::{Mat2, Vec2};
pub use model::{Constraint, HawkesParams, MarkSummaries, MarkedHawkesParams};
