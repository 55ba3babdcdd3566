//! Probabilistic abduction and execution for Raven-style progressive matrices.
//!
//! Pipeline: [`generator`] builds symbolic puzzles, [`perception`] turns panels
//! into noisy per-slot beliefs, [`scene`] marginalizes them into panel
//! attribute distributions, [`abduction`] scores the rule catalog,
//! [`execution`] predicts the missing panel and [`selection`] picks the
//! candidate with minimum Jensen–Shannon divergence.

pub mod domain;
pub mod error;
pub mod generator;
pub mod harness;
pub mod logspace;
pub mod perception;
pub mod scene;
pub mod abduction;
pub mod execution;
pub mod render;
pub mod selection;

pub use error::{Error, Result};
