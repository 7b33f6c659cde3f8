//! Experiment runner, verification oracles and CLI plumbing for `upriv`.

pub mod audit;
pub mod catalog;
pub mod cli;
pub mod config;
pub mod experiment;
pub mod fixture;
pub mod quadrature;

pub use audit::{noise_gof, smoothness_audit, AuditFailure, GofReport, SmoothnessReport};
pub use catalog::{Method, Workload};
pub use experiment::{run_experiment, Cell, ExperimentSpec, ResultRow};
pub use fixture::{adversarial_fixture, AdversarialFixture};
