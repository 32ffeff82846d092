//! Config-driven predictive multiplicity audits on top of
//! `multiplicity-core`: run an audit, score new rows against a saved set,
//! compare sets, and probe training sample sizes.

pub mod commands;
pub mod config;
mod error;
pub mod report;

pub use error::AuditError;
