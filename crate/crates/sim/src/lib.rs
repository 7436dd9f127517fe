//! Monte Carlo harness around the two-stage IRS cascade estimator.
//!
//! [`config`] loads and validates sweep definitions (including the three
//! built-in presets), [`runner`] executes seeded parallel trials, [`metrics`]
//! turns estimates into the reported error figures, and [`emit`] writes the
//! deterministic CSV/JSON outputs.

pub mod config;
pub mod emit;
pub mod metrics;
pub mod runner;
