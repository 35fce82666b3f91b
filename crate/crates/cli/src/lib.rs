//! Scenario files, solver dispatch and CSV output for the `hedgecost` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod output;
pub mod run;
pub mod scenario;

pub use error::{CliError, Result};
pub use scenario::{parse_scenario, parse_str, Scenario};
