//! Experiment runner behind the `ghzchain` binary: JSON configs in, CSV or
//! JSON artifacts out.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("input: {0}")]
    Input(String),

    #[error("output: {0}")]
    Output(String),

    #[error(transparent)]
    Core(#[from] ghzchain::Error),
}

impl CliError {
    /// 2 for usage, config and input problems; 3 for resource and numerical guards.
    pub fn exit_code(&self) -> i32 {
        use ghzchain::Error as E;
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Output(_) => 3,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) => 2,
                E::TooLarge { .. } | E::NotNormalized { .. } | E::DegenerateFit(_) | E::Numerical(_) => 3,
            },
        }
    }
}
