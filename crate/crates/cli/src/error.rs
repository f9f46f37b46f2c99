// Copyright 2026 QSF Contributors
// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use crate::config::ConfigError;

/// Exit status when a requested check fails.
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    /// A library call failed; `op` names the module and operation.
    Numeric {
        op: &'static str,
        source: qsf::Error,
    },
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numeric { .. } => EXIT_NUMERIC,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Numeric { op, source } => write!(f, "numeric failure in {op}: {source}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

/// Tags library errors with the operation that raised them.
pub trait Tag<T> {
    fn op(self, op: &'static str) -> Result<T, CliError>;
}

impl<T> Tag<T> for qsf::Result<T> {
    fn op(self, op: &'static str) -> Result<T, CliError> {
        self.map_err(|source| CliError::Numeric { op, source })
    }
}
