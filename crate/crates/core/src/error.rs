//! Error type and memory budgeting shared by the whole crate.

use std::fmt;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode the library reports.
///
/// The variants map one-to-one onto the CLI exit codes: `Domain`,
/// `EmptyRange`, and `Usage` exit 2, `Capacity` exits 3, `Io` exits 4.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// A sweep over an interval found no fundamental discriminants.
    #[error("empty range: no fundamental discriminants with |d| in ({lo}, {hi}]")]
    EmptyRange { lo: u64, hi: u64 },

    /// A computation would exceed its memory or work budget.
    #[error("capacity exceeded: {what} needs {needed} but the budget is {budget}")]
    Capacity {
        what: String,
        needed: String,
        budget: String,
    },

    /// Malformed command line or config file.
    #[error("usage error: {0}")]
    Usage(String),

    /// File system failure while reading config or writing reports.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn capacity(
        what: impl Into<String>,
        needed: impl fmt::Display,
        budget: impl fmt::Display,
    ) -> Self {
        Error::Capacity {
            what: what.into(),
            needed: needed.to_string(),
            budget: budget.to_string(),
        }
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

/// Memory budget for sieve allocations, in bytes.
///
/// The default is 4 GiB, overridable through the `RES_SCOPE_MEM_MB`
/// environment variable. Anything that allocates proportionally to a sieve
/// limit checks the budget first and returns [`Error::Capacity`] instead of
/// aborting inside the allocator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemoryBudget {
    bytes: u64,
}

pub const DEFAULT_BUDGET_MB: u64 = 4096;
pub const BUDGET_ENV_VAR: &str = "RES_SCOPE_MEM_MB";

impl MemoryBudget {
    /// Budget from the environment (`RES_SCOPE_MEM_MB` megabytes), falling
    /// back to the 4096 MB default when unset or unparsable.
    pub fn from_env() -> Self {
        let mb = std::env::var(BUDGET_ENV_VAR)
            .ok()
            .and_then(|s| s.trim().parse::<u64>().ok())
            .unwrap_or(DEFAULT_BUDGET_MB);
        Self::from_mb(mb)
    }

    pub fn from_mb(mb: u64) -> Self {
        MemoryBudget {
            bytes: mb.saturating_mul(1 << 20),
        }
    }

    pub fn bytes(&self) -> u64 {
        self.bytes
    }

    /// Check an allocation request against the budget.
    pub fn check(&self, what: &str, needed_bytes: u64) -> Result<()> {
        if needed_bytes > self.bytes {
            Err(Error::capacity(
                what,
                format!("{} bytes", needed_bytes),
                format!("{} bytes ({} set or default)", self.bytes, BUDGET_ENV_VAR),
            ))
        } else {
            Ok(())
        }
    }
}

impl Default for MemoryBudget {
    fn default() -> Self {
        Self::from_env()
    }
}
