//! Conservative solver and verification harness for a prion proliferation
//! model with polymer joining.
//!
//! The model couples an ODE for the free monomer count `v(t)` to a
//! size-structured integro-differential equation for the polymer density
//! `u(t, y)` on sizes `y > y0`. Polymers lengthen by attaching monomers
//! (transport in size), split into daughter fragments (fragmentation with
//! sub-critical fragments returning to the monomer pool), and join pairwise
//! (coagulation). The crate provides:
//!
//! - rate kernels and the power-law rate family ([`kernels`]),
//! - a numerical audit of the structural hypotheses under which weak
//!   solutions are unique ([`hypothesis`]),
//! - a conservative finite-volume discretization of the three mechanisms
//!   ([`grid`], [`operators`]),
//! - explicit time integration with a monomer-balance ledger
//!   ([`integrator`]),
//! - an exact moment-ODE oracle for the constant-rate family ([`oracle`]),
//! - tail-primitive distance diagnostics and weak-form residuals
//!   ([`diagnostics`]),
//! - batch configuration and output writers ([`config`], [`output`],
//!   [`runner`]).

pub mod config;
pub mod diagnostics;
pub mod grid;
pub mod hypothesis;
pub mod integrator;
pub mod kernels;
pub mod numeric;
pub mod operators;
pub mod oracle;
pub mod output;
pub mod runner;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A constructor or operation was handed arguments outside its domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The run configuration failed validation; every violation is listed.
    #[error("invalid configuration:\n{}", .0.join("\n"))]
    InvalidConfig(Vec<String>),

    /// A time step exceeded the stability bound of the selected scheme.
    #[error("time step {dt:e} exceeds the stability bound; required dt <= {required:e}")]
    CflViolation { dt: f64, required: f64 },

    /// The state left the finite range; the last valid time is reported.
    #[error("non-finite state detected at t = {t}: {context}")]
    NonFinite { t: f64, context: String },

    /// Two objects that must live on the same grid do not.
    #[error("incompatible grids: {0}")]
    GridMismatch(String),

    /// Oracle comparison was asked to compare runs with different parameters.
    #[error("mismatched configurations: {0}")]
    ConfigMismatch(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
