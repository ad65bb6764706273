//! Experiment harness for the informed-mcmc library: configuration,
//! the train / make-testset / sample / diagnose / render pipeline, and
//! the on-disk formats it produces.

pub mod commands;
pub mod config;
pub mod formats;

use informed_mcmc::Error;

/// Stable exit codes for scripting: 0 success, 2 configuration error,
/// 3 I/O error, 4 numerical degeneracy.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Domain(_) => 2,
        Error::Io(_) => 3,
        Error::Degenerate(_) => 4,
    }
}
