//! Named residual checks shared by every verification routine.

use alloc::string::{String, ToString};

/// One named verification residual.
///
/// `tol` is the effective threshold, already multiplied by the check's
/// scale; `pass` is exactly `residual <= tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    /// Short identifier such as `tau_map` or `quaternary`.
    pub name: String,
    /// Measured residual.
    pub residual: f64,
    /// Effective threshold.
    pub tol: f64,
    /// Whether `residual <= tol`.
    pub pass: bool,
    /// Location or value of the worst violation.
    pub witness: Option<String>,
}

impl Check {
    /// Builds a check from a residual and its threshold.
    pub fn new(name: &str, residual: f64, tol: f64) -> Self {
        Check {
            name: name.to_string(),
            residual,
            tol,
            pass: residual <= tol,
            witness: None,
        }
    }

    /// Attaches a witness description.
    pub fn with_witness(mut self, witness: String) -> Self {
        self.witness = Some(witness);
        self
    }

    /// Marks a check as failed regardless of its residual.
    pub fn failed(mut self) -> Self {
        self.pass = false;
        self
    }
}

/// True iff every check passed.
pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}
