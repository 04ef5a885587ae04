//! Machine-readable command reports.

use std::collections::BTreeMap;

use modcp_core::Check;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// One named residual; non-finite residuals serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckEntry {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl From<Check> for CheckEntry {
    fn from(c: Check) -> Self {
        CheckEntry {
            name: c.name,
            residual: c.residual,
            tol: c.tol,
            pass: c.pass,
            witness: c.witness,
        }
    }
}

/// Output of one command on one instance. Everything except
/// `wall_time_ms` is a function of the inputs, seed and tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub instance: String,
    pub instance_digest: String,
    pub tol: f64,
    pub seed: u64,
    pub checks: Vec<CheckEntry>,
    pub values: BTreeMap<String, serde_json::Value>,
    pub artifacts: Vec<String>,
    pub pass: bool,
    pub wall_time_ms: f64,
}

/// SHA-256 over the given byte strings, each length-prefixed.
pub fn digest(parts: &[&[u8]]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    format!("{:x}", h.finalize())
}
