//! Front end for calibration, solving, simulation and report aggregation.

pub mod commands;
pub mod config;
pub mod manifest;

use sha2::{Digest, Sha256};

pub use config::ExperimentConfig;
pub use manifest::Manifest;

/// Exit status for a failed command: 2 for bad inputs, 1 for numerical
/// failures.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<fishery_core::Error>() {
            return if e.is_input_error() { 2 } else { 1 };
        }
    }
    2
}

/// Hex SHA-256 over the concatenation of `parts`.
pub fn sha256_hex<'a>(parts: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}
