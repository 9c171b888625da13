//! Experiment orchestration on top of `fimex-core`: convergence studies with
//! least-squares order fits, stability-region exports, and the KdV
//! accuracy/efficiency table. All file output is byte-deterministic in
//! serial mode (17-significant-digit floats, LF line endings).

pub mod convergence;
pub mod csvio;
pub mod kdv;
pub mod manifest;
pub mod schedule;
pub mod stability_export;

pub use convergence::{
    dahlquist_convergence, fit_order, vdp_convergence, ConvRow, ConvergenceReport, RunStatus,
    StudyConfig,
};
pub use kdv::{kdv_efficiency, KdvRow};
pub use schedule::{log_step_schedule, parse_steps_arg};

use std::path::PathBuf;

/// Cache directory resolution: explicit flag, then `FIMEX_CACHE_DIR`, then a
/// `cache/` folder under the output directory, then `./fimex-cache`.
pub fn resolve_cache_dir(flag: Option<PathBuf>, out_dir: Option<&std::path::Path>) -> PathBuf {
    if let Some(p) = flag {
        return p;
    }
    if let Ok(p) = std::env::var("FIMEX_CACHE_DIR") {
        if !p.is_empty() {
            return PathBuf::from(p);
        }
    }
    match out_dir {
        Some(d) => d.join("cache"),
        None => PathBuf::from("fimex-cache"),
    }
}
