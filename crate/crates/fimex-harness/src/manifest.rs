//! JSON run manifests: full echo of the requested experiment plus the
//! library version, written next to the outputs.

use std::fs;
use std::path::{Path, PathBuf};

use fimex_core::Error;

pub fn write_manifest(
    out_dir: &Path,
    command: &str,
    spec_echo: serde_json::Value,
) -> Result<PathBuf, Error> {
    let manifest = serde_json::json!({
        "tool": "fimex",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "spec": spec_echo,
    });
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("manifest.json");
    fs::write(
        &path,
        serde_json::to_string_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))? + "\n",
    )?;
    Ok(path)
}
