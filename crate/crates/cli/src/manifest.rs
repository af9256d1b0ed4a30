//! Run manifests: everything needed to rerun a command bit-for-bit.

use std::path::{Path, PathBuf};

use globalness_core::{SolverConfig, SpaceConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Canonical arguments, without the program name or output flags.
    pub args: Vec<String>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    /// Shared baseline ball radius, when attributions were scored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default)]
    pub inputs: Vec<InputDigest>,
}

pub const TOOL: &str = "wg";

impl RunManifest {
    pub fn new(command: &str, args: Vec<String>, seed: u64) -> Self {
        RunManifest {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            args,
            seed,
            space: None,
            solver: None,
            k: None,
            inputs: Vec::new(),
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("manifest serializes")
    }

    /// Fail if any recorded input changed since the manifest was written.
    pub fn verify_inputs(&self) -> Result<(), CliError> {
        for input in &self.inputs {
            let bytes = std::fs::read(&input.path)
                .map_err(|e| CliError::Invalid(format!("cannot read input {}: {e}", input.path)))?;
            let got = sha256_hex(&bytes);
            if got != input.sha256 {
                return Err(CliError::Invalid(format!(
                    "input {} changed since the run: sha256 {got}, manifest has {}",
                    input.path, input.sha256
                )));
            }
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_file(path: &Path, bytes: &[u8]) -> InputDigest {
    InputDigest {
        path: path.to_string_lossy().into_owned(),
        sha256: sha256_hex(bytes),
    }
}

fn from_value(v: &Value) -> Option<RunManifest> {
    let m: RunManifest = serde_json::from_value(v.clone()).ok()?;
    (m.tool == TOOL).then_some(m)
}

/// Find a manifest in a bare manifest file, a JSON report with a `manifest`
/// field, or a generated file whose `#` header line embeds one.
pub fn locate(path: &PathBuf) -> Result<RunManifest, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let missing = || CliError::Usage(format!("no wg manifest found in {}", path.display()));
    let doc: Value = match text.strip_prefix('#') {
        Some(rest) => serde_json::from_str(rest.lines().next().unwrap_or("")).map_err(|_| missing())?,
        None => serde_json::from_str(&text).map_err(|_| missing())?,
    };
    let found = [
        Some(&doc),
        doc.get("manifest"),
        doc.get("metadata").and_then(|m| m.get("manifest")),
    ]
    .into_iter()
    .flatten()
    .find_map(from_value);
    found.ok_or_else(missing)
}
