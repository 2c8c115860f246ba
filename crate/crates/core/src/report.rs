//! Run manifests and deterministic report emission.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub scenario_digest: String,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub outputs: Vec<String>,
    /// sha256 over every other field.
    pub digest: String,
}

impl RunManifest {
    pub fn new(command: &str, scenario_digest: &str, seed: u64, tolerances: BTreeMap<String, f64>, outputs: Vec<String>) -> Self {
        let mut m = RunManifest {
            tool: "relform".into(),
            version: TOOL_VERSION.into(),
            command: command.into(),
            scenario_digest: scenario_digest.into(),
            seed,
            tolerances,
            outputs,
            digest: String::new(),
        };
        m.digest = m.compute_digest();
        m
    }

    pub fn compute_digest(&self) -> String {
        let body = RunManifest { digest: String::new(), ..self.clone() };
        hex::encode(Sha256::digest(serde_json::to_vec(&body).expect("manifest serializes")))
    }
}

/// A report body together with the manifest of the run that produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report<T> {
    pub manifest: RunManifest,
    pub pass: bool,
    pub body: T,
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &to_json(value)?)
}

/// Output directory: explicit flag, then RELFORM_OUT, then ./relform-out.
pub fn output_dir(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os("RELFORM_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("relform-out"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_tracks_content() {
        let tol: BTreeMap<String, f64> = [("closure".to_string(), 1e-6)].into();
        let a = RunManifest::new("verify algebra", "abc", 1, tol.clone(), vec!["r.json".into()]);
        let b = RunManifest::new("verify algebra", "abc", 1, tol.clone(), vec!["r.json".into()]);
        assert_eq!(a.digest, b.digest);
        assert_eq!(a.digest, a.compute_digest());
        let c = RunManifest::new("verify algebra", "abc", 2, tol, vec!["r.json".into()]);
        assert_ne!(a.digest, c.digest);
    }
}
