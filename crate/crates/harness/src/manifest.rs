//! Run manifest: the resolved spec, its hash, versions and artifact digests.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{ExperimentSpec, Source};

pub const TOOL: &str = "mala-lab";
pub const FORMAT: u32 = 1;
pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub mala_lab: String,
    pub mala_core: String,
    pub os: String,
    pub arch: String,
}

impl Versions {
    pub fn current() -> Self {
        Self {
            mala_lab: env!("CARGO_PKG_VERSION").into(),
            mala_core: mala_core::VERSION.into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// File name relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

impl Artifact {
    pub fn of(path: &str, contents: &[u8]) -> Self {
        Self {
            path: path.into(),
            bytes: contents.len() as u64,
            sha256: hex::encode(Sha256::digest(contents)),
        }
    }
}

/// Fields serialize in declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub format: u32,
    pub experiment: String,
    pub config_hash: String,
    pub spec: BTreeMap<String, String>,
    pub provenance: BTreeMap<String, Source>,
    pub versions: Versions,
    pub verdict: Option<String>,
    pub artifacts: Vec<Artifact>,
    pub threads: usize,
    pub wall_time_seconds: f64,
}

impl Manifest {
    pub fn new(
        spec: &ExperimentSpec,
        verdict: Option<String>,
        mut artifacts: Vec<Artifact>,
        threads: usize,
        wall: f64,
    ) -> Self {
        artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        Self {
            tool: TOOL.into(),
            format: FORMAT,
            experiment: spec.experiment.as_str().into(),
            config_hash: spec.config_hash(),
            spec: spec.values(),
            provenance: spec.provenance(),
            versions: Versions::current(),
            verdict,
            artifacts,
            threads,
            wall_time_seconds: wall,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    /// Artifacts whose bytes in `dir` differ from the recorded digest.
    pub fn mismatches(&self, dir: &Path) -> Vec<String> {
        self.artifacts
            .iter()
            .filter(|a| match std::fs::read(dir.join(&a.path)) {
                Ok(bytes) => Artifact::of(&a.path, &bytes) != **a,
                Err(_) => true,
            })
            .map(|a| a.path.clone())
            .collect()
    }
}

/// Parses and sanity-checks a manifest.
pub fn parse_manifest(text: &str) -> Result<Manifest, String> {
    let m: Manifest = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if m.tool != TOOL {
        return Err(format!("not a {TOOL} manifest (tool = `{}`)", m.tool));
    }
    if m.format != FORMAT {
        return Err(format!("unsupported manifest format {}", m.format));
    }
    if m.spec.get("experiment") != Some(&m.experiment) {
        return Err("spec.experiment does not match experiment".into());
    }
    let hex64 = |s: &str| s.len() == 64 && s.bytes().all(|b| b.is_ascii_hexdigit());
    if !hex64(&m.config_hash) || !m.artifacts.iter().all(|a| hex64(&a.sha256)) {
        return Err("digests must be 64 hex digits".into());
    }
    if let Some(a) = m.artifacts.iter().find(|a| !is_plain_name(&a.path)) {
        return Err(format!("artifact path `{}` leaves the output directory", a.path));
    }
    Ok(m)
}

/// A bare file name: no separators, not `.` or `..`, not empty.
pub fn is_plain_name(name: &str) -> bool {
    !name.is_empty() && name != "." && name != ".." && !name.contains(['/', '\\']) && !name.contains('\0')
}
