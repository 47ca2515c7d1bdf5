//! Run manifests: a command with its parameters and output paths.
//! Executing the same manifest twice writes byte-identical JSON.

use std::path::{Path, PathBuf};

use entlab::FORMAT_VERSION;
use serde::{Deserialize, Serialize};

use crate::commands::{execute, Command, Outcome, UsageError, UsageResult};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub entlab: String,
    pub format: u32,
}

impl Default for Versions {
    fn default() -> Self {
        Versions {
            entlab: env!("CARGO_PKG_VERSION").into(),
            format: FORMAT_VERSION,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    #[serde(flatten)]
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub versions: Versions,
    #[serde(default)]
    pub outputs: Outputs,
}

impl RunManifest {
    pub fn new(command: Command, outputs: Outputs) -> Self {
        RunManifest {
            format_version: FORMAT_VERSION,
            seed: command.seed(),
            command,
            versions: Versions::default(),
            outputs,
        }
    }

    pub fn load(path: &Path) -> UsageResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| UsageError::Io {
            path: path.to_owned(),
            source,
        })?;
        let m: RunManifest =
            serde_json::from_str(&text).map_err(|e| UsageError::Invalid(format!("{}: {e}", path.display())))?;
        if m.format_version != FORMAT_VERSION {
            return Err(UsageError::Invalid(format!("unsupported format_version {}", m.format_version)));
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

/// Pretty JSON with a trailing newline.
pub fn render(outcome: &Outcome) -> String {
    serde_json::to_string_pretty(&outcome.json).expect("serializable") + "\n"
}

fn write(path: &Path, text: &str) -> UsageResult<()> {
    std::fs::write(path, text).map_err(|source| UsageError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Executes a manifest and writes its outputs. JSON goes to stdout when no
/// JSON path is set.
pub fn run(manifest: &RunManifest) -> UsageResult<Outcome> {
    let outcome = execute(&manifest.command)?;
    let text = render(&outcome);
    match &manifest.outputs.json {
        Some(path) => write(path, &text)?,
        None => print!("{text}"),
    }
    if let (Some(path), Some(csv)) = (&manifest.outputs.csv, &outcome.csv) {
        write(path, csv)?;
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commands::VerifyArgs;
    use crate::suites::Suite;

    fn verify_manifest() -> RunManifest {
        let args = VerifyArgs {
            suite: Suite::Identities,
            seed: 11,
            trials: 3,
            fixture: Vec::new(),
        };
        RunManifest::new(Command::Verify(args), Outputs::default())
    }

    #[test]
    fn manifest_json_parses_back() {
        let m = verify_manifest();
        assert_eq!(m.seed, Some(11));
        let back: RunManifest = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn executing_twice_renders_identically() {
        let m = verify_manifest();
        let a = render(&execute(&m.command).unwrap());
        let b = render(&execute(&m.command).unwrap());
        assert_eq!(a, b);
        assert!(a.ends_with('\n'));
    }

    #[test]
    fn load_rejects_other_format_versions() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let mut v: serde_json::Value = serde_json::from_str(&verify_manifest().to_json()).unwrap();
        v["format_version"] = (FORMAT_VERSION + 1).into();
        std::fs::write(&path, v.to_string()).unwrap();
        assert!(matches!(RunManifest::load(&path), Err(UsageError::Invalid(_))));
        assert!(matches!(RunManifest::load(&dir.path().join("missing.json")), Err(UsageError::Io { .. })));
    }
}
