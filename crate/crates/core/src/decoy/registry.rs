use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::LevelVector;
use crate::io::{read_json, write_json};

use super::harden::RemovalStrategy;
use super::DecoyRecord;

/// Parameters a release set was produced with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreationMeta {
    pub tool_version: String,
    pub seed: u64,
    pub k: usize,
    pub suppression_limit: f64,
    pub level_vector: LevelVector,
    pub quasi_attributes: Vec<String>,
    pub n_d: usize,
    pub records_per_class: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<RemovalStrategy>,
    #[serde(default)]
    pub n_e: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegistryEntry {
    pub decoy_signatures: Vec<Vec<String>>,
    pub decoy_records: Vec<DecoyRecord>,
    /// View classes kept only in this recipient's release.
    #[serde(default)]
    pub protected_signatures: Vec<Vec<String>>,
    /// View classes cut from this recipient's release.
    #[serde(default)]
    pub removed_signatures: Vec<Vec<String>>,
}

/// Owner-side record of every recipient's decoys. Never shipped with releases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoyRegistry {
    pub created: CreationMeta,
    pub entries: BTreeMap<String, RegistryEntry>,
}

impl DecoyRegistry {
    pub fn quasi_attributes(&self) -> &[String] {
        &self.created.quasi_attributes
    }

    /// Signature to owning recipient.
    pub fn owners(&self) -> BTreeMap<&[String], &str> {
        self.entries
            .iter()
            .flat_map(|(id, e)| e.decoy_signatures.iter().map(move |s| (s.as_slice(), id.as_str())))
            .collect()
    }

    /// Checks that no signature belongs to two recipients and that every decoy record
    /// carries one of its recipient's signatures.
    pub fn validate(&self) -> Result<()> {
        let width = self.created.quasi_attributes.len();
        let mut seen: BTreeMap<&[String], &str> = BTreeMap::new();
        for (id, entry) in &self.entries {
            let own: BTreeSet<&[String]> = entry.decoy_signatures.iter().map(Vec::as_slice).collect();
            if own.len() != entry.decoy_signatures.len() {
                return Err(Error::Registry(format!("recipient {id} lists a decoy signature twice")));
            }
            for sig in &own {
                if sig.len() != width {
                    return Err(Error::Registry(format!(
                        "signature {sig:?} of {id} has {} values, expected {width}",
                        sig.len()
                    )));
                }
                if let Some(other) = seen.insert(sig, id) {
                    return Err(Error::Registry(format!(
                        "signature {sig:?} registered to both {other} and {id}"
                    )));
                }
            }
            if let Some(r) = entry.decoy_records.iter().find(|r| !own.contains(r.tuple.as_slice())) {
                return Err(Error::Registry(format!(
                    "decoy record {:?} of {id} matches none of its signatures",
                    r.tuple
                )));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let reg: DecoyRegistry = read_json(path)?;
        reg.validate()?;
        Ok(reg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.validate()?;
        write_json(path, self)
    }
}

/// Fails when `path` would land inside `dir`.
pub(crate) fn ensure_outside(path: &Path, dir: &Path) -> Result<()> {
    let resolve = |p: &Path| -> std::path::PathBuf {
        let abs = if p.is_absolute() {
            p.to_path_buf()
        } else {
            std::env::current_dir().unwrap_or_default().join(p)
        };
        let mut norm = std::path::PathBuf::new();
        for c in abs.components() {
            match c {
                std::path::Component::ParentDir => {
                    norm.pop();
                }
                std::path::Component::CurDir => {}
                other => norm.push(other),
            }
        }
        // canonicalize the longest existing prefix so symlinked directories compare correctly
        let mut existing = norm;
        let mut rest = Vec::new();
        while !existing.exists() {
            match (existing.file_name().map(|s| s.to_os_string()), existing.parent()) {
                (Some(name), Some(parent)) => {
                    rest.push(name);
                    existing = parent.to_path_buf();
                }
                _ => break,
            }
        }
        let mut out = existing.canonicalize().unwrap_or(existing);
        for part in rest.into_iter().rev() {
            out.push(part);
        }
        out
    };
    if resolve(path).starts_with(resolve(dir)) {
        return Err(Error::Usage(format!(
            "registry {} must not be written inside the release directory {}",
            path.display(),
            dir.display()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn registry() -> DecoyRegistry {
        let entry = |s: Vec<String>| RegistryEntry {
            decoy_signatures: vec![s.clone()],
            decoy_records: vec![DecoyRecord {
                tuple: s,
                sensitive: vec![],
                source_id: 0,
            }],
            protected_signatures: vec![],
            removed_signatures: vec![],
        };
        DecoyRegistry {
            created: CreationMeta {
                tool_version: "test".into(),
                seed: 1,
                k: 2,
                suppression_limit: 0.0,
                level_vector: LevelVector(vec![0, 1]),
                quasi_attributes: vec!["G".into(), "Z".into()],
                n_d: 1,
                records_per_class: 2,
                strategy: None,
                n_e: 0,
            },
            entries: BTreeMap::from([
                ("r1".to_string(), entry(sig(&["Male", "5555*"]))),
                ("r2".to_string(), entry(sig(&["Female", "5555*"]))),
            ]),
        }
    }

    #[test]
    fn roundtrip_and_disjointness() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("registry.json");
        let reg = registry();
        reg.save(&path).unwrap();
        assert_eq!(DecoyRegistry::load(&path).unwrap(), reg);

        let mut bad = reg.clone();
        bad.entries.get_mut("r2").unwrap().decoy_signatures = vec![sig(&["Male", "5555*"])];
        bad.entries.get_mut("r2").unwrap().decoy_records[0].tuple = sig(&["Male", "5555*"]);
        assert!(matches!(bad.validate(), Err(Error::Registry(_))));
    }

    #[test]
    fn stray_record_rejected() {
        let mut bad = registry();
        bad.entries.get_mut("r1").unwrap().decoy_records[0].tuple = sig(&["Male", "1111*"]);
        assert!(bad.validate().is_err());
    }

    #[test]
    fn registry_kept_out_of_release_dir() {
        let dir = tempfile::tempdir().unwrap();
        let releases = dir.path().join("out");
        assert!(ensure_outside(&releases.join("registry.json"), &releases).is_err());
        assert!(ensure_outside(&releases.join("a/../registry.json"), &releases).is_err());
        assert!(ensure_outside(&dir.path().join("registry.json"), &releases).is_ok());
        assert!(ensure_outside(&releases.join("../registry.json"), &releases).is_ok());
    }
}
