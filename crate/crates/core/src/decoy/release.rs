use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anonymize::AnonymizedView;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::hierarchy::LevelVector;
use crate::io::{atomic_write, write_json};
use crate::linkage::DecoyCandidate;

use super::harden::{harden, HardenReport, HardeningPolicy};
use super::registry::{ensure_outside, CreationMeta, DecoyRegistry, RegistryEntry};
use super::{materialize_decoys, select_decoys, DecoyPolicy, DecoyRecord};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ReleaseRow {
    pub quasi: Vec<String>,
    pub sensitive: Vec<String>,
}

/// One recipient's table with its owner-side bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct RecipientRelease {
    pub recipient_id: String,
    pub header: Vec<String>,
    pub quasi_attributes: Vec<String>,
    pub k: usize,
    pub suppression_limit: f64,
    pub level_vector: LevelVector,
    /// Sorted, so row order carries no information about which rows were injected.
    pub rows: Vec<ReleaseRow>,
    pub decoy_signatures: Vec<Vec<String>>,
    pub decoy_records: Vec<DecoyRecord>,
    pub protected_signatures: Vec<Vec<String>>,
    pub removed_signatures: Vec<Vec<String>>,
}

/// What ships next to a recipient's table. Carries nothing from the registry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseManifest {
    pub recipient_id: String,
    pub k: usize,
    pub suppression_limit: f64,
    pub level_vector: LevelVector,
    pub quasi_attributes: Vec<String>,
    pub header: Vec<String>,
    pub rows: usize,
    pub classes: usize,
}

impl RecipientRelease {
    /// Class tuple to size over the release table.
    pub fn class_sizes(&self) -> BTreeMap<Vec<String>, usize> {
        let mut out = BTreeMap::new();
        for r in &self.rows {
            *out.entry(r.quasi.clone()).or_insert(0) += 1;
        }
        out
    }

    pub fn manifest(&self) -> ReleaseManifest {
        ReleaseManifest {
            recipient_id: self.recipient_id.clone(),
            k: self.k,
            suppression_limit: self.suppression_limit,
            level_vector: self.level_vector.clone(),
            quasi_attributes: self.quasi_attributes.clone(),
            header: self.header.clone(),
            rows: self.rows.len(),
            classes: self.class_sizes().len(),
        }
    }

    /// Writes `table.csv` and `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.header)?;
            for r in &self.rows {
                w.write_record(r.quasi.iter().chain(&r.sensitive))?;
            }
            w.flush().map_err(|e| Error::io(dir, e))?;
        }
        atomic_write(&dir.join("table.csv"), &buf)?;
        write_json(&dir.join("manifest.json"), &self.manifest())
    }
}

/// Releases for every recipient plus the registry describing them.
#[derive(Debug, Clone)]
pub struct ReleaseSet {
    pub releases: Vec<RecipientRelease>,
    pub registry: DecoyRegistry,
    pub hardening: Option<HardenReport>,
}

fn check_recipients(recipients: &[String]) -> Result<()> {
    if recipients.is_empty() {
        return Err(Error::Policy("no recipients".into()));
    }
    let mut seen = HashSet::new();
    for r in recipients {
        let ok = !r.is_empty()
            && r != "."
            && r != ".."
            && r.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
        if !ok {
            return Err(Error::Policy(format!(
                "recipient id `{r}` must be non-empty and use only letters, digits, `-`, `_` and `.`"
            )));
        }
        if !seen.insert(r) {
            return Err(Error::Policy(format!("recipient id `{r}` listed twice")));
        }
    }
    Ok(())
}

/// Builds one release per recipient from a shared view: assigns and injects decoy classes,
/// then, when `hardening` is given, cuts every other recipient's protected classes.
pub fn build_releases(
    view: &AnonymizedView,
    population: &Dataset,
    candidates: &[DecoyCandidate],
    recipients: &[String],
    decoy: &DecoyPolicy,
    hardening: Option<&HardeningPolicy>,
) -> Result<ReleaseSet> {
    check_recipients(recipients)?;
    let n_p = recipients.len();
    let view_tuples: HashSet<&[String]> = view.classes().iter().map(|c| c.tuple.as_slice()).collect();
    if let Some(c) = candidates.iter().find(|c| view_tuples.contains(c.tuple())) {
        return Err(Error::Policy(format!(
            "candidate {:?} is a class of the view, not of the residual population",
            c.tuple()
        )));
    }

    let assignment = select_decoys(candidates, decoy, view.k(), n_p)?;
    let records = materialize_decoys(&assignment, population, view, decoy)?;
    let all_decoys: BTreeSet<Vec<String>> = assignment
        .iter()
        .flatten()
        .map(|c| c.class.tuple.clone())
        .collect();
    let plan = hardening
        .map(|h| harden(view, &all_decoys, h, n_p, decoy.seed))
        .transpose()?;

    let base: Vec<ReleaseRow> = view
        .generalized_rows()
        .into_iter()
        .map(|(_, quasi, sensitive)| ReleaseRow { quasi, sensitive })
        .collect();
    let header = view.release_header();

    let releases: Vec<RecipientRelease> = (0..n_p)
        .into_par_iter()
        .map(|i| {
            let removed: Vec<Vec<String>> = plan.as_ref().map(|p| p.removed[i].clone()).unwrap_or_default();
            let protected: Vec<Vec<String>> = plan.as_ref().map(|p| p.protected[i].clone()).unwrap_or_default();
            let cut: HashSet<&[String]> = removed.iter().map(Vec::as_slice).collect();
            let mut rows: Vec<ReleaseRow> = base
                .iter()
                .filter(|r| !cut.contains(r.quasi.as_slice()))
                .cloned()
                .chain(records[i].iter().map(|d| ReleaseRow {
                    quasi: d.tuple.clone(),
                    sensitive: d.sensitive.clone(),
                }))
                .collect();
            rows.sort();
            let mut decoy_signatures: Vec<Vec<String>> =
                assignment[i].iter().map(|c| c.class.tuple.clone()).collect();
            decoy_signatures.sort();
            RecipientRelease {
                recipient_id: recipients[i].clone(),
                header: header.clone(),
                quasi_attributes: view.quasi().attributes().to_vec(),
                k: view.k(),
                suppression_limit: view.suppression_limit(),
                level_vector: view.level_vector().clone(),
                rows,
                decoy_signatures,
                decoy_records: records[i].clone(),
                protected_signatures: protected,
                removed_signatures: removed,
            }
        })
        .collect();

    let registry = DecoyRegistry {
        created: CreationMeta {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: decoy.seed,
            k: view.k(),
            suppression_limit: view.suppression_limit(),
            level_vector: view.level_vector().clone(),
            quasi_attributes: view.quasi().attributes().to_vec(),
            n_d: decoy.n_d,
            records_per_class: decoy.records_per_class,
            strategy: hardening.map(|h| h.strategy),
            n_e: hardening.map_or(0, |h| h.n_e),
        },
        entries: releases
            .iter()
            .map(|r| {
                (
                    r.recipient_id.clone(),
                    RegistryEntry {
                        decoy_signatures: r.decoy_signatures.clone(),
                        decoy_records: r.decoy_records.clone(),
                        protected_signatures: r.protected_signatures.clone(),
                        removed_signatures: r.removed_signatures.clone(),
                    },
                )
            })
            .collect(),
    };
    registry.validate()?;
    Ok(ReleaseSet {
        releases,
        registry,
        hardening: plan,
    })
}

/// Writes each release to `out_dir/<recipient_id>/` and the registry to `registry_path`,
/// which must lie outside `out_dir`.
pub fn write_releases(set: &ReleaseSet, out_dir: &Path, registry_path: &Path) -> Result<()> {
    ensure_outside(registry_path, out_dir)?;
    for r in &set.releases {
        r.write(&out_dir.join(&r.recipient_id))?;
    }
    set.registry.save(registry_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recipient_ids() {
        let ids = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        assert!(check_recipients(&ids(&["r1", "r-2", "R_3.x"])).is_ok());
        assert!(check_recipients(&ids(&[])).is_err());
        assert!(check_recipients(&ids(&["r1", "r1"])).is_err());
        assert!(check_recipients(&ids(&["../x"])).is_err());
        assert!(check_recipients(&ids(&[".."])).is_err());
    }
}
