//! Linking anonymized classes to a population and discovering high-risk residual classes.
//!
//! An attacker links a released class to every population record whose quasi tuple
//! generalizes to the class tuple under the release's level vector. The smallest such link
//! count over the release (`min_link`) bounds its re-identification risk at `1 / min_link`.
//! Population classes left over once all linked records are removed, with size in
//! `[k, min_link)`, are riskier than anything in the release and serve as decoy candidates.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::anonymize::{AnonymizedView, EquivalenceClass, QuasiIndex};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::hierarchy::LevelVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassLink {
    pub tuple: Vec<String>,
    pub links: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkageReport {
    /// One entry per retained view class, sorted by tuple.
    pub per_class_links: Vec<ClassLink>,
    pub min_link: usize,
    pub max_risk: f64,
}

impl LinkageReport {
    pub fn links_of(&self, tuple: &[String]) -> Option<usize> {
        self.per_class_links
            .binary_search_by(|c| c.tuple.as_slice().cmp(tuple))
            .ok()
            .map(|i| self.per_class_links[i].links)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecoyCandidate {
    /// Residual population class; members are population record ids.
    pub class: EquivalenceClass,
    /// `min_link / size`: how much riskier the class is than the riskiest released class.
    pub risk_factor: f64,
}

impl DecoyCandidate {
    pub fn size(&self) -> usize {
        self.class.size()
    }

    pub fn tuple(&self) -> &[String] {
        &self.class.tuple
    }
}

/// Population records grouped under one level vector.
pub struct PopulationGroups {
    level_vector: LevelVector,
    groups: BTreeMap<Vec<String>, EquivalenceClass>,
}

impl PopulationGroups {
    pub fn build(population: &Dataset, view: &AnonymizedView) -> Result<Self> {
        let index = QuasiIndex::build(population, view.quasi())?;
        let lv = view.level_vector().clone();
        let groups = index
            .classes(&lv)?
            .into_iter()
            .map(|c| (c.tuple.clone(), c))
            .collect();
        Ok(PopulationGroups {
            level_vector: lv,
            groups,
        })
    }

    pub fn level_vector(&self) -> &LevelVector {
        &self.level_vector
    }

    pub fn get(&self, tuple: &[String]) -> Option<&EquivalenceClass> {
        self.groups.get(tuple)
    }

    pub fn link_count(&self, tuple: &[String]) -> usize {
        self.get(tuple).map_or(0, EquivalenceClass::size)
    }
}

/// Counts, for each retained class of `view`, the population records linking to it.
pub fn link_classes(view: &AnonymizedView, population: &Dataset) -> Result<LinkageReport> {
    let groups = PopulationGroups::build(population, view)?;
    link_with_groups(view, &groups)
}

pub fn link_with_groups(view: &AnonymizedView, groups: &PopulationGroups) -> Result<LinkageReport> {
    if view.classes().is_empty() {
        return Err(Error::NoRetainedClasses);
    }
    let per_class_links: Vec<ClassLink> = view
        .classes()
        .iter()
        .map(|c| {
            let links = groups.link_count(&c.tuple);
            if links == 0 {
                Err(Error::UnlinkedClass {
                    tuple: c.tuple.clone(),
                })
            } else {
                Ok(ClassLink {
                    tuple: c.tuple.clone(),
                    links,
                })
            }
        })
        .collect::<Result<_>>()?;
    let min_link = per_class_links.iter().map(|c| c.links).min().expect("non-empty");
    Ok(LinkageReport {
        per_class_links,
        min_link,
        max_risk: 1.0 / min_link as f64,
    })
}

/// Removes every population record linked to a view class, regroups what is left under the
/// view's level vector and keeps the groups with `k <= size < min_link`.
pub fn discover_candidates(
    population: &Dataset,
    view: &AnonymizedView,
    k: usize,
    min_link: usize,
) -> Result<Vec<DecoyCandidate>> {
    let groups = PopulationGroups::build(population, view)?;
    Ok(discover_with_groups(&groups, view, k, min_link))
}

pub fn discover_with_groups(
    groups: &PopulationGroups,
    view: &AnonymizedView,
    k: usize,
    min_link: usize,
) -> Vec<DecoyCandidate> {
    // Under global recoding a population record links to a view class exactly when its
    // generalized tuple equals the class tuple, so removing linked records removes whole
    // groups and the residual groups are the remaining ones unchanged.
    let linked: HashSet<&[String]> = view.classes().iter().map(|c| c.tuple.as_slice()).collect();
    groups
        .groups
        .values()
        .filter(|c| !linked.contains(c.tuple.as_slice()))
        .filter(|c| c.size() >= k && c.size() < min_link)
        .map(|c| DecoyCandidate {
            class: c.clone(),
            risk_factor: min_link as f64 / c.size() as f64,
        })
        .collect()
}

/// Risk multiplication factors in ascending order.
pub fn risk_profile(candidates: &[DecoyCandidate]) -> Vec<f64> {
    let mut out: Vec<f64> = candidates.iter().map(|c| c.risk_factor).collect();
    out.sort_by(f64::total_cmp);
    out
}

/// Linkage report plus candidate pool for one view and population.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub quasi_attributes: Vec<String>,
    pub level_vector: LevelVector,
    pub k: usize,
    pub linkage: LinkageReport,
    pub candidates: Vec<DecoyCandidate>,
}

impl Feasibility {
    pub fn assess(view: &AnonymizedView, population: &Dataset) -> Result<Self> {
        let groups = PopulationGroups::build(population, view)?;
        let linkage = link_with_groups(view, &groups)?;
        let candidates = discover_with_groups(&groups, view, view.k(), linkage.min_link);
        Ok(Feasibility {
            quasi_attributes: view.quasi().attributes().to_vec(),
            level_vector: view.level_vector().clone(),
            k: view.k(),
            linkage,
            candidates,
        })
    }

    pub fn candidate_records(&self) -> usize {
        self.candidates.iter().map(DecoyCandidate::size).sum()
    }

    pub fn risk_profile(&self) -> Vec<f64> {
        risk_profile(&self.candidates)
    }
}
