//! The attacker's side: colluding recipients compare releases to isolate classes with no
//! same-origin counterpart, and screen class sizes and linkage risks for outliers.
//!
//! Everything here works from recipient tables, public hierarchies and (for the risk
//! screen) an attacker-held population. The decoy registry is never consulted.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anonymize::QuasiIndex;
use crate::dataset::Dataset;
use crate::decoy::{close_to_k_upper, same_origin, OriginRule, RecipientRelease, ReleaseManifest};
use crate::error::{Error, Result};
use crate::hierarchy::{LevelVector, QuasiHierarchies};
use crate::io::read_json;
use crate::seed;

/// A recipient table reduced to its classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseTable {
    pub recipient_id: String,
    pub quasi_attributes: Vec<String>,
    /// Class tuple to size.
    pub classes: BTreeMap<Vec<String>, usize>,
}

impl ReleaseTable {
    pub fn from_release(r: &RecipientRelease) -> Self {
        ReleaseTable {
            recipient_id: r.recipient_id.clone(),
            quasi_attributes: r.quasi_attributes.clone(),
            classes: r.class_sizes(),
        }
    }

    pub fn from_tuples<I: IntoIterator<Item = Vec<String>>>(
        recipient_id: &str,
        quasi_attributes: Vec<String>,
        tuples: I,
    ) -> Self {
        let mut classes = BTreeMap::new();
        for t in tuples {
            *classes.entry(t).or_insert(0) += 1;
        }
        ReleaseTable {
            recipient_id: recipient_id.to_string(),
            quasi_attributes,
            classes,
        }
    }

    /// Reads a release directory written by `RecipientRelease::write`.
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest: ReleaseManifest = read_json(&dir.join("manifest.json"))?;
        let path = dir.join("table.csv");
        let mut reader = csv::Reader::from_path(&path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(&path, io),
            other => Error::Schema(format!("{}: {other:?}", path.display())),
        })?;
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let cols = manifest
            .quasi_attributes
            .iter()
            .map(|a| {
                header.iter().position(|h| h == a).ok_or_else(|| {
                    Error::Schema(format!("{} lacks quasi column `{a}`", path.display()))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut tuples = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            tuples.push(cols.iter().map(|&c| rec.get(c).unwrap_or("").to_string()).collect());
        }
        Ok(Self::from_tuples(&manifest.recipient_id, manifest.quasi_attributes, tuples))
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.values().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeerMode {
    /// Suspect when at least one peer lacks a same-origin class.
    #[default]
    Any,
    /// Suspect only when every peer lacks one.
    All,
}

impl std::str::FromStr for PeerMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "any" => Ok(PeerMode::Any),
            "all" => Ok(PeerMode::All),
            other => Err(format!("unknown peer mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspectSet {
    pub recipient_id: String,
    /// Sorted.
    pub suspects: Vec<Vec<String>>,
}

fn has_counterpart(tuple: &[String], peer: &ReleaseTable, quasi: &QuasiHierarchies, rule: OriginRule) -> bool {
    if rule == OriginRule::Inclusive && peer.classes.contains_key(tuple) {
        return true;
    }
    peer.classes.keys().any(|c| same_origin(tuple, c, quasi, rule))
}

/// Classes of each release lacking a same-origin counterpart in a peer release.
pub fn collude(
    tables: &[ReleaseTable],
    quasi: &QuasiHierarchies,
    mode: PeerMode,
    rule: OriginRule,
) -> Result<Vec<SuspectSet>> {
    if tables.len() < 2 {
        return Err(Error::Usage(format!(
            "collusion needs at least 2 releases, got {}",
            tables.len()
        )));
    }
    for t in tables {
        if t.quasi_attributes != quasi.attributes() {
            return Err(Error::Schema(format!(
                "release {} has quasi attributes {:?}, hierarchies cover {:?}",
                t.recipient_id,
                t.quasi_attributes,
                quasi.attributes()
            )));
        }
    }
    Ok(tables
        .par_iter()
        .enumerate()
        .map(|(i, t)| {
            let peers: Vec<&ReleaseTable> =
                tables.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, p)| p).collect();
            let suspects = t
                .classes
                .keys()
                .filter(|c| {
                    let mut missing = peers.iter().map(|p| !has_counterpart(c, p, quasi, rule));
                    match mode {
                        PeerMode::Any => missing.any(|m| m),
                        PeerMode::All => missing.all(|m| m),
                    }
                })
                .cloned()
                .collect();
            SuspectSet {
                recipient_id: t.recipient_id.clone(),
                suspects,
            }
        })
        .collect())
}

/// Number of sizes within the close-to-k band `[k, floor(1.1 k)]`.
pub fn close_to_k_census<I: IntoIterator<Item = usize>>(sizes: I, k: usize) -> usize {
    let upper = close_to_k_upper(k);
    sizes.into_iter().filter(|&s| s >= k && s <= upper).count()
}

/// Class sizes binned by `bin_width` (values below 1 count as 1); keys are bin lower bounds.
pub fn size_histogram<I: IntoIterator<Item = usize>>(sizes: I, bin_width: usize) -> BTreeMap<usize, usize> {
    let w = bin_width.max(1);
    let mut out = BTreeMap::new();
    for s in sizes {
        *out.entry(s / w * w).or_insert(0) += 1;
    }
    out
}

/// Fraction of `trials` uniform picks from `suspects` that land on a class in `decoys`.
pub fn guess_success_rate(suspects: &[Vec<String>], decoys: &[Vec<String>], trials: usize, seed: u64) -> f64 {
    if suspects.is_empty() || trials == 0 {
        return 0.0;
    }
    let mut rng = seed::stage_rng(seed, "guess");
    let hits = (0..trials)
        .filter(|_| decoys.contains(&suspects[rng.random_range(0..suspects.len())]))
        .count();
    hits as f64 / trials as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RiskBaseline {
    /// Largest risk among the other classes of the release.
    #[default]
    LeaveOneOutMax,
    /// Median risk over all classes of the release.
    Median,
}

impl std::str::FromStr for RiskBaseline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" | "leave-one-out-max" => Ok(RiskBaseline::LeaveOneOutMax),
            "median" => Ok(RiskBaseline::Median),
            other => Err(format!("unknown risk baseline `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRisk {
    pub tuple: Vec<String>,
    pub links: usize,
    pub risk: f64,
}

/// Links every class of `table` to `population`, inferring the class's generalization
/// levels from its values. A class no population record links to counts as one link.
pub fn class_risks(table: &ReleaseTable, population: &Dataset, quasi: &QuasiHierarchies) -> Result<Vec<ClassRisk>> {
    let index = QuasiIndex::build(population, quasi)?;
    let mut by_levels: BTreeMap<LevelVector, Vec<&Vec<String>>> = BTreeMap::new();
    for t in table.classes.keys() {
        by_levels.entry(quasi.infer_levels(t)?).or_default().push(t);
    }
    let mut out = Vec::with_capacity(table.classes.len());
    for (lv, tuples) in by_levels {
        let counts: HashMap<Vec<String>, usize> = index
            .classes(&lv)?
            .into_iter()
            .map(|c| {
                let n = c.size();
                (c.tuple, n)
            })
            .collect();
        for t in tuples {
            let links = counts.get(t).copied().unwrap_or(0).max(1);
            out.push(ClassRisk {
                tuple: t.clone(),
                links,
                risk: 1.0 / links as f64,
            });
        }
    }
    out.sort_by(|a, b| a.tuple.cmp(&b.tuple));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskFlag {
    pub tuple: Vec<String>,
    pub links: usize,
    pub risk: f64,
    pub baseline: f64,
}

/// Flags classes whose linkage risk exceeds `threshold` times the baseline risk.
pub fn screen_risks(risks: &[ClassRisk], threshold: f64, baseline: RiskBaseline) -> Vec<RiskFlag> {
    if risks.len() < 2 {
        return Vec::new();
    }
    let median = {
        let mut r: Vec<f64> = risks.iter().map(|c| c.risk).collect();
        r.sort_by(f64::total_cmp);
        let n = r.len();
        if n % 2 == 1 {
            r[n / 2]
        } else {
            (r[n / 2 - 1] + r[n / 2]) / 2.0
        }
    };
    // the two largest risks give every class its leave-one-out maximum
    let mut top = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut top_at = usize::MAX;
    for (i, c) in risks.iter().enumerate() {
        if c.risk > top.0 {
            top = (c.risk, top.0);
            top_at = i;
        } else if c.risk > top.1 {
            top.1 = c.risk;
        }
    }
    risks
        .iter()
        .enumerate()
        .filter_map(|(i, c)| {
            let base = match baseline {
                RiskBaseline::Median => median,
                RiskBaseline::LeaveOneOutMax if i == top_at => top.1,
                RiskBaseline::LeaveOneOutMax => top.0,
            };
            (c.risk > threshold * base).then(|| RiskFlag {
                tuple: c.tuple.clone(),
                links: c.links,
                risk: c.risk,
                baseline: base,
            })
        })
        .collect()
}

pub fn risk_outlier_screen(
    table: &ReleaseTable,
    population: &Dataset,
    quasi: &QuasiHierarchies,
    threshold: f64,
    baseline: RiskBaseline,
) -> Result<Vec<RiskFlag>> {
    Ok(screen_risks(&class_risks(table, population, quasi)?, threshold, baseline))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReleaseAttack {
    pub recipient_id: String,
    pub classes: usize,
    pub suspects: Vec<Vec<String>>,
    pub close_to_k: usize,
    /// Bin lower bound to class count.
    pub size_histogram: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub k: usize,
    pub mode: PeerMode,
    pub bin_width: usize,
    pub releases: Vec<ReleaseAttack>,
}

pub fn attack_report(
    tables: &[ReleaseTable],
    quasi: &QuasiHierarchies,
    k: usize,
    mode: PeerMode,
    rule: OriginRule,
    bin_width: usize,
) -> Result<AttackReport> {
    let suspects = collude(tables, quasi, mode, rule)?;
    let releases = tables
        .iter()
        .zip(suspects)
        .map(|(t, s)| ReleaseAttack {
            recipient_id: t.recipient_id.clone(),
            classes: t.classes.len(),
            suspects: s.suspects,
            close_to_k: close_to_k_census(t.class_sizes(), k),
            size_histogram: size_histogram(t.class_sizes(), bin_width),
        })
        .collect();
    Ok(AttackReport {
        k,
        mode,
        bin_width: bin_width.max(1),
        releases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::tests::{gender, yob, zip};

    fn t(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn quasi() -> QuasiHierarchies {
        QuasiHierarchies::new(vec![gender(), zip(), yob()])
    }

    fn table(id: &str, classes: &[(&[&str], usize)]) -> ReleaseTable {
        ReleaseTable {
            recipient_id: id.into(),
            quasi_attributes: quasi().attributes().to_vec(),
            classes: classes.iter().map(|(c, n)| (t(c), *n)).collect(),
        }
    }

    #[test]
    fn unhardened_pair_isolates_decoys() {
        let shared: &[(&[&str], usize)] = &[(&["Male", "5555*", "1980-1982"], 4), (&["Female", "5555*", "1980-1982"], 3)];
        let mut a = shared.to_vec();
        a.push((&["Male", "1234*", "1990-1992"], 2));
        let mut b = shared.to_vec();
        b.push((&["Female", "4321*", "1970-1972"], 2));
        let sets = collude(&[table("a", &a), table("b", &b)], &quasi(), PeerMode::Any, OriginRule::Inclusive).unwrap();
        assert_eq!(sets[0].suspects, vec![t(&["Male", "1234*", "1990-1992"])]);
        assert_eq!(sets[1].suspects, vec![t(&["Female", "4321*", "1970-1972"])]);
    }

    #[test]
    fn cross_strategy_counterparts() {
        let a = table("a", &[(&["Male", "5555*", "1980-1982"], 2)]);
        let b = table("b", &[(&["Male", "555**", "1981"], 2)]);
        let sets = collude(&[a, b], &quasi(), PeerMode::Any, OriginRule::Inclusive).unwrap();
        assert!(sets.iter().all(|s| s.suspects.is_empty()));
    }

    #[test]
    fn any_versus_all() {
        let x: &[&str] = &["Male", "1234*", "1990-1992"];
        let base: &[(&[&str], usize)] = &[(&["Male", "5555*", "1980-1982"], 4)];
        let a = table("a", &[base[0], (x, 2)]);
        let b = table("b", &[base[0], (x, 2)]);
        let c = table("c", base);
        let q = quasi();
        let any = collude(&[a.clone(), b.clone(), c.clone()], &q, PeerMode::Any, OriginRule::Inclusive).unwrap();
        assert_eq!(any[0].suspects, vec![t(x)]);
        let all = collude(&[a, b, c], &q, PeerMode::All, OriginRule::Inclusive).unwrap();
        assert!(all[0].suspects.is_empty());
    }

    #[test]
    fn identical_releases_and_too_few() {
        let a = table("a", &[(&["Male", "5555*", "1980-1982"], 4)]);
        let sets = collude(&[a.clone(), a.clone()], &quasi(), PeerMode::Any, OriginRule::Inclusive).unwrap();
        assert!(sets.iter().all(|s| s.suspects.is_empty()));
        assert!(matches!(collude(&[a], &quasi(), PeerMode::Any, OriginRule::Inclusive), Err(Error::Usage(_))));
    }

    #[test]
    fn census_band() {
        assert_eq!(close_to_k_census([9, 10, 11, 12], 10), 2);
        assert_eq!(close_to_k_census([50, 50], 10), 0);
        assert_eq!(close_to_k_census([2, 3], 2), 1);
    }

    #[test]
    fn histogram_bins() {
        assert_eq!(size_histogram([7], 1), BTreeMap::from([(7, 1)]));
        assert!(size_histogram(Vec::new(), 1).is_empty());
        assert_eq!(size_histogram([10, 11, 12, 25], 5), BTreeMap::from([(10, 3), (25, 1)]));
        assert_eq!(size_histogram([3], 0), BTreeMap::from([(3, 1)]));
    }

    fn risks(links: &[usize]) -> Vec<ClassRisk> {
        links
            .iter()
            .enumerate()
            .map(|(i, &l)| ClassRisk {
                tuple: vec![i.to_string()],
                links: l,
                risk: 1.0 / l as f64,
            })
            .collect()
    }

    #[test]
    fn risk_screen() {
        // equal link counts: never flagged above threshold 1
        assert!(screen_risks(&risks(&[40, 40, 40]), 1.01, RiskBaseline::LeaveOneOutMax).is_empty());
        assert!(screen_risks(&risks(&[40, 40, 40]), 1.01, RiskBaseline::Median).is_empty());
        // minLink 40; a decoy of 5 links is 8 times riskier
        let flags = screen_risks(&risks(&[40, 80, 120, 5]), 4.0, RiskBaseline::LeaveOneOutMax);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].links, 5);
        // factor 40/30 = 1.33 stays under 1.5
        assert!(screen_risks(&risks(&[40, 80, 120, 30]), 1.5, RiskBaseline::LeaveOneOutMax).is_empty());
    }

    #[test]
    fn guesses_converge() {
        let s: Vec<Vec<String>> = (0..4).map(|i| vec![i.to_string()]).collect();
        let rate = guess_success_rate(&s, &s[..1], 10_000, 9);
        assert!((rate - 0.25).abs() < 0.02, "{rate}");
    }
}
