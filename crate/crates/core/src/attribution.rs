//! Scanning leaked material for registered decoy signatures and naming the recipient it
//! came from.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::decoy::DecoyRegistry;
use crate::error::{Error, Result};

/// Default text-mode delimiters.
pub const DEFAULT_DELIMITERS: &str = ",;|\t ";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LeakMatch {
    pub recipient_id: String,
    pub signature: Vec<String>,
    /// 1-based data row (table mode) or line number (text mode).
    pub location: usize,
}

/// Matches quasi tuples exactly against registered signatures. `tuples` yields rows in the
/// registry's quasi attribute order.
pub fn scan_tuples<I, T>(tuples: I, registry: &DecoyRegistry) -> Vec<LeakMatch>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[String]>,
{
    let owners = registry.owners();
    tuples
        .into_iter()
        .enumerate()
        .filter_map(|(i, t)| {
            let t = t.as_ref();
            owners.get(t).map(|id| LeakMatch {
                recipient_id: id.to_string(),
                signature: t.to_vec(),
                location: i + 1,
            })
        })
        .collect()
}

/// Reads a delimited table with a header and scans the registry's quasi columns.
pub fn scan_table<R: Read>(reader: R, registry: &DecoyRegistry) -> Result<Vec<LeakMatch>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let cols = registry
        .quasi_attributes()
        .iter()
        .map(|a| {
            header
                .iter()
                .position(|h| h == a)
                .ok_or_else(|| Error::Schema(format!("leak table lacks quasi column `{a}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tuples = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        tuples.push(cols.iter().map(|&c| rec.get(c).unwrap_or("").trim().to_string()).collect::<Vec<_>>());
    }
    Ok(scan_tuples(tuples, registry))
}

/// Line-oriented scan: a line matches a signature when all of its values occur among the
/// line's tokens, in any order.
pub fn scan_text(text: &str, registry: &DecoyRegistry, delimiters: &str) -> Vec<LeakMatch> {
    let owners = registry.owners();
    let delims: Vec<char> = delimiters.chars().collect();
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let mut tokens: HashMap<&str, usize> = HashMap::new();
        for tok in line.split(|c| delims.contains(&c)) {
            let tok = tok.trim().trim_matches('"');
            if !tok.is_empty() {
                *tokens.entry(tok).or_default() += 1;
            }
        }
        if tokens.is_empty() {
            continue;
        }
        for (sig, id) in &owners {
            let mut need: HashMap<&str, usize> = HashMap::new();
            for v in sig.iter() {
                *need.entry(v.as_str()).or_default() += 1;
            }
            if need.iter().all(|(v, &c)| tokens.get(v).is_some_and(|&have| have >= c)) {
                out.push(LeakMatch {
                    recipient_id: id.to_string(),
                    signature: sig.to_vec(),
                    location: n + 1,
                });
            }
        }
    }
    out
}

pub fn scan_path(path: &Path, registry: &DecoyRegistry, text: bool, delimiters: &str) -> Result<Vec<LeakMatch>> {
    if text {
        Ok(scan_text(&crate::io::read_text(path)?, registry, delimiters))
    } else {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        scan_table(f, registry)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecipientScore {
    pub recipient_id: String,
    pub matched: usize,
    pub total: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum Outcome {
    Attributed { recipient_id: String, fraction: f64 },
    Inconclusive,
    NoEvidence,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub outcome: Outcome,
    pub confidence_floor: f64,
    /// Recipients with at least one match, best first.
    pub ranking: Vec<RecipientScore>,
    pub matches: usize,
}

impl Verdict {
    pub fn attributed_to(&self) -> Option<&str> {
        match &self.outcome {
            Outcome::Attributed { recipient_id, .. } => Some(recipient_id),
            _ => None,
        }
    }

    pub fn summary(&self) -> String {
        let mut s = match &self.outcome {
            Outcome::Attributed { recipient_id, fraction } => {
                format!("leak attributed to {recipient_id} ({:.0}% of its decoy signatures found)\n", fraction * 100.0)
            }
            Outcome::Inconclusive => "inconclusive: no recipient stands out above the confidence floor\n".to_string(),
            Outcome::NoEvidence => "no evidence: no decoy signature found\n".to_string(),
        };
        for r in &self.ranking {
            s.push_str(&format!("  {}: {}/{} ({:.3})\n", r.recipient_id, r.matched, r.total, r.fraction));
        }
        s
    }
}

/// Ranks recipients by the share of their signatures seen in `matches`. The top recipient
/// is named when its share reaches `floor` and strictly beats the runner-up.
pub fn attribute(matches: &[LeakMatch], registry: &DecoyRegistry, floor: f64) -> Verdict {
    let mut seen: BTreeMap<&str, std::collections::BTreeSet<&[String]>> = BTreeMap::new();
    for m in matches {
        seen.entry(m.recipient_id.as_str()).or_default().insert(&m.signature);
    }
    let mut ranking: Vec<RecipientScore> = seen
        .iter()
        .filter_map(|(id, sigs)| {
            let entry = registry.entries.get(*id)?;
            let total = entry.decoy_signatures.len();
            (total > 0).then(|| RecipientScore {
                recipient_id: id.to_string(),
                matched: sigs.len(),
                total,
                fraction: sigs.len() as f64 / total as f64,
            })
        })
        .collect();
    ranking.sort_by(|a, b| {
        b.fraction
            .total_cmp(&a.fraction)
            .then(b.matched.cmp(&a.matched))
            .then(a.recipient_id.cmp(&b.recipient_id))
    });
    let outcome = match ranking.as_slice() {
        [] => Outcome::NoEvidence,
        [top, rest @ ..] => {
            let beats = rest.first().is_none_or(|r| top.fraction > r.fraction);
            if top.fraction >= floor && beats {
                Outcome::Attributed {
                    recipient_id: top.recipient_id.clone(),
                    fraction: top.fraction,
                }
            } else {
                Outcome::Inconclusive
            }
        }
    };
    Verdict {
        outcome,
        confidence_floor: floor,
        ranking,
        matches: matches.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoy::{CreationMeta, DecoyRecord, RegistryEntry};
    use crate::hierarchy::LevelVector;

    fn sig(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn registry() -> DecoyRegistry {
        let entry = |sigs: Vec<Vec<String>>| RegistryEntry {
            decoy_records: sigs
                .iter()
                .map(|s| DecoyRecord {
                    tuple: s.clone(),
                    sensitive: vec![],
                    source_id: 0,
                })
                .collect(),
            decoy_signatures: sigs,
            protected_signatures: vec![],
            removed_signatures: vec![],
        };
        DecoyRegistry {
            created: CreationMeta {
                tool_version: "test".into(),
                seed: 0,
                k: 2,
                suppression_limit: 0.0,
                level_vector: LevelVector(vec![0, 1, 1]),
                quasi_attributes: sig(&["Gender", "ZIP", "YOB"]),
                n_d: 1,
                records_per_class: 2,
                strategy: None,
                n_e: 0,
            },
            entries: BTreeMap::from([
                ("R1".to_string(), entry(vec![sig(&["Male", "1111*", "1980-1981"])])),
                ("R2".to_string(), entry(vec![sig(&["Female", "2222*", "1980-1981"])])),
                (
                    "R3".to_string(),
                    entry(vec![
                        sig(&["Male", "3333*", "1980-1981"]),
                        sig(&["Male", "3334*", "1980-1981"]),
                        sig(&["Male", "3335*", "1980-1981"]),
                        sig(&["Male", "3336*", "1980-1981"]),
                    ]),
                ),
            ]),
        }
    }

    #[test]
    fn exclusive_full_evidence() {
        let reg = registry();
        let m = scan_tuples(reg.entries["R3"].decoy_signatures.clone(), &reg);
        let v = attribute(&m, &reg, 0.5);
        assert_eq!(v.outcome, Outcome::Attributed { recipient_id: "R3".into(), fraction: 1.0 });
    }

    #[test]
    fn half_at_floor() {
        let reg = registry();
        let m = scan_tuples(reg.entries["R3"].decoy_signatures[..2].to_vec(), &reg);
        let v = attribute(&m, &reg, 0.5);
        assert_eq!(v.attributed_to(), Some("R3"));
        assert_eq!(v.ranking[0].fraction, 0.5);
        assert_eq!(attribute(&m, &reg, 0.6).outcome, Outcome::Inconclusive);
    }

    #[test]
    fn no_evidence_and_ties() {
        let reg = registry();
        assert_eq!(attribute(&[], &reg, 0.5).outcome, Outcome::NoEvidence);
        let m = scan_tuples(
            vec![sig(&["Male", "1111*", "1980-1981"]), sig(&["Female", "2222*", "1980-1981"])],
            &reg,
        );
        let v = attribute(&m, &reg, 0.5);
        assert_eq!(v.outcome, Outcome::Inconclusive);
        assert_eq!(v.ranking.len(), 2);
    }

    #[test]
    fn table_and_text_modes() {
        let reg = registry();
        let csv = "YOB,Gender,ZIP,diag\n1980-1981,Male,1111*,flu\n1980-1981,Male,9999*,flu\n";
        let m = scan_table(csv.as_bytes(), &reg).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].recipient_id, "R1");
        assert_eq!(m[0].location, 1);

        let text = "dump: 1111* | Male | 1980-1981 | flu\nMale 2222* 1980-1981\nnothing here\n";
        let m = scan_text(text, &reg, DEFAULT_DELIMITERS);
        assert_eq!(m.len(), 1);
        assert_eq!((m[0].recipient_id.as_str(), m[0].location), ("R1", 1));

        assert!(scan_table("A,B\n1,2\n".as_bytes(), &reg).is_err());
    }
}
