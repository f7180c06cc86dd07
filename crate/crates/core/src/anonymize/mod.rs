//! Global-recoding k-anonymization: equivalence classes, the k check with suppression,
//! optimal lattice search and information-loss metrics.

mod index;
mod metrics;
mod ola;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, RecordId};
use crate::error::{Error, Result};
use crate::hierarchy::{LevelVector, QuasiHierarchies};
use crate::io::{atomic_write, write_json};

pub use index::QuasiIndex;
pub use metrics::{loss_metrics, precision_of, Loss, LossMetric};
pub use ola::ola_search;

/// Records sharing one generalized quasi tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceClass {
    pub tuple: Vec<String>,
    /// Sorted ascending.
    pub members: Vec<RecordId>,
}

impl EquivalenceClass {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Outcome of checking a class partition against k and the suppression limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KCheck {
    pub satisfies: bool,
    /// Sorted ascending.
    pub suppressed: Vec<RecordId>,
}

/// Groups the records of `data` by their quasi tuple generalized under `lv`.
/// Classes are returned sorted by tuple.
pub fn compute_classes(
    data: &Dataset,
    lv: &LevelVector,
    quasi: &QuasiHierarchies,
) -> Result<Vec<EquivalenceClass>> {
    let index = QuasiIndex::build(data, quasi)?;
    index.classes(lv)
}

/// Suppresses every class smaller than `k`; the partition satisfies the model when the
/// suppressed share of `total` records stays within `suppression_limit`.
pub fn check_k(
    classes: &[EquivalenceClass],
    k: usize,
    suppression_limit: f64,
    total: usize,
) -> KCheck {
    let mut suppressed: Vec<RecordId> = classes
        .iter()
        .filter(|c| c.size() < k)
        .flat_map(|c| c.members.iter().copied())
        .collect();
    suppressed.sort_unstable();
    KCheck {
        satisfies: within_limit(suppressed.len(), total, suppression_limit),
        suppressed,
    }
}

pub(crate) fn within_limit(suppressed: usize, total: usize, limit: f64) -> bool {
    suppressed == 0 || (total > 0 && suppressed as f64 / total as f64 <= limit)
}

/// A k-anonymous view of a dataset under one global level vector.
#[derive(Debug, Clone)]
pub struct AnonymizedView {
    source: Arc<Dataset>,
    quasi: QuasiHierarchies,
    quasi_columns: Vec<usize>,
    level_vector: LevelVector,
    classes: Vec<EquivalenceClass>,
    suppressed: Vec<RecordId>,
    k: usize,
    suppression_limit: f64,
}

impl AnonymizedView {
    /// Builds the view of `source` at `lv`, failing if the node does not satisfy `k`
    /// within `suppression_limit`.
    pub fn at(
        source: Arc<Dataset>,
        quasi: &QuasiHierarchies,
        lv: LevelVector,
        k: usize,
        suppression_limit: f64,
    ) -> Result<Self> {
        let index = QuasiIndex::build(&source, quasi)?;
        Self::from_index(source, quasi, &index, lv, k, suppression_limit)
    }

    pub(crate) fn from_index(
        source: Arc<Dataset>,
        quasi: &QuasiHierarchies,
        index: &QuasiIndex,
        lv: LevelVector,
        k: usize,
        suppression_limit: f64,
    ) -> Result<Self> {
        validate_params(k, suppression_limit)?;
        let all = index.classes(&lv)?;
        let check = check_k(&all, k, suppression_limit, source.len());
        if !check.satisfies {
            return Err(Error::NotAnonymous {
                level_vector: lv.to_string(),
                k,
                suppression_limit,
            });
        }
        let classes = all.into_iter().filter(|c| c.size() >= k).collect();
        let quasi_columns = source.schema().indices_of(quasi.attributes())?;
        Ok(AnonymizedView {
            source,
            quasi: quasi.clone(),
            quasi_columns,
            level_vector: lv,
            classes,
            suppressed: check.suppressed,
            k,
            suppression_limit,
        })
    }

    pub fn source(&self) -> &Arc<Dataset> {
        &self.source
    }

    pub fn quasi(&self) -> &QuasiHierarchies {
        &self.quasi
    }

    pub fn level_vector(&self) -> &LevelVector {
        &self.level_vector
    }

    pub fn classes(&self) -> &[EquivalenceClass] {
        &self.classes
    }

    pub fn suppressed(&self) -> &[RecordId] {
        &self.suppressed
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn suppression_limit(&self) -> f64 {
        self.suppression_limit
    }

    pub fn retained_len(&self) -> usize {
        self.source.len() - self.suppressed.len()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(EquivalenceClass::size).collect()
    }

    pub fn sensitive_columns(&self) -> Vec<usize> {
        self.source.schema().sensitive_indices()
    }

    /// Column names of the released table: quasi attributes then sensitive attributes.
    pub fn release_header(&self) -> Vec<String> {
        let schema = self.source.schema();
        self.quasi
            .attributes()
            .iter()
            .cloned()
            .chain(
                self.sensitive_columns()
                    .into_iter()
                    .map(|i| schema.attributes()[i].name.clone()),
            )
            .collect()
    }

    /// Retained records as (record id, generalized quasi tuple, sensitive values), in
    /// source order.
    pub fn generalized_rows(&self) -> Vec<(RecordId, Vec<String>, Vec<String>)> {
        let tuple_of: HashMap<RecordId, &Vec<String>> = self
            .classes
            .iter()
            .flat_map(|c| c.members.iter().map(move |&id| (id, &c.tuple)))
            .collect();
        let sensitive = self.sensitive_columns();
        self.source
            .iter()
            .filter_map(|(id, row)| {
                let tuple = tuple_of.get(&id)?;
                let sens = sensitive.iter().map(|&c| row[c].clone()).collect();
                Some((id, (*tuple).clone(), sens))
            })
            .collect()
    }

    /// Raw quasi values of a source record, in quasi attribute order.
    pub fn raw_quasi(&self, row: &[String]) -> Vec<String> {
        self.quasi_columns.iter().map(|&c| row[c].clone()).collect()
    }

    pub fn loss(&self) -> Loss {
        loss_metrics(self)
    }

    pub fn manifest(&self) -> ViewManifest {
        let mut census = BTreeMap::new();
        for c in &self.classes {
            *census.entry(c.size()).or_insert(0usize) += 1;
        }
        ViewManifest {
            source: None,
            quasi_attributes: self.quasi.attributes().to_vec(),
            level_vector: self.level_vector.clone(),
            k: self.k,
            suppression_limit: self.suppression_limit,
            records: self.source.len(),
            suppressed: self.suppressed.len(),
            class_count: self.classes.len(),
            class_census: census,
            loss: self.loss(),
        }
    }

    /// Writes `table.csv` (the generalized release table) and `manifest.json` into `dir`.
    pub fn write(&self, dir: &Path, source: Option<SourcePaths>) -> Result<ViewManifest> {
        let mut buf = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(self.release_header())?;
            for (_, tuple, sens) in self.generalized_rows() {
                w.write_record(tuple.iter().chain(&sens))?;
            }
            w.flush().map_err(|e| Error::io(dir, e))?;
        }
        atomic_write(&dir.join("table.csv"), &buf)?;
        let mut manifest = self.manifest();
        manifest.source = source;
        write_json(&dir.join("manifest.json"), &manifest)?;
        Ok(manifest)
    }
}

fn validate_params(k: usize, suppression_limit: f64) -> Result<()> {
    if k == 0 {
        return Err(Error::Policy("k must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&suppression_limit) {
        return Err(Error::Policy(format!(
            "suppression limit {suppression_limit} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Inputs a view was computed from, recorded so later stages can rebuild it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcePaths {
    pub data: String,
    pub schema: String,
    pub hierarchies: String,
    /// Present when the view was computed over a uniform sample of `data`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourcePaths>,
    pub quasi_attributes: Vec<String>,
    pub level_vector: LevelVector,
    pub k: usize,
    pub suppression_limit: f64,
    pub records: usize,
    pub suppressed: usize,
    pub class_count: usize,
    /// class size -> number of classes of that size
    pub class_census: BTreeMap<usize, usize>,
    pub loss: Loss,
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::dataset::{AttributeSchema, Role, Schema, ValueKind};
    use crate::hierarchy::{GeneralizationHierarchy, LabelStyle};

    /// Seven-record example: Age (5 levels), Gender (2 levels), ZIP (3 levels).
    pub fn seven_records() -> (Arc<Dataset>, QuasiHierarchies) {
        let schema = Schema::new(vec![
            AttributeSchema::new("Age", Role::Quasi, ValueKind::Integer),
            AttributeSchema::new("Gender", Role::Quasi, ValueKind::Categorical),
            AttributeSchema::new("ZIP", Role::Quasi, ValueKind::Code { length: 5 }),
        ])
        .unwrap();
        let rows = [
            ("18", "13122"),
            ("18", "13122"),
            ("19", "13122"),
            ("19", "13122"),
            ("18", "13121"),
            ("20", "13121"),
            ("20", "13121"),
        ]
        .iter()
        .map(|(a, z)| vec![a.to_string(), "Male".to_string(), z.to_string()])
        .collect();
        let data = Dataset::from_rows(schema, rows).unwrap();
        let quasi = QuasiHierarchies::new(vec![
            GeneralizationHierarchy::interval("Age", &[3, 6, 12], 0, LabelStyle::Inclusive).unwrap(),
            GeneralizationHierarchy::mapping("Gender", [("Male", vec!["Person"]), ("Female", vec!["Person"])])
                .unwrap(),
            GeneralizationHierarchy::mapping(
                "ZIP",
                [("13121", vec!["1312*", "*"]), ("13122", vec!["1312*", "*"])],
            )
            .unwrap(),
        ]);
        (Arc::new(data), quasi)
    }

    fn class(sizes: &[usize]) -> Vec<EquivalenceClass> {
        let mut next = 0;
        sizes
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let members = (next..next + s as u64).collect();
                next += s as u64;
                EquivalenceClass {
                    tuple: vec![i.to_string()],
                    members,
                }
            })
            .collect()
    }

    #[test]
    fn seven_records_classes_at_age_interval() {
        let (d, q) = seven_records();
        let classes = compute_classes(&d, &LevelVector(vec![1, 0, 0]), &q).unwrap();
        let got: Vec<(Vec<&str>, usize)> = classes
            .iter()
            .map(|c| (c.tuple.iter().map(String::as_str).collect(), c.size()))
            .collect();
        assert_eq!(
            got,
            vec![
                (vec!["18-20", "Male", "13121"], 3),
                (vec!["18-20", "Male", "13122"], 4)
            ]
        );
    }

    #[test]
    fn identity_and_full_generalization() {
        let (d, q) = seven_records();
        let raw = compute_classes(&d, &LevelVector::zeros(3), &q).unwrap();
        assert_eq!(raw.iter().map(|c| c.size()).collect::<Vec<_>>(), vec![1, 2, 2, 2]);
        let top = compute_classes(&d, &q.top(), &q).unwrap();
        assert_eq!(top.len(), 1);
        assert_eq!(top[0].size(), 7);
        assert_eq!(top[0].tuple, vec!["*", "Person", "*"]);
    }

    #[test]
    fn check_k_examples() {
        let (d, q) = seven_records();
        let classes = compute_classes(&d, &LevelVector(vec![1, 0, 0]), &q).unwrap();
        let c = check_k(&classes, 2, 0.0, 7);
        assert!(c.satisfies);
        assert!(c.suppressed.is_empty());

        let c = check_k(&class(&[1, 9]), 2, 0.05, 10);
        assert!(!c.satisfies);
        assert_eq!(c.suppressed, vec![0]);

        let c = check_k(&class(&[1, 9]), 2, 0.15, 10);
        assert!(c.satisfies);
        assert_eq!(c.suppressed, vec![0]);
    }

    #[test]
    fn view_at_rejects_failing_node() {
        let (d, q) = seven_records();
        let err = AnonymizedView::at(d, &q, LevelVector::zeros(3), 2, 0.0).unwrap_err();
        assert!(matches!(err, Error::NotAnonymous { .. }));
    }

    #[test]
    fn view_writes_table_and_manifest() {
        let (d, q) = seven_records();
        let view = AnonymizedView::at(d, &q, LevelVector(vec![1, 0, 0]), 2, 0.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let m = view.write(dir.path(), None).unwrap();
        assert_eq!(m.class_census, BTreeMap::from([(3, 1), (4, 1)]));
        let table = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
        assert_eq!(table.lines().next().unwrap(), "Age,Gender,ZIP");
        assert_eq!(table.lines().nth(1).unwrap(), "18-20,Male,13122");
        assert_eq!(table.lines().count(), 8);
        let back: ViewManifest =
            crate::io::read_json(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(back, m);
    }
}
