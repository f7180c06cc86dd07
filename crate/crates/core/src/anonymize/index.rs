use std::collections::HashMap;

use crate::dataset::{Dataset, RecordId};
use crate::error::{Error, Result};
use crate::hierarchy::{LevelVector, QuasiHierarchies};

use super::EquivalenceClass;

/// Dictionary-encoded generalizations of every quasi value at every level.
///
/// Each distinct raw value is generalized once per level; rows then carry one code per
/// (attribute, level), so grouping a lattice node is pure integer work.
#[derive(Debug, Clone)]
pub struct QuasiIndex {
    ids: Vec<RecordId>,
    level_counts: Vec<usize>,
    /// codes[attribute][level][row]
    codes: Vec<Vec<Vec<u32>>>,
    /// labels[attribute][level][code]
    labels: Vec<Vec<Vec<String>>>,
}

impl QuasiIndex {
    pub fn build(data: &Dataset, quasi: &QuasiHierarchies) -> Result<Self> {
        let columns = data.schema().indices_of(quasi.attributes())?;
        let mut codes = Vec::with_capacity(columns.len());
        let mut labels = Vec::with_capacity(columns.len());
        for (h, &col) in quasi.hierarchies().iter().zip(&columns) {
            let levels = h.level_count();
            let mut raw_code: HashMap<&str, usize> = HashMap::new();
            let mut raw_values: Vec<&str> = Vec::new();
            let row_raw: Vec<usize> = data
                .rows()
                .iter()
                .map(|row| {
                    let v = row[col].as_str();
                    *raw_code.entry(v).or_insert_with(|| {
                        raw_values.push(v);
                        raw_values.len() - 1
                    })
                })
                .collect();

            let mut attr_codes = Vec::with_capacity(levels);
            let mut attr_labels = Vec::with_capacity(levels);
            for level in 0..levels {
                let mut dict: HashMap<String, u32> = HashMap::new();
                let mut names: Vec<String> = Vec::new();
                let per_raw: Vec<u32> = raw_values
                    .iter()
                    .map(|v| {
                        let g = h.generalize(v, level)?;
                        Ok(*dict.entry(g.clone()).or_insert_with(|| {
                            names.push(g);
                            (names.len() - 1) as u32
                        }))
                    })
                    .collect::<Result<_>>()?;
                attr_codes.push(row_raw.iter().map(|&r| per_raw[r]).collect());
                attr_labels.push(names);
            }
            codes.push(attr_codes);
            labels.push(attr_labels);
        }
        Ok(QuasiIndex {
            ids: data.ids().to_vec(),
            level_counts: quasi.level_counts(),
            codes,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn key(&self, lv: &LevelVector, row: usize) -> Vec<u32> {
        self.codes
            .iter()
            .zip(lv.levels())
            .map(|(attr, &l)| attr[l][row])
            .collect()
    }

    /// Sizes of the groups at `lv`, in no particular order.
    pub fn class_sizes(&self, lv: &LevelVector) -> Vec<usize> {
        let mut counts: HashMap<Vec<u32>, usize> = HashMap::new();
        for row in 0..self.len() {
            *counts.entry(self.key(lv, row)).or_default() += 1;
        }
        counts.into_values().collect()
    }

    /// Row positions grouped by generalized key.
    pub fn groups(&self, lv: &LevelVector) -> HashMap<Vec<u32>, Vec<usize>> {
        let mut groups: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
        for row in 0..self.len() {
            groups.entry(self.key(lv, row)).or_default().push(row);
        }
        groups
    }

    pub fn decode(&self, lv: &LevelVector, key: &[u32]) -> Vec<String> {
        self.labels
            .iter()
            .zip(lv.levels())
            .zip(key)
            .map(|((attr, &l), &code)| attr[l][code as usize].clone())
            .collect()
    }

    /// Generalized tuple of the record at row position `row`.
    pub fn tuple(&self, lv: &LevelVector, row: usize) -> Vec<String> {
        self.decode(lv, &self.key(lv, row))
    }

    pub fn id(&self, row: usize) -> RecordId {
        self.ids[row]
    }

    pub fn check(&self, lv: &LevelVector) -> Result<()> {
        let ok = lv.len() == self.level_counts.len()
            && lv.levels().iter().zip(&self.level_counts).all(|(l, c)| l < c);
        if ok {
            Ok(())
        } else {
            Err(Error::Schema(format!(
                "level vector {lv} invalid for level counts {:?}",
                self.level_counts
            )))
        }
    }

    pub fn classes(&self, lv: &LevelVector) -> Result<Vec<EquivalenceClass>> {
        self.check(lv)?;
        let mut classes: Vec<EquivalenceClass> = self
            .groups(lv)
            .into_iter()
            .map(|(key, rows)| {
                let mut members: Vec<RecordId> = rows.iter().map(|&r| self.ids[r]).collect();
                members.sort_unstable();
                EquivalenceClass {
                    tuple: self.decode(lv, &key),
                    members,
                }
            })
            .collect();
        classes.sort_by(|a, b| a.tuple.cmp(&b.tuple));
        Ok(classes)
    }
}
