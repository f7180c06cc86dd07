//! Tabular dataset model: schemas with attribute roles, CSV ingestion, direct-identifier
//! stripping and uniform sampling.
//!
//! Datasets are immutable once built. Every derived dataset keeps the `record_ids` of the
//! rows it was derived from, so records can be traced across stripping and sampling.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{atomic_write, read_toml};

pub type RecordId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Direct,
    Quasi,
    Sensitive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ValueKind {
    Categorical,
    Integer,
    /// Fixed-length alphanumeric code such as a postcode.
    Code { length: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttributeSchema {
    pub name: String,
    pub role: Role,
    #[serde(flatten)]
    pub kind: ValueKind,
    /// Name of the generalization hierarchy for a quasi attribute. Defaults to the
    /// attribute name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hierarchy: Option<String>,
}

impl AttributeSchema {
    pub fn new(name: impl Into<String>, role: Role, kind: ValueKind) -> Self {
        AttributeSchema {
            name: name.into(),
            role,
            kind,
            hierarchy: None,
        }
    }

    pub fn hierarchy_name(&self) -> &str {
        self.hierarchy.as_deref().unwrap_or(&self.name)
    }

    /// Checks `raw` against the attribute kind and returns its canonical form.
    pub fn validate(&self, raw: &str) -> std::result::Result<String, String> {
        match self.kind {
            ValueKind::Categorical => Ok(raw.to_string()),
            ValueKind::Integer => raw
                .trim()
                .parse::<i64>()
                .map(|v| v.to_string())
                .map_err(|_| "not an integer".to_string()),
            ValueKind::Code { length } => {
                let n = raw.chars().count();
                if n != length {
                    Err(format!("expected a {length}-character code, got {n} characters"))
                } else if !raw.chars().all(|c| c.is_ascii_alphanumeric()) {
                    Err("code must be alphanumeric".to_string())
                } else {
                    Ok(raw.to_string())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(rename = "attribute", default)]
    attributes: Vec<AttributeSchema>,
}

impl Schema {
    pub fn new(attributes: Vec<AttributeSchema>) -> Result<Self> {
        let mut seen = HashSet::new();
        for a in &attributes {
            if a.name.is_empty() {
                return Err(Error::Schema("attribute with empty name".into()));
            }
            if !seen.insert(a.name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute `{}`", a.name)));
            }
            if let ValueKind::Code { length: 0 } = a.kind {
                return Err(Error::Schema(format!("code attribute `{}` has length 0", a.name)));
            }
        }
        Ok(Schema { attributes })
    }

    /// Reads a TOML schema file made of `[[attribute]]` tables.
    pub fn load(path: &Path) -> Result<Self> {
        let raw: Schema = read_toml(path)?;
        Schema::new(raw.attributes)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("schema serializes")
    }

    pub fn attributes(&self) -> &[AttributeSchema] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.attributes.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn indices_with_role(&self, role: Role) -> Vec<usize> {
        (0..self.attributes.len())
            .filter(|&i| self.attributes[i].role == role)
            .collect()
    }

    pub fn quasi_indices(&self) -> Vec<usize> {
        self.indices_with_role(Role::Quasi)
    }

    pub fn sensitive_indices(&self) -> Vec<usize> {
        self.indices_with_role(Role::Sensitive)
    }

    /// Resolves attribute names to column positions.
    pub fn indices_of(&self, names: &[String]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.index_of(n)
                    .ok_or_else(|| Error::Schema(format!("attribute `{n}` not in schema")))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    schema: Schema,
    ids: Vec<RecordId>,
    rows: Vec<Vec<String>>,
}

impl Dataset {
    /// Builds a dataset from already-parsed rows, validating each value against its kind.
    /// Record ids are the 0-based row positions.
    pub fn from_rows(schema: Schema, rows: Vec<Vec<String>>) -> Result<Self> {
        let ids = (0..rows.len() as RecordId).collect();
        Dataset::with_ids(schema, ids, rows)
    }

    pub fn with_ids(schema: Schema, ids: Vec<RecordId>, rows: Vec<Vec<String>>) -> Result<Self> {
        if ids.len() != rows.len() {
            return Err(Error::Schema(format!(
                "{} ids for {} rows",
                ids.len(),
                rows.len()
            )));
        }
        let mut seen = HashSet::with_capacity(ids.len());
        if let Some(dup) = ids.iter().find(|id| !seen.insert(**id)) {
            return Err(Error::Schema(format!("duplicate record id {dup}")));
        }
        let mut out = Vec::with_capacity(rows.len());
        for (r, row) in rows.into_iter().enumerate() {
            out.push(validate_row(&schema, r + 1, row)?);
        }
        Ok(Dataset {
            schema,
            ids,
            rows: out,
        })
    }

    pub fn load(path: &Path, schema: &Schema) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Dataset::from_reader(file, schema)
    }

    /// Parses comma-separated UTF-8 text whose header row lists the schema attributes in order.
    pub fn from_reader<R: Read>(reader: R, schema: &Schema) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let expected = schema.names();
        if header != expected {
            return Err(Error::HeaderMismatch {
                expected: expected.join(","),
                found: header.join(","),
            });
        }
        let mut rows = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row_no = r + 1;
            if rec.len() != schema.len() {
                return Err(Error::InvalidValue {
                    row: row_no,
                    attribute: "*".into(),
                    value: rec.iter().collect::<Vec<_>>().join(","),
                    reason: format!("expected {} fields, found {}", schema.len(), rec.len()),
                });
            }
            rows.push(validate_row(
                schema,
                row_no,
                rec.iter().map(str::to_string).collect(),
            )?);
        }
        let ids = (0..rows.len() as RecordId).collect();
        Ok(Dataset {
            schema: schema.clone(),
            ids,
            rows,
        })
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.schema.names())?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| Error::io("<csv writer>", e))?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        atomic_write(path, &buf)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ids(&self) -> &[RecordId] {
        &self.ids
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[String] {
        &self.rows[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (RecordId, &[String])> {
        self.ids.iter().copied().zip(self.rows.iter().map(Vec::as_slice))
    }

    /// Projects the dataset onto the given columns, keeping record ids.
    pub fn project(&self, columns: &[usize]) -> Dataset {
        let attrs = columns
            .iter()
            .map(|&c| self.schema.attributes[c].clone())
            .collect();
        let rows = self
            .rows
            .iter()
            .map(|row| columns.iter().map(|&c| row[c].clone()).collect())
            .collect();
        Dataset {
            schema: Schema { attributes: attrs },
            ids: self.ids.clone(),
            rows,
        }
    }

    /// Drops every direct-identifier attribute.
    pub fn strip_direct(&self) -> Dataset {
        let keep: Vec<usize> = (0..self.schema.len())
            .filter(|&i| self.schema.attributes[i].role != Role::Direct)
            .collect();
        self.project(&keep)
    }

    /// Draws `n` distinct records uniformly without replacement. The result keeps the
    /// input's row order and is deterministic for a fixed `(n, seed)`.
    pub fn sample_uniform(&self, n: usize, seed: u64) -> Result<Dataset> {
        if n > self.len() {
            return Err(Error::SampleTooLarge {
                requested: n,
                available: self.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = rand::seq::index::sample(&mut rng, self.len(), n).into_vec();
        picked.sort_unstable();
        Ok(self.select(&picked))
    }

    /// Keeps the rows at the given positions, in that order.
    pub fn select(&self, positions: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            ids: positions.iter().map(|&i| self.ids[i]).collect(),
            rows: positions.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

fn validate_row(schema: &Schema, row_no: usize, row: Vec<String>) -> Result<Vec<String>> {
    if row.len() != schema.len() {
        return Err(Error::InvalidValue {
            row: row_no,
            attribute: "*".into(),
            value: row.join(","),
            reason: format!("expected {} fields, found {}", schema.len(), row.len()),
        });
    }
    row.into_iter()
        .zip(&schema.attributes)
        .map(|(v, attr)| {
            if v.is_empty() {
                return Err(Error::MissingValue {
                    row: row_no,
                    attribute: attr.name.clone(),
                });
            }
            attr.validate(&v).map_err(|reason| Error::InvalidValue {
                row: row_no,
                attribute: attr.name.clone(),
                value: v.clone(),
                reason,
            })
        })
        .collect()
}
