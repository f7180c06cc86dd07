//! Generalization hierarchies for quasi-identifiers.
//!
//! Three kinds are supported:
//!
//! * `mapping`: an enumerated table giving, for every raw value, its ancestor at each level.
//! * `interval`: integer values bucketed into nested intervals of increasing width, then `*`.
//! * `suffix-mask`: fixed-length codes where level `l` masks the last `l` characters with `*`.
//!
//! Level 0 is always the raw value and the top level always maps the whole domain to a single
//! root value.
//!
//! Hierarchy files are TOML documents with one `[[hierarchy]]` table per attribute:
//!
//! ```toml
//! [[hierarchy]]
//! name = "gender"
//! kind = "mapping"
//! table = { Male = ["Person"], Female = ["Person"], Other = ["Person"] }
//!
//! [[hierarchy]]
//! name = "yob"
//! kind = "interval"
//! widths = [2, 4, 8]      # each width divides the next
//! origin = 0              # optional anchor, default 0
//! labels = "exclusive"    # "1980-1982" covers 1980 and 1981; "inclusive" renders "1980-1981"
//! min = 1900              # optional domain bounds
//! max = 2010
//!
//! [[hierarchy]]
//! name = "zip"
//! kind = "suffix-mask"
//! length = 5
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Schema;
use crate::error::{Error, Result};
use crate::io::read_toml;

pub const ROOT: &str = "*";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelStyle {
    /// `lo-hi` where `hi` is the first value past the interval.
    #[default]
    Exclusive,
    /// `lo-hi` where `hi` is the last value inside the interval.
    Inclusive,
}

/// Hierarchy definition as written in a hierarchy file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum HierarchyDef {
    Mapping {
        table: BTreeMap<String, Vec<String>>,
    },
    Interval {
        widths: Vec<i64>,
        #[serde(default)]
        origin: i64,
        #[serde(default)]
        labels: LabelStyle,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min: Option<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max: Option<i64>,
    },
    SuffixMask {
        length: usize,
    },
}

#[derive(Debug, Clone)]
struct MappingTable {
    /// raw value -> [raw, level1, ..., top]
    paths: BTreeMap<String, Vec<String>>,
    /// per level: value -> some raw value generalizing to it
    representative: Vec<HashMap<String, String>>,
}

#[derive(Debug, Clone)]
enum Kind {
    Mapping(MappingTable),
    Interval {
        widths: Vec<i64>,
        origin: i64,
        labels: LabelStyle,
        min: Option<i64>,
        max: Option<i64>,
    },
    SuffixMask {
        length: usize,
    },
}

#[derive(Debug, Clone)]
pub struct GeneralizationHierarchy {
    attribute: String,
    def: HierarchyDef,
    kind: Kind,
}

impl GeneralizationHierarchy {
    pub fn new(attribute: impl Into<String>, def: HierarchyDef) -> Result<Self> {
        let attribute = attribute.into();
        let kind = match &def {
            HierarchyDef::Mapping { table } => Kind::Mapping(build_mapping(&attribute, table)?),
            HierarchyDef::Interval {
                widths,
                origin,
                labels,
                min,
                max,
            } => {
                if widths.iter().any(|&w| w < 2) {
                    return Err(Error::hierarchy(&attribute, "interval widths must be >= 2"));
                }
                if widths.windows(2).any(|p| p[1] <= p[0] || p[1] % p[0] != 0) {
                    return Err(Error::hierarchy(
                        &attribute,
                        "interval widths must increase and each must divide the next",
                    ));
                }
                if let (Some(lo), Some(hi)) = (min, max) {
                    if lo > hi {
                        return Err(Error::hierarchy(&attribute, "min exceeds max"));
                    }
                }
                Kind::Interval {
                    widths: widths.clone(),
                    origin: *origin,
                    labels: *labels,
                    min: *min,
                    max: *max,
                }
            }
            HierarchyDef::SuffixMask { length } => {
                if *length == 0 {
                    return Err(Error::hierarchy(&attribute, "suffix-mask length must be >= 1"));
                }
                Kind::SuffixMask { length: *length }
            }
        };
        Ok(GeneralizationHierarchy {
            attribute,
            def,
            kind,
        })
    }

    pub fn mapping<K, V>(attribute: &str, table: impl IntoIterator<Item = (K, Vec<V>)>) -> Result<Self>
    where
        K: Into<String>,
        V: Into<String>,
    {
        let table = table
            .into_iter()
            .map(|(k, v)| (k.into(), v.into_iter().map(Into::into).collect()))
            .collect();
        GeneralizationHierarchy::new(attribute, HierarchyDef::Mapping { table })
    }

    pub fn interval(attribute: &str, widths: &[i64], origin: i64, labels: LabelStyle) -> Result<Self> {
        GeneralizationHierarchy::new(
            attribute,
            HierarchyDef::Interval {
                widths: widths.to_vec(),
                origin,
                labels,
                min: None,
                max: None,
            },
        )
    }

    pub fn suffix_mask(attribute: &str, length: usize) -> Result<Self> {
        GeneralizationHierarchy::new(attribute, HierarchyDef::SuffixMask { length })
    }

    pub fn attribute(&self) -> &str {
        &self.attribute
    }

    pub fn definition(&self) -> &HierarchyDef {
        &self.def
    }

    pub fn level_count(&self) -> usize {
        match &self.kind {
            Kind::Mapping(m) => m.representative.len(),
            Kind::Interval { widths, .. } => widths.len() + 2,
            Kind::SuffixMask { length } => length + 1,
        }
    }

    pub fn top_level(&self) -> usize {
        self.level_count() - 1
    }

    fn check_level(&self, level: usize) -> Result<()> {
        if level >= self.level_count() {
            return Err(Error::LevelOutOfRange {
                attribute: self.attribute.clone(),
                level,
                level_count: self.level_count(),
            });
        }
        Ok(())
    }

    fn outside(&self, v: &str) -> Error {
        Error::OutsideDomain {
            attribute: self.attribute.clone(),
            value: v.to_string(),
        }
    }

    /// Returns the level-`level` ancestor of the raw value `v`.
    pub fn generalize(&self, v: &str, level: usize) -> Result<String> {
        self.check_level(level)?;
        match &self.kind {
            Kind::Mapping(m) => m
                .paths
                .get(v)
                .map(|p| p[level].clone())
                .ok_or_else(|| self.outside(v)),
            Kind::Interval {
                widths,
                origin,
                labels,
                min,
                max,
            } => {
                let n = self.parse_raw_int(v, *min, *max)?;
                if level == 0 {
                    Ok(n.to_string())
                } else if level == widths.len() + 1 {
                    Ok(ROOT.to_string())
                } else {
                    let w = widths[level - 1];
                    let lo = origin + (n - origin).div_euclid(w) * w;
                    Ok(render_interval(lo, w, *labels))
                }
            }
            Kind::SuffixMask { length } => {
                if !is_code(v, *length) {
                    return Err(self.outside(v));
                }
                Ok(mask(v, level))
            }
        }
    }

    fn parse_raw_int(&self, v: &str, min: Option<i64>, max: Option<i64>) -> Result<i64> {
        let n: i64 = v.trim().parse().map_err(|_| self.outside(v))?;
        if min.is_some_and(|lo| n < lo) || max.is_some_and(|hi| n > hi) {
            return Err(self.outside(v));
        }
        Ok(n)
    }

    /// All levels at which `v` is a valid hierarchy value. Most values live at exactly one
    /// level; a mapping table may reuse a label on several levels.
    pub fn levels_of(&self, v: &str) -> Vec<usize> {
        match &self.kind {
            Kind::Mapping(m) => m
                .representative
                .iter()
                .enumerate()
                .filter(|(_, reps)| reps.contains_key(v))
                .map(|(l, _)| l)
                .collect(),
            Kind::Interval {
                widths,
                origin,
                labels,
                min,
                max,
            } => {
                if v == ROOT {
                    return vec![widths.len() + 1];
                }
                if let Some((lo, width)) = parse_interval(v, *labels) {
                    let aligned = (lo - origin).rem_euclid(width) == 0;
                    let in_domain = min.is_none_or(|m| lo + width > m) && max.is_none_or(|m| lo <= m);
                    return match widths.iter().position(|&w| w == width) {
                        Some(i) if aligned && in_domain => vec![i + 1],
                        _ => vec![],
                    };
                }
                match self.parse_raw_int(v, *min, *max) {
                    Ok(_) => vec![0],
                    Err(_) => vec![],
                }
            }
            Kind::SuffixMask { length } => {
                if v.chars().count() != *length {
                    return vec![];
                }
                let stars = v.chars().rev().take_while(|&c| c == '*').count();
                let head: String = v.chars().take(length - stars).collect();
                if head.chars().all(|c| c.is_ascii_alphanumeric()) {
                    vec![stars]
                } else {
                    vec![]
                }
            }
        }
    }

    /// Generalizes a value known to sit at level `from` up to level `to >= from`.
    pub fn lift(&self, v: &str, from: usize, to: usize) -> Result<String> {
        self.check_level(to)?;
        if to < from || !self.levels_of(v).contains(&from) {
            return Err(self.outside(v));
        }
        if to == from {
            return Ok(v.to_string());
        }
        match &self.kind {
            Kind::Mapping(m) => {
                let raw = &m.representative[from][v];
                Ok(m.paths[raw][to].clone())
            }
            Kind::Interval { labels, .. } => {
                // any member of the interval generalizes identically
                let member = if from == 0 {
                    v.trim().to_string()
                } else {
                    parse_interval(v, *labels).expect("validated above").0.to_string()
                };
                self.generalize(&member, to)
            }
            Kind::SuffixMask { .. } => Ok(mask(v, to)),
        }
    }

    /// True iff `a` equals `b` generalized up to `a`'s level.
    pub fn is_ancestor_at(&self, a: &str, level_a: usize, b: &str, level_b: usize) -> bool {
        level_a >= level_b && self.lift(b, level_b, level_a).is_ok_and(|x| x == a)
    }

    /// True iff generalizing `b` up to the level of `a` yields `a`. Reflexive.
    pub fn is_ancestor(&self, a: &str, b: &str) -> Result<bool> {
        let la = self.levels_of(a);
        let lb = self.levels_of(b);
        if la.is_empty() {
            return Err(self.outside(a));
        }
        if lb.is_empty() {
            return Err(self.outside(b));
        }
        Ok(la
            .iter()
            .any(|&i| lb.iter().any(|&j| self.is_ancestor_at(a, i, b, j))))
    }
}

fn build_mapping(attribute: &str, table: &BTreeMap<String, Vec<String>>) -> Result<MappingTable> {
    let depth = match table.values().next() {
        Some(v) => v.len(),
        None => return Err(Error::hierarchy(attribute, "mapping table is empty")),
    };
    if depth == 0 {
        return Err(Error::hierarchy(attribute, "mapping table needs at least one ancestor level"));
    }
    let mut paths = BTreeMap::new();
    for (raw, ancestors) in table {
        if ancestors.len() != depth {
            return Err(Error::hierarchy(
                attribute,
                format!("value {raw:?} has {} levels, expected {depth}", ancestors.len()),
            ));
        }
        let mut path = Vec::with_capacity(depth + 1);
        path.push(raw.clone());
        path.extend(ancestors.iter().cloned());
        paths.insert(raw.clone(), path);
    }
    let level_count = depth + 1;
    let mut representative = vec![HashMap::new(); level_count];
    let mut parent: Vec<HashMap<&str, &str>> = vec![HashMap::new(); level_count];
    for (raw, path) in &paths {
        for l in 0..level_count {
            representative[l].entry(path[l].clone()).or_insert_with(|| raw.clone());
            if l + 1 < level_count {
                let p = parent[l].entry(path[l].as_str()).or_insert(path[l + 1].as_str());
                if *p != path[l + 1] {
                    return Err(Error::hierarchy(
                        attribute,
                        format!("value {:?} at level {l} has two parents", path[l]),
                    ));
                }
            }
        }
    }
    if representative[level_count - 1].len() != 1 {
        return Err(Error::hierarchy(attribute, "top level must be a single root value"));
    }
    Ok(MappingTable {
        paths,
        representative,
    })
}

fn render_interval(lo: i64, width: i64, labels: LabelStyle) -> String {
    match labels {
        LabelStyle::Exclusive => format!("{lo}-{}", lo + width),
        LabelStyle::Inclusive => format!("{lo}-{}", lo + width - 1),
    }
}

/// Parses `lo-hi` into `(lo, width)`.
fn parse_interval(v: &str, labels: LabelStyle) -> Option<(i64, i64)> {
    let split = v.get(1..)?.find('-')? + 1;
    let lo: i64 = v[..split].parse().ok()?;
    let hi: i64 = v[split + 1..].parse().ok()?;
    let width = match labels {
        LabelStyle::Exclusive => hi - lo,
        LabelStyle::Inclusive => hi - lo + 1,
    };
    (width > 0).then_some((lo, width))
}

fn is_code(v: &str, length: usize) -> bool {
    v.chars().count() == length && v.chars().all(|c| c.is_ascii_alphanumeric())
}

fn mask(v: &str, level: usize) -> String {
    let n = v.chars().count();
    let keep = n.saturating_sub(level);
    v.chars().take(keep).chain(std::iter::repeat_n('*', n - keep)).collect()
}

/// One generalization level per quasi attribute; a node of the generalization lattice.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LevelVector(pub Vec<usize>);

impl LevelVector {
    pub fn zeros(n: usize) -> Self {
        LevelVector(vec![0; n])
    }

    pub fn levels(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn height(&self) -> usize {
        self.0.iter().sum()
    }

    /// Lattice partial order: componentwise `<=`.
    pub fn le(&self, other: &LevelVector) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Every node of the lattice spanned by `level_counts`, in lexicographic order.
    pub fn lattice(level_counts: &[usize]) -> Vec<LevelVector> {
        let mut out = vec![Vec::new()];
        for &count in level_counts {
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    (0..count).map(move |l| {
                        let mut v = prefix.clone();
                        v.push(l);
                        v
                    })
                })
                .collect();
        }
        out.into_iter().map(LevelVector).collect()
    }
}

impl fmt::Display for LevelVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct HierarchyFileEntry {
    name: String,
    #[serde(flatten)]
    def: HierarchyDef,
}

#[derive(Debug, Deserialize, Serialize)]
struct HierarchyFile {
    #[serde(default)]
    hierarchy: Vec<HierarchyFileEntry>,
}

/// Named hierarchies as loaded from a hierarchy file.
#[derive(Debug, Clone, Default)]
pub struct HierarchySet {
    by_name: BTreeMap<String, GeneralizationHierarchy>,
}

impl HierarchySet {
    pub fn new(hierarchies: impl IntoIterator<Item = GeneralizationHierarchy>) -> Result<Self> {
        let mut by_name = BTreeMap::new();
        for h in hierarchies {
            let name = h.attribute.clone();
            if by_name.insert(name.clone(), h).is_some() {
                return Err(Error::hierarchy(&name, "declared twice"));
            }
        }
        Ok(HierarchySet { by_name })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: HierarchyFile = read_toml(path)?;
        Self::from_file(file)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: HierarchyFile = toml::from_str(text).map_err(|e| Error::Config {
            path: "<inline>".into(),
            message: e.to_string(),
        })?;
        Self::from_file(file)
    }

    fn from_file(file: HierarchyFile) -> Result<Self> {
        let hs = file
            .hierarchy
            .into_iter()
            .map(|e| GeneralizationHierarchy::new(e.name, e.def))
            .collect::<Result<Vec<_>>>()?;
        HierarchySet::new(hs)
    }

    pub fn to_toml(&self) -> String {
        let file = HierarchyFile {
            hierarchy: self
                .by_name
                .values()
                .map(|h| HierarchyFileEntry {
                    name: h.attribute.clone(),
                    def: h.def.clone(),
                })
                .collect(),
        };
        toml::to_string_pretty(&file).expect("hierarchies serialize")
    }

    pub fn get(&self, name: &str) -> Option<&GeneralizationHierarchy> {
        self.by_name.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.by_name.keys().map(String::as_str)
    }

    /// Aligns hierarchies with the quasi attributes of `schema`, in schema order.
    pub fn for_schema(&self, schema: &Schema) -> Result<QuasiHierarchies> {
        let mut attrs = Vec::new();
        let mut hs = Vec::new();
        for i in schema.quasi_indices() {
            let a = &schema.attributes()[i];
            let h = self.get(a.hierarchy_name()).ok_or_else(|| {
                Error::Schema(format!(
                    "quasi attribute `{}` has no hierarchy `{}`",
                    a.name,
                    a.hierarchy_name()
                ))
            })?;
            attrs.push(a.name.clone());
            hs.push(h.clone());
        }
        Ok(QuasiHierarchies {
            attributes: attrs,
            hierarchies: hs,
        })
    }

    /// Aligns hierarchies with explicitly named attributes, each looked up by its own name.
    pub fn for_attributes(&self, names: &[String]) -> Result<QuasiHierarchies> {
        let hs = names
            .iter()
            .map(|n| {
                self.get(n)
                    .cloned()
                    .ok_or_else(|| Error::Schema(format!("no hierarchy for attribute `{n}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(QuasiHierarchies {
            attributes: names.to_vec(),
            hierarchies: hs,
        })
    }
}

/// Hierarchies for an ordered list of quasi attributes.
#[derive(Debug, Clone)]
pub struct QuasiHierarchies {
    attributes: Vec<String>,
    hierarchies: Vec<GeneralizationHierarchy>,
}

impl QuasiHierarchies {
    pub fn new(hierarchies: Vec<GeneralizationHierarchy>) -> Self {
        QuasiHierarchies {
            attributes: hierarchies.iter().map(|h| h.attribute.clone()).collect(),
            hierarchies,
        }
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn hierarchies(&self) -> &[GeneralizationHierarchy] {
        &self.hierarchies
    }

    pub fn len(&self) -> usize {
        self.hierarchies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hierarchies.is_empty()
    }

    pub fn level_counts(&self) -> Vec<usize> {
        self.hierarchies.iter().map(|h| h.level_count()).collect()
    }

    pub fn top(&self) -> LevelVector {
        LevelVector(self.hierarchies.iter().map(|h| h.top_level()).collect())
    }

    pub fn check(&self, lv: &LevelVector) -> Result<()> {
        if lv.len() != self.len() {
            return Err(Error::Schema(format!(
                "level vector {lv} has {} entries for {} quasi attributes",
                lv.len(),
                self.len()
            )));
        }
        for (h, &l) in self.hierarchies.iter().zip(lv.levels()) {
            h.check_level(l)?;
        }
        Ok(())
    }

    pub fn generalize_tuple<S: AsRef<str>>(&self, values: &[S], lv: &LevelVector) -> Result<Vec<String>> {
        self.hierarchies
            .iter()
            .zip(values)
            .zip(lv.levels())
            .map(|((h, v), &l)| h.generalize(v.as_ref(), l))
            .collect()
    }

    /// Per-attribute level of each value in a generalized tuple (lowest candidate level).
    pub fn infer_levels<S: AsRef<str>>(&self, tuple: &[S]) -> Result<LevelVector> {
        self.hierarchies
            .iter()
            .zip(tuple)
            .map(|(h, v)| {
                h.levels_of(v.as_ref())
                    .first()
                    .copied()
                    .ok_or_else(|| h.outside(v.as_ref()))
            })
            .collect::<Result<Vec<_>>>()
            .map(LevelVector)
    }
}
