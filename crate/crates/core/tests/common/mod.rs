#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Arc;

use decoykit::anonymize::{ola_search, AnonymizedView, LossMetric};
use decoykit::dataset::{AttributeSchema, Dataset, Role, Schema, ValueKind};
use decoykit::hierarchy::{GeneralizationHierarchy, LabelStyle, LevelVector, QuasiHierarchies};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn s(v: &[&str]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn skewed(rng: &mut ChaCha8Rng, n: usize, skew: f64) -> usize {
    // low indices are more likely as skew grows
    let u: f64 = rng.random();
    ((u.powf(1.0 + skew) * n as f64) as usize).min(n - 1)
}

/// Random table with `attrs` (1 to 4) quasi attributes plus one sensitive column.
pub fn random_instance(seed: u64, n: usize, attrs: usize) -> (Dataset, QuasiHierarchies) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let skew = rng.random_range(0.0..3.0);
    let mut pool: Vec<usize> = (0..4).collect();
    for i in (1..pool.len()).rev() {
        pool.swap(i, rng.random_range(0..=i));
    }
    let mut chosen: Vec<usize> = pool[..attrs.clamp(1, 4)].to_vec();
    chosen.sort_unstable();

    let mut schema = Vec::new();
    let mut hier = Vec::new();
    for &a in &chosen {
        match a {
            0 => {
                schema.push(AttributeSchema::new("zip", Role::Quasi, ValueKind::Code { length: 4 }));
                hier.push(GeneralizationHierarchy::suffix_mask("zip", 4).unwrap());
            }
            1 => {
                schema.push(AttributeSchema::new("age", Role::Quasi, ValueKind::Integer));
                let widths: &[i64] = if rng.random_bool(0.5) { &[5, 10, 20] } else { &[3, 6] };
                hier.push(GeneralizationHierarchy::interval("age", widths, 0, LabelStyle::Exclusive).unwrap());
            }
            2 => {
                schema.push(AttributeSchema::new("sex", Role::Quasi, ValueKind::Categorical));
                hier.push(
                    GeneralizationHierarchy::mapping("sex", [("F", vec!["*"]), ("M", vec!["*"]), ("X", vec!["*"])])
                        .unwrap(),
                );
            }
            _ => {
                schema.push(AttributeSchema::new("city", Role::Quasi, ValueKind::Categorical));
                let table: Vec<(String, Vec<String>)> = (0..8)
                    .map(|c| (format!("c{c}"), vec![format!("r{}", c % 3), "*".to_string()]))
                    .collect();
                hier.push(GeneralizationHierarchy::mapping("city", table).unwrap());
            }
        }
    }
    schema.push(AttributeSchema::new("diag", Role::Sensitive, ValueKind::Categorical));

    let prefixes = ["12", "13", "27", "94"];
    let rows = (0..n)
        .map(|_| {
            let mut row: Vec<String> = chosen
                .iter()
                .map(|&a| match a {
                    0 => format!("{}{:02}", prefixes[skewed(&mut rng, 4, skew)], skewed(&mut rng, 100, skew)),
                    1 => (18 + skewed(&mut rng, 70, skew)).to_string(),
                    2 => ["F", "M", "X"][skewed(&mut rng, 3, skew)].to_string(),
                    _ => format!("c{}", skewed(&mut rng, 8, skew)),
                })
                .collect();
            row.push(["none", "flu", "asthma"][rng.random_range(0..3)].to_string());
            row
        })
        .collect();
    let data = Dataset::from_rows(Schema::new(schema).unwrap(), rows).unwrap();
    (data, QuasiHierarchies::new(hier))
}

fn quasi_columns(data: &Dataset, quasi: &QuasiHierarchies) -> Vec<usize> {
    quasi
        .attributes()
        .iter()
        .map(|a| data.schema().index_of(a).unwrap())
        .collect()
}

fn generalize(row: &[String], cols: &[usize], quasi: &QuasiHierarchies, levels: &[usize]) -> Vec<String> {
    quasi
        .hierarchies()
        .iter()
        .zip(cols)
        .zip(levels)
        .map(|((h, &c), &l)| h.generalize(&row[c], l).unwrap())
        .collect()
}

/// Exhaustive lattice search: every level vector in lexicographic order, first strict
/// improvement wins. Returns the optimum and its precision loss.
pub fn brute_force_ola(data: &Dataset, quasi: &QuasiHierarchies, k: usize, limit: f64) -> Option<(LevelVector, f64)> {
    let cols = quasi_columns(data, quasi);
    let counts: Vec<usize> = quasi.hierarchies().iter().map(|h| h.level_count()).collect();
    let n = data.len();
    let mut levels = vec![0usize; counts.len()];
    let mut best: Option<(LevelVector, f64)> = None;
    loop {
        let mut groups: HashMap<Vec<String>, usize> = HashMap::new();
        for row in data.rows() {
            *groups.entry(generalize(row, &cols, quasi, &levels)).or_default() += 1;
        }
        let suppressed: usize = groups.values().filter(|&&c| c < k).sum();
        let ok = suppressed == 0 || suppressed as f64 / n as f64 <= limit;
        if ok {
            let loss = levels
                .iter()
                .zip(&counts)
                .map(|(&l, &c)| if c > 1 { l as f64 / (c - 1) as f64 } else { 0.0 })
                .sum::<f64>()
                / levels.len() as f64;
            if best.as_ref().is_none_or(|(_, b)| loss < *b - 1e-12) {
                best = Some((LevelVector(levels.clone()), loss));
            }
        }
        // odometer, last attribute fastest
        let mut i = levels.len();
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            levels[i] += 1;
            if levels[i] < counts[i] {
                break;
            }
            levels[i] = 0;
        }
    }
}

/// Straight re-implementation of candidate discovery: link every view class by scanning the
/// population, drop all linked records, regroup the rest. Tuple to (size, risk factor).
pub fn naive_candidates(population: &Dataset, view: &AnonymizedView) -> (usize, BTreeMap<Vec<String>, (usize, f64)>) {
    let quasi = view.quasi();
    let cols = quasi_columns(population, quasi);
    let lv = view.level_vector().levels().to_vec();
    let generalized: Vec<Vec<String>> = population
        .rows()
        .iter()
        .map(|r| generalize(r, &cols, quasi, &lv))
        .collect();

    let mut min_link = usize::MAX;
    for c in view.classes() {
        let links = generalized.iter().filter(|g| **g == c.tuple).count();
        min_link = min_link.min(links);
    }

    let mut residual: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    for g in &generalized {
        if !view.classes().iter().any(|c| c.tuple == *g) {
            *residual.entry(g.clone()).or_default() += 1;
        }
    }
    let k = view.k();
    let out = residual
        .into_iter()
        .filter(|&(_, n)| n >= k && n < min_link)
        .map(|(t, n)| (t, (n, min_link as f64 / n as f64)))
        .collect();
    (min_link, out)
}

/// Population with dense core cells and sparse population-only cells. The sample keeps 10
/// records of every core cell, so it is 5-anonymous as is and links at 50 per class; each
/// sparse cell of size in [5, 50) is then a decoy candidate.
pub struct Constructed {
    pub population: Dataset,
    pub sample: Dataset,
    pub quasi: QuasiHierarchies,
}

pub const CORE_LINKS: usize = 50;

pub fn constructed(seed: u64) -> Constructed {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schema = Schema::new(vec![
        AttributeSchema::new("zip", Role::Quasi, ValueKind::Code { length: 5 }),
        AttributeSchema::new("gender", Role::Quasi, ValueKind::Categorical),
        AttributeSchema::new("diag", Role::Sensitive, ValueKind::Categorical),
    ])
    .unwrap();
    let quasi = QuasiHierarchies::new(vec![
        GeneralizationHierarchy::suffix_mask("zip", 5).unwrap(),
        GeneralizationHierarchy::mapping("gender", [("Female", vec!["Person"]), ("Male", vec!["Person"])]).unwrap(),
    ]);
    let diag = |rng: &mut ChaCha8Rng| ["none", "flu", "asthma", "diabetes"][rng.random_range(0..4)].to_string();

    let mut rows = Vec::new();
    let mut keep = Vec::new();
    let core = rng.random_range(15..25);
    for z in 0..core {
        for g in ["Female", "Male"] {
            for j in 0..CORE_LINKS {
                if j < 10 {
                    keep.push(rows.len());
                }
                rows.push(vec![format!("1{z:04}"), g.to_string(), diag(&mut rng)]);
            }
        }
    }
    let sparse = rng.random_range(20..30);
    for z in 0..sparse {
        let g = if rng.random_bool(0.5) { "Female" } else { "Male" };
        let n = rng.random_range(5..CORE_LINKS);
        for _ in 0..n {
            rows.push(vec![format!("2{z:04}"), g.to_string(), diag(&mut rng)]);
        }
    }
    let population = Dataset::from_rows(schema, rows).unwrap();
    let sample = population.select(&keep);
    Constructed {
        population,
        sample,
        quasi,
    }
}

impl Constructed {
    pub fn view(&self, k: usize) -> AnonymizedView {
        ola_search(Arc::new(self.sample.clone()), &self.quasi, k, 0.0, LossMetric::Precision).unwrap()
    }
}
