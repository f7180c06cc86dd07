//! Repeated sample-anonymize-link runs over (k, suppression) settings, summarized as means
//! and standard deviations.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::anonymize::{ola_search, AnonymizedView, LossMetric};
use crate::collusion::close_to_k_census;
use crate::dataset::Dataset;
use crate::error::Result;
use crate::hierarchy::QuasiHierarchies;
use crate::linkage::Feasibility;
use crate::seed;

/// Uniform sample of `population`, stripped of direct identifiers and optimally anonymized.
pub fn anonymize_sample(
    population: &Dataset,
    quasi: &QuasiHierarchies,
    sample_size: usize,
    sample_seed: u64,
    k: usize,
    suppression_limit: f64,
    metric: LossMetric,
) -> Result<AnonymizedView> {
    let sample = population.sample_uniform(sample_size, sample_seed)?.strip_direct();
    ola_search(Arc::new(sample), quasi, k, suppression_limit, metric)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub min_link: usize,
    /// Candidate classes below minLink.
    pub candidate_classes: usize,
    /// Records in those classes.
    pub candidate_records: usize,
    /// Classes in the anonymized sample.
    pub classes: usize,
    pub close_to_k: usize,
}

pub fn run_metrics(view: &AnonymizedView, population: &Dataset) -> Result<RunMetrics> {
    let f = Feasibility::assess(view, population)?;
    Ok(RunMetrics {
        min_link: f.linkage.min_link,
        candidate_classes: f.candidates.len(),
        candidate_records: f.candidate_records(),
        classes: view.classes().len(),
        close_to_k: close_to_k_census(view.class_sizes(), view.k()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len();
        if n == 0 {
            return Stat { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Stat { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub k: usize,
    pub suppression: f64,
    pub runs: usize,
    pub min_link: Stat,
    pub candidate_classes: Stat,
    pub candidate_records: Stat,
    pub classes: Stat,
    pub close_to_k: Stat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub sample_size: usize,
    pub runs: usize,
    pub k: Vec<usize>,
    pub suppression: Vec<f64>,
    pub seed: u64,
    #[serde(default)]
    pub metric: LossMetric,
}

/// Runs every (k, suppression) pair `runs` times. Run `i` samples with the seed derived for
/// stage `run/<i>`, so every setting sees the same samples.
pub fn report(population: &Dataset, quasi: &QuasiHierarchies, cfg: &ReportConfig) -> Result<Vec<ReportRow>> {
    let mut rows = Vec::new();
    for &k in &cfg.k {
        for &s in &cfg.suppression {
            let runs: Vec<RunMetrics> = (0..cfg.runs)
                .into_par_iter()
                .map(|i| {
                    let sample_seed = seed::derive(cfg.seed, &format!("run/{i}"));
                    let view = anonymize_sample(population, quasi, cfg.sample_size, sample_seed, k, s, cfg.metric)?;
                    run_metrics(&view, population)
                })
                .collect::<Result<_>>()?;
            let col = |f: fn(&RunMetrics) -> usize| Stat::of(&runs.iter().map(|r| f(r) as f64).collect::<Vec<_>>());
            rows.push(ReportRow {
                k,
                suppression: s,
                runs: runs.len(),
                min_link: col(|r| r.min_link),
                candidate_classes: col(|r| r.candidate_classes),
                candidate_records: col(|r| r.candidate_records),
                classes: col(|r| r.classes),
                close_to_k: col(|r| r.close_to_k),
            });
        }
    }
    Ok(rows)
}

/// One line per setting with mean and std columns.
pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(
        "k,suppression,runs,min_link_mean,min_link_std,lt_min_link_eq_mean,lt_min_link_eq_std,\
         lt_min_link_records_mean,lt_min_link_records_std,eq_mean,eq_std,close_to_k_mean,close_to_k_std\n",
    );
    for r in rows {
        out.push_str(&format!("{},{},{}", r.k, r.suppression, r.runs));
        for s in [r.min_link, r.candidate_classes, r.candidate_records, r.classes, r.close_to_k] {
            out.push_str(&format!(",{:.4},{:.4}", s.mean, s.std));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthpop::{generate, PopulationSpec};

    #[test]
    fn stats() {
        let s = Stat::of(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert_eq!(s.mean, 5.0);
        assert!((s.std - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(Stat::of(&[3.0]).std, 0.0);
    }

    #[test]
    fn small_report_is_deterministic() {
        let spec = PopulationSpec::example();
        let pop = generate(4000, 3, &spec).unwrap();
        let q = spec.hierarchies().for_schema(&pop.schema().clone()).unwrap();
        let cfg = ReportConfig {
            sample_size: 400,
            runs: 3,
            k: vec![2, 5],
            suppression: vec![0.0, 0.05],
            seed: 11,
            metric: LossMetric::Precision,
        };
        let a = report(&pop, &q, &cfg).unwrap();
        assert_eq!(a.len(), 4);
        assert_eq!(a, report(&pop, &q, &cfg).unwrap());
        let csv = to_csv(&a);
        assert_eq!(csv.lines().count(), 5);
        assert!(a.iter().all(|r| r.min_link.mean >= r.k as f64));
    }
}
