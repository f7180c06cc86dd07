use std::cmp::Ordering;
use std::sync::Arc;

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::hierarchy::{LevelVector, QuasiHierarchies};

use super::metrics::{loss_from_sizes, precision_of};
use super::{validate_params, within_limit, AnonymizedView, LossMetric, QuasiIndex};

struct NodeEval {
    satisfies: bool,
    loss: f64,
}

fn evaluate(index: &QuasiIndex, lv: &LevelVector, counts: &[usize], k: usize, limit: f64, metric: LossMetric) -> NodeEval {
    let sizes = index.class_sizes(lv);
    let (retained, small): (Vec<usize>, Vec<usize>) = sizes.into_iter().partition(|&s| s >= k);
    let suppressed: usize = small.iter().sum();
    let satisfies = within_limit(suppressed, index.len(), limit);
    let loss = loss_from_sizes(lv, counts, &retained, suppressed, index.len());
    NodeEval {
        satisfies,
        loss: metric.select(&loss),
    }
}

/// Finds the k-anonymous lattice node (with suppression) of minimal loss; ties go to the
/// lexicographically smallest level vector.
///
/// Nodes are visited bottom-up by height. Nodes of one height are pairwise incomparable, so
/// each layer is evaluated in parallel. With a monotone metric, nodes above an already
/// satisfying node and nodes whose level-only loss exceeds the incumbent are skipped.
pub fn ola_search(
    source: Arc<Dataset>,
    quasi: &QuasiHierarchies,
    k: usize,
    suppression_limit: f64,
    metric: LossMetric,
) -> Result<AnonymizedView> {
    validate_params(k, suppression_limit)?;
    let index = QuasiIndex::build(&source, quasi)?;
    let counts = quasi.level_counts();
    let nodes = LevelVector::lattice(&counts);
    let max_height: usize = counts.iter().map(|c| c - 1).sum();
    let mut layers: Vec<Vec<LevelVector>> = vec![Vec::new(); max_height + 1];
    for n in nodes {
        layers[n.height()].push(n);
    }

    let mut satisfying: Vec<LevelVector> = Vec::new();
    let mut best: Option<(f64, LevelVector)> = None;
    for layer in layers {
        let candidates: Vec<LevelVector> = layer
            .into_iter()
            .filter(|n| {
                if !metric.is_monotone() {
                    return true;
                }
                let dominated = satisfying.iter().any(|s| s.le(n));
                let bounded = best
                    .as_ref()
                    .is_some_and(|(l, _)| precision_of(n, &counts) > *l);
                !dominated && !bounded
            })
            .collect();
        let evals: Vec<NodeEval> = candidates
            .par_iter()
            .map(|n| evaluate(&index, n, &counts, k, suppression_limit, metric))
            .collect();
        for (node, eval) in candidates.into_iter().zip(evals) {
            if !eval.satisfies {
                continue;
            }
            let better = match &best {
                None => true,
                Some((l, lv)) => match eval.loss.partial_cmp(l) {
                    Some(Ordering::Less) => true,
                    Some(Ordering::Equal) => node < *lv,
                    _ => false,
                },
            };
            if better {
                best = Some((eval.loss, node.clone()));
            }
            satisfying.push(node);
        }
    }

    let (_, lv) = best.ok_or(Error::NoSatisfyingNode {
        k,
        suppression_limit,
    })?;
    AnonymizedView::from_index(source, quasi, &index, lv, k, suppression_limit)
}
